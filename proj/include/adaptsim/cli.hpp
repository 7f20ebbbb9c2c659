#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace adaptsim {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitRuntime = 4;

// Runs one subcommand. `args` excludes the program name.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace adaptsim
