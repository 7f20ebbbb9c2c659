#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace adaptsim {

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

// Strict number parsing; throws ParseError with file/line context on failure.
double parse_double(std::string_view text, const std::string& file, int line);
long long parse_int(std::string_view text, const std::string& file, int line);

std::vector<std::string> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

std::string read_file(const std::string& path);
// Writes atomically enough for our purposes: whole content, trailing newline kept as given.
void write_file(const std::string& path, const std::string& content);

// Rows of a comma separated file with header. Blank lines and lines starting
// with '#' are skipped. `line` is the 1-based line number in the file.
struct CsvRow {
  int line = 0;
  std::vector<std::string> fields;
};

struct CsvTable {
  std::string file;
  std::vector<std::string> header;
  std::vector<CsvRow> rows;

  // Index of a header column; throws ParseError if missing.
  std::size_t column(std::string_view name) const;
};

CsvTable parse_csv(const std::string& content, const std::string& file);
CsvTable read_csv(const std::string& path);

}  // namespace adaptsim
