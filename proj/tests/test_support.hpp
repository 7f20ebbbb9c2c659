#pragma once

#include <memory>
#include <string>

#include "adaptsim/raster.hpp"
#include "adaptsim/rng.hpp"
#include "adaptsim/scenario.hpp"
#include "adaptsim/transport.hpp"

namespace testsupport {

// Independent uniform elevations in [0, relief).
inline adaptsim::DemGrid random_dem(adaptsim::Rng& rng, int nrows, int ncols, double relief = 10.0,
                                    double cellsize = 1.0) {
  adaptsim::GridD z(nrows, ncols);
  for (int i = 0; i < nrows * ncols; ++i) z(i) = relief * rng.uniform();
  return adaptsim::make_dem(z, cellsize);
}

// Smooth-ish terrain: a tilted bowl plus noise, so lakes span many cells.
inline adaptsim::DemGrid random_bowl_dem(adaptsim::Rng& rng, int nrows, int ncols, double noise = 1.0) {
  adaptsim::GridD z(nrows, ncols);
  const double cr = 0.5 * (nrows - 1), cc = 0.5 * (ncols - 1);
  const double tilt = rng.uniform() - 0.5;
  for (int r = 0; r < nrows; ++r)
    for (int c = 0; c < ncols; ++c) {
      const double d2 = (r - cr) * (r - cr) + (c - cc) * (c - cc);
      z(r, c) = 0.05 * d2 + tilt * c + noise * rng.uniform();
    }
  return adaptsim::make_dem(z, 1.0);
}

inline adaptsim::GridD random_rain(adaptsim::Rng& rng, int nrows, int ncols, double max_m) {
  adaptsim::GridD rain(nrows, ncols);
  for (int i = 0; i < nrows * ncols; ++i) rain(i) = max_m * rng.uniform();
  return rain;
}

// Random graph with integer travel times, so every path sum is exact.
inline adaptsim::TransportGraph random_graph(adaptsim::Rng& rng, int nodes, int edges, int max_time = 100) {
  adaptsim::TransportGraph g;
  for (int i = 0; i < nodes; ++i) g.add_node({"n" + std::to_string(i), 0.0, 0.0, std::nullopt});
  for (int e = 0; e < edges; ++e) {
    const int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(nodes)));
    const int b = static_cast<int>(rng.below(static_cast<std::uint64_t>(nodes)));
    const double t = 1.0 + static_cast<double>(rng.below(static_cast<std::uint64_t>(max_time)));
    g.add_edge("e" + std::to_string(e), "n" + std::to_string(a), "n" + std::to_string(b), t, rng.bernoulli(0.6), {});
  }
  return g;
}

inline std::string scenario_path(const std::string& file) {
  return std::string(ADAPTSIM_SOURCE_DIR) + "/scenarios/toy_city/" + file;
}

inline const adaptsim::Scenario& toy_city() {
  static const auto s = adaptsim::load_scenario(scenario_path("config.json"));
  return s;
}

inline const adaptsim::Scenario& toy_city_deterministic() {
  static const auto s = adaptsim::load_scenario(scenario_path("deterministic.json"));
  return s;
}

}  // namespace testsupport
