#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adaptsim/rng.hpp"

namespace adaptsim {

inline constexpr int kFirstYear = 2023;
inline constexpr int kLastYear = 2100;

struct QuantilePoint {
  double p = 0.0;          // non-exceedance probability
  double intensity = 0.0;  // mm/day

  bool operator==(const QuantilePoint&) const = default;
};

// Inverse CDF of daily rainfall intensity for one anchor year, piecewise linear in p.
struct QuantileTable {
  int anchor_year = kFirstYear;
  std::vector<QuantilePoint> points;

  bool operator==(const QuantileTable&) const = default;
};

struct RainfallModel {
  std::string scenario_name;
  std::vector<QuantileTable> tables;  // sorted by anchor_year

  bool operator==(const RainfallModel&) const = default;
};

struct RainEvent {
  int year = kFirstYear;
  double intensity = 0.0;  // mm accumulated over the day

  bool operator==(const RainEvent&) const = default;
};

// Throws ValidationError naming the offending table and rule.
void validate(const RainfallModel& model);

// Interpolation inside one table. `p` must be in [0, 1].
double table_quantile(const QuantileTable& table, double p);

// p-quantile for `year`: linear in p inside each table, linear in year between
// the two bracketing anchors, clamped outside the anchor span.
double quantile(const RainfallModel& model, int year, double p);

// One annual event by inverse-CDF sampling from a single uniform draw.
RainEvent sample_event(const RainfallModel& model, int year, Rng& rng);

RainfallModel rainfall_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RainfallModel& model);

}  // namespace adaptsim
