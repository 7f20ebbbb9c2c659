#include "adaptsim/rainfall.hpp"

#include <algorithm>
#include <cmath>

#include "adaptsim/errors.hpp"

namespace adaptsim {

namespace {

std::string table_name(std::size_t i, const QuantileTable& t) {
  return "rainfall table #" + std::to_string(i) + " (anchor_year " + std::to_string(t.anchor_year) + ")";
}

void check_year(int year) {
  if (year < kFirstYear || year > kLastYear)
    throw DomainError("year " + std::to_string(year) + " outside [" + std::to_string(kFirstYear) + ", " +
                      std::to_string(kLastYear) + "]");
}

void check_probability(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("probability must lie in [0, 1]");
}

}  // namespace

void validate(const RainfallModel& model) {
  if (model.tables.empty()) throw ValidationError("rainfall model has no quantile tables");
  for (std::size_t i = 0; i < model.tables.size(); ++i) {
    const auto& t = model.tables[i];
    const auto name = table_name(i, t);
    if (t.anchor_year < kFirstYear || t.anchor_year > kLastYear)
      throw ValidationError(name + ": anchor year outside [2023, 2100]");
    if (i > 0 && t.anchor_year <= model.tables[i - 1].anchor_year)
      throw ValidationError(name + ": anchor years must be strictly increasing");
    if (t.points.size() < 2) throw ValidationError(name + ": needs at least two points");
    for (std::size_t k = 0; k < t.points.size(); ++k) {
      const auto& pt = t.points[k];
      if (!std::isfinite(pt.p) || pt.p < 0.0 || pt.p > 1.0)
        throw ValidationError(name + ": probability out of [0, 1] at point " + std::to_string(k));
      if (!std::isfinite(pt.intensity) || pt.intensity < 0.0)
        throw ValidationError(name + ": intensity must be finite and >= 0 at point " + std::to_string(k));
      if (k > 0) {
        const auto& prev = t.points[k - 1];
        if (pt.p == prev.p)
          throw ValidationError(name + ": duplicate quantile p=" + std::to_string(pt.p));
        if (pt.p < prev.p) throw ValidationError(name + ": probabilities must be strictly increasing");
        if (pt.intensity < prev.intensity)
          throw ValidationError(name + ": intensities must be non-decreasing in p");
      }
    }
    if (t.points.front().p != 0.0 || t.points.back().p != 1.0)
      throw ValidationError(name + ": points must cover p = 0 and p = 1");
  }
}

double table_quantile(const QuantileTable& table, double p) {
  check_probability(p);
  const auto& pts = table.points;
  // first point with p_k >= p
  auto it = std::lower_bound(pts.begin(), pts.end(), p,
                             [](const QuantilePoint& a, double v) { return a.p < v; });
  if (it == pts.begin()) return it->intensity;
  if (it == pts.end()) return pts.back().intensity;
  if (it->p == p) return it->intensity;
  const auto& lo = *(it - 1);
  const auto& hi = *it;
  const double t = (p - lo.p) / (hi.p - lo.p);
  return lo.intensity + t * (hi.intensity - lo.intensity);
}

double quantile(const RainfallModel& model, int year, double p) {
  check_year(year);
  check_probability(p);
  validate(model);
  const auto& tabs = model.tables;
  if (year <= tabs.front().anchor_year) return table_quantile(tabs.front(), p);
  if (year >= tabs.back().anchor_year) return table_quantile(tabs.back(), p);
  auto hi = std::upper_bound(tabs.begin(), tabs.end(), year,
                             [](int y, const QuantileTable& t) { return y < t.anchor_year; });
  auto lo = hi - 1;
  if (lo->anchor_year == year) return table_quantile(*lo, p);
  const double t = static_cast<double>(year - lo->anchor_year) / (hi->anchor_year - lo->anchor_year);
  const double a = table_quantile(*lo, p);
  const double b = table_quantile(*hi, p);
  return (1.0 - t) * a + t * b;
}

RainEvent sample_event(const RainfallModel& model, int year, Rng& rng) {
  check_year(year);
  const double u = rng.uniform();
  return RainEvent{year, quantile(model, year, u)};
}

RainfallModel rainfall_from_json(const nlohmann::json& j) {
  RainfallModel model;
  try {
    model.scenario_name = j.value("scenario_name", std::string{});
    const auto& tables = j.at("tables");
    if (!tables.is_array()) throw ValidationError("rainfall.tables must be an array");
    for (std::size_t i = 0; i < tables.size(); ++i) {
      const auto& jt = tables[i];
      QuantileTable t;
      t.anchor_year = jt.at("anchor_year").get<int>();
      const auto& pts = jt.at("points");
      for (std::size_t k = 0; k < pts.size(); ++k) {
        const auto& jp = pts[k];
        if (!jp.is_array() || jp.size() != 2)
          throw ValidationError("rainfall.tables[" + std::to_string(i) + "].points[" + std::to_string(k) +
                                "] must be a [p, mm_per_day] pair");
        t.points.push_back({jp[0].get<double>(), jp[1].get<double>()});
      }
      model.tables.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("rainfall section: ") + e.what());
  }
  validate(model);
  return model;
}

nlohmann::json to_json(const RainfallModel& model) {
  nlohmann::json j;
  j["scenario_name"] = model.scenario_name;
  j["tables"] = nlohmann::json::array();
  for (const auto& t : model.tables) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : t.points) pts.push_back({p.p, p.intensity});
    j["tables"].push_back({{"anchor_year", t.anchor_year}, {"points", pts}});
  }
  return j;
}

}  // namespace adaptsim
