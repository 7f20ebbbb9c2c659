#include "adaptsim/actions.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "adaptsim/errors.hpp"

namespace adaptsim {

namespace {

constexpr const char* kNames[kMeasureKinds] = {"NoOp",       "RoadDrainageUpgrade", "PermeablePaving",
                                               "RetentionBasin", "GreenRoof",       "PumpStation",
                                               "RoadElevation",  "PerimeterBerm"};

double number(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ValidationError(std::string("measure field '") + key + "' must be a number");
  return j[key].get<double>();
}

void spread(GridD& grid, const std::vector<Cell>& cells, double volume) {
  if (cells.empty() || volume == 0.0) return;
  const double each = volume / static_cast<double>(cells.size());
  for (const auto& c : cells) grid(c.row, c.col) += each;
}

}  // namespace

const char* to_string(MeasureKind k) { return kNames[index_of(k)]; }

MeasureKind measure_from_string(const std::string& name) {
  for (int i = 0; i < kMeasureKinds; ++i)
    if (name == kNames[i]) return static_cast<MeasureKind>(i);
  throw ValidationError("unknown measure kind '" + name + "'");
}

MeasureCatalog default_catalog() {
  MeasureCatalog c;
  for (int i = 0; i < kMeasureKinds; ++i) c.specs[static_cast<std::size_t>(i)].kind = static_cast<MeasureKind>(i);
  auto& s = c.specs;
  s[1].capital_cost = 60, s[1].annual_maintenance = 2, s[1].drainage_bonus = 0.3;
  s[2].capital_cost = 80, s[2].annual_maintenance = 3, s[2].retention_factor = 0.7;
  s[3].capital_cost = 100, s[3].annual_maintenance = 5, s[3].storage_volume = 500;
  s[4].capital_cost = 70, s[4].annual_maintenance = 2, s[4].retention_factor = 0.85;
  s[5].capital_cost = 120, s[5].annual_maintenance = 8, s[5].pump_volume = 400;
  s[6].capital_cost = 90, s[6].annual_maintenance = 1, s[6].elevation_delta = 0.5;
  s[7].capital_cost = 110, s[7].annual_maintenance = 2, s[7].elevation_delta = 0.5;
  return c;
}

void validate(const MeasureCatalog& catalog) {
  for (int i = 0; i < kMeasureKinds; ++i) {
    const auto& m = catalog.specs[static_cast<std::size_t>(i)];
    const std::string name = kNames[i];
    if (index_of(m.kind) != i) throw ValidationError("catalog slot " + name + " holds the wrong kind");
    for (double v : {m.capital_cost, m.annual_maintenance, m.drainage_bonus, m.storage_volume, m.pump_volume,
                     m.elevation_delta})
      if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError(name + ": costs and effects must be finite and >= 0");
    if (!(m.retention_factor > 0.0 && m.retention_factor <= 1.0))
      throw ValidationError(name + ": retention_factor must be in (0, 1]");
  }
  const auto& noop = catalog[MeasureKind::NoOp];
  if (noop.capital_cost != 0 || noop.annual_maintenance != 0 || noop.drainage_bonus != 0 ||
      noop.retention_factor != 1 || noop.storage_volume != 0 || noop.pump_volume != 0 || noop.elevation_delta != 0)
    throw ValidationError("NoOp must have zero costs and no effects");
}

MeasureCatalog catalog_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ValidationError("actions must be an array of measures");
  MeasureCatalog c;
  std::set<int> seen;
  for (const auto& e : j) {
    if (!e.is_object() || !e.contains("kind") || !e["kind"].is_string())
      throw ValidationError("each action entry needs a string 'kind'");
    const auto kind = measure_from_string(e["kind"].get<std::string>());
    if (!seen.insert(index_of(kind)).second)
      throw ValidationError(std::string("measure kind '") + to_string(kind) + "' listed twice");
    MeasureSpec m;
    m.kind = kind;
    m.capital_cost = number(e, "capital_cost", 0.0);
    m.annual_maintenance = number(e, "annual_maintenance", 0.0);
    m.drainage_bonus = number(e, "drainage_bonus", 0.0);
    m.retention_factor = number(e, "retention_factor", 1.0);
    m.storage_volume = number(e, "storage_volume", 0.0);
    m.pump_volume = number(e, "pump_volume", 0.0);
    m.elevation_delta = number(e, "elevation_delta", 0.0);
    c.specs[static_cast<std::size_t>(index_of(kind))] = m;
  }
  for (int i = 0; i < kMeasureKinds; ++i)
    if (!seen.count(i)) throw ValidationError(std::string("action catalog is missing measure kind '") + kNames[i] + "'");
  validate(c);
  return c;
}

nlohmann::json to_json(const MeasureCatalog& catalog) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& m : catalog.specs)
    arr.push_back({{"kind", to_string(m.kind)},
                   {"capital_cost", m.capital_cost},
                   {"annual_maintenance", m.annual_maintenance},
                   {"drainage_bonus", m.drainage_bonus},
                   {"retention_factor", m.retention_factor},
                   {"storage_volume", m.storage_volume},
                   {"pump_volume", m.pump_volume},
                   {"elevation_delta", m.elevation_delta}});
  return arr;
}

int InstalledMeasures::count() const {
  return static_cast<int>(std::count(bits_.begin(), bits_.end(), 1));
}

City make_city(DemGrid dem, bool open_border, TransportGraph graph, std::vector<Zone> zones, std::vector<Poi> pois) {
  validate(dem);
  graph.validate(dem.geo);
  validate_zones(zones, graph, dem);
  validate_pois(pois, graph);
  City c{std::move(dem), open_border, std::move(graph), std::move(zones), std::move(pois), {}};
  c.zone_of_cell.assign(static_cast<std::size_t>(c.dem.size()), -1);
  for (std::size_t z = 0; z < c.zones.size(); ++z)
    for (const auto& cell : c.zones[z].cells) c.zone_of_cell[static_cast<std::size_t>(c.dem.geo.index(cell))] = static_cast<int>(z);
  return c;
}

std::vector<Cell> zone_road_cells(const City& city, int zone) {
  std::set<Cell> cells;
  for (int e : city.zones.at(static_cast<std::size_t>(zone)).edges)
    for (const auto& c : city.graph.edge(e).footprint) cells.insert(c);
  return {cells.begin(), cells.end()};
}

std::vector<Cell> zone_boundary_cells(const City& city, int zone) {
  static constexpr int dr[4] = {-1, 0, 1, 0}, dc[4] = {0, 1, 0, -1};
  const auto& geo = city.dem.geo;
  std::vector<Cell> out;
  for (const auto& c : city.zones.at(static_cast<std::size_t>(zone)).cells) {
    for (int k = 0; k < 4; ++k) {
      const int r = c.row + dr[k], col = c.col + dc[k];
      if (!geo.contains(r, col) || city.zone_of_cell[static_cast<std::size_t>(geo.index(r, col))] != zone) {
        out.push_back(c);
        break;
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

EnvParams derive_params(const City& city, const MeasureCatalog& catalog, const InstalledMeasures& installed) {
  const int nz = static_cast<int>(city.zones.size());
  if (installed.zones() != nz) throw DomainError("install matrix does not match the zone count");
  EnvParams p;
  p.rain_multiplier.assign(static_cast<std::size_t>(nz), 1.0);
  p.drainage_bonus.assign(city.graph.edges().size(), 0.0);
  p.storage = GridD::Zero(city.dem.geo.nrows, city.dem.geo.ncols);
  p.pumped = p.storage;
  p.working_dem = city.dem;
  for (int z = 0; z < nz; ++z) {
    const auto& zone = city.zones[static_cast<std::size_t>(z)];
    for (int k = 1; k < kMeasureKinds; ++k) {
      const auto kind = static_cast<MeasureKind>(k);
      if (!installed.has(z, kind)) continue;
      const auto& m = catalog[kind];
      p.rain_multiplier[static_cast<std::size_t>(z)] *= m.retention_factor;
      for (int e : zone.edges) p.drainage_bonus[static_cast<std::size_t>(e)] += m.drainage_bonus;
      spread(p.storage, zone.cells, m.storage_volume);
      spread(p.pumped, zone.cells, m.pump_volume);
      if (m.elevation_delta > 0.0) {
        const auto cells = kind == MeasureKind::PerimeterBerm ? zone_boundary_cells(city, z)
                           : kind == MeasureKind::RoadElevation ? zone_road_cells(city, z)
                                                                : std::vector<Cell>{};
        for (const auto& c : cells) {
          p.working_dem.elevation(c.row, c.col) += m.elevation_delta;
          p.elevation_changed = true;
        }
      }
    }
  }
  return p;
}

EnvParams apply_measure(InstalledMeasures& installed, int zone, MeasureKind kind, const City& city,
                        const MeasureCatalog& catalog) {
  if (zone < 0 || zone >= installed.zones()) throw DomainError("unknown zone index " + std::to_string(zone));
  if (kind == MeasureKind::NoOp) throw StateError("NoOp is not an installable measure");
  if (installed.has(zone, kind))
    throw StateError(std::string(to_string(kind)) + " is already installed in zone '" +
                     city.zones[static_cast<std::size_t>(zone)].id + "'");
  installed.set(zone, kind);
  return derive_params(city, catalog, installed);
}

StepCosts step_costs(const InstalledMeasures& before, int zone, MeasureKind kind, const MeasureCatalog& catalog) {
  const int nz = before.zones();
  StepCosts c;
  c.capital_by_zone.assign(static_cast<std::size_t>(nz), 0.0);
  c.maintenance_by_zone.assign(static_cast<std::size_t>(nz), 0.0);
  if (kind != MeasureKind::NoOp) {
    if (zone < 0 || zone >= nz) throw DomainError("unknown zone index " + std::to_string(zone));
    c.capital_by_zone[static_cast<std::size_t>(zone)] = catalog[kind].capital_cost;
  }
  for (int z = 0; z < nz; ++z)
    for (int k = 1; k < kMeasureKinds; ++k) {
      const auto mk = static_cast<MeasureKind>(k);
      const bool on = before.has(z, mk) || (z == zone && mk == kind);
      if (on) c.maintenance_by_zone[static_cast<std::size_t>(z)] += catalog[mk].annual_maintenance;
    }
  for (int z = 0; z < nz; ++z) {
    c.capital += c.capital_by_zone[static_cast<std::size_t>(z)];
    c.maintenance += c.maintenance_by_zone[static_cast<std::size_t>(z)];
  }
  return c;
}

}  // namespace adaptsim
