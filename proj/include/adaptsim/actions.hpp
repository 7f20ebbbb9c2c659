#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adaptsim/flood.hpp"
#include "adaptsim/transport.hpp"

namespace adaptsim {

enum class MeasureKind : int {
  NoOp = 0,
  RoadDrainageUpgrade,
  PermeablePaving,
  RetentionBasin,
  GreenRoof,
  PumpStation,
  RoadElevation,
  PerimeterBerm,
};
inline constexpr int kMeasureKinds = 8;

const char* to_string(MeasureKind k);
MeasureKind measure_from_string(const std::string& name);  // ValidationError if unknown
inline int index_of(MeasureKind k) { return static_cast<int>(k); }

struct MeasureSpec {
  MeasureKind kind = MeasureKind::NoOp;
  double capital_cost = 0.0;
  double annual_maintenance = 0.0;
  double drainage_bonus = 0.0;    // m, added to both thresholds on the zone's edges
  double retention_factor = 1.0;  // multiplies the zone's effective rain
  double storage_volume = 0.0;    // m^3 per event
  double pump_volume = 0.0;       // m^3 per event
  double elevation_delta = 0.0;   // m
};

// One spec per kind, indexed by MeasureKind.
struct MeasureCatalog {
  std::array<MeasureSpec, kMeasureKinds> specs;
  const MeasureSpec& operator[](MeasureKind k) const { return specs[static_cast<std::size_t>(index_of(k))]; }
};

MeasureCatalog default_catalog();
void validate(const MeasureCatalog& catalog);
// Expects an array with exactly one entry per kind.
MeasureCatalog catalog_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MeasureCatalog& catalog);

class InstalledMeasures {
 public:
  InstalledMeasures() = default;
  explicit InstalledMeasures(int zones) : zones_(zones), bits_(static_cast<std::size_t>(zones) * kMeasureKinds) {}
  int zones() const { return zones_; }
  bool has(int zone, MeasureKind k) const { return bits_[slot(zone, k)] != 0; }
  void set(int zone, MeasureKind k) { bits_[slot(zone, k)] = 1; }
  int count() const;
  bool operator==(const InstalledMeasures&) const = default;

 private:
  std::size_t slot(int zone, MeasureKind k) const {
    return static_cast<std::size_t>(zone) * kMeasureKinds + static_cast<std::size_t>(index_of(k));
  }
  int zones_ = 0;
  std::vector<unsigned char> bits_;
};

// Immutable terrain and network that measures act on.
struct City {
  DemGrid dem;
  bool open_border = false;
  TransportGraph graph;
  std::vector<Zone> zones;
  std::vector<Poi> pois;
  std::vector<int> zone_of_cell;  // -1 outside every zone
};
City make_city(DemGrid dem, bool open_border, TransportGraph graph, std::vector<Zone> zones, std::vector<Poi> pois);

// Everything the flood and transport steps need, derived from the installs.
struct EnvParams {
  std::vector<double> rain_multiplier;  // per zone
  std::vector<double> drainage_bonus;   // per edge
  GridD storage;                        // m^3 per cell
  GridD pumped;                         // m^3 per cell
  DemGrid working_dem;
  bool elevation_changed = false;
};

// Cells raised by RoadElevation (the footprints of the zone's edges) and by
// PerimeterBerm (zone cells with a 4-neighbour outside the zone).
std::vector<Cell> zone_road_cells(const City& city, int zone);
std::vector<Cell> zone_boundary_cells(const City& city, int zone);

EnvParams derive_params(const City& city, const MeasureCatalog& catalog, const InstalledMeasures& installed);

// Installs (zone, kind) and returns the recomputed bundle. StateError on a
// duplicate install or NoOp, DomainError on an unknown zone.
EnvParams apply_measure(InstalledMeasures& installed, int zone, MeasureKind kind, const City& city,
                        const MeasureCatalog& catalog);

struct StepCosts {
  double capital = 0.0;
  double maintenance = 0.0;
  std::vector<double> capital_by_zone;
  std::vector<double> maintenance_by_zone;
};

// Costs of a step in which `kind` is installed in `zone` (NoOp: nothing new).
// `before` is the install state at the start of the step.
StepCosts step_costs(const InstalledMeasures& before, int zone, MeasureKind kind, const MeasureCatalog& catalog);

}  // namespace adaptsim
