#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "adaptsim/raster.hpp"

namespace adaptsim {

// Per-cell flow code: 0..7 is the D8 direction (N, NE, E, SE, S, SW, W, NW).
enum FlowCode : std::int8_t {
  kFlowPit = -1,
  kFlowOutlet = -2,  // drains across an open domain border
  kFlowNone = -3,    // nodata
};

struct FlowField {
  GridGeometry geo;
  bool open_border = false;
  std::vector<std::int8_t> code;

  // Downstream cell index, or -1 for pits, outlets and nodata.
  int receiver(int idx) const {
    const int d = code[static_cast<std::size_t>(idx)];
    if (d < 0) return -1;
    return geo.index(idx / geo.ncols + kD8Rows[d], idx % geo.ncols + kD8Cols[d]);
  }
};

// D8 steepest descent (drop / distance); ties keep the first direction in scan order.
FlowField flow_directions(const DemGrid& dem, bool open_border = false);

// Label of every cell: index of the pit or outlet cell its flow path ends at; -1 on nodata.
std::vector<int> delineate_watersheds(const FlowField& flow);

inline constexpr int kSpillToOutlet = -1;
inline constexpr int kSpillNone = -2;

// A leaf depression: the catchment of one pit.
struct Depression {
  int id = 0;
  int pit = 0;                 // cell index
  std::vector<int> cells;      // member cell indices, ascending
  double spill_elevation = std::numeric_limits<double>::infinity();
  int spill_to = kSpillNone;   // depression id, kSpillToOutlet, or kSpillNone (never spills)
};

// Per-cell forcing for one event.
struct FloodForcing {
  GridD rain;     // effective rain depth, m
  GridD storage;  // extra storage capacity located in the cell, m^3
  GridD pumped;   // volume pumped away from the cell's depression, m^3

  static FloodForcing uniform(const GridGeometry& geo, double rain_m);
};

/// Static fill-spill-merge flood model of one terrain.
///
/// Construction analyses the terrain once: flow directions, watersheds, and a
/// merge tree of depressions built from catchment saddles in increasing
/// elevation order (ties by high cell index, then by the low cell's rank in
/// the high cell's steepest-descent order). `simulate` then routes each
/// cell's runoff to its depression, absorbs storage and pumped volumes, and
/// fills depressions from the pit upward. A full depression passes its excess
/// to the depression across its saddle; two full siblings pond together above
/// the saddle. With an open border, water reaching the border leaves the domain.
class FloodModel {
 public:
  FloodModel(const DemGrid& dem, bool open_border);

  DepthRaster simulate(const FloodForcing& forcing) const;

  const DemGrid& dem() const { return dem_; }
  const FlowField& flow() const { return flow_; }
  const std::vector<int>& watersheds() const { return labels_; }
  const std::vector<Depression>& depressions() const { return depressions_; }
  // Depression id of each cell; -1 for nodata and for cells draining to an outlet.
  const std::vector<int>& depression_of_cell() const { return leaf_of_cell_; }

 private:
  struct Node {
    int parent = -1;
    int child[2] = {-1, -1};
    int entry_leaf = -1;  // leaf receiving this node's overflow
    double spill = std::numeric_limits<double>::infinity();
    double formation = -std::numeric_limits<double>::infinity();
    double cap_above = 0.0;  // volume between formation and spill levels
    bool ocean = false;
  };
  struct FillState;

  double fill(FillState& st, int node, double amount, int entry_leaf) const;
  int child_toward(int node, int leaf) const;
  void collect_cells(int node, std::vector<int>& out) const;
  double capacity(int node, double level) const;
  void assign_depths(const FillState& st, int node, GridD& depth) const;

  DemGrid dem_;
  FlowField flow_;
  std::vector<int> labels_;
  std::vector<int> leaf_of_cell_;
  std::vector<Depression> depressions_;
  std::vector<Node> nodes_;  // leaves first, then the ocean leaf, then merges
  std::vector<std::vector<int>> leaf_cells_;
  int ocean_ = -1;
};

// Convenience wrapper over FloodModel. Throws DomainError on negative inputs.
DepthRaster simulate_flood(const DemGrid& dem, const GridD& effective_rain, const GridD& extra_storage,
                           const GridD& pumped, bool open_border);

// Maximum depth over a set of cells; 0 for an empty set.
double max_depth_over(const DepthRaster& depth, std::span<const Cell> cells);

}  // namespace adaptsim
