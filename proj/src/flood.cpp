#include "adaptsim/flood.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "adaptsim/errors.hpp"

namespace adaptsim {

FloodForcing FloodForcing::uniform(const GridGeometry& geo, double rain_m) {
  FloodForcing f;
  f.rain = GridD::Constant(geo.nrows, geo.ncols, rain_m);
  f.storage = GridD::Zero(geo.nrows, geo.ncols);
  f.pumped = GridD::Zero(geo.nrows, geo.ncols);
  return f;
}

FlowField flow_directions(const DemGrid& dem, bool open_border) {
  validate(dem);
  const auto& g = dem.geo;
  FlowField flow;
  flow.geo = g;
  flow.open_border = open_border;
  flow.code.assign(static_cast<std::size_t>(g.size()), kFlowNone);
  bool any_valid = false;
  for (int r = 0; r < g.nrows; ++r) {
    for (int c = 0; c < g.ncols; ++c) {
      const int i = g.index(r, c);
      if (dem.nodata(i)) continue;
      any_valid = true;
      int best = -1;
      double best_slope = 0.0;
      for (int d = 0; d < 8; ++d) {
        const int nr = r + kD8Rows[d], nc = c + kD8Cols[d];
        if (!g.contains(nr, nc)) continue;
        const int n = g.index(nr, nc);
        if (dem.nodata(n)) continue;
        const double drop = dem.z(i) - dem.z(n);
        if (drop <= 0.0) continue;
        const double slope = drop / kD8Dist[d];
        if (slope > best_slope) {
          best_slope = slope;
          best = d;
        }
      }
      if (best >= 0)
        flow.code[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(best);
      else
        flow.code[static_cast<std::size_t>(i)] = (open_border && g.on_border(i)) ? kFlowOutlet : kFlowPit;
    }
  }
  if (!any_valid) throw ValidationError("DEM has no valid (non-nodata) cells");
  return flow;
}

std::vector<int> delineate_watersheds(const FlowField& flow) {
  const int n = flow.geo.size();
  std::vector<int> label(static_cast<std::size_t>(n), -1);
  std::vector<std::uint8_t> state(static_cast<std::size_t>(n), 0);  // 0 new, 1 on path, 2 done
  std::vector<int> path;
  for (int start = 0; start < n; ++start) {
    if (flow.code[start] == kFlowNone || state[start] == 2) continue;
    path.clear();
    int cur = start;
    int terminal = -1;
    while (true) {
      if (state[cur] == 2) {
        terminal = label[cur];
        break;
      }
      if (state[cur] == 1) throw InvariantError("flow field contains a cycle through cell " + std::to_string(cur));
      state[cur] = 1;
      path.push_back(cur);
      const int next = flow.receiver(cur);
      if (next < 0) {
        terminal = cur;
        break;
      }
      if (flow.code[next] == kFlowNone) throw InvariantError("flow points into a nodata cell");
      cur = next;
    }
    for (int c : path) {
      label[c] = terminal;
      state[c] = 2;
    }
  }
  return label;
}

namespace {

// Rank of neighbour `low` in the steepest-descent preference order of `high`:
// slope descending, then scan order. The virtual outside neighbour ranks last.
int preference_rank(const DemGrid& dem, int high, int low) {
  if (low < 0) return 8;
  const auto& g = dem.geo;
  const int r = high / g.ncols, c = high % g.ncols;
  struct Cand {
    double slope;
    int dir;
    int cell;
  };
  Cand cands[8];
  int m = 0;
  for (int d = 0; d < 8; ++d) {
    const int nr = r + kD8Rows[d], nc = c + kD8Cols[d];
    if (!g.contains(nr, nc)) continue;
    const int n = g.index(nr, nc);
    if (dem.nodata(n)) continue;
    cands[m++] = {(dem.z(high) - dem.z(n)) / kD8Dist[d], d, n};
  }
  std::sort(cands, cands + m, [](const Cand& a, const Cand& b) {
    if (a.slope != b.slope) return a.slope > b.slope;
    return a.dir < b.dir;
  });
  for (int k = 0; k < m; ++k)
    if (cands[k].cell == low) return k;
  return 8;
}

struct SaddleEdge {
  double weight;
  int high;
  int rank;
  int low;  // -1 is the outside of an open border
};

struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(int n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
};

// Water surface over `cells` holding `volume` m^3, filled from the lowest cell up.
void pond(const DemGrid& dem, std::vector<int> cells, double volume, GridD& depth) {
  if (volume <= 0.0 || cells.empty()) return;
  std::sort(cells.begin(), cells.end(), [&](int a, int b) {
    if (dem.z(a) != dem.z(b)) return dem.z(a) < dem.z(b);
    return a < b;
  });
  const double a = volume / dem.geo.cell_area();
  double sum_z = 0.0;
  double level = 0.0;
  std::size_t k = 0;
  while (k < cells.size()) {
    sum_z += dem.z(cells[k]);
    ++k;
    level = (a + sum_z) / static_cast<double>(k);
    if (k == cells.size() || level <= dem.z(cells[k])) break;
  }
  for (std::size_t i = 0; i < k; ++i) depth(cells[i]) = std::max(0.0, level - dem.z(cells[i]));
}

}  // namespace

struct FloodModel::FillState {
  std::vector<double> stored;     // per node: leaf water or pooled water above formation
  std::vector<double> absorbed;   // per leaf
  std::vector<double> absorb_cap; // per leaf
  std::vector<char> merged;       // per internal node: both children full
  double outflow = 0.0;
};

FloodModel::FloodModel(const DemGrid& dem, bool open_border) : dem_(dem) {
  flow_ = flow_directions(dem_, open_border);
  labels_ = delineate_watersheds(flow_);
  const auto& g = dem_.geo;
  const int n = g.size();

  // Leaves: one per pit, plus the ocean for an open border.
  std::vector<int> leaf_of_pit(static_cast<std::size_t>(n), -1);
  int leaves = 0;
  for (int i = 0; i < n; ++i)
    if (flow_.code[i] == kFlowPit) leaf_of_pit[i] = leaves++;
  if (open_border) ocean_ = leaves;
  const int leaf_count = leaves + (open_border ? 1 : 0);
  nodes_.assign(static_cast<std::size_t>(leaf_count), Node{});
  leaf_cells_.assign(static_cast<std::size_t>(leaf_count), {});

  std::vector<int> node_of_cell(static_cast<std::size_t>(n), -1);
  leaf_of_cell_.assign(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    if (labels_[i] < 0) continue;
    const int t = labels_[i];
    const int leaf = flow_.code[t] == kFlowPit ? leaf_of_pit[t] : ocean_;
    node_of_cell[i] = leaf;
    leaf_cells_[leaf].push_back(i);
    if (leaf != ocean_) leaf_of_cell_[i] = leaf;
  }
  if (ocean_ >= 0) nodes_[ocean_].ocean = true;

  // Saddles between neighbouring catchments.
  std::vector<SaddleEdge> edges;
  constexpr int kForward[4] = {2, 3, 4, 5};  // E, SE, S, SW: each pair once
  for (int i = 0; i < n; ++i) {
    if (node_of_cell[i] < 0) continue;
    const int r = i / g.ncols, c = i % g.ncols;
    for (int d : kForward) {
      const int nr = r + kD8Rows[d], nc = c + kD8Cols[d];
      if (!g.contains(nr, nc)) continue;
      const int j = g.index(nr, nc);
      if (node_of_cell[j] < 0 || node_of_cell[j] == node_of_cell[i]) continue;
      const double zi = dem_.z(i), zj = dem_.z(j);
      int high, low;
      if (zi > zj || (zi == zj && i < j)) {
        high = i;
        low = j;
      } else {
        high = j;
        low = i;
      }
      edges.push_back({std::max(zi, zj), high, preference_rank(dem_, high, low), low});
    }
    if (open_border && g.on_border(i) && node_of_cell[i] != ocean_)
      edges.push_back({dem_.z(i), i, 8, -1});
  }
  std::sort(edges.begin(), edges.end(), [](const SaddleEdge& a, const SaddleEdge& b) {
    if (a.weight != b.weight) return a.weight < b.weight;
    if (a.high != b.high) return a.high < b.high;
    return a.rank < b.rank;
  });

  DisjointSet sets(leaf_count);
  std::vector<int> cluster_node(static_cast<std::size_t>(leaf_count));
  std::iota(cluster_node.begin(), cluster_node.end(), 0);
  for (const auto& e : edges) {
    const int leaf_a = node_of_cell[e.high];
    const int leaf_b = e.low < 0 ? ocean_ : node_of_cell[e.low];
    const int set_a = sets.find(leaf_a), set_b = sets.find(leaf_b);
    if (set_a == set_b) continue;
    const int x = cluster_node[set_a], y = cluster_node[set_b];
    const int id = static_cast<int>(nodes_.size());
    Node merged;
    merged.child[0] = x;
    merged.child[1] = y;
    merged.formation = e.weight;
    merged.ocean = nodes_[x].ocean || nodes_[y].ocean;
    nodes_.push_back(merged);
    nodes_[x].parent = id;
    nodes_[y].parent = id;
    nodes_[x].spill = e.weight;
    nodes_[y].spill = e.weight;
    nodes_[x].entry_leaf = leaf_b;
    nodes_[y].entry_leaf = leaf_a;
    sets.parent[set_b] = set_a;
    cluster_node[set_a] = id;
  }

  for (int id = 0; id < static_cast<int>(nodes_.size()); ++id) {
    auto& nd = nodes_[id];
    if (nd.ocean || std::isinf(nd.spill)) {
      nd.cap_above = std::numeric_limits<double>::infinity();
      continue;
    }
    nd.cap_above = capacity(id, nd.spill);
    if (nd.child[0] >= 0) nd.cap_above = std::max(0.0, nd.cap_above - capacity(id, nd.formation));
  }

  for (int leaf = 0; leaf < leaves; ++leaf) {
    Depression dep;
    dep.id = leaf;
    dep.cells = leaf_cells_[leaf];
    dep.pit = labels_[dep.cells.front()];
    dep.spill_elevation = nodes_[leaf].spill;
    const int entry = nodes_[leaf].entry_leaf;
    dep.spill_to = entry < 0 ? kSpillNone : (entry == ocean_ ? kSpillToOutlet : entry);
    depressions_.push_back(std::move(dep));
  }
}

void FloodModel::collect_cells(int node, std::vector<int>& out) const {
  const auto& nd = nodes_[node];
  if (nd.child[0] < 0) {
    out.insert(out.end(), leaf_cells_[node].begin(), leaf_cells_[node].end());
    return;
  }
  collect_cells(nd.child[0], out);
  collect_cells(nd.child[1], out);
}

double FloodModel::capacity(int node, double level) const {
  std::vector<int> cells;
  collect_cells(node, cells);
  double sum = 0.0;
  for (int c : cells)
    if (dem_.z(c) < level) sum += level - dem_.z(c);
  return sum * dem_.geo.cell_area();
}

int FloodModel::child_toward(int node, int leaf) const {
  int cur = leaf;
  while (nodes_[cur].parent != node) {
    cur = nodes_[cur].parent;
    if (cur < 0) throw InvariantError("entry leaf is not below the node it enters");
  }
  return cur;
}

double FloodModel::fill(FillState& st, int node, double amount, int entry_leaf) const {
  if (amount <= 0.0) return 0.0;
  const auto& nd = nodes_[node];
  if (nd.child[0] < 0) {
    if (nd.ocean) {
      st.outflow += amount;
      return 0.0;
    }
    const double take = std::min(amount, st.absorb_cap[node] - st.absorbed[node]);
    st.absorbed[node] += take;
    amount -= take;
    const double room = nd.cap_above - st.stored[node];
    if (amount <= room) {
      st.stored[node] += amount;
      return 0.0;
    }
    st.stored[node] = nd.cap_above;
    return amount - room;
  }
  if (!st.merged[node]) {
    const int first = child_toward(node, entry_leaf);
    const int second = nd.child[0] == first ? nd.child[1] : nd.child[0];
    double rest = fill(st, first, amount, entry_leaf);
    if (rest <= 0.0) return 0.0;
    rest = fill(st, second, rest, nodes_[first].entry_leaf);
    if (rest <= 0.0) return 0.0;
    st.merged[node] = 1;
    amount = rest;
  }
  const double room = nd.cap_above - st.stored[node];
  if (amount <= room) {
    st.stored[node] += amount;
    return 0.0;
  }
  st.stored[node] = nd.cap_above;
  return amount - room;
}

void FloodModel::assign_depths(const FillState& st, int node, GridD& depth) const {
  const auto& nd = nodes_[node];
  if (nd.ocean && nd.child[0] < 0) return;
  if (nd.child[0] < 0) {
    pond(dem_, leaf_cells_[node], st.stored[node], depth);
    return;
  }
  if (st.merged[node]) {
    // Total water held below this node: sum over the subtree.
    double volume = 0.0;
    std::vector<int> stack{node};
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      volume += st.stored[cur];
      if (nodes_[cur].child[0] >= 0) {
        stack.push_back(nodes_[cur].child[0]);
        stack.push_back(nodes_[cur].child[1]);
      }
    }
    std::vector<int> cells;
    collect_cells(node, cells);
    pond(dem_, std::move(cells), volume, depth);
    return;
  }
  assign_depths(st, nd.child[0], depth);
  assign_depths(st, nd.child[1], depth);
}

DepthRaster FloodModel::simulate(const FloodForcing& f) const {
  const auto& g = dem_.geo;
  auto check = [&](const GridD& grid, const char* name) {
    if (grid.rows() != g.nrows || grid.cols() != g.ncols)
      throw DomainError(std::string(name) + " raster shape does not match the DEM");
    for (int i = 0; i < g.size(); ++i)
      if (!(grid(i) >= 0.0) || !std::isfinite(grid(i)))
        throw DomainError(std::string(name) + " must be finite and >= 0 (cell " + std::to_string(i) + ")");
  };
  check(f.rain, "effective rain");
  check(f.storage, "extra storage");
  check(f.pumped, "pumped volume");

  const std::size_t leaf_count = leaf_cells_.size();
  FillState st;
  st.stored.assign(nodes_.size(), 0.0);
  st.merged.assign(nodes_.size(), 0);
  st.absorbed.assign(leaf_count, 0.0);
  st.absorb_cap.assign(leaf_count, 0.0);
  std::vector<double> runoff(leaf_count, 0.0);
  const double area = g.cell_area();
  for (std::size_t leaf = 0; leaf < leaf_count; ++leaf) {
    for (int c : leaf_cells_[leaf]) {
      runoff[leaf] += f.rain(c) * area;
      st.absorb_cap[leaf] += f.storage(c) + f.pumped(c);
    }
  }
  for (std::size_t leaf = 0; leaf < leaf_count; ++leaf) {
    int root = static_cast<int>(leaf);
    while (nodes_[root].parent >= 0) root = nodes_[root].parent;
    const double left = fill(st, root, runoff[leaf], static_cast<int>(leaf));
    if (left > 0.0) throw InvariantError("water left over after filling a root depression");
  }

  DepthRaster out;
  out.geo = g;
  out.depth = GridD::Zero(g.nrows, g.ncols);
  for (int id = 0; id < static_cast<int>(nodes_.size()); ++id)
    if (nodes_[id].parent < 0) assign_depths(st, id, out.depth);
  out.outflow_volume = st.outflow;
  out.absorbed_volume = std::accumulate(st.absorbed.begin(), st.absorbed.end(), 0.0);
  return out;
}

DepthRaster simulate_flood(const DemGrid& dem, const GridD& effective_rain, const GridD& extra_storage,
                           const GridD& pumped, bool open_border) {
  FloodModel model(dem, open_border);
  return model.simulate(FloodForcing{effective_rain, extra_storage, pumped});
}

double max_depth_over(const DepthRaster& depth, std::span<const Cell> cells) {
  double best = 0.0;
  for (const auto& c : cells) {
    if (!depth.geo.contains(c))
      throw DomainError("cell (" + std::to_string(c.row) + ", " + std::to_string(c.col) + ") outside the grid");
    best = std::max(best, depth.depth(c.row, c.col));
  }
  return best;
}

}  // namespace adaptsim
