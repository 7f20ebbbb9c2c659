#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "adaptsim/flood.hpp"
#include "adaptsim/raster.hpp"
#include "adaptsim/textio.hpp"

namespace adaptsim {

inline constexpr double kImpassable = std::numeric_limits<double>::infinity();

struct NetNode {
  std::string id;
  double x = 0.0;
  double y = 0.0;
  std::optional<Cell> cell;
};

struct NetEdge {
  std::string id;
  int from = 0;  // node index
  int to = 0;
  double time_s = 0.0;  // free-flow travel time
  bool bidirectional = true;
  std::vector<Cell> footprint;
};

// Directed multigraph with string ids resolved to dense indices at insertion.
class TransportGraph {
 public:
  int add_node(NetNode node);  // throws ValidationError on duplicate id
  int add_edge(const std::string& id, const std::string& from, const std::string& to, double time_s,
               bool bidirectional, std::vector<Cell> footprint);  // ReferenceError on unknown node

  int node_count() const { return static_cast<int>(nodes_.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const NetNode& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  const NetEdge& edge(int i) const { return edges_[static_cast<std::size_t>(i)]; }
  const std::vector<NetNode>& nodes() const { return nodes_; }
  const std::vector<NetEdge>& edges() const { return edges_; }
  std::optional<int> find_node(const std::string& id) const;
  std::optional<int> find_edge(const std::string& id) const;

  // Checks times and footprints against the grid; throws ValidationError.
  void validate(const GridGeometry& geo) const;

 private:
  std::vector<NetNode> nodes_;
  std::vector<NetEdge> edges_;
  std::unordered_map<std::string, int> node_index_;
  std::unordered_map<std::string, int> edge_index_;
};

struct ImpedanceParams {
  double d_slow = 0.10;  // m
  double d_block = 0.30; // m
  double slow_multiplier = 4.0;
};
void validate(const ImpedanceParams& p);

struct Zone {
  std::string id;
  std::string name;
  double population = 1.0;
  int centroid = 0;           // node index
  std::vector<Cell> cells;
  std::vector<int> edges;     // edge indices
};

struct Poi {
  std::string id;
  std::string category;
  int node = 0;  // node index
};

struct AccessProfile {
  std::string zone_id;
  std::map<std::string, double> per_capita;  // category -> reachable count / population
};

// Checks populations, centroids, and that zones partition the valid DEM cells.
void validate_zones(const std::vector<Zone>& zones, const TransportGraph& graph, const DemGrid& dem);
void validate_pois(const std::vector<Poi>& pois, const TransportGraph& graph);

// Travel time per edge under a flood; kImpassable for blocked edges.
// `drainage_bonus` is per edge (empty means no bonus anywhere).
std::vector<double> effective_edge_times(const TransportGraph& graph, const DepthRaster& depth,
                                         const ImpedanceParams& params,
                                         const std::vector<double>& drainage_bonus = {});

// Dijkstra from `origin`; kImpassable for unreachable nodes. Throws DomainError on a bad origin.
std::vector<double> shortest_times(const TransportGraph& graph, const std::vector<double>& edge_times,
                                   int origin);

// Every category in `pois` appears in the profile, with 0 when none are reachable.
AccessProfile accessibility(const Zone& zone, const std::vector<Poi>& pois, const std::vector<double>& times,
                            double threshold_s);

std::vector<std::string> poi_categories(const std::vector<Poi>& pois);

// CSV ingestion. Errors carry file and line.
TransportGraph parse_network(const CsvTable& nodes, const CsvTable& edges);
std::vector<Poi> parse_pois(const CsvTable& table, const TransportGraph& graph);
std::vector<Zone> parse_zones(const CsvTable& table, const TransportGraph& graph);
std::vector<Cell> parse_cell_list(std::string_view text, const std::string& file, int line);

std::string format_nodes_csv(const TransportGraph& graph);
std::string format_edges_csv(const TransportGraph& graph);
std::string format_pois_csv(const std::vector<Poi>& pois, const TransportGraph& graph);
std::string format_zones_csv(const std::vector<Zone>& zones, const TransportGraph& graph);

}  // namespace adaptsim
