#include "adaptsim/transport.hpp"

#include <cmath>
#include <functional>
#include <queue>
#include <set>
#include <sstream>

#include "adaptsim/errors.hpp"

namespace adaptsim {

int TransportGraph::add_node(NetNode node) {
  if (node.id.empty()) throw ValidationError("node id must be non-empty");
  if (node_index_.count(node.id)) throw ValidationError("duplicate node id '" + node.id + "'");
  const int idx = node_count();
  node_index_.emplace(node.id, idx);
  nodes_.push_back(std::move(node));
  return idx;
}

int TransportGraph::add_edge(const std::string& id, const std::string& from, const std::string& to,
                             double time_s, bool bidirectional, std::vector<Cell> footprint) {
  if (id.empty()) throw ValidationError("edge id must be non-empty");
  if (edge_index_.count(id)) throw ValidationError("duplicate edge id '" + id + "'");
  const auto a = find_node(from);
  const auto b = find_node(to);
  if (!a) throw ReferenceError("edge '" + id + "' references missing node '" + from + "'");
  if (!b) throw ReferenceError("edge '" + id + "' references missing node '" + to + "'");
  if (!(time_s > 0.0) || !std::isfinite(time_s))
    throw ValidationError("edge '" + id + "' must have a finite positive travel time");
  const int idx = edge_count();
  edge_index_.emplace(id, idx);
  edges_.push_back({id, *a, *b, time_s, bidirectional, std::move(footprint)});
  return idx;
}

std::optional<int> TransportGraph::find_node(const std::string& id) const {
  auto it = node_index_.find(id);
  if (it == node_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> TransportGraph::find_edge(const std::string& id) const {
  auto it = edge_index_.find(id);
  if (it == edge_index_.end()) return std::nullopt;
  return it->second;
}

void TransportGraph::validate(const GridGeometry& geo) const {
  for (const auto& n : nodes_)
    if (n.cell && !geo.contains(*n.cell))
      throw ValidationError("node '" + n.id + "' cell is outside the grid");
  for (const auto& e : edges_) {
    if (!(e.time_s > 0.0) || !std::isfinite(e.time_s))
      throw ValidationError("edge '" + e.id + "' must have a finite positive travel time");
    for (const auto& c : e.footprint)
      if (!geo.contains(c))
        throw ValidationError("edge '" + e.id + "' footprint cell " + std::to_string(c.row) + ":" +
                              std::to_string(c.col) + " is outside the grid");
  }
}

void validate(const ImpedanceParams& p) {
  if (!(p.d_slow >= 0.0) || !(p.d_slow < p.d_block) || !std::isfinite(p.d_block))
    throw ValidationError("impedance thresholds must satisfy 0 <= d_slow < d_block");
  if (!(p.slow_multiplier >= 1.0) || !std::isfinite(p.slow_multiplier))
    throw ValidationError("slow_multiplier must be >= 1");
}

void validate_zones(const std::vector<Zone>& zones, const TransportGraph& graph, const DemGrid& dem) {
  if (zones.empty()) throw ValidationError("at least one zone is required");
  std::vector<int> owner(static_cast<std::size_t>(dem.size()), -1);
  std::set<std::string> ids;
  for (std::size_t z = 0; z < zones.size(); ++z) {
    const auto& zone = zones[z];
    if (!ids.insert(zone.id).second) throw ValidationError("duplicate zone id '" + zone.id + "'");
    if (!(zone.population > 0.0) || !std::isfinite(zone.population))
      throw ValidationError("zone '" + zone.id + "' population must be > 0");
    if (zone.centroid < 0 || zone.centroid >= graph.node_count())
      throw ReferenceError("zone '" + zone.id + "' centroid node does not exist");
    for (int e : zone.edges)
      if (e < 0 || e >= graph.edge_count()) throw ReferenceError("zone '" + zone.id + "' references a missing edge");
    for (const auto& c : zone.cells) {
      if (!dem.geo.contains(c))
        throw ValidationError("zone '" + zone.id + "' cell " + std::to_string(c.row) + ":" +
                              std::to_string(c.col) + " is outside the grid");
      auto& o = owner[static_cast<std::size_t>(dem.geo.index(c))];
      if (o >= 0)
        throw ValidationError("cell " + std::to_string(c.row) + ":" + std::to_string(c.col) +
                              " belongs to zones '" + zones[static_cast<std::size_t>(o)].id + "' and '" +
                              zone.id + "'");
      o = static_cast<int>(z);
    }
  }
  for (int i = 0; i < dem.size(); ++i)
    if (dem.valid(i) && owner[static_cast<std::size_t>(i)] < 0) {
      const auto c = dem.geo.cell(i);
      throw ValidationError("cell " + std::to_string(c.row) + ":" + std::to_string(c.col) +
                            " is not covered by any zone");
    }
}

void validate_pois(const std::vector<Poi>& pois, const TransportGraph& graph) {
  std::set<std::string> ids;
  for (const auto& p : pois) {
    if (!ids.insert(p.id).second) throw ValidationError("duplicate poi id '" + p.id + "'");
    if (p.category.empty()) throw ValidationError("poi '" + p.id + "' has an empty category");
    if (p.node < 0 || p.node >= graph.node_count())
      throw ReferenceError("poi '" + p.id + "' references a missing node");
  }
}

std::vector<double> effective_edge_times(const TransportGraph& graph, const DepthRaster& depth,
                                         const ImpedanceParams& params,
                                         const std::vector<double>& drainage_bonus) {
  validate(params);
  if (!drainage_bonus.empty() && drainage_bonus.size() != graph.edges().size())
    throw DomainError("drainage bonus must have one entry per edge");
  std::vector<double> out;
  out.reserve(graph.edges().size());
  for (std::size_t i = 0; i < graph.edges().size(); ++i) {
    const auto& e = graph.edges()[i];
    const double bonus = drainage_bonus.empty() ? 0.0 : drainage_bonus[i];
    if (!(bonus >= 0.0)) throw DomainError("drainage bonus of edge '" + e.id + "' is negative");
    const double d = max_depth_over(depth, e.footprint);
    if (d > params.d_block + bonus)
      out.push_back(kImpassable);
    else if (d > params.d_slow + bonus)
      out.push_back(e.time_s * params.slow_multiplier);
    else
      out.push_back(e.time_s);
  }
  return out;
}

std::vector<double> shortest_times(const TransportGraph& graph, const std::vector<double>& edge_times,
                                   int origin) {
  const int n = graph.node_count();
  if (origin < 0 || origin >= n) throw DomainError("origin node " + std::to_string(origin) + " does not exist");
  if (edge_times.size() != graph.edges().size()) throw DomainError("edge time vector has the wrong length");

  std::vector<std::vector<std::pair<int, double>>> adj(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < edge_times.size(); ++i) {
    const double t = edge_times[i];
    if (t == kImpassable) continue;
    if (!(t > 0.0)) throw DomainError("edge '" + graph.edge(static_cast<int>(i)).id + "' has a non-positive time");
    const auto& e = graph.edges()[i];
    adj[static_cast<std::size_t>(e.from)].push_back({e.to, t});
    if (e.bidirectional) adj[static_cast<std::size_t>(e.to)].push_back({e.from, t});
  }

  std::vector<double> dist(static_cast<std::size_t>(n), kImpassable);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[static_cast<std::size_t>(origin)] = 0.0;
  heap.push({0.0, origin});
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[static_cast<std::size_t>(u)]) continue;
    for (const auto& [v, w] : adj[static_cast<std::size_t>(u)]) {
      const double nd = d + w;
      if (nd < dist[static_cast<std::size_t>(v)]) {
        dist[static_cast<std::size_t>(v)] = nd;
        heap.push({nd, v});
      }
    }
  }
  return dist;
}

std::vector<std::string> poi_categories(const std::vector<Poi>& pois) {
  std::set<std::string> cats;
  for (const auto& p : pois) cats.insert(p.category);
  return {cats.begin(), cats.end()};
}

AccessProfile accessibility(const Zone& zone, const std::vector<Poi>& pois, const std::vector<double>& times,
                            double threshold_s) {
  if (!(threshold_s > 0.0)) throw DomainError("access threshold must be > 0");
  AccessProfile prof;
  prof.zone_id = zone.id;
  std::map<std::string, int> counts;
  for (const auto& p : pois) {
    auto& c = counts[p.category];
    if (times.at(static_cast<std::size_t>(p.node)) <= threshold_s) ++c;
  }
  for (const auto& [cat, c] : counts) prof.per_capita[cat] = c / zone.population;
  return prof;
}

// ---- CSV ----

namespace {

bool parse_bool(std::string_view s, const std::string& file, int line) {
  const auto t = trim(s);
  if (t == "1" || t == "true" || t == "yes") return true;
  if (t == "0" || t == "false" || t == "no") return false;
  throw ParseError(file, line, "expected a boolean, got '" + std::string(t) + "'");
}

std::string format_cells(const std::vector<Cell>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(cells[i].row) + ":" + std::to_string(cells[i].col);
  }
  return out;
}

int resolve_node(const TransportGraph& g, const std::string& id, const std::string& what, const std::string& file,
                 int line) {
  const auto n = g.find_node(id);
  if (!n) throw ReferenceError(file + ":" + std::to_string(line) + ": " + what + " references missing node '" + id + "'");
  return *n;
}

}  // namespace

std::vector<Cell> parse_cell_list(std::string_view text, const std::string& file, int line) {
  std::vector<Cell> cells;
  if (trim(text).empty()) return cells;
  for (const auto& item : split(text, ';')) {
    const auto rc = split(item, ':');
    if (rc.size() != 2) throw ParseError(file, line, "expected row:col, got '" + item + "'");
    cells.push_back({static_cast<int>(parse_int(rc[0], file, line)), static_cast<int>(parse_int(rc[1], file, line))});
  }
  return cells;
}

TransportGraph parse_network(const CsvTable& nodes, const CsvTable& edges) {
  TransportGraph g;
  const auto nid = nodes.column("node_id"), nx = nodes.column("x"), ny = nodes.column("y");
  std::optional<std::size_t> nr, nc;
  for (std::size_t i = 0; i < nodes.header.size(); ++i) {
    if (nodes.header[i] == "cell_row") nr = i;
    if (nodes.header[i] == "cell_col") nc = i;
  }
  for (const auto& row : nodes.rows) {
    NetNode n;
    n.id = row.fields[nid];
    if (n.id.empty()) throw ParseError(nodes.file, row.line, "empty node_id");
    n.x = parse_double(row.fields[nx], nodes.file, row.line);
    n.y = parse_double(row.fields[ny], nodes.file, row.line);
    if (nr && nc && !row.fields[*nr].empty() && !row.fields[*nc].empty())
      n.cell = Cell{static_cast<int>(parse_int(row.fields[*nr], nodes.file, row.line)),
                    static_cast<int>(parse_int(row.fields[*nc], nodes.file, row.line))};
    if (g.find_node(n.id)) throw ParseError(nodes.file, row.line, "duplicate node id '" + n.id + "'");
    g.add_node(std::move(n));
  }

  const auto eid = edges.column("edge_id"), ef = edges.column("from"), et = edges.column("to"),
             ets = edges.column("time_s"), eb = edges.column("bidirectional"), efp = edges.column("footprint");
  for (const auto& row : edges.rows) {
    const auto& id = row.fields[eid];
    if (id.empty()) throw ParseError(edges.file, row.line, "empty edge_id");
    if (g.find_edge(id)) throw ParseError(edges.file, row.line, "duplicate edge id '" + id + "'");
    const std::string ctx = "edge '" + id + "'";
    resolve_node(g, row.fields[ef], ctx, edges.file, row.line);
    resolve_node(g, row.fields[et], ctx, edges.file, row.line);
    const double t = parse_double(row.fields[ets], edges.file, row.line);
    if (!(t > 0.0) || !std::isfinite(t))
      throw ParseError(edges.file, row.line, ctx + " travel time must be finite and > 0");
    const bool bidir = row.fields[eb].empty() ? true : parse_bool(row.fields[eb], edges.file, row.line);
    g.add_edge(id, row.fields[ef], row.fields[et], t, bidir, parse_cell_list(row.fields[efp], edges.file, row.line));
  }
  return g;
}

std::vector<Poi> parse_pois(const CsvTable& table, const TransportGraph& graph) {
  const auto pid = table.column("poi_id"), pc = table.column("category"), pn = table.column("node_id");
  std::vector<Poi> out;
  for (const auto& row : table.rows) {
    Poi p;
    p.id = row.fields[pid];
    p.category = row.fields[pc];
    if (p.id.empty()) throw ParseError(table.file, row.line, "empty poi_id");
    if (p.category.empty()) throw ParseError(table.file, row.line, "poi '" + p.id + "' has an empty category");
    p.node = resolve_node(graph, row.fields[pn], "poi '" + p.id + "'", table.file, row.line);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Zone> parse_zones(const CsvTable& table, const TransportGraph& graph) {
  const auto zid = table.column("zone_id"), zn = table.column("name"), zp = table.column("population"),
             zc = table.column("centroid_node"), zcells = table.column("cells"), zedges = table.column("edges");
  std::vector<Zone> out;
  for (const auto& row : table.rows) {
    Zone z;
    z.id = row.fields[zid];
    if (z.id.empty()) throw ParseError(table.file, row.line, "empty zone_id");
    z.name = row.fields[zn];
    z.population = parse_double(row.fields[zp], table.file, row.line);
    if (!(z.population > 0.0)) throw ParseError(table.file, row.line, "zone '" + z.id + "' population must be > 0");
    z.centroid = resolve_node(graph, row.fields[zc], "zone '" + z.id + "'", table.file, row.line);
    z.cells = parse_cell_list(row.fields[zcells], table.file, row.line);
    if (!trim(row.fields[zedges]).empty())
      for (const auto& e : split(row.fields[zedges], ';')) {
        const auto idx = graph.find_edge(e);
        if (!idx)
          throw ReferenceError(table.file + ":" + std::to_string(row.line) + ": zone '" + z.id +
                               "' references missing edge '" + e + "'");
        z.edges.push_back(*idx);
      }
    out.push_back(std::move(z));
  }
  return out;
}

std::string format_nodes_csv(const TransportGraph& graph) {
  std::ostringstream out;
  out << "node_id,x,y,cell_row,cell_col\n";
  for (const auto& n : graph.nodes()) {
    out << n.id << ',' << format_double(n.x) << ',' << format_double(n.y) << ',';
    if (n.cell) out << n.cell->row << ',' << n.cell->col;
    else out << ',';
    out << '\n';
  }
  return out.str();
}

std::string format_edges_csv(const TransportGraph& graph) {
  std::ostringstream out;
  out << "edge_id,from,to,time_s,bidirectional,footprint\n";
  for (const auto& e : graph.edges())
    out << e.id << ',' << graph.node(e.from).id << ',' << graph.node(e.to).id << ',' << format_double(e.time_s) << ','
        << (e.bidirectional ? 1 : 0) << ',' << format_cells(e.footprint) << '\n';
  return out.str();
}

std::string format_pois_csv(const std::vector<Poi>& pois, const TransportGraph& graph) {
  std::ostringstream out;
  out << "poi_id,category,node_id\n";
  for (const auto& p : pois) out << p.id << ',' << p.category << ',' << graph.node(p.node).id << '\n';
  return out.str();
}

std::string format_zones_csv(const std::vector<Zone>& zones, const TransportGraph& graph) {
  std::ostringstream out;
  out << "zone_id,name,population,centroid_node,cells,edges\n";
  for (const auto& z : zones) {
    out << z.id << ',' << z.name << ',' << format_double(z.population) << ',' << graph.node(z.centroid).id << ','
        << format_cells(z.cells) << ',';
    for (std::size_t i = 0; i < z.edges.size(); ++i) out << (i ? ";" : "") << graph.edge(z.edges[i]).id;
    out << '\n';
  }
  return out.str();
}

}  // namespace adaptsim
