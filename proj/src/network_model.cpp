#include "trndp/network_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <queue>
#include <sstream>

#include "json.hpp"

namespace trndp {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return cells;
}

// Minimal CSV table: a header row, then data rows. Blank lines are skipped.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;

  std::optional<std::size_t> column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  }
};

CsvTable read_csv(const std::string& text, const std::string& source) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split_commas(line);
    if (!have_header) {
      if (!cells.empty() && cells[0].size() >= 3 &&
          static_cast<unsigned char>(cells[0][0]) == 0xEF)
        cells[0] = cells[0].substr(3); // UTF-8 BOM
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size())
      throw DatasetError(source + " line " + std::to_string(lineno),
                         "expected " + std::to_string(table.header.size()) + " fields, got " +
                             std::to_string(cells.size()));
    table.rows.push_back(std::move(cells));
    table.line_numbers.push_back(lineno);
  }
  if (!have_header) throw DatasetError(source, "empty file (missing header)");
  return table;
}

std::size_t require_column(const CsvTable& t, const std::string& name, const std::string& source) {
  auto c = t.column(name);
  if (!c) throw DatasetError(source, "missing column '" + name + "'");
  return *c;
}

std::string row_label(const std::string& source, const CsvTable& t, std::size_t row) {
  return source + " row " + std::to_string(row + 1) + " (line " +
         std::to_string(t.line_numbers[row]) + ")";
}

double parse_double(const std::string& cell, const std::string& where, const char* field) {
  try {
    std::size_t used = 0;
    double v = std::stod(cell, &used);
    if (used != cell.size() || !std::isfinite(v)) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw DatasetError(where, std::string("field '") + field + "' is not a number: '" + cell + "'");
  }
}

long long parse_integer(const std::string& cell, const std::string& where, const char* field) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec == std::errc() && ptr == cell.data() + cell.size()) return v;
  // Accept integral values written as floats ("12.0").
  double d = parse_double(cell, where, field);
  if (std::floor(d) != d)
    throw DatasetError(where, std::string("field '") + field + "' is not an integer: '" + cell + "'");
  return static_cast<long long>(d);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DatasetError(p.string(), "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace

// ---------------------------------------------------------------------------
// RoadNetwork

RoadNetwork RoadNetwork::build(std::vector<Node> nodes, std::vector<Edge> edges,
                               std::vector<std::string>* warnings) {
  RoadNetwork net;
  const auto n = nodes.size();
  if (n == 0) throw DatasetError("network", "no nodes");
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, inserted] = net.original_to_dense_.emplace(nodes[i].original_id, static_cast<NodeId>(i));
    if (!inserted)
      throw DatasetError("node " + std::to_string(i),
                         "duplicate node id " + std::to_string(nodes[i].original_id));
  }
  net.nodes_ = std::move(nodes);

  std::map<std::pair<NodeId, NodeId>, std::size_t> seen;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    Edge e = edges[i];
    const std::string where = "edge " + std::to_string(i);
    if (!net.contains(e.u) || !net.contains(e.v))
      throw DatasetError(where, "references an unknown node");
    if (e.u == e.v) throw DatasetError(where, "self loop at node " + std::to_string(net.original_id(e.u)));
    if (!(e.length > 0.0)) throw DatasetError(where, "length must be > 0");
    if (!(e.free_flow_speed > 0.0)) throw DatasetError(where, "free_flow_speed must be > 0");
    auto key = std::minmax(e.u, e.v);
    auto found = seen.find(key);
    if (found != seen.end()) {
      const Edge& prior = net.edges_[found->second];
      if (std::abs(prior.length - e.length) > 1e-6 * std::max(1.0, prior.length) ||
          std::abs(prior.free_flow_speed - e.free_flow_speed) > 1e-9)
        throw DatasetError(where, "duplicate of edge {" + std::to_string(net.original_id(e.u)) + "," +
                                      std::to_string(net.original_id(e.v)) + "} with conflicting attributes");
      if (warnings)
        warnings->push_back(where + ": duplicate edge {" + std::to_string(net.original_id(e.u)) + "," +
                            std::to_string(net.original_id(e.v)) + "} collapsed");
      continue;
    }
    seen.emplace(key, net.edges_.size());
    net.edges_.push_back(e);
  }

  net.adjacency_.assign(n, {});
  for (std::size_t e = 0; e < net.edges_.size(); ++e) {
    net.adjacency_[static_cast<std::size_t>(net.edges_[e].u)].push_back({net.edges_[e].v, e});
    net.adjacency_[static_cast<std::size_t>(net.edges_[e].v)].push_back({net.edges_[e].u, e});
  }
  for (auto& adj : net.adjacency_)
    std::sort(adj.begin(), adj.end(), [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });

  std::vector<char> reached(n, 0);
  std::queue<NodeId> frontier;
  frontier.push(0);
  reached[0] = 1;
  std::size_t count = 1;
  while (!frontier.empty()) {
    NodeId u = frontier.front();
    frontier.pop();
    for (const auto& nb : net.adjacency_[static_cast<std::size_t>(u)]) {
      if (!reached[static_cast<std::size_t>(nb.node)]) {
        reached[static_cast<std::size_t>(nb.node)] = 1;
        ++count;
        frontier.push(nb.node);
      }
    }
  }
  if (count != n)
    throw DatasetError("network", "graph is disconnected: " + std::to_string(n - count) +
                                      " of " + std::to_string(n) + " nodes unreachable from node " +
                                      std::to_string(net.original_id(0)));
  return net;
}

std::size_t RoadNetwork::max_degree() const {
  std::size_t best = 0;
  for (const auto& adj : adjacency_) best = std::max(best, adj.size());
  return best;
}

std::optional<std::size_t> RoadNetwork::find_edge(NodeId a, NodeId b) const {
  if (!contains(a) || !contains(b)) return std::nullopt;
  const auto& adj = adjacency_[static_cast<std::size_t>(a)];
  auto it = std::lower_bound(adj.begin(), adj.end(), b,
                             [](const Neighbor& nb, NodeId key) { return nb.node < key; });
  if (it != adj.end() && it->node == b) return it->edge;
  return std::nullopt;
}

std::optional<NodeId> RoadNetwork::dense_id(long long original_id) const {
  auto it = original_to_dense_.find(original_id);
  if (it == original_to_dense_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// DemandMatrix

DemandMatrix::DemandMatrix(std::size_t node_count, std::vector<DemandEntry> entries)
    : n_(node_count), entries_(std::move(entries)), dense_(node_count * node_count, 0.0),
      row_sums_(node_count, 0.0), col_sums_(node_count, 0.0) {
  std::sort(entries_.begin(), entries_.end(), [](const DemandEntry& a, const DemandEntry& b) {
    return std::tie(a.origin, a.destination) < std::tie(b.origin, b.destination);
  });
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    const auto& e = entries_[k];
    const std::string where = "demand entry (" + std::to_string(e.origin) + "," +
                              std::to_string(e.destination) + ")";
    if (e.origin < 0 || e.destination < 0 || static_cast<std::size_t>(e.origin) >= n_ ||
        static_cast<std::size_t>(e.destination) >= n_)
      throw DatasetError(where, "references an unknown node");
    if (e.origin == e.destination) throw DatasetError(where, "self-loop demand");
    if (!(e.flow >= 0.0) || !std::isfinite(e.flow)) throw DatasetError(where, "negative or non-finite flow");
    if (k > 0 && entries_[k - 1].origin == e.origin && entries_[k - 1].destination == e.destination)
      throw DatasetError(where, "duplicate OD pair");
    dense_[static_cast<std::size_t>(e.origin) * n_ + static_cast<std::size_t>(e.destination)] = e.flow;
    row_sums_[static_cast<std::size_t>(e.origin)] += e.flow;
    col_sums_[static_cast<std::size_t>(e.destination)] += e.flow;
    total_ += e.flow;
  }
  double max_row = 0.0, max_col = 0.0;
  for (double v : row_sums_) max_row = std::max(max_row, v);
  for (double v : col_sums_) max_col = std::max(max_col, v);
  global_reference_ = std::max(max_row, max_col);
}

DemandMatrix DemandMatrix::scaled(double factor) const {
  auto copy = entries_;
  for (auto& e : copy) e.flow *= factor;
  return DemandMatrix(n_, std::move(copy));
}

Marginals od_marginals(const DemandMatrix& demand) {
  return {demand.row_sums(), demand.column_sums()};
}

// ---------------------------------------------------------------------------
// Routes

double route_length_m(const TransitRoute& route, const RoadNetwork& net) {
  double total = 0.0;
  for (auto e : route_edges(route, net)) total += net.edge(e).length;
  return total;
}

std::vector<std::size_t> route_edges(const TransitRoute& route, const RoadNetwork& net) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i + 1 < route.nodes.size(); ++i) {
    auto e = net.find_edge(route.nodes[i], route.nodes[i + 1]);
    if (!e) throw std::invalid_argument("route uses a non-existent edge");
    out.push_back(*e);
  }
  return out;
}

TransitNetwork TransitNetwork::from_routes(std::vector<TransitRoute> routes) {
  TransitNetwork tn;
  tn.stop_spacing.assign(routes.size(), 1);
  tn.routes = std::move(routes);
  return tn;
}

std::vector<std::size_t> TransitNetwork::stop_positions(std::size_t k) const {
  const auto len = routes.at(k).nodes.size();
  const std::size_t s = k < stop_spacing.size() ? static_cast<std::size_t>(std::max(1, stop_spacing[k])) : 1;
  std::vector<std::size_t> pos;
  if (len == 0) return pos;
  for (std::size_t j = 0; j <= (len - 1) / s; ++j) pos.push_back(j * s);
  return pos;
}

std::vector<NodeId> TransitNetwork::stops(std::size_t k) const {
  std::vector<NodeId> out;
  for (auto p : stop_positions(k)) out.push_back(routes[k].nodes[p]);
  return out;
}

bool RouteVerdict::has(RouteViolationKind kind) const {
  return std::any_of(violations.begin(), violations.end(),
                     [kind](const RouteViolation& v) { return v.kind == kind; });
}

RouteVerdict validate_route(std::span<const NodeId> route, const RoadNetwork& net, int max_nodes) {
  RouteVerdict verdict;
  const auto len = static_cast<int>(route.size());
  if (len < kMinRouteNodes)
    verdict.violations.push_back({RouteViolationKind::TooShort, 0,
                                  "route has " + std::to_string(len) + " nodes, minimum is " +
                                      std::to_string(kMinRouteNodes)});
  if (len > max_nodes)
    verdict.violations.push_back({RouteViolationKind::TooLong, static_cast<std::size_t>(max_nodes),
                                  "route has " + std::to_string(len) + " nodes, maximum is " +
                                      std::to_string(max_nodes)});
  std::vector<char> seen(net.node_count(), 0);
  for (std::size_t i = 0; i < route.size(); ++i) {
    const NodeId v = route[i];
    if (!net.contains(v)) {
      verdict.violations.push_back({RouteViolationKind::UnknownNode, i, "unknown node " + std::to_string(v)});
      continue;
    }
    if (seen[static_cast<std::size_t>(v)])
      verdict.violations.push_back({RouteViolationKind::RepeatedNode, i, "node " + std::to_string(v) + " repeats"});
    seen[static_cast<std::size_t>(v)] = 1;
    if (i > 0 && net.contains(route[i - 1]) && !net.adjacent(route[i - 1], v))
      verdict.violations.push_back({RouteViolationKind::NotAdjacent, i,
                                    "no edge between " + std::to_string(route[i - 1]) + " and " +
                                        std::to_string(v)});
  }
  return verdict;
}

// ---------------------------------------------------------------------------
// Loading

std::vector<Node> parse_nodes_csv(const std::string& text, const std::string& source) {
  auto t = read_csv(text, source);
  auto cid = require_column(t, "id", source);
  auto cx = require_column(t, "x", source);
  auto cy = require_column(t, "y", source);
  std::vector<Node> nodes;
  nodes.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto where = row_label(source, t, r);
    nodes.push_back({parse_integer(t.rows[r][cid], where, "id"), parse_double(t.rows[r][cx], where, "x"),
                     parse_double(t.rows[r][cy], where, "y")});
  }
  if (nodes.empty()) throw DatasetError(source, "no nodes");
  // Dense ids follow ascending original id so the result does not depend on row order.
  std::stable_sort(nodes.begin(), nodes.end(),
                   [](const Node& a, const Node& b) { return a.original_id < b.original_id; });
  for (std::size_t i = 1; i < nodes.size(); ++i)
    if (nodes[i].original_id == nodes[i - 1].original_id)
      throw DatasetError(source, "duplicate node id " + std::to_string(nodes[i].original_id));
  return nodes;
}

std::vector<Edge> parse_edges_csv(const std::string& text, const std::string& source,
                                  const std::unordered_map<long long, NodeId>& ids) {
  auto t = read_csv(text, source);
  auto cu = require_column(t, "u", source);
  auto cv = require_column(t, "v", source);
  auto cl = require_column(t, "length", source);
  auto cs = t.column("free_flow_speed");
  std::vector<Edge> edges;
  edges.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto where = row_label(source, t, r);
    const auto& row = t.rows[r];
    auto lookup = [&](const std::string& cell, const char* field) {
      auto id = parse_integer(cell, where, field);
      auto it = ids.find(id);
      if (it == ids.end()) throw DatasetError(where, std::string("field '") + field + "' references unknown node " + std::to_string(id));
      return it->second;
    };
    Edge e;
    e.u = lookup(row[cu], "u");
    e.v = lookup(row[cv], "v");
    e.length = parse_double(row[cl], where, "length");
    e.free_flow_speed = (cs && !row[*cs].empty()) ? parse_double(row[*cs], where, "free_flow_speed")
                                                  : kDefaultFreeFlowSpeed;
    if (e.u == e.v) throw DatasetError(where, "self loop");
    if (!(e.length > 0.0)) throw DatasetError(where, "length must be > 0");
    if (!(e.free_flow_speed > 0.0)) throw DatasetError(where, "free_flow_speed must be > 0");
    edges.push_back(e);
  }
  return edges;
}

std::vector<DemandEntry> parse_demand_csv(const std::string& text, const std::string& source,
                                          const RoadNetwork& net) {
  auto t = read_csv(text, source);
  auto co = require_column(t, "origin", source);
  auto cd = require_column(t, "destination", source);
  auto cf = require_column(t, "flow", source);
  std::vector<DemandEntry> entries;
  std::map<std::pair<NodeId, NodeId>, std::size_t> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto where = row_label(source, t, r);
    const auto& row = t.rows[r];
    auto lookup = [&](const std::string& cell, const char* field) {
      auto id = net.dense_id(parse_integer(cell, where, field));
      if (!id) throw DatasetError(where, std::string("field '") + field + "' references unknown node " + cell);
      return *id;
    };
    DemandEntry e{lookup(row[co], "origin"), lookup(row[cd], "destination"), parse_double(row[cf], where, "flow")};
    if (e.flow < 0.0) throw DatasetError(where, "negative flow");
    if (e.origin == e.destination) throw DatasetError(where, "self-loop demand");
    if (!seen.emplace(std::make_pair(e.origin, e.destination), r).second)
      throw DatasetError(where, "duplicate OD pair");
    entries.push_back(e);
  }
  return entries;
}

RoutesDocument parse_routes_json(const std::string& text, const std::string& source,
                                 const RoadNetwork& net) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& ex) {
    throw DatasetError(source, std::string("invalid JSON: ") + ex.what());
  }
  if (!doc.is_object() || !doc.contains("routes") || !doc["routes"].is_array())
    throw DatasetError(source, "expected an object with a 'routes' array");
  RoutesDocument out;
  const auto& routes = doc["routes"];
  for (std::size_t k = 0; k < routes.size(); ++k) {
    const std::string where = source + " route " + std::to_string(k);
    if (!routes[k].is_array()) throw DatasetError(where, "route must be an array of node ids");
    TransitRoute route;
    route.reference = true;
    for (const auto& id : routes[k]) {
      if (!id.is_number_integer()) throw DatasetError(where, "node ids must be integers");
      auto dense = net.dense_id(id.get<long long>());
      if (!dense) throw DatasetError(where, "unknown node " + std::to_string(id.get<long long>()));
      route.nodes.push_back(*dense);
    }
    auto verdict = validate_route(route.nodes, net, kMaxReferenceRouteNodes);
    if (!verdict.valid()) throw DatasetError(where, verdict.violations.front().message);
    out.routes.push_back(std::move(route));
  }
  if (doc.contains("transit_center") && !doc["transit_center"].is_null()) {
    if (!doc["transit_center"].is_number_integer()) throw DatasetError(source, "transit_center must be an integer");
    auto dense = net.dense_id(doc["transit_center"].get<long long>());
    if (!dense) throw DatasetError(source, "transit_center references an unknown node");
    out.transit_center = *dense;
  }
  return out;
}

DatasetPaths DatasetPaths::in_directory(const std::filesystem::path& dir) {
  DatasetPaths p{dir / "nodes.csv", dir / "edges.csv", dir / "demand.csv", dir / "routes.json"};
  return p;
}

Dataset load_dataset(const DatasetPaths& paths) {
  Dataset ds;
  auto nodes = parse_nodes_csv(slurp(paths.nodes), paths.nodes.string());
  std::unordered_map<long long, NodeId> ids;
  for (std::size_t i = 0; i < nodes.size(); ++i) ids.emplace(nodes[i].original_id, static_cast<NodeId>(i));
  auto edges = parse_edges_csv(slurp(paths.edges), paths.edges.string(), ids);
  try {
    ds.network = RoadNetwork::build(std::move(nodes), std::move(edges), &ds.warnings);
  } catch (const DatasetError& ex) {
    throw DatasetError(paths.edges.string() + " " + ex.where(), ex.detail());
  }
  auto entries = parse_demand_csv(slurp(paths.demand), paths.demand.string(), ds.network);
  ds.demand = DemandMatrix(ds.network.node_count(), std::move(entries));
  if (paths.routes && std::filesystem::exists(*paths.routes)) {
    auto doc = parse_routes_json(slurp(*paths.routes), paths.routes->string(), ds.network);
    ds.existing_routes = std::move(doc.routes);
    ds.transit_center = doc.transit_center;
  }
  return ds;
}

} // namespace trndp
