#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace trndp {

using NodeId = int;

inline constexpr double kDefaultFreeFlowSpeed = 16.67; // m/s
inline constexpr int kMinRouteNodes = 2;
inline constexpr int kMaxReferenceRouteNodes = 24;

// Thrown by the loaders. `where` names the file and the row or route index.
class DatasetError : public std::runtime_error {
 public:
  DatasetError(const std::string& where, const std::string& what)
      : std::runtime_error(where + ": " + what), where_(where), detail_(what) {}
  const std::string& where() const noexcept { return where_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string where_;
  std::string detail_;
};

struct Node {
  long long original_id = 0;
  double x = 0.0; // meters
  double y = 0.0; // meters
};

struct Edge {
  NodeId u = 0;
  NodeId v = 0;
  double length = 0.0;          // meters
  double free_flow_speed = 0.0; // m/s

  double free_flow_time() const { return length / free_flow_speed; }
  NodeId other(NodeId w) const { return w == u ? v : u; }
};

struct Neighbor {
  NodeId node = 0;
  std::size_t edge = 0;
};

// Undirected road graph with dense 0-based node ids. Immutable once built.
class RoadNetwork {
 public:
  RoadNetwork() = default;

  // Validates and builds. Throws DatasetError on bad references, self loops,
  // non-positive lengths/speeds, conflicting duplicates or a disconnected graph.
  // Exact duplicate undirected edges are collapsed and reported in `warnings`.
  static RoadNetwork build(std::vector<Node> nodes, std::vector<Edge> edges,
                           std::vector<std::string>* warnings = nullptr);

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Node& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  const Edge& edge(std::size_t e) const { return edges_.at(e); }

  // Sorted by neighbor id.
  std::span<const Neighbor> neighbors(NodeId id) const {
    return adjacency_.at(static_cast<std::size_t>(id));
  }
  std::size_t degree(NodeId id) const { return neighbors(id).size(); }
  std::size_t max_degree() const;

  std::optional<std::size_t> find_edge(NodeId a, NodeId b) const;
  bool adjacent(NodeId a, NodeId b) const { return find_edge(a, b).has_value(); }
  bool contains(NodeId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < nodes_.size();
  }

  std::optional<NodeId> dense_id(long long original_id) const;
  long long original_id(NodeId id) const { return node(id).original_id; }

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::unordered_map<long long, NodeId> original_to_dense_;
};

struct DemandEntry {
  NodeId origin = 0;
  NodeId destination = 0;
  double flow = 0.0; // trips/hour
};

// Origin-destination demand. Keeps the sparse entry list (sorted by origin,
// destination) and a dense copy for O(1) lookup.
class DemandMatrix {
 public:
  DemandMatrix() = default;
  // Rejects negative flows, self-loop pairs, unknown nodes and duplicate pairs.
  DemandMatrix(std::size_t node_count, std::vector<DemandEntry> entries);

  std::size_t node_count() const { return n_; }
  std::size_t pair_count() const { return entries_.size(); }
  const std::vector<DemandEntry>& entries() const { return entries_; }

  double at(NodeId i, NodeId j) const {
    return dense_[static_cast<std::size_t>(i) * n_ + static_cast<std::size_t>(j)];
  }
  double row_sum(NodeId i) const { return row_sums_.at(static_cast<std::size_t>(i)); }
  double column_sum(NodeId j) const { return col_sums_.at(static_cast<std::size_t>(j)); }
  const std::vector<double>& row_sums() const { return row_sums_; }
  const std::vector<double>& column_sums() const { return col_sums_; }

  double total() const { return total_; }
  // max(max_i sum_j D_ij, max_j sum_i D_ij); feature scaling denominator.
  double global_reference() const { return global_reference_; }

  DemandMatrix scaled(double factor) const;

 private:
  std::size_t n_ = 0;
  std::vector<DemandEntry> entries_;
  std::vector<double> dense_;
  std::vector<double> row_sums_;
  std::vector<double> col_sums_;
  double total_ = 0.0;
  double global_reference_ = 0.0;
};

struct Marginals {
  std::vector<double> out; // d_out(i) = sum_j D_ij
  std::vector<double> in;  // d_in(i)  = sum_j D_ji
};

Marginals od_marginals(const DemandMatrix& demand);

// A simple path through the road graph, operated in both directions.
struct TransitRoute {
  std::vector<NodeId> nodes;
  // Loaded existing routes: exempt from the design length cap.
  bool reference = false;

  std::size_t size() const { return nodes.size(); }
};

double route_length_m(const TransitRoute& route, const RoadNetwork& net);
// Edge indices along the route, in travel order.
std::vector<std::size_t> route_edges(const TransitRoute& route, const RoadNetwork& net);

struct TransitNetwork {
  std::vector<TransitRoute> routes;
  std::vector<int> stop_spacing; // per route, >= 1
  std::vector<int> frequencies;  // veh/hour/direction; empty until assigned

  static TransitNetwork from_routes(std::vector<TransitRoute> routes);

  std::size_t route_count() const { return routes.size(); }
  bool has_frequencies() const {
    return !routes.empty() && frequencies.size() == routes.size();
  }
  // Positions (indices into route.nodes) of the stops of route k:
  // 0, s, 2s, ... up to floor((len - 1) / s) * s.
  std::vector<std::size_t> stop_positions(std::size_t k) const;
  std::vector<NodeId> stops(std::size_t k) const;
};

enum class RouteViolationKind { UnknownNode, NotAdjacent, RepeatedNode, TooShort, TooLong };

struct RouteViolation {
  RouteViolationKind kind;
  std::size_t position = 0; // index into the node sequence
  std::string message;
};

struct RouteVerdict {
  std::vector<RouteViolation> violations;
  bool valid() const { return violations.empty(); }
  bool has(RouteViolationKind kind) const;
};

// Checks adjacency, intra-route repetition and kMinRouteNodes <= |route| <= max_nodes.
RouteVerdict validate_route(std::span<const NodeId> route, const RoadNetwork& net,
                            int max_nodes);

struct Dataset {
  RoadNetwork network;
  DemandMatrix demand;
  std::vector<TransitRoute> existing_routes;
  std::optional<NodeId> transit_center;
  std::vector<std::string> warnings;
};

struct DatasetPaths {
  std::filesystem::path nodes;
  std::filesystem::path edges;
  std::filesystem::path demand;
  std::optional<std::filesystem::path> routes; // absent file -> no existing routes

  // nodes.csv, edges.csv, demand.csv, routes.json inside `dir`.
  static DatasetPaths in_directory(const std::filesystem::path& dir);
};

Dataset load_dataset(const DatasetPaths& paths);

// Parsers over in-memory text, used by load_dataset. `source` labels errors.
std::vector<Node> parse_nodes_csv(const std::string& text, const std::string& source);
std::vector<Edge> parse_edges_csv(const std::string& text, const std::string& source,
                                  const std::unordered_map<long long, NodeId>& ids);
std::vector<DemandEntry> parse_demand_csv(const std::string& text, const std::string& source,
                                          const RoadNetwork& net);

struct RoutesDocument {
  std::vector<TransitRoute> routes;
  std::optional<NodeId> transit_center;
};
RoutesDocument parse_routes_json(const std::string& text, const std::string& source,
                                 const RoadNetwork& net);

} // namespace trndp
