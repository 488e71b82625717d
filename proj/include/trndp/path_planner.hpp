#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "trndp/network_model.hpp"

namespace trndp {

enum class Direction : std::uint8_t { Forward = 0, Reverse = 1 };

inline const char* direction_name(Direction d) { return d == Direction::Forward ? "forward" : "reverse"; }

// One direction of one route, in travel order.
struct DirectionalRoute {
  std::size_t route = 0;
  Direction direction = Direction::Forward;
  std::vector<NodeId> nodes;
  std::vector<std::size_t> edges;          // edges[i] joins nodes[i] and nodes[i + 1]
  std::vector<double> arrival_offset;      // cumulative free-flow seconds to nodes[i]
  std::vector<std::size_t> stop_positions; // indices into nodes, ascending

  std::size_t stop_count() const { return stop_positions.size(); }
  NodeId stop_node(std::size_t stop_index) const { return nodes[stop_positions[stop_index]]; }
  // Free-flow seconds between two stops of this direction.
  double run_time(std::size_t from_stop, std::size_t to_stop) const {
    return arrival_offset[stop_positions[to_stop]] - arrival_offset[stop_positions[from_stop]];
  }
};

// Both directions of every route. [k][0] is forward, [k][1] reverse.
std::vector<std::array<DirectionalRoute, 2>> directional_routes(const RoadNetwork& net,
                                                                const TransitNetwork& tn);

struct Leg {
  std::size_t route = 0;
  Direction direction = Direction::Forward;
  std::size_t board_stop = 0;  // index into the direction's stop list
  std::size_t alight_stop = 0; // index into the direction's stop list, > board_stop
  NodeId board_node = 0;
  NodeId alight_node = 0;
};

struct LegPlan {
  std::vector<Leg> legs;
  double cost = 0.0; // generalized seconds: expected waits + in-vehicle time
  std::size_t transfers() const { return legs.empty() ? 0 : legs.size() - 1; }
};

// Minimum generalized-cost leg plans over a stop graph. Boarding a route costs
// half its headway; riding costs free-flow link time plus one dwell per stop
// passed through without alighting.
class PathPlanner {
 public:
  // Uses tn.frequencies, which must be assigned.
  PathPlanner(const RoadNetwork& net, const TransitNetwork& tn, double dwell_time);

  // nullptr when the pair is not connected by the transit network.
  const LegPlan* plan(NodeId origin, NodeId destination) const;
  double cost(NodeId origin, NodeId destination) const {
    const auto* p = plan(origin, destination);
    return p ? p->cost : std::numeric_limits<double>::infinity();
  }

  double boarding_cost(std::size_t route) const { return boarding_cost_.at(route); }
  double dwell_time() const { return dwell_; }
  const std::vector<std::array<DirectionalRoute, 2>>& directions() const { return directions_; }
  bool is_stop(NodeId v) const { return stop_slot_.at(static_cast<std::size_t>(v)) >= 0; }

 private:
  void solve_from(std::size_t source_slot);

  std::size_t n_ = 0;
  double dwell_ = 0.0;
  std::vector<double> boarding_cost_;
  std::vector<std::array<DirectionalRoute, 2>> directions_;
  std::vector<int> stop_slot_;        // road node -> compact stop index, -1 if not a stop
  std::vector<NodeId> stop_nodes_;    // compact stop index -> road node
  std::vector<int> plan_index_;       // [source slot * stops + target slot] -> plans_ index or -1
  std::vector<LegPlan> plans_;

  struct Arc {
    std::size_t to;
    double cost;
  };
  struct RideVertex {
    std::size_t route;
    Direction direction;
    std::size_t stop_index;
    bool departure;
  };
  std::vector<std::vector<Arc>> arcs_;
  std::vector<RideVertex> ride_info_; // indexed by vertex - 2 * stops
};

} // namespace trndp
