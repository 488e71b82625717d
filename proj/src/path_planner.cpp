#include "trndp/path_planner.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <utility>

namespace trndp {

std::vector<std::array<DirectionalRoute, 2>> directional_routes(const RoadNetwork& net,
                                                                const TransitNetwork& tn) {
  std::vector<std::array<DirectionalRoute, 2>> out(tn.route_count());
  for (std::size_t k = 0; k < tn.route_count(); ++k) {
    const auto& nodes = tn.routes[k].nodes;
    const auto forward_stops = tn.stop_positions(k);
    for (int d = 0; d < 2; ++d) {
      DirectionalRoute dr;
      dr.route = k;
      dr.direction = static_cast<Direction>(d);
      dr.nodes = nodes;
      if (d == 1) std::reverse(dr.nodes.begin(), dr.nodes.end());
      dr.arrival_offset.assign(dr.nodes.size(), 0.0);
      for (std::size_t i = 0; i + 1 < dr.nodes.size(); ++i) {
        auto e = net.find_edge(dr.nodes[i], dr.nodes[i + 1]);
        if (!e) throw std::invalid_argument("route " + std::to_string(k) + " uses a non-existent edge");
        dr.edges.push_back(*e);
        dr.arrival_offset[i + 1] = dr.arrival_offset[i] + net.edge(*e).free_flow_time();
      }
      const auto last = dr.nodes.empty() ? 0 : dr.nodes.size() - 1;
      for (auto p : forward_stops) dr.stop_positions.push_back(d == 0 ? p : last - p);
      std::sort(dr.stop_positions.begin(), dr.stop_positions.end());
      out[k][static_cast<std::size_t>(d)] = std::move(dr);
    }
  }
  return out;
}

PathPlanner::PathPlanner(const RoadNetwork& net, const TransitNetwork& tn, double dwell_time)
    : n_(net.node_count()), dwell_(dwell_time), directions_(directional_routes(net, tn)),
      stop_slot_(net.node_count(), -1) {
  if (!tn.has_frequencies()) throw std::invalid_argument("path planner needs assigned frequencies");
  for (std::size_t k = 0; k < tn.route_count(); ++k) {
    if (tn.frequencies[k] < 1) throw std::invalid_argument("frequencies must be >= 1");
    boarding_cost_.push_back(0.5 * 3600.0 / tn.frequencies[k]);
  }

  for (const auto& pair : directions_)
    for (std::size_t s = 0; s < pair[0].stop_count(); ++s) {
      auto v = static_cast<std::size_t>(pair[0].stop_node(s));
      if (stop_slot_[v] < 0) stop_slot_[v] = 0;
    }
  for (std::size_t v = 0; v < n_; ++v)
    if (stop_slot_[v] >= 0) {
      stop_slot_[v] = static_cast<int>(stop_nodes_.size());
      stop_nodes_.push_back(static_cast<NodeId>(v));
    }
  const std::size_t stops = stop_nodes_.size();

  // Vertices: [0, S) boarding origins, [S, 2S) alighting targets, then per
  // (route, direction, stop) an arrival vertex and a departure vertex.
  arcs_.assign(2 * stops, {});
  std::vector<std::vector<std::size_t>> arrivals_at(stops), departures_at(stops);
  for (std::size_t k = 0; k < directions_.size(); ++k) {
    for (const auto& dr : directions_[k]) {
      const std::size_t base = arcs_.size();
      const std::size_t m = dr.stop_count();
      for (std::size_t i = 0; i < m; ++i) {
        arcs_.emplace_back();
        arcs_.emplace_back();
        ride_info_.push_back({k, dr.direction, i, false});
        ride_info_.push_back({k, dr.direction, i, true});
      }
      for (std::size_t i = 0; i < m; ++i) {
        const auto slot = static_cast<std::size_t>(stop_slot_[static_cast<std::size_t>(dr.stop_node(i))]);
        const std::size_t arrive = base + 2 * i, depart = base + 2 * i + 1;
        if (i > 0) {
          arcs_[arrive].push_back({stops + slot, 0.0});
          arrivals_at[slot].push_back(arrive);
        }
        if (i + 1 < m) {
          arcs_[slot].push_back({depart, boarding_cost_[k]});
          if (i > 0) arcs_[arrive].push_back({depart, dwell_});
          arcs_[depart].push_back({base + 2 * (i + 1), dr.run_time(i, i + 1)});
          departures_at[slot].push_back(depart);
        }
      }
    }
  }
  // Transfers connect an arrival to a departure of a different route or direction
  // at the same stop, so a plan never alights and reboards the same service.
  for (std::size_t slot = 0; slot < stops; ++slot)
    for (auto a : arrivals_at[slot])
      for (auto d : departures_at[slot]) {
        const auto& ia = ride_info_[a - 2 * stops];
        const auto& id = ride_info_[d - 2 * stops];
        if (ia.route == id.route && ia.direction == id.direction) continue;
        arcs_[a].push_back({d, boarding_cost_[id.route]});
      }

  plan_index_.assign(stops * stops, -1);
  for (std::size_t s = 0; s < stops; ++s) solve_from(s);
}

void PathPlanner::solve_from(std::size_t source) {
  const std::size_t stops = stop_nodes_.size();
  const std::size_t count = arcs_.size();
  std::vector<double> dist(count, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> pred(count, count);
  std::vector<char> settled(count, 0);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[source] = 0.0;
  heap.push({0.0, source});
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (settled[u]) continue;
    settled[u] = 1;
    for (const auto& arc : arcs_[u]) {
      const double nd = d + arc.cost;
      if (nd < dist[arc.to]) {
        dist[arc.to] = nd;
        pred[arc.to] = u;
        heap.push({nd, arc.to});
      }
    }
  }

  for (std::size_t target = 0; target < stops; ++target) {
    const std::size_t tv = stops + target;
    if (target == source || !std::isfinite(dist[tv])) continue;
    LegPlan plan;
    plan.cost = dist[tv];
    std::vector<std::size_t> path;
    for (std::size_t v = tv; v != count; v = pred[v]) path.push_back(v);
    std::reverse(path.begin(), path.end());
    // path = origin, dep, arr, (dep, arr)*, ..., target
    auto info = [&](std::size_t v) -> const RideVertex& { return ride_info_[v - 2 * stops]; };
    for (std::size_t i = 1; i + 1 < path.size(); ++i) {
      const auto& cur = info(path[i]);
      if (!cur.departure) continue;
      const bool opens_leg = i == 1 || info(path[i - 1]).route != cur.route ||
                             info(path[i - 1]).direction != cur.direction;
      if (!opens_leg) continue;
      if (!plan.legs.empty()) {
        const auto& prev = info(path[i - 1]);
        plan.legs.back().alight_stop = prev.stop_index;
        plan.legs.back().alight_node = directions_[prev.route][static_cast<std::size_t>(prev.direction)].stop_node(prev.stop_index);
      }
      Leg leg;
      leg.route = cur.route;
      leg.direction = cur.direction;
      leg.board_stop = cur.stop_index;
      leg.board_node = directions_[cur.route][static_cast<std::size_t>(cur.direction)].stop_node(cur.stop_index);
      plan.legs.push_back(leg);
    }
    const auto& last = info(path[path.size() - 2]);
    plan.legs.back().alight_stop = last.stop_index;
    plan.legs.back().alight_node = stop_nodes_[target];
    plan_index_[source * stops + target] = static_cast<int>(plans_.size());
    plans_.push_back(std::move(plan));
  }
}

const LegPlan* PathPlanner::plan(NodeId origin, NodeId destination) const {
  if (origin < 0 || destination < 0 || static_cast<std::size_t>(origin) >= n_ ||
      static_cast<std::size_t>(destination) >= n_)
    return nullptr;
  const int so = stop_slot_[static_cast<std::size_t>(origin)];
  const int sd = stop_slot_[static_cast<std::size_t>(destination)];
  if (so < 0 || sd < 0) return nullptr;
  const int idx = plan_index_[static_cast<std::size_t>(so) * stop_nodes_.size() + static_cast<std::size_t>(sd)];
  return idx >= 0 ? &plans_[static_cast<std::size_t>(idx)] : nullptr;
}

} // namespace trndp
