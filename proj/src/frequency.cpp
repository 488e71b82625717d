#include "trndp/frequency.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "trndp/path_planner.hpp"

namespace trndp {

int frequency_for_load(double max_normalized_load, double comfort_threshold, int capacity) {
  const double ratio = max_normalized_load / (comfort_threshold * capacity);
  return std::max(1, static_cast<int>(std::ceil(ratio - 1e-9)));
}

FrequencyAssignment assign_frequencies(const RoadNetwork& net, const TransitNetwork& tn,
                                       const DemandMatrix& demand, const FrequencyConfig& cfg) {
  if (!(cfg.comfort_threshold > 0.0 && cfg.comfort_threshold <= 1.0))
    throw std::invalid_argument("comfort threshold must be in (0, 1]");
  if (cfg.bus_capacity <= 0) throw std::invalid_argument("bus capacity must be positive");
  if (tn.route_count() == 0) return {};

  TransitNetwork provisional = tn;
  provisional.frequencies.assign(tn.route_count(), kProvisionalFrequency);
  const PathPlanner planner(net, provisional, cfg.dwell_time);

  FrequencyAssignment out;
  auto& profile = out.profile;
  // Direct and transfer trips alike load every segment of every leg they ride.
  for (const auto& e : demand.entries()) {
    const double flow = cfg.modal_split * e.flow;
    if (flow <= 0.0) continue;
    const LegPlan* plan = planner.plan(e.origin, e.destination);
    if (!plan) continue;
    for (const auto& leg : plan->legs) {
      const auto& dr = planner.directions()[leg.route][static_cast<std::size_t>(leg.direction)];
      const auto from = dr.stop_positions[leg.board_stop];
      const auto to = dr.stop_positions[leg.alight_stop];
      for (auto p = from; p < to; ++p) profile.segment_flow[{dr.nodes[p], dr.nodes[p + 1]}] += flow;
    }
  }

  profile.overlap.assign(net.edge_count(), 0);
  for (const auto& route : tn.routes)
    for (auto edge : route_edges(route, net)) ++profile.overlap[edge];

  for (const auto& route : tn.routes) {
    double q = 0.0;
    for (std::size_t i = 0; i + 1 < route.nodes.size(); ++i) {
      const NodeId a = route.nodes[i], b = route.nodes[i + 1];
      const double overlap = profile.overlap[*net.find_edge(a, b)];
      for (auto key : {std::make_pair(a, b), std::make_pair(b, a)}) {
        auto it = profile.segment_flow.find(key);
        if (it != profile.segment_flow.end()) q = std::max(q, it->second / overlap);
      }
    }
    profile.max_normalized_load.push_back(q);
    out.frequencies.push_back(frequency_for_load(q, cfg.comfort_threshold, cfg.bus_capacity));
  }
  return out;
}

TransitNetwork with_frequencies(const RoadNetwork& net, TransitNetwork tn, const DemandMatrix& demand,
                                const FrequencyConfig& cfg) {
  tn.frequencies = assign_frequencies(net, tn, demand, cfg).frequencies;
  return tn;
}

} // namespace trndp
