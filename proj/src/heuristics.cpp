#include "trndp/heuristics.hpp"

#include <stdexcept>

namespace trndp {

namespace {
constexpr std::uint64_t kWalkStream = 0x9E3779B97F4A7C15ULL;
}

const char* heuristic_name(HeuristicKind k) {
  switch (k) {
    case HeuristicKind::RandomWalk: return "random_walk";
    case HeuristicKind::GreedyDemand: return "greedy_demand";
    case HeuristicKind::GreedyShortestPath: return "greedy_shortest_path";
    case HeuristicKind::RealWorld: return "real_world";
  }
  return "?";
}

HeuristicKind parse_heuristic(const std::string& name) {
  for (auto k : {HeuristicKind::RandomWalk, HeuristicKind::GreedyDemand, HeuristicKind::GreedyShortestPath,
                 HeuristicKind::RealWorld})
    if (name == heuristic_name(k)) return k;
  throw std::invalid_argument("unknown method '" + name +
                              "' (expected random_walk, greedy_demand, greedy_shortest_path or real_world)");
}

std::vector<double> score_candidates(HeuristicKind kind, const EpisodeState& state, const DemandMatrix& demand) {
  const auto& cands = state.candidates();
  std::vector<double> scores(cands.size(), 0.0);
  if (kind == HeuristicKind::GreedyDemand) {
    for (std::size_t c = 0; c < cands.size(); ++c)
      for (auto j : state.current()) scores[c] += demand.at(cands[c], j) + demand.at(j, cands[c]);
  } else if (kind == HeuristicKind::GreedyShortestPath) {
    const auto& net = state.network();
    const NodeId frontier = *state.frontier();
    for (std::size_t c = 0; c < cands.size(); ++c) scores[c] = -net.edge(*net.find_edge(frontier, cands[c])).length;
  }
  return scores;
}

NodeId pick_best(const EpisodeState& state, std::span<const double> scores) {
  const auto& cands = state.candidates();
  if (cands.empty()) throw std::logic_error("no candidate to pick");
  std::size_t best = 0;
  for (std::size_t c = 1; c < cands.size(); ++c)
    if (scores[c] > scores[best] || (scores[c] == scores[best] && cands[c] < cands[best])) best = c;
  return cands[best];
}

HeuristicPolicy::HeuristicPolicy(HeuristicKind kind, std::uint64_t seed) : kind_(kind), rng_(seed ^ kWalkStream) {
  if (kind == HeuristicKind::RealWorld) throw std::invalid_argument("real_world is a fixed design, not a policy");
}

NodeId HeuristicPolicy::choose(const EpisodeState& state, const DemandMatrix& demand) {
  const auto& cands = state.candidates();
  if (cands.empty()) throw std::logic_error("no candidate to pick");
  if (kind_ == HeuristicKind::RandomWalk) return cands[rng_() % cands.size()];
  const auto scores = score_candidates(kind_, state, demand);
  return pick_best(state, scores);
}

TransitNetwork construct(const HeuristicConfig& cfg, const RoadNetwork& net, const DemandMatrix& demand,
                         std::span<const TransitRoute> existing) {
  if (cfg.kind == HeuristicKind::RealWorld) {
    if (existing.empty()) throw std::invalid_argument("real_world needs the dataset's existing routes");
    return TransitNetwork::from_routes({existing.begin(), existing.end()});
  }
  StartNodeSampler starts(cfg.init, cfg.hub, net.node_count(), cfg.seed);
  HeuristicPolicy policy(cfg.kind, cfg.seed);
  EpisodeState state(net, cfg.route_count, cfg.max_route_nodes);
  while (!state.episode_done()) {
    state.start_route(starts.next());
    while (!state.route_complete()) state.extend(policy.choose(state, demand));
    state.finish_route();
  }
  return TransitNetwork::from_routes(state.completed());
}

} // namespace trndp
