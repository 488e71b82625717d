#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "trndp/design_env.hpp"
#include "trndp/network_model.hpp"

namespace trndp {

enum class HeuristicKind { RandomWalk, GreedyDemand, GreedyShortestPath, RealWorld };

const char* heuristic_name(HeuristicKind k);
HeuristicKind parse_heuristic(const std::string& name);

struct HeuristicConfig {
  HeuristicKind kind = HeuristicKind::RandomWalk;
  std::uint64_t seed = 0;
  int route_count = 16;
  int max_route_nodes = 14;
  InitScheme init = InitScheme::TransitCenter;
  std::optional<NodeId> hub;
};

// Scores aligned with state.candidates(); higher is better. Random walk
// scores are all zero (the choice is drawn instead).
std::vector<double> score_candidates(HeuristicKind kind, const EpisodeState& state, const DemandMatrix& demand);

// Highest score, ties to the lowest node id. Requires a non-empty candidate set.
NodeId pick_best(const EpisodeState& state, std::span<const double> scores);

// A policy over the environment's candidate sets: picks the next node.
class HeuristicPolicy {
 public:
  HeuristicPolicy(HeuristicKind kind, std::uint64_t seed);
  NodeId choose(const EpisodeState& state, const DemandMatrix& demand);

 private:
  HeuristicKind kind_;
  std::mt19937_64 rng_;
};

// Builds K routes with the same start nodes, candidate sets and termination
// rules as the environment. RealWorld returns `existing` unchanged.
TransitNetwork construct(const HeuristicConfig& cfg, const RoadNetwork& net, const DemandMatrix& demand,
                         std::span<const TransitRoute> existing = {});

} // namespace trndp
