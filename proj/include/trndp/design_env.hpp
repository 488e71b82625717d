#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "trndp/network_model.hpp"
#include "trndp/simulator.hpp"

namespace trndp {

inline constexpr std::size_t kFeatureCount = 16;
inline constexpr std::size_t kEdgeFeatureCount = 2;

// Column order of the node feature matrix.
enum FeatureColumn : std::size_t {
  kX = 0,
  kY,
  kDegree,
  kDemandOut,
  kDemandIn,
  kCandidateToCurrent,
  kCandidateFromCurrent,
  kCoreToCore,
  kCoreFromCore,
  kAllToCurrent,
  kAllFromCurrent,
  kAllToCompleted,
  kAllFromCompleted,
  kInCurrentRoute,
  kCompletedRouteShare,
  kValidNext,
};

enum class InitScheme { TransitCenter, Random };

const char* init_scheme_name(InitScheme s);
InitScheme parse_init_scheme(const std::string& name);

// Route start nodes: the hub for every route, or uniform draws from V.
class StartNodeSampler {
 public:
  StartNodeSampler(InitScheme scheme, std::optional<NodeId> hub, std::size_t node_count, std::uint64_t seed);
  NodeId next();

 private:
  InitScheme scheme_;
  std::optional<NodeId> hub_;
  std::size_t n_;
  std::mt19937_64 rng_;
};

// Sequential construction of K routes, one node at a time from the frontier.
// Shared by the environment and the heuristic designers.
class EpisodeState {
 public:
  EpisodeState(const RoadNetwork& net, int route_count, int max_route_nodes);

  void start_route(NodeId start);
  // Appends a node from candidates(); throws std::invalid_argument otherwise.
  void extend(NodeId node);
  // Current route reached max length or has no admissible extension.
  bool route_complete() const;
  // Moves the current route to the completed set.
  void finish_route();

  bool episode_done() const { return static_cast<int>(completed_.size()) >= route_count_; }
  int route_count() const { return route_count_; }
  int max_route_nodes() const { return max_route_nodes_; }
  int steps() const { return steps_; }
  std::size_t route_index() const { return completed_.size(); }

  const std::vector<NodeId>& current() const { return current_; }
  std::optional<NodeId> frontier() const {
    if (current_.empty()) return std::nullopt;
    return current_.back();
  }
  // Unvisited one-hop neighbours of the frontier, ascending.
  const std::vector<NodeId>& candidates() const { return candidates_; }
  bool is_candidate(NodeId v) const;
  bool in_current(NodeId v) const { return in_current_[static_cast<std::size_t>(v)] != 0; }
  bool in_completed(NodeId v) const { return completed_count_[static_cast<std::size_t>(v)] > 0; }
  int completed_count(NodeId v) const { return completed_count_[static_cast<std::size_t>(v)]; }

  const std::vector<TransitRoute>& completed() const { return completed_; }
  // Completed routes plus the current one when it is non-empty.
  std::vector<TransitRoute> built() const;

  const RoadNetwork& network() const { return *net_; }

 private:
  void refresh_candidates();

  const RoadNetwork* net_;
  int route_count_;
  int max_route_nodes_;
  int steps_ = 0;
  std::vector<NodeId> current_;
  std::vector<NodeId> candidates_;
  std::vector<char> in_current_;
  std::vector<int> completed_count_;
  std::vector<TransitRoute> completed_;
};

// n x 16 row-major feature matrix for the current state.
std::vector<double> build_features(const EpisodeState& state, const RoadNetwork& net, const DemandMatrix& demand);

std::vector<std::uint8_t> action_mask(const EpisodeState& state);

// Softmax over the entries with mask = 1; exactly zero elsewhere. All zeros
// when nothing is admissible.
std::vector<double> masked_distribution(std::span<const double> logits, std::span<const std::uint8_t> mask);

// Demand-weighted share of OD pairs connected through the union of the routes.
double coverage_potential(std::span<const TransitRoute> routes, const DemandMatrix& demand);

// Mean over covered undirected edges of (routes on edge - 1) / max(built - 1, 1).
double route_overlap(std::span<const TransitRoute> routes, const RoadNetwork& net, std::size_t built_count);

struct ServiceScores {
  double service_rate = 0.0; // boarded / want
  double travel_time = 0.0;  // mean boarded trip seconds / 3600, clamped to 1
};
ServiceScores service_rate_and_tau(const SimulationResult& result);

struct RewardConfig {
  double coverage_partial = 40.0; // beta0
  double overlap_partial = 20.0;  // beta1
  double shortfall = 15.0;        // beta2
  double coverage_final = 30.0;   // beta3
  double service_final = 15.0;    // beta4
  double travel_final = 15.0;     // beta5
  double overlap_final = 10.0;    // beta6
  bool normalize = true;
  double epsilon = 1e-8;
  double clip = 10.0;
};

double partial_reward(const RewardConfig& cfg, double coverage, double overlap);
double final_reward(const RewardConfig& cfg, double coverage, double service_rate, double travel_time,
                    double overlap);
double shortfall_penalty(const RewardConfig& cfg, std::size_t route_nodes, int max_route_nodes);

// Online scale normalization: raw / sqrt(running variance + eps), clipped.
class RewardNormalizer {
 public:
  double apply(double raw, double epsilon, double clip);
  std::size_t count() const { return count_; }
  double mean() const { return mean_; }
  double variance() const { return count_ < 2 ? 1.0 : m2_ / static_cast<double>(count_); }

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct EnvConfig {
  int route_count = 16;
  int max_route_nodes = 14;
  InitScheme init = InitScheme::TransitCenter;
  std::optional<NodeId> hub; // required for InitScheme::TransitCenter
  SimConfig sim{};           // sim.modal_split is the scenario's alpha
  double comfort_threshold = 1.0;
  bool simulate_on_completion = true;
  RewardConfig reward{};
};

struct Observation {
  std::size_t node_count = 0;
  std::vector<double> features;                     // node_count x 16
  std::vector<std::pair<NodeId, NodeId>> edges;     // both orientations
  std::vector<double> edge_features;                // edges.size() x 2: length, speed (scaled)
  std::vector<std::uint8_t> mask;

  double feature(std::size_t node, std::size_t column) const {
    return features[node * kFeatureCount + column];
  }
};

struct StepInfo {
  double psi = 0.0;
  double omega = 0.0;
  std::optional<double> sigma;
  std::optional<double> tau;
  double raw_reward = 0.0;
  double shortfall = 0.0;
  std::size_t route_index = 0;
  std::size_t route_nodes = 0;
};

struct StepResult {
  Observation obs;
  double reward = 0.0;
  bool route_done = false;
  bool episode_done = false;
  StepInfo info;
};

class InvalidActionError : public std::invalid_argument {
 public:
  InvalidActionError(const std::string& what, std::vector<NodeId> valid)
      : std::invalid_argument(what), valid_(std::move(valid)) {}
  const std::vector<NodeId>& valid_actions() const { return valid_; }

 private:
  std::vector<NodeId> valid_;
};

// The route-construction MDP: reset/step with masking and the two-level reward.
class DesignEnv {
 public:
  DesignEnv(const RoadNetwork& net, const DemandMatrix& demand, EnvConfig cfg);

  Observation reset(std::uint64_t seed);
  // Throws InvalidActionError for masked-out actions (state is unchanged) and
  // std::logic_error before reset or after the episode ends.
  StepResult step(NodeId action);

  Observation observe() const;
  const EpisodeState& state() const;
  bool active() const { return state_.has_value() && !state_->episode_done(); }
  const EnvConfig& config() const { return cfg_; }
  EnvConfig& mutable_config() { return cfg_; }
  const RoadNetwork& network() const { return net_; }
  const DemandMatrix& demand() const { return demand_; }
  // Simulation behind the latest terminal reward.
  const std::optional<SimulationResult>& last_simulation() const { return last_sim_; }

 private:
  const RoadNetwork& net_;
  const DemandMatrix& demand_;
  EnvConfig cfg_;
  std::optional<EpisodeState> state_;
  std::optional<StartNodeSampler> starts_;
  RewardNormalizer partial_norm_;
  RewardNormalizer final_norm_;
  std::vector<std::pair<NodeId, NodeId>> directed_edges_;
  std::vector<double> edge_features_;
  std::optional<SimulationResult> last_sim_;
};

} // namespace trndp
