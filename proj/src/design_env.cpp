#include "trndp/design_env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "trndp/frequency.hpp"

namespace trndp {

const char* init_scheme_name(InitScheme s) {
  return s == InitScheme::TransitCenter ? "transit_center" : "random";
}

InitScheme parse_init_scheme(const std::string& name) {
  if (name == "transit_center" || name == "hub") return InitScheme::TransitCenter;
  if (name == "random") return InitScheme::Random;
  throw std::invalid_argument("unknown init scheme '" + name + "' (expected transit_center or random)");
}

StartNodeSampler::StartNodeSampler(InitScheme scheme, std::optional<NodeId> hub, std::size_t node_count,
                                   std::uint64_t seed)
    : scheme_(scheme), hub_(hub), n_(node_count), rng_(seed) {
  if (n_ == 0) throw std::invalid_argument("empty network");
  if (scheme_ == InitScheme::TransitCenter) {
    if (!hub_) throw std::invalid_argument("transit-center initialization needs a hub node");
    if (*hub_ < 0 || static_cast<std::size_t>(*hub_) >= n_)
      throw std::invalid_argument("hub node " + std::to_string(*hub_) + " is not in the network");
  }
}

NodeId StartNodeSampler::next() {
  if (scheme_ == InitScheme::TransitCenter) return *hub_;
  // Modulo of a 64-bit draw: the bias is negligible and the sequence is
  // identical across standard libraries.
  return static_cast<NodeId>(rng_() % n_);
}

EpisodeState::EpisodeState(const RoadNetwork& net, int route_count, int max_route_nodes)
    : net_(&net), route_count_(route_count), max_route_nodes_(max_route_nodes),
      in_current_(net.node_count(), 0), completed_count_(net.node_count(), 0) {
  if (route_count < 1) throw std::invalid_argument("route count must be >= 1");
  if (max_route_nodes < kMinRouteNodes) throw std::invalid_argument("max route length must be >= 2");
}

void EpisodeState::start_route(NodeId start) {
  if (episode_done()) throw std::logic_error("all routes are already built");
  if (!current_.empty()) throw std::logic_error("current route is not finished");
  if (!net_->contains(start)) throw std::invalid_argument("start node " + std::to_string(start) + " is not in the network");
  current_.push_back(start);
  in_current_[static_cast<std::size_t>(start)] = 1;
  refresh_candidates();
}

bool EpisodeState::is_candidate(NodeId v) const {
  return std::binary_search(candidates_.begin(), candidates_.end(), v);
}

void EpisodeState::extend(NodeId node) {
  if (current_.empty()) throw std::logic_error("no route under construction");
  if (route_complete()) throw std::logic_error("current route is complete");
  if (!is_candidate(node)) throw std::invalid_argument("node " + std::to_string(node) + " is not a valid next node");
  current_.push_back(node);
  in_current_[static_cast<std::size_t>(node)] = 1;
  ++steps_;
  refresh_candidates();
}

bool EpisodeState::route_complete() const {
  return !current_.empty() &&
         (static_cast<int>(current_.size()) >= max_route_nodes_ || candidates_.empty());
}

void EpisodeState::finish_route() {
  if (current_.empty()) throw std::logic_error("no route under construction");
  for (auto v : current_) {
    in_current_[static_cast<std::size_t>(v)] = 0;
    ++completed_count_[static_cast<std::size_t>(v)];
  }
  completed_.push_back(TransitRoute{current_, false});
  current_.clear();
  candidates_.clear();
}

std::vector<TransitRoute> EpisodeState::built() const {
  auto out = completed_;
  if (!current_.empty()) out.push_back(TransitRoute{current_, false});
  return out;
}

void EpisodeState::refresh_candidates() {
  candidates_.clear();
  if (current_.empty() || static_cast<int>(current_.size()) >= max_route_nodes_) return;
  for (const auto& nb : net_->neighbors(current_.back()))
    if (!in_current_[static_cast<std::size_t>(nb.node)]) candidates_.push_back(nb.node);
}

std::vector<double> build_features(const EpisodeState& state, const RoadNetwork& net, const DemandMatrix& demand) {
  const std::size_t n = net.node_count();
  std::vector<double> x(n * kFeatureCount, 0.0);
  if (n == 0) return x;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& node : net.nodes()) {
    xmin = std::min(xmin, node.x);
    xmax = std::max(xmax, node.x);
    ymin = std::min(ymin, node.y);
    ymax = std::max(ymax, node.y);
  }
  auto scale = [](double v, double lo, double hi) { return hi > lo ? (v - lo) / (hi - lo) : 0.0; };
  const double max_deg = static_cast<double>(net.max_degree());
  const double g = demand.global_reference();
  auto norm = [g](double v) { return g > 0.0 ? v / g : 0.0; };

  std::vector<NodeId> cur = state.current();
  std::vector<NodeId> cmp;
  std::vector<char> core(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    const auto id = static_cast<NodeId>(v);
    if (state.in_completed(id)) cmp.push_back(id);
    if (state.in_completed(id) || state.in_current(id)) core[v] = 1;
  }
  std::vector<NodeId> core_nodes;
  for (std::size_t v = 0; v < n; ++v)
    if (core[v]) core_nodes.push_back(static_cast<NodeId>(v));
  const double completed_routes = static_cast<double>(state.completed().size());

  for (std::size_t v = 0; v < n; ++v) {
    const auto i = static_cast<NodeId>(v);
    double* row = &x[v * kFeatureCount];
    const auto& node = net.node(i);
    row[kX] = scale(node.x, xmin, xmax);
    row[kY] = scale(node.y, ymin, ymax);
    row[kDegree] = max_deg > 0 ? static_cast<double>(net.degree(i)) / max_deg : 0.0;
    row[kDemandOut] = norm(demand.row_sum(i));
    row[kDemandIn] = norm(demand.column_sum(i));

    double to_cur = 0, from_cur = 0, to_cmp = 0, from_cmp = 0, to_core = 0, from_core = 0;
    for (auto j : cur) {
      to_cur += demand.at(i, j);
      from_cur += demand.at(j, i);
    }
    for (auto j : cmp) {
      to_cmp += demand.at(i, j);
      from_cmp += demand.at(j, i);
    }
    const bool candidate = state.is_candidate(i);
    if (candidate) {
      row[kCandidateToCurrent] = norm(to_cur);
      row[kCandidateFromCurrent] = norm(from_cur);
    }
    if (core[v]) {
      for (auto j : core_nodes) {
        to_core += demand.at(i, j);
        from_core += demand.at(j, i);
      }
      row[kCoreToCore] = norm(to_core);
      row[kCoreFromCore] = norm(from_core);
    }
    row[kAllToCurrent] = norm(to_cur);
    row[kAllFromCurrent] = norm(from_cur);
    row[kAllToCompleted] = norm(to_cmp);
    row[kAllFromCompleted] = norm(from_cmp);
    row[kInCurrentRoute] = state.in_current(i) ? 1.0 : 0.0;
    row[kCompletedRouteShare] =
        completed_routes > 0 ? static_cast<double>(state.completed_count(i)) / completed_routes : 0.0;
    row[kValidNext] = candidate ? 1.0 : 0.0;
  }
  // Sums over subsets of a row or column never exceed the global reference,
  // but guard against rounding.
  for (auto& value : x) value = std::clamp(value, 0.0, 1.0);
  return x;
}

std::vector<std::uint8_t> action_mask(const EpisodeState& state) {
  std::vector<std::uint8_t> mask(state.network().node_count(), 0);
  for (auto v : state.candidates()) mask[static_cast<std::size_t>(v)] = 1;
  return mask;
}

std::vector<double> masked_distribution(std::span<const double> logits, std::span<const std::uint8_t> mask) {
  if (logits.size() != mask.size()) throw std::invalid_argument("logits and mask differ in length");
  std::vector<double> p(logits.size(), 0.0);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (mask[i]) top = std::max(top, logits[i]);
  if (!std::isfinite(top)) return p;
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (mask[i]) sum += (p[i] = std::exp(logits[i] - top));
  for (auto& v : p) v /= sum;
  return p;
}

namespace {

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

} // namespace

double coverage_potential(std::span<const TransitRoute> routes, const DemandMatrix& demand) {
  const double total = demand.total();
  if (total <= 0.0) return 0.0;
  const std::size_t n = demand.node_count();
  DisjointSets sets(n);
  std::vector<char> covered(n, 0);
  for (const auto& r : routes) {
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
      covered[static_cast<std::size_t>(r.nodes[i])] = 1;
      if (i > 0) sets.unite(static_cast<std::size_t>(r.nodes[i - 1]), static_cast<std::size_t>(r.nodes[i]));
    }
  }
  double reached = 0.0;
  for (const auto& e : demand.entries()) {
    const auto o = static_cast<std::size_t>(e.origin), d = static_cast<std::size_t>(e.destination);
    if (covered[o] && covered[d] && sets.find(o) == sets.find(d)) reached += e.flow;
  }
  return std::min(1.0, reached / total);
}

double route_overlap(std::span<const TransitRoute> routes, const RoadNetwork& net, std::size_t built_count) {
  std::vector<int> n_e(net.edge_count(), 0);
  for (const auto& r : routes)
    for (auto e : route_edges(r, net)) ++n_e[e];
  long long depth = 0, covered = 0;
  for (int c : n_e)
    if (c > 0) {
      depth += c - 1;
      ++covered;
    }
  if (covered == 0) return 0.0;
  const long long denom = static_cast<long long>(std::max<std::size_t>(built_count, 2) - 1) * covered;
  return std::min(1.0, static_cast<double>(depth) / static_cast<double>(denom));
}

ServiceScores service_rate_and_tau(const SimulationResult& result) {
  ServiceScores s;
  const auto& c = result.counts;
  s.service_rate = c.want ? static_cast<double>(c.boarded) / static_cast<double>(c.want) : 0.0;
  double total = 0.0;
  std::size_t boarded = 0;
  for (const auto& p : result.passengers) {
    if (!p.boarded_once) continue;
    total += p.wait_time(result.horizon_seconds) + p.move_time(result.horizon_seconds);
    ++boarded;
  }
  s.travel_time = boarded ? std::min(total / static_cast<double>(boarded) / 3600.0, 1.0) : 0.0;
  return s;
}

double partial_reward(const RewardConfig& cfg, double coverage, double overlap) {
  return cfg.coverage_partial * coverage - cfg.overlap_partial * overlap;
}

double final_reward(const RewardConfig& cfg, double coverage, double service_rate, double travel_time,
                    double overlap) {
  return cfg.coverage_final * coverage + cfg.service_final * service_rate - cfg.travel_final * travel_time -
         cfg.overlap_final * overlap;
}

double shortfall_penalty(const RewardConfig& cfg, std::size_t route_nodes, int max_route_nodes) {
  if (static_cast<int>(route_nodes) >= max_route_nodes) return 0.0;
  return -cfg.shortfall * (1.0 - static_cast<double>(route_nodes) / max_route_nodes);
}

double RewardNormalizer::apply(double raw, double epsilon, double clip) {
  ++count_;
  const double delta = raw - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta * (raw - mean_);
  return std::clamp(raw / std::sqrt(variance() + epsilon), -clip, clip);
}

DesignEnv::DesignEnv(const RoadNetwork& net, const DemandMatrix& demand, EnvConfig cfg)
    : net_(net), demand_(demand), cfg_(std::move(cfg)) {
  if (demand_.node_count() != net_.node_count())
    throw std::invalid_argument("demand matrix size does not match the network");
  cfg_.sim.validate();

  double lmin = std::numeric_limits<double>::infinity(), lmax = -lmin, smin = lmin, smax = -lmin;
  for (const auto& e : net_.edges()) {
    lmin = std::min(lmin, e.length);
    lmax = std::max(lmax, e.length);
    smin = std::min(smin, e.free_flow_speed);
    smax = std::max(smax, e.free_flow_speed);
  }
  auto scale = [](double v, double lo, double hi) { return hi > lo ? (v - lo) / (hi - lo) : 0.0; };
  for (const auto& e : net_.edges()) {
    for (int orient = 0; orient < 2; ++orient) {
      directed_edges_.emplace_back(orient == 0 ? e.u : e.v, orient == 0 ? e.v : e.u);
      edge_features_.push_back(scale(e.length, lmin, lmax));
      edge_features_.push_back(scale(e.free_flow_speed, smin, smax));
    }
  }
}

Observation DesignEnv::reset(std::uint64_t seed) {
  starts_.emplace(cfg_.init, cfg_.hub, net_.node_count(), seed);
  state_.emplace(net_, cfg_.route_count, cfg_.max_route_nodes);
  last_sim_.reset();
  state_->start_route(starts_->next());
  return observe();
}

const EpisodeState& DesignEnv::state() const {
  if (!state_) throw std::logic_error("environment has not been reset");
  return *state_;
}

Observation DesignEnv::observe() const {
  const auto& st = state();
  Observation obs;
  obs.node_count = net_.node_count();
  obs.features = build_features(st, net_, demand_);
  obs.edges = directed_edges_;
  obs.edge_features = edge_features_;
  obs.mask = action_mask(st);
  return obs;
}

StepResult DesignEnv::step(NodeId action) {
  if (!state_) throw std::logic_error("environment has not been reset");
  auto& st = *state_;
  if (st.episode_done()) throw std::logic_error("episode is over; call reset");
  if (!st.is_candidate(action))
    throw InvalidActionError("action " + std::to_string(action) + " is masked out", st.candidates());

  st.extend(action);
  StepResult out;
  out.info.route_index = st.route_index();
  out.info.route_nodes = st.current().size();

  if (!st.route_complete()) {
    const auto built = st.built();
    out.info.psi = coverage_potential(built, demand_);
    out.info.omega = route_overlap(built, net_, built.size());
    const double raw = partial_reward(cfg_.reward, out.info.psi, out.info.omega);
    out.info.raw_reward = raw;
    out.reward = cfg_.reward.normalize ? partial_norm_.apply(raw, cfg_.reward.epsilon, cfg_.reward.clip) : raw;
    out.obs = observe();
    return out;
  }

  const std::size_t length = st.current().size();
  st.finish_route();
  const auto& routes = st.completed();
  out.route_done = true;
  out.info.psi = coverage_potential(routes, demand_);
  out.info.omega = route_overlap(routes, net_, routes.size());
  double sigma = 0.0, tau = 0.0;
  if (cfg_.simulate_on_completion) {
    FrequencyConfig fc;
    fc.modal_split = cfg_.sim.modal_split;
    fc.comfort_threshold = cfg_.comfort_threshold;
    fc.bus_capacity = cfg_.sim.bus_capacity;
    fc.dwell_time = cfg_.sim.dwell_time;
    const auto tn = with_frequencies(net_, TransitNetwork::from_routes(routes), demand_, fc);
    last_sim_ = simulate(net_, tn, demand_, cfg_.sim);
    const auto scores = service_rate_and_tau(*last_sim_);
    sigma = scores.service_rate;
    tau = scores.travel_time;
    out.info.sigma = sigma;
    out.info.tau = tau;
  }
  out.info.shortfall = shortfall_penalty(cfg_.reward, length, cfg_.max_route_nodes);
  const double raw = final_reward(cfg_.reward, out.info.psi, sigma, tau, out.info.omega) + out.info.shortfall;
  out.info.raw_reward = raw;
  out.reward = cfg_.reward.normalize ? final_norm_.apply(raw, cfg_.reward.epsilon, cfg_.reward.clip) : raw;

  out.episode_done = st.episode_done();
  if (!out.episode_done) st.start_route(starts_->next());
  out.obs = observe();
  return out;
}

} // namespace trndp
