#include "trndp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace trndp {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Draws {
  std::mt19937_64 rng;
  explicit Draws(std::uint64_t seed) : rng(seed) {}
  double uniform() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
  double normal() {
    const double u1 = std::max(uniform(), 1e-300), u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(rng() % n); }
};

bool connected_without(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                       const std::vector<char>& alive, std::size_t skip) {
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t e = 0; e < edges.size(); ++e)
    if (alive[e] && e != skip) {
      adj[edges[e].first].push_back(edges[e].second);
      adj[edges[e].second].push_back(edges[e].first);
    }
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    for (auto w : adj[v])
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        stack.push_back(w);
      }
  }
  return count == n;
}

std::vector<NodeId> shortest_path(const RoadNetwork& net, NodeId from, NodeId to) {
  const std::size_t n = net.node_count();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<NodeId> pred(n, -1);
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[static_cast<std::size_t>(from)] = 0;
  heap.push({0, from});
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[static_cast<std::size_t>(u)]) continue;
    for (const auto& nb : net.neighbors(u)) {
      const double nd = d + net.edge(nb.edge).length;
      if (nd < dist[static_cast<std::size_t>(nb.node)]) {
        dist[static_cast<std::size_t>(nb.node)] = nd;
        pred[static_cast<std::size_t>(nb.node)] = u;
        heap.push({nd, nb.node});
      }
    }
  }
  std::vector<NodeId> path;
  for (NodeId v = to; v != -1; v = pred[static_cast<std::size_t>(v)]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

} // namespace

Dataset make_synthetic_city(const SyntheticCityConfig& cfg) {
  if (cfg.nodes < 4) throw std::invalid_argument("synthetic city needs at least 4 nodes");
  Draws draws(cfg.seed);
  const std::size_t n = cfg.nodes;
  const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  const std::size_t rows = (n + cols - 1) / cols;

  std::vector<Node> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = static_cast<double>(i / cols), c = static_cast<double>(i % cols);
    nodes[i].original_id = static_cast<long long>(i + 1);
    nodes[i].x = (c + cfg.jitter * (2 * draws.uniform() - 1)) * cfg.block_m;
    nodes[i].y = (r + cfg.jitter * (2 * draws.uniform() - 1)) * cfg.block_m;
  }

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = i / cols, c = i % cols;
    if (c + 1 < cols && i + 1 < n) pairs.emplace_back(i, i + 1);
    if (r + 1 < rows && i + cols < n) pairs.emplace_back(i, i + cols);
  }
  // Too few grid edges: add diagonals. Too many: drop non-bridges.
  for (std::size_t i = 0; pairs.size() < cfg.edges && i < n; ++i) {
    const std::size_t r = i / cols, c = i % cols;
    if (c + 1 < cols && r + 1 < rows && i + cols + 1 < n) pairs.emplace_back(i, i + cols + 1);
  }
  std::vector<char> alive(pairs.size(), 1);
  std::size_t live = pairs.size();
  for (std::size_t attempts = 0; live > cfg.edges && attempts < 50 * pairs.size(); ++attempts) {
    const auto e = draws.below(pairs.size());
    if (!alive[e] || !connected_without(n, pairs, alive, e)) continue;
    alive[e] = 0;
    --live;
  }

  std::vector<Edge> edges;
  for (std::size_t e = 0; e < pairs.size(); ++e) {
    if (!alive[e]) continue;
    const auto& a = nodes[pairs[e].first];
    const auto& b = nodes[pairs[e].second];
    const double straight = std::hypot(a.x - b.x, a.y - b.y);
    const bool arterial = (pairs[e].first / cols) % 4 == 0 || (pairs[e].first % cols) % 4 == 0;
    Edge edge;
    edge.u = static_cast<NodeId>(pairs[e].first);
    edge.v = static_cast<NodeId>(pairs[e].second);
    edge.length = std::round(straight * (1.0 + 0.1 * draws.uniform()) * 10.0) / 10.0;
    edge.free_flow_speed = arterial ? 16.67 : 11.11;
    edges.push_back(edge);
  }

  Dataset ds;
  ds.network = RoadNetwork::build(nodes, edges, &ds.warnings);
  const auto& net = ds.network;

  double cx = 0, cy = 0;
  for (const auto& v : net.nodes()) {
    cx += v.x;
    cy += v.y;
  }
  cx /= static_cast<double>(n);
  cy /= static_cast<double>(n);
  NodeId hub = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::hypot(net.nodes()[i].x - cx, net.nodes()[i].y - cy) - 50.0 * static_cast<double>(net.degree(static_cast<NodeId>(i)));
    if (d < best) {
      best = d;
      hub = static_cast<NodeId>(i);
    }
  }
  ds.transit_center = hub;

  // Gravity demand with lognormal productions and attractions boosted near the hub.
  std::vector<double> produce(n), attract(n);
  const auto& hn = net.node(hub);
  for (std::size_t i = 0; i < n; ++i) {
    const double dh = std::hypot(net.nodes()[i].x - hn.x, net.nodes()[i].y - hn.y) / 1000.0;
    produce[i] = std::exp(0.6 * draws.normal());
    attract[i] = std::exp(0.9 * draws.normal()) * (1.0 + 4.0 * std::exp(-dh * dh));
  }
  struct Candidate {
    double raw;
    NodeId o, d;
  };
  std::vector<Candidate> all;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double km = std::hypot(net.nodes()[i].x - net.nodes()[j].x, net.nodes()[i].y - net.nodes()[j].y) / 1000.0;
      all.push_back({produce[i] * attract[j] / std::pow(km + 0.5, 1.5), static_cast<NodeId>(i), static_cast<NodeId>(j)});
    }
  std::stable_sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) { return a.raw > b.raw; });
  all.resize(std::min(all.size(), cfg.od_pairs));
  double raw_total = 0;
  for (const auto& c : all) raw_total += c.raw;
  std::vector<DemandEntry> entries;
  for (const auto& c : all)
    entries.push_back({c.o, c.d, std::max(1.0, std::round(c.raw / raw_total * cfg.total_demand))});
  ds.demand = DemandMatrix(n, std::move(entries));

  // Radial routes: hub to the node farthest along each compass bearing.
  for (int k = 0; k < cfg.reference_routes; ++k) {
    const double angle = 2.0 * kPi * k / cfg.reference_routes;
    const double ux = std::cos(angle), uy = std::sin(angle);
    NodeId target = hub;
    double reach = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = net.nodes()[i].x - hn.x, dy = net.nodes()[i].y - hn.y;
      const double along = dx * ux + dy * uy, across = std::abs(-dx * uy + dy * ux);
      const double score = along - 0.5 * across;
      if (static_cast<NodeId>(i) != hub && score > reach) {
        reach = score;
        target = static_cast<NodeId>(i);
      }
    }
    auto path = shortest_path(net, hub, target);
    if (path.size() > static_cast<std::size_t>(kMaxReferenceRouteNodes)) path.resize(kMaxReferenceRouteNodes);
    if (path.size() >= static_cast<std::size_t>(kMinRouteNodes)) ds.existing_routes.push_back(TransitRoute{path, true});
  }
  return ds;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& net = ds.network;
  auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    return f;
  };
  char buf[128];
  {
    auto f = open("nodes.csv");
    f << "id,x,y\n";
    for (const auto& v : net.nodes()) {
      std::snprintf(buf, sizeof buf, "%lld,%.3f,%.3f\n", v.original_id, v.x, v.y);
      f << buf;
    }
  }
  {
    auto f = open("edges.csv");
    f << "u,v,length,free_flow_speed\n";
    for (const auto& e : net.edges()) {
      std::snprintf(buf, sizeof buf, "%lld,%lld,%.3f,%.2f\n", net.original_id(e.u), net.original_id(e.v), e.length,
                    e.free_flow_speed);
      f << buf;
    }
  }
  {
    auto f = open("demand.csv");
    f << "origin,destination,flow\n";
    for (const auto& d : ds.demand.entries()) {
      std::snprintf(buf, sizeof buf, "%lld,%lld,%.6g\n", net.original_id(d.origin), net.original_id(d.destination),
                    d.flow);
      f << buf;
    }
  }
  {
    nlohmann::json doc;
    doc["routes"] = nlohmann::json::array();
    for (const auto& r : ds.existing_routes) {
      nlohmann::json ids = nlohmann::json::array();
      for (auto v : r.nodes) ids.push_back(net.original_id(v));
      doc["routes"].push_back(ids);
    }
    doc["transit_center"] = ds.transit_center ? nlohmann::json(net.original_id(*ds.transit_center)) : nlohmann::json();
    auto f = open("routes.json");
    f << doc.dump(2) << '\n';
  }
}

} // namespace trndp
