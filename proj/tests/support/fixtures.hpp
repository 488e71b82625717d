#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "trndp/network_model.hpp"

namespace fixtures {

using trndp::DemandEntry;
using trndp::DemandMatrix;
using trndp::Edge;
using trndp::Node;
using trndp::NodeId;
using trndp::RoadNetwork;

inline RoadNetwork path_graph(int n, double length = 1000.0, double speed = 16.67) {
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) nodes.push_back({i, 100.0 * i, 0.0});
  for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, length, speed});
  return RoadNetwork::build(nodes, edges);
}

inline RoadNetwork grid_graph(int rows, int cols, double block = 200.0) {
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) nodes.push_back({r * cols + c, c * block, r * block});
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int i = r * cols + c;
      if (c + 1 < cols) edges.push_back({i, i + 1, block, 12.0});
      if (r + 1 < rows) edges.push_back({i, i + cols, block, 12.0});
    }
  return RoadNetwork::build(nodes, edges);
}

inline std::uint64_t draw(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

// Connected random graph: a random spanning tree plus extra edges.
inline RoadNetwork random_graph(std::mt19937_64& rng, int n, int extra_edges) {
  std::vector<Node> nodes;
  for (int i = 0; i < n; ++i)
    nodes.push_back({i, static_cast<double>(draw(rng, 2000)), static_cast<double>(draw(rng, 2000))});
  std::vector<std::pair<int, int>> pairs;
  for (int i = 1; i < n; ++i) pairs.emplace_back(static_cast<int>(draw(rng, static_cast<std::uint64_t>(i))), i);
  for (int tries = 0; tries < 20 * extra_edges && static_cast<int>(pairs.size()) < n - 1 + extra_edges; ++tries) {
    int a = static_cast<int>(draw(rng, static_cast<std::uint64_t>(n)));
    int b = static_cast<int>(draw(rng, static_cast<std::uint64_t>(n)));
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    bool dup = false;
    for (auto [u, v] : pairs)
      if (std::min(u, v) == a && std::max(u, v) == b) dup = true;
    if (!dup) pairs.emplace_back(a, b);
  }
  std::vector<Edge> edges;
  for (auto [u, v] : pairs)
    edges.push_back({u, v, 100.0 + static_cast<double>(draw(rng, 900)), 8.0 + static_cast<double>(draw(rng, 10))});
  return RoadNetwork::build(nodes, edges);
}

// Integer flows so that sums are exact in any order.
inline DemandMatrix random_demand(std::mt19937_64& rng, std::size_t n, double density, int max_flow = 50) {
  std::vector<DemandEntry> entries;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (static_cast<double>(draw(rng, 1000)) / 1000.0 >= density) continue;
      entries.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j), static_cast<double>(1 + draw(rng, static_cast<std::uint64_t>(max_flow)))});
    }
  return DemandMatrix(n, std::move(entries));
}

// Random simple path of up to max_nodes nodes starting anywhere.
inline std::vector<NodeId> random_route(std::mt19937_64& rng, const RoadNetwork& net, int max_nodes) {
  std::vector<NodeId> route{static_cast<NodeId>(draw(rng, net.node_count()))};
  while (static_cast<int>(route.size()) < max_nodes) {
    std::vector<NodeId> next;
    for (const auto& nb : net.neighbors(route.back()))
      if (std::find(route.begin(), route.end(), nb.node) == route.end()) next.push_back(nb.node);
    if (next.empty()) break;
    route.push_back(next[draw(rng, next.size())]);
  }
  return route;
}

} // namespace fixtures
