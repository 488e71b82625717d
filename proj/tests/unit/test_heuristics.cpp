#include <random>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "trndp/heuristics.hpp"

using namespace trndp;

namespace {

// Hub 0 with four spokes of different lengths.
RoadNetwork star() {
  std::vector<Node> nodes{{0, 0, 0}, {1, 1, 0}, {2, 0, 1}, {3, -1, 0}, {4, 0, -1}};
  std::vector<Edge> edges{{0, 1, 400, 10}, {0, 2, 300, 10}, {0, 3, 900, 10}, {0, 4, 300, 10}};
  return RoadNetwork::build(nodes, edges);
}

} // namespace

TEST_CASE("names round-trip") {
  for (auto k : {HeuristicKind::RandomWalk, HeuristicKind::GreedyDemand, HeuristicKind::GreedyShortestPath,
                 HeuristicKind::RealWorld})
    CHECK(parse_heuristic(heuristic_name(k)) == k);
  CHECK_THROWS_AS(parse_heuristic("genetic"), std::invalid_argument);
}

TEST_CASE("star: greedy demand follows the heaviest spoke, shortest path the nearest") {
  const auto net = star();
  const DemandMatrix demand(5, {{0, 3, 50.0}, {1, 0, 20.0}, {0, 2, 10.0}, {4, 0, 49.0}});
  HeuristicConfig cfg;
  cfg.route_count = 1;
  cfg.max_route_nodes = 3;
  cfg.hub = 0;
  cfg.kind = HeuristicKind::GreedyDemand;
  CHECK(construct(cfg, net, demand).routes[0].nodes == std::vector<NodeId>{0, 3});
  cfg.kind = HeuristicKind::GreedyShortestPath;
  // Nodes 2 and 4 tie at 300 m; the lower id wins.
  CHECK(construct(cfg, net, demand).routes[0].nodes == std::vector<NodeId>{0, 2});
}

TEST_CASE("greedy choices agree with the demand oracle; ties go to the lowest id") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 60; ++trial) {
    const auto net = fixtures::random_graph(rng, 12, 8);
    const auto demand = fixtures::random_demand(rng, 12, 0.2, 5);
    EpisodeState st(net, 3, 6);
    HeuristicPolicy policy(HeuristicKind::GreedyDemand, 0);
    while (!st.episode_done()) {
      st.start_route(static_cast<NodeId>(rng() % 12));
      while (!st.route_complete()) {
        const auto cands = oracle::candidates(net, st.current(), 6);
        NodeId best = cands.front();
        for (auto c : cands)
          if (oracle::demand_score(demand, st.current(), c) > oracle::demand_score(demand, st.current(), best))
            best = c;
        const auto got = policy.choose(st, demand);
        CHECK(got == best);
        st.extend(got);
      }
      st.finish_route();
    }
  }
}

TEST_CASE("constructed designs are valid and reproducible") {
  std::mt19937_64 rng(4);
  const auto net = fixtures::random_graph(rng, 30, 25);
  const auto demand = fixtures::random_demand(rng, 30, 0.2, 20);
  for (auto kind : {HeuristicKind::RandomWalk, HeuristicKind::GreedyDemand, HeuristicKind::GreedyShortestPath})
    for (auto init : {InitScheme::Random, InitScheme::TransitCenter}) {
      HeuristicConfig cfg;
      cfg.kind = kind;
      cfg.init = init;
      cfg.hub = 7;
      cfg.route_count = 6;
      cfg.max_route_nodes = 8;
      cfg.seed = 99;
      const auto a = construct(cfg, net, demand);
      const auto b = construct(cfg, net, demand);
      REQUIRE(a.route_count() == 6);
      for (std::size_t k = 0; k < 6; ++k) {
        CHECK(a.routes[k].nodes == b.routes[k].nodes);
        CHECK(validate_route(a.routes[k].nodes, net, 8).valid());
        if (init == InitScheme::TransitCenter) CHECK(a.routes[k].nodes.front() == 7);
        // A route stops short only at a dead end.
        if (a.routes[k].size() < 8)
          CHECK(oracle::candidates(net, a.routes[k].nodes, 8).empty());
      }
    }
}

TEST_CASE("random walks differ across seeds") {
  const auto net = fixtures::grid_graph(6, 6);
  const DemandMatrix demand(36, {});
  HeuristicConfig cfg;
  cfg.init = InitScheme::Random;
  cfg.route_count = 4;
  cfg.max_route_nodes = 10;
  std::set<std::vector<NodeId>> seen;
  for (std::uint64_t s = 0; s < 8; ++s) {
    cfg.seed = s;
    seen.insert(construct(cfg, net, demand).routes[0].nodes);
  }
  CHECK(seen.size() > 4);
}

TEST_CASE("real world returns the existing design") {
  const auto net = fixtures::path_graph(4);
  const DemandMatrix demand(4, {});
  HeuristicConfig cfg;
  cfg.kind = HeuristicKind::RealWorld;
  CHECK_THROWS_AS(construct(cfg, net, demand), std::invalid_argument);
  const std::vector<TransitRoute> existing{{{0, 1, 2, 3}}, {{2, 1}}};
  const auto tn = construct(cfg, net, demand, existing);
  CHECK(tn.route_count() == 2);
  CHECK(tn.routes[1].nodes == std::vector<NodeId>{2, 1});
  CHECK_THROWS_AS(HeuristicPolicy(HeuristicKind::RealWorld, 0), std::invalid_argument);
}

TEST_CASE("small star: argmax of the demand score") {
  std::vector<Node> nodes{{0, 0, 0}, {1, 1, 0}, {2, 0, 1}, {3, -1, 0}};
  std::vector<Edge> edges{{0, 1, 100, 10}, {0, 2, 100, 10}, {0, 3, 100, 10}};
  const auto net = RoadNetwork::build(nodes, edges);
  const DemandMatrix demand(4, {{1, 0, 10.0}, {2, 0, 1.0}});
  EpisodeState st(net, 1, 3);
  st.start_route(0);
  CHECK(HeuristicPolicy(HeuristicKind::GreedyDemand, 0).choose(st, demand) == 1);
  const auto scores = score_candidates(HeuristicKind::GreedyDemand, st, demand);
  CHECK(scores == std::vector<double>{10.0, 1.0, 0.0});

  const DemandMatrix empty(4, {});
  for (double s : score_candidates(HeuristicKind::GreedyDemand, st, empty)) CHECK(s == 0.0);
  CHECK(HeuristicPolicy(HeuristicKind::GreedyDemand, 0).choose(st, empty) == 1);
}

TEST_CASE("a single candidate is chosen whatever the kind") {
  const auto net = fixtures::path_graph(3);
  const DemandMatrix demand(3, {{2, 0, 5.0}});
  for (auto kind : {HeuristicKind::RandomWalk, HeuristicKind::GreedyDemand, HeuristicKind::GreedyShortestPath}) {
    EpisodeState st(net, 1, 3);
    st.start_route(0);
    CHECK(HeuristicPolicy(kind, 3).choose(st, demand) == 1);
  }
}

TEST_CASE("tie-breaking does not depend on edge order") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const auto net = fixtures::random_graph(rng, 10, 8);
    auto edges = net.edges();
    std::shuffle(edges.begin(), edges.end(), rng);
    for (auto& e : edges) e.length = 250.0; // every candidate ties
    auto original = net.edges();
    for (auto& e : original) e.length = 250.0;
    const auto a = RoadNetwork::build(net.nodes(), original);
    const auto b = RoadNetwork::build(net.nodes(), edges);
    const DemandMatrix demand(10, {});
    HeuristicConfig cfg;
    cfg.init = InitScheme::Random;
    cfg.seed = static_cast<std::uint64_t>(trial);
    cfg.route_count = 3;
    cfg.max_route_nodes = 6;
    for (auto kind : {HeuristicKind::GreedyDemand, HeuristicKind::GreedyShortestPath}) {
      cfg.kind = kind;
      const auto ra = construct(cfg, a, demand), rb = construct(cfg, b, demand);
      for (std::size_t k = 0; k < 3; ++k) CHECK(ra.routes[k].nodes == rb.routes[k].nodes);
    }
  }
}

TEST_CASE("shortest-path designs are shorter than seed-matched random walks") {
  std::mt19937_64 rng(1234);
  int shorter = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto net = fixtures::random_graph(rng, 40, 40);
    const DemandMatrix demand(40, {});
    HeuristicConfig cfg;
    cfg.init = InitScheme::Random;
    cfg.seed = static_cast<std::uint64_t>(trial);
    cfg.route_count = 4;
    cfg.max_route_nodes = 8;
    cfg.kind = HeuristicKind::GreedyShortestPath;
    const auto sp = construct(cfg, net, demand);
    cfg.kind = HeuristicKind::RandomWalk;
    const auto rw = construct(cfg, net, demand);
    double lsp = 0, lrw = 0;
    for (const auto& r : sp.routes) lsp += route_length_m(r, net);
    for (const auto& r : rw.routes) lrw += route_length_m(r, net);
    shorter += lsp <= lrw;
  }
  CHECK(shorter >= 90);
}
