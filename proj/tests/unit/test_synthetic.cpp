#include <cmath>
#include <queue>

#include "doctest.h"
#include "temp_dir.hpp"
#include "trndp/synthetic.hpp"

using namespace trndp;

namespace {

bool connected(const RoadNetwork& net) {
  std::vector<char> seen(net.node_count(), 0);
  std::queue<NodeId> q;
  q.push(0);
  seen[0] = 1;
  std::size_t count = 1;
  while (!q.empty()) {
    const auto v = q.front();
    q.pop();
    for (const auto& nb : net.neighbors(v))
      if (!seen[static_cast<std::size_t>(nb.node)]) {
        seen[static_cast<std::size_t>(nb.node)] = 1;
        ++count;
        q.push(nb.node);
      }
  }
  return count == net.node_count();
}

} // namespace

TEST_CASE("default surrogate has the target counts") {
  const auto ds = make_synthetic_city({});
  CHECK(ds.network.node_count() == 143);
  CHECK(ds.network.edge_count() == 243);
  CHECK(ds.demand.pair_count() == 5738);
  CHECK(ds.existing_routes.size() == 16);
  REQUIRE(ds.transit_center);
  CHECK(connected(ds.network));
  for (const auto& e : ds.demand.entries()) {
    CHECK(e.flow >= 1.0);
    CHECK(e.flow == std::floor(e.flow));
    CHECK(e.origin != e.destination);
  }
  for (const auto& r : ds.existing_routes) {
    CHECK(validate_route(r.nodes, ds.network, 60).valid());
    CHECK(r.nodes.front() == *ds.transit_center);
  }
}

TEST_CASE("generation is deterministic and seed dependent") {
  SyntheticCityConfig cfg;
  cfg.nodes = 40;
  cfg.edges = 60;
  cfg.od_pairs = 300;
  cfg.reference_routes = 4;
  const auto a = make_synthetic_city(cfg);
  const auto b = make_synthetic_city(cfg);
  CHECK(a.demand.entries().size() == b.demand.entries().size());
  for (std::size_t i = 0; i < a.network.edge_count(); ++i) CHECK(a.network.edge(i).length == b.network.edge(i).length);
  cfg.seed = 2;
  const auto c = make_synthetic_city(cfg);
  bool differs = false;
  for (std::size_t i = 0; i < std::min(a.network.node_count(), c.network.node_count()); ++i)
    differs |= a.network.node(static_cast<NodeId>(i)).x != c.network.node(static_cast<NodeId>(i)).x;
  CHECK(differs);
}

TEST_CASE("written datasets load back unchanged") {
  SyntheticCityConfig cfg;
  cfg.nodes = 30;
  cfg.edges = 45;
  cfg.od_pairs = 200;
  cfg.reference_routes = 3;
  const auto ds = make_synthetic_city(cfg);
  TempDir dir;
  write_dataset(ds, dir.path);
  const auto back = load_dataset(DatasetPaths::in_directory(dir.path));
  CHECK(back.network.node_count() == ds.network.node_count());
  CHECK(back.network.edge_count() == ds.network.edge_count());
  CHECK(back.demand.total() == ds.demand.total());
  REQUIRE(back.existing_routes.size() == ds.existing_routes.size());
  for (std::size_t k = 0; k < ds.existing_routes.size(); ++k)
    CHECK(back.existing_routes[k].nodes == ds.existing_routes[k].nodes);
  CHECK(back.transit_center == ds.transit_center);
}
