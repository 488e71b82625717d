#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "trndp/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write a synthetic city dataset"};
  trndp::SyntheticCityConfig cfg;
  std::string out = "data/demo";
  app.add_option("--out", out, "Output directory");
  app.add_option("--nodes", cfg.nodes)->check(CLI::Range(4, 100000));
  app.add_option("--edges", cfg.edges);
  app.add_option("--pairs", cfg.od_pairs, "OD pairs kept");
  app.add_option("--demand", cfg.total_demand, "Total trips per hour");
  app.add_option("--routes", cfg.reference_routes, "Reference routes from the hub");
  app.add_option("--seed", cfg.seed);
  CLI11_PARSE(app, argc, argv);
  try {
    const auto ds = trndp::make_synthetic_city(cfg);
    trndp::write_dataset(ds, out);
    std::cout << ds.network.node_count() << " nodes, " << ds.network.edge_count() << " edges, "
              << ds.demand.pair_count() << " OD pairs, " << ds.existing_routes.size() << " routes -> " << out << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
