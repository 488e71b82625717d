#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "trndp/design_env.hpp"
#include "trndp/heuristics.hpp"
#include "trndp/network_model.hpp"
#include "trndp/simulator.hpp"

namespace trndp {

struct TopologyStats {
  std::size_t unique_nodes = 0;
  std::size_t unique_edges = 0;
  std::size_t shared_edges = 0;      // covered by two or more routes
  int multi_route_threshold = 3;
  std::size_t nodes_multi_route = 0; // nodes on >= multi_route_threshold routes
  double fraction_multi_route = 0.0; // relative to unique_nodes
};

TopologyStats topology_stats(const TransitNetwork& tn, const RoadNetwork& net, int multi_route_threshold = 3);

struct MetricsReport {
  double service_rate = 0.0;     // %
  double wait_time = 0.0;        // minutes, over N_total
  double transfer_rate = 0.0;    // % of completed trips
  double travel_time = 0.0;      // minutes, over completed + ongoing
  double route_efficiency = 0.0; // completed trips per route km
  int fleet_size = 0;
  double bus_utilization = 0.0;  // %
  bool no_completed_trips = false; // transfer rate and efficiency forced to 0
  double total_route_km = 0.0;
  PassengerCounts counts;
  TopologyStats topology;
};

// Column order of the results table: the seven metrics, then topology.
const std::vector<std::string>& metric_names();
std::vector<double> metric_values(const MetricsReport& m);

MetricsReport compute_metrics(const SimulationResult& result, const TransitNetwork& tn, const RoadNetwork& net);

struct SearchSpaceEstimate {
  double average_degree = 0.0;
  double branching_term = 0.0; // (d - 1)^(L - 1)
  double paths_per_route = 0.0;
  // log10 of P^R; empty when the estimate is zero.
  std::optional<double> log10_space;
};

// d = 2|E|/|V|, P = |V| d (d - 1)^(L - 1), S = P^R. With `degree_decimals`
// the degree is rounded first, as in a hand calculation.
SearchSpaceEstimate search_space_estimate(std::size_t nodes, std::size_t edges, int routes, int route_edges,
                                          std::optional<int> degree_decimals = std::nullopt);

// Exact number of directed simple paths with `length` edges. Exponential;
// for small graphs.
std::uint64_t count_simple_paths(const RoadNetwork& net, int length);

struct ExperimentSpec {
  std::vector<std::string> methods;
  std::vector<double> alphas{0.3, 1.0};
  std::vector<InitScheme> inits{InitScheme::Random};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  int route_count = 16;
  int max_route_nodes = 14;
  double comfort_threshold = 1.0;
  SimConfig sim{};
};

ExperimentSpec parse_experiment_spec(const std::string& json_text);

struct ExperimentRun {
  std::string method;
  double alpha = 0.0;
  std::string init;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  MetricsReport metrics;
};

struct ExperimentRow {
  std::string method;
  double alpha = 0.0;
  std::string init;
  std::size_t runs = 0;
  std::size_t failures = 0;
  std::vector<double> mean; // over successful runs, aligned with metric_names()
};

struct ExperimentTable {
  std::vector<ExperimentRow> rows;
  std::vector<ExperimentRun> runs;
};

// One row per (method, alpha, init); real_world is a fixed design and gets
// one run per alpha. Failing cells are kept with an error message.
ExperimentTable run_experiment(const Dataset& ds, const ExperimentSpec& spec);

// Metrics for a fixed or constructed design at one alpha.
MetricsReport evaluate_design(const RoadNetwork& net, const DemandMatrix& demand, const TransitNetwork& routes,
                              double alpha, const SimConfig& sim, double comfort_threshold,
                              SimulationResult* result_out = nullptr);

void write_table_csv(std::ostream& os, const ExperimentTable& table);
void write_long_csv(std::ostream& os, const ExperimentTable& table);
std::string summary_json(const ExperimentTable& table);
std::string metrics_json(const MetricsReport& m);

} // namespace trndp
