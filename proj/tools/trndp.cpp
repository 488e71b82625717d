#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "trndp/design_env.hpp"
#include "trndp/evaluation.hpp"
#include "trndp/frequency.hpp"
#include "trndp/heuristics.hpp"
#include "trndp/network_model.hpp"
#include "trndp/protocol.hpp"

using namespace trndp;
using nlohmann::json;

namespace {

std::string default_data_dir() {
  if (const char* env = std::getenv("TRNDP_DATA_DIR"); env && *env) return env;
  return "data/bloomington";
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

Dataset load(const std::string& dir) { return load_dataset(DatasetPaths::in_directory(dir)); }

json design_document(const RoadNetwork& net, const TransitNetwork& tn) {
  json routes = json::array();
  for (const auto& r : tn.routes) {
    json ids = json::array();
    for (auto v : r.nodes) ids.push_back(net.original_id(v));
    routes.push_back(ids);
  }
  json doc{{"routes", routes}};
  if (tn.has_frequencies()) doc["frequencies"] = tn.frequencies;
  return doc;
}

TransitNetwork read_design(const std::string& path, const RoadNetwork& net) {
  const auto text = slurp(path);
  auto doc = parse_routes_json(text, path, net);
  auto tn = TransitNetwork::from_routes(std::move(doc.routes));
  const auto j = json::parse(text);
  if (j.contains("frequencies")) {
    tn.frequencies = j["frequencies"].get<std::vector<int>>();
    if (tn.frequencies.size() != tn.route_count())
      throw std::runtime_error(path + ": frequencies must have one entry per route");
  }
  return tn;
}

SimConfig sim_config(double alpha, int horizon) {
  SimConfig cfg;
  cfg.modal_split = alpha;
  cfg.horizon_steps = horizon;
  cfg.validate();
  return cfg;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transit route network design: datasets, heuristics, simulation and the environment server"};
  app.require_subcommand(1);
  std::string data_dir = default_data_dir();
  app.add_option("--data", data_dir, "Dataset directory (default: $TRNDP_DATA_DIR or data/bloomington)");

  auto* validate = app.add_subcommand("validate", "Load and check a dataset");
  std::string validate_dir;
  validate->add_option("dataset-dir", validate_dir, "Dataset directory");

  auto* design = app.add_subcommand("design", "Build a route network with a baseline method");
  std::string method = "random_walk", init = "transit_center", design_out = "-";
  double alpha = 1.0;
  std::uint64_t seed = 0;
  int routes = 16, max_nodes = 14;
  design->add_option("--method", method, "random_walk | greedy_demand | greedy_shortest_path | real_world");
  design->add_option("--alpha", alpha, "Modal split used for frequency setting")->check(CLI::Range(0.0, 1.0));
  design->add_option("--init", init, "transit_center | random");
  design->add_option("--seed", seed);
  design->add_option("--routes", routes, "Route count K")->check(CLI::PositiveNumber);
  design->add_option("--max-nodes", max_nodes, "Maximum nodes per route")->check(CLI::Range(2, 1000));
  design->add_option("--out", design_out, "Output JSON (default stdout)");

  auto* sim = app.add_subcommand("simulate", "Simulate a route network and report the metrics");
  std::string sim_routes, sim_out = "-";
  double sim_alpha = 1.0;
  int horizon = 10000;
  sim->add_option("--routes", sim_routes, "Route JSON (dataset routes.json or design output)")->required();
  sim->add_option("--alpha", sim_alpha)->check(CLI::Range(0.0, 1.0));
  sim->add_option("--horizon", horizon, "Simulation steps")->check(CLI::PositiveNumber);
  sim->add_option("--out", sim_out, "Output JSON (default stdout)");

  auto* evaluate = app.add_subcommand("evaluate", "Run an experiment grid");
  std::string spec_path, eval_out = "results";
  evaluate->add_option("--experiments-spec", spec_path, "Experiment spec JSON")->required();
  evaluate->add_option("--out", eval_out, "Output directory");

  auto* serve = app.add_subcommand("serve", "Serve the design environment over newline-delimited JSON");
  std::string transport = "stdio", serve_init = "transit_center";
  double serve_alpha = 1.0;
  bool no_sim = false;
  int serve_horizon = 10000;
  serve->add_option("--transport", transport, "stdio | unix:/path/to/socket");
  serve->add_option("--alpha", serve_alpha)->check(CLI::Range(0.0, 1.0));
  serve->add_option("--init", serve_init, "transit_center | random");
  serve->add_option("--horizon", serve_horizon)->check(CLI::PositiveNumber);
  serve->add_flag("--no-simulate", no_sim, "Skip the simulation at route completion");

  auto* space = app.add_subcommand("search-space", "Estimate the number of route designs");
  int space_routes = 16, space_length = 13;
  std::size_t space_nodes = 0, space_edges = 0;
  int decimals = -1;
  space->add_option("--routes", space_routes)->check(CLI::PositiveNumber);
  space->add_option("--length", space_length, "Edges per route")->check(CLI::PositiveNumber);
  space->add_option("--nodes", space_nodes, "Node count (default: from the dataset)");
  space->add_option("--edges", space_edges, "Edge count (default: from the dataset)");
  space->add_option("--degree-decimals", decimals, "Round the average degree first");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) {
      const auto dir = validate_dir.empty() ? data_dir : validate_dir;
      const auto ds = load(dir);
      const auto& net = ds.network;
      std::cout << net.node_count() << " nodes, " << net.edge_count() << " edges, " << ds.demand.pair_count()
                << " OD pairs\n";
      const auto m = od_marginals(ds.demand);
      std::size_t o = 0, d = 0;
      for (std::size_t i = 1; i < m.out.size(); ++i) {
        if (m.out[i] > m.out[o]) o = i;
        if (m.in[i] > m.in[d]) d = i;
      }
      std::cout << "max origin demand " << fmt("%g", m.out[o]) << " at node " << net.original_id(static_cast<NodeId>(o))
                << "\nmax destination demand " << fmt("%g", m.in[d]) << " at node "
                << net.original_id(static_cast<NodeId>(d)) << "\n";
      std::cout << ds.existing_routes.size() << " existing routes";
      if (ds.transit_center) std::cout << ", transit center " << net.original_id(*ds.transit_center);
      std::cout << "\n";
      for (const auto& w : ds.warnings) std::cerr << "warning: " << w << "\n";
      return 0;
    }

    if (*space) {
      std::size_t nodes = space_nodes, edges = space_edges;
      if (nodes == 0 || edges == 0) {
        if (std::filesystem::exists(std::filesystem::path(data_dir) / "nodes.csv")) {
          const auto ds = load(data_dir);
          nodes = ds.network.node_count();
          edges = ds.network.edge_count();
        } else {
          // Published counts of the Bloomington road graph.
          nodes = 143;
          edges = 243;
          std::cerr << "note: no dataset in " << data_dir << ", using 143 nodes and 243 edges\n";
        }
      }
      const auto s = search_space_estimate(nodes, edges, space_routes, space_length,
                                           decimals >= 0 ? std::optional<int>(decimals) : std::nullopt);
      std::cout << "average degree " << fmt("%.4f", s.average_degree) << "\n(d-1)^(L-1) "
                << fmt("%.4g", s.branching_term) << "\npaths per route " << fmt("%.4g", s.paths_per_route) << "\n";
      if (s.log10_space)
        std::cout << "log10(S) " << fmt("%.2f", *s.log10_space) << "\n";
      else
        std::cout << "S = 0\n";
      return 0;
    }

    const auto ds = load(data_dir);
    for (const auto& w : ds.warnings) std::cerr << "warning: " << w << "\n";

    if (*design) {
      HeuristicConfig hc;
      hc.kind = parse_heuristic(method);
      hc.seed = seed;
      hc.route_count = routes;
      hc.max_route_nodes = max_nodes;
      hc.init = parse_init_scheme(init);
      hc.hub = ds.transit_center;
      auto tn = construct(hc, ds.network, ds.demand, ds.existing_routes);
      FrequencyConfig fc;
      fc.modal_split = alpha;
      tn = with_frequencies(ds.network, tn, ds.demand, fc);
      auto doc = design_document(ds.network, tn);
      doc["method"] = method;
      doc["seed"] = seed;
      doc["init"] = init;
      doc["alpha"] = alpha;
      write_file(design_out, doc.dump(2) + "\n");
      return 0;
    }

    if (*sim) {
      const auto tn = read_design(sim_routes, ds.network);
      SimulationResult result;
      const auto report = evaluate_design(ds.network, ds.demand, tn, sim_alpha, sim_config(sim_alpha, horizon), 1.0, &result);
      write_file(sim_out, metrics_json(report) + "\n");
      return 0;
    }

    if (*evaluate) {
      const auto spec = parse_experiment_spec(slurp(spec_path));
      const auto table = run_experiment(ds, spec);
      std::filesystem::create_directories(eval_out);
      std::ofstream csv(std::filesystem::path(eval_out) / "results.csv");
      write_table_csv(csv, table);
      std::ofstream long_csv(std::filesystem::path(eval_out) / "results_long.csv");
      write_long_csv(long_csv, table);
      write_file((std::filesystem::path(eval_out) / "summary.json").string(), summary_json(table) + "\n");
      std::size_t failed = 0;
      for (const auto& row : table.rows) failed += row.failures;
      write_table_csv(std::cout, table);
      return failed ? 2 : 0;
    }

    if (*serve) {
      EnvConfig cfg;
      cfg.init = parse_init_scheme(serve_init);
      cfg.hub = ds.transit_center;
      cfg.sim = sim_config(serve_alpha, serve_horizon);
      cfg.simulate_on_completion = !no_sim;
      if (transport == "stdio") {
        StreamTransport t(std::cin, std::cout);
        Session session(ds.network, ds.demand, cfg);
        serve_session(t, session);
      } else if (transport.rfind("unix:", 0) == 0) {
        serve_unix_socket(transport.substr(5), ds.network, ds.demand, cfg);
      } else {
        throw std::invalid_argument("unknown transport '" + transport + "' (expected stdio or unix:PATH)");
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
