#include "trndp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "trndp/frequency.hpp"

namespace trndp {

using nlohmann::json;

TopologyStats topology_stats(const TransitNetwork& tn, const RoadNetwork& net, int multi_route_threshold) {
  TopologyStats s;
  s.multi_route_threshold = multi_route_threshold;
  std::vector<int> node_routes(net.node_count(), 0), edge_routes(net.edge_count(), 0);
  for (const auto& r : tn.routes) {
    std::set<NodeId> nodes(r.nodes.begin(), r.nodes.end());
    for (auto v : nodes) ++node_routes[static_cast<std::size_t>(v)];
    auto edges = route_edges(r, net);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    for (auto e : edges) ++edge_routes[e];
  }
  for (int c : node_routes) {
    if (c > 0) ++s.unique_nodes;
    if (c >= multi_route_threshold && c > 0) ++s.nodes_multi_route;
  }
  for (int c : edge_routes) {
    if (c > 0) ++s.unique_edges;
    if (c >= 2) ++s.shared_edges;
  }
  s.fraction_multi_route =
      s.unique_nodes ? static_cast<double>(s.nodes_multi_route) / static_cast<double>(s.unique_nodes) : 0.0;
  return s;
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{
      "service_rate",  "wait_time",    "transfer_rate", "travel_time",      "route_efficiency",
      "fleet_size",    "bus_utilization", "total_route_km", "unique_nodes", "unique_edges",
      "shared_edges",  "nodes_3plus_routes"};
  return names;
}

std::vector<double> metric_values(const MetricsReport& m) {
  return {m.service_rate,
          m.wait_time,
          m.transfer_rate,
          m.travel_time,
          m.route_efficiency,
          static_cast<double>(m.fleet_size),
          m.bus_utilization,
          m.total_route_km,
          static_cast<double>(m.topology.unique_nodes),
          static_cast<double>(m.topology.unique_edges),
          static_cast<double>(m.topology.shared_edges),
          static_cast<double>(m.topology.nodes_multi_route)};
}

MetricsReport compute_metrics(const SimulationResult& result, const TransitNetwork& tn, const RoadNetwork& net) {
  MetricsReport m;
  const auto& c = result.counts;
  m.counts = c;
  const double end = result.horizon_seconds;

  m.service_rate = c.want ? 100.0 * static_cast<double>(c.boarded) / static_cast<double>(c.want) : 0.0;

  double wait = 0.0, travel = 0.0;
  for (const auto& p : result.passengers) {
    if (p.state == PassengerState::Unreachable) continue;
    const double w = p.wait_time(end);
    wait += w;
    if (p.boarded_once) travel += w + p.move_time(end);
  }
  const std::size_t total = c.total();
  const std::size_t served = c.completed + c.ongoing;
  m.wait_time = total ? wait / static_cast<double>(total) / 60.0 : 0.0;
  m.travel_time = served ? travel / static_cast<double>(served) / 60.0 : 0.0;

  for (const auto& r : tn.routes) m.total_route_km += route_length_m(r, net) / 1000.0;
  if (c.completed == 0) {
    m.no_completed_trips = true;
  } else {
    m.transfer_rate = 100.0 * static_cast<double>(c.transfer) / static_cast<double>(c.completed);
    m.route_efficiency = m.total_route_km > 0 ? static_cast<double>(c.completed) / m.total_route_km : 0.0;
  }

  m.fleet_size = result.fleet_size();
  double load = 0.0;
  std::size_t samples = 0;
  for (const auto& b : result.buses)
    for (auto o : b.occupancy) {
      load += o;
      ++samples;
    }
  m.bus_utilization =
      samples && result.bus_capacity > 0 ? 100.0 * load / (static_cast<double>(samples) * result.bus_capacity) : 0.0;
  m.topology = topology_stats(tn, net);
  return m;
}

SearchSpaceEstimate search_space_estimate(std::size_t nodes, std::size_t edges, int routes, int route_edges,
                                          std::optional<int> degree_decimals) {
  if (nodes == 0) throw std::invalid_argument("search space needs at least one node");
  if (routes < 1 || route_edges < 1) throw std::invalid_argument("routes and route length must be >= 1");
  SearchSpaceEstimate s;
  s.average_degree = 2.0 * static_cast<double>(edges) / static_cast<double>(nodes);
  if (degree_decimals) {
    const double f = std::pow(10.0, *degree_decimals);
    s.average_degree = std::round(s.average_degree * f) / f;
  }
  const double branch = s.average_degree - 1.0;
  s.branching_term = route_edges == 1 ? 1.0 : (branch > 0 ? std::pow(branch, route_edges - 1) : 0.0);
  s.paths_per_route = static_cast<double>(nodes) * s.average_degree * s.branching_term;
  if (s.paths_per_route > 0) s.log10_space = routes * std::log10(s.paths_per_route);
  return s;
}

std::uint64_t count_simple_paths(const RoadNetwork& net, int length) {
  if (length < 0) return 0;
  std::vector<char> on_path(net.node_count(), 0);
  std::function<std::uint64_t(NodeId, int)> walk = [&](NodeId v, int left) -> std::uint64_t {
    if (left == 0) return 1;
    std::uint64_t count = 0;
    on_path[static_cast<std::size_t>(v)] = 1;
    for (const auto& nb : net.neighbors(v))
      if (!on_path[static_cast<std::size_t>(nb.node)]) count += walk(nb.node, left - 1);
    on_path[static_cast<std::size_t>(v)] = 0;
    return count;
  };
  std::uint64_t total = 0;
  for (std::size_t v = 0; v < net.node_count(); ++v) total += walk(static_cast<NodeId>(v), length);
  return total;
}

ExperimentSpec parse_experiment_spec(const std::string& json_text) {
  const json doc = json::parse(json_text);
  if (!doc.is_object()) throw std::invalid_argument("experiment spec must be a JSON object");
  ExperimentSpec spec;
  if (!doc.contains("methods") || !doc["methods"].is_array() || doc["methods"].empty())
    throw std::invalid_argument("experiment spec needs a non-empty 'methods' list");
  for (const auto& m : doc["methods"]) {
    auto name = m.get<std::string>();
    parse_heuristic(name);
    spec.methods.push_back(name);
  }
  if (doc.contains("alphas")) spec.alphas = doc["alphas"].get<std::vector<double>>();
  if (doc.contains("inits")) {
    spec.inits.clear();
    for (const auto& i : doc["inits"]) spec.inits.push_back(parse_init_scheme(i.get<std::string>()));
  }
  if (doc.contains("seeds")) spec.seeds = doc["seeds"].get<std::vector<std::uint64_t>>();
  spec.route_count = doc.value("routes", spec.route_count);
  spec.max_route_nodes = doc.value("max_route_nodes", spec.max_route_nodes);
  spec.comfort_threshold = doc.value("comfort_threshold", spec.comfort_threshold);
  spec.sim.horizon_steps = doc.value("horizon_steps", spec.sim.horizon_steps);
  spec.sim.bus_capacity = doc.value("bus_capacity", spec.sim.bus_capacity);
  spec.sim.dwell_time = doc.value("dwell_time", spec.sim.dwell_time);
  spec.sim.platoon_size = doc.value("platoon_size", spec.sim.platoon_size);
  if (spec.alphas.empty() || spec.inits.empty() || spec.seeds.empty())
    throw std::invalid_argument("alphas, inits and seeds must be non-empty");
  for (double a : spec.alphas)
    if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  spec.sim.validate();
  return spec;
}

MetricsReport evaluate_design(const RoadNetwork& net, const DemandMatrix& demand, const TransitNetwork& routes,
                              double alpha, const SimConfig& sim, double comfort_threshold,
                              SimulationResult* result_out) {
  SimConfig cfg = sim;
  cfg.modal_split = alpha;
  FrequencyConfig fc;
  fc.modal_split = alpha;
  fc.comfort_threshold = comfort_threshold;
  fc.bus_capacity = cfg.bus_capacity;
  fc.dwell_time = cfg.dwell_time;
  const auto tn = routes.has_frequencies() ? routes : with_frequencies(net, routes, demand, fc);
  auto result = simulate(net, tn, demand, cfg);
  auto report = compute_metrics(result, tn, net);
  if (result_out) *result_out = std::move(result);
  return report;
}

ExperimentTable run_experiment(const Dataset& ds, const ExperimentSpec& spec) {
  ExperimentTable table;
  for (const auto& method : spec.methods) {
    const auto kind = parse_heuristic(method);
    for (double alpha : spec.alphas) {
      const bool fixed = kind == HeuristicKind::RealWorld;
      const std::size_t init_count = fixed ? 1 : spec.inits.size();
      for (std::size_t ii = 0; ii < init_count; ++ii) {
        ExperimentRow row;
        row.method = method;
        row.alpha = alpha;
        row.init = fixed ? "fixed" : init_scheme_name(spec.inits[ii]);
        row.mean.assign(metric_names().size(), 0.0);
        const std::size_t seed_count = fixed ? 1 : spec.seeds.size();
        std::size_t ok = 0;
        for (std::size_t si = 0; si < seed_count; ++si) {
          ExperimentRun run;
          run.method = method;
          run.alpha = alpha;
          run.init = row.init;
          run.seed = fixed ? 0 : spec.seeds[si];
          try {
            HeuristicConfig hc;
            hc.kind = kind;
            hc.seed = run.seed;
            hc.route_count = spec.route_count;
            hc.max_route_nodes = spec.max_route_nodes;
            hc.init = fixed ? InitScheme::TransitCenter : spec.inits[ii];
            hc.hub = ds.transit_center;
            const auto design = construct(hc, ds.network, ds.demand, ds.existing_routes);
            run.metrics = evaluate_design(ds.network, ds.demand, design, alpha, spec.sim, spec.comfort_threshold);
            run.ok = true;
            const auto values = metric_values(run.metrics);
            for (std::size_t k = 0; k < values.size(); ++k) row.mean[k] += values[k];
            ++ok;
          } catch (const std::exception& e) {
            run.error = e.what();
            ++row.failures;
          }
          ++row.runs;
          table.runs.push_back(std::move(run));
        }
        if (ok)
          for (auto& v : row.mean) v /= static_cast<double>(ok);
        table.rows.push_back(std::move(row));
      }
    }
  }
  return table;
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

} // namespace

void write_table_csv(std::ostream& os, const ExperimentTable& table) {
  os << "method,alpha,init,runs,failures";
  for (const auto& n : metric_names()) os << ',' << n;
  os << '\n';
  for (const auto& row : table.rows) {
    os << row.method << ',' << num(row.alpha) << ',' << row.init << ',' << row.runs << ',' << row.failures;
    for (std::size_t k = 0; k < metric_names().size(); ++k)
      os << ',' << (row.failures == row.runs ? std::string("NA") : num(row.mean[k]));
    os << '\n';
  }
}

void write_long_csv(std::ostream& os, const ExperimentTable& table) {
  os << "method,alpha,init,seed,metric,value,status\n";
  for (const auto& run : table.runs) {
    if (!run.ok) {
      os << run.method << ',' << num(run.alpha) << ',' << run.init << ',' << run.seed << ",,," << "failed: "
         << csv_field(run.error) << '\n';
      continue;
    }
    const auto values = metric_values(run.metrics);
    for (std::size_t k = 0; k < values.size(); ++k)
      os << run.method << ',' << num(run.alpha) << ',' << run.init << ',' << run.seed << ',' << metric_names()[k]
         << ',' << num(values[k]) << ",ok\n";
  }
}

namespace {

json metrics_object(const MetricsReport& m) {
  json j;
  const auto values = metric_values(m);
  for (std::size_t k = 0; k < values.size(); ++k) j[metric_names()[k]] = values[k];
  j["no_completed_trips"] = m.no_completed_trips;
  j["counts"] = {{"spawned", m.counts.spawned},     {"unreachable", m.counts.unreachable},
                 {"want", m.counts.want},           {"boarded", m.counts.boarded},
                 {"completed", m.counts.completed}, {"ongoing", m.counts.ongoing},
                 {"waiting", m.counts.waiting},     {"transfer", m.counts.transfer}};
  return j;
}

} // namespace

std::string metrics_json(const MetricsReport& m) { return metrics_object(m).dump(2); }

std::string summary_json(const ExperimentTable& table) {
  json doc;
  doc["rows"] = json::array();
  for (const auto& row : table.rows) {
    json r{{"method", row.method}, {"alpha", row.alpha}, {"init", row.init}, {"runs", row.runs},
           {"failures", row.failures}};
    json mean;
    for (std::size_t k = 0; k < metric_names().size(); ++k) mean[metric_names()[k]] = row.mean[k];
    r["mean"] = mean;
    doc["rows"].push_back(r);
  }
  doc["runs"] = json::array();
  for (const auto& run : table.runs) {
    json r{{"method", run.method}, {"alpha", run.alpha}, {"init", run.init}, {"seed", run.seed}, {"ok", run.ok}};
    if (run.ok)
      r["metrics"] = metrics_object(run.metrics);
    else
      r["error"] = run.error;
    doc["runs"].push_back(r);
  }
  return doc.dump(2);
}

} // namespace trndp
