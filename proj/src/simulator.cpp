#include "trndp/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace trndp {

namespace {

constexpr double kSpawnThreshold = 1.0 - 1e-9;
constexpr double kNever = -std::numeric_limits<double>::infinity();

int ceil_positive(double x) { return static_cast<int>(std::ceil(x - 1e-9)); }

std::size_t directed_link(const RoadNetwork& net, std::size_t edge, NodeId from) {
  return 2 * edge + (net.edge(edge).u == from ? 0 : 1);
}

} // namespace

void SimConfig::validate() const {
  if (horizon_steps <= 0) throw std::invalid_argument("simulation horizon must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (platoon_size < 1) throw std::invalid_argument("platoon size must be >= 1");
  if (bus_capacity < 1) throw std::invalid_argument("bus capacity must be >= 1");
  if (dwell_time < 0.0) throw std::invalid_argument("dwell time must be >= 0");
  if (!(modal_split >= 0.0 && modal_split <= 1.0)) throw std::invalid_argument("modal split must be in [0, 1]");
  if (!(jam_spacing > 0.0)) throw std::invalid_argument("jam spacing must be positive");
}

double Passenger::wait_time(double end_time) const {
  double total = 0.0;
  for (const auto& t : times) {
    if (t.ready < 0.0) break;
    total += (t.board >= 0.0 ? t.board : end_time) - t.ready;
    if (t.board < 0.0) break;
  }
  return total;
}

double Passenger::move_time(double end_time) const {
  double total = 0.0;
  for (const auto& t : times) {
    if (t.board < 0.0) break;
    total += (t.alight >= 0.0 ? t.alight : end_time) - t.board;
    if (t.alight < 0.0) break;
  }
  return total;
}

int SimulationResult::fleet_size() const {
  int total = 0;
  for (int f : fleet_per_route) total += f;
  return total;
}

double round_trip_seconds(const TransitRoute& route, const RoadNetwork& net, const SimConfig& cfg,
                          int stop_spacing) {
  auto tn = TransitNetwork::from_routes({route});
  tn.stop_spacing = {stop_spacing};
  const auto dirs = directional_routes(net, tn);
  double total = 0.0;
  for (const auto& dr : dirs[0]) {
    total += dr.arrival_offset.back();
    // Dwell at every stop except the terminal of the direction.
    std::size_t dwelling = dr.stop_count();
    if (!dr.stop_positions.empty() && dr.stop_positions.back() + 1 == dr.nodes.size()) --dwelling;
    total += cfg.dwell_time * static_cast<double>(dwelling);
  }
  return total;
}

int fleet_for_route(const TransitRoute& route, int frequency, const RoadNetwork& net, const SimConfig& cfg,
                    int stop_spacing) {
  if (frequency < 1) throw std::invalid_argument("frequency must be >= 1");
  const double cycle_hours = round_trip_seconds(route, net, cfg, stop_spacing) / 3600.0;
  return 2 * std::max(1, ceil_positive(frequency * cycle_hours));
}

// ---------------------------------------------------------------------------

struct Simulator::Impl {
  struct Vehicle {
    bool is_bus = false;
    std::size_t bus = 0;                             // bus index when is_bus
    const std::vector<std::size_t>* path = nullptr;  // car link sequence
    std::size_t path_pos = 0;
    double earliest_exit = 0.0;
  };

  struct Link {
    std::deque<std::size_t> queue;       // vehicles on the link, entry order
    std::deque<std::size_t> entry_queue; // cars waiting at the upstream node
    double last_exit = kNever;
    int storage = 1;
    double free_flow_time = 0.0;
    double exit_headway = 0.0;
    double length_km = 0.0;
  };

  enum class BusPhase { InBay, OnLink, Finished };
  struct BusRun {
    BusPhase phase = BusPhase::InBay;
    std::size_t position = 0; // node position along the direction
    int stop = -1;            // stop index when in a bay at a stop
    double arrive = 0.0;
    double depart = 0.0;
    std::size_t vehicle = 0;
  };

  const RoadNetwork& net;
  const TransitNetwork& tn;
  const DemandMatrix& demand;
  SimConfig cfg;
  PathPlanner planner;
  std::vector<TripRequest> injected;
  std::size_t next_injected = 0;

  std::vector<std::array<std::vector<int>, 2>> stop_at_position; // [route][dir][node pos] -> stop index
  std::vector<std::array<std::size_t, 2>> queue_offset;          // waiting queue base per route/dir
  std::vector<std::deque<std::size_t>> waiting;                  // passenger ids per (route, dir, stop)

  std::vector<Link> links;
  std::vector<Vehicle> vehicles;
  std::vector<BusRun> runs;
  std::vector<std::size_t> active; // indices of buses not finished
  std::vector<std::array<double, 2>> next_dispatch;
  std::vector<double> headway;

  std::vector<double> acc_transit, acc_car;
  std::vector<std::optional<std::vector<std::size_t>>> car_paths; // per demand entry
  std::unordered_map<NodeId, std::vector<NodeId>> car_pred;       // shortest-path tree per origin

  SimulationResult result;
  StateCounts counts;
  int step = 0;
  bool finished = false;

  Impl(const RoadNetwork& n, const TransitNetwork& t, const DemandMatrix& d, const SimConfig& c,
       std::span<const TripRequest> extra)
      : net(n), tn(t), demand(d), cfg(c), planner(n, t, c.dwell_time), injected(extra.begin(), extra.end()) {
    cfg.validate();
    if (demand.node_count() != 0 && demand.node_count() != net.node_count())
      throw std::invalid_argument("demand matrix size does not match the network");
    std::stable_sort(injected.begin(), injected.end(),
                     [](const TripRequest& a, const TripRequest& b) { return a.spawn_step < b.spawn_step; });

    const double vehicle_headway = cfg.dt; // reaction time
    links.resize(2 * net.edge_count());
    result.link_storage.resize(links.size());
    result.max_link_occupancy.assign(links.size(), 0);
    for (std::size_t e = 0; e < net.edge_count(); ++e) {
      const auto& edge = net.edge(e);
      for (int o = 0; o < 2; ++o) {
        auto& l = links[2 * e + static_cast<std::size_t>(o)];
        l.free_flow_time = edge.free_flow_time();
        l.storage = std::max(1, static_cast<int>(std::floor(edge.length / (cfg.jam_spacing * cfg.platoon_size))));
        // Newell triangular diagram: per-vehicle capacity headway = reaction time + jam spacing / speed.
        l.exit_headway = cfg.platoon_size * (vehicle_headway + cfg.jam_spacing / edge.free_flow_speed);
        l.length_km = edge.length / 1000.0;
        result.link_storage[2 * e + static_cast<std::size_t>(o)] = l.storage;
      }
    }

    const auto& dirs = planner.directions();
    stop_at_position.resize(dirs.size());
    queue_offset.resize(dirs.size());
    std::size_t queues = 0;
    for (std::size_t k = 0; k < dirs.size(); ++k)
      for (std::size_t d = 0; d < 2; ++d) {
        const auto& dr = dirs[k][d];
        auto& map = stop_at_position[k][d];
        map.assign(dr.nodes.size(), -1);
        for (std::size_t s = 0; s < dr.stop_count(); ++s) map[dr.stop_positions[s]] = static_cast<int>(s);
        queue_offset[k][d] = queues;
        queues += dr.stop_count();
      }
    waiting.resize(queues);

    next_dispatch.assign(tn.route_count(), {0.0, 0.0});
    for (std::size_t k = 0; k < tn.route_count(); ++k) headway.push_back(3600.0 / tn.frequencies[k]);
    for (std::size_t k = 0; k < tn.route_count(); ++k)
      result.fleet_per_route.push_back(fleet_for_route(tn.routes[k], tn.frequencies[k], net, cfg,
                                                       k < tn.stop_spacing.size() ? tn.stop_spacing[k] : 1));

    acc_transit.assign(demand.entries().size(), 0.0);
    acc_car.assign(demand.entries().size(), 0.0);
    car_paths.resize(demand.entries().size());
    result.horizon_seconds = cfg.horizon_seconds();
    result.bus_capacity = cfg.bus_capacity;
  }

  double now() const { return step * cfg.dt; }
  double step_end() const { return (step + 1) * cfg.dt; }

  const DirectionalRoute& dir_of(const Bus& b) const {
    return planner.directions()[b.route][static_cast<std::size_t>(b.direction)];
  }

  std::deque<std::size_t>& queue_for(std::size_t route, Direction d, std::size_t stop) {
    return waiting[queue_offset[route][static_cast<std::size_t>(d)] + stop];
  }

  void trace(std::size_t link, std::size_t vehicle, bool entry, double time) {
    if (cfg.trace_links) result.link_events.push_back({link, vehicle, entry, time});
  }

  void enter_link(std::size_t l, std::size_t v, double time) {
    auto& link = links[l];
    vehicles[v].earliest_exit = time + link.free_flow_time;
    link.queue.push_back(v);
    result.max_link_occupancy[l] = std::max(result.max_link_occupancy[l], static_cast<int>(link.queue.size()));
    trace(l, v, true, time);
  }

  bool has_room(std::size_t l) const { return static_cast<int>(links[l].queue.size()) < links[l].storage; }

  // --- demand -------------------------------------------------------------

  void spawn_passenger(NodeId o, NodeId d) {
    Passenger p;
    p.id = result.passengers.size();
    p.origin = o;
    p.destination = d;
    p.spawn_step = step;
    ++counts.spawned;
    if (const LegPlan* plan = planner.plan(o, d)) {
      p.legs = plan->legs;
      p.times.resize(p.legs.size());
      p.times[0].ready = now();
      const auto& leg = p.legs[0];
      queue_for(leg.route, leg.direction, leg.board_stop).push_back(p.id);
      ++counts.waiting;
    } else {
      p.state = PassengerState::Unreachable;
      ++counts.unreachable;
    }
    result.passengers.push_back(std::move(p));
  }

  const std::vector<std::size_t>* car_path(std::size_t entry) {
    auto& slot = car_paths[entry];
    if (slot) return &*slot;
    const auto& e = demand.entries()[entry];
    auto it = car_pred.find(e.origin);
    if (it == car_pred.end()) {
      const auto n = net.node_count();
      std::vector<double> dist(n, std::numeric_limits<double>::infinity());
      std::vector<NodeId> pred(n, -1);
      using Item = std::pair<double, NodeId>;
      std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
      dist[static_cast<std::size_t>(e.origin)] = 0.0;
      heap.push({0.0, e.origin});
      while (!heap.empty()) {
        auto [du, u] = heap.top();
        heap.pop();
        if (du > dist[static_cast<std::size_t>(u)]) continue;
        for (const auto& nb : net.neighbors(u)) {
          const double nd = du + net.edge(nb.edge).free_flow_time();
          if (nd < dist[static_cast<std::size_t>(nb.node)]) {
            dist[static_cast<std::size_t>(nb.node)] = nd;
            pred[static_cast<std::size_t>(nb.node)] = u;
            heap.push({nd, nb.node});
          }
        }
      }
      it = car_pred.emplace(e.origin, std::move(pred)).first;
    }
    std::vector<NodeId> nodes;
    for (NodeId v = e.destination; v != -1; v = it->second[static_cast<std::size_t>(v)]) nodes.push_back(v);
    std::reverse(nodes.begin(), nodes.end());
    std::vector<std::size_t> path;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
      path.push_back(directed_link(net, *net.find_edge(nodes[i], nodes[i + 1]), nodes[i]));
    slot = std::move(path);
    return &*slot;
  }

  void spawn_car(std::size_t entry) {
    const auto* path = car_path(entry);
    if (path->empty()) return;
    Vehicle v;
    v.path = path;
    vehicles.push_back(v);
    links[path->front()].entry_queue.push_back(vehicles.size() - 1);
    ++result.car_platoons_spawned;
  }

  void generate_demand() {
    const double alpha = cfg.modal_split;
    const double per_step = cfg.dt / 3600.0;
    const auto& entries = demand.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const double flow = entries[i].flow;
      if (flow <= 0.0) continue;
      if (alpha > 0.0) {
        acc_transit[i] += alpha * flow * per_step;
        while (acc_transit[i] >= kSpawnThreshold) {
          acc_transit[i] -= 1.0;
          spawn_passenger(entries[i].origin, entries[i].destination);
        }
      }
      if (alpha < 1.0) {
        acc_car[i] += (1.0 - alpha) * flow * per_step / cfg.platoon_size;
        while (acc_car[i] >= kSpawnThreshold) {
          acc_car[i] -= 1.0;
          spawn_car(i);
        }
      }
    }
    while (next_injected < injected.size() && injected[next_injected].spawn_step <= step) {
      const auto& req = injected[next_injected++];
      for (int c = 0; c < req.count; ++c) spawn_passenger(req.origin, req.destination);
    }
  }

  // --- buses --------------------------------------------------------------

  void arrive_at(std::size_t b, std::size_t position, double time) {
    auto& bus = result.buses[b];
    auto& run = runs[b];
    const auto& dr = dir_of(bus);
    run.position = position;
    const int stop = stop_at_position[bus.route][static_cast<std::size_t>(bus.direction)][position];
    run.stop = stop;
    if (stop >= 0) {
      bus.stop_arrivals[static_cast<std::size_t>(stop)] = time;
      alight(b, static_cast<std::size_t>(stop), time);
    }
    if (position + 1 == dr.nodes.size()) {
      run.phase = BusPhase::Finished;
      bus.finish_time = time;
      return;
    }
    run.phase = BusPhase::InBay;
    run.arrive = time;
    run.depart = stop >= 0 ? time + cfg.dwell_time : time;
  }

  void alight(std::size_t b, std::size_t stop, double time) {
    auto& bus = result.buses[b];
    std::vector<std::size_t> stay;
    for (auto pid : bus.onboard) {
      auto& p = result.passengers[pid];
      const auto& leg = p.legs[p.current_leg];
      if (leg.alight_stop != stop) {
        stay.push_back(pid);
        continue;
      }
      p.times[p.current_leg].alight = time;
      --counts.riding;
      if (p.current_leg + 1 == p.legs.size()) {
        p.state = PassengerState::Done;
        ++counts.done;
      } else {
        ++p.current_leg;
        p.times[p.current_leg].ready = time;
        p.state = PassengerState::Waiting;
        ++counts.waiting;
        const auto& next = p.legs[p.current_leg];
        queue_for(next.route, next.direction, next.board_stop).push_back(pid);
      }
    }
    bus.onboard = std::move(stay);
  }

  void dispatch() {
    for (std::size_t k = 0; k < tn.route_count(); ++k)
      for (std::size_t d = 0; d < 2; ++d) {
        auto& t = next_dispatch[k][d];
        while (t < step_end() && t < cfg.horizon_seconds()) {
          Bus bus;
          bus.route = k;
          bus.direction = static_cast<Direction>(d);
          bus.dispatch_time = t;
          bus.dispatch_step = step;
          bus.stop_arrivals.assign(planner.directions()[k][d].stop_count(), -1.0);
          result.buses.push_back(std::move(bus));
          runs.emplace_back();
          Vehicle v;
          v.is_bus = true;
          v.bus = result.buses.size() - 1;
          vehicles.push_back(v);
          runs.back().vehicle = vehicles.size() - 1;
          active.push_back(result.buses.size() - 1);
          arrive_at(result.buses.size() - 1, 0, t);
          t += headway[k];
        }
      }
  }

  void board() {
    for (auto b : active) {
      auto& run = runs[b];
      if (run.phase != BusPhase::InBay || run.stop < 0) continue;
      auto& bus = result.buses[b];
      auto& q = queue_for(bus.route, bus.direction, static_cast<std::size_t>(run.stop));
      if (q.empty()) continue;
      std::deque<std::size_t> left;
      for (auto pid : q) {
        auto& p = result.passengers[pid];
        auto& times = p.times[p.current_leg];
        if (static_cast<int>(bus.onboard.size()) >= cfg.bus_capacity || !(times.ready < run.depart)) {
          left.push_back(pid);
          continue;
        }
        times.board = std::max(run.arrive, times.ready);
        p.state = PassengerState::Riding;
        p.boarded_once = true;
        --counts.waiting;
        ++counts.riding;
        bus.onboard.push_back(pid);
      }
      q = std::move(left);
    }
  }

  // --- links --------------------------------------------------------------

  void process_link(std::size_t l) {
    auto& link = links[l];
    while (!link.queue.empty()) {
      const std::size_t v = link.queue.front();
      auto& veh = vehicles[v];
      const double x = std::max(veh.earliest_exit, link.last_exit + link.exit_headway);
      if (x >= step_end()) return;

      std::optional<std::size_t> next_link;
      bool bus_stops_here = false;
      if (veh.is_bus) {
        auto& run = runs[veh.bus];
        const auto& bus = result.buses[veh.bus];
        const auto& dr = dir_of(bus);
        const std::size_t pos = run.position + 1;
        const bool terminal = pos + 1 == dr.nodes.size();
        if (terminal || stop_at_position[bus.route][static_cast<std::size_t>(bus.direction)][pos] >= 0)
          bus_stops_here = true;
        else
          next_link = directed_link(net, dr.edges[pos], dr.nodes[pos]);
      } else if (veh.path_pos + 1 < veh.path->size()) {
        next_link = (*veh.path)[veh.path_pos + 1];
      }

      if (next_link && !has_room(*next_link)) {
        // Spillback: the head holds the link until space opens downstream.
        veh.earliest_exit = std::max(veh.earliest_exit, step_end());
        return;
      }

      link.queue.pop_front();
      link.last_exit = x;
      trace(l, v, false, x);
      if (veh.is_bus) {
        auto& bus = result.buses[veh.bus];
        bus.kilometers += link.length_km;
        result.bus_kilometers += link.length_km;
        if (bus_stops_here) {
          arrive_at(veh.bus, runs[veh.bus].position + 1, x);
        } else {
          ++runs[veh.bus].position;
          enter_link(*next_link, v, x);
        }
      } else if (next_link) {
        ++veh.path_pos;
        enter_link(*next_link, v, x);
      } else {
        ++result.car_platoons_arrived;
      }
    }
  }

  void depart_buses() {
    for (auto b : active) {
      auto& run = runs[b];
      if (run.phase != BusPhase::InBay || !(run.depart < step_end())) continue;
      const auto& bus = result.buses[b];
      const auto& dr = dir_of(bus);
      const auto l = directed_link(net, dr.edges[run.position], dr.nodes[run.position]);
      if (!has_room(l)) continue;
      run.phase = BusPhase::OnLink;
      run.stop = -1;
      enter_link(l, run.vehicle, std::max(run.depart, now()));
    }
  }

  void admit_cars() {
    for (std::size_t l = 0; l < links.size(); ++l) {
      auto& link = links[l];
      while (!link.entry_queue.empty() && has_room(l)) {
        const auto v = link.entry_queue.front();
        link.entry_queue.pop_front();
        enter_link(l, v, now());
      }
    }
  }

  void sample_and_retire() {
    std::vector<std::size_t> still;
    for (auto b : active) {
      auto& bus = result.buses[b];
      bus.occupancy.push_back(static_cast<std::uint16_t>(bus.onboard.size()));
      if (runs[b].phase != BusPhase::Finished) still.push_back(b);
    }
    active = std::move(still);
  }

  bool advance() {
    if (finished || step >= cfg.horizon_steps) return false;
    generate_demand();
    dispatch();
    for (std::size_t l = 0; l < links.size(); ++l) process_link(l);
    board();
    depart_buses();
    admit_cars();
    sample_and_retire();
    ++step;
    return true;
  }

  SimulationResult close() {
    finished = true;
    auto& c = result.counts;
    c = {};
    for (const auto& p : result.passengers) {
      ++c.spawned;
      if (p.state == PassengerState::Unreachable) {
        ++c.unreachable;
        continue;
      }
      if (p.boarded_once) ++c.boarded;
      if (p.state == PassengerState::Done) {
        ++c.completed;
        if (p.legs.size() > 1) ++c.transfer;
      } else if (p.boarded_once) {
        ++c.ongoing;
      } else {
        ++c.waiting;
      }
    }
    c.want = c.spawned - c.unreachable;
    result.horizon_seconds = now();
    return std::move(result);
  }
};

Simulator::Simulator(const RoadNetwork& net, const TransitNetwork& tn, const DemandMatrix& demand,
                     const SimConfig& cfg, std::span<const TripRequest> injected) {
  if (!tn.has_frequencies()) throw std::invalid_argument("transit network has unassigned frequencies");
  impl_ = std::make_unique<Impl>(net, tn, demand, cfg, injected);
}

Simulator::~Simulator() = default;

bool Simulator::step() { return impl_->advance(); }
int Simulator::current_step() const { return impl_->step; }

StateCounts Simulator::state_counts() const { return impl_->counts; }

std::vector<std::size_t> Simulator::active_bus_loads() const {
  std::vector<std::size_t> out;
  for (auto b : impl_->active) out.push_back(impl_->result.buses[b].onboard.size());
  return out;
}

std::vector<std::size_t> Simulator::link_loads() const {
  std::vector<std::size_t> out;
  for (const auto& l : impl_->links) out.push_back(l.queue.size());
  return out;
}

const std::vector<int>& Simulator::link_storage() const { return impl_->result.link_storage; }

SimulationResult Simulator::finish() { return impl_->close(); }

SimulationResult simulate(const RoadNetwork& net, const TransitNetwork& tn, const DemandMatrix& demand,
                          const SimConfig& cfg, std::span<const TripRequest> injected) {
  Simulator sim(net, tn, demand, cfg, injected);
  while (sim.step()) {
  }
  return sim.finish();
}

} // namespace trndp
