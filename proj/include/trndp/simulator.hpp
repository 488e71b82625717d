#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "trndp/network_model.hpp"
#include "trndp/path_planner.hpp"

namespace trndp {

struct SimConfig {
  int horizon_steps = 10'000;
  double dt = 1.0;        // seconds per step; also the driver reaction time
  int platoon_size = 5;   // vehicles per car platoon
  int bus_capacity = 40;  // passengers
  double dwell_time = 60.0;
  double modal_split = 1.0; // share of demand riding transit
  double jam_spacing = 5.0; // meters per vehicle at jam density
  std::uint64_t seed = 0;   // reserved for tie-breaking; the dynamics are deterministic
  bool trace_links = false; // record every link entry/exit in SimulationResult::link_events

  double horizon_seconds() const { return horizon_steps * dt; }
  // Newell backward wave speed, jam_spacing / dt.
  double wave_speed() const { return jam_spacing / dt; }
  void validate() const;
};

enum class PassengerState : std::uint8_t { Waiting, Riding, Done, Unreachable };

struct LegTimes {
  double ready = -1.0; // arrival at the boarding stop
  double board = -1.0;
  double alight = -1.0;
};

struct Passenger {
  std::size_t id = 0;
  NodeId origin = 0;
  NodeId destination = 0;
  int spawn_step = 0;
  std::vector<Leg> legs;
  std::vector<LegTimes> times; // one per leg
  std::size_t current_leg = 0;
  PassengerState state = PassengerState::Waiting;
  bool boarded_once = false;

  // Seconds spent waiting / in vehicle, counting open intervals up to `end_time`.
  double wait_time(double end_time) const;
  double move_time(double end_time) const;
};

struct Bus {
  std::size_t route = 0;
  Direction direction = Direction::Forward;
  double dispatch_time = 0.0;
  double finish_time = -1.0; // -1 while still running at the horizon
  int dispatch_step = 0;
  std::vector<std::size_t> onboard;         // passenger ids
  std::vector<std::uint16_t> occupancy;     // onboard count at the end of each active step
  double kilometers = 0.0;
  std::vector<double> stop_arrivals;        // per stop of its direction; -1 if not reached
};

// Trip requests injected on top of the OD accumulators (scripted scenarios).
struct TripRequest {
  NodeId origin = 0;
  NodeId destination = 0;
  int spawn_step = 0;
  int count = 1;
};

struct LinkEvent {
  std::size_t link = 0; // directed link id: 2 * edge + (0 for u->v, 1 for v->u)
  std::size_t vehicle = 0;
  bool entry = true;
  double time = 0.0;
};

struct PassengerCounts {
  std::size_t spawned = 0;
  std::size_t unreachable = 0;
  std::size_t want = 0;      // spawned minus unreachable
  std::size_t boarded = 0;   // boarded at least once
  std::size_t completed = 0;
  std::size_t ongoing = 0;   // boarded, not yet at destination
  std::size_t waiting = 0;   // never boarded
  std::size_t transfer = 0;  // completed with two or more legs
  std::size_t total() const { return completed + ongoing + waiting; }
};

struct SimulationResult {
  double horizon_seconds = 0.0;
  int bus_capacity = 0;
  std::vector<Passenger> passengers;
  std::vector<Bus> buses;
  std::vector<int> fleet_per_route;
  PassengerCounts counts;
  double bus_kilometers = 0.0;
  std::size_t car_platoons_spawned = 0;
  std::size_t car_platoons_arrived = 0;
  std::vector<int> link_storage;       // platoons, per directed link
  std::vector<int> max_link_occupancy; // platoons, per directed link
  std::vector<LinkEvent> link_events;  // only when SimConfig::trace_links

  int fleet_size() const;
};

// Buses needed to run `frequency` veh/h in each direction:
// 2 * ceil(frequency * round-trip hours), round trip including dwells.
int fleet_for_route(const TransitRoute& route, int frequency, const RoadNetwork& net,
                    const SimConfig& cfg, int stop_spacing = 1);
double round_trip_seconds(const TransitRoute& route, const RoadNetwork& net, const SimConfig& cfg,
                          int stop_spacing = 1);

struct StateCounts {
  std::size_t spawned = 0;
  std::size_t waiting = 0;
  std::size_t riding = 0;
  std::size_t done = 0;
  std::size_t unreachable = 0;
};

// Step-wise driver. simulate() runs it to the horizon; tests use it to
// inspect the state between steps.
class Simulator {
 public:
  // Throws std::invalid_argument for unassigned frequencies or a bad config.
  Simulator(const RoadNetwork& net, const TransitNetwork& tn, const DemandMatrix& demand,
            const SimConfig& cfg, std::span<const TripRequest> injected = {});
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  // Advances one step. Returns false once the horizon has been reached.
  bool step();
  int current_step() const;

  StateCounts state_counts() const;
  // Onboard counts of buses currently running.
  std::vector<std::size_t> active_bus_loads() const;
  // Platoons currently on each directed link.
  std::vector<std::size_t> link_loads() const;
  const std::vector<int>& link_storage() const;

  // Closes the ledger at the current time. The simulator is spent afterwards.
  SimulationResult finish();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

SimulationResult simulate(const RoadNetwork& net, const TransitNetwork& tn, const DemandMatrix& demand,
                          const SimConfig& cfg, std::span<const TripRequest> injected = {});

} // namespace trndp
