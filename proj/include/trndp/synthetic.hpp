#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "trndp/network_model.hpp"

namespace trndp {

// A jittered-grid city with gravity demand, a central hub and radial
// reference routes from the hub.
struct SyntheticCityConfig {
  std::size_t nodes = 143;
  std::size_t edges = 243;
  double block_m = 350.0;
  double jitter = 0.2;           // fraction of a block
  std::size_t od_pairs = 5738;   // strongest pairs kept
  double total_demand = 12000.0; // trips/hour before rounding
  int reference_routes = 16;
  std::uint64_t seed = 1;
};

Dataset make_synthetic_city(const SyntheticCityConfig& cfg);

// nodes.csv, edges.csv, demand.csv and routes.json, readable by load_dataset.
void write_dataset(const Dataset& ds, const std::filesystem::path& dir);

} // namespace trndp
