#pragma once

#include <cstddef>
#include <map>
#include <utility>
#include <vector>

#include "trndp/network_model.hpp"

namespace trndp {

inline constexpr int kProvisionalFrequency = 2;

struct FrequencyConfig {
  double modal_split = 1.0;
  double comfort_threshold = 1.0; // delta_max, maximum desired load factor
  int bus_capacity = 40;
  double dwell_time = 60.0;       // used by the load-assignment planner
};

// Segment loads behind a frequency assignment.
struct LoadProfile {
  // Passenger flow (pax/h) on each directed road segment (from, to).
  std::map<std::pair<NodeId, NodeId>, double> segment_flow;
  // Number of routes covering each undirected edge.
  std::vector<int> overlap;
  // Per route: max over its segments and both directions of flow / overlap.
  std::vector<double> max_normalized_load;
};

struct FrequencyAssignment {
  std::vector<int> frequencies;
  LoadProfile profile;
};

// Max-load frequency setting: F_k = max(1, ceil(Q_k / (delta_max * C))).
int frequency_for_load(double max_normalized_load, double comfort_threshold, int capacity);

FrequencyAssignment assign_frequencies(const RoadNetwork& net, const TransitNetwork& tn,
                                       const DemandMatrix& demand, const FrequencyConfig& cfg);

// Convenience: returns a copy of `tn` with frequencies filled in.
TransitNetwork with_frequencies(const RoadNetwork& net, TransitNetwork tn, const DemandMatrix& demand,
                                const FrequencyConfig& cfg);

} // namespace trndp
