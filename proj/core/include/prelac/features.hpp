#pragma once

#include <array>
#include <vector>

#include "prelac/simulator.hpp"
#include "prelac/tensor.hpp"
#include "prelac/topology.hpp"

namespace prelac::obs {

inline constexpr int kPortFeatures = 18;
inline constexpr int kVesselFeatures = 7;
inline constexpr int kEdgeFeatures = 2;
inline constexpr int kDefaultLookback = 20;

/// Scale applied to capacities, tick offsets and distances.
inline constexpr double kCapacityScale = 1000.0;
inline constexpr double kTickScale = 100.0;
inline constexpr double kDistanceScale = 100.0;

enum class VertexType { port = 0, vessel = 1 };

inline int feature_width(VertexType type) { return type == VertexType::port ? kPortFeatures : kVesselFeatures; }

/// Capacity-relative port features for the current tick:
///
///   0 empty            1 reserved (turnaround)   2 laden waiting
///   3 laden inbound    4 inbound orders           5 capacity / 1000
///   6 free space       7 orders                   8 fulfilled
///   9 shortage         10..17 five-tick sums of orders, fulfilled, shortage,
///                      net empty flow, inbound orders, released,
///                      discharged empties, loaded empties
std::array<double, kPortFeatures> port_features(const sim::Topology& topology, const sim::SimState& state, int port);

/// empty, laden, capacity / 1000, free space, five-tick sums of empty and
/// laden, and their difference; all relative to vessel capacity.
std::array<double, kVesselFeatures> vessel_features(const sim::Topology& topology, const sim::SimState& state,
                                                    int vessel);

/// Planned ticks until the vessel next calls at port (0 while it is there).
int planned_ticks_until(const sim::Topology& topology, const sim::SimState& state, int vessel, int port);
/// Planned remaining sailing distance until the vessel next calls at port.
double planned_distance_until(const sim::Topology& topology, const sim::SimState& state, int vessel, int port);
/// Shortest forward sailing distance from a to b over routes containing both.
double route_distance(const sim::Topology& topology, int a, int b);

/// Per-vertex ring buffers of feature rows, one row per simulator tick.
class FeatureRecorder {
 public:
  FeatureRecorder(const sim::Topology& topology, int lookback = kDefaultLookback);

  void reset();
  /// Appends the current feature row of every vertex. Throws ContractError
  /// when the tick was already recorded.
  void record_tick(const sim::SimState& state);

  int lookback() const { return lookback_; }
  int last_tick() const { return last_tick_; }
  int recorded() const { return count_; }
  /// [lookback x width] window, oldest row first, zero-padded at the top.
  ad::Tensor window(VertexType type, int id) const;

 private:
  sim::Topology topology_;
  int lookback_;
  int last_tick_ = -1;
  int count_ = 0;
  // [vertex][slot] flattened rows
  std::vector<std::vector<double>> port_rows_;
  std::vector<std::vector<double>> vessel_rows_;
};

}  // namespace prelac::obs
