#pragma once

#include <cstdint>

#include "prelac/topology.hpp"

namespace prelac::sim {

/// Ranges the random topology generator draws from.
struct GeneratorOptions {
  double leg_distance_min = 20.0;
  double leg_distance_max = 60.0;
  double speed_min = 8.0;
  double speed_max = 12.0;
  Count vessel_capacity_min = 80;
  Count vessel_capacity_max = 120;
  /// Per-tick order total as a multiple of the port count.
  double orders_per_port = 3.0;
  /// Port capacity as a multiple of its expected per-tick throughput.
  double capacity_ticks = 24.0;
  double initial_fill = 0.5;
  /// Export and import weights are drawn from [1, 1 + skew].
  double skew = 3.0;
  double mu_total = 0.95;
  double sigma_ratio = 0.2;
};

/// Random cyclic routes through port 0 (the shared hub) covering every port,
/// vessels spread across routes, and order pairs between same-route ports
/// with imbalanced export/import weights. The result passes validation.
Topology generate_topology(int ports, int routes, int vessels, std::uint64_t seed,
                           const GeneratorOptions& options = {});

/// Generator seed of the bundled desk-scale topology (6 ports, 3 routes, 6 vessels).
inline constexpr std::uint64_t kBundledTopologySeed = 0;

/// generate_topology(6, 3, 6, kBundledTopologySeed).
Topology bundled_topology();

}  // namespace prelac::sim
