#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace prelac::sim {

using Count = std::int64_t;

enum class Mode { normal, hard };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& text);

struct Port {
  int id = 0;
  std::string name;
  Count capacity = 0;
  Count initial_empty = 0;
};

/// Cyclic route. distances[i] is the leg from stops[i] to stops[(i+1) % n].
struct Route {
  int id = 0;
  std::vector<int> stops;
  std::vector<double> distances;
};

struct Vessel {
  int id = 0;
  int route = 0;
  Count capacity = 0;
  double speed = 1.0;  // distance units per tick
  int initial_stop = 0;
  Count initial_empty = 0;
};

struct OrderPair {
  int src = 0;
  int dst = 0;
  double mu = 0.0;     // share of the per-tick total
  double sigma = 0.0;  // std-dev of the share
};

struct OrderModel {
  Mode mode = Mode::normal;
  double total_base = 0.0;  // containers per tick
  std::array<double, 2> trend_periods{112.0, 28.0};
  std::array<double, 2> trend_amplitudes{0.5, 0.25};
  double travel_noise_normal = 0.0;
  double travel_noise_hard = 0.1;
  std::vector<OrderPair> pairs;

  double travel_noise() const { return mode == Mode::hard ? travel_noise_hard : travel_noise_normal; }
};

inline constexpr int kTopologySchemaVersion = 1;

struct Topology {
  int schema_version = kTopologySchemaVersion;
  std::string name;
  std::vector<Port> ports;
  std::vector<Route> routes;
  std::vector<Vessel> vessels;
  OrderModel order_model;
  int turnaround_ticks = 1;
  int episode_ticks = 224;
  double reward_scale = 0.01;

  /// Routes containing port p, in route order.
  std::vector<int> routes_of(int port) const;
  bool share_route(int a, int b) const;
  /// Position of port in route stops, or -1.
  int stop_index(int route, int port) const;
};

/// Human-readable list of every violated constraint; empty when valid.
std::vector<std::string> validate(const Topology& topology);
/// Throws ValidationError listing all violations.
void require_valid(const Topology& topology);

std::string to_json(const Topology& topology);
Topology topology_from_json(const std::string& text);
Topology load_topology(const std::filesystem::path& path);
void save_topology(const std::filesystem::path& path, const Topology& topology);

}  // namespace prelac::sim
