#include "prelac/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "prelac/errors.hpp"
#include "prelac/rng.hpp"

namespace prelac::sim {

Topology generate_topology(int ports, int routes, int vessels, std::uint64_t seed, const GeneratorOptions& options) {
  if (ports < 2) throw ConfigError("generate_topology needs at least 2 ports, got " + std::to_string(ports));
  if (routes < 1) throw ConfigError("generate_topology needs at least 1 route, got " + std::to_string(routes));
  if (vessels < routes)
    throw ConfigError("generate_topology needs a vessel per route: " + std::to_string(vessels) + " vessels for " +
                      std::to_string(routes) + " routes");
  if (routes > ports - 1 && ports > 2)
    throw ConfigError("generate_topology: " + std::to_string(routes) + " routes cannot each own a port among " +
                      std::to_string(ports - 1) + " non-hub ports");

  Rng rng = make_rng(seed, SeedStream::topology);
  auto uniform = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto uniform_int = [&rng](Count lo, Count hi) { return std::uniform_int_distribution<Count>(lo, hi)(rng); };

  Topology topo;
  topo.name = "generated-" + std::to_string(ports) + "p" + std::to_string(routes) + "r" + std::to_string(vessels) +
              "v-" + std::to_string(seed);

  // Non-hub ports dealt round-robin after a shuffle, then each route may pick
  // up one extra random port so routes overlap beyond the hub.
  std::vector<int> others(static_cast<std::size_t>(ports - 1));
  std::iota(others.begin(), others.end(), 1);
  std::shuffle(others.begin(), others.end(), rng);
  std::vector<std::vector<int>> members(static_cast<std::size_t>(routes), std::vector<int>{0});
  for (std::size_t i = 0; i < others.size(); ++i) members[i % members.size()].push_back(others[i]);
  for (auto& m : members) {
    if (ports > 2 && uniform(0.0, 1.0) < 0.5) {
      const int extra = others[static_cast<std::size_t>(uniform_int(0, static_cast<Count>(others.size()) - 1))];
      if (std::find(m.begin(), m.end(), extra) == m.end()) m.push_back(extra);
    }
    if (m.size() < 2) m.push_back(others.empty() ? 1 : others.front());
    std::shuffle(m.begin() + 1, m.end(), rng);
  }

  for (int r = 0; r < routes; ++r) {
    Route route;
    route.id = r;
    route.stops = members[static_cast<std::size_t>(r)];
    for (std::size_t i = 0; i < route.stops.size(); ++i)
      route.distances.push_back(std::round(uniform(options.leg_distance_min, options.leg_distance_max)));
    topo.routes.push_back(std::move(route));
  }

  for (int v = 0; v < vessels; ++v) {
    Vessel vessel;
    vessel.id = v;
    vessel.route = v % routes;
    vessel.capacity = uniform_int(options.vessel_capacity_min, options.vessel_capacity_max);
    vessel.speed = std::round(uniform(options.speed_min, options.speed_max) * 10.0) / 10.0;
    const auto stops = static_cast<int>(topo.routes[static_cast<std::size_t>(vessel.route)].stops.size());
    const int on_route = (vessels - vessel.route + routes - 1) / routes;
    vessel.initial_stop = (v / routes) * stops / on_route % stops;
    vessel.initial_empty = vessel.capacity / 4;
    topo.vessels.push_back(vessel);
  }

  std::vector<double> export_weight(static_cast<std::size_t>(ports)), import_weight(static_cast<std::size_t>(ports));
  for (int p = 0; p < ports; ++p) {
    export_weight[static_cast<std::size_t>(p)] = uniform(1.0, 1.0 + options.skew);
    import_weight[static_cast<std::size_t>(p)] = uniform(1.0, 1.0 + options.skew);
  }
  double weight_sum = 0.0;
  for (int i = 0; i < ports; ++i)
    for (int j = 0; j < ports; ++j)
      if (i != j && topo.share_route(i, j))
        weight_sum += export_weight[static_cast<std::size_t>(i)] * import_weight[static_cast<std::size_t>(j)];
  auto& model = topo.order_model;
  model.total_base = options.orders_per_port * ports;
  for (int i = 0; i < ports; ++i)
    for (int j = 0; j < ports; ++j) {
      if (i == j || !topo.share_route(i, j)) continue;
      OrderPair pair;
      pair.src = i;
      pair.dst = j;
      const double w = export_weight[static_cast<std::size_t>(i)] * import_weight[static_cast<std::size_t>(j)];
      pair.mu = std::floor(options.mu_total * w / weight_sum * 1e6) / 1e6;
      pair.sigma = std::round(options.sigma_ratio * pair.mu * 1e6) / 1e6;
      model.pairs.push_back(pair);
    }

  std::vector<double> throughput(static_cast<std::size_t>(ports), 0.0);
  for (const auto& pair : model.pairs) {
    throughput[static_cast<std::size_t>(pair.src)] += pair.mu * model.total_base;
    throughput[static_cast<std::size_t>(pair.dst)] += pair.mu * model.total_base;
  }
  for (int p = 0; p < ports; ++p) {
    Port port;
    port.id = p;
    port.name = p == 0 ? "hub" : "port" + std::to_string(p);
    const double flow = std::max(1.0, throughput[static_cast<std::size_t>(p)] / 2.0);
    port.capacity = static_cast<Count>(std::llround(options.capacity_ticks * flow));
    port.initial_empty = static_cast<Count>(std::llround(options.initial_fill * static_cast<double>(port.capacity)));
    topo.ports.push_back(port);
  }

  require_valid(topo);
  return topo;
}

Topology bundled_topology() { return generate_topology(6, 3, 6, kBundledTopologySeed); }

}  // namespace prelac::sim
