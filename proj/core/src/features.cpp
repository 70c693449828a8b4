#include "prelac/features.hpp"

#include <algorithm>
#include <limits>

#include "prelac/errors.hpp"

namespace prelac::obs {

using sim::Count;

namespace {

double ratio(Count value, Count capacity) { return static_cast<double>(value) / static_cast<double>(capacity); }

sim::TickStats window_sum(const sim::PortState& port) {
  sim::TickStats s;
  for (const auto& r : port.recent) {
    s.orders += r.orders;
    s.fulfilled += r.fulfilled;
    s.shortage += r.shortage;
    s.inbound_orders += r.inbound_orders;
    s.released += r.released;
    s.discharged_empty += r.discharged_empty;
    s.loaded_empty += r.loaded_empty;
    s.laden_arrived += r.laden_arrived;
  }
  return s;
}

}  // namespace

std::array<double, kPortFeatures> port_features(const sim::Topology& topology, const sim::SimState& state, int port) {
  if (port < 0 || port >= static_cast<int>(topology.ports.size()))
    throw ContractError("unknown port " + std::to_string(port));
  const auto& ps = state.ports[port];
  const Count cap = topology.ports[port].capacity;
  Count inbound_laden = 0;
  for (const auto& v : state.vessels) inbound_laden += v.laden[port];
  const auto acc = window_sum(ps);
  const Count net_flow = acc.released + acc.discharged_empty - acc.fulfilled - acc.loaded_empty;
  return {ratio(ps.empty, cap),
          ratio(ps.turnaround_total(), cap),
          ratio(ps.laden_waiting_total(), cap),
          ratio(inbound_laden, cap),
          ratio(ps.current.inbound_orders, cap),
          static_cast<double>(cap) / kCapacityScale,
          ratio(cap - ps.empty, cap),
          ratio(ps.current.orders, cap),
          ratio(ps.current.fulfilled, cap),
          ratio(ps.current.shortage, cap),
          ratio(acc.orders, cap),
          ratio(acc.fulfilled, cap),
          ratio(acc.shortage, cap),
          ratio(net_flow, cap),
          ratio(acc.inbound_orders, cap),
          ratio(acc.released, cap),
          ratio(acc.discharged_empty, cap),
          ratio(acc.loaded_empty, cap)};
}

std::array<double, kVesselFeatures> vessel_features(const sim::Topology& topology, const sim::SimState& state,
                                                    int vessel) {
  if (vessel < 0 || vessel >= static_cast<int>(topology.vessels.size()))
    throw ContractError("unknown vessel " + std::to_string(vessel));
  const auto& vs = state.vessels[vessel];
  const Count cap = topology.vessels[vessel].capacity;
  const Count laden = vs.laden_total();
  Count acc_empty = 0, acc_laden = 0;
  for (int i = 0; i < sim::kStatsWindow; ++i) {
    acc_empty += vs.recent_empty[i];
    acc_laden += vs.recent_laden[i];
  }
  return {ratio(vs.empty, cap),
          ratio(laden, cap),
          static_cast<double>(cap) / kCapacityScale,
          ratio(cap - vs.empty - laden, cap),
          ratio(acc_empty, cap),
          ratio(acc_laden, cap),
          ratio(acc_empty - acc_laden, cap)};
}

int planned_ticks_until(const sim::Topology& topology, const sim::SimState& state, int vessel, int port) {
  const auto& spec = topology.vessels.at(vessel);
  const auto& route = topology.routes[spec.route];
  const auto& vs = state.vessels.at(vessel);
  const int n = static_cast<int>(route.stops.size());
  if (topology.stop_index(spec.route, port) < 0) return -1;
  if (vs.depart_tick == state.tick && route.stops[vs.from_stop] == port) return 0;
  int ticks = std::max(0, vs.planned_leg_ticks - (state.tick - vs.depart_tick));
  int stop = vs.next_stop;
  while (route.stops[stop] != port) {
    ticks += sim::planned_leg_ticks(route.distances[stop], spec.speed);
    stop = (stop + 1) % n;
  }
  return ticks;
}

double planned_distance_until(const sim::Topology& topology, const sim::SimState& state, int vessel, int port) {
  const auto& spec = topology.vessels.at(vessel);
  const auto& route = topology.routes[spec.route];
  const auto& vs = state.vessels.at(vessel);
  const int n = static_cast<int>(route.stops.size());
  if (topology.stop_index(spec.route, port) < 0) return -1.0;
  if (vs.depart_tick == state.tick && route.stops[vs.from_stop] == port) return 0.0;
  const double progress =
      std::min(1.0, static_cast<double>(state.tick - vs.depart_tick) / static_cast<double>(vs.planned_leg_ticks));
  double distance = (1.0 - progress) * route.distances[vs.from_stop];
  int stop = vs.next_stop;
  while (route.stops[stop] != port) {
    distance += route.distances[stop];
    stop = (stop + 1) % n;
  }
  return distance;
}

double route_distance(const sim::Topology& topology, int a, int b) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& route : topology.routes) {
    const int ia = topology.stop_index(route.id, a);
    const int ib = topology.stop_index(route.id, b);
    if (ia < 0 || ib < 0) continue;
    const int n = static_cast<int>(route.stops.size());
    double d = 0.0;
    for (int s = ia; s != ib; s = (s + 1) % n) d += route.distances[s];
    best = std::min(best, d);
  }
  return best;
}

FeatureRecorder::FeatureRecorder(const sim::Topology& topology, int lookback)
    : topology_(topology), lookback_(lookback) {
  if (lookback < 1) throw ContractError("lookback must be >= 1");
  reset();
}

void FeatureRecorder::reset() {
  last_tick_ = -1;
  count_ = 0;
  port_rows_.assign(topology_.ports.size(), std::vector<double>(static_cast<std::size_t>(lookback_) * kPortFeatures, 0.0));
  vessel_rows_.assign(topology_.vessels.size(),
                      std::vector<double>(static_cast<std::size_t>(lookback_) * kVesselFeatures, 0.0));
}

void FeatureRecorder::record_tick(const sim::SimState& state) {
  if (state.tick <= last_tick_)
    throw ContractError("tick " + std::to_string(state.tick) + " already recorded (last " +
                        std::to_string(last_tick_) + ")");
  const int slot = count_ % lookback_;
  for (std::size_t p = 0; p < port_rows_.size(); ++p) {
    const auto row = port_features(topology_, state, static_cast<int>(p));
    std::copy(row.begin(), row.end(), port_rows_[p].begin() + slot * kPortFeatures);
  }
  for (std::size_t v = 0; v < vessel_rows_.size(); ++v) {
    const auto row = vessel_features(topology_, state, static_cast<int>(v));
    std::copy(row.begin(), row.end(), vessel_rows_[v].begin() + slot * kVesselFeatures);
  }
  last_tick_ = state.tick;
  ++count_;
}

ad::Tensor FeatureRecorder::window(VertexType type, int id) const {
  const int width = feature_width(type);
  const auto& rows = type == VertexType::port ? port_rows_.at(id) : vessel_rows_.at(id);
  std::vector<double> out(static_cast<std::size_t>(lookback_) * width, 0.0);
  const int filled = std::min(count_, lookback_);
  // Oldest retained row sits at slot count_ % lookback_ once the ring wrapped.
  for (int i = 0; i < filled; ++i) {
    const int age = filled - 1 - i;          // 0 = newest
    const int slot = (count_ - 1 - age) % lookback_;
    const int dest = lookback_ - 1 - age;
    std::copy_n(rows.begin() + slot * width, width, out.begin() + dest * width);
  }
  return ad::Tensor::from({static_cast<std::size_t>(lookback_), static_cast<std::size_t>(width)}, std::move(out));
}

}  // namespace prelac::obs
