#include "prelac/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "json.hpp"
#include "prelac/errors.hpp"

namespace prelac::sim {

double order_total(const OrderModel& model, int tick) {
  if (model.mode == Mode::normal) return model.total_base;
  const double t = static_cast<double>(tick);
  double total = model.total_base;
  for (int k = 0; k < 2; ++k)
    total *= 1.0 + model.trend_amplitudes[k] * std::sin(2.0 * std::numbers::pi * t / model.trend_periods[k]);
  return std::max(0.0, total);
}

std::vector<Order> generate_orders(int tick, const OrderModel& model, Rng& rng) {
  if (tick < 0) throw ContractError("generate_orders: tick must be >= 0");
  const double total = order_total(model, tick);
  std::normal_distribution<double> standard(0.0, 1.0);
  std::vector<Order> orders;
  orders.reserve(model.pairs.size());
  for (const auto& pair : model.pairs) {
    const double share = std::clamp(pair.mu + pair.sigma * standard(rng), 0.0, 1.0);
    orders.push_back({pair.src, pair.dst, static_cast<Count>(std::llround(share * total))});
  }
  return orders;
}

Count PortState::laden_waiting_total() const { return std::accumulate(laden_waiting.begin(), laden_waiting.end(), Count{0}); }

Count PortState::turnaround_total() const {
  Count n = 0;
  for (const auto& [_, c] : on_turnaround) n += c;
  return n;
}

Count VesselState::laden_total() const { return std::accumulate(laden.begin(), laden.end(), Count{0}); }

namespace {
constexpr std::array<const char*, 8> kEventNames = {"order",      "release",    "arrival",   "discharge_laden",
                                                    "load_laden", "reposition", "departure", "observe"};
}

std::string to_string(EventType type) { return kEventNames[static_cast<int>(type)]; }

EventType parse_event_type(const std::string& text) {
  for (std::size_t i = 0; i < kEventNames.size(); ++i)
    if (text == kEventNames[i]) return static_cast<EventType>(i);
  throw ValidationError("unknown event type '" + text + "'");
}

std::string to_jsonl(const std::vector<Event>& events) {
  std::string out;
  for (const auto& e : events) {
    nlohmann::json j = {{"tick", e.tick}, {"type", to_string(e.type)}};
    if (e.port >= 0) j["port"] = e.port;
    if (e.vessel >= 0) j["vessel"] = e.vessel;
    if (e.dst >= 0) j["dst"] = e.dst;
    j["amount"] = e.amount;
    if (e.type == EventType::order) j["requested"] = e.requested;
    if (e.action >= 0) j["action"] = e.action;
    if (e.arrival_tick >= 0) j["arrival_tick"] = e.arrival_tick;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<Event> parse_jsonl(const std::string& text) {
  std::vector<Event> events;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    if (end > start) {
      auto j = nlohmann::json::parse(text.substr(start, end - start));
      Event e;
      e.tick = j.at("tick").get<int>();
      e.type = parse_event_type(j.at("type").get<std::string>());
      e.port = j.value("port", -1);
      e.vessel = j.value("vessel", -1);
      e.dst = j.value("dst", -1);
      e.amount = j.value("amount", Count{0});
      e.requested = j.value("requested", Count{0});
      e.action = j.value("action", -1);
      e.arrival_tick = j.value("arrival_tick", -1);
      events.push_back(e);
    }
    start = end + 1;
  }
  return events;
}

int planned_leg_ticks(double distance, double speed) {
  return std::max(1, static_cast<int>(std::llround(distance / speed)));
}

ActionEffect decode_action(int action) {
  if (action < 0 || action >= kActionCount)
    throw ContractError("action " + std::to_string(action) + " outside 0.." + std::to_string(kActionCount - 1));
  if (action <= kNoOpAction) return {false, kNoOpAction - action};
  return {true, std::min(action - kNoOpAction, 10)};
}

Simulator::Simulator(Topology topology) : topology_(std::move(topology)) {
  require_valid(topology_);
  reset(0);
}

void Simulator::reset(std::uint64_t seed) {
  const auto n_ports = topology_.ports.size();
  state_ = SimState{};
  state_.rng = make_rng(seed, SeedStream::simulator);
  state_.ports.resize(n_ports);
  for (std::size_t p = 0; p < n_ports; ++p) {
    state_.ports[p].empty = topology_.ports[p].initial_empty;
    state_.ports[p].laden_waiting.assign(n_ports, 0);
  }
  state_.vessels.resize(topology_.vessels.size());
  pending_.clear();
  events_.clear();
  for (std::size_t v = 0; v < topology_.vessels.size(); ++v) {
    const auto& spec = topology_.vessels[v];
    auto& vs = state_.vessels[v];
    vs.empty = spec.initial_empty;
    vs.laden.assign(n_ports, 0);
    vs.next_stop = spec.initial_stop;
  }
  // Every vessel leaves its initial stop at tick 0.
  for (std::size_t v = 0; v < topology_.vessels.size(); ++v) depart(static_cast<int>(v));
}

void Simulator::log(Event e) {
  if (log_enabled_) events_.push_back(e);
}

void Simulator::depart(int vessel_id) {
  const auto& spec = topology_.vessels[vessel_id];
  const auto& route = topology_.routes[spec.route];
  auto& vs = state_.vessels[vessel_id];
  const int n = static_cast<int>(route.stops.size());
  const int depart_tick = std::max(state_.tick, 0);
  vs.from_stop = vs.next_stop;
  vs.next_stop = (vs.from_stop + 1) % n;
  const double distance = route.distances[vs.from_stop];
  const double eta = topology_.order_model.travel_noise();
  std::uniform_real_distribution<double> noise(1.0 - eta, 1.0 + eta);
  const double factor = noise(state_.rng);
  vs.planned_leg_ticks = planned_leg_ticks(distance, spec.speed);
  const int realized = std::max(1, static_cast<int>(std::llround(distance / spec.speed * factor)));
  vs.depart_tick = depart_tick;
  vs.arrival_tick = depart_tick + realized;
  state_.arrivals.push({vs.arrival_tick, vessel_id});
  log({.tick = depart_tick,
       .type = EventType::departure,
       .port = route.stops[vs.from_stop],
       .vessel = vessel_id,
       .dst = route.stops[vs.next_stop],
       .arrival_tick = vs.arrival_tick});
}

void Simulator::release_turnaround() {
  const int t = state_.tick;
  for (std::size_t p = 0; p < state_.ports.size(); ++p) {
    auto& port = state_.ports[p];
    const Count capacity = topology_.ports[p].capacity;
    for (auto it = port.on_turnaround.begin(); it != port.on_turnaround.end() && it->first <= t;) {
      const Count amount = std::min(it->second, capacity - port.empty);
      if (amount <= 0) break;
      port.empty += amount;
      port.current.released += amount;
      log({.tick = t, .type = EventType::release, .port = static_cast<int>(p), .amount = amount});
      it->second -= amount;
      if (it->second == 0)
        it = port.on_turnaround.erase(it);
      else
        break;
    }
  }
}

double Simulator::fulfill(const std::vector<Order>& orders, std::vector<double>& local) {
  const int t = state_.tick;
  std::vector<Count> consumed(state_.ports.size(), 0);
  for (const auto& order : orders) {
    auto& src = state_.ports[order.src];
    const Count a = std::min(order.quantity, src.empty);
    src.empty -= a;
    src.laden_waiting[order.dst] += a;
    src.fulfilled_total += a;
    src.shortage_total += order.quantity - a;
    src.current.orders += order.quantity;
    src.current.fulfilled += a;
    src.current.shortage += order.quantity - a;
    state_.ports[order.dst].current.inbound_orders += order.quantity;
    consumed[order.src] += a;
    if (order.quantity > 0)
      log({.tick = t,
           .type = EventType::order,
           .port = order.src,
           .dst = order.dst,
           .amount = a,
           .requested = order.quantity});
  }
  local.assign(state_.ports.size(), 0.0);
  double global = 0.0;
  for (std::size_t p = 0; p < consumed.size(); ++p) {
    local[p] = topology_.reward_scale * static_cast<double>(consumed[p]);
    global += local[p];
  }
  return global;
}

void Simulator::vessel_arrival(int vessel_id) {
  const int t = state_.tick;
  const auto& spec = topology_.vessels[vessel_id];
  const auto& route = topology_.routes[spec.route];
  auto& vs = state_.vessels[vessel_id];
  const int stop = vs.next_stop;
  const int port_id = route.stops[stop];
  auto& port = state_.ports[port_id];
  log({.tick = t, .type = EventType::arrival, .port = port_id, .vessel = vessel_id});

  if (const Count laden = vs.laden[port_id]; laden > 0) {
    vs.laden[port_id] = 0;
    port.on_turnaround[t + topology_.turnaround_ticks] += laden;
    port.current.laden_arrived += laden;
    log({.tick = t, .type = EventType::discharge_laden, .port = port_id, .vessel = vessel_id, .amount = laden});
  }

  const int n = static_cast<int>(route.stops.size());
  for (int k = 1; k < n; ++k) {
    const int dst = route.stops[(stop + k) % n];
    const Count space = spec.capacity - vs.empty - vs.laden_total();
    if (space <= 0) break;
    const Count board = std::min(port.laden_waiting[dst], space);
    if (board <= 0) continue;
    port.laden_waiting[dst] -= board;
    vs.laden[dst] += board;
    log({.tick = t, .type = EventType::load_laden, .port = port_id, .vessel = vessel_id, .dst = dst, .amount = board});
  }
}

Count Simulator::apply_action(const DecisionRequest& request, int action) {
  const ActionEffect effect = decode_action(action);
  auto match = std::find_if(pending_.begin(), pending_.end(), [&](const DecisionRequest& r) {
    return r.port == request.port && r.vessel == request.vessel && r.tick == request.tick;
  });
  if (match == pending_.end() || request.tick != state_.tick)
    throw ContractError("apply_action: no pending decision for port " + std::to_string(request.port) + ", vessel " +
                        std::to_string(request.vessel) + " at tick " + std::to_string(request.tick));
  auto& port = state_.ports[request.port];
  auto& vs = state_.vessels[request.vessel];
  const Count port_capacity = topology_.ports[request.port].capacity;
  const Count vessel_capacity = topology_.vessels[request.vessel].capacity;
  Count moved = 0;
  if (effect.load) {
    const Count wanted = port.empty * effect.tenths / 10;
    moved = std::min(wanted, vessel_capacity - vs.empty - vs.laden_total());
    moved = std::max<Count>(moved, 0);
    port.empty -= moved;
    vs.empty += moved;
    port.current.loaded_empty += moved;
  } else {
    const Count wanted = vs.empty * effect.tenths / 10;
    moved = std::max<Count>(std::min(wanted, port_capacity - port.empty), 0);
    vs.empty -= moved;
    port.empty += moved;
    port.current.discharged_empty += moved;
  }
  state_.ports[request.port].recent[state_.tick % kStatsWindow] = port.current;
  log({.tick = state_.tick,
       .type = EventType::reposition,
       .port = request.port,
       .vessel = request.vessel,
       .amount = effect.load ? -moved : moved,
       .action = action});
  pending_.erase(match);
  return moved;
}

void Simulator::run_tick(StepResult& result) {
  state_.tick += 1;
  const int t = state_.tick;
  for (auto& port : state_.ports) port.current = TickStats{};

  release_turnaround();
  const auto orders = generate_orders(t, topology_.order_model, state_.rng);
  std::vector<double> local;
  const double global = fulfill(orders, local);

  std::vector<int> arriving;
  while (!state_.arrivals.empty() && state_.arrivals.top().first <= t) {
    arriving.push_back(state_.arrivals.top().second);
    state_.arrivals.pop();
  }
  std::sort(arriving.begin(), arriving.end());
  const bool final_tick = t + 1 >= topology_.episode_ticks;
  for (int v : arriving) {
    vessel_arrival(v);
    const int port_id = topology_.routes[topology_.vessels[v].route].stops[state_.vessels[v].next_stop];
    if (!final_tick) pending_.push_back({port_id, v, t});
  }
  // Departures are scheduled at arrival; the vessel's cargo may still change
  // through the repositioning decision taken this tick.
  for (int v : arriving) depart(v);

  for (auto& port : state_.ports) port.recent[t % kStatsWindow] = port.current;
  for (auto& vs : state_.vessels) {
    vs.recent_empty[t % kStatsWindow] = vs.empty;
    vs.recent_laden[t % kStatsWindow] = vs.laden_total();
  }
  result.global_rewards.push_back(global);
  result.local_rewards.push_back(std::move(local));
  log({.tick = t, .type = EventType::observe});
  if (observer_) observer_(state_);
}

StepResult Simulator::advance() {
  StepResult result;
  result.first_tick = state_.tick + 1;
  if (!pending_.empty()) pending_.clear();
  while (!state_.done) {
    if (state_.tick + 1 >= topology_.episode_ticks) {
      state_.tick = topology_.episode_ticks;
      state_.done = true;
      break;
    }
    run_tick(result);
    if (!pending_.empty()) break;
  }
  result.done = state_.done;
  result.decisions = pending_;
  return result;
}

Count total_containers(const SimState& state) {
  Count total = 0;
  for (const auto& p : state.ports) total += p.empty + p.laden_waiting_total() + p.turnaround_total();
  for (const auto& v : state.vessels) total += v.empty + v.laden_total();
  return total;
}

Count Simulator::total_containers() const { return sim::total_containers(state_); }

double fulfillment_ratio(const SimState& state) {
  Count fulfilled = 0, shortage = 0;
  for (const auto& p : state.ports) {
    fulfilled += p.fulfilled_total;
    shortage += p.shortage_total;
  }
  if (fulfilled + shortage == 0) return 1.0;
  return static_cast<double>(fulfilled) / static_cast<double>(fulfilled + shortage);
}

}  // namespace prelac::sim
