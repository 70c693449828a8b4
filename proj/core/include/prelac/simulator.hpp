#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <string>
#include <vector>

#include "prelac/rng.hpp"
#include "prelac/topology.hpp"

namespace prelac::sim {

inline constexpr int kActionCount = 22;
inline constexpr int kNoOpAction = 10;
inline constexpr int kStatsWindow = 5;

struct Order {
  int src = 0;
  int dst = 0;
  Count quantity = 0;
};

/// Total order volume for a tick before it is split across port pairs.
double order_total(const OrderModel& model, int tick);

/// Draws every pair's share for the tick. One standard-normal draw per pair
/// is consumed regardless of sigma so the stream stays aligned.
std::vector<Order> generate_orders(int tick, const OrderModel& model, Rng& rng);

struct TickStats {
  Count orders = 0;          // booked at this port as source
  Count fulfilled = 0;
  Count shortage = 0;
  Count inbound_orders = 0;  // booked elsewhere with this port as destination
  Count released = 0;        // turnaround -> empty
  Count discharged_empty = 0;
  Count loaded_empty = 0;
  Count laden_arrived = 0;
};

struct PortState {
  Count empty = 0;
  std::vector<Count> laden_waiting;     // indexed by destination port
  std::map<int, Count> on_turnaround;   // release tick -> containers
  Count fulfilled_total = 0;
  Count shortage_total = 0;
  TickStats current;
  std::array<TickStats, kStatsWindow> recent{};  // ring indexed by tick % window

  Count laden_waiting_total() const;
  Count turnaround_total() const;
};

struct VesselState {
  Count empty = 0;
  std::vector<Count> laden;  // indexed by destination port
  int from_stop = 0;         // route stop index of the last departure
  int next_stop = 0;         // route stop index being sailed to
  int depart_tick = 0;
  int arrival_tick = 0;
  int planned_leg_ticks = 1;
  std::array<Count, kStatsWindow> recent_empty{};  // snapshots at the observe point
  std::array<Count, kStatsWindow> recent_laden{};

  Count laden_total() const;
};

using ArrivalQueue = std::priority_queue<std::pair<int, int>, std::vector<std::pair<int, int>>, std::greater<>>;

struct SimState {
  int tick = -1;
  bool done = false;
  std::vector<PortState> ports;
  std::vector<VesselState> vessels;
  ArrivalQueue arrivals;  // (arrival tick, vessel id)
  Rng rng;
};

struct DecisionRequest {
  int port = 0;
  int vessel = 0;
  int tick = 0;
};

/// Rewards for every tick elapsed during one advance() call.
struct StepResult {
  int first_tick = 0;
  std::vector<double> global_rewards;
  std::vector<std::vector<double>> local_rewards;  // [tick offset][port]
  bool done = false;
  std::vector<DecisionRequest> decisions;
};

/// `observe` marks the point in a tick where the tick observer runs, after
/// cargo handling and before repositioning.
enum class EventType { order, release, arrival, discharge_laden, load_laden, reposition, departure, observe };

std::string to_string(EventType type);
EventType parse_event_type(const std::string& text);

struct Event {
  int tick = 0;
  EventType type = EventType::order;
  int port = -1;
  int vessel = -1;
  int dst = -1;
  Count amount = 0;
  Count requested = 0;
  int action = -1;
  int arrival_tick = -1;
};

std::string to_jsonl(const std::vector<Event>& events);
std::vector<Event> parse_jsonl(const std::string& text);

/// Planned (noise-free) leg duration in ticks.
int planned_leg_ticks(double distance, double speed);

/// Discrete-event model of empty container flow over a fixed route network.
///
/// Each tick: turnaround containers are released, orders are generated and
/// fulfilled from port stock, then vessel arrivals discharge and board
/// laden cargo and raise one DecisionRequest per (port, vessel). advance()
/// runs ticks until a tick raises requests or the episode ends. Requests
/// are never raised on the final tick.
class Simulator {
 public:
  explicit Simulator(Topology topology);

  void reset(std::uint64_t seed);
  StepResult advance();
  /// Executes a repositioning action for a pending request. Returns the
  /// number of containers moved.
  Count apply_action(const DecisionRequest& request, int action);

  const SimState& state() const { return state_; }
  const Topology& topology() const { return topology_; }
  bool done() const { return state_.done; }
  const std::vector<DecisionRequest>& pending() const { return pending_; }

  void set_tick_observer(std::function<void(const SimState&)> observer) { observer_ = std::move(observer); }
  void enable_event_log(bool on) { log_enabled_ = on; }
  const std::vector<Event>& events() const { return events_; }

  Count total_containers() const;

 private:
  void run_tick(StepResult& result);
  void release_turnaround();
  double fulfill(const std::vector<Order>& orders, std::vector<double>& local);
  void vessel_arrival(int vessel_id);
  void depart(int vessel_id);
  void log(Event e);

  Topology topology_;
  SimState state_;
  std::vector<DecisionRequest> pending_;
  std::function<void(const SimState&)> observer_;
  bool log_enabled_ = false;
  std::vector<Event> events_;
};

/// fulfilled / (fulfilled + shortage) over all ports; 1 with no demand yet.
double fulfillment_ratio(const SimState& state);
Count total_containers(const SimState& state);

/// Actions 0..10 discharge (10 - a) tenths of the vessel's empties; actions
/// 11..21 load min(a - 10, 10) tenths of the port's empties. 10 is the no-op.
struct ActionEffect {
  bool load = false;
  int tenths = 0;
};
ActionEffect decode_action(int action);

}  // namespace prelac::sim
