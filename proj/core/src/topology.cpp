#include "prelac/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "prelac/errors.hpp"

namespace prelac::sim {

using nlohmann::json;

std::string to_string(Mode mode) { return mode == Mode::hard ? "hard" : "normal"; }

Mode parse_mode(const std::string& text) {
  if (text == "normal") return Mode::normal;
  if (text == "hard") return Mode::hard;
  throw ValidationError("unknown mode '" + text + "' (expected normal|hard)");
}

std::vector<int> Topology::routes_of(int port) const {
  std::vector<int> out;
  for (const auto& r : routes)
    if (std::find(r.stops.begin(), r.stops.end(), port) != r.stops.end()) out.push_back(r.id);
  return out;
}

bool Topology::share_route(int a, int b) const {
  for (const auto& r : routes) {
    const bool has_a = std::find(r.stops.begin(), r.stops.end(), a) != r.stops.end();
    const bool has_b = std::find(r.stops.begin(), r.stops.end(), b) != r.stops.end();
    if (has_a && has_b) return true;
  }
  return false;
}

int Topology::stop_index(int route, int port) const {
  const auto& stops = routes.at(route).stops;
  auto it = std::find(stops.begin(), stops.end(), port);
  return it == stops.end() ? -1 : static_cast<int>(it - stops.begin());
}

std::vector<std::string> validate(const Topology& t) {
  std::vector<std::string> errs;
  auto err = [&errs](std::string msg) { errs.push_back(std::move(msg)); };

  if (t.schema_version != kTopologySchemaVersion)
    err("schema_version " + std::to_string(t.schema_version) + " is not supported");
  if (t.ports.empty()) err("topology has no ports");
  if (t.routes.empty()) err("topology has no routes");
  if (t.episode_ticks < 1) err("episode_ticks must be >= 1");
  if (t.turnaround_ticks < 1) err("turnaround_ticks must be >= 1");
  if (!(t.reward_scale > 0.0)) err("reward_scale must be positive");

  const int n_ports = static_cast<int>(t.ports.size());
  for (int i = 0; i < n_ports; ++i) {
    const auto& p = t.ports[i];
    const std::string where = "port " + std::to_string(i);
    if (p.id != i) err(where + ": id must equal its index");
    if (p.capacity <= 0) err(where + ": capacity must be positive");
    if (p.initial_empty < 0 || p.initial_empty > p.capacity) err(where + ": initial_empty must lie in [0, capacity]");
  }
  for (int r = 0; r < static_cast<int>(t.routes.size()); ++r) {
    const auto& route = t.routes[r];
    const std::string where = "route " + std::to_string(r);
    if (route.id != r) err(where + ": id must equal its index");
    if (route.stops.size() < 2) err(where + ": needs at least 2 stops");
    if (route.distances.size() != route.stops.size()) err(where + ": needs one distance per stop");
    std::set<int> seen;
    for (int s : route.stops) {
      if (s < 0 || s >= n_ports) err(where + ": stop " + std::to_string(s) + " is not a port");
      if (!seen.insert(s).second) err(where + ": port " + std::to_string(s) + " appears twice");
    }
    for (double d : route.distances)
      if (!(d > 0.0) || !std::isfinite(d)) err(where + ": leg distances must be positive");
  }
  for (int v = 0; v < static_cast<int>(t.vessels.size()); ++v) {
    const auto& vessel = t.vessels[v];
    const std::string where = "vessel " + std::to_string(v);
    if (vessel.id != v) err(where + ": id must equal its index");
    if (vessel.route < 0 || vessel.route >= static_cast<int>(t.routes.size())) {
      err(where + ": references unknown route " + std::to_string(vessel.route));
      continue;
    }
    if (vessel.capacity <= 0) err(where + ": capacity must be positive");
    if (!(vessel.speed > 0.0)) err(where + ": speed must be positive");
    const int stops = static_cast<int>(t.routes[vessel.route].stops.size());
    if (vessel.initial_stop < 0 || vessel.initial_stop >= stops) err(where + ": initial_stop out of range");
    if (vessel.initial_empty < 0 || vessel.initial_empty > vessel.capacity)
      err(where + ": initial_empty must lie in [0, capacity]");
  }

  const auto& om = t.order_model;
  if (om.total_base < 0.0) err("order_model: total_base must be >= 0");
  for (int k = 0; k < 2; ++k) {
    if (!(om.trend_periods[k] > 0.0)) err("order_model: trend periods must be positive");
    if (om.trend_amplitudes[k] < 0.0) err("order_model: trend amplitudes must be >= 0");
  }
  if (om.travel_noise_normal < 0.0 || om.travel_noise_normal >= 1.0 || om.travel_noise_hard < 0.0 ||
      om.travel_noise_hard >= 1.0)
    err("order_model: travel noise must lie in [0, 1)");
  double mu_total = 0.0;
  std::set<std::pair<int, int>> pairs;
  for (const auto& p : om.pairs) {
    const std::string where = "order pair " + std::to_string(p.src) + "->" + std::to_string(p.dst);
    if (p.src < 0 || p.src >= n_ports || p.dst < 0 || p.dst >= n_ports) {
      err(where + ": references unknown port");
      continue;
    }
    if (p.src == p.dst) err(where + ": source equals destination");
    if (p.mu < 0.0 || p.mu > 1.0) err(where + ": mu must lie in [0, 1]");
    if (p.sigma < 0.0) err(where + ": sigma must be >= 0");
    if (!t.share_route(p.src, p.dst)) err(where + ": ports share no route");
    if (!pairs.insert({p.src, p.dst}).second) err(where + ": duplicate pair");
    mu_total += p.mu;
  }
  if (mu_total > 1.0 + 1e-9) err("order_model: sum of pair mu exceeds 1");
  return errs;
}

void require_valid(const Topology& topology) {
  auto errs = validate(topology);
  if (errs.empty()) return;
  std::ostringstream os;
  os << "invalid topology '" << topology.name << "':";
  for (const auto& e : errs) os << "\n  - " << e;
  throw ValidationError(os.str());
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; }) == allowed.end())
      throw ValidationError(where + ": unknown key '" + it.key() + "'");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : it->get<T>();
}

}  // namespace

std::string to_json(const Topology& t) {
  json j;
  j["schema_version"] = t.schema_version;
  j["name"] = t.name;
  j["episode_ticks"] = t.episode_ticks;
  j["turnaround_ticks"] = t.turnaround_ticks;
  j["reward_scale"] = t.reward_scale;
  j["ports"] = json::array();
  for (const auto& p : t.ports)
    j["ports"].push_back({{"id", p.id}, {"name", p.name}, {"capacity", p.capacity}, {"initial_empty", p.initial_empty}});
  j["routes"] = json::array();
  for (const auto& r : t.routes) j["routes"].push_back({{"id", r.id}, {"stops", r.stops}, {"distances", r.distances}});
  j["vessels"] = json::array();
  for (const auto& v : t.vessels)
    j["vessels"].push_back({{"id", v.id},
                            {"route", v.route},
                            {"capacity", v.capacity},
                            {"speed", v.speed},
                            {"initial_stop", v.initial_stop},
                            {"initial_empty", v.initial_empty}});
  const auto& om = t.order_model;
  json pairs = json::array();
  for (const auto& p : om.pairs) pairs.push_back({{"src", p.src}, {"dst", p.dst}, {"mu", p.mu}, {"sigma", p.sigma}});
  j["order_model"] = {{"mode", to_string(om.mode)},
                      {"total_base", om.total_base},
                      {"trend_periods", om.trend_periods},
                      {"trend_amplitudes", om.trend_amplitudes},
                      {"travel_noise", {{"normal", om.travel_noise_normal}, {"hard", om.travel_noise_hard}}},
                      {"pairs", pairs}};
  return j.dump(2) + "\n";
}

Topology topology_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("topology is not valid JSON: ") + e.what());
  }
  try {
    reject_unknown(j,
                   {"schema_version", "name", "episode_ticks", "turnaround_ticks", "reward_scale", "ports", "routes",
                    "vessels", "order_model"},
                   "topology");
    Topology t;
    t.schema_version = j.at("schema_version").get<int>();
    t.name = get_or<std::string>(j, "name", "");
    t.episode_ticks = get_or(j, "episode_ticks", t.episode_ticks);
    t.turnaround_ticks = get_or(j, "turnaround_ticks", t.turnaround_ticks);
    t.reward_scale = get_or(j, "reward_scale", t.reward_scale);
    for (const auto& p : j.at("ports")) {
      reject_unknown(p, {"id", "name", "capacity", "initial_empty"}, "port");
      t.ports.push_back({p.at("id").get<int>(), get_or<std::string>(p, "name", ""), p.at("capacity").get<Count>(),
                         p.at("initial_empty").get<Count>()});
    }
    for (const auto& r : j.at("routes")) {
      reject_unknown(r, {"id", "stops", "distances"}, "route");
      t.routes.push_back({r.at("id").get<int>(), r.at("stops").get<std::vector<int>>(),
                          r.at("distances").get<std::vector<double>>()});
    }
    for (const auto& v : j.at("vessels")) {
      reject_unknown(v, {"id", "route", "capacity", "speed", "initial_stop", "initial_empty"}, "vessel");
      t.vessels.push_back({v.at("id").get<int>(), v.at("route").get<int>(), v.at("capacity").get<Count>(),
                           v.at("speed").get<double>(), v.at("initial_stop").get<int>(),
                           v.at("initial_empty").get<Count>()});
    }
    const auto& om = j.at("order_model");
    reject_unknown(om, {"mode", "total_base", "trend_periods", "trend_amplitudes", "travel_noise", "pairs"},
                   "order_model");
    t.order_model.mode = parse_mode(get_or<std::string>(om, "mode", "normal"));
    t.order_model.total_base = om.at("total_base").get<double>();
    t.order_model.trend_periods = get_or(om, "trend_periods", t.order_model.trend_periods);
    t.order_model.trend_amplitudes = get_or(om, "trend_amplitudes", t.order_model.trend_amplitudes);
    if (auto it = om.find("travel_noise"); it != om.end()) {
      reject_unknown(*it, {"normal", "hard"}, "order_model.travel_noise");
      t.order_model.travel_noise_normal = get_or(*it, "normal", t.order_model.travel_noise_normal);
      t.order_model.travel_noise_hard = get_or(*it, "hard", t.order_model.travel_noise_hard);
    }
    for (const auto& p : om.at("pairs")) {
      reject_unknown(p, {"src", "dst", "mu", "sigma"}, "order pair");
      t.order_model.pairs.push_back(
          {p.at("src").get<int>(), p.at("dst").get<int>(), p.at("mu").get<double>(), get_or(p, "sigma", 0.0)});
    }
    return t;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed topology: ") + e.what());
  }
}

Topology load_topology(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open topology file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return topology_from_json(ss.str());
}

void save_topology(const std::filesystem::path& path, const Topology& topology) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write topology file: " + path.string());
  out << to_json(topology);
}

}  // namespace prelac::sim
