#include "prelac/observation.hpp"

#include <algorithm>

#include "prelac/errors.hpp"

namespace prelac::obs {

std::string to_string(EdgeType type) { return type == EdgeType::port_port ? "port_port" : "port_vessel"; }

int HeteroObservation::index_of(VertexRef ref) const {
  auto it = std::find(vertices.begin(), vertices.end(), ref);
  return it == vertices.end() ? -1 : static_cast<int>(it - vertices.begin());
}

std::vector<EdgeType> HeteroObservation::edge_types_of(int vertex) const {
  std::vector<EdgeType> out;
  for (int d = 0; d < kEdgeTypes; ++d)
    if (!neighbors[d][vertex].empty()) out.push_back(static_cast<EdgeType>(d));
  return out;
}

InteractionGraph::InteractionGraph(const sim::Topology& topology) : topology_(topology) {
  const int n_ports = static_cast<int>(topology.ports.size());
  const int n_vessels = static_cast<int>(topology.vessels.size());
  for (int p = 0; p < n_ports; ++p) vertices_.push_back({VertexType::port, p});
  for (int v = 0; v < n_vessels; ++v) vertices_.push_back({VertexType::vessel, v});
  for (auto& adj : adjacency_) adj.assign(vertices_.size(), {});

  auto& pp = adjacency_[static_cast<int>(EdgeType::port_port)];
  auto& pv = adjacency_[static_cast<int>(EdgeType::port_vessel)];
  for (int a = 0; a < n_ports; ++a)
    for (int b = 0; b < n_ports; ++b)
      if (a != b && topology.share_route(a, b)) pp[a].push_back(b);
  for (int v = 0; v < n_vessels; ++v) {
    const auto& route = topology.routes[topology.vessels[v].route];
    std::vector<int> stops = route.stops;
    std::sort(stops.begin(), stops.end());
    for (int p : stops) {
      pv[n_ports + v].push_back(p);
      pv[p].push_back(n_ports + v);
    }
  }
  for (auto& list : pv) std::sort(list.begin(), list.end());

  port_distance_.assign(n_ports, std::vector<double>(n_ports, 0.0));
  for (int a = 0; a < n_ports; ++a)
    for (int b : pp[a]) port_distance_[a][b] = route_distance(topology, a, b);
}

int InteractionGraph::index_of(VertexRef ref) const {
  const int n_ports = static_cast<int>(topology_.ports.size());
  if (ref.type == VertexType::port) return (ref.id >= 0 && ref.id < n_ports) ? ref.id : -1;
  return (ref.id >= 0 && ref.id < static_cast<int>(topology_.vessels.size())) ? n_ports + ref.id : -1;
}

std::array<double, kEdgeFeatures> InteractionGraph::edge_features(const sim::SimState& state, int center,
                                                                  int neighbor) const {
  const VertexRef c = vertices_[center];
  const VertexRef n = vertices_[neighbor];
  if (c.type == VertexType::port && n.type == VertexType::port)
    return {port_distance_[c.id][n.id] / kDistanceScale, port_distance_[n.id][c.id] / kDistanceScale};
  const int port = c.type == VertexType::port ? c.id : n.id;
  const int vessel = c.type == VertexType::vessel ? c.id : n.id;
  return {planned_ticks_until(topology_, state, vessel, port) / kTickScale,
          planned_distance_until(topology_, state, vessel, port) / kDistanceScale};
}

HeteroObservation InteractionGraph::build(const sim::SimState& state, const FeatureRecorder& recorder,
                                          const std::vector<int>& members, const std::vector<bool>& expand) const {
  HeteroObservation obs;
  obs.tick = state.tick;
  std::vector<int> local(vertices_.size(), -1);
  for (std::size_t i = 0; i < members.size(); ++i) local[members[i]] = static_cast<int>(i);
  for (int g : members) {
    obs.vertices.push_back(vertices_[g]);
    obs.windows.push_back(recorder.window(vertices_[g].type, vertices_[g].id));
    obs.expanded.push_back(expand[g]);
  }
  for (int d = 0; d < kEdgeTypes; ++d) {
    obs.neighbors[d].assign(members.size(), {});
    for (std::size_t i = 0; i < members.size(); ++i) {
      const int g = members[i];
      if (!expand[g]) continue;
      for (int nb : adjacency_[d][g]) {
        if (local[nb] < 0) throw ContractError("observation is missing a neighbour of an expanded vertex");
        obs.neighbors[d][i].push_back({local[nb], edge_features(state, g, nb)});
      }
    }
  }
  return obs;
}

HeteroObservation InteractionGraph::observe(const sim::SimState& state, const FeatureRecorder& recorder, int port,
                                            int vessel) const {
  const int center = index_of({VertexType::port, port});
  if (center < 0) throw ContractError("unknown port " + std::to_string(port));
  const int n = static_cast<int>(vertices_.size());
  std::vector<int> depth(n, -1);
  depth[center] = 0;
  std::vector<int> frontier = {center};
  for (int hop = 1; hop <= 2; ++hop) {
    std::vector<int> next;
    for (int v : frontier)
      for (const auto& adj : adjacency_)
        for (int nb : adj[v])
          if (depth[nb] < 0) {
            depth[nb] = hop;
            next.push_back(nb);
          }
    frontier = std::move(next);
  }
  std::vector<int> members = {center};
  for (int g = 0; g < n; ++g)
    if (g != center && depth[g] >= 0) members.push_back(g);
  std::vector<bool> expand(n, false);
  for (int g = 0; g < n; ++g) expand[g] = depth[g] == 0 || depth[g] == 1;

  HeteroObservation obs = build(state, recorder, members, expand);
  obs.center = 0;
  if (vessel >= 0) {
    obs.current_vessel = obs.index_of({VertexType::vessel, vessel});
    if (obs.current_vessel < 0 || !obs.expanded[obs.current_vessel])
      throw ContractError("vessel " + std::to_string(vessel) + " does not serve port " + std::to_string(port));
  }
  return obs;
}

HeteroObservation InteractionGraph::observe_all(const sim::SimState& state, const FeatureRecorder& recorder) const {
  std::vector<int> members(vertices_.size());
  for (std::size_t i = 0; i < members.size(); ++i) members[i] = static_cast<int>(i);
  return build(state, recorder, members, std::vector<bool>(vertices_.size(), true));
}

EcrEnv::EcrEnv(sim::Topology topology, int lookback)
    : sim_(std::move(topology)), recorder_(sim_.topology(), lookback), graph_(sim_.topology()) {
  sim_.set_tick_observer([this](const sim::SimState& s) { recorder_.record_tick(s); });
}

void EcrEnv::reset(std::uint64_t seed) {
  recorder_.reset();
  sim_.reset(seed);
}

HeteroObservation EcrEnv::observe(const sim::DecisionRequest& request) const {
  return graph_.observe(sim_.state(), recorder_, request.port, request.vessel);
}

HeteroObservation EcrEnv::observe_all() const { return graph_.observe_all(sim_.state(), recorder_); }

}  // namespace prelac::obs
