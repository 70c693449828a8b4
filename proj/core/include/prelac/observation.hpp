#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "prelac/features.hpp"
#include "prelac/simulator.hpp"

namespace prelac::obs {

enum class EdgeType { port_port = 0, port_vessel = 1 };
inline constexpr int kEdgeTypes = 2;

std::string to_string(EdgeType type);

struct VertexRef {
  VertexType type = VertexType::port;
  int id = 0;
  bool operator==(const VertexRef&) const = default;
};

struct NeighborEdge {
  int vertex = 0;  // index into the owning observation's vertex list
  std::array<double, kEdgeFeatures> features{};
};

/// Typed-vertex, typed-edge view of the interaction graph at one tick.
///
/// An agent view is the radius-2 neighbourhood of its port: adjacency is
/// listed for the centre and its direct neighbours (`expanded`), and feature
/// windows for everything within two hops, which is what two stacked
/// attention blocks consume. A whole-graph view expands every vertex and
/// has no centre.
struct HeteroObservation {
  int tick = 0;
  int center = -1;
  int current_vessel = -1;
  std::vector<VertexRef> vertices;
  std::vector<ad::Tensor> windows;  // [lookback x feature_width(type)] per vertex
  std::array<std::vector<std::vector<NeighborEdge>>, kEdgeTypes> neighbors;  // [edge type][vertex]
  std::vector<bool> expanded;

  std::size_t size() const { return vertices.size(); }
  int index_of(VertexRef ref) const;
  /// Edge types present at a vertex.
  std::vector<EdgeType> edge_types_of(int vertex) const;
  const std::vector<NeighborEdge>& neighbors_of(int vertex, EdgeType type) const {
    return neighbors[static_cast<int>(type)][vertex];
  }
};

/// Static typed adjacency of the full interaction graph. Ports link to every
/// other port and every vessel sharing a route with them; vessels link to
/// the ports on their route.
class InteractionGraph {
 public:
  explicit InteractionGraph(const sim::Topology& topology);

  std::size_t vertex_count() const { return vertices_.size(); }
  const std::vector<VertexRef>& vertices() const { return vertices_; }
  int index_of(VertexRef ref) const;
  const std::vector<int>& adjacent(int vertex, EdgeType type) const {
    return adjacency_[static_cast<int>(type)][vertex];
  }

  std::array<double, kEdgeFeatures> edge_features(const sim::SimState& state, int center, int neighbor) const;

  /// Agent view for a decision at `port` triggered by `vessel`.
  HeteroObservation observe(const sim::SimState& state, const FeatureRecorder& recorder, int port, int vessel) const;
  HeteroObservation observe_all(const sim::SimState& state, const FeatureRecorder& recorder) const;

  const sim::Topology& topology() const { return topology_; }

 private:
  HeteroObservation build(const sim::SimState& state, const FeatureRecorder& recorder,
                          const std::vector<int>& members, const std::vector<bool>& expand) const;

  sim::Topology topology_;
  std::vector<VertexRef> vertices_;  // ports by id, then vessels by id
  std::array<std::vector<std::vector<int>>, kEdgeTypes> adjacency_;
  std::vector<std::vector<double>> port_distance_;
};

/// Agent-facing environment: simulator, lookback recorder and graph view.
class EcrEnv {
 public:
  explicit EcrEnv(sim::Topology topology, int lookback = kDefaultLookback);
  EcrEnv(const EcrEnv&) = delete;
  EcrEnv& operator=(const EcrEnv&) = delete;

  void reset(std::uint64_t seed);
  sim::StepResult advance() { return sim_.advance(); }
  sim::Count apply_action(const sim::DecisionRequest& request, int action) {
    return sim_.apply_action(request, action);
  }
  bool done() const { return sim_.done(); }

  HeteroObservation observe(const sim::DecisionRequest& request) const;
  HeteroObservation observe_all() const;

  sim::Simulator& simulator() { return sim_; }
  const sim::Simulator& simulator() const { return sim_; }
  const sim::SimState& state() const { return sim_.state(); }
  const sim::Topology& topology() const { return sim_.topology(); }
  const FeatureRecorder& recorder() const { return recorder_; }
  const InteractionGraph& graph() const { return graph_; }

 private:
  sim::Simulator sim_;
  FeatureRecorder recorder_;
  InteractionGraph graph_;
};

}  // namespace prelac::obs
