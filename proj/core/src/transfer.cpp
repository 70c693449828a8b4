#include "prelac/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "prelac/errors.hpp"
#include "prelac/pca.hpp"

namespace prelac::eval {

sim::Topology merge_ports(const sim::Topology& topology, int a, int b) {
  const int n = static_cast<int>(topology.ports.size());
  if (a == b) throw ContractError("merge_ports needs two distinct ports");
  if (a < 0 || b < 0 || a >= n || b >= n) throw ContractError("merge_ports port id out of range");
  const int keep = std::min(a, b), drop = std::max(a, b);
  auto remap = [&](int p) { return p == drop ? keep : (p > drop ? p - 1 : p); };

  sim::Topology out = topology;
  out.name = topology.name + "-merged-" + std::to_string(keep) + "-" + std::to_string(drop);
  out.ports.clear();
  for (const auto& p : topology.ports) {
    if (p.id == drop) continue;
    sim::Port q = p;
    q.id = remap(p.id);
    if (p.id == keep) {
      const auto& other = topology.ports[static_cast<std::size_t>(drop)];
      q.capacity += other.capacity;
      q.initial_empty += other.initial_empty;
      q.name = p.name + "+" + other.name;
    }
    out.ports.push_back(q);
  }

  for (std::size_t r = 0; r < out.routes.size(); ++r) {
    auto& route = out.routes[r];
    std::vector<int> stops;
    std::vector<double> distances;
    std::vector<int> old_to_new(route.stops.size());
    for (std::size_t i = 0; i < route.stops.size(); ++i) {
      const int s = remap(route.stops[i]);
      if (!stops.empty() && stops.back() == s) {
        // a then b: the a->b leg disappears, the merged stop keeps b's outgoing leg.
        distances.back() = route.distances[i];
      } else {
        stops.push_back(s);
        distances.push_back(route.distances[i]);
      }
      old_to_new[i] = static_cast<int>(stops.size()) - 1;
    }
    if (stops.size() > 1 && stops.front() == stops.back()) {
      stops.pop_back();
      distances.pop_back();
      for (int& idx : old_to_new)
        if (idx == static_cast<int>(stops.size())) idx = 0;
    }
    const std::string where = "route " + std::to_string(route.id);
    if (stops.size() < 2) throw ValidationError(where + " would have fewer than 2 stops after merging");
    if (std::count(stops.begin(), stops.end(), keep) > 1)
      throw ValidationError(where + " would visit the merged port twice");
    for (auto& v : out.vessels)
      if (v.route == route.id) v.initial_stop = old_to_new[static_cast<std::size_t>(v.initial_stop)];
    route.stops = std::move(stops);
    route.distances = std::move(distances);
  }

  std::map<std::pair<int, int>, sim::OrderPair> pairs;
  for (const auto& p : topology.order_model.pairs) {
    const int src = remap(p.src), dst = remap(p.dst);
    if (src == dst) continue;
    auto [it, fresh] = pairs.try_emplace({src, dst}, sim::OrderPair{src, dst, 0.0, 0.0});
    it->second.mu += p.mu;
    it->second.sigma = std::sqrt(it->second.sigma * it->second.sigma + p.sigma * p.sigma);
  }
  out.order_model.pairs.clear();
  for (const auto& [_, p] : pairs) out.order_model.pairs.push_back(p);
  sim::require_valid(out);
  return out;
}

sim::Topology reshuffle_orders(const sim::Topology& topology, std::uint64_t seed) {
  sim::Topology out = topology;
  out.name = topology.name + "-reshuffled-" + std::to_string(seed);
  double mu_total = 0.0, sigma_total = 0.0;
  for (const auto& p : topology.order_model.pairs) {
    mu_total += p.mu;
    sigma_total += p.sigma;
  }
  const double sigma_ratio = mu_total > 0.0 ? sigma_total / mu_total : 0.0;
  const int n = static_cast<int>(topology.ports.size());
  Rng rng = make_rng(seed, SeedStream::reshuffle);
  std::gamma_distribution<double> gamma(1.0, 1.0);
  std::vector<sim::OrderPair> pairs;
  std::vector<double> draws;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j || !topology.share_route(i, j)) continue;
      pairs.push_back({i, j, 0.0, 0.0});
      draws.push_back(gamma(rng));
    }
  double draw_total = 0.0;
  for (double g : draws) draw_total += g;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    // Floor to keep the rounded shares from summing above the original total.
    pairs[k].mu = std::floor(mu_total * draws[k] / draw_total * 1e12) / 1e12;
    pairs[k].sigma = pairs[k].mu * sigma_ratio;
  }
  out.order_model.pairs = std::move(pairs);
  sim::require_valid(out);
  return out;
}

EvalReport transfer_evaluate(const ad::ParameterSet& params, const net::ModelConfig& model,
                             const sim::Topology& derived, std::span<const std::uint64_t> seeds) {
  struct Width {
    const char* name;
    std::size_t rows;
  };
  for (const Width& w : {Width{"encgat.input.port.weight", obs::kPortFeatures},
                         Width{"encgat.input.vessel.weight", obs::kVesselFeatures}}) {
    if (!params.contains(w.name)) throw ContractError(std::string("transfer needs parameter ") + w.name);
    if (params.at(w.name).rows() != w.rows)
      throw ContractError(std::string("feature width mismatch for ") + w.name + ": " +
                          ad::to_string(params.at(w.name).shape()));
  }
  if (model.separate_actors)
    for (std::size_t p = 0; p < derived.ports.size(); ++p)
      if (!params.contains(net::actor_prefix(model, static_cast<int>(p)) + ".fc1.weight"))
        throw ContractError("separate actor headers do not cover port " + std::to_string(p) + " of the derived topology");
  const std::uint64_t before = params.fingerprint();
  train::LearnedPolicy policy(params.clone(), model);
  EvalReport report = evaluate(policy, derived, seeds, model.encgat.lookback);
  if (policy.params().fingerprint() != before || params.fingerprint() != before)
    throw ContractError("transfer evaluation mutated the parameters");
  return report;
}

std::vector<ProjectedEmbedding> export_embeddings(const ad::ParameterSet& params, const net::ModelConfig& model,
                                                  const sim::Topology& topology, std::uint64_t seed) {
  obs::EcrEnv env(topology, model.encgat.lookback);
  Rng unused(0);
  train::RolloutOptions options;
  options.mode = train::RolloutMode::greedy;
  options.keep_observations = false;
  options.capture_embeddings = true;
  train::EpisodeRecord rec = train::rollout(env, params, model, seed, unused, options);
  Matrix data;
  for (const auto& e : rec.embeddings) data.push_back(e.values);
  if (data.size() < 2) throw ContractError("embedding export needs at least 2 embeddings, got " + std::to_string(data.size()));
  const PcaResult pca = principal_components(data, 2);
  const Matrix projected = project(data, pca);
  std::vector<ProjectedEmbedding> rows;
  for (std::size_t i = 0; i < data.size(); ++i)
    rows.push_back({rec.embeddings[i].port, rec.embeddings[i].tick, projected[i][0], projected[i][1]});
  return rows;
}

std::string projection_csv(std::span<const ProjectedEmbedding> rows) {
  std::ostringstream out;
  out.precision(17);
  out << "port,tick,pc1,pc2\n";
  for (const auto& r : rows) out << r.port << ',' << r.tick << ',' << r.pc1 << ',' << r.pc2 << '\n';
  return out.str();
}

}  // namespace prelac::eval
