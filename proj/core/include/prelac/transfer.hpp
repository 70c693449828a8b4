#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prelac/trainer.hpp"

namespace prelac::eval {

/// Folds port b into port a: a takes b's route positions, capacity and
/// stock; ports above b shift down by one; order pairs are remapped with
/// a<->b pairs dropped and duplicates combined. The intra-port leg between
/// adjacent a and b stops is removed. Throws ValidationError if a route
/// would be left with fewer than two stops or would visit the merged port
/// twice.
sim::Topology merge_ports(const sim::Topology& topology, int a, int b);

/// Redraws the order-pair shares over every same-route pair from a
/// symmetric Dirichlet(1), keeping the original share total. Each sigma is
/// the new share times the original total sigma / total mu.
sim::Topology reshuffle_orders(const sim::Topology& topology, std::uint64_t seed);

/// Greedy evaluation of fixed parameters on another topology. Throws
/// ContractError on an input-width mismatch or if the parameters change.
EvalReport transfer_evaluate(const ad::ParameterSet& params, const net::ModelConfig& model,
                             const sim::Topology& derived, std::span<const std::uint64_t> seeds);

struct ProjectedEmbedding {
  int port = 0;
  int tick = 0;
  double pc1 = 0.0;
  double pc2 = 0.0;
};

/// Port embeddings at every decision of one greedy episode, projected onto
/// their top two principal directions.
std::vector<ProjectedEmbedding> export_embeddings(const ad::ParameterSet& params, const net::ModelConfig& model,
                                                  const sim::Topology& topology, std::uint64_t seed);

std::string projection_csv(std::span<const ProjectedEmbedding> rows);

}  // namespace prelac::eval
