#pragma once

#include <span>
#include <string>
#include <vector>

#include "prelac/encgat.hpp"

namespace prelac::net {

struct ModelConfig {
  EncGatConfig encgat;
  /// One actor header per port instead of a shared one.
  bool separate_actors = false;

  bool operator==(const ModelConfig&) const = default;
};

enum class CriticKind { local, global };

std::string actor_prefix(const ModelConfig& config, int port);
std::string critic_prefix(CriticKind kind);

void init_actor(ad::ParameterSet& params, const ModelConfig& config, int port_count, Rng& rng);
void init_critic(ad::ParameterSet& params, const ModelConfig& config, CriticKind kind, Rng& rng);

/// EncGAT, actor header(s) and the local critic: the pre-training parameter set.
ad::ParameterSet init_model(const ModelConfig& config, int port_count, Rng& rng);

/// Action distribution [1 x 22] from the port and current-vessel embeddings.
/// Masked actions get probability exactly 0; an empty mask means all feasible.
ad::Tensor actor_header(const ad::Tensor& port_embedding, const ad::Tensor& vessel_embedding,
                        const std::vector<bool>& mask, const ad::ParameterSet& params, const std::string& prefix);

/// Scalar state value [1 x 1].
ad::Tensor critic_header(const ad::Tensor& embedding, const ad::ParameterSet& params, CriticKind kind);

/// Mean of the port embeddings, the global critic's input.
ad::Tensor pool_embeddings(std::span<const ad::Tensor> embeddings);

}  // namespace prelac::net
