#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "prelac/observation.hpp"
#include "prelac/parameters.hpp"
#include "prelac/rng.hpp"

namespace prelac::net {

struct EncGatConfig {
  int d_model = 32;
  int ff_width = 64;
  int heads = 1;
  int blocks = 2;
  int lookback = obs::kDefaultLookback;
  /// Ablation: neighbour rows go straight to the decoder attention.
  bool decoder_only = false;

  bool operator==(const EncGatConfig&) const = default;
};

void validate(const EncGatConfig& config);

struct EncGatOutput {
  /// [1 x d_model] per observation vertex; undefined where not computed.
  std::vector<ad::Tensor> embedding;
  /// Final block's per-edge-type aggregates h^d for the computed vertices.
  std::vector<std::array<ad::Tensor, obs::kEdgeTypes>> per_type;
};

/// Adds every "encgat.*" parameter.
void init_encgat(ad::ParameterSet& params, const EncGatConfig& config, Rng& rng);

/// x W + b with W = prefix + ".weight", b = prefix + ".bias".
ad::Tensor linear(const ad::Tensor& x, const ad::ParameterSet& params, const std::string& prefix);

/// Lifts raw features of the given vertex type to d_model, then runs scaled
/// dot-product attention with `current` as the single query over the
/// lookback window. Windows shorter than config.lookback are padded at the
/// top with zero rows.
ad::Tensor temporal_attention(const ad::Tensor& history, const ad::Tensor& current, const ad::ParameterSet& params,
                              const EncGatConfig& config, obs::VertexType type);

/// Transformer-style encoder over one edge type's neighbour rows: self
/// attention, residual + layer norm, ReLU feed-forward, residual + layer norm.
ad::Tensor encode_neighbors(const ad::Tensor& neighbors, const ad::ParameterSet& params, const EncGatConfig& config,
                            int block, obs::EdgeType type);

/// Decoder attention with the centre vertex as query over the encoded
/// neighbours. The query is expanded to one row per neighbour so the
/// residual sum has matching shape; the rows are averaged at the end. An
/// undefined `encoded` (no neighbours) yields the learned null embedding.
ad::Tensor decode_aggregate(const ad::Tensor& center, const ad::Tensor& encoded, const ad::ParameterSet& params,
                            const EncGatConfig& config, int block, obs::EdgeType type);

/// Embeds `targets` (vertex indices of obs). Empty targets means the centre
/// and current vessel of an agent view, or every vertex of a whole-graph view.
EncGatOutput encgat_forward(const obs::HeteroObservation& obs, const ad::ParameterSet& params,
                            const EncGatConfig& config, std::span<const int> targets = {});

EncGatOutput decoder_only_forward(const obs::HeteroObservation& obs, const ad::ParameterSet& params,
                                  const EncGatConfig& config, std::span<const int> targets = {});

std::string block_prefix(int block, obs::EdgeType type);

}  // namespace prelac::net
