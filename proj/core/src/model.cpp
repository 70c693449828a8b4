#include "prelac/model.hpp"

#include "prelac/errors.hpp"
#include "prelac/ops.hpp"
#include "prelac/simulator.hpp"

namespace prelac::net {

using ad::Tensor;

namespace {

void add_linear(ad::ParameterSet& params, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng) {
  params.add_uniform(prefix + ".weight", {in, out}, in, rng);
  params.add_uniform(prefix + ".bias", {out}, in, rng);
}

// x + relu(fc1 x), then fc2.
Tensor residual_mlp(const Tensor& x, const ad::ParameterSet& params, const std::string& prefix) {
  Tensor hidden = ad::add(x, ad::relu(linear(x, params, prefix + ".fc1")));
  return linear(hidden, params, prefix + ".fc2");
}

}  // namespace

std::string actor_prefix(const ModelConfig& config, int port) {
  return config.separate_actors ? "actor.port" + std::to_string(port) : std::string("actor");
}

std::string critic_prefix(CriticKind kind) {
  return kind == CriticKind::local ? "critic.local" : "critic.global";
}

void init_actor(ad::ParameterSet& params, const ModelConfig& config, int port_count, Rng& rng) {
  const auto width = static_cast<std::size_t>(2 * config.encgat.d_model);
  const int headers = config.separate_actors ? port_count : 1;
  for (int i = 0; i < headers; ++i) {
    const std::string prefix = actor_prefix(config, i);
    add_linear(params, prefix + ".fc1", width, width, rng);
    add_linear(params, prefix + ".fc2", width, sim::kActionCount, rng);
  }
}

void init_critic(ad::ParameterSet& params, const ModelConfig& config, CriticKind kind, Rng& rng) {
  const auto d = static_cast<std::size_t>(config.encgat.d_model);
  const std::string prefix = critic_prefix(kind);
  add_linear(params, prefix + ".fc1", d, d, rng);
  add_linear(params, prefix + ".fc2", d, 1, rng);
}

ad::ParameterSet init_model(const ModelConfig& config, int port_count, Rng& rng) {
  ad::ParameterSet params;
  init_encgat(params, config.encgat, rng);
  init_actor(params, config, port_count, rng);
  init_critic(params, config, CriticKind::local, rng);
  return params;
}

Tensor actor_header(const Tensor& port_embedding, const Tensor& vessel_embedding, const std::vector<bool>& mask,
                    const ad::ParameterSet& params, const std::string& prefix) {
  Tensor logits = residual_mlp(ad::concat_last_dim(port_embedding, vessel_embedding), params, prefix);
  if (mask.empty()) return ad::softmax_rows(logits);
  return ad::masked_softmax_rows(logits, mask);
}

Tensor critic_header(const Tensor& embedding, const ad::ParameterSet& params, CriticKind kind) {
  return residual_mlp(embedding, params, critic_prefix(kind));
}

Tensor pool_embeddings(std::span<const Tensor> embeddings) {
  if (embeddings.empty()) throw ContractError("pool_embeddings needs at least one embedding");
  return ad::mean_rows(ad::stack_rows(embeddings));
}

}  // namespace prelac::net
