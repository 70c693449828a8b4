#include "prelac/adam.hpp"

#include <cmath>

#include "prelac/errors.hpp"

namespace prelac::ad {

AdamState::AdamState(AdamConfig cfg) : config(cfg) {
  if (!(config.beta1 > 0.0 && config.beta1 < 1.0) || !(config.beta2 > 0.0 && config.beta2 < 1.0))
    throw ContractError("Adam betas must lie in (0, 1)");
  if (!(config.epsilon > 0.0)) throw ContractError("Adam epsilon must be positive");
  if (!(config.learning_rate >= 0.0)) throw ContractError("Adam learning rate must be non-negative");
}

void AdamState::forget(const std::string& prefix) {
  for (auto* moments : {&first_moment, &second_moment}) {
    for (auto it = moments->begin(); it != moments->end();) {
      if (it->first.compare(0, prefix.size(), prefix) == 0)
        it = moments->erase(it);
      else
        ++it;
    }
  }
}

double gradient_norm(const ParameterSet& params) {
  double sq = 0.0;
  for (const auto& [_, t] : params)
    for (double g : t.grad()) sq += g * g;
  return std::sqrt(sq);
}

double adam_step(ParameterSet& params, AdamState& state) {
  const double norm = gradient_norm(params);
  if (!std::isfinite(norm)) throw NumericError("adam_step: non-finite gradient norm");
  const auto& cfg = state.config;
  const double clip = (cfg.clip_norm > 0.0 && norm > cfg.clip_norm) ? cfg.clip_norm / norm : 1.0;

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);

  for (auto& [name, param] : params) {
    if (!param.has_grad()) continue;
    auto& m = state.first_moment[name];
    auto& v = state.second_moment[name];
    const std::size_t n = param.size();
    if (m.size() != n) m.assign(n, 0.0);
    if (v.size() != n) v.assign(n, 0.0);
    auto values = param.mutable_values();
    auto grad = param.grad();
    for (std::size_t i = 0; i < n; ++i) {
      const double g = grad[i] * clip;
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      values[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
    param.clear_grad();
  }
  return norm;
}

}  // namespace prelac::ad
