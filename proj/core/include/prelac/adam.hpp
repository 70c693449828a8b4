#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "prelac/parameters.hpp"

namespace prelac::ad {

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Global-norm gradient clip applied before each step; <= 0 disables.
  double clip_norm = 5.0;

  bool operator==(const AdamConfig&) const = default;
};

struct AdamState {
  AdamConfig config;
  std::int64_t step_count = 0;
  std::map<std::string, std::vector<double>> first_moment;
  std::map<std::string, std::vector<double>> second_moment;

  explicit AdamState(AdamConfig cfg = {});
  /// Drops moments for parameters whose name starts with prefix.
  void forget(const std::string& prefix);
};

/// L2 norm of all gradients in the set.
double gradient_norm(const ParameterSet& params);

/// One bias-corrected Adam update over every parameter, then clears the
/// gradients. Parameters that never received a gradient buffer are left
/// untouched. Returns the pre-clip gradient norm.
double adam_step(ParameterSet& params, AdamState& state);

}  // namespace prelac::ad
