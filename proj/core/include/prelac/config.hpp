#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "prelac/trainer.hpp"

namespace prelac::cfg {

struct Ablations {
  bool normal_gc = false;
  bool separate_actors = false;
  bool decoder_only = false;
  bool operator==(const Ablations&) const = default;
};

/// Every experiment knob. All fields have defaults; unknown JSON keys are
/// rejected.
struct RunConfig {
  /// "bundled" or a topology file path, relative paths resolved against the
  /// directory of the config file that named them.
  std::string topology = "bundled";
  sim::Mode mode = sim::Mode::normal;
  int pretrain_iterations = 100;
  int finetune_iterations = 200;
  net::EncGatConfig network;
  train::LossWeights loss;
  ad::AdamConfig optimizer;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::vector<std::uint64_t> eval_seeds{1000, 1001, 1002};
  std::string output_dir = "runs";
  int checkpoint_every = 50;
  Ablations ablation;
  std::vector<double> sweep_learning_rates{1e-3, 3e-4, 1e-4};
  double heuristic_threshold = 0.3;
  /// Directory relative topology paths are resolved against.
  std::filesystem::path base_dir;

  bool operator==(const RunConfig&) const = default;
};

/// Throws ConfigError naming the first invalid field.
void validate(const RunConfig& config);

std::string to_json(const RunConfig& config);
/// Parses and validates. Errors carry "line L, column C" positions.
RunConfig run_config_from_json(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const std::filesystem::path& path, const RunConfig& config);

/// The topology named by the config, with the config's order mode applied.
sim::Topology resolve_topology(const RunConfig& config);

train::TrainConfig to_train_config(const RunConfig& config, const std::filesystem::path& checkpoint_dir = {});

/// "3", "0,2,5" or "0..4" (inclusive).
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace prelac::cfg
