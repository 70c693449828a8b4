#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "prelac/adam.hpp"
#include "prelac/model.hpp"
#include "prelac/policy.hpp"

namespace prelac::train {

struct LossWeights {
  double gamma = 0.99;
  double local_critic_pretrain = 0.5;  // lambda_l^loc
  double local_critic = 0.25;          // lambda_l
  double global_critic = 0.5;          // lambda_g
  double entropy = 0.0;

  bool operator==(const LossWeights&) const = default;
};

void validate(const LossWeights& weights);

enum class Phase { pretrain, finetune };
enum class RolloutMode { sample, greedy };

std::string to_string(Phase phase);

/// One agent decision. Graph nodes (log_prob, probs, value) are only set
/// while a tape is recording; the plain doubles always are.
struct Transition {
  int agent = 0;
  int vessel = 0;
  int tick = 0;
  int action = 0;
  double sampled_log_prob = 0.0;
  double value_estimate = 0.0;
  /// Ticks until this port's next decision tick, or to the last tick.
  int interval = 1;
  double local_return = 0.0;   // sum_{j=1..k} gamma^{j-1} r^loc_{i,t+j}
  double global_return = 0.0;  // same over the global reward
  /// Detached local value at the next decision, 0 when terminal.
  double next_value = 0.0;
  bool terminal = false;

  ad::Tensor log_prob;
  ad::Tensor probs;
  ad::Tensor value;
};

/// Decisions sharing one simulator tick, the unit of the joint actor term.
struct TickGroup {
  int tick = 0;
  std::vector<int> members;  // indices into the transition list
  int interval = 1;          // ticks to the next decision tick of any agent
  double global_return = 0.0;
  double value_estimate = 0.0;
  double next_value = 0.0;  // detached global value, 0 when terminal
  bool terminal = false;
  ad::Tensor value;
};

struct DecisionTick {
  int tick = 0;
  obs::HeteroObservation observation;  // whole-graph view
  std::vector<sim::DecisionRequest> requests;
  std::vector<int> transitions;
};

struct EmbeddingSample {
  int port = 0;
  int tick = 0;
  std::vector<double> values;
};

struct EpisodeRecord {
  std::uint64_t seed = 0;
  std::vector<DecisionTick> ticks;
  std::vector<Transition> transitions;
  std::vector<TickGroup> groups;
  std::vector<double> global_rewards;              // per tick
  std::vector<std::vector<double>> local_rewards;  // [tick][port]
  double fulfillment_ratio = 0.0;
  std::vector<EmbeddingSample> embeddings;
};

struct RolloutOptions {
  RolloutMode mode = RolloutMode::sample;
  /// Compute every port embedding and the global critic value per tick.
  bool global_critic = false;
  bool keep_observations = true;
  bool capture_embeddings = false;
  double gamma = 0.99;
};

/// Runs one episode with the shared actor. Returns, intervals, bootstrap
/// values and tick groups are filled in once the episode ends.
EpisodeRecord rollout(obs::EcrEnv& env, const ad::ParameterSet& params, const net::ModelConfig& model,
                      std::uint64_t seed, Rng& sampler, const RolloutOptions& options);

/// Fills interval, returns, next values and terminal flags from the per-tick
/// reward logs and the recorded value estimates.
void finalize_returns(EpisodeRecord& record, int episode_ticks, double gamma);

/// R + gamma^k V(next) - V(current); the bootstrap is omitted when terminal.
double local_advantage(const Transition& transition, double gamma);
double global_advantage(const TickGroup& group, double gamma);

/// lambda_l^loc sum (A^loc)^2 + sum -log pi * sg(A^loc). Needs the graph nodes.
ad::Tensor pretrain_loss(std::span<const Transition> batch, const LossWeights& weights);

/// lambda_l sum (A^loc)^2 + lambda_g sum A^2 - sum_t (sum_i log pi_i) sg(A_t),
/// minus entropy * sum H(pi) when the entropy weight is positive.
ad::Tensor finetune_loss(std::span<const Transition> transitions, std::span<const TickGroup> groups,
                         const LossWeights& weights);

struct LossParts {
  double total = 0.0;
  double local_critic = 0.0;
  double global_critic = 0.0;
  double actor = 0.0;
};

/// Re-runs each decision tick on a tape and backpropagates that tick's share
/// of the phase loss, accumulating parameter gradients. Because bootstraps
/// are detached the summed gradient equals that of the whole-episode loss.
LossParts accumulate_gradients(EpisodeRecord& record, const ad::ParameterSet& params, const net::ModelConfig& model,
                               Phase phase, const LossWeights& weights);

struct TrainConfig {
  net::ModelConfig model;
  LossWeights weights;
  ad::AdamConfig adam;
  int pretrain_iterations = 100;
  int finetune_iterations = 200;
  /// Skip pre-training and drop the local critic term (the Normal GC ablation).
  bool normal_gc = false;
  int checkpoint_every = 0;
  std::filesystem::path checkpoint_dir;
};

struct IterationMetrics {
  int iteration = 0;
  Phase phase = Phase::pretrain;
  std::uint64_t seed = 0;
  double fulfillment_ratio = 0.0;
  double mean_local_return = 0.0;
  LossParts loss;
  double grad_norm = 0.0;
  int decisions = 0;
};

struct TrainResult {
  ad::ParameterSet params;
  std::vector<IterationMetrics> metrics;
};

using ProgressFn = std::function<void(const IterationMetrics&)>;

ad::ParameterSet initial_parameters(const sim::Topology& topology, const TrainConfig& config, std::uint64_t seed);

TrainResult pretrain(const sim::Topology& topology, const TrainConfig& config, std::uint64_t seed,
                     const ProgressFn& progress = {});

/// Inherits the EncGAT and local critic parameters, draws a fresh actor and
/// global critic, then trains on the global reward.
TrainResult finetune(const sim::Topology& topology, const ad::ParameterSet& pretrained, const TrainConfig& config,
                     std::uint64_t seed, const ProgressFn& progress = {});

/// pretrain then finetune, or finetune from scratch when normal_gc is set.
TrainResult train(const sim::Topology& topology, const TrainConfig& config, std::uint64_t seed,
                  const ProgressFn& progress = {});

std::string metrics_csv(std::span<const IterationMetrics> metrics);

/// Greedy policy over trained parameters: one forward pass per decision tick.
class LearnedPolicy final : public eval::Policy {
 public:
  LearnedPolicy(ad::ParameterSet params, net::ModelConfig model);
  std::string name() const override { return "learned"; }
  int act(const sim::DecisionRequest& request, const obs::EcrEnv& env) override;
  std::vector<int> act_batch(std::span<const sim::DecisionRequest> requests, const obs::EcrEnv& env) override;
  const ad::ParameterSet& params() const { return params_; }

 private:
  ad::ParameterSet params_;
  net::ModelConfig model_;
};

}  // namespace prelac::train
