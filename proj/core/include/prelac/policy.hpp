#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "prelac/observation.hpp"

namespace prelac::eval {

/// Maps pending decision requests to actions in 0..21.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  /// Called once per episode before the first decision.
  virtual void begin_episode(std::uint64_t /*seed*/) {}
  virtual int act(const sim::DecisionRequest& request, const obs::EcrEnv& env) = 0;
  /// All requests raised on one tick. Defaults to act() per request.
  virtual std::vector<int> act_batch(std::span<const sim::DecisionRequest> requests, const obs::EcrEnv& env);
};

class NoRepositioningPolicy final : public Policy {
 public:
  std::string name() const override { return "none"; }
  int act(const sim::DecisionRequest&, const obs::EcrEnv&) override { return sim::kNoOpAction; }
};

/// Uniform over the 22 actions. The stream restarts from `seed` at every
/// episode, mixed with the episode seed.
class RandomPolicy final : public Policy {
 public:
  explicit RandomPolicy(std::uint64_t seed) : seed_(seed), rng_(seed) {}
  std::string name() const override { return "random"; }
  void begin_episode(std::uint64_t seed) override;
  int act(const sim::DecisionRequest& request, const obs::EcrEnv& env) override;

 private:
  std::uint64_t seed_;
  Rng rng_;
};

/// Discharges everything when port stock is below threshold * capacity and
/// loads the surplus above half capacity when stock exceeds
/// (1 - threshold) * capacity.
class ProportionalHeuristicPolicy final : public Policy {
 public:
  explicit ProportionalHeuristicPolicy(double threshold = 0.3);
  std::string name() const override { return "heuristic"; }
  int act(const sim::DecisionRequest& request, const obs::EcrEnv& env) override;

 private:
  double threshold_;
};

std::unique_ptr<Policy> make_baseline(const std::string& name, std::uint64_t seed = 0);

struct PortBreakdown {
  sim::Count fulfilled = 0;
  sim::Count shortage = 0;
};

struct EpisodeResult {
  std::uint64_t seed = 0;
  double fulfillment_ratio = 0.0;
  double total_reward = 0.0;
  int decisions = 0;
  std::vector<PortBreakdown> ports;
};

/// One full episode of `policy` on a fresh environment.
EpisodeResult run_episode(Policy& policy, const sim::Topology& topology, std::uint64_t seed,
                          int lookback = obs::kDefaultLookback);

struct EvalReport {
  std::string policy;
  std::string topology;
  std::vector<std::uint64_t> seeds;
  std::vector<double> ratios;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for one seed
  std::vector<PortBreakdown> ports;  // summed over seeds
  int episodes = 0;
};

EvalReport evaluate(Policy& policy, const sim::Topology& topology, std::span<const std::uint64_t> seeds,
                    int lookback = obs::kDefaultLookback);

/// "mean,std,..." header plus one row per seed.
std::string report_csv(const EvalReport& report);
std::string port_breakdown_csv(const EvalReport& report);

}  // namespace prelac::eval
