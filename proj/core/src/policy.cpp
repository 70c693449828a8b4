#include "prelac/policy.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "prelac/errors.hpp"

namespace prelac::eval {

std::vector<int> Policy::act_batch(std::span<const sim::DecisionRequest> requests, const obs::EcrEnv& env) {
  std::vector<int> actions;
  actions.reserve(requests.size());
  for (const auto& r : requests) actions.push_back(act(r, env));
  return actions;
}

void RandomPolicy::begin_episode(std::uint64_t seed) { rng_.seed(derive_seed(seed_, SeedStream::policy, seed)); }

int RandomPolicy::act(const sim::DecisionRequest&, const obs::EcrEnv&) {
  return std::uniform_int_distribution<int>(0, sim::kActionCount - 1)(rng_);
}

ProportionalHeuristicPolicy::ProportionalHeuristicPolicy(double threshold) : threshold_(threshold) {
  if (!(threshold > 0.0 && threshold < 0.5))
    throw ConfigError("heuristic threshold must lie in (0, 0.5), got " + std::to_string(threshold));
}

int ProportionalHeuristicPolicy::act(const sim::DecisionRequest& request, const obs::EcrEnv& env) {
  const auto& port = env.state().ports[static_cast<std::size_t>(request.port)];
  const auto capacity = static_cast<double>(env.topology().ports[static_cast<std::size_t>(request.port)].capacity);
  const auto stock = static_cast<double>(port.empty);
  if (stock < threshold_ * capacity) return 0;
  if (stock > (1.0 - threshold_) * capacity) {
    const double surplus = (stock - 0.5 * capacity) / stock;
    const int tenths = std::clamp(static_cast<int>(std::ceil(10.0 * surplus)), 1, 10);
    return sim::kNoOpAction + tenths;
  }
  return sim::kNoOpAction;
}

std::unique_ptr<Policy> make_baseline(const std::string& name, std::uint64_t seed) {
  if (name == "none") return std::make_unique<NoRepositioningPolicy>();
  if (name == "random") return std::make_unique<RandomPolicy>(seed);
  if (name == "heuristic") return std::make_unique<ProportionalHeuristicPolicy>();
  throw ConfigError("unknown baseline policy '" + name + "' (expected none, random or heuristic)");
}

EpisodeResult run_episode(Policy& policy, const sim::Topology& topology, std::uint64_t seed, int lookback) {
  obs::EcrEnv env(topology, lookback);
  env.reset(seed);
  policy.begin_episode(seed);
  EpisodeResult result;
  result.seed = seed;
  while (true) {
    sim::StepResult step = env.advance();
    for (double r : step.global_rewards) result.total_reward += r;
    if (step.done) break;
    const std::vector<int> actions = policy.act_batch(step.decisions, env);
    if (actions.size() != step.decisions.size()) throw ContractError(policy.name() + " returned the wrong action count");
    for (std::size_t i = 0; i < actions.size(); ++i) env.apply_action(step.decisions[i], actions[i]);
    result.decisions += static_cast<int>(actions.size());
  }
  result.fulfillment_ratio = sim::fulfillment_ratio(env.state());
  for (const auto& p : env.state().ports) result.ports.push_back({p.fulfilled_total, p.shortage_total});
  return result;
}

EvalReport evaluate(Policy& policy, const sim::Topology& topology, std::span<const std::uint64_t> seeds, int lookback) {
  if (seeds.empty()) throw ContractError("evaluate needs at least one seed");
  EvalReport report;
  report.policy = policy.name();
  report.topology = topology.name;
  report.ports.assign(topology.ports.size(), {});
  for (std::uint64_t seed : seeds) {
    EpisodeResult r = run_episode(policy, topology, seed, lookback);
    report.seeds.push_back(seed);
    report.ratios.push_back(r.fulfillment_ratio);
    for (std::size_t p = 0; p < r.ports.size(); ++p) {
      report.ports[p].fulfilled += r.ports[p].fulfilled;
      report.ports[p].shortage += r.ports[p].shortage;
    }
    ++report.episodes;
  }
  const auto n = static_cast<double>(report.ratios.size());
  report.mean = std::accumulate(report.ratios.begin(), report.ratios.end(), 0.0) / n;
  if (report.ratios.size() > 1) {
    double ss = 0.0;
    for (double r : report.ratios) ss += (r - report.mean) * (r - report.mean);
    report.stddev = std::sqrt(ss / (n - 1.0));
  }
  return report;
}

std::string report_csv(const EvalReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "policy,topology,seed,fulfillment_ratio,mean,std\n";
  for (std::size_t i = 0; i < report.ratios.size(); ++i)
    out << report.policy << ',' << report.topology << ',' << report.seeds[i] << ',' << report.ratios[i] << ','
        << report.mean << ',' << report.stddev << '\n';
  return out.str();
}

std::string port_breakdown_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "port,fulfilled,shortage\n";
  for (std::size_t p = 0; p < report.ports.size(); ++p)
    out << p << ',' << report.ports[p].fulfilled << ',' << report.ports[p].shortage << '\n';
  return out.str();
}

}  // namespace prelac::eval
