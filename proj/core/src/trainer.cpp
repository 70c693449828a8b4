#include "prelac/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "prelac/checkpoint.hpp"
#include "prelac/errors.hpp"
#include "prelac/ops.hpp"

namespace prelac::train {

using ad::Tensor;

namespace {

struct TickForward {
  std::vector<Tensor> probs;         // per request
  std::vector<Tensor> local_values;  // per request, when requested
  Tensor global_value;
  net::EncGatOutput encoded;
};

int vessel_index(const obs::HeteroObservation& observation, int vessel) {
  return observation.index_of({obs::VertexType::vessel, vessel});
}

int port_index(const obs::HeteroObservation& observation, int port) {
  return observation.index_of({obs::VertexType::port, port});
}

TickForward forward_tick(const obs::HeteroObservation& observation, std::span<const sim::DecisionRequest> requests,
                         const ad::ParameterSet& params, const net::ModelConfig& model, bool local_values,
                         bool global_value, int port_count) {
  std::set<int> targets;
  for (const auto& r : requests) {
    targets.insert(port_index(observation, r.port));
    targets.insert(vessel_index(observation, r.vessel));
  }
  if (global_value)
    for (int p = 0; p < port_count; ++p) targets.insert(port_index(observation, p));
  const std::vector<int> target_list(targets.begin(), targets.end());

  TickForward out;
  out.encoded = net::encgat_forward(observation, params, model.encgat, target_list);
  const auto& emb = out.encoded.embedding;
  std::map<int, Tensor> values;
  for (const auto& r : requests) {
    const int pi = port_index(observation, r.port);
    const Tensor& port_emb = emb[static_cast<std::size_t>(pi)];
    out.probs.push_back(net::actor_header(port_emb, emb[static_cast<std::size_t>(vessel_index(observation, r.vessel))],
                                          {}, params, net::actor_prefix(model, r.port)));
    if (local_values) {
      auto it = values.find(pi);
      if (it == values.end()) it = values.emplace(pi, net::critic_header(port_emb, params, net::CriticKind::local)).first;
      out.local_values.push_back(it->second);
    }
  }
  if (global_value) {
    std::vector<Tensor> ports;
    for (int p = 0; p < port_count; ++p) ports.push_back(emb[static_cast<std::size_t>(port_index(observation, p))]);
    out.global_value = net::critic_header(net::pool_embeddings(ports), params, net::CriticKind::global);
  }
  return out;
}

int choose(const Tensor& probs, RolloutMode mode, Rng& sampler) {
  auto p = probs.values();
  if (mode == RolloutMode::greedy)
    return static_cast<int>(std::distance(p.begin(), std::max_element(p.begin(), p.end())));
  std::discrete_distribution<int> dist(p.begin(), p.end());
  return dist(sampler);
}

double discounted_sum(const std::vector<double>& rewards, int from, int count, double gamma) {
  double total = 0.0, factor = 1.0;
  for (int j = 0; j < count; ++j) {
    total += factor * rewards[static_cast<std::size_t>(from + j)];
    factor *= gamma;
  }
  return total;
}

void require_nodes(const Transition& t) {
  if (!t.log_prob.defined() || !t.value.defined())
    throw ContractError("loss needs recorded log-probability and value nodes for the transition at tick " +
                        std::to_string(t.tick));
}

}  // namespace

void validate(const LossWeights& w) {
  if (!(w.gamma > 0.0 && w.gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
  for (double x : {w.local_critic_pretrain, w.local_critic, w.global_critic, w.entropy})
    if (!(x >= 0.0)) throw ConfigError("loss weights must be non-negative");
}

std::string to_string(Phase phase) { return phase == Phase::pretrain ? "pretrain" : "finetune"; }

EpisodeRecord rollout(obs::EcrEnv& env, const ad::ParameterSet& params, const net::ModelConfig& model,
                      std::uint64_t seed, Rng& sampler, const RolloutOptions& options) {
  const auto& topo = env.topology();
  const int ports = static_cast<int>(topo.ports.size());
  const int horizon = topo.episode_ticks;
  const bool values = options.mode == RolloutMode::sample;

  EpisodeRecord rec;
  rec.seed = seed;
  rec.global_rewards.assign(static_cast<std::size_t>(horizon), 0.0);
  rec.local_rewards.assign(static_cast<std::size_t>(horizon), std::vector<double>(static_cast<std::size_t>(ports), 0.0));
  env.reset(seed);
  while (true) {
    sim::StepResult step = env.advance();
    for (std::size_t i = 0; i < step.global_rewards.size(); ++i) {
      const auto tick = static_cast<std::size_t>(step.first_tick) + i;
      rec.global_rewards[tick] = step.global_rewards[i];
      rec.local_rewards[tick] = step.local_rewards[i];
    }
    if (step.done) break;

    DecisionTick dt;
    dt.tick = env.state().tick;
    dt.requests = step.decisions;
    dt.observation = env.observe_all();
    TickForward fwd =
        forward_tick(dt.observation, dt.requests, params, model, values, values && options.global_critic, ports);

    TickGroup group;
    group.tick = dt.tick;
    if (fwd.global_value.defined()) group.value_estimate = fwd.global_value.item();
    std::vector<int> actions;
    for (std::size_t i = 0; i < dt.requests.size(); ++i) {
      Transition tr;
      tr.agent = dt.requests[i].port;
      tr.vessel = dt.requests[i].vessel;
      tr.tick = dt.tick;
      tr.action = choose(fwd.probs[i], options.mode, sampler);
      tr.sampled_log_prob = std::log(fwd.probs[i].values()[static_cast<std::size_t>(tr.action)]);
      if (values) tr.value_estimate = fwd.local_values[i].item();
      actions.push_back(tr.action);
      dt.transitions.push_back(static_cast<int>(rec.transitions.size()));
      group.members.push_back(static_cast<int>(rec.transitions.size()));
      rec.transitions.push_back(std::move(tr));
    }
    if (options.capture_embeddings) {
      std::set<int> seen;
      for (const auto& r : dt.requests) {
        if (!seen.insert(r.port).second) continue;
        auto v = fwd.encoded.embedding[static_cast<std::size_t>(port_index(dt.observation, r.port))].values();
        rec.embeddings.push_back({r.port, dt.tick, {v.begin(), v.end()}});
      }
    }
    for (std::size_t i = 0; i < actions.size(); ++i) env.apply_action(dt.requests[i], actions[i]);
    if (!options.keep_observations) dt.observation = {};
    rec.groups.push_back(std::move(group));
    rec.ticks.push_back(std::move(dt));
  }
  rec.fulfillment_ratio = sim::fulfillment_ratio(env.state());
  finalize_returns(rec, horizon, options.gamma);
  return rec;
}

void finalize_returns(EpisodeRecord& rec, int episode_ticks, double gamma) {
  const int last = episode_ticks - 1;
  // Per port: decision ticks in order and the value estimate at each.
  std::map<int, std::map<int, double>> port_ticks;
  for (const auto& t : rec.transitions) port_ticks[t.agent].emplace(t.tick, t.value_estimate);
  std::vector<double> port_rewards(rec.local_rewards.size());
  for (auto& t : rec.transitions) {
    const auto& ticks = port_ticks[t.agent];
    auto next = ticks.upper_bound(t.tick);
    t.terminal = next == ticks.end();
    t.interval = t.terminal ? last - t.tick : next->first - t.tick;
    t.next_value = t.terminal ? 0.0 : next->second;
    if (t.interval < 1) throw ContractError("decision at tick " + std::to_string(t.tick) + " leaves no reward interval");
    for (std::size_t k = 0; k < rec.local_rewards.size(); ++k)
      port_rewards[k] = rec.local_rewards[k][static_cast<std::size_t>(t.agent)];
    t.local_return = discounted_sum(port_rewards, t.tick + 1, t.interval, gamma);
    t.global_return = discounted_sum(rec.global_rewards, t.tick + 1, t.interval, gamma);
  }
  for (std::size_t g = 0; g < rec.groups.size(); ++g) {
    auto& group = rec.groups[g];
    group.terminal = g + 1 == rec.groups.size();
    group.interval = group.terminal ? last - group.tick : rec.groups[g + 1].tick - group.tick;
    group.next_value = group.terminal ? 0.0 : rec.groups[g + 1].value_estimate;
    group.global_return = discounted_sum(rec.global_rewards, group.tick + 1, group.interval, gamma);
  }
}

double local_advantage(const Transition& t, double gamma) {
  const double bootstrap = t.terminal ? 0.0 : std::pow(gamma, t.interval) * t.next_value;
  const double current = t.value.defined() ? t.value.item() : t.value_estimate;
  return t.local_return + bootstrap - current;
}

double global_advantage(const TickGroup& g, double gamma) {
  const double bootstrap = g.terminal ? 0.0 : std::pow(gamma, g.interval) * g.next_value;
  const double current = g.value.defined() ? g.value.item() : g.value_estimate;
  return g.global_return + bootstrap - current;
}

namespace {

// target - V as a graph node, target detached.
Tensor advantage_node(const Tensor& value, double target) { return ad::add_scalar(ad::scale(value, -1.0), target); }

double local_target(const Transition& t, double gamma) {
  return t.local_return + (t.terminal ? 0.0 : std::pow(gamma, t.interval) * t.next_value);
}

double global_target(const TickGroup& g, double gamma) {
  return g.global_return + (g.terminal ? 0.0 : std::pow(gamma, g.interval) * g.next_value);
}

Tensor pretrain_loss_parts(std::span<const Transition> batch, const LossWeights& w, LossParts* parts) {
  if (batch.empty()) throw ContractError("pretrain_loss on an empty batch");
  std::vector<Tensor> critic, actor;
  for (const auto& t : batch) {
    require_nodes(t);
    Tensor adv = advantage_node(t.value, local_target(t, w.gamma));
    critic.push_back(ad::square(adv));
    actor.push_back(ad::scale(t.log_prob, -adv.item()));
  }
  Tensor critic_sum = ad::add_n(critic), actor_sum = ad::add_n(actor);
  Tensor loss = ad::add(ad::scale(critic_sum, w.local_critic_pretrain), actor_sum);
  if (parts) {
    parts->local_critic += critic_sum.item();
    parts->actor += actor_sum.item();
    parts->total += loss.item();
  }
  return loss;
}

Tensor finetune_loss_parts(std::span<const Transition> transitions, std::span<const TickGroup> groups,
                           const LossWeights& w, LossParts* parts) {
  if (transitions.empty() || groups.empty()) throw ContractError("finetune_loss on an empty batch");
  std::vector<Tensor> terms;
  if (w.local_critic > 0.0) {
    std::vector<Tensor> critic;
    for (const auto& t : transitions) {
      require_nodes(t);
      critic.push_back(ad::square(advantage_node(t.value, local_target(t, w.gamma))));
    }
    Tensor sum = ad::add_n(critic);
    if (parts) parts->local_critic += sum.item();
    terms.push_back(ad::scale(sum, w.local_critic));
  }
  std::vector<Tensor> critic, actor;
  for (const auto& g : groups) {
    if (!g.value.defined()) throw ContractError("finetune_loss needs the global value node at tick " + std::to_string(g.tick));
    if (g.members.empty()) throw ContractError("tick group without decisions at tick " + std::to_string(g.tick));
    Tensor adv = advantage_node(g.value, global_target(g, w.gamma));
    critic.push_back(ad::square(adv));
    std::vector<Tensor> logs;
    for (int m : g.members) {
      const auto& t = transitions[static_cast<std::size_t>(m)];
      if (!t.log_prob.defined()) throw ContractError("finetune_loss needs log-probability nodes");
      logs.push_back(t.log_prob);
    }
    actor.push_back(ad::scale(ad::add_n(logs), -adv.item()));
  }
  Tensor critic_sum = ad::add_n(critic), actor_sum = ad::add_n(actor);
  if (parts) {
    parts->global_critic += critic_sum.item();
    parts->actor += actor_sum.item();
  }
  terms.push_back(ad::scale(critic_sum, w.global_critic));
  terms.push_back(actor_sum);
  if (w.entropy > 0.0) {
    std::vector<Tensor> ent;
    for (const auto& t : transitions) {
      if (!t.probs.defined()) throw ContractError("entropy bonus needs probability nodes");
      ent.push_back(ad::entropy(t.probs));
    }
    terms.push_back(ad::scale(ad::add_n(ent), -w.entropy));
  }
  Tensor loss = ad::add_n(terms);
  if (parts) parts->total += loss.item();
  return loss;
}

}  // namespace

Tensor pretrain_loss(std::span<const Transition> batch, const LossWeights& weights) {
  return pretrain_loss_parts(batch, weights, nullptr);
}

Tensor finetune_loss(std::span<const Transition> transitions, std::span<const TickGroup> groups,
                     const LossWeights& weights) {
  return finetune_loss_parts(transitions, groups, weights, nullptr);
}

LossParts accumulate_gradients(EpisodeRecord& rec, const ad::ParameterSet& params, const net::ModelConfig& model,
                               Phase phase, const LossWeights& weights) {
  LossParts parts;
  if (rec.ticks.size() != rec.groups.size()) throw ContractError("episode record ticks and groups disagree");
  int port_count = 0;
  for (const auto& v : rec.ticks.empty() ? std::vector<obs::VertexRef>{} : rec.ticks.front().observation.vertices)
    if (v.type == obs::VertexType::port) ++port_count;
  const bool global = phase == Phase::finetune;
  for (std::size_t g = 0; g < rec.ticks.size(); ++g) {
    auto& dt = rec.ticks[g];
    if (dt.observation.vertices.empty())
      throw ContractError("episode record was made without observations; gradients need them");
    ad::Tape tape;
    ad::TapeScope scope(tape);
    TickForward fwd = forward_tick(dt.observation, dt.requests, params, model, true, global, port_count);
    std::vector<Transition> chunk;
    for (std::size_t i = 0; i < dt.transitions.size(); ++i) {
      Transition t = rec.transitions[static_cast<std::size_t>(dt.transitions[i])];
      t.probs = fwd.probs[i];
      t.log_prob = ad::log(ad::pick(fwd.probs[i], 0, static_cast<std::size_t>(t.action)));
      t.value = fwd.local_values[i];
      chunk.push_back(std::move(t));
    }
    Tensor loss;
    if (global) {
      TickGroup group = rec.groups[g];
      group.value = fwd.global_value;
      group.members.clear();
      for (std::size_t i = 0; i < chunk.size(); ++i) group.members.push_back(static_cast<int>(i));
      loss = finetune_loss_parts(chunk, std::span<const TickGroup>(&group, 1), weights, &parts);
    } else {
      loss = pretrain_loss_parts(chunk, weights, &parts);
    }
    tape.backward(loss);
  }
  return parts;
}

ad::ParameterSet initial_parameters(const sim::Topology& topology, const TrainConfig& config, std::uint64_t seed) {
  Rng rng = make_rng(seed, SeedStream::init);
  return net::init_model(config.model, static_cast<int>(topology.ports.size()), rng);
}

namespace {

void maybe_checkpoint(const TrainConfig& config, const ad::ParameterSet& params, Phase phase, int iteration,
                      bool final) {
  if (config.checkpoint_dir.empty()) return;
  const bool periodic = config.checkpoint_every > 0 && (iteration + 1) % config.checkpoint_every == 0;
  if (!periodic && !final) return;
  std::filesystem::create_directories(config.checkpoint_dir);
  const std::string stem = to_string(phase) + (final ? "-final" : "-" + std::to_string(iteration + 1));
  save_checkpoint(config.checkpoint_dir / (stem + ".ckpt"), params);
}

double mean_local_return(const EpisodeRecord& rec) {
  if (rec.local_rewards.empty() || rec.local_rewards.front().empty()) return 0.0;
  double total = 0.0;
  for (const auto& row : rec.local_rewards)
    for (double r : row) total += r;
  return total / static_cast<double>(rec.local_rewards.front().size());
}

std::vector<IterationMetrics> run_phase(const sim::Topology& topology, ad::ParameterSet& params,
                                        const TrainConfig& config, const LossWeights& weights, Phase phase,
                                        int iterations, std::uint64_t seed, const ProgressFn& progress) {
  validate(weights);
  obs::EcrEnv env(topology, config.model.encgat.lookback);
  ad::AdamState adam(config.adam);
  const std::uint64_t phase_index = phase == Phase::pretrain ? 0 : 1;
  Rng sampler = make_rng(seed, SeedStream::sampling, phase_index);
  RolloutOptions options;
  options.mode = RolloutMode::sample;
  options.global_critic = phase == Phase::finetune;
  options.gamma = weights.gamma;
  std::vector<IterationMetrics> metrics;
  for (int it = 0; it < iterations; ++it) {
    const std::uint64_t episode_seed =
        derive_seed(seed, SeedStream::simulator, (phase_index << 32) + static_cast<std::uint64_t>(it));
    EpisodeRecord rec = rollout(env, params, config.model, episode_seed, sampler, options);
    IterationMetrics m;
    m.iteration = it;
    m.phase = phase;
    m.seed = seed;
    m.fulfillment_ratio = rec.fulfillment_ratio;
    m.mean_local_return = mean_local_return(rec);
    m.decisions = static_cast<int>(rec.transitions.size());
    if (!rec.transitions.empty()) {
      m.loss = accumulate_gradients(rec, params, config.model, phase, weights);
      m.grad_norm = ad::adam_step(params, adam);
    }
    metrics.push_back(m);
    if (progress) progress(m);
    maybe_checkpoint(config, params, phase, it, it + 1 == iterations);
  }
  return metrics;
}

}  // namespace

TrainResult pretrain(const sim::Topology& topology, const TrainConfig& config, std::uint64_t seed,
                     const ProgressFn& progress) {
  TrainResult result;
  result.params = initial_parameters(topology, config, seed);
  result.metrics = run_phase(topology, result.params, config, config.weights, Phase::pretrain,
                             config.pretrain_iterations, seed, progress);
  return result;
}

TrainResult finetune(const sim::Topology& topology, const ad::ParameterSet& pretrained, const TrainConfig& config,
                     std::uint64_t seed, const ProgressFn& progress) {
  Rng scratch_rng(0);
  const ad::ParameterSet reference =
      net::init_model(config.model, static_cast<int>(topology.ports.size()), scratch_rng);
  std::vector<std::string> missing;
  TrainResult result;
  for (const auto& [name, tensor] : reference) {
    const bool inherited = name.rfind("encgat.", 0) == 0 || name.rfind("critic.local.", 0) == 0;
    if (!inherited) continue;
    if (!pretrained.contains(name)) {
      missing.push_back(name);
      continue;
    }
    const Tensor& source = pretrained.at(name);
    if (source.shape() != tensor.shape())
      throw ContractError("inherited parameter '" + name + "' has shape " + ad::to_string(source.shape()) +
                          ", expected " + ad::to_string(tensor.shape()));
    result.params.add(name, source.clone());
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& n : missing) list += (list.empty() ? "" : ", ") + n;
    throw ContractError("fine-tuning needs pre-trained parameters that are missing: " + list);
  }
  Rng rng = make_rng(seed, SeedStream::reinit);
  net::init_actor(result.params, config.model, static_cast<int>(topology.ports.size()), rng);
  net::init_critic(result.params, config.model, net::CriticKind::global, rng);
  LossWeights weights = config.weights;
  if (config.normal_gc) weights.local_critic = 0.0;
  result.metrics = run_phase(topology, result.params, config, weights, Phase::finetune, config.finetune_iterations,
                             seed, progress);
  return result;
}

TrainResult train(const sim::Topology& topology, const TrainConfig& config, std::uint64_t seed,
                  const ProgressFn& progress) {
  if (config.normal_gc) return finetune(topology, initial_parameters(topology, config, seed), config, seed, progress);
  TrainResult pre = pretrain(topology, config, seed, progress);
  TrainResult fine = finetune(topology, pre.params, config, seed, progress);
  pre.metrics.insert(pre.metrics.end(), fine.metrics.begin(), fine.metrics.end());
  fine.metrics = std::move(pre.metrics);
  return fine;
}

std::string metrics_csv(std::span<const IterationMetrics> metrics) {
  std::ostringstream out;
  out.precision(17);
  out << "iteration,phase,seed,fulfillment_ratio,mean_local_return,loss,local_critic_loss,global_critic_loss,"
         "actor_loss,grad_norm,decisions\n";
  for (const auto& m : metrics)
    out << m.iteration << ',' << to_string(m.phase) << ',' << m.seed << ',' << m.fulfillment_ratio << ','
        << m.mean_local_return << ',' << m.loss.total << ',' << m.loss.local_critic << ',' << m.loss.global_critic
        << ',' << m.loss.actor << ',' << m.grad_norm << ',' << m.decisions << '\n';
  return out.str();
}

LearnedPolicy::LearnedPolicy(ad::ParameterSet params, net::ModelConfig model)
    : params_(std::move(params)), model_(std::move(model)) {}

int LearnedPolicy::act(const sim::DecisionRequest& request, const obs::EcrEnv& env) {
  return act_batch(std::span<const sim::DecisionRequest>(&request, 1), env).front();
}

std::vector<int> LearnedPolicy::act_batch(std::span<const sim::DecisionRequest> requests, const obs::EcrEnv& env) {
  if (requests.empty()) return {};
  const obs::HeteroObservation observation = env.observe_all();
  TickForward fwd = forward_tick(observation, requests, params_, model_, false, false,
                                 static_cast<int>(env.topology().ports.size()));
  Rng unused(0);
  std::vector<int> actions;
  for (const auto& p : fwd.probs) actions.push_back(choose(p, RolloutMode::greedy, unused));
  return actions;
}

}  // namespace prelac::train
