#include <doctest.h>

#include <cmath>
#include <map>

#include "oracles.hpp"
#include "prelac/errors.hpp"
#include "prelac/ops.hpp"
#include "prelac/trainer.hpp"

using namespace prelac;
using ad::Tensor;

namespace {

train::TrainConfig toy_config() {
  train::TrainConfig c;
  c.model.encgat.d_model = 8;
  c.model.encgat.ff_width = 12;
  c.model.encgat.lookback = 6;
  c.pretrain_iterations = 2;
  c.finetune_iterations = 2;
  c.adam.learning_rate = 1e-3;
  return c;
}

Tensor scalar_node(double v) { return Tensor::from({1, 1}, {v}, true); }

train::EpisodeRecord toy_rollout(const ad::ParameterSet& params, const train::TrainConfig& config, bool global,
                                 std::uint64_t seed = 9) {
  obs::EcrEnv env(testing::toy_topology(), config.model.encgat.lookback);
  Rng sampler(seed);
  train::RolloutOptions options;
  options.global_critic = global;
  return train::rollout(env, params, config.model, seed, sampler, options);
}

ad::ParameterSet finetune_params(const train::TrainConfig& config, std::uint64_t seed) {
  auto params = train::initial_parameters(testing::toy_topology(), config, seed);
  Rng rng(seed + 1);
  net::init_critic(params, config.model, net::CriticKind::global, rng);
  return params;
}

std::map<std::string, std::vector<double>> grads_of(const ad::ParameterSet& params) {
  std::map<std::string, std::vector<double>> out;
  for (const auto& [name, t] : params)
    if (t.has_grad()) out[name] = {t.grad().begin(), t.grad().end()};
  return out;
}

}  // namespace

TEST_CASE("advantage plug-in cases") {
  train::Transition t;
  t.interval = 1;
  t.local_return = 1.0;
  t.next_value = 0.0;
  t.value_estimate = 0.0;
  CHECK(train::local_advantage(t, 0.99) == 1.0);
  train::Transition end;
  end.terminal = true;
  end.local_return = 0.0;
  end.value_estimate = 2.0;
  end.next_value = 5.0;
  CHECK(train::local_advantage(end, 0.99) == -2.0);
  train::TickGroup g;
  g.interval = 3;
  g.global_return = 1.5;
  g.next_value = 2.0;
  g.value_estimate = 1.0;
  CHECK(train::global_advantage(g, 0.5) == doctest::Approx(1.5 + 0.125 * 2.0 - 1.0));
}

TEST_CASE("pre-training loss hand value") {
  train::Transition t;
  t.terminal = true;
  t.local_return = 2.0;
  t.value = scalar_node(0.0);
  t.log_prob = scalar_node(-1.0);
  train::LossWeights w;
  w.local_critic_pretrain = 0.5;
  std::vector<train::Transition> batch{t};
  CHECK(train::pretrain_loss(batch, w).item() == doctest::Approx(4.0).epsilon(1e-15));
  batch[0].log_prob = Tensor{};
  CHECK_THROWS_AS(train::pretrain_loss(batch, w), ContractError);
}

TEST_CASE("critic weight zero leaves critic headers without gradient") {
  auto config = toy_config();
  auto params = train::initial_parameters(testing::toy_topology(), config, 1);
  auto rec = toy_rollout(params, config, false);
  train::LossWeights w;
  w.local_critic_pretrain = 0.0;
  for (auto& [_, t] : params) t.set_requires_grad(true);
  train::accumulate_gradients(rec, params, config.model, train::Phase::pretrain, w);
  for (const auto& [name, t] : params)
    if (name.rfind("critic.", 0) == 0) CHECK_FALSE((t.has_grad() && std::any_of(t.grad().begin(), t.grad().end(), [](double g) { return g != 0.0; })));
  bool encgat_grad = false;
  for (const auto& [name, t] : params)
    if (name.rfind("encgat.", 0) == 0 && t.has_grad())
      for (double g : t.grad()) encgat_grad |= g != 0.0;
  CHECK(encgat_grad);
}

TEST_CASE("actor gradient step raises the log-probability of a positive-advantage action") {
  net::ModelConfig model;
  model.encgat.d_model = 8;
  ad::ParameterSet params;
  Rng rng(2);
  net::init_actor(params, model, 1, rng);
  for (auto& [_, t] : params) t.set_requires_grad(true);
  Tensor port = testing::random_tensor(1, 8, 3), vessel = testing::random_tensor(1, 8, 4);
  const int action = 6;
  auto log_prob = [&]() { return std::log(net::actor_header(port, vessel, {}, params, "actor").values()[action]); };
  const double before = log_prob();
  {
    ad::Tape tape;
    ad::TapeScope scope(tape);
    train::Transition t;
    t.terminal = true;
    t.local_return = 3.0;
    t.value = Tensor::from({1, 1}, {0.0});
    t.log_prob = ad::log(ad::pick(net::actor_header(port, vessel, {}, params, "actor"), 0, action));
    std::vector<train::Transition> batch{t};
    tape.backward(train::pretrain_loss(batch, {}));
  }
  for (auto& [_, t] : params) {
    auto v = t.mutable_values();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= 1e-3 * t.grad()[i];
  }
  CHECK(log_prob() > before);
}

TEST_CASE("fine-tuning loss on a two-transition batch") {
  std::vector<train::Transition> ts(2);
  ts[0].terminal = false;
  ts[0].interval = 2;
  ts[0].local_return = 0.7;
  ts[0].next_value = 1.1;
  ts[0].value = scalar_node(0.4);
  ts[0].log_prob = scalar_node(-0.9);
  ts[1].terminal = true;
  ts[1].interval = 1;
  ts[1].local_return = 0.2;
  ts[1].value = scalar_node(-0.3);
  ts[1].log_prob = scalar_node(-2.1);
  std::vector<train::TickGroup> groups(1);
  groups[0].members = {0, 1};
  groups[0].interval = 2;
  groups[0].global_return = 1.9;
  groups[0].next_value = 3.0;
  groups[0].value = scalar_node(2.5);
  train::LossWeights w;
  w.gamma = 0.9;
  w.local_critic = 0.25;
  w.global_critic = 0.5;
  const double a0 = 0.7 + 0.81 * 1.1 - 0.4;
  const double a1 = 0.2 - (-0.3);
  const double ag = 1.9 + 0.81 * 3.0 - 2.5;
  const double expected = 0.25 * (a0 * a0 + a1 * a1) + 0.5 * ag * ag - (-0.9 + -2.1) * ag;
  CHECK(std::abs(train::finetune_loss(ts, groups, w).item() - expected) < 1e-12);

  // A lone agent contributes one log-probability term.
  std::vector<train::TickGroup> lone(1);
  lone[0] = groups[0];
  lone[0].members = {1};
  const double single = 0.25 * (a0 * a0 + a1 * a1) + 0.5 * ag * ag - (-2.1) * ag;
  CHECK(std::abs(train::finetune_loss(ts, lone, w).item() - single) < 1e-12);

  // Zero local weight drops the local critic term.
  w.local_critic = 0.0;
  CHECK(std::abs(train::finetune_loss(ts, groups, w).item() - (expected - 0.25 * (a0 * a0 + a1 * a1))) < 1e-12);
}

TEST_CASE("returns match a replay of the raw reward logs") {
  auto config = toy_config();
  auto params = finetune_params(config, 3);
  auto rec = toy_rollout(params, config, true);
  const double gamma = 0.99;
  const int horizon = testing::toy_topology().episode_ticks;
  REQUIRE(rec.transitions.size() > 5);
  std::map<int, std::vector<int>> decision_ticks;
  for (const auto& t : rec.transitions)
    if (decision_ticks[t.agent].empty() || decision_ticks[t.agent].back() != t.tick) decision_ticks[t.agent].push_back(t.tick);
  for (const auto& t : rec.transitions) {
    const auto& ticks = decision_ticks[t.agent];
    auto next = std::upper_bound(ticks.begin(), ticks.end(), t.tick);
    const int k = next == ticks.end() ? horizon - 1 - t.tick : *next - t.tick;
    CHECK(t.interval == k);
    CHECK(t.terminal == (next == ticks.end()));
    double r = 0.0;
    for (int j = 1; j <= k; ++j) r += std::pow(gamma, j - 1) * rec.local_rewards[static_cast<std::size_t>(t.tick + j)][static_cast<std::size_t>(t.agent)];
    CHECK(t.local_return == doctest::Approx(r).epsilon(1e-12));
  }
  for (std::size_t g = 0; g + 1 < rec.groups.size(); ++g)
    CHECK(rec.groups[g].interval == rec.groups[g + 1].tick - rec.groups[g].tick);
}

TEST_CASE("constant rewards give advantage c times k with zero values and gamma one") {
  train::EpisodeRecord rec;
  const int horizon = 12;
  rec.global_rewards.assign(horizon, 2.0);
  rec.local_rewards.assign(horizon, {1.0, 1.0});
  for (int tick : {1, 4, 9}) {
    train::Transition t;
    t.agent = 0;
    t.tick = tick;
    rec.transitions.push_back(t);
    train::TickGroup g;
    g.tick = tick;
    g.members = {static_cast<int>(rec.transitions.size()) - 1};
    rec.groups.push_back(g);
  }
  train::finalize_returns(rec, horizon, 1.0);
  const std::vector<int> ks{3, 5, 2};
  for (std::size_t i = 0; i < ks.size(); ++i) {
    CHECK(train::local_advantage(rec.transitions[i], 1.0) == doctest::Approx(1.0 * ks[i]));
    CHECK(train::global_advantage(rec.groups[i], 1.0) == doctest::Approx(2.0 * ks[i]));
  }
}

TEST_CASE("local rewards sum to the global reward every tick") {
  auto config = toy_config();
  auto params = train::initial_parameters(testing::toy_topology(), config, 4);
  auto rec = toy_rollout(params, config, false);
  double local = 0.0, global = 0.0;
  for (std::size_t k = 0; k < rec.global_rewards.size(); ++k) {
    double row = 0.0;
    for (double r : rec.local_rewards[k]) row += r;
    CHECK(row == doctest::Approx(rec.global_rewards[k]).epsilon(1e-12));
    local += row;
    global += rec.global_rewards[k];
  }
  CHECK(local == doctest::Approx(global).epsilon(1e-12));
}

TEST_CASE("per-tick gradient accumulation equals one whole-episode tape") {
  auto config = toy_config();
  auto params = finetune_params(config, 5);
  auto rec = toy_rollout(params, config, true);
  for (auto& [_, t] : params) t.set_requires_grad(true);
  const auto weights = config.weights;
  train::accumulate_gradients(rec, params, config.model, train::Phase::finetune, weights);
  const auto chunked = grads_of(params);
  for (auto& [_, t] : params) t.clear_grad();

  ad::Tape tape;
  {
    ad::TapeScope scope(tape);
    auto transitions = rec.transitions;
    auto groups = rec.groups;
    const int ports = static_cast<int>(testing::toy_topology().ports.size());
    for (std::size_t g = 0; g < rec.ticks.size(); ++g) {
      const auto& dt = rec.ticks[g];
      auto out = net::encgat_forward(dt.observation, params, config.model.encgat);
      std::vector<Tensor> port_embs;
      for (int p = 0; p < ports; ++p)
        port_embs.push_back(out.embedding[static_cast<std::size_t>(dt.observation.index_of({obs::VertexType::port, p}))]);
      groups[g].value = net::critic_header(net::pool_embeddings(port_embs), params, net::CriticKind::global);
      for (std::size_t i = 0; i < dt.requests.size(); ++i) {
        auto& t = transitions[static_cast<std::size_t>(dt.transitions[i])];
        const auto& r = dt.requests[i];
        const Tensor& pe = out.embedding[static_cast<std::size_t>(dt.observation.index_of({obs::VertexType::port, r.port}))];
        const Tensor& ve = out.embedding[static_cast<std::size_t>(dt.observation.index_of({obs::VertexType::vessel, r.vessel}))];
        t.probs = net::actor_header(pe, ve, {}, params, "actor");
        t.log_prob = ad::log(ad::pick(t.probs, 0, static_cast<std::size_t>(t.action)));
        t.value = net::critic_header(pe, params, net::CriticKind::local);
      }
    }
    tape.backward(train::finetune_loss(transitions, groups, weights));
  }
  const auto whole = grads_of(params);
  REQUIRE(chunked.size() == whole.size());
  double worst = 0.0;
  for (const auto& [name, g] : whole)
    for (std::size_t i = 0; i < g.size(); ++i)
      worst = std::max(worst, testing::relative_error(chunked.at(name)[i], g[i], 1e-10));
  CHECK(worst < 1e-9);
}

TEST_CASE("zero learning rate leaves parameters bit identical") {
  auto config = toy_config();
  config.adam.learning_rate = 0.0;
  const auto topo = testing::toy_topology();
  auto initial = train::initial_parameters(topo, config, 6);
  auto result = train::pretrain(topo, config, 6);
  CHECK(result.params.bit_equal(initial));
  CHECK(result.metrics.size() == static_cast<std::size_t>(config.pretrain_iterations));
}

TEST_CASE("fine-tuning inherits the embedding and redraws the actor") {
  auto config = toy_config();
  config.adam.learning_rate = 0.0;
  const auto topo = testing::toy_topology();
  auto pre = train::pretrain(topo, config, 7);
  auto fine = train::finetune(topo, pre.params, config, 7);
  bool actor_differs = false;
  for (const auto& [name, t] : fine.params) {
    if (name.rfind("encgat.", 0) == 0 || name.rfind("critic.local.", 0) == 0) {
      CHECK(std::equal(t.values().begin(), t.values().end(), pre.params.at(name).values().begin()));
    } else if (name.rfind("actor.", 0) == 0) {
      auto old = pre.params.at(name).values();
      actor_differs |= !std::equal(t.values().begin(), t.values().end(), old.begin());
    }
  }
  CHECK(actor_differs);
  CHECK(fine.params.contains("critic.global.fc2.weight"));

  auto broken = pre.params.clone();
  broken.erase_prefix("encgat.block1");
  CHECK_THROWS_AS(train::finetune(topo, broken, config, 7), ContractError);
}

TEST_CASE("training is deterministic and greedy rollouts repeat") {
  auto config = toy_config();
  const auto topo = testing::toy_topology();
  auto a = train::train(topo, config, 8);
  auto b = train::train(topo, config, 8);
  CHECK(train::metrics_csv(a.metrics) == train::metrics_csv(b.metrics));
  CHECK(a.params.bit_equal(b.params));
  CHECK(a.metrics.size() == 4);

  obs::EcrEnv env(topo, config.model.encgat.lookback);
  Rng s1(1), s2(2);
  train::RolloutOptions greedy;
  greedy.mode = train::RolloutMode::greedy;
  auto r1 = train::rollout(env, a.params, config.model, 3, s1, greedy);
  auto r2 = train::rollout(env, a.params, config.model, 3, s2, greedy);
  REQUIRE(r1.transitions.size() == r2.transitions.size());
  for (std::size_t i = 0; i < r1.transitions.size(); ++i) CHECK(r1.transitions[i].action == r2.transitions[i].action);

  train::LearnedPolicy policy(a.params, config.model);
  auto e1 = eval::run_episode(policy, topo, 3, config.model.encgat.lookback);
  CHECK(e1.fulfillment_ratio == r1.fulfillment_ratio);
}

TEST_CASE("normal-gc ablation trains from scratch with separate actors") {
  auto config = toy_config();
  config.normal_gc = true;
  config.model.separate_actors = true;
  auto result = train::train(testing::toy_topology(), config, 9);
  CHECK(result.metrics.size() == static_cast<std::size_t>(config.finetune_iterations));
  CHECK(result.params.contains("actor.port2.fc1.weight"));
  CHECK_FALSE(result.params.contains("actor.fc1.weight"));
}
