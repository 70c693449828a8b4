#include <benchmark/benchmark.h>

#include <random>

#include "prelac/generator.hpp"
#include "prelac/ops.hpp"
#include "prelac/pca.hpp"
#include "prelac/trainer.hpp"

using namespace prelac;
using ad::Tensor;

namespace {

Tensor filled(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = dist(rng);
  return Tensor::from({rows, cols}, std::move(v));
}

// Bundled topology advanced to its first decision tick.
struct Prepared {
  obs::EcrEnv env{sim::bundled_topology()};
  sim::StepResult step;
  ad::ParameterSet params;
  net::ModelConfig model;
  Prepared() {
    env.reset(0);
    step = env.advance();
    Rng rng(1);
    params = net::init_model(model, static_cast<int>(env.topology().ports.size()), rng);
  }
};

}  // namespace

static void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Tensor a = filled(n, n, 1), b = filled(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(ad::matmul(a, b));
}
BENCHMARK(BM_Matmul)->Arg(8)->Arg(32)->Arg(64);

static void BM_MatmulSorted(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Tensor a = filled(n, n, 1), b = filled(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(ad::matmul(a, b, ad::Reduction::sorted));
}
BENCHMARK(BM_MatmulSorted)->Arg(8)->Arg(32);

static void BM_AttentionBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Tensor q = filled(n, 32, 1), k = filled(n, 32, 2), v = filled(n, 32, 3);
  q.set_requires_grad(true);
  k.set_requires_grad(true);
  v.set_requires_grad(true);
  for (auto _ : state) {
    ad::Tape tape;
    ad::TapeScope scope(tape);
    tape.backward(ad::sum(ad::attention(q, k, v)));
  }
}
BENCHMARK(BM_AttentionBackward)->Arg(4)->Arg(16);

static void BM_EncGatForwardWholeGraph(benchmark::State& state) {
  Prepared p;
  const auto observation = p.env.observe_all();
  for (auto _ : state) benchmark::DoNotOptimize(net::encgat_forward(observation, p.params, p.model.encgat));
}
BENCHMARK(BM_EncGatForwardWholeGraph)->Unit(benchmark::kMillisecond);

static void BM_EncGatForwardAgentView(benchmark::State& state) {
  Prepared p;
  const auto observation = p.env.observe(p.step.decisions.front());
  for (auto _ : state) benchmark::DoNotOptimize(net::encgat_forward(observation, p.params, p.model.encgat));
}
BENCHMARK(BM_EncGatForwardAgentView)->Unit(benchmark::kMillisecond);

static void BM_EncGatBackward(benchmark::State& state) {
  Prepared p;
  const auto observation = p.env.observe_all();
  for (auto& [_, t] : p.params) t.set_requires_grad(true);
  for (auto _ : state) {
    ad::Tape tape;
    ad::TapeScope scope(tape);
    auto out = net::encgat_forward(observation, p.params, p.model.encgat);
    std::vector<Tensor> rows(out.embedding.begin(), out.embedding.end());
    tape.backward(ad::sum(ad::stack_rows(rows)));
  }
}
BENCHMARK(BM_EncGatBackward)->Unit(benchmark::kMillisecond);

static void BM_SimulatorEpisode(benchmark::State& state) {
  const auto topo = sim::bundled_topology();
  std::uint64_t seed = 0;
  for (auto _ : state) {
    sim::Simulator s(topo);
    s.reset(seed++);
    while (true) {
      auto step = s.advance();
      if (step.done) break;
      for (const auto& r : step.decisions) s.apply_action(r, sim::kNoOpAction);
    }
    benchmark::DoNotOptimize(sim::fulfillment_ratio(s.state()));
  }
}
BENCHMARK(BM_SimulatorEpisode)->Unit(benchmark::kMicrosecond);

static void BM_GreedyEpisode(benchmark::State& state) {
  Prepared p;
  train::LearnedPolicy policy(p.params.clone(), p.model);
  const auto topo = sim::bundled_topology();
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(eval::run_episode(policy, topo, seed++));
}
BENCHMARK(BM_GreedyEpisode)->Unit(benchmark::kMillisecond);

static void BM_PrincipalComponents(benchmark::State& state) {
  eval::Matrix data;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> row(8);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = n(rng) * static_cast<double>(j + 1);
    data.push_back(row);
  }
  for (auto _ : state) benchmark::DoNotOptimize(eval::principal_components(data, 2));
}
BENCHMARK(BM_PrincipalComponents);
BENCHMARK_MAIN();
