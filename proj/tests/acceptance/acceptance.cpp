#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oracles.hpp"
#include "prelac/checkpoint.hpp"
#include "prelac/config.hpp"
#include "prelac/generator.hpp"
#include "prelac/ops.hpp"
#include "prelac/transfer.hpp"

namespace fs = std::filesystem;
using namespace prelac;
using ad::Tensor;
using testing::GradientReport;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  fs::path cache;
  fs::path config_path;
  cfg::RunConfig config;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream out;
  out.precision(digits);
  out << std::fixed << v;
  return out.str();
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary) << text;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::equal(a.values().begin(), a.values().end(), b.values().begin());
}

Tensor permute_rows(const Tensor& x, const std::vector<std::size_t>& perm) {
  std::vector<Tensor> rows;
  for (std::size_t i : perm) rows.push_back(ad::slice_row(x, i));
  return ad::stack_rows(rows);
}

net::EncGatConfig small_encgat() {
  net::EncGatConfig c;
  c.d_model = 8;
  c.ff_width = 12;
  c.lookback = 6;
  return c;
}

// Environment advanced a few decision ticks so every feature window is populated.
struct Advanced {
  obs::EcrEnv env;
  Advanced(const sim::Topology& topo, int lookback, std::uint64_t seed, int steps) : env(topo, lookback) {
    env.reset(seed);
    std::mt19937_64 rng(seed);
    for (int i = 0; i < steps; ++i) {
      auto step = env.advance();
      if (step.done) break;
      for (const auto& r : step.decisions) env.apply_action(r, static_cast<int>(rng() % sim::kActionCount));
    }
  }
};

// ---------------------------------------------------------------- criterion 1

using GradientCase = std::function<GradientReport(std::uint64_t)>;

GradientCase unary(std::function<Tensor(const Tensor&)> op, std::size_t rows, std::size_t cols, double lo = -1.0,
                   double hi = 1.0) {
  return [=](std::uint64_t seed) {
    return testing::check_gradient([op](const std::vector<Tensor>& in) { return op(in[0]); },
                                   {testing::random_tensor(rows, cols, seed, lo, hi)}, seed);
  };
}

GradientCase binary(std::function<Tensor(const Tensor&, const Tensor&)> op, std::size_t r0, std::size_t c0,
                    std::size_t r1, std::size_t c1) {
  return [=](std::uint64_t seed) {
    return testing::check_gradient([op](const std::vector<Tensor>& in) { return op(in[0], in[1]); },
                                   {testing::random_tensor(r0, c0, seed), testing::random_tensor(r1, c1, seed + 1)},
                                   seed);
  };
}

std::vector<std::pair<std::string, GradientCase>> gradient_cases() {
  std::vector<std::pair<std::string, GradientCase>> cases;
  cases.emplace_back("matmul", binary([](auto& a, auto& b) { return ad::matmul(a, b); }, 3, 4, 4, 2));
  cases.emplace_back("matmul_sorted",
                     binary([](auto& a, auto& b) { return ad::matmul(a, b, ad::Reduction::sorted); }, 3, 4, 4, 2));
  cases.emplace_back("matmul_bt", binary([](auto& a, auto& b) { return ad::matmul_bt(a, b); }, 3, 4, 2, 4));
  cases.emplace_back("transpose", unary([](auto& x) { return ad::transpose(x); }, 3, 4));
  cases.emplace_back("add", binary([](auto& a, auto& b) { return ad::add(a, b); }, 3, 4, 3, 4));
  cases.emplace_back("sub", binary([](auto& a, auto& b) { return ad::sub(a, b); }, 3, 4, 3, 4));
  cases.emplace_back("mul", binary([](auto& a, auto& b) { return ad::mul(a, b); }, 3, 4, 3, 4));
  cases.emplace_back("add_row", binary([](auto& a, auto& b) { return ad::add_row(a, b); }, 3, 4, 1, 4));
  cases.emplace_back("scale", unary([](auto& x) { return ad::scale(x, -1.7); }, 3, 4));
  cases.emplace_back("add_scalar", unary([](auto& x) { return ad::add_scalar(x, 0.3); }, 3, 4));
  cases.emplace_back("relu", unary([](auto& x) { return ad::relu(x); }, 3, 4));
  cases.emplace_back("log", unary([](auto& x) { return ad::log(x); }, 3, 4, 0.5, 2.0));
  cases.emplace_back("square", unary([](auto& x) { return ad::square(x); }, 3, 4));
  cases.emplace_back("sum", unary([](auto& x) { return ad::sum(x); }, 3, 4));
  cases.emplace_back("add_n", binary(
                                  [](auto& a, auto& b) {
                                    std::vector<Tensor> terms{a, b, a};
                                    return ad::add_n(terms);
                                  },
                                  2, 3, 2, 3));
  cases.emplace_back("mean_rows", unary([](auto& x) { return ad::mean_rows(x); }, 5, 3));
  cases.emplace_back("concat_last_dim",
                     binary([](auto& a, auto& b) { return ad::concat_last_dim(a, b); }, 2, 3, 2, 4));
  cases.emplace_back("stack_rows", binary(
                                       [](auto& a, auto& b) {
                                         std::vector<Tensor> rows{a, b, a};
                                         return ad::stack_rows(rows);
                                       },
                                       1, 4, 1, 4));
  cases.emplace_back("slice_row", unary([](auto& x) { return ad::slice_row(x, 1); }, 3, 4));
  cases.emplace_back("slice_cols", unary([](auto& x) { return ad::slice_cols(x, 1, 2); }, 3, 4));
  cases.emplace_back("expand_rows", unary([](auto& x) { return ad::expand_rows(x, 3); }, 1, 4));
  cases.emplace_back("pick", unary([](auto& x) { return ad::pick(x, 2, 1); }, 3, 4));
  cases.emplace_back("softmax_rows", unary([](auto& x) { return ad::softmax_rows(x); }, 3, 5, -2.0, 2.0));
  cases.emplace_back("masked_softmax_rows", unary(
                                                [](auto& x) {
                                                  return ad::masked_softmax_rows(
                                                      x, {true, false, true, true, false, true});
                                                },
                                                2, 6, -2.0, 2.0));
  cases.emplace_back("entropy", unary([](auto& x) { return ad::entropy(ad::softmax_rows(x)); }, 1, 6, -2.0, 2.0));
  cases.emplace_back("layer_norm", [](std::uint64_t seed) {
    return testing::check_gradient(
        [](const std::vector<Tensor>& in) { return ad::layer_norm(in[0], in[1], in[2]); },
        {testing::random_tensor(3, 5, seed), testing::random_tensor(1, 5, seed + 1, 0.5, 1.5),
         testing::random_tensor(1, 5, seed + 2)},
        seed);
  });
  cases.emplace_back("attention", [](std::uint64_t seed) {
    return testing::check_gradient(
        [](const std::vector<Tensor>& in) { return ad::attention(in[0], in[1], in[2]); },
        {testing::random_tensor(2, 4, seed), testing::random_tensor(3, 4, seed + 1),
         testing::random_tensor(3, 4, seed + 2)},
        seed);
  });
  return cases;
}

// Full EncGAT forward, differentiated against ten random parameter entries.
// A 1e-5 step keeps roundoff below the ReLU-kink truncation error.
GradientReport encgat_case(std::uint64_t seed) {
  const auto config = small_encgat();
  Advanced toy(testing::toy_topology(), config.lookback, seed, 3);
  const auto observation = toy.env.observe_all();
  ad::ParameterSet params;
  Rng rng(seed);
  net::init_encgat(params, config, rng);
  return testing::check_parameter_gradient(
      [&](const ad::ParameterSet& p) {
        auto out = net::encgat_forward(observation, p, config);
        std::vector<Tensor> rows(out.embedding.begin(), out.embedding.end());
        return ad::sum(ad::square(ad::stack_rows(rows)));
      },
      params, 10, seed + 1, 1e-5);
}

Outcome criterion1(const Context&) {
  const auto start = Clock::now();
  const auto cases = gradient_cases();
  const int total = 100;
  double worst = 0.0;
  std::string worst_name;
  int entries = 0;
  for (int i = 0; i < total; ++i) {
    const auto seed = static_cast<std::uint64_t>(1000 + i);
    // Every fourth case exercises the whole forward pass.
    const bool full = i % 4 == 3;
    const std::string name = full ? "encgat_forward" : cases[static_cast<std::size_t>(i) % cases.size()].first;
    const GradientReport report = full ? encgat_case(seed) : cases[static_cast<std::size_t>(i) % cases.size()].second(seed);
    entries += report.checked;
    if (report.max_relative >= worst) {
      worst = report.max_relative;
      worst_name = name;
    }
  }
  const double elapsed = seconds_since(start);
  return {worst < 1e-4 && elapsed < 60.0,
          std::to_string(total) + " cases, " + std::to_string(entries) + " entries, worst relative error " +
              fixed(worst * 1e6, 3) + "e-6 (" + worst_name + "), " + fixed(elapsed, 1) + " s"};
}

// ---------------------------------------------------------------- criterion 2

Outcome criterion2(const Context&) {
  const auto config = small_encgat();
  std::mt19937_64 rng(2);
  int violations = 0, graphs = 0;
  double worst_row = 0.0;
  for (int g = 0; g < 1000; ++g) {
    const auto seed = static_cast<std::uint64_t>(g);
    ad::ParameterSet params;
    Rng prng(seed + 7);
    net::init_encgat(params, config, prng);
    const std::size_t n = 1 + rng() % 9;
    const auto type = static_cast<obs::EdgeType>(g % obs::kEdgeTypes);
    const int block = g % config.blocks;
    Tensor x = testing::random_tensor(n, 8, seed + 11);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const Tensor enc = net::encode_neighbors(x, params, config, block, type);
    const Tensor enc_perm = net::encode_neighbors(permute_rows(x, perm), params, config, block, type);
    if (!bit_equal(permute_rows(enc, perm), enc_perm)) ++violations;
    const Tensor center = testing::random_tensor(1, 8, seed + 13);
    if (!bit_equal(net::decode_aggregate(center, enc, params, config, block, type),
                   net::decode_aggregate(center, enc_perm, params, config, block, type)))
      ++violations;

    const std::size_t width = 2 + rng() % 21;
    std::vector<bool> mask(width);
    for (std::size_t j = 0; j < width; ++j) mask[j] = rng() % 3 != 0;
    mask[rng() % width] = true;
    const Tensor probs = ad::masked_softmax_rows(testing::random_tensor(4, width, seed + 17, -30.0, 30.0), mask);
    for (std::size_t r = 0; r < probs.rows(); ++r) {
      double row = 0.0;
      for (std::size_t j = 0; j < width; ++j) {
        row += probs(r, j);
        if (!mask[j] && probs(r, j) != 0.0) ++violations;
      }
      worst_row = std::max(worst_row, std::abs(row - 1.0));
    }

    // Whole random graphs: shuffled adjacency lists must not change any embedding.
    if (g % 10 == 0) {
      const int ports = 3 + static_cast<int>(rng() % 6);
      const int routes = 1 + static_cast<int>(rng() % std::min(3, ports - 1));
      const int vessels = routes + static_cast<int>(rng() % 4);
      Advanced world(sim::generate_topology(ports, routes, vessels, seed), config.lookback, seed, 2);
      auto observation = world.env.observe_all();
      auto shuffled = observation;
      for (auto& lists : shuffled.neighbors)
        for (auto& list : lists) std::shuffle(list.begin(), list.end(), rng);
      const auto a = net::encgat_forward(observation, params, config);
      const auto b = net::encgat_forward(shuffled, params, config);
      for (std::size_t v = 0; v < observation.size(); ++v)
        if (!bit_equal(a.embedding[v], b.embedding[v])) ++violations;
      ++graphs;
    }
  }
  return {violations == 0 && worst_row <= 1e-9,
          "1000 random neighbour sets + " + std::to_string(graphs) + " whole graphs, " + std::to_string(violations) +
              " exactness violations, worst |row sum - 1| " + fixed(worst_row * 1e15, 2) + "e-15"};
}

// ---------------------------------------------------------------- criterion 3

Outcome criterion3(const Context&) {
  const auto start = Clock::now();
  auto topo = sim::bundled_topology();
  long violations = 0, ticks = 0, checks = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    topo.order_model.mode = seed % 2 == 0 ? sim::Mode::normal : sim::Mode::hard;
    sim::Simulator s(topo);
    sim::Count total = 0;
    s.set_tick_observer([&](const sim::SimState& st) {
      ++ticks;
      ++checks;
      if (sim::total_containers(st) != total) ++violations;
    });
    s.reset(seed);
    total = s.total_containers();
    eval::RandomPolicy policy(seed);
    policy.begin_episode(seed);
    std::mt19937_64 rng(seed);
    while (true) {
      auto step = s.advance();
      for (std::size_t k = 0; k < step.global_rewards.size(); ++k) {
        double local = 0.0;
        for (double r : step.local_rewards[k]) local += r;
        ++checks;
        if (local != step.global_rewards[k]) ++violations;
      }
      if (step.done) break;
      for (const auto& r : step.decisions) {
        s.apply_action(r, static_cast<int>(rng() % sim::kActionCount));
        ++checks;
        if (s.total_containers() != total) ++violations;
      }
    }
    if (s.state().tick != topo.episode_ticks) ++violations;
  }
  const double elapsed = seconds_since(start);
  return {violations == 0 && ticks == 50L * topo.episode_ticks && elapsed < 120.0,
          "50 episodes, " + std::to_string(ticks) + " ticks, " + std::to_string(checks) + " checks, " +
              std::to_string(violations) + " violations, " + fixed(elapsed, 1) + " s"};
}

// ---------------------------------------------------------------- criterion 4

Outcome criterion4(const Context& ctx) {
  const fs::path root = ctx.cache / "determinism";
  fs::remove_all(root);
  cfg::RunConfig c = ctx.config;
  c.pretrain_iterations = 4;
  c.finetune_iterations = 4;
  c.checkpoint_every = 2;
  c.seeds = {0, 1};
  c.base_dir.clear();
  fs::create_directories(root);
  cfg::save_run_config(root / "config.json", c);
  std::vector<std::string> files{"summary.csv"};
  for (auto seed : c.seeds) {
    const std::string dir = "seed-" + std::to_string(seed) + "/";
    for (const char* f : {"metrics.csv", "final.ckpt", "eval.csv"}) files.push_back(dir + f);
  }
  for (const char* run : {"a", "b"}) {
    const std::string cmd = std::string("\"") + PRELAC_CLI + "\" train --config \"" + (root / "config.json").string() +
                            "\" --out \"" + (root / run).string() + "\" > \"" + (root / run).string() + ".log\" 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, std::string("train run ") + run + " failed"};
  }
  int identical = 0;
  std::string differing;
  for (const auto& f : files) {
    const auto a = read_file(root / "a" / f);
    const auto b = read_file(root / "b" / f);
    if (!a.empty() && a == b)
      ++identical;
    else
      differing += " " + f;
  }
  return {identical == static_cast<int>(files.size()),
          std::to_string(identical) + "/" + std::to_string(files.size()) +
              " output files byte-identical across two `train` runs (2 seeds, 4+4 iterations)" +
              (differing.empty() ? "" : "; differ:" + differing)};
}

// ---------------------------------------------------- training with a cache

struct TrainedRun {
  ad::ParameterSet params;
  std::vector<double> finetune_curve;
  double greedy = 0.0;
};

std::vector<double> finetune_ratios(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<double> out;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream row(line);
    for (std::string cell; std::getline(row, cell, ',');) cells.push_back(cell);
    if (cells.size() > 3 && cells[1] == "finetune") out.push_back(std::stod(cells[3]));
  }
  return out;
}

// Trains one (mode, variant, seed) run, reusing a cached result when its
// recorded configuration matches.
TrainedRun trained(const Context& ctx, sim::Mode mode, bool normal_gc, std::uint64_t seed) {
  cfg::RunConfig c = ctx.config;
  c.mode = mode;
  c.ablation.normal_gc = normal_gc;
  const std::string stem = sim::to_string(mode) + (normal_gc ? "-normal-gc-" : "-prelac-") + std::to_string(seed);
  const fs::path dir = ctx.cache / "runs";
  const std::string key = cfg::to_json(c);
  TrainedRun run;
  if (read_file(dir / (stem + ".key")) == key && fs::exists(dir / (stem + ".ckpt"))) {
    run.params = ad::load_checkpoint(dir / (stem + ".ckpt"));
    run.finetune_curve = finetune_ratios(read_file(dir / (stem + ".metrics.csv")));
    run.greedy = std::stod(read_file(dir / (stem + ".greedy")));
    std::cerr << "  reusing cached " << stem << "\n";
    return run;
  }
  const auto start = Clock::now();
  const sim::Topology topo = cfg::resolve_topology(c);
  const train::TrainConfig tc = cfg::to_train_config(c);
  auto result = train::train(topo, tc, seed);
  train::LearnedPolicy policy(result.params.clone(), tc.model);
  run.greedy = eval::evaluate(policy, topo, c.eval_seeds, tc.model.encgat.lookback).mean;
  run.params = std::move(result.params);
  const std::string metrics = train::metrics_csv(result.metrics);
  run.finetune_curve = finetune_ratios(metrics);
  fs::create_directories(dir);
  ad::save_checkpoint(dir / (stem + ".ckpt"), run.params);
  write_file(dir / (stem + ".metrics.csv"), metrics);
  std::ostringstream greedy;
  greedy.precision(17);
  greedy << run.greedy;
  write_file(dir / (stem + ".greedy"), greedy.str());
  write_file(dir / (stem + ".key"), key);
  std::cerr << "  trained " << stem << " in " << fixed(seconds_since(start), 0) << " s, greedy " << fixed(run.greedy)
            << "\n";
  return run;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

std::string joined(const std::vector<double>& v) {
  std::string out;
  for (double x : v) out += (out.empty() ? "" : "/") + fixed(x, 3);
  return out;
}

double none_mean(const sim::Topology& topo, const cfg::RunConfig& c) {
  eval::NoRepositioningPolicy none;
  return eval::evaluate(none, topo, c.eval_seeds, c.network.lookback).mean;
}

// ---------------------------------------------------------------- criterion 5

Outcome criterion5(const Context& ctx) {
  std::vector<double> prelac, normal_gc;
  for (auto seed : ctx.config.seeds) {
    prelac.push_back(trained(ctx, sim::Mode::normal, false, seed).greedy);
    normal_gc.push_back(trained(ctx, sim::Mode::normal, true, seed).greedy);
  }
  cfg::RunConfig c = ctx.config;
  c.mode = sim::Mode::normal;
  const double none = none_mean(cfg::resolve_topology(c), c);
  const double p = mean(prelac), n = mean(normal_gc);
  return {p >= none + 0.05 && p >= n,
          "PreLAC " + fixed(p) + " (" + joined(prelac) + "), Normal GC " + fixed(n) + " (" + joined(normal_gc) +
              "), no repositioning " + fixed(none) + "; need PreLAC >= none + 0.05 and >= Normal GC"};
}

// ---------------------------------------------------------------- criterion 6

Outcome criterion6(const Context& ctx) {
  std::vector<double> prelac, normal_gc;
  for (auto seed : ctx.config.seeds) {
    prelac.push_back(mean(trained(ctx, sim::Mode::hard, false, seed).finetune_curve));
    normal_gc.push_back(mean(trained(ctx, sim::Mode::hard, true, seed).finetune_curve));
  }
  const double p = mean(prelac), n = mean(normal_gc);
  return {p >= n, "hard mode fine-tuning curve area (mean ratio per iteration): PreLAC " + fixed(p) + " (" +
                      joined(prelac) + "), Normal GC " + fixed(n) + " (" + joined(normal_gc) + ")"};
}

// ---------------------------------------------------------------- criterion 7

Outcome criterion7(const Context& ctx) {
  bool pass = true;
  std::string detail;
  for (const auto mode : {sim::Mode::normal, sim::Mode::hard}) {
    cfg::RunConfig c = ctx.config;
    c.mode = mode;
    const sim::Topology derived = eval::reshuffle_orders(eval::merge_ports(cfg::resolve_topology(c), 1, 2), 0);
    const auto model = cfg::to_train_config(c).model;
    std::vector<double> ratios;
    int mutated = 0;
    for (auto seed : c.seeds) {
      const ad::ParameterSet params = trained(ctx, mode, false, seed).params;
      std::ostringstream before;
      ad::write_checkpoint(before, params);
      ratios.push_back(mean(eval::transfer_evaluate(params, model, derived, c.eval_seeds).ratios));
      std::ostringstream after;
      ad::write_checkpoint(after, params);
      if (before.str() != after.str()) ++mutated;
    }
    const double t = mean(ratios), none = none_mean(derived, c);
    pass = pass && t > none && mutated == 0;
    detail += (detail.empty() ? "" : "; ") + sim::to_string(mode) + ": trained " + fixed(t) + " (" + joined(ratios) +
              ") vs none " + fixed(none) + ", " + std::to_string(mutated) + " checkpoints changed";
  }
  return {pass, "merged ports 1+2, reshuffled orders; " + detail};
}

// ---------------------------------------------------------------- criterion 8

std::vector<double> autocorrelation(const std::vector<double>& x, int max_lag) {
  const double m = mean(x);
  double var = 0.0;
  for (double v : x) var += (v - m) * (v - m);
  std::vector<double> acf(static_cast<std::size_t>(max_lag) + 1, 0.0);
  for (int k = 0; k <= max_lag; ++k) {
    double s = 0.0;
    for (std::size_t t = 0; t + k < x.size(); ++t) s += (x[t] - m) * (x[t + k] - m);
    acf[static_cast<std::size_t>(k)] = s / var;
  }
  return acf;
}

bool is_local_peak(const std::vector<double>& acf, std::size_t k) {
  return k > 0 && k + 1 < acf.size() && acf[k] > 0.0 && acf[k] > acf[k - 1] && acf[k] >= acf[k + 1];
}

// Highest local maximum, -1 if none.
int highest_peak(const std::vector<double>& acf) {
  int best = -1;
  for (std::size_t k = 1; k + 1 < acf.size(); ++k)
    if (is_local_peak(acf, k) && (best < 0 || acf[k] > acf[static_cast<std::size_t>(best)])) best = static_cast<int>(k);
  return best;
}

int first_peak(const std::vector<double>& acf) {
  for (std::size_t k = 1; k + 1 < acf.size(); ++k)
    if (is_local_peak(acf, k)) return static_cast<int>(k);
  return -1;
}

// Residual of a least-squares fit of a + b sin(2 pi t / p) + c cos(2 pi t / p).
std::vector<double> remove_period(const std::vector<double>& x, int period) {
  const std::size_t n = x.size();
  std::vector<std::array<double, 3>> basis(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double w = 2.0 * std::numbers::pi * static_cast<double>(t) / period;
    basis[t] = {1.0, std::sin(w), std::cos(w)};
  }
  std::array<std::array<double, 4>, 3> normal{};
  for (std::size_t t = 0; t < n; ++t)
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) normal[i][j] += basis[t][i] * basis[t][j];
      normal[i][3] += basis[t][i] * x[t];
    }
  for (int i = 0; i < 3; ++i)
    for (int r = 0; r < 3; ++r) {
      if (r == i) continue;
      const double f = normal[r][i] / normal[i][i];
      for (int j = 0; j < 4; ++j) normal[r][j] -= f * normal[i][j];
    }
  std::vector<double> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    double fit = 0.0;
    for (int i = 0; i < 3; ++i) fit += basis[t][i] * normal[i][3] / normal[i][i];
    out[t] = x[t] - fit;
  }
  return out;
}

Outcome criterion8(const Context&) {
  auto topo = sim::bundled_topology();
  topo.order_model.mode = sim::Mode::hard;
  topo.order_model.travel_noise_hard = 0.0;
  for (auto& pair : topo.order_model.pairs) pair.sigma = 0.0;
  Rng rng(8);
  std::vector<double> series;
  for (int t = 0; t < 448; ++t) {
    double total = 0.0;
    for (const auto& order : sim::generate_orders(t, topo.order_model, rng)) total += static_cast<double>(order.quantity);
    series.push_back(total);
  }
  const auto acf = autocorrelation(series, 224);
  const int slow = highest_peak(acf);
  if (slow < 0) return {false, "no autocorrelation peak in 448 ticks"};
  const auto residual_acf = autocorrelation(remove_period(series, slow), 224);
  const int fast = first_peak(residual_acf);
  return {slow == 112 && fast == 28,
          "448 noise-free ticks: highest ACF peak at lag " + std::to_string(slow) + " (" +
              fixed(acf[static_cast<std::size_t>(slow)], 3) + "); after removing that period, first peak at lag " +
              std::to_string(fast) + (fast > 0 ? " (" + fixed(residual_acf[static_cast<std::size_t>(fast)], 3) + ")" : "")};
}

// ---------------------------------------------------------------- criterion 9

Outcome criterion9(const Context&) {
  double worst = 0.0;
  int matrices = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const std::size_t cols = 2 + seed % 7;
    const std::size_t rows = cols + 2 + (seed * 7) % (51 - cols - 2);
    const auto data = testing::random_matrix(rows, cols, seed);
    const auto pca = eval::principal_components(data, 2);
    const auto oracle = testing::jacobi_eigen(eval::covariance(data, pca.mean));
    const eval::Matrix top(oracle.vectors.begin(), oracle.vectors.begin() + 2);
    const double ours = eval::reconstruction_error(data, pca.mean, pca.components);
    const double exact = eval::reconstruction_error(data, pca.mean, top);
    worst = std::max(worst, std::abs(ours - exact));
    ++matrices;
  }
  return {worst < 1e-8, std::to_string(matrices) + " random matrices up to 50x8, worst reconstruction error gap " +
                            fixed(worst * 1e12, 3) + "e-12 against a Jacobi eigensolver"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> selected;
  Context ctx;
  std::string cache = "acceptance-cache";
  std::string config = std::string(PRELAC_CONFIG_DIR) + "/acceptance.json";
  app.add_option("--criterion", selected, "Criteria to run (default: all)")->check(CLI::Range(1, 9));
  app.add_option("--cache", cache, "Directory for trained checkpoints shared between criteria");
  app.add_option("--config", config, "Run configuration for the learning criteria");
  CLI11_PARSE(app, argc, argv);
  ctx.cache = cache;
  ctx.config_path = config;
  ctx.config = cfg::load_run_config(config);
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8, 9};

  const std::vector<std::function<Outcome(const Context&)>> criteria{
      criterion1, criterion2, criterion3, criterion4, criterion5, criterion6, criterion7, criterion8, criterion9};
  int failures = 0;
  for (int n : selected) {
    Outcome outcome;
    try {
      outcome = criteria[static_cast<std::size_t>(n - 1)](ctx);
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    if (!outcome.pass) ++failures;
    std::cout << "criterion " << n << ": " << (outcome.pass ? "PASS" : "FAIL") << " - " << outcome.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
