#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "prelac/checkpoint.hpp"
#include "prelac/config.hpp"
#include "prelac/errors.hpp"
#include "prelac/generator.hpp"
#include "prelac/transfer.hpp"

namespace fs = std::filesystem;
using namespace prelac;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Options {
  std::string config_path;
  std::string seeds;
  std::string out;
  std::optional<int> episodes;
  std::optional<int> pretrain_episodes;
  bool skip_pretrain = false;
  std::vector<std::string> ablations;
  std::string checkpoint;
  std::string mode;
  std::string policy = "none";
  std::string topology;
  int merge_a = 1, merge_b = 2;
  std::uint64_t reshuffle_seed = 0;
  int ports = 6, routes = 3, vessels = 6;
  std::uint64_t seed = 0;
};

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

cfg::RunConfig load_config(const Options& o) {
  cfg::RunConfig c = o.config_path.empty() ? cfg::RunConfig{} : cfg::load_run_config(o.config_path);
  if (!o.seeds.empty()) c.seeds = cfg::parse_seed_list(o.seeds);
  if (!o.out.empty()) c.output_dir = o.out;
  if (!o.mode.empty()) c.mode = sim::parse_mode(o.mode);
  if (!o.topology.empty()) {
    c.topology = o.topology;
    c.base_dir.clear();
  }
  for (const auto& a : o.ablations) {
    if (a == "normal_gc" || a == "normal-gc")
      c.ablation.normal_gc = true;
    else if (a == "separate_actors" || a == "separate-actors")
      c.ablation.separate_actors = true;
    else if (a == "decoder_only" || a == "decoder-only")
      c.ablation.decoder_only = true;
    else
      throw ConfigError("unknown ablation '" + a + "' (expected normal_gc, separate_actors or decoder_only)");
  }
  if (o.skip_pretrain) c.ablation.normal_gc = true;
  c.network.decoder_only = c.ablation.decoder_only;
  cfg::validate(c);
  return c;
}

std::string seed_tag(const std::vector<std::uint64_t>& seeds) {
  std::string tag;
  for (auto s : seeds) tag += (tag.empty() ? "" : "-") + std::to_string(s);
  return tag;
}

void echo_config(const cfg::RunConfig& c, const fs::path& dir) {
  fs::create_directories(dir);
  cfg::save_run_config(dir / "config.json", c);
}

train::ProgressFn progress_logger() {
  return [](const train::IterationMetrics& m) {
    spdlog::debug("{} seed {} iteration {}: fulfillment {:.4f} loss {:.4f} grad {:.3f}", train::to_string(m.phase),
                  m.seed, m.iteration, m.fulfillment_ratio, m.loss.total, m.grad_norm);
  };
}

eval::EvalReport evaluate_params(const ad::ParameterSet& params, const cfg::RunConfig& c, const sim::Topology& topo,
                                 const train::TrainConfig& tc) {
  train::LearnedPolicy policy(params.clone(), tc.model);
  return eval::evaluate(policy, topo, c.eval_seeds, tc.model.encgat.lookback);
}

int run_pretrain(const Options& o) {
  cfg::RunConfig c = load_config(o);
  if (o.episodes) c.pretrain_iterations = *o.episodes;
  const sim::Topology topo = cfg::resolve_topology(c);
  const fs::path out = c.output_dir;
  echo_config(c, out);
  for (auto seed : c.seeds) {
    const fs::path dir = out / ("seed-" + std::to_string(seed));
    const train::TrainConfig tc = cfg::to_train_config(c, dir / "checkpoints");
    spdlog::info("pretraining seed {} for {} iterations", seed, tc.pretrain_iterations);
    train::TrainResult r = train::pretrain(topo, tc, seed, progress_logger());
    write_file(dir / "metrics.csv", train::metrics_csv(r.metrics));
    ad::save_checkpoint(dir / "final.ckpt", r.params);
  }
  return 0;
}

double train_and_report(const cfg::RunConfig& c, const sim::Topology& topo, const fs::path& out) {
  echo_config(c, out);
  std::string summary = "seed,fulfillment_ratio\n";
  double total = 0.0;
  for (auto seed : c.seeds) {
    const fs::path dir = out / ("seed-" + std::to_string(seed));
    const train::TrainConfig tc = cfg::to_train_config(c, dir / "checkpoints");
    spdlog::info("training seed {} ({}{} + {} iterations)", seed, c.ablation.normal_gc ? "no pre-training, " : "",
                 c.ablation.normal_gc ? 0 : tc.pretrain_iterations, tc.finetune_iterations);
    train::TrainResult r = train::train(topo, tc, seed, progress_logger());
    write_file(dir / "metrics.csv", train::metrics_csv(r.metrics));
    ad::save_checkpoint(dir / "final.ckpt", r.params);
    const eval::EvalReport report = evaluate_params(r.params, c, topo, tc);
    write_file(dir / "eval.csv", eval::report_csv(report));
    spdlog::info("seed {}: greedy fulfillment {:.4f}", seed, report.mean);
    summary += std::to_string(seed) + "," + std::to_string(report.mean) + "\n";
    total += report.mean;
  }
  write_file(out / "summary.csv", summary);
  return total / static_cast<double>(c.seeds.size());
}

int run_train(const Options& o) {
  cfg::RunConfig c = load_config(o);
  if (o.episodes) c.finetune_iterations = *o.episodes;
  if (o.pretrain_episodes) c.pretrain_iterations = *o.pretrain_episodes;
  const double mean = train_and_report(c, cfg::resolve_topology(c), c.output_dir);
  std::cout << "mean greedy fulfillment ratio " << mean << "\n";
  return 0;
}

std::unique_ptr<eval::Policy> make_policy(const Options& o, const cfg::RunConfig& c) {
  if (o.policy == "learned") {
    if (o.checkpoint.empty()) throw ConfigError("--policy learned needs --checkpoint");
    return std::make_unique<train::LearnedPolicy>(ad::load_checkpoint(o.checkpoint), cfg::to_train_config(c).model);
  }
  if (o.policy == "heuristic") return std::make_unique<eval::ProportionalHeuristicPolicy>(c.heuristic_threshold);
  return eval::make_baseline(o.policy, c.seeds.front());
}

int run_evaluate(const Options& o) {
  cfg::RunConfig c = load_config(o);
  const sim::Topology topo = cfg::resolve_topology(c);
  auto policy = make_policy(o, c);
  const eval::EvalReport report = eval::evaluate(*policy, topo, c.seeds, c.network.lookback);
  const std::string csv = eval::report_csv(report);
  std::cout << csv;
  const fs::path dir = c.output_dir;
  const std::string stem = "eval-" + topo.name + "-" + report.policy + "-" + seed_tag(report.seeds);
  write_file(dir / (stem + ".csv"), csv);
  write_file(dir / (stem + "-ports.csv"), eval::port_breakdown_csv(report));
  return 0;
}

int run_baseline(const Options& o) {
  cfg::RunConfig c = load_config(o);
  const sim::Topology topo = cfg::resolve_topology(c);
  std::string table = "policy,mean,std,episodes\n";
  for (const std::string name : {"none", "random", "heuristic"}) {
    Options po = o;
    po.policy = name;
    auto policy = make_policy(po, c);
    const eval::EvalReport report = eval::evaluate(*policy, topo, c.seeds, c.network.lookback);
    table += name + "," + std::to_string(report.mean) + "," + std::to_string(report.stddev) + "," +
             std::to_string(report.episodes) + "\n";
    write_file(fs::path(c.output_dir) / ("baseline-" + topo.name + "-" + name + "-" + seed_tag(c.seeds) + ".csv"),
               eval::report_csv(report));
  }
  std::cout << table;
  return 0;
}

int run_transfer(const Options& o) {
  cfg::RunConfig c = load_config(o);
  if (o.checkpoint.empty()) throw ConfigError("transfer needs --checkpoint");
  const sim::Topology base = cfg::resolve_topology(c);
  const sim::Topology derived =
      eval::reshuffle_orders(eval::merge_ports(base, o.merge_a, o.merge_b), o.reshuffle_seed);
  const ad::ParameterSet params = ad::load_checkpoint(o.checkpoint);
  const auto model = cfg::to_train_config(c).model;
  const eval::EvalReport trained = eval::transfer_evaluate(params, model, derived, c.seeds);
  eval::NoRepositioningPolicy none;
  const eval::EvalReport baseline = eval::evaluate(none, derived, c.seeds, c.network.lookback);
  const fs::path dir = c.output_dir;
  write_file(dir / "derived.topo.json", sim::to_json(derived));
  write_file(dir / ("transfer-" + derived.name + "-learned-" + seed_tag(c.seeds) + ".csv"), eval::report_csv(trained));
  write_file(dir / ("transfer-" + derived.name + "-none-" + seed_tag(c.seeds) + ".csv"), eval::report_csv(baseline));
  std::cout << "policy,mean,std\nlearned," << trained.mean << "," << trained.stddev << "\nnone," << baseline.mean
            << "," << baseline.stddev << "\n";
  return 0;
}

int run_export(const Options& o) {
  cfg::RunConfig c = load_config(o);
  if (o.checkpoint.empty()) throw ConfigError("export-embeddings needs --checkpoint");
  const sim::Topology topo = cfg::resolve_topology(c);
  const auto rows =
      eval::export_embeddings(ad::load_checkpoint(o.checkpoint), cfg::to_train_config(c).model, topo, c.seeds.front());
  const std::string csv = eval::projection_csv(rows);
  write_file(fs::path(c.output_dir) / ("embeddings-" + topo.name + "-" + std::to_string(c.seeds.front()) + ".csv"), csv);
  std::cout << csv;
  return 0;
}

int run_sweep(const Options& o) {
  cfg::RunConfig c = load_config(o);
  if (o.episodes) c.finetune_iterations = *o.episodes;
  if (o.pretrain_episodes) c.pretrain_iterations = *o.pretrain_episodes;
  const sim::Topology topo = cfg::resolve_topology(c);
  std::string table = "learning_rate,mean_fulfillment_ratio\n";
  double best_rate = c.sweep_learning_rates.front(), best = -1.0;
  for (double lr : c.sweep_learning_rates) {
    cfg::RunConfig run = c;
    run.optimizer.learning_rate = lr;
    std::ostringstream name;
    name << "lr-" << lr;
    const double mean = train_and_report(run, topo, fs::path(c.output_dir) / name.str());
    table += std::to_string(lr) + "," + std::to_string(mean) + "\n";
    if (mean > best) {
      best = mean;
      best_rate = lr;
    }
  }
  write_file(fs::path(c.output_dir) / "sweep.csv", table);
  std::cout << table << "best learning_rate " << best_rate << " (mean " << best << ")\n";
  return 0;
}

int run_validate(const std::string& path) {
  const sim::Topology topo = sim::topology_from_json([&] {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open topology " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }());
  const auto problems = sim::validate(topo);
  if (problems.empty()) {
    std::cout << path << ": valid (" << topo.ports.size() << " ports, " << topo.routes.size() << " routes, "
              << topo.vessels.size() << " vessels)\n";
    return 0;
  }
  for (const auto& p : problems) std::cerr << path << ": " << p << "\n";
  return kExitConfig;
}

int run_generate(const Options& o) {
  const sim::Topology topo = sim::generate_topology(o.ports, o.routes, o.vessels, o.seed);
  if (o.out.empty())
    std::cout << sim::to_json(topo);
  else
    sim::save_topology(o.out, topo);
  return 0;
}

void configure_logging() {
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("REPO_LOG_LEVEL")) spdlog::set_level(spdlog::level::from_str(level));
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Multi-agent empty container repositioning: EncGAT embeddings trained with PreLAC"};
  app.require_subcommand(1);
  Options o;
  std::string topology_path;

  auto common = [&o](CLI::App* cmd) {
    cmd->add_option("--config", o.config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
    cmd->add_option("--seed,--seeds", o.seeds, "Seed, list or inclusive range such as 0..4");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("--mode", o.mode, "Order model mode")->check(CLI::IsMember({"normal", "hard"}));
    cmd->add_option("--topology", o.topology, "Topology file, or 'bundled'");
    cmd->add_option("--ablation", o.ablations, "normal_gc, separate_actors or decoder_only (repeatable)");
  };

  auto* pretrain = app.add_subcommand("pretrain", "Pre-train with local actor-critic losses");
  common(pretrain);
  pretrain->add_option("--episodes", o.episodes, "Pre-training iterations");

  auto* trainc = app.add_subcommand("train", "Pre-train then fine-tune on the global reward");
  common(trainc);
  trainc->add_option("--episodes", o.episodes, "Fine-tuning iterations");
  trainc->add_option("--pretrain-episodes", o.pretrain_episodes, "Pre-training iterations");
  trainc->add_flag("--skip-pretrain", o.skip_pretrain, "Train from scratch on the global reward (Normal GC)");

  auto* evaluate = app.add_subcommand("evaluate", "Greedy evaluation of one policy");
  common(evaluate);
  evaluate->add_option("--policy", o.policy, "none, random, heuristic or learned")
      ->check(CLI::IsMember({"none", "random", "heuristic", "learned"}));
  evaluate->add_option("--checkpoint", o.checkpoint, "Parameters for --policy learned");

  auto* baseline = app.add_subcommand("baseline", "Evaluate the non-learning baselines");
  common(baseline);

  auto* transfer = app.add_subcommand("transfer", "Evaluate a checkpoint on a merged, reshuffled topology");
  common(transfer);
  transfer->add_option("--checkpoint", o.checkpoint, "Trained parameters")->required();
  transfer->add_option("--merge-a", o.merge_a, "First port to merge");
  transfer->add_option("--merge-b", o.merge_b, "Second port to merge");
  transfer->add_option("--reshuffle-seed", o.reshuffle_seed, "Seed for the new order distribution");

  auto* exportc = app.add_subcommand("export-embeddings", "Project port embeddings onto two principal components");
  common(exportc);
  exportc->add_option("--checkpoint", o.checkpoint, "Trained parameters")->required();

  auto* sweep = app.add_subcommand("sweep", "Train over the learning-rate grid and report the best");
  common(sweep);
  sweep->add_option("--episodes", o.episodes, "Fine-tuning iterations");
  sweep->add_option("--pretrain-episodes", o.pretrain_episodes, "Pre-training iterations");

  auto* validate = app.add_subcommand("validate-topology", "Check a topology file");
  validate->add_option("path", topology_path, "Topology file")->required();

  auto* generate = app.add_subcommand("generate-topology", "Write a random valid topology");
  generate->add_option("--ports", o.ports, "Port count");
  generate->add_option("--routes", o.routes, "Route count");
  generate->add_option("--vessels", o.vessels, "Vessel count");
  generate->add_option("--seed", o.seed, "Generator seed");
  generate->add_option("--out", o.out, "Output file (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*pretrain) return run_pretrain(o);
    if (*trainc) return run_train(o);
    if (*evaluate) return run_evaluate(o);
    if (*baseline) return run_baseline(o);
    if (*transfer) return run_transfer(o);
    if (*exportc) return run_export(o);
    if (*sweep) return run_sweep(o);
    if (*validate) return run_validate(topology_path);
    if (*generate) return run_generate(o);
  } catch (const ConfigError& e) {
    spdlog::error("configuration error: {}", e.what());
    return kExitConfig;
  } catch (const ValidationError& e) {
    spdlog::error("validation error: {}", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }
  return 0;
}
