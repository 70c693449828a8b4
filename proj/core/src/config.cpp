#include "prelac/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "prelac/errors.hpp"
#include "prelac/generator.hpp"

namespace prelac::cfg {

using nlohmann::json;

namespace {

// Line and column of a byte offset, both 1-based.
std::string position(const std::string& text, std::size_t offset) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

std::string locate_key(const std::string& text, const std::string& key) {
  const std::size_t at = text.find("\"" + key + "\"");
  return at == std::string::npos ? std::string("config") : position(text, at);
}

class Reader {
 public:
  Reader(const std::string& text, const json& object, std::string scope)
      : text_(text), object_(object), scope_(std::move(scope)) {
    if (!object_.is_object()) throw ConfigError(locate_key(text_, scope_) + ": '" + scope_ + "' must be an object");
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    seen_.insert(key);
    auto it = object_.find(key);
    if (it == object_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(locate_key(text_, key) + ": '" + qualified(key) + "' has the wrong type (" + e.what() + ")");
    }
  }

  const json& child(const std::string& key) {
    seen_.insert(key);
    static const json empty = json::object();
    auto it = object_.find(key);
    return it == object_.end() ? empty : *it;
  }

  void finish() const {
    for (const auto& [key, _] : object_.items())
      if (!seen_.count(key)) throw ConfigError(locate_key(text_, key) + ": unknown key '" + qualified(key) + "'");
  }

 private:
  std::string qualified(const std::string& key) const { return scope_.empty() ? key : scope_ + "." + key; }

  const std::string& text_;
  const json& object_;
  std::string scope_;
  std::set<std::string> seen_;
};

}  // namespace

void validate(const RunConfig& c) {
  if (c.topology.empty()) throw ConfigError("topology must not be empty");
  if (c.pretrain_iterations < 0 || c.finetune_iterations < 0) throw ConfigError("iteration counts must be >= 0");
  net::validate(c.network);
  train::validate(c.loss);
  if (!(c.optimizer.learning_rate >= 0.0)) throw ConfigError("optimizer.learning_rate must be >= 0");
  if (!(c.optimizer.beta1 > 0.0 && c.optimizer.beta1 < 1.0 && c.optimizer.beta2 > 0.0 && c.optimizer.beta2 < 1.0))
    throw ConfigError("optimizer betas must lie in (0, 1)");
  if (!(c.optimizer.epsilon > 0.0)) throw ConfigError("optimizer.epsilon must be positive");
  if (c.seeds.empty()) throw ConfigError("seeds must not be empty");
  if (c.eval_seeds.empty()) throw ConfigError("eval_seeds must not be empty");
  if (c.checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  if (c.sweep_learning_rates.empty()) throw ConfigError("sweep_learning_rates must not be empty");
  for (double lr : c.sweep_learning_rates)
    if (!(lr >= 0.0)) throw ConfigError("sweep learning rates must be >= 0");
  if (!(c.heuristic_threshold > 0.0 && c.heuristic_threshold < 0.5))
    throw ConfigError("heuristic_threshold must lie in (0, 0.5)");
}

std::string to_json(const RunConfig& c) {
  json j;
  j["topology"] = c.topology;
  j["mode"] = sim::to_string(c.mode);
  j["pretrain_iterations"] = c.pretrain_iterations;
  j["finetune_iterations"] = c.finetune_iterations;
  j["network"] = {{"d_model", c.network.d_model},   {"heads", c.network.heads},
                  {"blocks", c.network.blocks},     {"ff_width", c.network.ff_width},
                  {"lookback", c.network.lookback}};
  j["loss"] = {{"gamma", c.loss.gamma},
               {"local_critic_pretrain", c.loss.local_critic_pretrain},
               {"local_critic", c.loss.local_critic},
               {"global_critic", c.loss.global_critic},
               {"entropy", c.loss.entropy}};
  j["optimizer"] = {{"learning_rate", c.optimizer.learning_rate}, {"beta1", c.optimizer.beta1},
                    {"beta2", c.optimizer.beta2},                 {"epsilon", c.optimizer.epsilon},
                    {"clip_norm", c.optimizer.clip_norm}};
  j["seeds"] = c.seeds;
  j["eval_seeds"] = c.eval_seeds;
  j["output_dir"] = c.output_dir;
  j["checkpoint_every"] = c.checkpoint_every;
  j["ablation"] = {{"normal_gc", c.ablation.normal_gc},
                   {"separate_actors", c.ablation.separate_actors},
                   {"decoder_only", c.ablation.decoder_only}};
  j["sweep_learning_rates"] = c.sweep_learning_rates;
  j["heuristic_threshold"] = c.heuristic_threshold;
  return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(position(text, e.byte == 0 ? 0 : e.byte - 1) + ": malformed JSON (" + e.what() + ")");
  }
  RunConfig c;
  c.base_dir = base_dir;
  Reader top(text, j, "");
  std::string mode = sim::to_string(c.mode);
  top.read("topology", c.topology);
  top.read("mode", mode);
  top.read("pretrain_iterations", c.pretrain_iterations);
  top.read("finetune_iterations", c.finetune_iterations);
  {
    Reader r(text, top.child("network"), "network");
    r.read("d_model", c.network.d_model);
    r.read("heads", c.network.heads);
    r.read("blocks", c.network.blocks);
    r.read("ff_width", c.network.ff_width);
    r.read("lookback", c.network.lookback);
    r.finish();
  }
  {
    Reader r(text, top.child("loss"), "loss");
    r.read("gamma", c.loss.gamma);
    r.read("local_critic_pretrain", c.loss.local_critic_pretrain);
    r.read("local_critic", c.loss.local_critic);
    r.read("global_critic", c.loss.global_critic);
    r.read("entropy", c.loss.entropy);
    r.finish();
  }
  {
    Reader r(text, top.child("optimizer"), "optimizer");
    r.read("learning_rate", c.optimizer.learning_rate);
    r.read("beta1", c.optimizer.beta1);
    r.read("beta2", c.optimizer.beta2);
    r.read("epsilon", c.optimizer.epsilon);
    r.read("clip_norm", c.optimizer.clip_norm);
    r.finish();
  }
  top.read("seeds", c.seeds);
  top.read("eval_seeds", c.eval_seeds);
  top.read("output_dir", c.output_dir);
  top.read("checkpoint_every", c.checkpoint_every);
  {
    Reader r(text, top.child("ablation"), "ablation");
    r.read("normal_gc", c.ablation.normal_gc);
    r.read("separate_actors", c.ablation.separate_actors);
    r.read("decoder_only", c.ablation.decoder_only);
    r.finish();
  }
  top.read("sweep_learning_rates", c.sweep_learning_rates);
  top.read("heuristic_threshold", c.heuristic_threshold);
  top.finish();
  try {
    c.mode = sim::parse_mode(mode);
  } catch (const std::exception& e) {
    throw ConfigError(locate_key(text, "mode") + ": " + e.what());
  }
  c.network.decoder_only = c.ablation.decoder_only;
  try {
    validate(c);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return run_config_from_json(buf.str(), path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void save_run_config(const std::filesystem::path& path, const RunConfig& config) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config echo " + path.string());
  out << to_json(config);
}

sim::Topology resolve_topology(const RunConfig& config) {
  sim::Topology topo;
  if (config.topology == "bundled") {
    topo = sim::bundled_topology();
  } else {
    std::filesystem::path path(config.topology);
    if (path.is_relative() && !config.base_dir.empty()) path = config.base_dir / path;
    topo = sim::load_topology(path);
  }
  topo.order_model.mode = config.mode;
  return topo;
}

train::TrainConfig to_train_config(const RunConfig& c, const std::filesystem::path& checkpoint_dir) {
  train::TrainConfig t;
  t.model.encgat = c.network;
  t.model.encgat.decoder_only = c.ablation.decoder_only;
  t.model.separate_actors = c.ablation.separate_actors;
  t.weights = c.loss;
  t.adam = c.optimizer;
  t.pretrain_iterations = c.pretrain_iterations;
  t.finetune_iterations = c.finetune_iterations;
  t.normal_gc = c.ablation.normal_gc;
  t.checkpoint_every = c.checkpoint_every;
  t.checkpoint_dir = checkpoint_dir;
  return t;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  auto number = [&](const std::string& s) -> std::uint64_t {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
      throw ConfigError("bad seed '" + s + "' in '" + text + "'");
    return std::stoull(s);
  };
  std::vector<std::uint64_t> seeds;
  const std::size_t dots = text.find("..");
  if (dots != std::string::npos) {
    const std::uint64_t lo = number(text.substr(0, dots)), hi = number(text.substr(dots + 2));
    if (hi < lo) throw ConfigError("empty seed range '" + text + "'");
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    return seeds;
  }
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) seeds.push_back(number(item));
  if (seeds.empty()) throw ConfigError("empty seed list");
  return seeds;
}

}  // namespace prelac::cfg
