#include "prelac/encgat.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "prelac/errors.hpp"
#include "prelac/ops.hpp"

namespace prelac::net {

using ad::Tensor;
using obs::EdgeType;
using obs::VertexType;

namespace {

const char* edge_key(EdgeType type) { return type == EdgeType::port_port ? "pp" : "pv"; }

const char* vertex_key(VertexType type) { return type == VertexType::port ? "port" : "vessel"; }

void add_linear(ad::ParameterSet& params, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng) {
  params.add_uniform(prefix + ".weight", {in, out}, in, rng);
  params.add_uniform(prefix + ".bias", {out}, in, rng);
}

void add_norm(ad::ParameterSet& params, const std::string& prefix, std::size_t width) {
  params.add_constant(prefix + ".gain", {width}, 1.0);
  params.add_constant(prefix + ".bias", {width}, 0.0);
}

void add_attention(ad::ParameterSet& params, const std::string& prefix, std::size_t d, Rng& rng) {
  for (const char* p : {".query", ".key", ".value"}) params.add_uniform(prefix + p, {d, d}, d, rng);
}

Tensor norm(const Tensor& x, const ad::ParameterSet& params, const std::string& prefix) {
  return ad::layer_norm(x, params.at(prefix + ".gain"), params.at(prefix + ".bias"));
}

Tensor multi_head(const Tensor& query, const Tensor& keys, const Tensor& values, int heads) {
  if (heads == 1) return ad::attention(query, keys, values);
  const std::size_t width = query.cols() / static_cast<std::size_t>(heads);
  std::vector<Tensor> parts;
  parts.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const std::size_t begin = static_cast<std::size_t>(h) * width;
    parts.push_back(ad::attention(ad::slice_cols(query, begin, width), ad::slice_cols(keys, begin, width),
                                  ad::slice_cols(values, begin, width)));
  }
  return ad::concat_last_dim(parts);
}

Tensor project_attend(const Tensor& query_in, const Tensor& kv_in, const ad::ParameterSet& params,
                      const std::string& prefix, int heads) {
  Tensor q = ad::matmul(query_in, params.at(prefix + ".query"));
  Tensor k = ad::matmul(kv_in, params.at(prefix + ".key"));
  Tensor v = ad::matmul(kv_in, params.at(prefix + ".value"));
  return multi_head(q, k, v, heads);
}

Tensor feed_forward(const Tensor& x, const ad::ParameterSet& params, const std::string& prefix) {
  return linear(ad::relu(linear(x, params, prefix + ".ff1")), params, prefix + ".ff2");
}

// Temporal attention reassociated around the input lift: with lifted rows
// L = X W + b, keys L W_k only enter through q (W W_k)^T X^T plus a constant
// that softmax drops, and the weighted values equal (w X) W W_v + b W_v. The
// f x d products are formed once per forward pass instead of per window.
struct TemporalProjection {
  Tensor lift_weight, lift_bias, query, key, value, value_bias;
};

TemporalProjection temporal_projection(const ad::ParameterSet& params, VertexType type) {
  const std::string prefix = std::string("encgat.input.") + vertex_key(type);
  TemporalProjection p;
  p.lift_weight = params.at(prefix + ".weight");
  p.lift_bias = params.at(prefix + ".bias");
  p.query = params.at("encgat.temporal.query");
  p.key = ad::matmul(p.lift_weight, params.at("encgat.temporal.key"));
  p.value = ad::matmul(p.lift_weight, params.at("encgat.temporal.value"));
  p.value_bias = ad::matmul(p.lift_bias, params.at("encgat.temporal.value"));
  return p;
}

Tensor temporal_apply(const TemporalProjection& p, const Tensor& window, const Tensor& current, int heads) {
  Tensor q = ad::matmul(ad::add_row(ad::matmul(current, p.lift_weight), p.lift_bias), p.query);
  const std::size_t width = q.cols() / static_cast<std::size_t>(heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(width));
  std::vector<Tensor> parts;
  for (int h = 0; h < heads; ++h) {
    const std::size_t begin = static_cast<std::size_t>(h) * width;
    const bool whole = heads == 1;
    Tensor qh = whole ? q : ad::slice_cols(q, begin, width);
    Tensor kh = whole ? p.key : ad::slice_cols(p.key, begin, width);
    Tensor vh = whole ? p.value : ad::slice_cols(p.value, begin, width);
    Tensor bh = whole ? p.value_bias : ad::slice_cols(p.value_bias, begin, width);
    Tensor scores = ad::scale(ad::matmul_bt(ad::matmul_bt(qh, kh), window), scale);
    Tensor weights = ad::softmax_rows(scores);
    parts.push_back(ad::add(ad::matmul(ad::matmul(weights, window), vh), bh));
  }
  return heads == 1 ? parts.front() : ad::concat_last_dim(parts);
}

Tensor pad_window(const Tensor& history, std::size_t rows) {
  if (history.rows() == rows) return history;
  Tensor pad = Tensor::zeros({rows - history.rows(), history.cols()});
  std::vector<Tensor> parts{pad, history};
  return ad::stack_rows(parts);
}

EncGatOutput forward_impl(const obs::HeteroObservation& obs, const ad::ParameterSet& params,
                          const EncGatConfig& config, std::span<const int> targets, bool decoder_only) {
  validate(config);
  const int n = static_cast<int>(obs.size());
  std::vector<int> wanted(targets.begin(), targets.end());
  if (wanted.empty()) {
    if (obs.center >= 0) {
      wanted.push_back(obs.center);
      if (obs.current_vessel >= 0) wanted.push_back(obs.current_vessel);
    } else {
      for (int v = 0; v < n; ++v) wanted.push_back(v);
    }
  }
  for (int v : wanted)
    if (v < 0 || v >= n) throw ContractError("encgat target " + std::to_string(v) + " outside observation");

  // need[b] holds the vertices whose block-b input must be computed.
  const int blocks = config.blocks;
  std::vector<std::vector<int>> need(static_cast<std::size_t>(blocks) + 1);
  need[static_cast<std::size_t>(blocks)] = wanted;
  for (int b = blocks; b > 0; --b) {
    std::set<int> prev;
    for (int v : need[static_cast<std::size_t>(b)]) {
      if (!obs.expanded[static_cast<std::size_t>(v)])
        throw ContractError("vertex " + std::to_string(v) + " needs neighbours the observation does not list");
      prev.insert(v);
      for (int t = 0; t < obs::kEdgeTypes; ++t)
        for (const auto& e : obs.neighbors[static_cast<std::size_t>(t)][static_cast<std::size_t>(v)])
          prev.insert(e.vertex);
    }
    need[static_cast<std::size_t>(b) - 1].assign(prev.begin(), prev.end());
  }

  std::array<TemporalProjection, 2> temporal{temporal_projection(params, VertexType::port),
                                             temporal_projection(params, VertexType::vessel)};
  std::vector<Tensor> h(static_cast<std::size_t>(n));
  for (int v : need[0]) {
    const Tensor& window = obs.windows[static_cast<std::size_t>(v)];
    const VertexType type = obs.vertices[static_cast<std::size_t>(v)].type;
    if (window.cols() != static_cast<std::size_t>(obs::feature_width(type)) || window.rows() > static_cast<std::size_t>(config.lookback))
      throw DimensionError("vertex " + std::to_string(v) + " window " + ad::to_string(window.shape()));
    h[static_cast<std::size_t>(v)] =
        temporal_apply(temporal[static_cast<std::size_t>(type)], pad_window(window, static_cast<std::size_t>(config.lookback)),
                       ad::slice_row(window, window.rows() - 1), config.heads);
  }

  EncGatOutput out;
  out.per_type.resize(static_cast<std::size_t>(n));
  for (int b = 0; b < blocks; ++b) {
    // Node half of the edge-input projection, shared by every edge into u.
    std::array<std::vector<Tensor>, obs::kEdgeTypes> projected;
    for (int t = 0; t < obs::kEdgeTypes; ++t) {
      projected[static_cast<std::size_t>(t)].resize(static_cast<std::size_t>(n));
      const Tensor& w = params.at(block_prefix(b, static_cast<EdgeType>(t)) + ".edge.node");
      for (int u : need[static_cast<std::size_t>(b)])
        projected[static_cast<std::size_t>(t)][static_cast<std::size_t>(u)] = ad::matmul(h[static_cast<std::size_t>(u)], w);
    }
    std::vector<Tensor> next(static_cast<std::size_t>(n));
    for (int v : need[static_cast<std::size_t>(b) + 1]) {
      std::array<Tensor, obs::kEdgeTypes> aggregates;
      for (int t = 0; t < obs::kEdgeTypes; ++t) {
        const auto type = static_cast<EdgeType>(t);
        const auto& edges = obs.neighbors[static_cast<std::size_t>(t)][static_cast<std::size_t>(v)];
        const std::string prefix = block_prefix(b, type);
        Tensor encoded;
        if (!edges.empty()) {
          std::vector<Tensor> rows;
          std::vector<double> features;
          rows.reserve(edges.size());
          for (const auto& e : edges) {
            rows.push_back(projected[static_cast<std::size_t>(t)][static_cast<std::size_t>(e.vertex)]);
            features.insert(features.end(), e.features.begin(), e.features.end());
          }
          Tensor feat = Tensor::from({edges.size(), obs::kEdgeFeatures}, std::move(features));
          Tensor x = ad::add_row(ad::add(ad::stack_rows(rows), ad::matmul(feat, params.at(prefix + ".edge.feature"))),
                                 params.at(prefix + ".edge.bias"));
          encoded = decoder_only ? x : encode_neighbors(x, params, config, b, type);
        }
        aggregates[static_cast<std::size_t>(t)] =
            decode_aggregate(h[static_cast<std::size_t>(v)], encoded, params, config, b, type);
      }
      Tensor joined = ad::concat_last_dim(aggregates);
      next[static_cast<std::size_t>(v)] =
          ad::add(h[static_cast<std::size_t>(v)], linear(joined, params, "encgat.block" + std::to_string(b) + ".out"));
      if (b == blocks - 1) out.per_type[static_cast<std::size_t>(v)] = aggregates;
    }
    h = std::move(next);
  }
  out.embedding = std::move(h);
  return out;
}

}  // namespace

void validate(const EncGatConfig& config) {
  if (config.d_model < 1 || config.ff_width < 1 || config.heads < 1 || config.blocks < 1 || config.lookback < 1)
    throw ConfigError("encgat widths, heads, blocks and lookback must be positive");
  if (config.d_model % config.heads != 0)
    throw ConfigError("d_model " + std::to_string(config.d_model) + " not divisible by heads " +
                      std::to_string(config.heads));
}

std::string block_prefix(int block, EdgeType type) {
  return "encgat.block" + std::to_string(block) + "." + edge_key(type);
}

void init_encgat(ad::ParameterSet& params, const EncGatConfig& config, Rng& rng) {
  validate(config);
  const auto d = static_cast<std::size_t>(config.d_model);
  const auto ff = static_cast<std::size_t>(config.ff_width);
  add_linear(params, "encgat.input.port", obs::kPortFeatures, d, rng);
  add_linear(params, "encgat.input.vessel", obs::kVesselFeatures, d, rng);
  add_attention(params, "encgat.temporal", d, rng);
  for (int b = 0; b < config.blocks; ++b) {
    for (int t = 0; t < obs::kEdgeTypes; ++t) {
      const std::string prefix = block_prefix(b, static_cast<EdgeType>(t));
      // One (d + edge features) x d projection, stored as its node and edge halves.
      params.add_uniform(prefix + ".edge.node", {d, d}, d + obs::kEdgeFeatures, rng);
      params.add_uniform(prefix + ".edge.feature", {obs::kEdgeFeatures, d}, d + obs::kEdgeFeatures, rng);
      params.add_uniform(prefix + ".edge.bias", {d}, d + obs::kEdgeFeatures, rng);
      for (const char* part : {".enc", ".dec"}) {
        add_attention(params, prefix + part, d, rng);
        add_linear(params, prefix + part + ".ff1", d, ff, rng);
        add_linear(params, prefix + part + ".ff2", ff, d, rng);
        add_norm(params, prefix + part + ".norm1", d);
        add_norm(params, prefix + part + ".norm2", d);
      }
      params.add_uniform(prefix + ".null", {1, d}, d, rng);
    }
    add_linear(params, "encgat.block" + std::to_string(b) + ".out", d * obs::kEdgeTypes, d, rng);
  }
}

Tensor linear(const Tensor& x, const ad::ParameterSet& params, const std::string& prefix) {
  return ad::add_row(ad::matmul(x, params.at(prefix + ".weight")), params.at(prefix + ".bias"));
}

Tensor temporal_attention(const Tensor& history, const Tensor& current, const ad::ParameterSet& params,
                          const EncGatConfig& config, VertexType type) {
  const std::size_t width = obs::feature_width(type);
  if (history.cols() != width || current.cols() != width || current.rows() != 1)
    throw DimensionError("temporal window " + ad::to_string(history.shape()) + " / current " +
                         ad::to_string(current.shape()) + " for width " + std::to_string(width));
  const auto n = static_cast<std::size_t>(config.lookback);
  if (history.rows() > n)
    throw DimensionError("window of " + std::to_string(history.rows()) + " rows exceeds lookback " + std::to_string(n));
  return temporal_apply(temporal_projection(params, type), pad_window(history, n), current, config.heads);
}

Tensor encode_neighbors(const Tensor& neighbors, const ad::ParameterSet& params, const EncGatConfig& config,
                        int block, EdgeType type) {
  if (neighbors.cols() != static_cast<std::size_t>(config.d_model))
    throw DimensionError("encoder input " + ad::to_string(neighbors.shape()) + " for d_model " +
                         std::to_string(config.d_model));
  const std::string prefix = block_prefix(block, type) + ".enc";
  Tensor a = project_attend(neighbors, neighbors, params, prefix, config.heads);
  Tensor k = norm(ad::add(a, neighbors), params, prefix + ".norm1");
  Tensor z = feed_forward(k, params, prefix);
  return norm(ad::add(k, z), params, prefix + ".norm2");
}

Tensor decode_aggregate(const Tensor& center, const Tensor& encoded, const ad::ParameterSet& params,
                        const EncGatConfig& config, int block, EdgeType type) {
  const std::string base = block_prefix(block, type);
  if (!encoded.defined()) return params.at(base + ".null");
  const auto d = static_cast<std::size_t>(config.d_model);
  if (center.rows() != 1 || center.cols() != d || encoded.cols() != d)
    throw DimensionError("decoder centre " + ad::to_string(center.shape()) + " / encoded " +
                         ad::to_string(encoded.shape()));
  const std::string prefix = base + ".dec";
  // Every expanded query row is identical, so the attention row is computed once.
  Tensor e_row = project_attend(center, encoded, params, prefix, config.heads);
  Tensor e = ad::expand_rows(e_row, encoded.rows());
  Tensor f = norm(ad::add(e, encoded), params, prefix + ".norm1");
  Tensor c = feed_forward(f, params, prefix);
  Tensor out = norm(ad::add(f, c), params, prefix + ".norm2");
  return ad::mean_rows(out);
}

EncGatOutput encgat_forward(const obs::HeteroObservation& obs, const ad::ParameterSet& params,
                            const EncGatConfig& config, std::span<const int> targets) {
  return forward_impl(obs, params, config, targets, config.decoder_only);
}

EncGatOutput decoder_only_forward(const obs::HeteroObservation& obs, const ad::ParameterSet& params,
                                  const EncGatConfig& config, std::span<const int> targets) {
  return forward_impl(obs, params, config, targets, true);
}

}  // namespace prelac::net
