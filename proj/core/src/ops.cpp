#include "prelac/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "prelac/errors.hpp"

namespace prelac::ad {
namespace {

bool tracking(std::initializer_list<const Tensor*> inputs) {
  if (active_tape() == nullptr) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor* t) { return t->requires_grad(); });
}

Tensor make_output(std::size_t rows, std::size_t cols, std::vector<double> values, bool track) {
  auto data = std::make_shared<TensorData>();
  data->shape = {rows, cols};
  data->values = std::move(values);
  data->requires_grad = track;
  return Tensor(std::move(data));
}

void record(const Tensor& out, Tape::BackwardFn fn) { active_tape()->record(out.data(), std::move(fn)); }

// Gradient sink for an input; null when the input does not want one.
double* grad_sink(const std::shared_ptr<TensorData>& d) {
  if (!d->requires_grad) return nullptr;
  return d->ensure_grad().data();
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + to_string(a.shape()) + " and " +
                       to_string(b.shape()));
}

void require_same(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error(op, a, b);
}

template <typename Forward, typename Derivative>
Tensor unary(const Tensor& x, Forward f, Derivative df) {
  const bool track = tracking({&x});
  auto xs = x.values();
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = f(xs[i]);
  Tensor y = make_output(x.rows(), x.cols(), std::move(out), track);
  if (track) {
    record(y, [xd = x.data(), df](const TensorData& o) {
      double* gx = grad_sink(xd);
      if (!gx) return;
      for (std::size_t i = 0; i < o.grad.size(); ++i) gx[i] += o.grad[i] * df(xd->values[i], o.values[i]);
    });
  }
  return y;
}

thread_local std::vector<double> t_terms;

}  // namespace

double sum_terms(std::span<double> terms, Reduction order) {
  if (order == Reduction::sorted) std::sort(terms.begin(), terms.end());
  double acc = 0.0;
  for (double t : terms) acc += t;
  return acc;
}

Tensor matmul(const Tensor& a, const Tensor& b, Reduction order) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) shape_error("matmul", a, b);
  const bool track = tracking({&a, &b});
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(m * n, 0.0);
  if (order == Reduction::sequential) {
    for (std::size_t i = 0; i < m; ++i) {
      double* row = out.data() + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = av[i * k + p];
        const double* brow = bv.data() + p * n;
        for (std::size_t j = 0; j < n; ++j) row[j] += aip * brow[j];
      }
    }
  } else {
    t_terms.resize(k);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t p = 0; p < k; ++p) t_terms[p] = av[i * k + p] * bv[p * n + j];
        out[i * n + j] = sum_terms(t_terms, order);
      }
    }
  }
  Tensor c = make_output(m, n, std::move(out), track);
  if (track) {
    record(c, [ad = a.data(), bd = b.data(), m, k, n](const TensorData& o) {
      const double* g = o.grad.data();
      if (double* ga = grad_sink(ad)) {
        const double* bv = bd->values.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * bv[p * n + j];
            ga[i * k + p] += acc;
          }
      }
      if (double* gb = grad_sink(bd)) {
        const double* av = ad->values.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * g[i * n + j];
          }
      }
    });
  }
  return c;
}

Tensor matmul_bt(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k) shape_error("matmul_bt", a, b);
  const bool track = tracking({&a, &b});
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += av[i * k + p] * bv[j * k + p];
      out[i * n + j] = acc;
    }
  Tensor c = make_output(m, n, std::move(out), track);
  if (track) {
    record(c, [ad = a.data(), bd = b.data(), m, k, n](const TensorData& o) {
      const double* g = o.grad.data();
      if (double* ga = grad_sink(ad)) {
        const double* bv = bd->values.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            const double gij = g[i * n + j];
            for (std::size_t p = 0; p < k; ++p) ga[i * k + p] += gij * bv[j * k + p];
          }
      }
      if (double* gb = grad_sink(bd)) {
        const double* av = ad->values.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            const double gij = g[i * n + j];
            for (std::size_t p = 0; p < k; ++p) gb[j * k + p] += gij * av[i * k + p];
          }
      }
    });
  }
  return c;
}

Tensor transpose(const Tensor& x) {
  const std::size_t m = x.rows(), n = x.cols();
  const bool track = tracking({&x});
  auto xv = x.values();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = xv[i * n + j];
  Tensor y = make_output(n, m, std::move(out), track);
  if (track) {
    record(y, [xd = x.data(), m, n](const TensorData& o) {
      double* gx = grad_sink(xd);
      if (!gx) return;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += o.grad[j * m + i];
    });
  }
  return y;
}

namespace {

template <typename Op>
Tensor binary(const char* name, const Tensor& a, const Tensor& b, Op op, double sign_b) {
  require_same(name, a, b);
  const bool track = tracking({&a, &b});
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = op(av[i], bv[i]);
  Tensor c = make_output(a.rows(), a.cols(), std::move(out), track);
  if (track) {
    record(c, [ad = a.data(), bd = b.data(), sign_b](const TensorData& o) {
      if (double* ga = grad_sink(ad))
        for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += o.grad[i];
      if (double* gb = grad_sink(bd))
        for (std::size_t i = 0; i < o.grad.size(); ++i) gb[i] += sign_b * o.grad[i];
    });
  }
  return c;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary("add", a, b, [](double x, double y) { return x + y; }, 1.0);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary("sub", a, b, [](double x, double y) { return x - y; }, -1.0);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same("mul", a, b);
  const bool track = tracking({&a, &b});
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  Tensor c = make_output(a.rows(), a.cols(), std::move(out), track);
  if (track) {
    record(c, [ad = a.data(), bd = b.data()](const TensorData& o) {
      if (double* ga = grad_sink(ad))
        for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += o.grad[i] * bd->values[i];
      if (double* gb = grad_sink(bd))
        for (std::size_t i = 0; i < o.grad.size(); ++i) gb[i] += o.grad[i] * ad->values[i];
    });
  }
  return c;
}

Tensor add_row(const Tensor& x, const Tensor& row) {
  const std::size_t m = x.rows(), n = x.cols();
  if (row.rows() != 1 || row.cols() != n) shape_error("add_row", x, row);
  const bool track = tracking({&x, &row});
  auto xv = x.values();
  auto rv = row.values();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = xv[i * n + j] + rv[j];
  Tensor y = make_output(m, n, std::move(out), track);
  if (track) {
    record(y, [xd = x.data(), rd = row.data(), m, n](const TensorData& o) {
      if (double* gx = grad_sink(xd))
        for (std::size_t i = 0; i < m * n; ++i) gx[i] += o.grad[i];
      if (double* gr = grad_sink(rd))
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) gr[j] += o.grad[i * n + j];
    });
  }
  return y;
}

Tensor scale(const Tensor& x, double factor) {
  return unary(x, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& x, double offset) {
  return unary(x, [offset](double v) { return v + offset; }, [](double, double) { return 1.0; });
}

Tensor relu(const Tensor& x) {
  return unary(x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor log(const Tensor& x) {
  for (double v : x.values()) {
    if (!(v > 0.0) || !std::isfinite(v)) throw NumericError("log of non-positive or non-finite value");
  }
  return unary(x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor square(const Tensor& x) {
  return unary(x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor sum(const Tensor& x) {
  const bool track = tracking({&x});
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  Tensor y = make_output(1, 1, {acc}, track);
  if (track) {
    record(y, [xd = x.data()](const TensorData& o) {
      if (double* gx = grad_sink(xd))
        for (std::size_t i = 0; i < xd->values.size(); ++i) gx[i] += o.grad[0];
    });
  }
  return y;
}

Tensor add_n(std::span<const Tensor> terms) {
  if (terms.empty()) throw ContractError("add_n of zero terms");
  const Tensor& first = terms.front();
  bool track = false;
  for (const auto& t : terms) {
    require_same("add_n", first, t);
    track = track || t.requires_grad();
  }
  track = track && active_tape() != nullptr;
  std::vector<double> out(first.size(), 0.0);
  for (const auto& t : terms) {
    auto v = t.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
  }
  Tensor y = make_output(first.rows(), first.cols(), std::move(out), track);
  if (track) {
    std::vector<std::shared_ptr<TensorData>> inputs;
    inputs.reserve(terms.size());
    for (const auto& t : terms) inputs.push_back(t.data());
    record(y, [inputs = std::move(inputs)](const TensorData& o) {
      for (const auto& d : inputs)
        if (double* g = grad_sink(d))
          for (std::size_t i = 0; i < o.grad.size(); ++i) g[i] += o.grad[i];
    });
  }
  return y;
}

Tensor mean_rows(const Tensor& x) {
  const std::size_t m = x.rows(), n = x.cols();
  const bool track = tracking({&x});
  auto xv = x.values();
  std::vector<double> out(n);
  t_terms.resize(m);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) t_terms[i] = xv[i * n + j];
    out[j] = sum_terms(t_terms, Reduction::sorted) / static_cast<double>(m);
  }
  Tensor y = make_output(1, n, std::move(out), track);
  if (track) {
    record(y, [xd = x.data(), m, n](const TensorData& o) {
      double* gx = grad_sink(xd);
      const double inv = 1.0 / static_cast<double>(m);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += o.grad[j] * inv;
    });
  }
  return y;
}

Tensor concat_last_dim(const Tensor& a, const Tensor& b) {
  const Tensor parts[] = {a, b};
  return concat_last_dim(parts);
}

Tensor concat_last_dim(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat of zero tensors");
  const std::size_t m = parts.front().rows();
  std::size_t n = 0;
  bool track = false;
  for (const auto& p : parts) {
    if (p.rows() != m) shape_error("concat_last_dim", parts.front(), p);
    n += p.cols();
    track = track || p.requires_grad();
  }
  track = track && active_tape() != nullptr;
  std::vector<double> out(m * n);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t pc = p.cols();
    auto pv = p.values();
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(pv.data() + i * pc, pc, out.data() + i * n + offset);
    offset += pc;
  }
  Tensor y = make_output(m, n, std::move(out), track);
  if (track) {
    std::vector<std::shared_ptr<TensorData>> inputs;
    for (const auto& p : parts) inputs.push_back(p.data());
    record(y, [inputs = std::move(inputs), m, n](const TensorData& o) {
      std::size_t off = 0;
      for (const auto& d : inputs) {
        const std::size_t pc = d->shape.back();
        if (double* g = grad_sink(d))
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < pc; ++j) g[i * pc + j] += o.grad[i * n + off + j];
        off += pc;
      }
    });
  }
  return y;
}

Tensor stack_rows(std::span<const Tensor> rows) {
  if (rows.empty()) throw ContractError("stack_rows of zero tensors");
  const std::size_t n = rows.front().cols();
  std::size_t m = 0;
  bool track = false;
  for (const auto& r : rows) {
    if (r.cols() != n) shape_error("stack_rows", rows.front(), r);
    m += r.rows();
    track = track || r.requires_grad();
  }
  track = track && active_tape() != nullptr;
  std::vector<double> out;
  out.reserve(m * n);
  for (const auto& r : rows) out.insert(out.end(), r.values().begin(), r.values().end());
  Tensor y = make_output(m, n, std::move(out), track);
  if (track) {
    std::vector<std::shared_ptr<TensorData>> inputs;
    for (const auto& r : rows) inputs.push_back(r.data());
    record(y, [inputs = std::move(inputs)](const TensorData& o) {
      std::size_t off = 0;
      for (const auto& d : inputs) {
        const std::size_t len = d->values.size();
        if (double* g = grad_sink(d))
          for (std::size_t i = 0; i < len; ++i) g[i] += o.grad[off + i];
        off += len;
      }
    });
  }
  return y;
}

Tensor slice_row(const Tensor& x, std::size_t row) {
  const std::size_t n = x.cols();
  if (row >= x.rows()) throw DimensionError("slice_row: row " + std::to_string(row) + " out of " + to_string(x.shape()));
  const bool track = tracking({&x});
  auto xv = x.values();
  std::vector<double> out(xv.begin() + row * n, xv.begin() + (row + 1) * n);
  Tensor y = make_output(1, n, std::move(out), track);
  if (track) {
    record(y, [xd = x.data(), row, n](const TensorData& o) {
      double* gx = grad_sink(xd);
      for (std::size_t j = 0; j < n; ++j) gx[row * n + j] += o.grad[j];
    });
  }
  return y;
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count) {
  const std::size_t m = x.rows(), n = x.cols();
  if (count == 0 || begin + count > n)
    throw DimensionError("slice_cols [" + std::to_string(begin) + ", +" + std::to_string(count) + ") out of " +
                         to_string(x.shape()));
  const bool track = tracking({&x});
  auto xv = x.values();
  std::vector<double> out(m * count);
  for (std::size_t i = 0; i < m; ++i) std::copy_n(xv.data() + i * n + begin, count, out.data() + i * count);
  Tensor y = make_output(m, count, std::move(out), track);
  if (track) {
    record(y, [xd = x.data(), m, n, begin, count](const TensorData& o) {
      double* gx = grad_sink(xd);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < count; ++j) gx[i * n + begin + j] += o.grad[i * count + j];
    });
  }
  return y;
}

Tensor expand_rows(const Tensor& x, std::size_t count) {
  if (x.rows() != 1) throw DimensionError("expand_rows expects a single row, got " + to_string(x.shape()));
  if (count == 0) throw DimensionError("expand_rows to zero rows");
  const std::size_t n = x.cols();
  const bool track = tracking({&x});
  std::vector<double> out;
  out.reserve(count * n);
  for (std::size_t i = 0; i < count; ++i) out.insert(out.end(), x.values().begin(), x.values().end());
  Tensor y = make_output(count, n, std::move(out), track);
  if (track) {
    record(y, [xd = x.data(), count, n](const TensorData& o) {
      double* gx = grad_sink(xd);
      for (std::size_t i = 0; i < count; ++i)
        for (std::size_t j = 0; j < n; ++j) gx[j] += o.grad[i * n + j];
    });
  }
  return y;
}

Tensor pick(const Tensor& x, std::size_t row, std::size_t col) {
  if (row >= x.rows() || col >= x.cols()) throw DimensionError("pick out of range on " + to_string(x.shape()));
  const bool track = tracking({&x});
  const std::size_t idx = row * x.cols() + col;
  Tensor y = make_output(1, 1, {x.values()[idx]}, track);
  if (track) {
    record(y, [xd = x.data(), idx](const TensorData& o) {
      if (double* gx = grad_sink(xd)) gx[idx] += o.grad[0];
    });
  }
  return y;
}

namespace {

Tensor softmax_impl(const Tensor& x, const std::vector<bool>* mask) {
  const std::size_t m = x.rows(), n = x.cols();
  if (mask) {
    if (mask->size() != n) throw DimensionError("softmax mask length does not match column count");
    if (std::none_of(mask->begin(), mask->end(), [](bool b) { return b; }))
      throw ContractError("softmax mask excludes every entry");
  }
  auto active = [&](std::size_t j) { return mask == nullptr || (*mask)[j]; };
  const bool track = tracking({&x});
  auto xv = x.values();
  for (std::size_t i = 0; i < m * n; ++i) {
    if (active(i % n) && !std::isfinite(xv[i])) throw NumericError("softmax_rows: non-finite input");
  }
  std::vector<double> out(m * n, 0.0);
  std::vector<double> terms;
  terms.reserve(n);
  for (std::size_t i = 0; i < m; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
      if (active(j)) mx = std::max(mx, xv[i * n + j]);
    terms.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (!active(j)) continue;
      const double e = std::exp(xv[i * n + j] - mx);
      out[i * n + j] = e;
      terms.push_back(e);
    }
    const double denom = sum_terms(terms, Reduction::sorted);
    for (std::size_t j = 0; j < n; ++j)
      if (active(j)) out[i * n + j] /= denom;
  }
  Tensor y = make_output(m, n, std::move(out), track);
  if (track) {
    record(y, [xd = x.data(), m, n](const TensorData& o) {
      double* gx = grad_sink(xd);
      for (std::size_t i = 0; i < m; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += o.grad[i * n + j] * o.values[i * n + j];
        for (std::size_t j = 0; j < n; ++j) {
          const double yj = o.values[i * n + j];
          gx[i * n + j] += yj * (o.grad[i * n + j] - dot);
        }
      }
    });
  }
  return y;
}

}  // namespace

Tensor softmax_rows(const Tensor& x) { return softmax_impl(x, nullptr); }

Tensor masked_softmax_rows(const Tensor& x, const std::vector<bool>& mask) { return softmax_impl(x, &mask); }

Tensor entropy(const Tensor& p) {
  const bool track = tracking({&p});
  auto pv = p.values();
  std::vector<double> terms;
  terms.reserve(pv.size());
  for (double x : pv) {
    if (x < 0.0 || !std::isfinite(x)) throw NumericError("entropy of a negative or non-finite probability");
    terms.push_back(x > 0.0 ? -x * std::log(x) : 0.0);
  }
  Tensor y = make_output(1, 1, {sum_terms(terms, Reduction::sequential)}, track);
  if (track) {
    record(y, [pd = p.data()](const TensorData& o) {
      double* gp = grad_sink(pd);
      if (!gp) return;
      for (std::size_t i = 0; i < pd->values.size(); ++i)
        if (pd->values[i] > 0.0) gp[i] -= o.grad[0] * (std::log(pd->values[i]) + 1.0);
    });
  }
  return y;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias) {
  const std::size_t m = x.rows(), n = x.cols();
  if (gain.size() != n) shape_error("layer_norm(gain)", x, gain);
  if (bias.size() != n) shape_error("layer_norm(bias)", x, bias);
  const bool track = tracking({&x, &gain, &bias});
  auto xv = x.values();
  auto gv = gain.values();
  auto bv = bias.values();
  std::vector<double> out(m * n);
  std::vector<double> xhat(m * n);
  std::vector<double> inv_std(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = xv.data() + i * n;
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += row[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + kLayerNormEpsilon);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[i * n + j] = (row[j] - mean) * inv_std[i];
      out[i * n + j] = gv[j] * xhat[i * n + j] + bv[j];
    }
  }
  Tensor y = make_output(m, n, std::move(out), track);
  if (track) {
    record(y, [xd = x.data(), gd = gain.data(), bd = bias.data(), xhat = std::move(xhat),
               inv_std = std::move(inv_std), m, n](const TensorData& o) {
      const double* g = o.grad.data();
      if (double* gg = grad_sink(gd))
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) gg[j] += g[i * n + j] * xhat[i * n + j];
      if (double* gb = grad_sink(bd))
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
      if (double* gx = grad_sink(xd)) {
        const double* gain_v = gd->values.data();
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < m; ++i) {
          double mean_d = 0.0, mean_dx = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            const double d = g[i * n + j] * gain_v[j];
            mean_d += d;
            mean_dx += d * xhat[i * n + j];
          }
          mean_d *= inv_n;
          mean_dx *= inv_n;
          for (std::size_t j = 0; j < n; ++j) {
            const double d = g[i * n + j] * gain_v[j];
            gx[i * n + j] += inv_std[i] * (d - mean_d - xhat[i * n + j] * mean_dx);
          }
        }
      }
    });
  }
  return y;
}

Tensor stop_gradient(const Tensor& x) {
  auto data = std::make_shared<TensorData>();
  data->shape = x.shape();
  data->values.assign(x.values().begin(), x.values().end());
  data->requires_grad = false;
  return Tensor(std::move(data));
}

Tensor attention(const Tensor& query, const Tensor& key, const Tensor& value) {
  if (query.cols() != key.cols()) shape_error("attention(query,key)", query, key);
  if (key.rows() != value.rows()) shape_error("attention(key,value)", key, value);
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(key.cols()));
  Tensor weights = softmax_rows(scale(matmul_bt(query, key), inv_sqrt_dk));
  return matmul(weights, value, Reduction::sorted);
}

}  // namespace prelac::ad
