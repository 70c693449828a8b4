#include "prelac/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "prelac/errors.hpp"

namespace prelac::ad {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::vector<double>& TensorData::ensure_grad() {
  if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
  return grad;
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.empty() || shape.size() > 2) {
    throw DimensionError("tensor rank must be 1 or 2, got shape " + to_string(shape));
  }
  for (auto d : shape) {
    if (d == 0) throw DimensionError("tensor dimensions must be >= 1, got " + to_string(shape));
  }
}

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  check_shape(shape);
  auto data = std::make_shared<TensorData>();
  data->values.assign(numel(shape), value);
  data->shape = std::move(shape);
  data->requires_grad = requires_grad;
  return Tensor(std::move(data));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  check_shape(shape);
  if (numel(shape) != values.size()) {
    throw DimensionError("shape " + to_string(shape) + " does not match " +
                         std::to_string(values.size()) + " values");
  }
  auto data = std::make_shared<TensorData>();
  data->shape = std::move(shape);
  data->values = std::move(values);
  data->requires_grad = requires_grad;
  return Tensor(std::move(data));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<double> values;
  std::size_t cols = rows.size() ? rows.begin()->size() : 0;
  for (const auto& r : rows) {
    if (r.size() != cols) throw DimensionError("ragged matrix literal");
    values.insert(values.end(), r.begin(), r.end());
  }
  return from({rows.size(), cols}, std::move(values));
}

Tensor Tensor::scalar(double value) { return from({1, 1}, {value}); }

const Shape& Tensor::shape() const { return data_->shape; }

std::size_t Tensor::rows() const { return rank() == 1 ? 1 : data_->shape[0]; }

std::size_t Tensor::cols() const { return data_->shape.back(); }

std::span<const double> Tensor::values() const { return data_->values; }

std::span<double> Tensor::mutable_values() { return data_->values; }

double Tensor::operator()(std::size_t r, std::size_t c) const { return data_->values[r * cols() + c]; }

double Tensor::item() const {
  if (size() != 1) throw ContractError("item() on tensor of shape " + to_string(shape()));
  return data_->values[0];
}

bool Tensor::requires_grad() const { return data_ && data_->requires_grad; }

void Tensor::set_requires_grad(bool flag) { data_->requires_grad = flag; }

bool Tensor::has_grad() const { return !data_->grad.empty(); }

std::span<const double> Tensor::grad() const { return data_->grad; }

void Tensor::zero_grad() { data_->grad.assign(data_->values.size(), 0.0); }

void Tensor::clear_grad() { data_->grad.clear(); }

Tensor Tensor::clone() const {
  auto data = std::make_shared<TensorData>(*data_);
  return Tensor(std::move(data));
}

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape* active_tape() { return g_active_tape; }

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }

TapeScope::~TapeScope() { g_active_tape = previous_; }

void Tape::record(std::shared_ptr<TensorData> output, BackwardFn backward) {
  nodes_.push_back({std::move(output), std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward() requires a scalar loss, got shape " +
                        (loss.defined() ? to_string(loss.shape()) : std::string("<undefined>")));
  }
  if (!loss.requires_grad()) return;
  auto& seed = loss.data()->ensure_grad();
  seed[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    const TensorData& out = *it->output;
    if (out.grad.empty()) continue;
    it->backward(out);
  }
}

void backward(const Tensor& loss, Tape& tape) { tape.backward(loss); }

}  // namespace prelac::ad
