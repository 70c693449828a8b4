#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace prelac::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

struct TensorData {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until a gradient is accumulated
  bool requires_grad = false;

  std::vector<double>& ensure_grad();
};

/// Dense row-major array of 64-bit floats with an optional gradient.
///
/// Tensors are rank 1 or rank 2. A rank-1 tensor of length n behaves as a
/// 1 x n row wherever a matrix is expected. Copies share storage; use
/// clone() for an independent copy.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor scalar(double value);

  bool defined() const { return data_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t rows() const;
  std::size_t cols() const;
  std::size_t size() const { return values().size(); }

  std::span<const double> values() const;
  std::span<double> mutable_values();
  double operator()(std::size_t r, std::size_t c) const;
  double item() const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  bool has_grad() const;
  std::span<const double> grad() const;
  void zero_grad();
  void clear_grad();

  Tensor clone() const;

  const std::shared_ptr<TensorData>& data() const { return data_; }
  explicit Tensor(std::shared_ptr<TensorData> data) : data_(std::move(data)) {}

 private:
  std::shared_ptr<TensorData> data_;
};

/// Ordered record of differentiable operations.
///
/// Operations record onto the tape made active by a TapeScope on the
/// current thread, and only when at least one input requires a gradient.
/// With no active tape the forward pass runs without bookkeeping.
class Tape {
 public:
  using BackwardFn = std::function<void(const TensorData& out)>;

  void record(std::shared_ptr<TensorData> output, BackwardFn backward);
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  /// Accumulates d(loss)/d(leaf) into every reachable leaf that requires a
  /// gradient. Throws ContractError if loss is not a single element.
  void backward(const Tensor& loss);

 private:
  struct Node {
    std::shared_ptr<TensorData> output;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

Tape* active_tape();

class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

/// Runs backward on the given tape. Free-function form of Tape::backward.
void backward(const Tensor& loss, Tape& tape);

}  // namespace prelac::ad
