#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "prelac/rng.hpp"
#include "prelac/tensor.hpp"

namespace prelac::ad {

/// Named collection of learnable tensors, iterated in name order.
class ParameterSet {
 public:
  Tensor& add(const std::string& name, Tensor value);
  /// Uniform in +-sqrt(1/fan_in), fan_in = rows of the weight.
  Tensor& add_uniform(const std::string& name, Shape shape, std::size_t fan_in, Rng& rng);
  Tensor& add_constant(const std::string& name, Shape shape, double value);

  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
  const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);
  void erase_prefix(const std::string& prefix);

  std::vector<std::string> names() const;
  std::size_t size() const { return tensors_.size(); }
  std::size_t scalar_count() const;

  auto begin() { return tensors_.begin(); }
  auto end() { return tensors_.end(); }
  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }

  void zero_grad();
  /// Deep copy: new storage, no gradients.
  ParameterSet clone() const;
  /// FNV-1a over names, shapes and the raw bytes of every value.
  std::uint64_t fingerprint() const;
  bool bit_equal(const ParameterSet& other) const;

 private:
  std::map<std::string, Tensor> tensors_;
};

}  // namespace prelac::ad
