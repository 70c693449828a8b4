#include "prelac/parameters.hpp"

#include <cmath>
#include <cstring>

#include "prelac/errors.hpp"

namespace prelac::ad {

Tensor& ParameterSet::add(const std::string& name, Tensor value) {
  value.set_requires_grad(true);
  auto [it, inserted] = tensors_.insert_or_assign(name, std::move(value));
  return it->second;
}

Tensor& ParameterSet::add_uniform(const std::string& name, Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> values(numel(shape));
  for (auto& v : values) v = dist(rng);
  return add(name, Tensor::from(std::move(shape), std::move(values)));
}

Tensor& ParameterSet::add_constant(const std::string& name, Shape shape, double value) {
  return add(name, Tensor::full(std::move(shape), value));
}

const Tensor& ParameterSet::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second;
}

Tensor& ParameterSet::at(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second;
}

void ParameterSet::erase_prefix(const std::string& prefix) {
  for (auto it = tensors_.begin(); it != tensors_.end();) {
    if (it->first.compare(0, prefix.size(), prefix) == 0)
      it = tensors_.erase(it);
    else
      ++it;
  }
}

std::vector<std::string> ParameterSet::names() const {
  std::vector<std::string> out;
  out.reserve(tensors_.size());
  for (const auto& [name, _] : tensors_) out.push_back(name);
  return out;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : tensors_) n += t.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& [_, t] : tensors_) t.zero_grad();
}

ParameterSet ParameterSet::clone() const {
  ParameterSet out;
  for (const auto& [name, t] : tensors_) {
    Tensor copy = Tensor::from(t.shape(), std::vector<double>(t.values().begin(), t.values().end()), true);
    out.tensors_.emplace(name, std::move(copy));
  }
  return out;
}

std::uint64_t ParameterSet::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [name, t] : tensors_) {
    mix(name.data(), name.size());
    for (auto d : t.shape()) {
      const std::uint64_t d64 = d;
      mix(&d64, sizeof d64);
    }
    mix(t.values().data(), t.values().size() * sizeof(double));
  }
  return h;
}

bool ParameterSet::bit_equal(const ParameterSet& other) const {
  if (tensors_.size() != other.tensors_.size()) return false;
  auto a = tensors_.begin();
  auto b = other.tensors_.begin();
  for (; a != tensors_.end(); ++a, ++b) {
    if (a->first != b->first || a->second.shape() != b->second.shape()) return false;
    if (std::memcmp(a->second.values().data(), b->second.values().data(),
                    a->second.values().size() * sizeof(double)) != 0)
      return false;
  }
  return true;
}

}  // namespace prelac::ad
