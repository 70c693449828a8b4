#include "prelac/pca.hpp"

#include <cmath>

#include "prelac/errors.hpp"
#include "prelac/rng.hpp"

namespace prelac::eval {

namespace {

std::vector<double> multiply(const Matrix& m, const std::vector<double>& v) {
  std::vector<double> out(m.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) out[i] += m[i][j] * v[j];
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool normalize(std::vector<double>& v) {
  const double n = std::sqrt(dot(v, v));
  if (n == 0.0 || !std::isfinite(n)) return false;
  for (double& x : v) x /= n;
  return true;
}

}  // namespace

Matrix covariance(const Matrix& data, const std::vector<double>& mean) {
  const std::size_t d = mean.size();
  Matrix c(d, std::vector<double>(d, 0.0));
  for (const auto& row : data)
    for (std::size_t i = 0; i < d; ++i) {
      const double a = row[i] - mean[i];
      for (std::size_t j = i; j < d; ++j) c[i][j] += a * (row[j] - mean[j]);
    }
  const double denom = static_cast<double>(data.size() - 1);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      c[i][j] /= denom;
      c[j][i] = c[i][j];
    }
  return c;
}

PcaResult principal_components(const Matrix& data, int count, double tolerance, int max_iterations) {
  if (data.size() < 2) throw ContractError("PCA needs at least 2 rows, got " + std::to_string(data.size()));
  const std::size_t d = data.front().size();
  for (const auto& row : data)
    if (row.size() != d) throw DimensionError("PCA rows have unequal widths");
  if (count < 1 || static_cast<std::size_t>(count) > d)
    throw ContractError("PCA component count " + std::to_string(count) + " outside 1.." + std::to_string(d));

  PcaResult result;
  result.mean.assign(d, 0.0);
  for (const auto& row : data)
    for (std::size_t j = 0; j < d; ++j) result.mean[j] += row[j];
  for (double& m : result.mean) m /= static_cast<double>(data.size());
  Matrix c = covariance(data, result.mean);

  Rng rng(0x5eedULL);
  std::normal_distribution<double> normal;
  for (int k = 0; k < count; ++k) {
    std::vector<double> v(d);
    for (double& x : v) x = normal(rng);
    // Start orthogonal to the directions already found.
    for (const auto& u : result.components) {
      const double p = dot(v, u);
      for (std::size_t j = 0; j < d; ++j) v[j] -= p * u[j];
    }
    normalize(v);
    for (int it = 0; it < max_iterations; ++it) {
      ++result.iterations;
      std::vector<double> w = multiply(c, v);
      if (!normalize(w)) break;  // remaining spectrum is zero; keep v
      if (dot(w, v) < 0.0)
        for (double& x : w) x = -x;
      double diff = 0.0;
      for (std::size_t j = 0; j < d; ++j) diff = std::max(diff, std::abs(w[j] - v[j]));
      v = std::move(w);
      if (diff < tolerance) break;
    }
    const double lambda = dot(v, multiply(c, v));
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) c[i][j] -= lambda * v[i] * v[j];
    result.components.push_back(v);
    result.eigenvalues.push_back(lambda);
  }
  return result;
}

Matrix project(const Matrix& data, const PcaResult& pca) {
  Matrix out;
  out.reserve(data.size());
  for (const auto& row : data) {
    std::vector<double> centred(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) centred[j] = row[j] - pca.mean[j];
    std::vector<double> p;
    for (const auto& u : pca.components) p.push_back(dot(centred, u));
    out.push_back(std::move(p));
  }
  return out;
}

double reconstruction_error(const Matrix& data, const std::vector<double>& mean, const Matrix& components) {
  double err = 0.0;
  for (const auto& row : data) {
    std::vector<double> r(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) r[j] = row[j] - mean[j];
    std::vector<double> coeffs;
    for (const auto& u : components) coeffs.push_back(dot(r, u));
    for (std::size_t k = 0; k < components.size(); ++k)
      for (std::size_t j = 0; j < r.size(); ++j) r[j] -= coeffs[k] * components[k][j];
    err += dot(r, r);
  }
  return err;
}

}  // namespace prelac::eval
