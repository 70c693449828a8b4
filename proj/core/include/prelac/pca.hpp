#pragma once

#include <cstdint>
#include <vector>

namespace prelac::eval {

using Matrix = std::vector<std::vector<double>>;

struct PcaResult {
  std::vector<double> mean;
  Matrix components;                // one unit-norm direction per row
  std::vector<double> eigenvalues;  // sample covariance eigenvalues, descending
  int iterations = 0;
};

/// Top principal directions of the rows of `data` by power iteration with
/// deflation on the sample covariance. Iteration stops once successive unit
/// vectors differ by less than `tolerance`.
PcaResult principal_components(const Matrix& data, int count = 2, double tolerance = 1e-9,
                               int max_iterations = 200000);

/// Centred rows projected onto the components: [rows x count].
Matrix project(const Matrix& data, const PcaResult& pca);

/// Sample covariance (n - 1 denominator) of the centred rows.
Matrix covariance(const Matrix& data, const std::vector<double>& mean);

/// Squared Frobenius norm of the centred data minus its projection onto
/// the span of `components`.
double reconstruction_error(const Matrix& data, const std::vector<double>& mean, const Matrix& components);

}  // namespace prelac::eval
