#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "prelac/tensor.hpp"

namespace prelac::ad {

/// How an operation reduces over a summation axis.
///
/// `sorted` sums the terms in ascending value order, which makes the result
/// independent of the order the operands were supplied in. Attention uses it
/// along the neighbor axis so neighbor permutations commute exactly.
enum class Reduction { sequential, sorted };

double sum_terms(std::span<double> terms, Reduction order);

Tensor matmul(const Tensor& a, const Tensor& b, Reduction order = Reduction::sequential);
/// a * b^T without materialising the transpose.
Tensor matmul_bt(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
/// x [m x n] + row [1 x n], broadcast over rows.
Tensor add_row(const Tensor& x, const Tensor& row);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double offset);
Tensor relu(const Tensor& x);
Tensor log(const Tensor& x);
Tensor square(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor add_n(std::span<const Tensor> terms);
/// Column-wise mean over rows, [m x n] -> [1 x n], order-independent.
Tensor mean_rows(const Tensor& x);

Tensor concat_last_dim(const Tensor& a, const Tensor& b);
Tensor concat_last_dim(std::span<const Tensor> parts);
Tensor stack_rows(std::span<const Tensor> rows);
Tensor slice_row(const Tensor& x, std::size_t row);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count);
/// [1 x n] -> [count x n] by repeating the row.
Tensor expand_rows(const Tensor& x, std::size_t count);
/// Single element x(row, col) as a 1 x 1 tensor.
Tensor pick(const Tensor& x, std::size_t row, std::size_t col);

Tensor softmax_rows(const Tensor& x);
/// Softmax restricted to columns where mask is true; masked entries are 0.
Tensor masked_softmax_rows(const Tensor& x, const std::vector<bool>& mask);
/// -sum p log p over all entries, with 0 log 0 = 0.
Tensor entropy(const Tensor& p);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias);

/// Same values, no gradient path back to x.
Tensor stop_gradient(const Tensor& x);

/// softmax(q k^T / sqrt(d_k)) v with sorted reduction over keys.
Tensor attention(const Tensor& query, const Tensor& key, const Tensor& value);

inline constexpr double kLayerNormEpsilon = 1e-5;

}  // namespace prelac::ad
