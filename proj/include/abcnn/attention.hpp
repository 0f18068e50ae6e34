#pragma once

#include <cstddef>
#include <utility>

#include "abcnn/conv_pool.hpp"
#include "abcnn/core_math.hpp"

namespace abcnn {

// Entries lie in (0, 1]; A(i, j) compares column i of the left map with
// column j of the right map.
using AttentionMatrix = Matrix;

// 1 / (1 + |x - y|) with |.| the Euclidean distance.
double match_score(std::span<const double> x, std::span<const double> y);

AttentionMatrix attention_matrix(const FeatureMap& left, const FeatureMap& right);

// Given dL/dA, accumulates dL/d(left) and dL/d(right). Where two columns
// coincide the distance is not differentiable and contributes zero.
void attention_matrix_backward(const FeatureMap& left, const FeatureMap& right, const AttentionMatrix& a,
                               const Matrix& d_a, Matrix* d_left, Matrix* d_right);

// ABCNN-1 attention feature maps: left = W0 * A^T, right = W1 * A.
// Pass the same matrix twice for the shared-weight configuration.
std::pair<FeatureMap, FeatureMap> abcnn1_maps(const AttentionMatrix& a, const Matrix& w0, const Matrix& w1);

struct AttentionWeights {
  Vector left;   // row sums of A
  Vector right;  // column sums of A
};

AttentionWeights abcnn2_weights(const AttentionMatrix& a);

// Column j of the result is sum_{k=j}^{j+w-1} a[k] * Fc[:, k].
FeatureMap attention_pool(const FeatureMap& conv_output, std::span<const double> weights, std::size_t w);
void attention_pool_backward(const FeatureMap& conv_output, std::span<const double> weights, std::size_t w,
                             const Matrix& d_output, Matrix& d_conv_output, std::span<double> d_weights);

// Sentence-level pool with attention weights: sum_k a[k] Fc[:, k] / sum_k a[k]
// over the first `count` columns (0 = all).
Vector attention_all_pool(const FeatureMap& conv_output, std::span<const double> weights, std::size_t count = 0);
void attention_all_pool_backward(const FeatureMap& conv_output, std::span<const double> weights,
                                 std::size_t count, std::span<const double> d_output, Matrix& d_conv_output,
                                 std::span<double> d_weights);

// Mean pooling of A into a g x g grid. Rows and columns are split into g
// contiguous chunks; the first (n mod g) chunks get one extra element.
Matrix dynamic_pool(const Matrix& a, std::size_t g);
void dynamic_pool_backward(const Matrix& a, std::size_t g, const Matrix& d_grid, Matrix& d_a);

}  // namespace abcnn
