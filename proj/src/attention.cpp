#include "abcnn/attention.hpp"

#include <string>
#include <vector>

#include "abcnn/errors.hpp"

namespace abcnn {

namespace {

// Start offsets of g contiguous chunks covering n items, plus n at the end.
std::vector<std::size_t> chunk_bounds(std::size_t n, std::size_t g) {
  std::vector<std::size_t> bounds(g + 1, 0);
  const std::size_t base = n / g;
  const std::size_t extra = n % g;
  for (std::size_t i = 0; i < g; ++i) bounds[i + 1] = bounds[i] + base + (i < extra ? 1 : 0);
  return bounds;
}

}  // namespace

double match_score(std::span<const double> x, std::span<const double> y) {
  return 1.0 / (1.0 + euclidean_distance(x, y));
}

AttentionMatrix attention_matrix(const FeatureMap& left, const FeatureMap& right) {
  if (left.rows() != right.rows()) throw DimensionError("attention_matrix: unit dimensions differ");
  if (left.cols() != right.cols()) throw DimensionError("attention_matrix: maps must be padded to equal width");
  AttentionMatrix a(left.cols(), right.cols());
  for (std::size_t i = 0; i < left.cols(); ++i)
    for (std::size_t j = 0; j < right.cols(); ++j) a(i, j) = 1.0 / (1.0 + column_distance(left, i, right, j));
  return a;
}

void attention_matrix_backward(const FeatureMap& left, const FeatureMap& right, const AttentionMatrix& a,
                               const Matrix& d_a, Matrix* d_left, Matrix* d_right) {
  const std::size_t d = left.rows();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double g = d_a(i, j);
      if (g == 0.0) continue;
      const double score = a(i, j);
      const double dist = column_distance(left, i, right, j);
      if (dist == 0.0) continue;
      // dA/d(dist) = -A^2, d(dist)/d(left_i) = (left_i - right_j) / dist.
      const double coef = -g * score * score / dist;
      for (std::size_t r = 0; r < d; ++r) {
        const double diff = left(r, i) - right(r, j);
        if (d_left) (*d_left)(r, i) += coef * diff;
        if (d_right) (*d_right)(r, j) -= coef * diff;
      }
    }
  }
}

std::pair<FeatureMap, FeatureMap> abcnn1_maps(const AttentionMatrix& a, const Matrix& w0, const Matrix& w1) {
  if (w0.cols() != a.cols() || w1.cols() != a.rows() || a.rows() != a.cols()) {
    throw DimensionError("abcnn1_maps: transform width must equal the attention matrix side");
  }
  return {matmul(w0, a.transpose()), matmul(w1, a)};
}

AttentionWeights abcnn2_weights(const AttentionMatrix& a) {
  AttentionWeights out{Vector(a.rows(), 0.0), Vector(a.cols(), 0.0)};
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      out.left[i] += a(i, j);
      out.right[j] += a(i, j);
    }
  }
  return out;
}

FeatureMap attention_pool(const FeatureMap& conv_output, std::span<const double> weights, std::size_t w) {
  const std::size_t c = conv_output.cols();
  if (weights.size() != c) throw DimensionError("attention_pool: one weight per column required");
  if (w == 0 || c < w) throw DimensionError("attention_pool: width smaller than window");
  FeatureMap out(conv_output.rows(), c - w + 1);
  for (std::size_t r = 0; r < conv_output.rows(); ++r) {
    for (std::size_t j = 0; j + w <= c; ++j) {
      double s = 0.0;
      for (std::size_t k = j; k < j + w; ++k) s += weights[k] * conv_output(r, k);
      out(r, j) = s;
    }
  }
  return out;
}

void attention_pool_backward(const FeatureMap& conv_output, std::span<const double> weights, std::size_t w,
                             const Matrix& d_output, Matrix& d_conv_output, std::span<double> d_weights) {
  for (std::size_t r = 0; r < d_output.rows(); ++r) {
    for (std::size_t j = 0; j < d_output.cols(); ++j) {
      const double g = d_output(r, j);
      if (g == 0.0) continue;
      for (std::size_t k = j; k < j + w; ++k) {
        d_conv_output(r, k) += g * weights[k];
        if (!d_weights.empty()) d_weights[k] += g * conv_output(r, k);
      }
    }
  }
}

Vector attention_all_pool(const FeatureMap& conv_output, std::span<const double> weights, std::size_t count) {
  if (count == 0) count = conv_output.cols();
  if (weights.size() != conv_output.cols() || count > conv_output.cols()) {
    throw DimensionError("attention_all_pool: weight/column mismatch");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < count; ++k) total += weights[k];
  if (total <= 0.0) throw ArgumentError("attention_all_pool: weights must have a positive sum");
  Vector out(conv_output.rows(), 0.0);
  for (std::size_t r = 0; r < conv_output.rows(); ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < count; ++k) s += weights[k] * conv_output(r, k);
    out[r] = s / total;
  }
  return out;
}

void attention_all_pool_backward(const FeatureMap& conv_output, std::span<const double> weights,
                                 std::size_t count, std::span<const double> d_output, Matrix& d_conv_output,
                                 std::span<double> d_weights) {
  if (count == 0) count = conv_output.cols();
  double total = 0.0;
  for (std::size_t k = 0; k < count; ++k) total += weights[k];
  const Vector pooled = attention_all_pool(conv_output, weights, count);
  // d(pooled)/d(a_k) = (Fc[:, k] - pooled) / total.
  const double rep_dot = dot(pooled, d_output);
  for (std::size_t k = 0; k < count; ++k) {
    double col_dot = 0.0;
    for (std::size_t r = 0; r < conv_output.rows(); ++r) {
      d_conv_output(r, k) += d_output[r] * weights[k] / total;
      col_dot += d_output[r] * conv_output(r, k);
    }
    if (!d_weights.empty()) d_weights[k] += (col_dot - rep_dot) / total;
  }
}

Matrix dynamic_pool(const Matrix& a, std::size_t g) {
  if (g == 0 || g > a.rows() || g > a.cols()) {
    throw ArgumentError("dynamic_pool: grid size " + std::to_string(g) + " exceeds matrix side");
  }
  const auto rb = chunk_bounds(a.rows(), g);
  const auto cb = chunk_bounds(a.cols(), g);
  Matrix grid(g, g);
  for (std::size_t gi = 0; gi < g; ++gi) {
    for (std::size_t gj = 0; gj < g; ++gj) {
      double s = 0.0;
      for (std::size_t i = rb[gi]; i < rb[gi + 1]; ++i)
        for (std::size_t j = cb[gj]; j < cb[gj + 1]; ++j) s += a(i, j);
      grid(gi, gj) = s / static_cast<double>((rb[gi + 1] - rb[gi]) * (cb[gj + 1] - cb[gj]));
    }
  }
  return grid;
}

void dynamic_pool_backward(const Matrix& a, std::size_t g, const Matrix& d_grid, Matrix& d_a) {
  const auto rb = chunk_bounds(a.rows(), g);
  const auto cb = chunk_bounds(a.cols(), g);
  for (std::size_t gi = 0; gi < g; ++gi) {
    for (std::size_t gj = 0; gj < g; ++gj) {
      const double share =
          d_grid(gi, gj) / static_cast<double>((rb[gi + 1] - rb[gi]) * (cb[gj + 1] - cb[gj]));
      for (std::size_t i = rb[gi]; i < rb[gi + 1]; ++i)
        for (std::size_t j = cb[gj]; j < cb[gj + 1]; ++j) d_a(i, j) += share;
    }
  }
}

}  // namespace abcnn
