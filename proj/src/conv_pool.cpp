#include "abcnn/conv_pool.hpp"

#include <cmath>
#include <string>

#include "abcnn/errors.hpp"

namespace abcnn {

namespace {

void check_conv_shapes(const FeatureMap& input, const ConvParams& p) {
  if (p.width == 0) throw DimensionError("convolution width must be positive");
  if (input.cols() == 0) throw DimensionError("convolution input has no columns");
  if (p.weights.cols() != p.width * input.rows()) {
    throw DimensionError("convolution expects " + std::to_string(p.weights.cols() / p.width) +
                         " input rows, got " + std::to_string(input.rows()));
  }
  if (p.bias.rows() != p.weights.rows() || p.bias.cols() != 1) {
    throw DimensionError("convolution bias shape mismatch");
  }
}

}  // namespace

FeatureMap wide_convolution(const FeatureMap& input, const ConvParams& params) {
  check_conv_shapes(input, params);
  const std::size_t w = params.width;
  const std::size_t rows_in = input.rows();
  const std::size_t s = input.cols();
  const std::size_t out_cols = s + w - 1;
  const std::size_t d1 = params.weights.rows();
  FeatureMap out(d1, out_cols);
  for (std::size_t t = 0; t < out_cols; ++t) {
    for (std::size_t f = 0; f < d1; ++f) {
      double z = params.bias(f, 0);
      auto wrow = params.weights.row(f);
      for (std::size_t o = 0; o < w; ++o) {
        // Input position t - w + 1 + o; skip the zero padding.
        const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t + o) - static_cast<std::ptrdiff_t>(w - 1);
        if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(s)) continue;
        const std::size_t base = o * rows_in;
        for (std::size_t r = 0; r < rows_in; ++r) z += wrow[base + r] * input(r, static_cast<std::size_t>(pos));
      }
      out(f, t) = std::tanh(z);
    }
  }
  return out;
}

void wide_convolution_backward(const FeatureMap& input, const ConvParams& params, const FeatureMap& output,
                               const Matrix& d_output, Matrix& d_weights, Matrix& d_bias, Matrix* d_input) {
  check_conv_shapes(input, params);
  const std::size_t w = params.width;
  const std::size_t rows_in = input.rows();
  const std::size_t s = input.cols();
  const std::size_t d1 = params.weights.rows();
  for (std::size_t t = 0; t < output.cols(); ++t) {
    for (std::size_t f = 0; f < d1; ++f) {
      const double y = output(f, t);
      const double dz = d_output(f, t) * (1.0 - y * y);
      if (dz == 0.0) continue;
      d_bias(f, 0) += dz;
      auto wrow = params.weights.row(f);
      auto dwrow = d_weights.row(f);
      for (std::size_t o = 0; o < w; ++o) {
        const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t + o) - static_cast<std::ptrdiff_t>(w - 1);
        if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(s)) continue;
        const auto col = static_cast<std::size_t>(pos);
        const std::size_t base = o * rows_in;
        for (std::size_t r = 0; r < rows_in; ++r) {
          dwrow[base + r] += dz * input(r, col);
          if (d_input) (*d_input)(r, col) += dz * wrow[base + r];
        }
      }
    }
  }
}

FeatureMap avg_pool_w(const FeatureMap& input, std::size_t w) {
  if (w == 0 || input.cols() < w) {
    throw DimensionError("avg_pool_w: width " + std::to_string(input.cols()) + " smaller than window " +
                         std::to_string(w));
  }
  const std::size_t out_cols = input.cols() - w + 1;
  FeatureMap out(input.rows(), out_cols);
  for (std::size_t r = 0; r < input.rows(); ++r) {
    for (std::size_t j = 0; j < out_cols; ++j) {
      double s = 0.0;
      for (std::size_t k = j; k < j + w; ++k) s += input(r, k);
      out(r, j) = s / static_cast<double>(w);
    }
  }
  return out;
}

void avg_pool_w_backward(const Matrix& d_output, std::size_t w, Matrix& d_input) {
  const double inv = 1.0 / static_cast<double>(w);
  for (std::size_t r = 0; r < d_output.rows(); ++r) {
    for (std::size_t j = 0; j < d_output.cols(); ++j) {
      const double g = d_output(r, j) * inv;
      for (std::size_t k = j; k < j + w; ++k) d_input(r, k) += g;
    }
  }
}

Vector all_ap(const FeatureMap& input, std::size_t count) {
  if (count == 0) count = input.cols();
  if (count == 0 || count > input.cols()) throw DimensionError("all_ap: invalid column count");
  Vector out(input.rows(), 0.0);
  for (std::size_t r = 0; r < input.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < count; ++c) s += input(r, c);
    out[r] = s / static_cast<double>(count);
  }
  return out;
}

void all_ap_backward(std::span<const double> d_output, std::size_t count, Matrix& d_input) {
  if (count == 0) count = d_input.cols();
  const double inv = 1.0 / static_cast<double>(count);
  for (std::size_t r = 0; r < d_input.rows(); ++r) {
    for (std::size_t c = 0; c < count; ++c) d_input(r, c) += d_output[r] * inv;
  }
}

}  // namespace abcnn
