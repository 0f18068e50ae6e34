#pragma once

#include <cstddef>

#include "abcnn/core_math.hpp"

namespace abcnn {

// A feature map is a d x c Matrix whose columns are unit representations.
using FeatureMap = Matrix;

// Convolution weights for one block. `weights` is d1 x (width * input_rows),
// where input_rows = d_in * channels; column o * input_rows + r multiplies row
// r of the input column at offset o inside the window.
struct ConvParams {
  std::size_t width = 0;
  Matrix weights;
  Matrix bias;  // d1 x 1

  bool operator==(const ConvParams& other) const = default;
};

// Wide convolution: output column t (0 <= t < s + w - 1) is
// tanh(W * c_t + b) with c_t the concatenated input columns t-w+1 .. t and
// out-of-range columns read as zero. Multi-channel input is passed already
// stacked with stack_rows, so the filter spans all channels jointly.
FeatureMap wide_convolution(const FeatureMap& input, const ConvParams& params);

// Accumulates dW, db and (if non-null) d(input) given dL/d(output). `output`
// must be the forward result for `input`.
void wide_convolution_backward(const FeatureMap& input, const ConvParams& params, const FeatureMap& output,
                               const Matrix& d_output, Matrix& d_weights, Matrix& d_bias, Matrix* d_input);

// Column j of the result is the mean of input columns j .. j+w-1.
FeatureMap avg_pool_w(const FeatureMap& input, std::size_t w);
void avg_pool_w_backward(const Matrix& d_output, std::size_t w, Matrix& d_input);

// Mean of the first `count` columns (all columns by default).
Vector all_ap(const FeatureMap& input, std::size_t count = 0);
void all_ap_backward(std::span<const double> d_output, std::size_t count, Matrix& d_input);

}  // namespace abcnn
