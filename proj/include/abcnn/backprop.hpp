#pragma once

#include <cstddef>
#include <span>

#include "abcnn/network.hpp"

namespace abcnn {

// Propagates dL/d(logits) through a recorded forward pass and accumulates
// parameter gradients into `grads` (same shape as `params`). Conv layers
// below `first_trainable_layer` are treated as constants: their gradients
// stay untouched and backpropagation stops at them.
void backward(const ForwardTrace& trace, const ModelParams& params, const ModelConfig& config,
              std::span<const double> d_logits, ModelParams& grads, std::size_t first_trainable_layer = 0,
              const ForwardOptions& options = {});

}  // namespace abcnn
