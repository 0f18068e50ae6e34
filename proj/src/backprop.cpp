#include "abcnn/backprop.hpp"

#include <algorithm>

#include "abcnn/errors.hpp"

namespace abcnn {

namespace {

void cosine_backward(std::span<const double> x, std::span<const double> y, double g, Vector& dx, Vector& dy) {
  const double nx = norm(x);
  const double ny = norm(y);
  if (nx == 0.0 || ny == 0.0) return;
  const double c = dot(x, y) / (nx * ny);
  for (std::size_t i = 0; i < x.size(); ++i) {
    dx[i] += g * (y[i] / (nx * ny) - c * x[i] / (nx * nx));
    dy[i] += g * (x[i] / (nx * ny) - c * y[i] / (ny * ny));
  }
}

void match_score_backward(std::span<const double> x, std::span<const double> y, double g, Vector& dx, Vector& dy) {
  const double dist = euclidean_distance(x, y);
  if (dist == 0.0) return;
  const double score = 1.0 / (1.0 + dist);
  const double coef = -g * score * score / dist;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dx[i] += coef * (x[i] - y[i]);
    dy[i] -= coef * (x[i] - y[i]);
  }
}

// dL/d(scores) for one block -> dL/d(rep) for both sides.
void scores_backward(std::span<const double> left, std::span<const double> right, Task task,
                     std::span<const double> d_scores, Vector& d_left, Vector& d_right) {
  switch (task) {
    case Task::kAnswerSelection:
      cosine_backward(left, right, d_scores[0], d_left, d_right);
      break;
    case Task::kParaphrase:
      match_score_backward(left, right, d_scores[0], d_left, d_right);
      break;
    case Task::kEntailment:
      cosine_backward(left, right, d_scores[0], d_left, d_right);
      match_score_backward(left, right, d_scores[1], d_left, d_right);
      break;
  }
}

void pipeline_backward(const PipelineTrace& t, const std::vector<ConvBlockParams>& stack,
                       std::vector<ConvBlockParams>& grad_stack, const ModelConfig& config,
                       std::span<const double> d_scores, const std::vector<Matrix>* d_pooled_attention,
                       std::size_t first_trainable, const ForwardOptions& options) {
  const std::size_t n = config.scores_per_block();
  const std::size_t w = config.filter_width;
  const std::size_t layers = t.blocks.size();

  // Gradient arriving at the pooled output of the layer being processed.
  std::array<Matrix, 2> d_pooled = {Matrix(config.hidden_dim, config.sentence_len),
                                    Matrix(config.hidden_dim, config.sentence_len)};

  for (std::size_t li = layers; li-- > first_trainable;) {
    const ConvBlockTrace& b = t.blocks[li];
    const ConvBlockParams& p = stack[li];
    ConvBlockParams& gp = grad_stack[li];

    std::array<Vector, 2> d_rep = {Vector(config.hidden_dim, 0.0), Vector(config.hidden_dim, 0.0)};
    scores_backward(b.rep[0], b.rep[1], config.task, d_scores.subspan((li + 1) * n, n), d_rep[0], d_rep[1]);

    const std::size_t conv_cols = b.conv_output[0].cols();
    std::array<Matrix, 2> d_conv = {Matrix(config.hidden_dim, conv_cols), Matrix(config.hidden_dim, conv_cols)};
    Matrix d_out_att(conv_cols, conv_cols);
    if (d_pooled_attention) {
      dynamic_pool_backward(b.output_attention, config.dynamic_pool_grid, (*d_pooled_attention)[li + 1], d_out_att);
    }

    if (has_output_attention(config.variant)) {
      const std::array<const Vector*, 2> weights = {&b.weights.left, &b.weights.right};
      std::array<Vector, 2> d_weights = {Vector(conv_cols, 0.0), Vector(conv_cols, 0.0)};
      for (std::size_t side = 0; side < 2; ++side) {
        attention_pool_backward(b.conv_output[side], *weights[side], w, d_pooled[side], d_conv[side], d_weights[side]);
        attention_all_pool_backward(b.conv_output[side], *weights[side], b.rep_units[side], d_rep[side], d_conv[side],
                                    d_weights[side]);
      }
      if (!options.attention_weight_override) {
        // left weights are row sums, right weights column sums.
        for (std::size_t i = 0; i < conv_cols; ++i)
          for (std::size_t j = 0; j < conv_cols; ++j) d_out_att(i, j) += d_weights[0][i] + d_weights[1][j];
      }
    } else {
      for (std::size_t side = 0; side < 2; ++side) {
        avg_pool_w_backward(d_pooled[side], w, d_conv[side]);
        all_ap_backward(d_rep[side], b.rep_units[side], d_conv[side]);
      }
    }
    attention_matrix_backward(b.conv_output[0], b.conv_output[1], b.output_attention, d_out_att, &d_conv[0],
                              &d_conv[1]);

    const bool need_input_grad = li > first_trainable;
    std::array<Matrix, 2> d_conv_input;
    for (std::size_t side = 0; side < 2; ++side) {
      d_conv_input[side] = Matrix(b.conv_input[side].rows(), b.conv_input[side].cols());
      wide_convolution_backward(b.conv_input[side], p.conv, b.conv_output[side], d_conv[side], gp.conv.weights,
                                gp.conv.bias, &d_conv_input[side]);
    }

    const std::size_t d_in = b.input[0].rows();
    std::array<Matrix, 2> d_input = {Matrix(d_in, config.sentence_len), Matrix(d_in, config.sentence_len)};
    for (std::size_t side = 0; side < 2; ++side) {
      for (std::size_t r = 0; r < d_in; ++r)
        for (std::size_t c = 0; c < config.sentence_len; ++c) d_input[side](r, c) = d_conv_input[side](r, c);
    }

    if (has_input_attention(config.variant)) {
      // Bottom channel: left map = W0 A^T, right map = W1 A.
      Matrix d_map0(d_in, config.sentence_len);
      Matrix d_map1(d_in, config.sentence_len);
      for (std::size_t r = 0; r < d_in; ++r) {
        for (std::size_t c = 0; c < config.sentence_len; ++c) {
          d_map0(r, c) = d_conv_input[0](d_in + r, c);
          d_map1(r, c) = d_conv_input[1](d_in + r, c);
        }
      }
      const Matrix& a = b.input_attention;
      const Matrix g_w0 = matmul(d_map0, a);
      const Matrix g_w1 = matmul(d_map1, a.transpose());
      Matrix& gw1_target = gp.attn_w1.empty() ? gp.attn_w0 : gp.attn_w1;
      for (std::size_t i = 0; i < g_w0.size(); ++i) {
        gp.attn_w0.values()[i] += g_w0.values()[i];
        gw1_target.values()[i] += g_w1.values()[i];
      }
      if (need_input_grad) {
        Matrix d_a = add(matmul(d_map0.transpose(), p.attn_w0), matmul(p.right_transform().transpose(), d_map1));
        attention_matrix_backward(b.input[0], b.input[1], a, d_a, &d_input[0], &d_input[1]);
      }
    }
    if (need_input_grad) d_pooled = std::move(d_input);
  }
}

}  // namespace

void backward(const ForwardTrace& trace, const ModelParams& params, const ModelConfig& config,
              std::span<const double> d_logits, ModelParams& grads, std::size_t first_trainable_layer,
              const ForwardOptions& options) {
  if (d_logits.size() != config.num_logits()) throw DimensionError("backward: logit gradient has wrong length");
  const Vector& x = trace.lr_input;
  Vector d_x(x.size(), 0.0);
  for (std::size_t o = 0; o < d_logits.size(); ++o) {
    const double g = d_logits[o];
    grads.output_bias(o, 0) += g;
    auto gw = grads.output_weights.row(o);
    auto pw = params.output_weights.row(o);
    for (std::size_t i = 0; i < x.size(); ++i) {
      gw[i] += g * x[i];
      d_x[i] += g * pw[i];
    }
  }

  const std::size_t per_pipeline = config.num_blocks() * config.scores_per_block();
  std::vector<Matrix> d_grids;
  if (config.task == Task::kParaphrase) {
    const std::size_t g = config.dynamic_pool_grid;
    std::size_t offset = config.num_pipelines() * per_pipeline;
    for (std::size_t b = 0; b < config.num_blocks(); ++b) {
      d_grids.emplace_back(g, g, Vector(d_x.begin() + static_cast<std::ptrdiff_t>(offset),
                                        d_x.begin() + static_cast<std::ptrdiff_t>(offset + g * g)));
      offset += g * g;
    }
  }

  for (std::size_t p = 0; p < trace.pipelines.size(); ++p) {
    const std::size_t stack = std::min(p, params.stacks.size() - 1);
    const std::span<const double> d_scores(d_x.data() + p * per_pipeline, per_pipeline);
    pipeline_backward(trace.pipelines[p], params.stacks[stack], grads.stacks[stack], config, d_scores,
                      p == 0 && !d_grids.empty() ? &d_grids : nullptr, first_trainable_layer, options);
  }
}

}  // namespace abcnn
