#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "abcnn/attention.hpp"
#include "abcnn/conv_pool.hpp"
#include "abcnn/core_math.hpp"
#include "abcnn/text_data.hpp"

namespace abcnn {

enum class Variant { kBcnn, kAbcnn1, kAbcnn2, kAbcnn3 };

std::string_view variant_name(Variant v);  // "BCNN", "ABCNN-1", ...
Variant parse_variant(std::string_view name);
// ABCNN-1 and ABCNN-3 attend over convolution inputs.
bool has_input_attention(Variant v);
// ABCNN-2 and ABCNN-3 reweight pooling with attention over convolution outputs.
bool has_output_attention(Variant v);

struct ModelConfig {
  Variant variant = Variant::kBcnn;
  Task task = Task::kAnswerSelection;
  std::size_t num_conv_layers = 1;
  std::size_t filter_width = 4;
  std::size_t hidden_dim = 50;
  std::size_t embedding_dim = 300;
  // Every sentence is truncated and zero-padded to this many columns. The
  // ABCNN-1 transforms are d x sentence_len, so it is fixed per model.
  std::size_t sentence_len = 40;
  std::size_t dynamic_pool_grid = 3;
  bool share_attention_weights = true;
  bool mask_padding = false;
  // TE: run a second copy of the network on the NONOVER view.
  bool dual_pipeline = true;
  // TE dual: both copies use one set of convolution weights.
  bool share_pipeline_weights = false;

  // Throws ArgumentError naming the offending field.
  void validate() const;

  std::size_t num_blocks() const { return num_conv_layers + 1; }
  std::size_t num_pipelines() const;
  std::size_t num_weight_stacks() const;
  std::size_t scores_per_block() const;
  std::size_t pooled_attention_width() const;
  std::size_t extras_width() const;
  std::size_t lr_input_width() const;
  std::size_t num_classes() const { return task == Task::kEntailment ? 3 : 2; }
  std::size_t num_logits() const { return task == Task::kEntailment ? 3 : 1; }
  // One name per LR-layer input, in order.
  std::vector<std::string> feature_names() const;
};

// Names of the task-specific extra features, in LR-input order.
std::vector<std::string> extra_feature_names(Task task);

struct ConvBlockParams {
  ConvParams conv;
  Matrix attn_w0;  // d_in x s, ABCNN-1/3 only
  Matrix attn_w1;  // empty when W0 and W1 are shared

  const Matrix& right_transform() const { return attn_w1.empty() ? attn_w0 : attn_w1; }
  bool operator==(const ConvBlockParams& other) const = default;
};

struct ModelParams {
  // [weight stack][conv layer]
  std::vector<std::vector<ConvBlockParams>> stacks;
  Matrix output_weights;  // num_logits x lr_input_width
  Matrix output_bias;     // num_logits x 1
};

struct TensorRef {
  std::string name;
  std::size_t stack = 0;
  // Conv layer index (0-based) for block tensors; empty for the output layer.
  std::optional<std::size_t> conv_layer;
};

// Glorot-uniform convolution and attention transforms, zero biases and a
// zero output layer.
ModelParams init_params(const ModelConfig& config, SeededRng& rng);
ModelParams zeros_like(const ModelParams& params);
void for_each_tensor(ModelParams& params, const std::function<void(const TensorRef&, Matrix&)>& fn);
void for_each_tensor(const ModelParams& params, const std::function<void(const TensorRef&, const Matrix&)>& fn);
// Throws DimensionError when shapes disagree with the config.
void check_params(const ModelParams& params, const ModelConfig& config);

// Embedded sentence pair padded to a common width.
struct EmbeddedPair {
  FeatureMap left;
  FeatureMap right;
  std::size_t left_len = 0;
  std::size_t right_len = 0;
};

EmbeddedPair embed_pair(const SentencePair& pair, const EmbeddingTable& table, const ModelConfig& config);

struct ConvBlockTrace {
  std::array<FeatureMap, 2> input;
  AttentionMatrix input_attention;  // ABCNN-1/3
  std::array<FeatureMap, 2> conv_input;
  std::array<FeatureMap, 2> conv_output;
  // Match scores between convolution output units. Drives pooling for
  // ABCNN-2/3; always computed for PI features and visualisation.
  AttentionMatrix output_attention;
  AttentionWeights weights;  // ABCNN-2/3
  std::array<FeatureMap, 2> pooled;
  std::array<Vector, 2> rep;
  std::array<std::size_t, 2> rep_units{};
};

struct PipelineTrace {
  std::array<FeatureMap, 2> input;
  std::array<std::size_t, 2> length{};
  AttentionMatrix word_attention;
  std::array<Vector, 2> word_rep;
  std::vector<ConvBlockTrace> blocks;
  Vector scores;  // num_blocks * scores_per_block

  // Sentence vector of block b (0 = initialization block).
  const Vector& rep(std::size_t block, std::size_t side) const;
};

struct ForwardTrace {
  std::vector<PipelineTrace> pipelines;
  std::vector<Matrix> pooled_attention;  // PI: one g x g grid per block
  Vector lr_input;
  Vector logits;
  Vector probabilities;  // num_classes entries
};

struct ForwardOptions {
  // Replaces ABCNN-2/3 attention weights with this constant.
  std::optional<double> attention_weight_override;
};

ForwardTrace forward(const std::vector<EmbeddedPair>& inputs, std::span<const double> extras,
                     const ModelParams& params, const ModelConfig& config, const ForwardOptions& options = {});

// TE dual network: ORIG and NONOVER pipelines feeding one output layer.
ForwardTrace te_dual_forward(const EmbeddedPair& orig, const EmbeddedPair& nonover, std::span<const double> extras,
                             const ModelParams& params, const ModelConfig& config);

// Similarity scores for one block's sentence vectors (cosine for AS,
// 1/(1+distance) for PI, both for TE).
Vector block_scores(std::span<const double> left, std::span<const double> right, Task task);

// Assembles the LR-layer input: scores of every pipeline, PI pooled
// attention grids, then the task extras.
Vector similarity_features(const ForwardTrace& trace, const ModelConfig& config, std::span<const double> extras);

// Element-wise embedding sums of both sentences, concatenated.
Vector addition_baseline(const EmbeddedPair& pair);

}  // namespace abcnn
