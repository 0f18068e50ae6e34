#include "abcnn/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "abcnn/errors.hpp"

namespace abcnn {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kBcnn: return "BCNN";
    case Variant::kAbcnn1: return "ABCNN-1";
    case Variant::kAbcnn2: return "ABCNN-2";
    case Variant::kAbcnn3: return "ABCNN-3";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  std::string key;
  for (char c : name) {
    if (c == '-' || c == '_') continue;
    key.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  if (key == "BCNN") return Variant::kBcnn;
  if (key == "ABCNN1") return Variant::kAbcnn1;
  if (key == "ABCNN2") return Variant::kAbcnn2;
  if (key == "ABCNN3") return Variant::kAbcnn3;
  throw ArgumentError("unknown variant '" + std::string(name) + "'");
}

bool has_input_attention(Variant v) { return v == Variant::kAbcnn1 || v == Variant::kAbcnn3; }
bool has_output_attention(Variant v) { return v == Variant::kAbcnn2 || v == Variant::kAbcnn3; }

void ModelConfig::validate() const {
  if (num_conv_layers < 1 || num_conv_layers > 2) throw ArgumentError("num_conv_layers must be 1 or 2");
  if (filter_width < 1) throw ArgumentError("filter_width must be positive");
  if (hidden_dim < 1) throw ArgumentError("hidden_dim must be positive");
  if (embedding_dim < 1) throw ArgumentError("embedding_dim must be positive");
  if (sentence_len < 1) throw ArgumentError("sentence_len must be positive");
  if (task == Task::kParaphrase) {
    if (dynamic_pool_grid < 1 || dynamic_pool_grid > sentence_len) {
      throw ArgumentError("dynamic_pool_grid must be between 1 and sentence_len");
    }
  }
}

std::size_t ModelConfig::num_pipelines() const {
  return task == Task::kEntailment && dual_pipeline ? 2 : 1;
}

std::size_t ModelConfig::num_weight_stacks() const {
  return num_pipelines() == 2 && !share_pipeline_weights ? 2 : 1;
}

std::size_t ModelConfig::scores_per_block() const { return task == Task::kEntailment ? 2 : 1; }

std::size_t ModelConfig::pooled_attention_width() const {
  return task == Task::kParaphrase ? num_blocks() * dynamic_pool_grid * dynamic_pool_grid : 0;
}

std::size_t ModelConfig::extras_width() const {
  switch (task) {
    case Task::kAnswerSelection: return 4;
    case Task::kParaphrase: return 20;
    case Task::kEntailment: return 24;
  }
  return 0;
}

std::size_t ModelConfig::lr_input_width() const {
  return num_pipelines() * num_blocks() * scores_per_block() + pooled_attention_width() + extras_width();
}

std::vector<std::string> extra_feature_names(Task task) {
  std::vector<std::string> names;
  if (task == Task::kAnswerSelection) return {"len0", "len1", "wordcnt", "wgtwordcnt"};
  for (int i = 1; i <= 15; ++i) names.push_back("mt" + std::to_string(i));
  if (task == Task::kParaphrase) {
    for (const char* n : {"len0", "len1", "rouge1", "rouge2", "rouge_su4"}) names.emplace_back(n);
  } else {
    for (const char* n : {"neg", "syn", "hyp0", "hyp1", "ant", "len0o", "len1o", "len0n", "len1n"})
      names.emplace_back(n);
  }
  return names;
}

std::vector<std::string> ModelConfig::feature_names() const {
  std::vector<std::string> names;
  const char* kinds_te[] = {"cos", "euc"};
  for (std::size_t p = 0; p < num_pipelines(); ++p) {
    for (std::size_t b = 0; b < num_blocks(); ++b) {
      const std::string prefix = (num_pipelines() > 1 ? (p == 0 ? "orig." : "nonover.") : "") +
                                 std::string("b") + std::to_string(b + 1) + ".";
      if (task == Task::kEntailment) {
        for (const char* k : kinds_te) names.push_back(prefix + k);
      } else {
        names.push_back(prefix + (task == Task::kAnswerSelection ? "cos" : "euc"));
      }
    }
  }
  if (task == Task::kParaphrase) {
    for (std::size_t b = 0; b < num_blocks(); ++b)
      for (std::size_t i = 0; i < dynamic_pool_grid; ++i)
        for (std::size_t j = 0; j < dynamic_pool_grid; ++j)
          names.push_back("b" + std::to_string(b + 1) + ".pool" + std::to_string(i) + std::to_string(j));
  }
  for (auto& n : extra_feature_names(task)) names.push_back(std::move(n));
  return names;
}

namespace {

Matrix glorot(std::size_t rows, std::size_t cols, std::size_t fan_in, std::size_t fan_out, SeededRng& rng) {
  const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-r, r);
  return m;
}

std::size_t layer_input_dim(const ModelConfig& c, std::size_t layer) {
  return layer == 0 ? c.embedding_dim : c.hidden_dim;
}

std::size_t channels(const ModelConfig& c) { return has_input_attention(c.variant) ? 2 : 1; }

}  // namespace

ModelParams init_params(const ModelConfig& config, SeededRng& rng) {
  config.validate();
  ModelParams p;
  p.stacks.resize(config.num_weight_stacks());
  for (auto& stack : p.stacks) {
    for (std::size_t l = 0; l < config.num_conv_layers; ++l) {
      const std::size_t d_in = layer_input_dim(config, l);
      const std::size_t fan_in = config.filter_width * d_in * channels(config);
      ConvBlockParams block;
      block.conv.width = config.filter_width;
      block.conv.weights = glorot(config.hidden_dim, fan_in, fan_in, config.hidden_dim, rng);
      block.conv.bias = Matrix(config.hidden_dim, 1);
      if (has_input_attention(config.variant)) {
        block.attn_w0 = glorot(d_in, config.sentence_len, config.sentence_len, d_in, rng);
        if (!config.share_attention_weights) {
          block.attn_w1 = glorot(d_in, config.sentence_len, config.sentence_len, d_in, rng);
        }
      }
      stack.push_back(std::move(block));
    }
  }
  p.output_weights = Matrix(config.num_logits(), config.lr_input_width());
  p.output_bias = Matrix(config.num_logits(), 1);
  return p;
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams z = params;
  for_each_tensor(z, [](const TensorRef&, Matrix& m) { m.fill(0.0); });
  return z;
}

void for_each_tensor(ModelParams& params, const std::function<void(const TensorRef&, Matrix&)>& fn) {
  for (std::size_t s = 0; s < params.stacks.size(); ++s) {
    for (std::size_t l = 0; l < params.stacks[s].size(); ++l) {
      auto& b = params.stacks[s][l];
      const std::string prefix = "stack" + std::to_string(s) + ".conv" + std::to_string(l + 1) + ".";
      fn({prefix + "weights", s, l}, b.conv.weights);
      fn({prefix + "bias", s, l}, b.conv.bias);
      if (!b.attn_w0.empty()) fn({prefix + "attn_w0", s, l}, b.attn_w0);
      if (!b.attn_w1.empty()) fn({prefix + "attn_w1", s, l}, b.attn_w1);
    }
  }
  fn({"output.weights", 0, std::nullopt}, params.output_weights);
  fn({"output.bias", 0, std::nullopt}, params.output_bias);
}

void for_each_tensor(const ModelParams& params, const std::function<void(const TensorRef&, const Matrix&)>& fn) {
  for_each_tensor(const_cast<ModelParams&>(params), [&](const TensorRef& ref, Matrix& m) { fn(ref, m); });
}

void check_params(const ModelParams& params, const ModelConfig& config) {
  auto expect = [](const Matrix& m, std::size_t r, std::size_t c, const std::string& what) {
    if (m.rows() != r || m.cols() != c) {
      throw DimensionError(what + ": expected " + std::to_string(r) + "x" + std::to_string(c) + ", got " +
                           std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
  };
  if (params.stacks.size() != config.num_weight_stacks()) throw DimensionError("wrong number of weight stacks");
  for (const auto& stack : params.stacks) {
    if (stack.size() != config.num_conv_layers) throw DimensionError("wrong number of conv layers");
    for (std::size_t l = 0; l < stack.size(); ++l) {
      const auto& b = stack[l];
      const std::size_t d_in = layer_input_dim(config, l);
      if (b.conv.width != config.filter_width) throw DimensionError("filter width mismatch");
      expect(b.conv.weights, config.hidden_dim, config.filter_width * d_in * channels(config), "conv weights");
      expect(b.conv.bias, config.hidden_dim, 1, "conv bias");
      if (has_input_attention(config.variant)) {
        expect(b.attn_w0, d_in, config.sentence_len, "attention transform");
        if (config.share_attention_weights != b.attn_w1.empty()) {
          throw DimensionError("attention transform sharing does not match config");
        }
        if (!b.attn_w1.empty()) expect(b.attn_w1, d_in, config.sentence_len, "attention transform");
      }
    }
  }
  expect(params.output_weights, config.num_logits(), config.lr_input_width(), "output weights");
  expect(params.output_bias, config.num_logits(), 1, "output bias");
}

EmbeddedPair embed_pair(const SentencePair& pair, const EmbeddingTable& table, const ModelConfig& config) {
  if (table.dim() != config.embedding_dim) throw DimensionError("embedding table dimension differs from model");
  EmbeddedPair e;
  e.left = embed_sentence(pair.s0, table, config.sentence_len, config.sentence_len);
  e.right = embed_sentence(pair.s1, table, config.sentence_len, config.sentence_len);
  e.left_len = std::min(pair.s0.size(), config.sentence_len);
  e.right_len = std::min(pair.s1.size(), config.sentence_len);
  return e;
}

const Vector& PipelineTrace::rep(std::size_t block, std::size_t side) const {
  return block == 0 ? word_rep[side] : blocks[block - 1].rep[side];
}

Vector block_scores(std::span<const double> left, std::span<const double> right, Task task) {
  switch (task) {
    case Task::kAnswerSelection: return {cosine_similarity(left, right)};
    case Task::kParaphrase: return {match_score(left, right)};
    case Task::kEntailment: return {cosine_similarity(left, right), match_score(left, right)};
  }
  return {};
}

namespace {

PipelineTrace run_pipeline(const EmbeddedPair& in, const std::vector<ConvBlockParams>& stack,
                           const ModelConfig& config, const ForwardOptions& options) {
  const std::size_t s = config.sentence_len;
  const std::size_t w = config.filter_width;
  if (in.left.cols() != s || in.right.cols() != s) {
    throw DimensionError("pair must be padded to sentence_len=" + std::to_string(s));
  }
  if (in.left.rows() != config.embedding_dim || in.right.rows() != config.embedding_dim) {
    throw DimensionError("pair embedding dimension differs from model");
  }
  if (in.left_len < 1 || in.left_len > s || in.right_len < 1 || in.right_len > s) {
    throw DimensionError("pair lengths must lie in [1, sentence_len]");
  }

  PipelineTrace t;
  t.input = {in.left, in.right};
  t.length = {in.left_len, in.right_len};
  t.word_attention = attention_matrix(in.left, in.right);
  for (std::size_t side = 0; side < 2; ++side) {
    t.word_rep[side] = all_ap(t.input[side], config.mask_padding ? t.length[side] : 0);
  }

  const std::array<FeatureMap, 2>* current = &t.input;
  for (std::size_t l = 0; l < stack.size(); ++l) {
    const ConvBlockParams& p = stack[l];
    ConvBlockTrace b;
    b.input = *current;
    if (has_input_attention(config.variant)) {
      b.input_attention = attention_matrix(b.input[0], b.input[1]);
      auto [left_map, right_map] = abcnn1_maps(b.input_attention, p.attn_w0, p.right_transform());
      b.conv_input = {stack_rows(b.input[0], left_map), stack_rows(b.input[1], right_map)};
    } else {
      b.conv_input = b.input;
    }
    for (std::size_t side = 0; side < 2; ++side) b.conv_output[side] = wide_convolution(b.conv_input[side], p.conv);
    b.output_attention = attention_matrix(b.conv_output[0], b.conv_output[1]);

    const std::size_t conv_cols = s + w - 1;
    for (std::size_t side = 0; side < 2; ++side) {
      b.rep_units[side] = config.mask_padding ? std::min(t.length[side] + (l + 1) * (w - 1), conv_cols) : conv_cols;
    }
    if (has_output_attention(config.variant)) {
      if (options.attention_weight_override) {
        b.weights.left.assign(conv_cols, *options.attention_weight_override);
        b.weights.right.assign(conv_cols, *options.attention_weight_override);
      } else {
        b.weights = abcnn2_weights(b.output_attention);
      }
      const std::array<const Vector*, 2> weights = {&b.weights.left, &b.weights.right};
      for (std::size_t side = 0; side < 2; ++side) {
        b.pooled[side] = attention_pool(b.conv_output[side], *weights[side], w);
        b.rep[side] = attention_all_pool(b.conv_output[side], *weights[side], b.rep_units[side]);
      }
    } else {
      for (std::size_t side = 0; side < 2; ++side) {
        b.pooled[side] = avg_pool_w(b.conv_output[side], w);
        b.rep[side] = all_ap(b.conv_output[side], b.rep_units[side]);
      }
    }
    t.blocks.push_back(std::move(b));
    current = &t.blocks.back().pooled;
  }

  for (std::size_t block = 0; block < config.num_blocks(); ++block) {
    const Vector sc = block_scores(t.rep(block, 0), t.rep(block, 1), config.task);
    t.scores.insert(t.scores.end(), sc.begin(), sc.end());
  }
  return t;
}

}  // namespace

Vector similarity_features(const ForwardTrace& trace, const ModelConfig& config, std::span<const double> extras) {
  if (extras.size() != config.extras_width()) {
    throw ArgumentError("expected " + std::to_string(config.extras_width()) + " extra features for task " +
                        std::string(task_name(config.task)) + ", got " + std::to_string(extras.size()));
  }
  Vector out;
  out.reserve(config.lr_input_width());
  for (const auto& p : trace.pipelines) out.insert(out.end(), p.scores.begin(), p.scores.end());
  for (const auto& grid : trace.pooled_attention) out.insert(out.end(), grid.values().begin(), grid.values().end());
  out.insert(out.end(), extras.begin(), extras.end());
  return out;
}

ForwardTrace forward(const std::vector<EmbeddedPair>& inputs, std::span<const double> extras,
                     const ModelParams& params, const ModelConfig& config, const ForwardOptions& options) {
  if (inputs.size() != config.num_pipelines()) {
    throw DimensionError("expected " + std::to_string(config.num_pipelines()) + " input views, got " +
                         std::to_string(inputs.size()));
  }
  check_params(params, config);
  ForwardTrace trace;
  for (std::size_t p = 0; p < inputs.size(); ++p) {
    const auto& stack = params.stacks[std::min(p, params.stacks.size() - 1)];
    trace.pipelines.push_back(run_pipeline(inputs[p], stack, config, options));
  }
  if (config.task == Task::kParaphrase) {
    const PipelineTrace& pt = trace.pipelines.front();
    trace.pooled_attention.push_back(dynamic_pool(pt.word_attention, config.dynamic_pool_grid));
    for (const auto& b : pt.blocks) trace.pooled_attention.push_back(dynamic_pool(b.output_attention, config.dynamic_pool_grid));
  }
  trace.lr_input = similarity_features(trace, config, extras);

  const std::size_t n_logits = config.num_logits();
  trace.logits.assign(n_logits, 0.0);
  for (std::size_t o = 0; o < n_logits; ++o) {
    trace.logits[o] = params.output_bias(o, 0) + dot(params.output_weights.row(o), trace.lr_input);
  }
  if (n_logits == 1) {
    const double z = trace.logits[0];
    const double p1 = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    trace.probabilities = {1.0 - p1, p1};
  } else {
    const double m = *std::max_element(trace.logits.begin(), trace.logits.end());
    double total = 0.0;
    trace.probabilities.resize(n_logits);
    for (std::size_t o = 0; o < n_logits; ++o) total += trace.probabilities[o] = std::exp(trace.logits[o] - m);
    for (double& v : trace.probabilities) v /= total;
  }
  return trace;
}

ForwardTrace te_dual_forward(const EmbeddedPair& orig, const EmbeddedPair& nonover, std::span<const double> extras,
                             const ModelParams& params, const ModelConfig& config) {
  if (config.task != Task::kEntailment || !config.dual_pipeline) {
    throw ArgumentError("te_dual_forward requires a dual-pipeline TE config");
  }
  if (orig.left.rows() != nonover.left.rows() || orig.left.cols() != nonover.left.cols()) {
    throw DimensionError("ORIG and NONOVER inputs must share embedding dimension and width");
  }
  return forward({orig, nonover}, extras, params, config);
}

Vector addition_baseline(const EmbeddedPair& pair) {
  Vector out;
  out.reserve(pair.left.rows() + pair.right.rows());
  for (const FeatureMap* m : {&pair.left, &pair.right}) {
    for (std::size_t r = 0; r < m->rows(); ++r) {
      double s = 0.0;
      for (double v : m->row(r)) s += v;
      out.push_back(s);
    }
  }
  return out;
}

}  // namespace abcnn
