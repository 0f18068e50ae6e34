#include "abcnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "abcnn/backprop.hpp"
#include "abcnn/classifier_eval.hpp"
#include "abcnn/errors.hpp"

namespace abcnn {

EncodedExample encode_example(const Example& example, const EmbeddingTable& table, const ModelConfig& config) {
  if (example.views.size() != config.num_pipelines()) {
    throw DimensionError("example has " + std::to_string(example.views.size()) + " views, model expects " +
                         std::to_string(config.num_pipelines()));
  }
  EncodedExample e;
  for (const auto& v : example.views) e.inputs.push_back(embed_pair(v, table, config));
  e.extras = example.extras;
  e.label = example.label;
  return e;
}

namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

void check_label(int label, const ModelConfig& config) {
  if (label < 0 || static_cast<std::size_t>(label) >= config.num_classes()) {
    throw ArgumentError("label " + std::to_string(label) + " out of range for task");
  }
}

// dL/d(logits) for one example.
Vector logit_gradient(const ForwardTrace& trace, int label, const ModelConfig& config) {
  if (config.num_logits() == 1) return {trace.probabilities[1] - static_cast<double>(label)};
  Vector g = trace.probabilities;
  g[static_cast<std::size_t>(label)] -= 1.0;
  return g;
}

bool is_trainable(const TensorRef& ref, std::size_t first_trainable_layer) {
  return !ref.conv_layer || *ref.conv_layer >= first_trainable_layer;
}

}  // namespace

double example_loss(const ForwardTrace& trace, int label, const ModelConfig& config) {
  check_label(label, config);
  if (config.num_logits() == 1) {
    const double z = trace.logits[0];
    return softplus(z) - static_cast<double>(label) * z;
  }
  const double m = *std::max_element(trace.logits.begin(), trace.logits.end());
  double total = 0.0;
  for (double z : trace.logits) total += std::exp(z - m);
  return m + std::log(total) - trace.logits[static_cast<std::size_t>(label)];
}

double loss_and_gradients(std::span<const EncodedExample> batch, const ModelParams& params,
                          const ModelConfig& config, double l2, ModelParams* grads,
                          std::size_t first_trainable_layer, const ForwardOptions& options) {
  if (batch.empty()) throw ArgumentError("loss_and_gradients: empty batch");
  if (grads) *grads = zeros_like(params);
  const double scale = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const auto& ex : batch) {
    const ForwardTrace trace = forward(ex.inputs, ex.extras, params, config, options);
    loss += example_loss(trace, ex.label, config);
    if (grads) {
      Vector d_logits = logit_gradient(trace, ex.label, config);
      for (double& g : d_logits) g *= scale;
      backward(trace, params, config, d_logits, *grads, first_trainable_layer, options);
    }
  }
  loss *= scale;

  double penalty = 0.0;
  for_each_tensor(params, [&](const TensorRef& ref, const Matrix& m) {
    if (!is_trainable(ref, first_trainable_layer)) return;
    for (double v : m.values()) penalty += v * v;
  });
  loss += l2 * penalty;
  if (grads && l2 != 0.0) {
    ModelParams& g = *grads;
    // Walk params and grads in lockstep; both enumerate tensors in the same order.
    std::vector<const Matrix*> p_tensors;
    for_each_tensor(params, [&](const TensorRef&, const Matrix& m) { p_tensors.push_back(&m); });
    std::size_t idx = 0;
    for_each_tensor(g, [&](const TensorRef& ref, Matrix& m) {
      const Matrix& p = *p_tensors[idx++];
      if (!is_trainable(ref, first_trainable_layer)) return;
      auto gv = m.values();
      auto pv = p.values();
      for (std::size_t i = 0; i < gv.size(); ++i) gv[i] += 2.0 * l2 * pv[i];
    });
  }
  if (!std::isfinite(loss)) throw NumericError("non-finite training loss");
  return loss;
}

AdagradState make_adagrad_state(const ModelParams& params, double epsilon) {
  return AdagradState{zeros_like(params), epsilon};
}

void adagrad_step(ModelParams& params, const ModelParams& grads, AdagradState& state, double learning_rate) {
  std::vector<const Matrix*> g_tensors;
  std::vector<Matrix*> acc_tensors;
  for_each_tensor(grads, [&](const TensorRef&, const Matrix& m) { g_tensors.push_back(&m); });
  for_each_tensor(state.accumulated, [&](const TensorRef&, Matrix& m) { acc_tensors.push_back(&m); });
  std::size_t idx = 0;
  for_each_tensor(params, [&](const TensorRef& ref, Matrix& m) {
    if (idx >= g_tensors.size() || g_tensors[idx]->size() != m.size() || acc_tensors[idx]->size() != m.size()) {
      throw DimensionError("adagrad_step: shape mismatch at " + ref.name);
    }
    auto pv = m.values();
    auto gv = g_tensors[idx]->values();
    auto av = acc_tensors[idx]->values();
    for (std::size_t i = 0; i < pv.size(); ++i) {
      const double g = gv[i];
      if (g == 0.0) continue;
      av[i] += g * g;
      pv[i] -= learning_rate * g / (std::sqrt(av[i]) + state.epsilon);
    }
    ++idx;
  });
  if (idx != g_tensors.size()) throw DimensionError("adagrad_step: tensor count mismatch");
}

Matrix predict_probabilities(std::span<const Example> examples, const ModelParams& params,
                             const ModelConfig& config, const EmbeddingTable& table) {
  Matrix out(examples.size(), config.num_classes());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const EncodedExample e = encode_example(examples[i], table, config);
    const ForwardTrace t = forward(e.inputs, e.extras, params, config);
    for (std::size_t c = 0; c < config.num_classes(); ++c) out(i, c) = t.probabilities[c];
  }
  return out;
}

Matrix extract_lr_inputs(std::span<const Example> examples, const ModelParams& params, const ModelConfig& config,
                         const EmbeddingTable& table) {
  Matrix out(examples.size(), config.lr_input_width());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const EncodedExample e = encode_example(examples[i], table, config);
    const ForwardTrace t = forward(e.inputs, e.extras, params, config);
    std::copy(t.lr_input.begin(), t.lr_input.end(), out.row(i).begin());
  }
  return out;
}

double task_metric(std::span<const Example> examples, const Matrix& probabilities, Task task) {
  if (examples.empty()) return 0.0;
  std::vector<int> labels;
  for (const auto& e : examples) labels.push_back(e.label);
  if (task == Task::kAnswerSelection) {
    std::vector<std::string> ids;
    Vector scores;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      ids.push_back(examples[i].views.front().group_id.value_or(std::to_string(i)));
      scores.push_back(probabilities(i, 1));
    }
    const auto groups = build_ranking_groups(ids, scores, labels);
    return groups.empty() ? 0.0 : mean_average_precision(groups);
  }
  return accuracy_f1(predict_labels(probabilities), labels).accuracy;
}

namespace {

struct Evaluation {
  double loss = 0.0;
  double metric = 0.0;
};

Evaluation evaluate(std::span<const Example> examples, const ModelParams& params, const ModelConfig& config,
                    const EmbeddingTable& table) {
  Evaluation ev;
  if (examples.empty()) return ev;
  Matrix probs(examples.size(), config.num_classes());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const EncodedExample e = encode_example(examples[i], table, config);
    const ForwardTrace t = forward(e.inputs, e.extras, params, config);
    ev.loss += example_loss(t, e.label, config);
    for (std::size_t c = 0; c < config.num_classes(); ++c) probs(i, c) = t.probabilities[c];
  }
  ev.loss /= static_cast<double>(examples.size());
  ev.metric = task_metric(examples, probs, config.task);
  return ev;
}

}  // namespace

void write_log_header(std::ostream& out) { out << "stage\tepoch\ttrain_loss\tdev_loss\tdev_metric\n"; }

void write_log_row(std::ostream& out, const EpochRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu\t%zu\t%.10g\t%.10g\t%.10g\n", r.stage, r.epoch, r.train_loss, r.dev_loss,
                r.dev_metric);
  out << buf;
}

TrainResult train(const ModelConfig& config, ModelParams initial, const TrainConfig& tc,
                  std::span<const Example> train_set, std::span<const Example> dev_set,
                  const EmbeddingTable& table, std::size_t first_trainable_layer, std::size_t stage,
                  std::ostream* log) {
  if (train_set.empty()) throw ArgumentError("train: empty training set");
  if (!(tc.learning_rate >= 0.0) || !(tc.l2 >= 0.0)) throw ArgumentError("train: lr and l2 must be non-negative");
  if (tc.batch_size == 0) throw ArgumentError("train: batch_size must be positive");
  check_params(initial, config);

  SeededRng rng(tc.seed + 0x5bd1e995ULL * stage);
  ModelParams params = std::move(initial);
  AdagradState state = make_adagrad_state(params, tc.adagrad_epsilon);
  TrainResult result;
  result.params = params;
  double best = std::numeric_limits<double>::infinity();
  std::size_t bad_epochs = 0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  ModelParams grads;
  std::vector<EncodedExample> batch;
  for (std::size_t epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
      batch.clear();
      const std::size_t end = std::min(order.size(), start + tc.batch_size);
      for (std::size_t i = start; i < end; ++i) batch.push_back(encode_example(train_set[order[i]], table, config));
      loss_and_gradients(batch, params, config, tc.l2, &grads, first_trainable_layer);
      adagrad_step(params, grads, state, tc.learning_rate);
    }

    EpochRecord rec;
    rec.stage = stage;
    rec.epoch = epoch;
    rec.train_loss = evaluate(train_set, params, config, table).loss;
    if (!std::isfinite(rec.train_loss)) throw NumericError("training diverged at epoch " + std::to_string(epoch));
    double monitored = rec.train_loss;
    if (!dev_set.empty()) {
      const Evaluation dev = evaluate(dev_set, params, config, table);
      rec.dev_loss = dev.loss;
      rec.dev_metric = dev.metric;
      monitored = dev.loss;
    } else {
      rec.dev_loss = std::numeric_limits<double>::quiet_NaN();
      rec.dev_metric = std::numeric_limits<double>::quiet_NaN();
    }
    result.history.push_back(rec);
    if (log) write_log_row(*log, rec);

    if (monitored < best) {
      best = monitored;
      result.params = params;
      result.best_epoch = epoch;
      bad_epochs = 0;
    } else if (++bad_epochs > tc.patience) {
      break;
    }
  }
  return result;
}

void transfer_output_layer(const ModelParams& from, const ModelConfig& from_config, ModelParams& to,
                           const ModelConfig& to_config) {
  if (from_config.num_logits() != to_config.num_logits()) throw DimensionError("output layers differ in size");
  const auto from_names = from_config.feature_names();
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < from_names.size(); ++i) index.emplace(from_names[i], i);
  const auto to_names = to_config.feature_names();
  for (std::size_t o = 0; o < to_config.num_logits(); ++o) {
    for (std::size_t j = 0; j < to_names.size(); ++j) {
      auto it = index.find(to_names[j]);
      if (it != index.end()) to.output_weights(o, j) = from.output_weights(o, it->second);
    }
    to.output_bias(o, 0) = from.output_bias(o, 0);
  }
}

TrainResult layerwise_train(const ModelConfig& config, const TrainConfig& tc, std::span<const Example> train_set,
                            std::span<const Example> dev_set, const EmbeddingTable& table, std::ostream* log) {
  config.validate();
  SeededRng init_rng(tc.seed);
  if (log) write_log_header(*log);

  ModelConfig stage_config = config;
  stage_config.num_conv_layers = 1;
  TrainResult result = train(stage_config, init_params(stage_config, init_rng), tc, train_set, dev_set, table, 0, 1, log);

  for (std::size_t layers = 2; layers <= config.num_conv_layers; ++layers) {
    ModelConfig next_config = config;
    next_config.num_conv_layers = layers;
    ModelParams next = init_params(next_config, init_rng);
    for (std::size_t s = 0; s < next.stacks.size(); ++s)
      for (std::size_t l = 0; l + 1 < layers; ++l) next.stacks[s][l] = result.params.stacks[s][l];
    transfer_output_layer(result.params, stage_config, next, next_config);

    std::vector<EpochRecord> history = std::move(result.history);
    result = train(next_config, std::move(next), tc, train_set, dev_set, table, layers - 1, layers, log);
    history.insert(history.end(), result.history.begin(), result.history.end());
    result.history = std::move(history);
    stage_config = next_config;
  }
  return result;
}

}  // namespace abcnn
