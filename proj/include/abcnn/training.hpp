#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "abcnn/network.hpp"

namespace abcnn {

// One training/evaluation item. `views` holds the sentence pair per
// pipeline (TE dual: ORIG then NONOVER).
struct Example {
  std::vector<SentencePair> views;
  Vector extras;
  int label = 0;
};

struct EncodedExample {
  std::vector<EmbeddedPair> inputs;
  Vector extras;
  int label = 0;
};

EncodedExample encode_example(const Example& example, const EmbeddingTable& table, const ModelConfig& config);

// Cross-entropy of one prediction; binary tasks use the logit directly for
// numerical stability.
double example_loss(const ForwardTrace& trace, int label, const ModelConfig& config);

// Mean cross-entropy over the batch plus l2 * sum of squared trainable
// parameters. If `grads` is non-null it is overwritten with the exact
// gradient. Conv layers below `first_trainable_layer` are frozen: they are
// excluded from the penalty and receive zero gradient.
double loss_and_gradients(std::span<const EncodedExample> batch, const ModelParams& params,
                          const ModelConfig& config, double l2, ModelParams* grads,
                          std::size_t first_trainable_layer = 0, const ForwardOptions& options = {});

struct AdagradState {
  ModelParams accumulated;  // running sum of squared gradients
  double epsilon = 1e-6;
};

AdagradState make_adagrad_state(const ModelParams& params, double epsilon = 1e-6);

// G += g^2; theta -= lr * g / (sqrt(G) + eps).
void adagrad_step(ModelParams& params, const ModelParams& grads, AdagradState& state, double learning_rate);

struct TrainConfig {
  double learning_rate = 0.05;
  double l2 = 0.0003;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;
  std::size_t batch_size = 1;
  std::uint64_t seed = 1;
  double adagrad_epsilon = 1e-6;
};

struct EpochRecord {
  std::size_t stage = 1;
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_loss = 0.0;
  double dev_metric = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
};

// Per-batch Adagrad in a seeded shuffled order with early stopping on dev
// loss (training loss when `dev` is empty). Returns the best parameters.
TrainResult train(const ModelConfig& config, ModelParams initial, const TrainConfig& train_config,
                  std::span<const Example> train_set, std::span<const Example> dev_set,
                  const EmbeddingTable& table, std::size_t first_trainable_layer = 0, std::size_t stage = 1,
                  std::ostream* log = nullptr);

// Trains one conv block at a time: stage j starts from stage j-1's weights,
// freezes every lower block and trains the new block plus the output layer.
TrainResult layerwise_train(const ModelConfig& config, const TrainConfig& train_config,
                            std::span<const Example> train_set, std::span<const Example> dev_set,
                            const EmbeddingTable& table, std::ostream* log = nullptr);

// Carries output-layer weights from `from` to `to` wherever the feature
// names match; everything else in `to` is left as is.
void transfer_output_layer(const ModelParams& from, const ModelConfig& from_config, ModelParams& to,
                           const ModelConfig& to_config);

// Per-example class probabilities from the network's own output layer.
Matrix predict_probabilities(std::span<const Example> examples, const ModelParams& params,
                             const ModelConfig& config, const EmbeddingTable& table);

// Rows of LR-layer inputs, one per example.
Matrix extract_lr_inputs(std::span<const Example> examples, const ModelParams& params, const ModelConfig& config,
                         const EmbeddingTable& table);

// Task metric on network predictions: MAP for AS, accuracy otherwise.
double task_metric(std::span<const Example> examples, const Matrix& probabilities, Task task);

void write_log_header(std::ostream& out);
void write_log_row(std::ostream& out, const EpochRecord& record);

}  // namespace abcnn
