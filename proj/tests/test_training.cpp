#include <doctest.h>

#include <cmath>
#include <sstream>

#include "abcnn/errors.hpp"
#include "abcnn/training.hpp"
#include "test_support.hpp"

using namespace abcnn;

namespace {

ModelConfig toy_config(Variant v, std::size_t layers) {
  ModelConfig c;
  c.variant = v;
  c.task = Task::kAnswerSelection;
  c.num_conv_layers = layers;
  c.filter_width = 3;
  c.hidden_dim = 6;
  c.embedding_dim = 6;
  c.sentence_len = 6;
  return c;
}

double train_accuracy(std::span<const Example> ex, const ModelParams& p, const ModelConfig& c,
                      const EmbeddingTable& t) {
  const Matrix probs = predict_probabilities(ex, p, c, t);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ex.size(); ++i) hits += (probs(i, 1) > 0.5) == (ex[i].label == 1);
  return static_cast<double>(hits) / static_cast<double>(ex.size());
}

double squared_norm(const ModelParams& p) {
  double s = 0;
  for_each_tensor(p, [&](const TensorRef&, const Matrix& m) {
    for (double v : m.values()) s += v * v;
  });
  return s;
}

}  // namespace

TEST_CASE("adagrad single step and null step") {
  ModelParams p;
  p.output_weights = Matrix(1, 1);
  p.output_bias = Matrix(1, 1);
  ModelParams g = zeros_like(p);
  AdagradState state = make_adagrad_state(p, 1e-6);

  adagrad_step(p, g, state, 0.1);
  CHECK(p.output_weights(0, 0) == 0.0);
  CHECK(state.accumulated.output_weights(0, 0) == 0.0);

  g.output_weights(0, 0) = 2.0;
  adagrad_step(p, g, state, 0.1);
  CHECK(p.output_weights(0, 0) == doctest::Approx(-0.1 * 2.0 / (2.0 + 1e-6)).epsilon(1e-15));
  CHECK(state.accumulated.output_weights(0, 0) == 4.0);

  const double before = p.output_weights(0, 0);
  adagrad_step(p, g, state, 0.1);
  const double second = before - p.output_weights(0, 0);
  CHECK(second > 0.0);
  CHECK(second < 0.1 * 2.0 / (2.0 + 1e-6));
}

TEST_CASE("adagrad rejects mismatched shapes") {
  ModelParams p;
  p.output_weights = Matrix(1, 2);
  p.output_bias = Matrix(1, 1);
  ModelParams g;
  g.output_weights = Matrix(1, 3);
  g.output_bias = Matrix(1, 1);
  AdagradState state = make_adagrad_state(p);
  CHECK_THROWS_AS(adagrad_step(p, g, state, 0.1), DimensionError);
}

TEST_CASE("lr = 0 leaves parameters unchanged") {
  const ModelConfig c = toy_config(Variant::kAbcnn3, 1);
  const EmbeddingTable t = testing::random_table(6, 30, 1);
  const auto ex = testing::separable_examples(c, 8, 30, 2);
  SeededRng rng(3);
  const ModelParams init = init_params(c, rng);
  TrainConfig tc;
  tc.learning_rate = 0.0;
  tc.max_epochs = 3;
  const TrainResult r = train(c, init, tc, ex, {}, t);
  CHECK(r.params.stacks[0][0].conv.weights == init.stacks[0][0].conv.weights);
  CHECK(r.params.output_weights == init.output_weights);
}

TEST_CASE("patience = 0 stops at the first non-improving epoch") {
  const ModelConfig c = toy_config(Variant::kBcnn, 1);
  const EmbeddingTable t = testing::random_table(6, 30, 1);
  const auto ex = testing::separable_examples(c, 8, 30, 2);
  SeededRng rng(3);
  TrainConfig tc;
  tc.learning_rate = 0.0;  // loss never improves after epoch 1
  tc.patience = 0;
  tc.max_epochs = 50;
  const TrainResult r = train(c, init_params(c, rng), tc, ex, ex, t);
  CHECK(r.history.size() == 2);
  CHECK(r.best_epoch == 1);
}

TEST_CASE("empty training set is an argument error") {
  const ModelConfig c = toy_config(Variant::kBcnn, 1);
  const EmbeddingTable t = testing::random_table(6, 30, 1);
  SeededRng rng(3);
  CHECK_THROWS_AS(train(c, init_params(c, rng), TrainConfig{}, {}, {}, t), ArgumentError);
}

TEST_CASE("BCNN overfits 40 separable pairs") {
  const ModelConfig c = toy_config(Variant::kBcnn, 1);
  const EmbeddingTable t = testing::random_table(6, 40, 5);
  const auto ex = testing::separable_examples(c, 40, 40, 6);
  TrainConfig tc;
  tc.learning_rate = 0.05;
  tc.l2 = 0.0;
  tc.max_epochs = 300;
  tc.patience = 300;
  const TrainResult r = layerwise_train(c, tc, ex, {}, t);
  CHECK(train_accuracy(ex, r.params, c, t) >= 0.95);
}

TEST_CASE("training loss falls over the first epoch") {
  const ModelConfig c = toy_config(Variant::kAbcnn2, 1);
  const EmbeddingTable t = testing::random_table(6, 40, 5);
  const auto ex = testing::separable_examples(c, 40, 40, 7);
  SeededRng rng(1);
  const ModelParams init = init_params(c, rng);
  std::vector<EncodedExample> enc;
  for (const auto& e : ex) enc.push_back(encode_example(e, t, c));
  const double before = loss_and_gradients(enc, init, c, 0.0, nullptr);
  TrainConfig tc;
  tc.max_epochs = 1;
  const TrainResult r = train(c, init, tc, ex, {}, t);
  CHECK(r.history[0].train_loss < before);
}

TEST_CASE("layerwise stage 2 keeps stage-1 weights bit-identical") {
  const ModelConfig c = toy_config(Variant::kAbcnn3, 2);
  const EmbeddingTable t = testing::random_table(6, 40, 5);
  const auto ex = testing::separable_examples(c, 40, 40, 8);
  TrainConfig tc;
  tc.max_epochs = 4;
  tc.seed = 3;

  ModelConfig one = c;
  one.num_conv_layers = 1;
  SeededRng init_rng(tc.seed);
  const TrainResult stage1 = train(one, init_params(one, init_rng), tc, ex, {}, t, 0, 1);
  const TrainResult both = layerwise_train(c, tc, ex, {}, t);
  CHECK(both.params.stacks[0][0].conv.weights == stage1.params.stacks[0][0].conv.weights);
  CHECK(both.params.stacks[0][0].conv.bias == stage1.params.stacks[0][0].conv.bias);
  CHECK(both.params.stacks[0][0].attn_w0 == stage1.params.stacks[0][0].attn_w0);
  CHECK(both.params.stacks[0][1].conv.weights != init_params(c, init_rng).stacks[0][1].conv.weights);
}

TEST_CASE("training is deterministic") {
  const ModelConfig c = toy_config(Variant::kAbcnn1, 2);
  const EmbeddingTable t = testing::random_table(6, 40, 5);
  const auto ex = testing::separable_examples(c, 12, 40, 9);
  TrainConfig tc;
  tc.max_epochs = 3;
  std::ostringstream log_a, log_b;
  const TrainResult a = layerwise_train(c, tc, ex, ex, t, &log_a);
  const TrainResult b = layerwise_train(c, tc, ex, ex, t, &log_b);
  CHECK(a.params.stacks == b.params.stacks);
  CHECK(a.params.output_weights == b.params.output_weights);
  CHECK(log_a.str() == log_b.str());
}

TEST_CASE("training log is TSV with a header and one row per epoch") {
  const ModelConfig c = toy_config(Variant::kBcnn, 1);
  const EmbeddingTable t = testing::random_table(6, 40, 5);
  const auto ex = testing::separable_examples(c, 8, 40, 10);
  TrainConfig tc;
  tc.max_epochs = 3;
  tc.patience = 10;
  std::ostringstream log;
  layerwise_train(c, tc, ex, ex, t, &log);
  std::istringstream in(log.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "stage\tepoch\ttrain_loss\tdev_loss\tdev_metric");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), '\t') == 4);
  }
  CHECK(rows == 3);
}

TEST_CASE("larger l2 never yields a larger parameter norm") {
  const ModelConfig c = toy_config(Variant::kBcnn, 1);
  const EmbeddingTable t = testing::random_table(6, 40, 5);
  const auto ex = testing::separable_examples(c, 20, 40, 11);
  TrainConfig tc;
  tc.max_epochs = 10;
  tc.patience = 10;
  double previous = 1e300;
  for (double l2 : {0.0, 0.01, 0.1}) {
    tc.l2 = l2;
    const double n = squared_norm(layerwise_train(c, tc, ex, {}, t).params);
    CHECK(n <= previous);
    previous = n;
  }
}

TEST_CASE("transfer_output_layer copies by feature name") {
  ModelConfig one = toy_config(Variant::kBcnn, 1);
  ModelConfig two = toy_config(Variant::kBcnn, 2);
  SeededRng rng(1);
  ModelParams from = init_params(one, rng);
  testing::randomize(from, rng);
  ModelParams to = init_params(two, rng);
  transfer_output_layer(from, one, to, two);
  // one: b1.cos b2.cos len0 len1 wordcnt wgtwordcnt; two inserts b3.cos.
  CHECK(to.output_weights(0, 0) == from.output_weights(0, 0));
  CHECK(to.output_weights(0, 1) == from.output_weights(0, 1));
  CHECK(to.output_weights(0, 2) == 0.0);
  CHECK(to.output_weights(0, 6) == from.output_weights(0, 5));
  CHECK(to.output_bias == from.output_bias);
}

TEST_CASE("task metric is MAP for AS and accuracy otherwise") {
  const ModelConfig c = toy_config(Variant::kBcnn, 1);
  const auto ex = testing::separable_examples(c, 4, 40, 12);
  Matrix perfect(4, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    perfect(i, 1) = ex[i].label == 1 ? 0.9 : 0.1;
    perfect(i, 0) = 1.0 - perfect(i, 1);
  }
  CHECK(task_metric(ex, perfect, Task::kAnswerSelection) == 1.0);
  CHECK(task_metric(ex, perfect, Task::kParaphrase) == 1.0);
}
