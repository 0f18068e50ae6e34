#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "abcnn/ling_features.hpp"
#include "abcnn/model_io.hpp"
#include "abcnn/training.hpp"

namespace abcnn {

struct Hyperparameters {
  double learning_rate = 0.0;
  std::size_t filter_width = 0;
  double l2 = 0.0;
};

// Published per-task settings. BCNN uses the ABCNN-2 row of its task.
Hyperparameters table_hyperparameters(Task task, Variant variant, std::size_t num_conv_layers);

struct RunConfig {
  Task task = Task::kAnswerSelection;
  Variant variant = Variant::kBcnn;
  std::size_t num_conv_layers = 1;
  std::optional<std::size_t> filter_width;  // table default when empty
  std::size_t hidden_dim = 50;
  std::optional<double> learning_rate;
  std::optional<double> l2;
  std::uint64_t seed = 1;
  std::size_t epochs = 200;
  std::size_t patience = 10;
  std::size_t batch_size = 1;
  // AS: 40; PI/TE: longest training sentence.
  std::optional<std::size_t> sentence_len;
  std::size_t dynamic_pool_grid = 3;
  bool share_attention_weights = true;
  bool mask_padding = false;
  bool no_mt = false;
  bool dual_pipeline = true;
  bool share_pipeline_weights = false;
  bool swap_augment = true;  // PI only
  std::size_t pap_min_count = 2;
  double pap_min_cosine = 0.4;

  std::string train;
  std::string dev;
  std::string embeddings;
  std::string model;
  std::string train_mt;
  std::string dev_mt;
  std::string lexicon;
};

// Every RunConfig field, by JSON key (CLI flags use the same names with
// dashes).
struct RunConfigKey {
  std::string key;
  std::string help;
  bool is_flag = false;
};
const std::vector<RunConfigKey>& run_config_keys();

// Throws UsageError naming the key when it is unknown or the value is bad.
void set_run_config_field(RunConfig& config, const std::string& key, const std::string& value);
RunConfig run_config_from_json(const std::string& text, const std::string& source = "<config>");
// Flat JSON object with sorted keys; unresolved optionals are null.
std::string run_config_to_json(const RunConfig& config);

// Fills table defaults for filter_width, learning_rate and l2.
void resolve_hyperparameters(RunConfig& config);

// Builds the pipeline views (ORIG, plus NONOVER for the TE dual network)
// and task extras for every pair.
std::vector<Example> make_examples(const PairDataset& dataset, const ModelConfig& config,
                                   const FeatureResources& resources);

// Model directory contents.
inline constexpr const char* kModelFile = "model.txt";
inline constexpr const char* kConfigFile = "config.json";
inline constexpr const char* kLogFile = "train_log.tsv";
inline constexpr const char* kIdfFile = "idf.tsv";
inline constexpr const char* kPapFile = "pap.tsv";
inline constexpr const char* kLexiconFile = "lexicon.tsv";

struct TrainOutcome {
  ModelConfig model_config;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
};

// Trains (layerwise for two conv layers) and writes the model directory.
TrainOutcome cmd_train(RunConfig config, std::ostream& out);

// Inputs shared by the commands that run a trained model on a dataset.
struct DataOptions {
  std::string model;
  std::string data;
  std::string mt;          // PI/TE MT sidecar for `data`
  std::string embeddings;  // defaults to the training run's embeddings
  bool no_mt = false;
  std::optional<Task> task;  // must match the model when given
};

struct LoadedModel {
  RunConfig run;
  SavedModel saved;
  FeatureResources resources;
  EmbeddingTable embeddings;
};

LoadedModel load_model_dir(const std::string& dir, const std::string& embeddings_override = "");

// Dataset with its MT sidecar attached; UsageError when empty.
PairDataset load_eval_dataset(const DataOptions& options, const LoadedModel& model);

// Metric report lines "metric TAB value". Scores come from the network's
// own output layer, or from `classifier` when given.
void cmd_eval(const DataOptions& options, const std::string& classifier, std::ostream& out);

void cmd_extract_features(const DataOptions& options, const std::string& out_path);

// Default l2 is 1 / (2 * rows).
LogisticModel cmd_fit_classifier(const std::string& features_path, const std::string& out_path,
                                  std::optional<double> l2, std::ostream& out);

// Writes "index TAB p_0 ... p_{k-1} TAB predicted" rows.
void cmd_predict(const DataOptions& options, const std::string& classifier, const std::string& out_path);

// Label of unit `unit` at `level` (0 = words, l = conv level l): the words
// it spans, with the middle elided as "first ... last" beyond two words.
std::string unit_label(const Tokens& words, std::size_t level, std::size_t unit, std::size_t filter_width);

// Writes one CSV (and optional PGM) per available attention matrix of the
// pair and returns the written file names.
std::vector<std::string> cmd_viz_attention(const DataOptions& options, std::size_t pair_index,
                                           const std::string& out_dir, bool image, std::ostream& out);

}  // namespace abcnn
