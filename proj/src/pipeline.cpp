#include "abcnn/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

#include "abcnn/errors.hpp"

namespace abcnn {

namespace fs = std::filesystem;

Hyperparameters table_hyperparameters(Task task, Variant variant, std::size_t num_conv_layers) {
  if (num_conv_layers < 1 || num_conv_layers > 2) throw ArgumentError("num_conv_layers must be 1 or 2");
  if (variant == Variant::kBcnn) variant = Variant::kAbcnn2;
  using Key = std::tuple<Task, Variant, std::size_t>;
  static const std::map<Key, Hyperparameters> kTable = {
      {{Task::kAnswerSelection, Variant::kAbcnn1, 1}, {0.08, 4, 0.0004}},
      {{Task::kAnswerSelection, Variant::kAbcnn1, 2}, {0.085, 4, 0.0006}},
      {{Task::kAnswerSelection, Variant::kAbcnn2, 1}, {0.05, 4, 0.0003}},
      {{Task::kAnswerSelection, Variant::kAbcnn2, 2}, {0.06, 4, 0.0006}},
      {{Task::kAnswerSelection, Variant::kAbcnn3, 1}, {0.05, 4, 0.0003}},
      {{Task::kAnswerSelection, Variant::kAbcnn3, 2}, {0.06, 4, 0.0006}},
      {{Task::kParaphrase, Variant::kAbcnn1, 1}, {0.08, 3, 0.0002}},
      {{Task::kParaphrase, Variant::kAbcnn1, 2}, {0.085, 3, 0.0003}},
      {{Task::kParaphrase, Variant::kAbcnn2, 1}, {0.085, 3, 0.0001}},
      {{Task::kParaphrase, Variant::kAbcnn2, 2}, {0.085, 3, 0.0001}},
      {{Task::kParaphrase, Variant::kAbcnn3, 1}, {0.05, 3, 0.0003}},
      {{Task::kParaphrase, Variant::kAbcnn3, 2}, {0.055, 3, 0.0005}},
      {{Task::kEntailment, Variant::kAbcnn1, 1}, {0.08, 3, 0.0006}},
      {{Task::kEntailment, Variant::kAbcnn1, 2}, {0.085, 3, 0.0006}},
      {{Task::kEntailment, Variant::kAbcnn2, 1}, {0.09, 3, 0.00065}},
      {{Task::kEntailment, Variant::kAbcnn2, 2}, {0.085, 3, 0.0007}},
      {{Task::kEntailment, Variant::kAbcnn3, 1}, {0.09, 3, 0.0007}},
      {{Task::kEntailment, Variant::kAbcnn3, 2}, {0.09, 3, 0.0007}},
  };
  return kTable.at({task, variant, num_conv_layers});
}

const std::vector<RunConfigKey>& run_config_keys() {
  static const std::vector<RunConfigKey> kKeys = {
      {"task", "AS, PI or TE"},
      {"variant", "BCNN, ABCNN-1, ABCNN-2 or ABCNN-3"},
      {"num_conv_layers", "1 or 2; two layers train layerwise"},
      {"filter_width", "convolution width (table default)"},
      {"hidden_dim", "convolution output size d1"},
      {"learning_rate", "Adagrad learning rate (table default)"},
      {"l2", "L2 weight (table default)"},
      {"seed", "RNG seed"},
      {"epochs", "maximum epochs per stage"},
      {"patience", "early-stopping patience in epochs"},
      {"batch_size", "examples per Adagrad step"},
      {"sentence_len", "padded sentence width (AS: 40, else longest training sentence)"},
      {"dynamic_pool_grid", "PI attention pooling grid size"},
      {"share_attention_weights", "ABCNN-1/3: one transform for both sentences", true},
      {"mask_padding", "all-ap averages only over unpadded units", true},
      {"no_mt", "PI/TE: use zeros instead of an MT feature file", true},
      {"dual_pipeline", "TE: add the NONOVER network", true},
      {"share_pipeline_weights", "TE dual: one weight set for both networks", true},
      {"swap_augment", "PI: also train on swapped pairs", true},
      {"pap_min_count", "TE: antonym-pair frequency filter"},
      {"pap_min_cosine", "TE: antonym-pair embedding cosine filter"},
      {"train", "training data TSV"},
      {"dev", "development data TSV (early stopping)"},
      {"embeddings", "word embedding text file"},
      {"model", "output model directory"},
      {"train_mt", "MT feature file for the training data"},
      {"dev_mt", "MT feature file for the development data"},
      {"lexicon", "TE synonym/hypernym/antonym lexicon"},
  };
  return kKeys;
}

namespace {

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long n = 0;
  try {
    n = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size() || v[0] == '-') throw UsageError(key + ": expected a non-negative integer, got '" + v + "'");
  return static_cast<std::size_t>(n);
}

double to_real(const std::string& key, const std::string& v) {
  try {
    return parse_double(v, key);
  } catch (const FormatError&) {
    throw UsageError(key + ": expected a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw UsageError(key + ": expected true or false, got '" + v + "'");
}

std::string json_scalar(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_null()) return "";
  if (v.is_number()) return v.dump();
  throw UsageError("config values must be scalars");
}

std::size_t max_sentence_length(const PairDataset& d) {
  std::size_t n = 0;
  for (const auto& p : d.pairs) n = std::max({n, p.s0.size(), p.s1.size()});
  return n;
}

void attach_sidecar(PairDataset& dataset, const std::string& path) {
  dataset.sidecar = load_mt_sidecar(path, dataset.pairs.size());
}

void require_file(const std::string& key, const std::string& path) {
  if (path.empty()) throw UsageError(key + ": path is required");
  if (!fs::exists(path)) throw UsageError(key + ": file not found: " + path);
}

std::vector<int> labels_of(std::span<const Example> examples) {
  std::vector<int> labels;
  for (const auto& e : examples) labels.push_back(e.label);
  return labels;
}

std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

LogisticModel load_classifier_checked(const std::string& path) {
  require_file("classifier", path);
  return load_classifier(path);
}

Matrix classifier_probabilities(const LogisticModel& clf, const Matrix& lr_inputs, const ModelConfig& config) {
  if (clf.weights.cols() != lr_inputs.cols()) {
    throw UsageError("classifier: expects " + std::to_string(clf.weights.cols()) + " features, model produces " +
                     std::to_string(lr_inputs.cols()));
  }
  if (clf.num_classes != config.num_classes()) throw UsageError("classifier: class count differs from the task");
  return predict_scores(clf, lr_inputs);
}

Matrix sub_matrix(const Matrix& m, std::size_t rows, std::size_t cols) {
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = m(r, c);
  return out;
}

}  // namespace

void set_run_config_field(RunConfig& c, const std::string& key, const std::string& value) {
  try {
    if (key == "task") c.task = parse_task(value);
    else if (key == "variant") c.variant = parse_variant(value);
    else if (key == "num_conv_layers") c.num_conv_layers = to_size(key, value);
    else if (key == "filter_width") c.filter_width = value.empty() ? std::nullopt : std::optional(to_size(key, value));
    else if (key == "hidden_dim") c.hidden_dim = to_size(key, value);
    else if (key == "learning_rate") c.learning_rate = value.empty() ? std::nullopt : std::optional(to_real(key, value));
    else if (key == "l2") c.l2 = value.empty() ? std::nullopt : std::optional(to_real(key, value));
    else if (key == "seed") c.seed = to_size(key, value);
    else if (key == "epochs") c.epochs = to_size(key, value);
    else if (key == "patience") c.patience = to_size(key, value);
    else if (key == "batch_size") c.batch_size = to_size(key, value);
    else if (key == "sentence_len") c.sentence_len = value.empty() ? std::nullopt : std::optional(to_size(key, value));
    else if (key == "dynamic_pool_grid") c.dynamic_pool_grid = to_size(key, value);
    else if (key == "share_attention_weights") c.share_attention_weights = to_bool(key, value);
    else if (key == "mask_padding") c.mask_padding = to_bool(key, value);
    else if (key == "no_mt") c.no_mt = to_bool(key, value);
    else if (key == "dual_pipeline") c.dual_pipeline = to_bool(key, value);
    else if (key == "share_pipeline_weights") c.share_pipeline_weights = to_bool(key, value);
    else if (key == "swap_augment") c.swap_augment = to_bool(key, value);
    else if (key == "pap_min_count") c.pap_min_count = to_size(key, value);
    else if (key == "pap_min_cosine") c.pap_min_cosine = to_real(key, value);
    else if (key == "train") c.train = value;
    else if (key == "dev") c.dev = value;
    else if (key == "embeddings") c.embeddings = value;
    else if (key == "model") c.model = value;
    else if (key == "train_mt") c.train_mt = value;
    else if (key == "dev_mt") c.dev_mt = value;
    else if (key == "lexicon") c.lexicon = value;
    else throw UsageError("unknown config key '" + key + "'");
  } catch (const ArgumentError& e) {
    throw UsageError(key + ": " + e.what());
  }
}

RunConfig run_config_from_json(const std::string& text, const std::string& source) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(source + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw UsageError(source + ": expected a JSON object");
  RunConfig c;
  for (const auto& [key, value] : j.items()) set_run_config_field(c, key, json_scalar(value));
  return c;
}

std::string run_config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["task"] = std::string(task_name(c.task));
  j["variant"] = std::string(variant_name(c.variant));
  j["num_conv_layers"] = c.num_conv_layers;
  j["filter_width"] = c.filter_width ? nlohmann::json(*c.filter_width) : nlohmann::json();
  j["hidden_dim"] = c.hidden_dim;
  j["learning_rate"] = c.learning_rate ? nlohmann::json(*c.learning_rate) : nlohmann::json();
  j["l2"] = c.l2 ? nlohmann::json(*c.l2) : nlohmann::json();
  j["seed"] = c.seed;
  j["epochs"] = c.epochs;
  j["patience"] = c.patience;
  j["batch_size"] = c.batch_size;
  j["sentence_len"] = c.sentence_len ? nlohmann::json(*c.sentence_len) : nlohmann::json();
  j["dynamic_pool_grid"] = c.dynamic_pool_grid;
  j["share_attention_weights"] = c.share_attention_weights;
  j["mask_padding"] = c.mask_padding;
  j["no_mt"] = c.no_mt;
  j["dual_pipeline"] = c.dual_pipeline;
  j["share_pipeline_weights"] = c.share_pipeline_weights;
  j["swap_augment"] = c.swap_augment;
  j["pap_min_count"] = c.pap_min_count;
  j["pap_min_cosine"] = c.pap_min_cosine;
  j["train"] = c.train;
  j["dev"] = c.dev;
  j["embeddings"] = c.embeddings;
  j["model"] = c.model;
  j["train_mt"] = c.train_mt;
  j["dev_mt"] = c.dev_mt;
  j["lexicon"] = c.lexicon;
  return j.dump(2) + "\n";
}

void resolve_hyperparameters(RunConfig& c) {
  if (c.num_conv_layers < 1 || c.num_conv_layers > 2) {
    throw UsageError("num_conv_layers: supported values are 1 and 2, got " + std::to_string(c.num_conv_layers));
  }
  const Hyperparameters h = table_hyperparameters(c.task, c.variant, c.num_conv_layers);
  if (!c.filter_width) c.filter_width = h.filter_width;
  if (!c.learning_rate) c.learning_rate = h.learning_rate;
  if (!c.l2) c.l2 = h.l2;
}

std::vector<Example> make_examples(const PairDataset& dataset, const ModelConfig& config,
                                   const FeatureResources& resources) {
  if (dataset.task != config.task) throw ArgumentError("dataset task differs from the model");
  const Matrix extras = compute_extras(dataset, resources);
  std::vector<Example> out;
  out.reserve(dataset.pairs.size());
  for (std::size_t i = 0; i < dataset.pairs.size(); ++i) {
    Example e;
    e.views.push_back(dataset.pairs[i]);
    if (config.num_pipelines() == 2) e.views.push_back(nonover(dataset.pairs[i]));
    e.extras.assign(extras.row(i).begin(), extras.row(i).end());
    e.label = dataset.pairs[i].label;
    out.push_back(std::move(e));
  }
  return out;
}

TrainOutcome cmd_train(RunConfig config, std::ostream& out) {
  resolve_hyperparameters(config);
  require_file("embeddings", config.embeddings);
  require_file("train", config.train);
  if (config.model.empty()) throw UsageError("model: output directory is required");
  if (!config.dev.empty()) require_file("dev", config.dev);
  const bool wants_mt = config.task != Task::kAnswerSelection && !config.no_mt;
  if (wants_mt) {
    require_file("train_mt", config.train_mt);
    if (!config.dev.empty()) require_file("dev_mt", config.dev_mt);
  }
  if (config.task == Task::kEntailment && !config.lexicon.empty()) require_file("lexicon", config.lexicon);

  PairDataset train_data = parse_dataset(config.train, config.task);
  if (train_data.pairs.empty()) throw UsageError("train: dataset has no pairs");
  std::optional<PairDataset> dev_data;
  if (!config.dev.empty()) {
    dev_data = parse_dataset(config.dev, config.task);
    if (dev_data->pairs.empty()) throw UsageError("dev: dataset has no pairs");
  }
  if (wants_mt) {
    attach_sidecar(train_data, config.train_mt);
    if (dev_data) attach_sidecar(*dev_data, config.dev_mt);
  }

  SeededRng rng(config.seed);
  const EmbeddingTable table = load_embeddings(config.embeddings, rng);

  FeatureResources resources;
  if (config.task == Task::kAnswerSelection) {
    std::vector<Tokens> candidates;
    for (const auto& p : train_data.pairs) candidates.push_back(p.s1);
    resources.idf = build_idf(candidates);
  }
  if (config.task == Task::kEntailment) {
    if (!config.lexicon.empty()) resources.lexicon = load_nym_lexicon(config.lexicon);
    resources.pap = extract_pap(train_data, table, resources.lexicon, config.pap_min_count, config.pap_min_cosine);
  }
  if (config.task == Task::kParaphrase && config.swap_augment) train_data = augment_swap(train_data);

  if (!config.sentence_len) {
    config.sentence_len =
        config.task == Task::kAnswerSelection ? std::size_t{40} : max_sentence_length(train_data);
  }

  ModelConfig mc;
  mc.variant = config.variant;
  mc.task = config.task;
  mc.num_conv_layers = config.num_conv_layers;
  mc.filter_width = *config.filter_width;
  mc.hidden_dim = config.hidden_dim;
  mc.embedding_dim = table.dim();
  mc.sentence_len = *config.sentence_len;
  mc.dynamic_pool_grid = config.dynamic_pool_grid;
  mc.share_attention_weights = config.share_attention_weights;
  mc.mask_padding = config.mask_padding;
  mc.dual_pipeline = config.dual_pipeline;
  mc.share_pipeline_weights = config.share_pipeline_weights;
  try {
    mc.validate();
  } catch (const ArgumentError& e) {
    throw UsageError(e.what());
  }

  const std::vector<Example> train_ex = make_examples(train_data, mc, resources);
  std::vector<Example> dev_ex;
  if (dev_data) dev_ex = make_examples(*dev_data, mc, resources);

  TrainConfig tc;
  tc.learning_rate = *config.learning_rate;
  tc.l2 = *config.l2;
  tc.max_epochs = config.epochs;
  tc.patience = config.patience;
  tc.batch_size = config.batch_size;
  tc.seed = config.seed;

  std::ostringstream log;
  const TrainResult result = layerwise_train(mc, tc, train_ex, dev_ex, table, &log);

  fs::create_directories(config.model);
  const fs::path dir(config.model);
  save_model((dir / kModelFile).string(), SavedModel{mc, result.params, table.unk_vector()});
  write_text_file((dir / kLogFile).string(), log.str());
  write_text_file((dir / kConfigFile).string(), run_config_to_json(config));
  if (config.task == Task::kAnswerSelection) {
    std::ostringstream idf;
    write_idf(idf, resources.idf);
    write_text_file((dir / kIdfFile).string(), idf.str());
  }
  if (config.task == Task::kEntailment) {
    std::ostringstream pap;
    write_pap(pap, resources.pap);
    write_text_file((dir / kPapFile).string(), pap.str());
    write_text_file((dir / kLexiconFile).string(), config.lexicon.empty() ? "" : read_text_file(config.lexicon));
  }

  TrainOutcome outcome{mc, result.best_epoch, result.history.size()};
  out << "model\t" << config.model << '\n';
  out << "epochs_run\t" << outcome.epochs_run << '\n';
  out << "best_epoch\t" << outcome.best_epoch << '\n';
  return outcome;
}

LoadedModel load_model_dir(const std::string& dir, const std::string& embeddings_override) {
  if (dir.empty()) throw UsageError("model: directory is required");
  const fs::path root(dir);
  require_file("model", (root / kModelFile).string());
  require_file("model", (root / kConfigFile).string());
  RunConfig run = run_config_from_json(read_text_file((root / kConfigFile).string()), (root / kConfigFile).string());
  SavedModel saved = load_model((root / kModelFile).string());
  if (saved.config.task != run.task) throw FormatError(dir + ": config.json and model.txt disagree on the task");

  const std::string emb_path = embeddings_override.empty() ? run.embeddings : embeddings_override;
  require_file("embeddings", emb_path);
  SeededRng rng(run.seed);
  EmbeddingTable table = load_embeddings(emb_path, rng);
  if (table.dim() != saved.config.embedding_dim) {
    throw UsageError("embeddings: dimension " + std::to_string(table.dim()) + " differs from the model's " +
                     std::to_string(saved.config.embedding_dim));
  }
  table.set_unk_vector(saved.unk_vector);

  FeatureResources resources;
  auto read_optional = [&](const char* name, auto reader) {
    const fs::path p = root / name;
    if (!fs::exists(p)) return;
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read '" + p.string() + "'");
    reader(in, p.string());
  };
  read_optional(kIdfFile, [&](std::istream& in, const std::string& src) { resources.idf = read_idf(in, src); });
  read_optional(kPapFile, [&](std::istream& in, const std::string& src) { resources.pap = read_pap(in, src); });
  read_optional(kLexiconFile,
                [&](std::istream& in, const std::string& src) { resources.lexicon = read_nym_lexicon(in, src); });
  return LoadedModel{std::move(run), std::move(saved), std::move(resources), std::move(table)};
}

PairDataset load_eval_dataset(const DataOptions& options, const LoadedModel& model) {
  const Task task = model.saved.config.task;
  if (options.task && *options.task != task) {
    throw UsageError("task: model was trained for " + std::string(task_name(task)) + ", data given as " +
                     std::string(task_name(*options.task)));
  }
  require_file("data", options.data);
  PairDataset data = parse_dataset(options.data, task);
  if (data.pairs.empty()) throw UsageError("data: dataset has no pairs");
  if (task != Task::kAnswerSelection && !model.run.no_mt) {
    if (!options.mt.empty()) {
      require_file("mt", options.mt);
      attach_sidecar(data, options.mt);
    } else if (!options.no_mt) {
      throw UsageError("mt: the model uses MT features; pass an MT file or no_mt");
    }
  }
  return data;
}

void cmd_eval(const DataOptions& options, const std::string& classifier, std::ostream& out) {
  const LoadedModel model = load_model_dir(options.model, options.embeddings);
  const ModelConfig& mc = model.saved.config;
  const PairDataset data = load_eval_dataset(options, model);
  const std::vector<Example> examples = make_examples(data, mc, model.resources);

  Matrix probs;
  if (classifier.empty()) {
    probs = predict_probabilities(examples, model.saved.params, mc, model.embeddings);
  } else {
    const LogisticModel clf = load_classifier_checked(classifier);
    probs = classifier_probabilities(clf, extract_lr_inputs(examples, model.saved.params, mc, model.embeddings), mc);
  }
  const std::vector<int> labels = labels_of(examples);

  if (mc.task == Task::kAnswerSelection) {
    std::vector<std::string> ids;
    Vector scores;
    for (std::size_t i = 0; i < data.pairs.size(); ++i) {
      ids.push_back(data.pairs[i].group_id.value_or(std::to_string(i)));
      scores.push_back(probs(i, 1));
    }
    const auto groups = build_ranking_groups(ids, scores, labels);
    if (groups.empty()) throw UsageError("data: no question has a correct answer");
    out << "MAP\t" << format_metric(mean_average_precision(groups)) << '\n';
    out << "MRR\t" << format_metric(mean_reciprocal_rank(groups)) << '\n';
    return;
  }
  const AccuracyF1 r = accuracy_f1(predict_labels(probs), labels);
  out << "accuracy\t" << format_metric(r.accuracy) << '\n';
  if (mc.task == Task::kParaphrase) out << "F1\t" << format_metric(r.f1) << '\n';
}

void cmd_extract_features(const DataOptions& options, const std::string& out_path) {
  if (out_path.empty()) throw UsageError("out: output path is required");
  const LoadedModel model = load_model_dir(options.model, options.embeddings);
  const ModelConfig& mc = model.saved.config;
  const PairDataset data = load_eval_dataset(options, model);
  const std::vector<Example> examples = make_examples(data, mc, model.resources);

  FeatureTable table;
  table.names = mc.feature_names();
  table.features = extract_lr_inputs(examples, model.saved.params, mc, model.embeddings);
  table.labels = labels_of(examples);
  if (table.features.cols() != mc.lr_input_width() || table.names.size() != mc.lr_input_width()) {
    throw std::logic_error("LR input width differs from the task formula");
  }
  std::ostringstream text;
  write_feature_table(text, table);
  write_text_file(out_path, text.str());
}

LogisticModel cmd_fit_classifier(const std::string& features_path, const std::string& out_path,
                                  std::optional<double> l2, std::ostream& out) {
  require_file("features", features_path);
  if (out_path.empty()) throw UsageError("out: output path is required");
  std::ifstream in(features_path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + features_path + "'");
  const FeatureTable table = read_feature_table(in, features_path);
  if (table.labels.empty()) throw UsageError("features: file has no rows");
  if (l2 && !(*l2 >= 0.0)) throw UsageError("l2: must be non-negative");
  const double penalty = l2.value_or(0.5 / static_cast<double>(table.labels.size()));
  const LogisticModel model = fit_logistic(table.features, table.labels, penalty);
  save_classifier(out_path, model);
  const AccuracyF1 fit = accuracy_f1(predict_labels(predict_scores(model, table.features)), table.labels);
  out << "classes\t" << model.num_classes << '\n';
  out << "train_accuracy\t" << format_metric(fit.accuracy) << '\n';
  return model;
}

void cmd_predict(const DataOptions& options, const std::string& classifier, const std::string& out_path) {
  if (out_path.empty()) throw UsageError("out: output path is required");
  const LogisticModel clf = load_classifier_checked(classifier);
  const LoadedModel model = load_model_dir(options.model, options.embeddings);
  const ModelConfig& mc = model.saved.config;
  const PairDataset data = load_eval_dataset(options, model);
  const std::vector<Example> examples = make_examples(data, mc, model.resources);
  const Matrix probs =
      classifier_probabilities(clf, extract_lr_inputs(examples, model.saved.params, mc, model.embeddings), mc);
  const std::vector<int> predicted = predict_labels(probs);

  std::ostringstream text;
  text << "index";
  for (std::size_t c = 0; c < probs.cols(); ++c) text << "\tp" << c;
  text << "\tpredicted\n";
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    text << i;
    for (std::size_t c = 0; c < probs.cols(); ++c) text << '\t' << format_double(probs(i, c));
    text << '\t' << predicted[i] << '\n';
  }
  write_text_file(out_path, text.str());
}

std::string unit_label(const Tokens& words, std::size_t level, std::size_t unit, std::size_t filter_width) {
  if (words.empty()) return "";
  const std::size_t reach = level * (filter_width - 1);
  const std::size_t first = unit >= reach ? unit - reach : 0;
  const std::size_t last = std::min(unit, words.size() - 1);
  if (first > last) return "";
  if (first == last) return words[first];
  if (last == first + 1) return words[first] + " " + words[last];
  return words[first] + " ... " + words[last];
}

std::vector<std::string> cmd_viz_attention(const DataOptions& options, std::size_t pair_index,
                                           const std::string& out_dir, bool image, std::ostream& out) {
  if (out_dir.empty()) throw UsageError("out_dir: output directory is required");
  const LoadedModel model = load_model_dir(options.model, options.embeddings);
  const ModelConfig& mc = model.saved.config;
  if (options.task && *options.task != mc.task) throw UsageError("task: differs from the model's task");
  require_file("data", options.data);
  const PairDataset data = parse_dataset(options.data, mc.task);
  if (pair_index >= data.pairs.size()) {
    throw UsageError("pair: index " + std::to_string(pair_index) + " out of range (dataset has " +
                     std::to_string(data.pairs.size()) + " pairs)");
  }

  // Attention does not depend on the extras, so zeros stand in for them.
  const SentencePair& pair = data.pairs[pair_index];
  Example ex;
  ex.views.push_back(pair);
  if (mc.num_pipelines() == 2) ex.views.push_back(nonover(pair));
  ex.extras.assign(mc.extras_width(), 0.0);
  const EncodedExample enc = encode_example(ex, model.embeddings, mc);
  const ForwardTrace trace = forward(enc.inputs, enc.extras, model.saved.params, mc);
  const PipelineTrace& pt = trace.pipelines.front();

  const std::size_t s = mc.sentence_len;
  const std::size_t w = mc.filter_width;
  const Tokens left(pair.s0.begin(), pair.s0.begin() + static_cast<std::ptrdiff_t>(pt.length[0]));
  const Tokens right(pair.s1.begin(), pair.s1.begin() + static_cast<std::ptrdiff_t>(pt.length[1]));
  // Units at `level` that touch real words; pooled maps are `s` wide.
  auto valid = [&](std::size_t len, std::size_t level, std::size_t width) {
    return std::min(len + level * (w - 1), width);
  };

  fs::create_directories(out_dir);
  std::vector<std::string> written;
  auto emit = [&](const std::string& name, const std::string& title, const Matrix& full, std::size_t level,
                  std::size_t width) {
    AttentionExport exp;
    exp.title = title;
    const std::size_t rows = valid(left.size(), level, width);
    const std::size_t cols = valid(right.size(), level, width);
    exp.comments.push_back("variant " + std::string(variant_name(mc.variant)) + ", pair " +
                           std::to_string(pair_index));
    exp.comments.push_back("padded " + std::to_string(full.rows()) + " x " + std::to_string(full.cols()) +
                           "; showing " + std::to_string(rows) + " x " + std::to_string(cols) + " unpadded units");
    for (std::size_t r = 0; r < rows; ++r) exp.row_labels.push_back(unit_label(left, level, r, w));
    for (std::size_t c = 0; c < cols; ++c) exp.col_labels.push_back(unit_label(right, level, c, w));
    exp.values = sub_matrix(full, rows, cols);
    std::ostringstream csv;
    write_attention_csv(csv, exp);
    const fs::path path = fs::path(out_dir) / (name + ".csv");
    write_text_file(path.string(), csv.str());
    written.push_back(path.string());
    if (image) {
      std::ostringstream pgm;
      write_attention_pgm(pgm, exp.values);
      const fs::path img = fs::path(out_dir) / (name + ".pgm");
      write_text_file(img.string(), pgm.str());
      written.push_back(img.string());
    }
  };

  emit("b1_input", "block 1 word-level attention", pt.word_attention, 0, s);
  for (std::size_t l = 0; l < pt.blocks.size(); ++l) {
    const std::string block = "b" + std::to_string(l + 2);
    const ConvBlockTrace& b = pt.blocks[l];
    if (has_input_attention(mc.variant)) {
      emit(block + "_input", "block " + std::to_string(l + 2) + " input-level attention", b.input_attention, l, s);
    } else {
      out << "notice\t" << block << ": " << variant_name(mc.variant) << " has no input-level attention; skipped\n";
    }
    if (has_output_attention(mc.variant)) {
      emit(block + "_conv", "block " + std::to_string(l + 2) + " conv-output attention", b.output_attention, l + 1,
           s + w - 1);
    } else {
      out << "notice\t" << block << ": " << variant_name(mc.variant)
          << " has no conv-output attention; skipped\n";
    }
  }
  for (const auto& f : written) out << "wrote\t" << f << '\n';
  return written;
}

}  // namespace abcnn
