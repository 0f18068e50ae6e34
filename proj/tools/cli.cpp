#include "cli.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "abcnn/errors.hpp"
#include "abcnn/pipeline.hpp"

namespace abcnn {

namespace {

std::string dashed(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

struct DataFlags {
  DataOptions options;
  std::string task;

  void add_to(CLI::App* app, bool with_mt) {
    app->add_option("--model", options.model, "model directory written by train");
    app->add_option("--data", options.data, "dataset TSV");
    app->add_option("--task", task, "expected task (AS, PI or TE)");
    app->add_option("--embeddings", options.embeddings, "embedding file (default: the one used for training)");
    if (with_mt) {
      app->add_option("--mt", options.mt, "MT feature file for the dataset");
      app->add_flag("--no-mt", options.no_mt, "use zeros for MT features");
    }
  }

  DataOptions resolved() const {
    DataOptions o = options;
    if (!task.empty()) {
      try {
        o.task = parse_task(task);
      } catch (const ArgumentError& e) {
        throw UsageError(std::string("task: ") + e.what());
      }
    }
    return o;
  }
};

// Writes to `path`, or to `out` when the path is empty.
void emit_report(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) out << text;
  else write_text_file(path, text);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Attention-based CNN sentence-pair models", "abcnn"};
  app.require_subcommand(1);

  // train
  CLI::App* train = app.add_subcommand("train", "train a model and write its directory");
  std::string config_path;
  std::map<std::string, std::string> train_values;
  train->add_option("--config", config_path, "flat JSON run configuration");
  for (const auto& k : run_config_keys()) {
    CLI::Option* opt = train->add_option(dashed(k.key), train_values[k.key], k.help);
    if (k.is_flag) {
      // A bare flag means true; "--flag false" turns a default-on setting off.
      opt->expected(0, 1)->type_name("[true|false]");
    } else {
      opt->type_name("VALUE");
    }
  }

  // eval
  CLI::App* eval = app.add_subcommand("eval", "report task metrics on a dataset");
  DataFlags eval_flags;
  std::string eval_classifier;
  std::string eval_out;
  eval_flags.add_to(eval, true);
  eval->add_option("--classifier", eval_classifier, "score with this classifier instead of the network");
  eval->add_option("--out", eval_out, "write the report here instead of stdout");

  // extract-features
  CLI::App* extract = app.add_subcommand("extract-features", "write LR-layer inputs as TSV");
  DataFlags extract_flags;
  std::string extract_out;
  extract_flags.add_to(extract, true);
  extract->add_option("--out", extract_out, "output TSV");

  // fit-classifier
  CLI::App* fit = app.add_subcommand("fit-classifier", "fit logistic regression on extracted features");
  std::string fit_features;
  std::string fit_out;
  std::optional<double> fit_l2;
  fit->add_option("--features", fit_features, "features TSV from extract-features");
  fit->add_option("--out", fit_out, "output classifier file");
  fit->add_option("--l2", fit_l2, "L2 weight (default 1/(2*rows))");

  // predict
  CLI::App* predict = app.add_subcommand("predict", "write classifier predictions");
  DataFlags predict_flags;
  std::string predict_classifier;
  std::string predict_out;
  predict_flags.add_to(predict, true);
  predict->add_option("--classifier", predict_classifier, "classifier file from fit-classifier");
  predict->add_option("--out", predict_out, "output predictions TSV");

  // viz-attention
  CLI::App* viz = app.add_subcommand("viz-attention", "export attention matrices of one pair");
  DataFlags viz_flags;
  std::size_t viz_pair = 0;
  std::string viz_out;
  bool viz_image = false;
  viz_flags.add_to(viz, false);
  viz->add_option("--pair", viz_pair, "0-based pair index");
  viz->add_option("--out-dir", viz_out, "output directory");
  viz->add_flag("--image", viz_image, "also write grayscale PGM images");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (*train) {
      RunConfig config;
      if (!config_path.empty()) {
        std::ifstream in(config_path, std::ios::binary);
        if (!in) throw UsageError("config: cannot read " + config_path);
        std::ostringstream text;
        text << in.rdbuf();
        config = run_config_from_json(text.str(), config_path);
      }
      for (const auto& k : run_config_keys()) {
        if (train->count(dashed(k.key)) == 0) continue;
        const std::string& value = train_values[k.key];
        set_run_config_field(config, k.key, k.is_flag && value.empty() ? "true" : value);
      }
      cmd_train(config, out);
    } else if (*eval) {
      std::ostringstream report;
      cmd_eval(eval_flags.resolved(), eval_classifier, report);
      emit_report(report.str(), eval_out, out);
    } else if (*extract) {
      cmd_extract_features(extract_flags.resolved(), extract_out);
    } else if (*fit) {
      cmd_fit_classifier(fit_features, fit_out, fit_l2, out);
    } else if (*predict) {
      cmd_predict(predict_flags.resolved(), predict_classifier, predict_out);
    } else if (*viz) {
      cmd_viz_attention(viz_flags.resolved(), viz_pair, viz_out, viz_image, out);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace abcnn
