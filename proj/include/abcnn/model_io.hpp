#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "abcnn/classifier_eval.hpp"
#include "abcnn/ling_features.hpp"
#include "abcnn/network.hpp"

namespace abcnn {

// %.17g: parses back to the identical double.
std::string format_double(double v);
// Strict full-string parse; throws FormatError mentioning `what`.
double parse_double(const std::string& text, const std::string& what);

struct SavedModel {
  ModelConfig config;
  ModelParams params;
  Vector unk_vector;  // the embedding table's unknown-word vector at training time
};

// Text format: "abcnn-model v1", "config <key> <value>" lines, then
// "tensor <name> <rows> <cols>" each followed by its rows.
void write_model(std::ostream& out, const SavedModel& model);
SavedModel read_model(std::istream& in, const std::string& source = "<stream>");
void save_model(const std::string& path, const SavedModel& model);
SavedModel load_model(const std::string& path);

void write_classifier(std::ostream& out, const LogisticModel& model);
LogisticModel read_classifier(std::istream& in, const std::string& source = "<stream>");
void save_classifier(const std::string& path, const LogisticModel& model);
LogisticModel load_classifier(const std::string& path);

// Header row of feature names plus "label", then one row per pair.
struct FeatureTable {
  std::vector<std::string> names;
  Matrix features;
  std::vector<int> labels;
};

void write_feature_table(std::ostream& out, const FeatureTable& table);
FeatureTable read_feature_table(std::istream& in, const std::string& source = "<stream>");

void write_idf(std::ostream& out, const IdfTable& idf);
IdfTable read_idf(std::istream& in, const std::string& source = "<stream>");
void write_pap(std::ostream& out, const PapSet& pap);
PapSet read_pap(std::istream& in, const std::string& source = "<stream>");

struct AttentionExport {
  std::string title;
  std::vector<std::string> comments;  // written as "# ..." lines
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  Matrix values;
};

// CSV with a corner cell, column labels, then one labelled row per matrix
// row. Labels containing commas or quotes are quoted.
void write_attention_csv(std::ostream& out, const AttentionExport& exp);
AttentionExport read_attention_csv(std::istream& in, const std::string& source = "<stream>");
// Binary PGM, 255 * (1 - v / max): darker means a stronger match.
void write_attention_pgm(std::ostream& out, const Matrix& values);

// Convenience wrappers throwing IoError on failure.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace abcnn
