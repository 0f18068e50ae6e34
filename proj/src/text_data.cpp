#include "abcnn/text_data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "abcnn/errors.hpp"

namespace abcnn {

namespace {

bool keep_char(unsigned char c) { return std::isalnum(c) || c == '\'' || c >= 0x80; }

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::string where(const std::string& source, std::size_t line_no) {
  return source + ":" + std::to_string(line_no);
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

bool parse_double(std::string_view text, double& out) {
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

bool is_count(std::string_view text) {
  return !text.empty() && std::all_of(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

std::string_view task_name(Task task) {
  switch (task) {
    case Task::kAnswerSelection: return "AS";
    case Task::kParaphrase: return "PI";
    case Task::kEntailment: return "TE";
  }
  return "?";
}

Task parse_task(std::string_view name) {
  std::string upper(name);
  for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper == "AS") return Task::kAnswerSelection;
  if (upper == "PI") return Task::kParaphrase;
  if (upper == "TE") return Task::kEntailment;
  throw ArgumentError("unknown task '" + std::string(name) + "' (expected AS, PI or TE)");
}

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::size_t lo = i;
    std::size_t hi = j;
    while (lo < hi && !keep_char(static_cast<unsigned char>(text[lo]))) ++lo;
    while (hi > lo && !keep_char(static_cast<unsigned char>(text[hi - 1]))) --hi;
    if (lo < hi) {
      std::string tok(text.substr(lo, hi - lo));
      for (char& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      out.push_back(std::move(tok));
    }
    i = j;
  }
  return out;
}

EmbeddingTable::EmbeddingTable(std::size_t dim, std::unordered_map<std::string, Vector> entries, Vector unk)
    : dim_(dim), entries_(std::move(entries)), unk_(std::move(unk)) {
  if (dim_ == 0) throw ArgumentError("embedding dimension must be positive");
  if (unk_.size() != dim_) throw DimensionError("unknown-word vector has wrong length");
  for (const auto& [token, vec] : entries_) {
    if (vec.size() != dim_) throw DimensionError("embedding for '" + token + "' has wrong length");
  }
}

const Vector& EmbeddingTable::lookup(const std::string& token) const {
  auto it = entries_.find(token);
  return it == entries_.end() ? unk_ : it->second;
}

void EmbeddingTable::set_unk_vector(Vector unk) {
  if (unk.size() != dim_) throw DimensionError("unknown-word vector has wrong length");
  unk_ = std::move(unk);
}

EmbeddingTable read_embeddings(std::istream& in, SeededRng& rng, const std::string& source) {
  std::unordered_map<std::string, Vector> entries;
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> fields;
  while (std::getline(in, line)) {
    ++line_no;
    fields.clear();
    std::istringstream ss(line);
    for (std::string f; ss >> f;) fields.push_back(std::move(f));
    if (fields.empty()) continue;
    if (line_no == 1 && fields.size() == 2 && is_count(fields[0]) && is_count(fields[1])) continue;
    const std::size_t this_dim = fields.size() - 1;
    if (this_dim == 0) throw FormatError(where(source, line_no) + ": token without vector");
    if (dim == 0) dim = this_dim;
    if (this_dim != dim) {
      throw FormatError(where(source, line_no) + ": expected " + std::to_string(dim) + " values, found " +
                        std::to_string(this_dim));
    }
    Vector vec(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      if (!parse_double(fields[k + 1], vec[k]) || !std::isfinite(vec[k])) {
        throw FormatError(where(source, line_no) + ": bad number '" + fields[k + 1] + "'");
      }
    }
    entries.insert_or_assign(fields[0], std::move(vec));
  }
  if (dim == 0) throw FormatError(source + ": no embeddings found");
  Vector unk = uniform_vector(rng, dim, -0.01, 0.01);
  return EmbeddingTable(dim, std::move(entries), std::move(unk));
}

EmbeddingTable load_embeddings(const std::string& path, SeededRng& rng) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read embeddings file '" + path + "'");
  return read_embeddings(in, rng, path);
}

Matrix embed_sentence(const Tokens& tokens, const EmbeddingTable& table, std::size_t s_pad,
                      std::size_t max_len) {
  const std::size_t n = std::min(tokens.size(), max_len);
  if (n == 0) throw ArgumentError("embed_sentence: empty sentence");
  if (s_pad < n) {
    throw ArgumentError("embed_sentence: pad width " + std::to_string(s_pad) + " below sentence length " +
                        std::to_string(n));
  }
  Matrix out(table.dim(), s_pad);
  for (std::size_t j = 0; j < n; ++j) out.set_column(j, table.lookup(tokens[j]));
  return out;
}

std::vector<std::pair<std::string, std::vector<std::size_t>>> PairDataset::groups() const {
  std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string id = pairs[i].group_id.value_or(std::to_string(i));
    auto [it, inserted] = index.try_emplace(id, out.size());
    if (inserted) out.emplace_back(id, std::vector<std::size_t>{});
    out[it->second].second.push_back(i);
  }
  return out;
}

PairDataset read_dataset(std::istream& in, Task task, const std::string& source) {
  PairDataset ds;
  ds.task = task;
  std::string raw;
  std::size_t line_no = 0;
  const std::size_t expected_cols = task == Task::kAnswerSelection ? 4 : 3;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = strip_cr(raw);
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != expected_cols) {
      throw FormatError(where(source, line_no) + ": expected " + std::to_string(expected_cols) +
                        " tab-separated columns, found " + std::to_string(fields.size()));
    }
    SentencePair pair;
    std::string_view label;
    std::string_view first;
    std::string_view second;
    if (task == Task::kAnswerSelection) {
      if (fields[0].empty()) throw FormatError(where(source, line_no) + ": empty group id");
      pair.group_id = std::string(fields[0]);
      first = fields[1];
      second = fields[2];
      label = fields[3];
    } else {
      label = fields[0];
      first = fields[1];
      second = fields[2];
    }
    if (task == Task::kEntailment) {
      if (label == "entailment") pair.label = kEntailment;
      else if (label == "contradiction") pair.label = kContradiction;
      else if (label == "neutral") pair.label = kNeutral;
      else throw FormatError(where(source, line_no) + ": invalid TE label '" + std::string(label) + "'");
    } else {
      if (label == "0") pair.label = 0;
      else if (label == "1") pair.label = 1;
      else throw FormatError(where(source, line_no) + ": invalid label '" + std::string(label) + "'");
    }
    pair.s0 = tokenize(first);
    pair.s1 = tokenize(second);
    if (pair.s0.empty() || pair.s1.empty()) {
      throw FormatError(where(source, line_no) + ": sentence has no tokens");
    }
    ds.pairs.push_back(std::move(pair));
  }
  return ds;
}

PairDataset parse_dataset(const std::string& path, Task task) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read dataset '" + path + "'");
  return read_dataset(in, task, path);
}

PairDataset augment_swap(const PairDataset& dataset) {
  if (dataset.task != Task::kParaphrase) throw ArgumentError("augment_swap applies to PI datasets only");
  PairDataset out = dataset;
  out.pairs.reserve(dataset.pairs.size() * 2);
  for (const auto& p : dataset.pairs) {
    SentencePair swapped = p;
    std::swap(swapped.s0, swapped.s1);
    out.pairs.push_back(std::move(swapped));
  }
  if (dataset.sidecar) {
    const Matrix& sc = *dataset.sidecar;
    Matrix doubled(sc.rows() * 2, sc.cols());
    for (std::size_t r = 0; r < sc.rows(); ++r) {
      for (std::size_t c = 0; c < sc.cols(); ++c) {
        doubled(r, c) = sc(r, c);
        doubled(r + sc.rows(), c) = sc(r, c);
      }
    }
    out.sidecar = std::move(doubled);
  }
  return out;
}

}  // namespace abcnn
