#pragma once

#include <cstddef>
#include <istream>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "abcnn/core_math.hpp"

namespace abcnn {

enum class Task { kAnswerSelection, kParaphrase, kEntailment };

std::string_view task_name(Task task);  // "AS", "PI", "TE"
Task parse_task(std::string_view name);

// Integer class codes for TE labels.
enum EntailmentLabel : int { kEntailment = 0, kContradiction = 1, kNeutral = 2 };

using Tokens = std::vector<std::string>;

// Token standing in for a sentence whose words were all removed.
inline constexpr std::string_view kEmptyToken = "<empty>";

// Lowercases, splits on whitespace and strips leading/trailing characters
// that are not letters, digits or apostrophes. Empty pieces are dropped.
Tokens tokenize(std::string_view text);

class EmbeddingTable {
 public:
  EmbeddingTable(std::size_t dim, std::unordered_map<std::string, Vector> entries, Vector unk);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  bool contains(const std::string& token) const { return entries_.count(token) > 0; }
  // The shared unknown-word vector for any token not in the table.
  const Vector& lookup(const std::string& token) const;
  const Vector& unk_vector() const { return unk_; }
  void set_unk_vector(Vector unk);

 private:
  std::size_t dim_;
  std::unordered_map<std::string, Vector> entries_;
  Vector unk_;
};

// Whitespace-separated text format with an optional "count dim" header.
// The unknown-word vector is drawn once from U[-0.01, 0.01).
EmbeddingTable load_embeddings(const std::string& path, SeededRng& rng);
EmbeddingTable read_embeddings(std::istream& in, SeededRng& rng, const std::string& source = "<stream>");

inline constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

// d0 x s_pad map: the first min(|tokens|, max_len) columns hold embeddings,
// the rest are zero.
Matrix embed_sentence(const Tokens& tokens, const EmbeddingTable& table, std::size_t s_pad,
                      std::size_t max_len = kUnlimited);

struct SentencePair {
  Tokens s0;
  Tokens s1;
  int label = 0;
  std::optional<std::string> group_id;
};

struct PairDataset {
  Task task = Task::kAnswerSelection;
  std::vector<SentencePair> pairs;
  // Optional external per-pair features, one row per pair.
  std::optional<Matrix> sidecar;

  // Group ids in first-appearance order with the indices of their pairs.
  std::vector<std::pair<std::string, std::vector<std::size_t>>> groups() const;
};

// AS: group TAB question TAB candidate TAB {0,1}
// PI: {0,1} TAB s0 TAB s1
// TE: {entailment,contradiction,neutral} TAB s0 TAB s1
PairDataset parse_dataset(const std::string& path, Task task);
PairDataset read_dataset(std::istream& in, Task task, const std::string& source = "<stream>");

// Appends (label, s1, s0) for each PI pair, after all originals.
PairDataset augment_swap(const PairDataset& dataset);

}  // namespace abcnn
