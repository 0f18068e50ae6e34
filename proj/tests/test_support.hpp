#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "abcnn/core_math.hpp"
#include "abcnn/network.hpp"
#include "abcnn/text_data.hpp"
#include "abcnn/training.hpp"

namespace abcnn::testing {

inline Matrix random_matrix(SeededRng& rng, std::size_t rows, std::size_t cols, double lo = -1.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(lo, hi);
  return m;
}

// Random d x s map whose columns past `len` are zero, like a padded sentence.
inline Matrix random_padded(SeededRng& rng, std::size_t d, std::size_t s, std::size_t len) {
  Matrix m(d, s);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < len; ++c) m(r, c) = rng.uniform(-1.0, 1.0);
  return m;
}

inline EmbeddedPair random_pair(SeededRng& rng, std::size_t d, std::size_t s) {
  EmbeddedPair p;
  p.left_len = 1 + rng.next_below(s);
  p.right_len = 1 + rng.next_below(s);
  p.left = random_padded(rng, d, s, p.left_len);
  p.right = random_padded(rng, d, s, p.right_len);
  return p;
}

inline void randomize(ModelParams& params, SeededRng& rng, double scale = 0.5) {
  for_each_tensor(params, [&](const TensorRef&, Matrix& m) {
    for (double& v : m.values()) v = rng.uniform(-scale, scale);
  });
}

// Vocabulary "w0".."w{n-1}" with random vectors.
inline EmbeddingTable random_table(std::size_t dim, std::size_t words, std::uint64_t seed) {
  SeededRng rng(seed);
  std::unordered_map<std::string, Vector> entries;
  for (std::size_t i = 0; i < words; ++i) entries["w" + std::to_string(i)] = uniform_vector(rng, dim, -1.0, 1.0);
  return EmbeddingTable(dim, std::move(entries), uniform_vector(rng, dim, -0.01, 0.01));
}

inline Tokens random_sentence(SeededRng& rng, std::size_t len, std::size_t first_word, std::size_t word_count) {
  Tokens t;
  for (std::size_t i = 0; i < len; ++i) t.push_back("w" + std::to_string(first_word + rng.next_below(word_count)));
  return t;
}

// Binary pairs: positives repeat s0 as s1, negatives draw s1 from a
// disjoint half of the vocabulary. Extras are zero so only the network
// separates them.
inline std::vector<Example> separable_examples(const ModelConfig& config, std::size_t n, std::size_t vocab,
                                               std::uint64_t seed) {
  SeededRng rng(seed);
  std::vector<Example> out;
  const std::size_t half = vocab / 2;
  for (std::size_t i = 0; i < n; ++i) {
    SentencePair p;
    const std::size_t len = 2 + rng.next_below(config.sentence_len - 1);
    p.s0 = random_sentence(rng, len, 0, half);
    p.label = static_cast<int>(i % 2);
    p.s1 = p.label == 1 ? p.s0 : random_sentence(rng, 2 + rng.next_below(config.sentence_len - 1), half, half);
    if (config.task == Task::kAnswerSelection) p.group_id = "q" + std::to_string(i / 2);
    Example e;
    e.views.push_back(p);
    if (config.num_pipelines() == 2) e.views.push_back(p);
    e.extras.assign(config.extras_width(), 0.0);
    e.label = p.label;
    out.push_back(std::move(e));
  }
  return out;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("abcnn_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string write(const std::string& name, const std::string& content) const {
    std::ofstream(file(name), std::ios::binary) << content;
    return file(name);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Dataset, embedding and MT files for end-to-end runs. Positives repeat s0
// (AS: the question) as s1; negatives use a disjoint vocabulary half.
struct ToyCorpus {
  std::string train;
  std::string dev;
  std::string embeddings;
  std::string train_mt;
  std::string dev_mt;
};

inline std::string toy_rows(Task task, std::size_t n, std::uint64_t seed, std::size_t vocab) {
  SeededRng rng(seed);
  const std::size_t half = vocab / 2;
  auto sentence = [&](std::size_t first) {
    std::string out;
    for (const auto& w : random_sentence(rng, 2 + rng.next_below(4), first, half)) out += (out.empty() ? "" : " ") + w;
    return out;
  };
  static const char* te_labels[] = {"entailment", "contradiction", "neutral"};
  std::string rows;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string s0 = sentence(0);
    const int label = task == Task::kEntailment ? static_cast<int>(i % 3) : static_cast<int>(i % 2);
    const bool same = task == Task::kEntailment ? label == kEntailment : label == 1;
    const std::string s1 = same ? s0 : sentence(half);
    if (task == Task::kAnswerSelection)
      rows += "q" + std::to_string(i / 2) + "\t" + s0 + "\t" + s1 + "\t" + std::to_string(label) + "\n";
    else if (task == Task::kParaphrase)
      rows += std::to_string(label) + "\t" + s0 + "\t" + s1 + "\n";
    else
      rows += std::string(te_labels[label]) + "\t" + s0 + "\t" + s1 + "\n";
  }
  return rows;
}

inline std::string toy_mt(std::size_t n, std::uint64_t seed) {
  SeededRng rng(seed);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    out += std::to_string(i);
    for (int k = 0; k < 15; ++k) out += "\t" + std::to_string(rng.uniform(0.0, 1.0));
    out += "\n";
  }
  return out;
}

inline ToyCorpus write_toy_corpus(const TempDir& dir, Task task, std::size_t train_pairs = 16,
                                  std::size_t dev_pairs = 8, std::size_t dim = 8, std::size_t vocab = 40) {
  SeededRng rng(99);
  std::string emb = std::to_string(vocab) + " " + std::to_string(dim) + "\n";
  for (std::size_t i = 0; i < vocab; ++i) {
    emb += "w" + std::to_string(i);
    for (std::size_t k = 0; k < dim; ++k) emb += " " + std::to_string(rng.uniform(-1.0, 1.0));
    emb += "\n";
  }
  ToyCorpus c;
  c.embeddings = dir.write("emb.txt", emb);
  c.train = dir.write("train.tsv", toy_rows(task, train_pairs, 1, vocab));
  c.dev = dir.write("dev.tsv", toy_rows(task, dev_pairs, 2, vocab));
  c.train_mt = dir.write("train_mt.tsv", toy_mt(train_pairs, 3));
  c.dev_mt = dir.write("dev_mt.tsv", toy_mt(dev_pairs, 4));
  return c;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace abcnn::testing
