#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "abcnn/core_math.hpp"
#include "abcnn/text_data.hpp"

namespace abcnn {

using StopwordSet = std::unordered_set<std::string>;

// Built-in English function-word list (the full list is in the README).
const StopwordSet& default_stopwords();

// Number of non-stopword tokens of q (with multiplicity) that occur in a.
std::size_t word_cnt(const Tokens& q, const Tokens& a, const StopwordSet& stopwords);

class IdfTable {
 public:
  IdfTable() = default;
  IdfTable(std::unordered_map<std::string, double> idf, std::size_t documents);

  // Unseen tokens get the smoothing floor ln(N + 1) + 1.
  double idf(const std::string& token) const;
  std::size_t documents() const { return documents_; }
  const std::unordered_map<std::string, double>& entries() const { return idf_; }

 private:
  std::unordered_map<std::string, double> idf_;
  std::size_t documents_ = 0;
};

// idf(t) = ln((N + 1) / (df(t) + 1)) + 1 over the given documents.
IdfTable build_idf(const std::vector<Tokens>& corpus);

// word_cnt with each matched q token weighted by its idf.
double wgt_word_cnt(const Tokens& q, const Tokens& a, const StopwordSet& stopwords, const IdfTable& idf);

enum class RougeKind { kRouge1, kRouge2, kRougeSu4 };

// Symmetric F1 over clipped multiset overlap of unigrams, bigrams, or
// unigrams plus skip-bigrams with at most four words skipped.
double rouge(const Tokens& s0, const Tokens& s1, RougeKind kind);

// Removes the overlap between the sentences. s0 drops every token whose type
// occurs in s1; s1 drops one occurrence (earliest first) per s0 token. A side
// left empty becomes the single token "<empty>".
SentencePair nonover(const SentencePair& pair);

// 1 iff either side contains no, not, nobody or isn't.
int negation_feature(const SentencePair& pair);

class NymLexicon {
 public:
  enum class Relation { kSynonym, kHypernym, kAntonym };

  // Throws ArgumentError if the pair is already stored under another relation.
  void add(Relation relation, const std::string& word, const std::string& other);

  bool synonyms(const std::string& a, const std::string& b) const;
  // True when `hypernym` is a hypernym of `word`.
  bool has_hypernym(const std::string& word, const std::string& hypernym) const;
  bool antonyms(const std::string& a, const std::string& b) const;
  bool empty() const { return synonyms_.empty() && hypernyms_.empty() && antonyms_.empty(); }

 private:
  std::set<std::pair<std::string, std::string>> synonyms_;   // ordered key
  std::set<std::pair<std::string, std::string>> hypernyms_;  // (word, hypernym)
  std::set<std::pair<std::string, std::string>> antonyms_;   // ordered key
};

// Lines "relation TAB word1 TAB word2" with relation in {syn, hyp, ant}.
NymLexicon read_nym_lexicon(std::istream& in, const std::string& source = "<stream>");
NymLexicon load_nym_lexicon(const std::string& path);

// Potential antonym pairs with their training frequencies.
class PapSet {
 public:
  void add(const std::string& a, const std::string& b, std::size_t count);
  bool contains(const std::string& a, const std::string& b) const;
  std::size_t size() const { return pairs_.size(); }
  const std::map<std::pair<std::string, std::string>, std::size_t>& pairs() const { return pairs_; }

 private:
  std::map<std::pair<std::string, std::string>, std::size_t> pairs_;
};

struct NymCounts {
  std::size_t syn = 0;
  std::size_t hyp0 = 0;
  std::size_t hyp1 = 0;
  std::size_t ant = 0;
};

// Expects NONOVER tokens. ant counts cross-sentence pairs found in the PAP
// set or listed as antonyms in the lexicon.
NymCounts nym_features(const SentencePair& nonover_pair, const NymLexicon& lexicon, const PapSet& pap);

// Mines cross-sentence NONOVER token pairs from contradiction and neutral
// training pairs, drops pairs seen in entailment pairs or related in the
// lexicon, and keeps those seen at least `min_count` times whose embedding
// cosine exceeds `min_cosine`. Tokens missing from the table are skipped.
PapSet extract_pap(const PairDataset& train, const EmbeddingTable& embeddings, const NymLexicon& lexicon,
                   std::size_t min_count = 2, double min_cosine = 0.4);

inline constexpr std::size_t kMtFeatureCount = 15;

// TSV rows "index TAB 15 reals"; indices must cover 0..expected_rows-1 once.
Matrix read_mt_sidecar(std::istream& in, std::size_t expected_rows, const std::string& source = "<stream>");
Matrix load_mt_sidecar(const std::string& path, std::size_t expected_rows);

// (len0, len1), plus NONOVER lengths when given.
Vector length_features(const SentencePair& pair, const SentencePair* nonover_pair = nullptr);

struct FeatureResources {
  const StopwordSet* stopwords = &default_stopwords();
  IdfTable idf;
  NymLexicon lexicon;
  PapSet pap;
};

// Task extras for every pair of the dataset (4 for AS, 20 for PI, 24 for
// TE). MT columns come from dataset.sidecar and are zero when it is absent.
Matrix compute_extras(const PairDataset& dataset, const FeatureResources& resources);

}  // namespace abcnn
