#include "abcnn/ling_features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "abcnn/errors.hpp"

namespace abcnn {

namespace {

// Keep in sync with the list in README.md.
constexpr const char* kStopwords[] = {
    "a",       "about",   "above",  "after",   "again",  "against", "all",     "am",      "an",      "and",
    "any",     "are",     "as",     "at",      "be",     "because", "been",    "before",  "being",   "below",
    "between", "both",    "but",    "by",      "can",    "could",   "did",     "do",      "does",    "doing",
    "down",    "during",  "each",   "few",     "for",    "from",    "further", "had",     "has",     "have",
    "having",  "he",      "her",    "here",    "hers",   "herself", "him",     "himself", "his",     "how",
    "i",       "if",      "in",     "into",    "is",     "it",      "its",     "itself",  "just",    "me",
    "more",    "most",    "my",     "myself",  "no",     "nor",     "not",     "now",     "of",      "off",
    "on",      "once",    "only",   "or",      "other",  "our",     "ours",    "ourselves", "out",   "over",
    "own",     "same",    "she",    "should",  "so",     "some",    "such",    "than",    "that",    "the",
    "their",   "theirs",  "them",   "themselves", "then", "there",  "these",   "they",    "this",    "those",
    "through", "to",      "too",    "under",   "until",  "up",      "very",    "was",     "we",      "were",
    "what",    "when",    "where",  "which",   "while",  "who",     "whom",    "why",     "will",    "with",
    "would",   "you",     "your",   "yours",   "yourself", "yourselves", "'s",  "s",
};

std::pair<std::string, std::string> unordered_key(const std::string& a, const std::string& b) {
  return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

template <typename Unit>
std::size_t clipped_overlap(const std::map<Unit, std::size_t>& a, const std::map<Unit, std::size_t>& b) {
  std::size_t overlap = 0;
  for (const auto& [unit, count] : a) {
    auto it = b.find(unit);
    if (it != b.end()) overlap += std::min(count, it->second);
  }
  return overlap;
}

using Unit = std::pair<std::string, std::string>;

// Unigrams are stored as (token, "") so all kinds share one key type.
std::map<Unit, std::size_t> rouge_units(const Tokens& s, RougeKind kind) {
  std::map<Unit, std::size_t> units;
  if (kind != RougeKind::kRouge2) {
    for (const auto& t : s) ++units[{t, ""}];
  }
  if (kind == RougeKind::kRouge2) {
    for (std::size_t i = 0; i + 1 < s.size(); ++i) ++units[{s[i], "\x1f" + s[i + 1]}];
  } else if (kind == RougeKind::kRougeSu4) {
    constexpr std::size_t kMaxSkip = 4;
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t j = i + 1; j < s.size() && j - i - 1 <= kMaxSkip; ++j) ++units[{s[i], "\x1f" + s[j]}];
  }
  return units;
}

std::string where(const std::string& source, std::size_t line_no) {
  return source + ":" + std::to_string(line_no);
}

}  // namespace

const StopwordSet& default_stopwords() {
  static const StopwordSet set(std::begin(kStopwords), std::end(kStopwords));
  return set;
}

std::size_t word_cnt(const Tokens& q, const Tokens& a, const StopwordSet& stopwords) {
  const std::unordered_set<std::string> answer(a.begin(), a.end());
  std::size_t n = 0;
  for (const auto& t : q)
    if (!stopwords.count(t) && answer.count(t)) ++n;
  return n;
}

IdfTable::IdfTable(std::unordered_map<std::string, double> idf, std::size_t documents)
    : idf_(std::move(idf)), documents_(documents) {}

double IdfTable::idf(const std::string& token) const {
  auto it = idf_.find(token);
  if (it != idf_.end()) return it->second;
  return std::log(static_cast<double>(documents_) + 1.0) + 1.0;
}

IdfTable build_idf(const std::vector<Tokens>& corpus) {
  if (corpus.empty()) throw ArgumentError("build_idf: empty corpus");
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& doc : corpus) {
    const std::unordered_set<std::string> types(doc.begin(), doc.end());
    for (const auto& t : types) ++df[t];
  }
  const double n = static_cast<double>(corpus.size());
  std::unordered_map<std::string, double> idf;
  for (const auto& [t, count] : df) idf[t] = std::log((n + 1.0) / (static_cast<double>(count) + 1.0)) + 1.0;
  return IdfTable(std::move(idf), corpus.size());
}

double wgt_word_cnt(const Tokens& q, const Tokens& a, const StopwordSet& stopwords, const IdfTable& idf) {
  const std::unordered_set<std::string> answer(a.begin(), a.end());
  double total = 0.0;
  for (const auto& t : q)
    if (!stopwords.count(t) && answer.count(t)) total += idf.idf(t);
  return total;
}

double rouge(const Tokens& s0, const Tokens& s1, RougeKind kind) {
  const auto u0 = rouge_units(s0, kind);
  const auto u1 = rouge_units(s1, kind);
  std::size_t n0 = 0;
  std::size_t n1 = 0;
  for (const auto& [_, c] : u0) n0 += c;
  for (const auto& [_, c] : u1) n1 += c;
  if (n0 == 0 || n1 == 0) return 0.0;
  const std::size_t overlap = clipped_overlap(u0, u1);
  return 2.0 * static_cast<double>(overlap) / static_cast<double>(n0 + n1);
}

SentencePair nonover(const SentencePair& pair) {
  SentencePair out = pair;
  const std::unordered_set<std::string> right_types(pair.s1.begin(), pair.s1.end());
  out.s0.clear();
  for (const auto& t : pair.s0)
    if (!right_types.count(t)) out.s0.push_back(t);

  std::unordered_map<std::string, std::size_t> left_counts;
  for (const auto& t : pair.s0) ++left_counts[t];
  out.s1.clear();
  for (const auto& t : pair.s1) {
    auto it = left_counts.find(t);
    if (it != left_counts.end() && it->second > 0) {
      --it->second;
      continue;
    }
    out.s1.push_back(t);
  }
  if (out.s0.empty()) out.s0 = {std::string(kEmptyToken)};
  if (out.s1.empty()) out.s1 = {std::string(kEmptyToken)};
  return out;
}

int negation_feature(const SentencePair& pair) {
  static const std::unordered_set<std::string> kTriggers = {"no", "not", "nobody", "isn't"};
  for (const Tokens* side : {&pair.s0, &pair.s1})
    for (const auto& t : *side)
      if (kTriggers.count(t)) return 1;
  return 0;
}

void NymLexicon::add(Relation relation, const std::string& word, const std::string& other) {
  const auto key = unordered_key(word, other);
  const bool related = synonyms_.count(key) || antonyms_.count(key) || hypernyms_.count({word, other}) ||
                       hypernyms_.count({other, word});
  auto conflict = [&](bool same_relation_present) {
    if (related && !same_relation_present) {
      throw ArgumentError("lexicon pair (" + word + ", " + other + ") appears under two relations");
    }
  };
  switch (relation) {
    case Relation::kSynonym:
      conflict(synonyms_.count(key) > 0);
      synonyms_.insert(key);
      break;
    case Relation::kHypernym:
      conflict(hypernyms_.count({word, other}) > 0);
      hypernyms_.insert({word, other});
      break;
    case Relation::kAntonym:
      conflict(antonyms_.count(key) > 0);
      antonyms_.insert(key);
      break;
  }
}

bool NymLexicon::synonyms(const std::string& a, const std::string& b) const {
  return synonyms_.count(unordered_key(a, b)) > 0;
}

bool NymLexicon::has_hypernym(const std::string& word, const std::string& hypernym) const {
  return hypernyms_.count({word, hypernym}) > 0;
}

bool NymLexicon::antonyms(const std::string& a, const std::string& b) const {
  return antonyms_.count(unordered_key(a, b)) > 0;
}

NymLexicon read_nym_lexicon(std::istream& in, const std::string& source) {
  NymLexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, '\t');) fields.push_back(f);
    if (fields.size() != 3) throw FormatError(where(source, line_no) + ": expected relation, word1, word2");
    NymLexicon::Relation rel;
    if (fields[0] == "syn") rel = NymLexicon::Relation::kSynonym;
    else if (fields[0] == "hyp") rel = NymLexicon::Relation::kHypernym;
    else if (fields[0] == "ant") rel = NymLexicon::Relation::kAntonym;
    else throw FormatError(where(source, line_no) + ": unknown relation '" + fields[0] + "'");
    const Tokens a = tokenize(fields[1]);
    const Tokens b = tokenize(fields[2]);
    if (a.size() != 1 || b.size() != 1) throw FormatError(where(source, line_no) + ": entries must be single words");
    try {
      lex.add(rel, a[0], b[0]);
    } catch (const ArgumentError& e) {
      throw FormatError(where(source, line_no) + ": " + e.what());
    }
  }
  return lex;
}

NymLexicon load_nym_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read lexicon '" + path + "'");
  return read_nym_lexicon(in, path);
}

void PapSet::add(const std::string& a, const std::string& b, std::size_t count) {
  pairs_[unordered_key(a, b)] += count;
}

bool PapSet::contains(const std::string& a, const std::string& b) const {
  return pairs_.count(unordered_key(a, b)) > 0;
}

NymCounts nym_features(const SentencePair& p, const NymLexicon& lexicon, const PapSet& pap) {
  NymCounts out;
  for (const auto& a : p.s0)
    for (const auto& b : p.s1) {
      if (lexicon.synonyms(a, b)) ++out.syn;
      if (pap.contains(a, b) || lexicon.antonyms(a, b)) ++out.ant;
    }
  for (const auto& a : p.s0)
    if (std::any_of(p.s1.begin(), p.s1.end(), [&](const std::string& b) { return lexicon.has_hypernym(a, b); }))
      ++out.hyp0;
  for (const auto& b : p.s1)
    if (std::any_of(p.s0.begin(), p.s0.end(), [&](const std::string& a) { return lexicon.has_hypernym(b, a); }))
      ++out.hyp1;
  return out;
}

PapSet extract_pap(const PairDataset& train, const EmbeddingTable& embeddings, const NymLexicon& lexicon,
                   std::size_t min_count, double min_cosine) {
  if (train.task != Task::kEntailment) throw ArgumentError("extract_pap needs a TE dataset");
  std::map<std::pair<std::string, std::string>, std::size_t> candidates;
  std::set<std::pair<std::string, std::string>> entailed;
  for (const auto& pair : train.pairs) {
    const SentencePair n = nonover(pair);
    for (const auto& a : n.s0) {
      for (const auto& b : n.s1) {
        if (a == kEmptyToken || b == kEmptyToken) continue;
        const auto key = unordered_key(a, b);
        if (pair.label == kEntailment) entailed.insert(key);
        else ++candidates[key];
      }
    }
  }
  PapSet out;
  for (const auto& [key, count] : candidates) {
    const auto& [a, b] = key;
    if (count < min_count || entailed.count(key)) continue;
    if (lexicon.synonyms(a, b) || lexicon.has_hypernym(a, b) || lexicon.has_hypernym(b, a)) continue;
    if (!embeddings.contains(a) || !embeddings.contains(b)) continue;
    if (cosine_similarity(embeddings.lookup(a), embeddings.lookup(b)) > min_cosine) out.add(a, b, count);
  }
  return out;
}

Matrix read_mt_sidecar(std::istream& in, std::size_t expected_rows, const std::string& source) {
  Matrix out(expected_rows, kMtFeatureCount);
  std::vector<bool> seen(expected_rows, false);
  std::string line;
  std::size_t line_no = 0;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, '\t');) fields.push_back(f);
    if (fields.size() != kMtFeatureCount + 1) {
      throw FormatError(where(source, line_no) + ": expected index and " + std::to_string(kMtFeatureCount) +
                        " values, found " + std::to_string(fields.size() - 1) + " values");
    }
    std::size_t index = 0;
    try {
      std::size_t used = 0;
      index = std::stoul(fields[0], &used);
      if (used != fields[0].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw FormatError(where(source, line_no) + ": bad pair index '" + fields[0] + "'");
    }
    if (index >= expected_rows || seen[index]) {
      throw FormatError(where(source, line_no) + ": pair index " + fields[0] + " out of range or repeated");
    }
    seen[index] = true;
    for (std::size_t k = 0; k < kMtFeatureCount; ++k) {
      try {
        std::size_t used = 0;
        const double v = std::stod(fields[k + 1], &used);
        if (used != fields[k + 1].size() || !std::isfinite(v)) throw std::invalid_argument("bad");
        out(index, k) = v;
      } catch (const std::exception&) {
        throw FormatError(where(source, line_no) + ": bad value '" + fields[k + 1] + "'");
      }
    }
    ++rows;
  }
  if (rows != expected_rows) {
    throw FormatError(source + ": expected " + std::to_string(expected_rows) + " rows, found " + std::to_string(rows));
  }
  return out;
}

Matrix load_mt_sidecar(const std::string& path, std::size_t expected_rows) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read MT feature file '" + path + "'");
  return read_mt_sidecar(in, expected_rows, path);
}

Vector length_features(const SentencePair& pair, const SentencePair* nonover_pair) {
  Vector out = {static_cast<double>(pair.s0.size()), static_cast<double>(pair.s1.size())};
  if (nonover_pair) {
    out.push_back(static_cast<double>(nonover_pair->s0.size()));
    out.push_back(static_cast<double>(nonover_pair->s1.size()));
  }
  return out;
}

Matrix compute_extras(const PairDataset& dataset, const FeatureResources& res) {
  std::size_t width = 0;
  switch (dataset.task) {
    case Task::kAnswerSelection: width = 4; break;
    case Task::kParaphrase: width = 20; break;
    case Task::kEntailment: width = 24; break;
  }
  if (dataset.sidecar &&
      (dataset.sidecar->rows() != dataset.pairs.size() || dataset.sidecar->cols() != kMtFeatureCount)) {
    throw DimensionError("MT sidecar must have one 15-value row per pair");
  }
  Matrix out(dataset.pairs.size(), width);
  for (std::size_t i = 0; i < dataset.pairs.size(); ++i) {
    const SentencePair& p = dataset.pairs[i];
    Vector row;
    if (dataset.task == Task::kAnswerSelection) {
      row = length_features(p);
      row.push_back(static_cast<double>(word_cnt(p.s0, p.s1, *res.stopwords)));
      row.push_back(wgt_word_cnt(p.s0, p.s1, *res.stopwords, res.idf));
    } else {
      row.assign(kMtFeatureCount, 0.0);
      if (dataset.sidecar) {
        for (std::size_t k = 0; k < kMtFeatureCount; ++k) row[k] = (*dataset.sidecar)(i, k);
      }
      if (dataset.task == Task::kParaphrase) {
        const Vector len = length_features(p);
        row.insert(row.end(), len.begin(), len.end());
        row.push_back(rouge(p.s0, p.s1, RougeKind::kRouge1));
        row.push_back(rouge(p.s0, p.s1, RougeKind::kRouge2));
        row.push_back(rouge(p.s0, p.s1, RougeKind::kRougeSu4));
      } else {
        const SentencePair n = nonover(p);
        const NymCounts nym = nym_features(n, res.lexicon, res.pap);
        row.push_back(negation_feature(p));
        row.push_back(static_cast<double>(nym.syn));
        row.push_back(static_cast<double>(nym.hyp0));
        row.push_back(static_cast<double>(nym.hyp1));
        row.push_back(static_cast<double>(nym.ant));
        const Vector len = length_features(p, &n);
        row.insert(row.end(), len.begin(), len.end());
      }
    }
    std::copy(row.begin(), row.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace abcnn
