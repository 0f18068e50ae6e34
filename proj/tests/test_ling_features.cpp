#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "abcnn/errors.hpp"
#include "abcnn/ling_features.hpp"
#include "test_support.hpp"

using namespace abcnn;

namespace {

SentencePair pair_of(const std::string& a, const std::string& b, int label = 0) {
  return SentencePair{tokenize(a), tokenize(b), label, {}};
}

std::string joined(const Tokens& t) {
  std::string out;
  for (const auto& w : t) out += (out.empty() ? "" : " ") + w;
  return out;
}

// Brute-force ROUGE: enumerate units as strings and count with a map.
double naive_rouge(const Tokens& a, const Tokens& b, int kind) {
  auto units = [&](const Tokens& s) {
    std::map<std::string, int> m;
    if (kind != 2)
      for (const auto& t : s) m["1:" + t]++;
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t j = i + 1; j < s.size(); ++j) {
        const bool take = kind == 2 ? j == i + 1 : kind == 3 && j - i <= 5;
        if (take) m["2:" + s[i] + "|" + s[j]]++;
      }
    return m;
  };
  const auto ua = units(a), ub = units(b);
  int na = 0, nb = 0, both = 0;
  for (const auto& [k, v] : ua) na += v;
  for (const auto& [k, v] : ub) nb += v;
  for (const auto& [k, v] : ua)
    if (ub.count(k)) both += std::min(v, ub.at(k));
  if (na == 0 || nb == 0) return 0.0;
  return 2.0 * both / (na + nb);
}

}  // namespace

TEST_CASE("word_cnt examples") {
  const StopwordSet& sw = default_stopwords();
  CHECK(word_cnt(tokenize("red car"), tokenize("blue boat"), sw) == 0);
  CHECK(word_cnt({"movie", "gross"}, {"the", "movie", "was"}, sw) == 1);
  CHECK(word_cnt({"waterboy"}, {"waterboy"}, sw) == 1);
  CHECK(word_cnt({"the", "movie"}, {"the", "movie"}, sw) == 1);
  CHECK(word_cnt({"movie", "movie"}, {"movie"}, sw) == 2);
}

TEST_CASE("default stopwords are function words") {
  const StopwordSet& sw = default_stopwords();
  CHECK(sw.size() >= 100);
  CHECK(sw.size() <= 140);
  CHECK(sw.count("the"));
  CHECK(!sw.count("movie"));
}

TEST_CASE("build_idf formula") {
  const std::vector<Tokens> corpus = {{"a", "b"}, {"a", "c"}, {"a"}};
  const IdfTable idf = build_idf(corpus);
  CHECK(idf.idf("a") == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(idf.idf("b") == doctest::Approx(std::log(2.0) + 1.0).epsilon(1e-12));
  CHECK(idf.idf("b") == doctest::Approx(1.693147).epsilon(1e-6));
  CHECK(idf.idf("zzz") == doctest::Approx(std::log(4.0) + 1.0).epsilon(1e-12));
  CHECK_THROWS_AS(build_idf({}), ArgumentError);
}

TEST_CASE("wgt_word_cnt examples") {
  const StopwordSet& sw = default_stopwords();
  const IdfTable idf({{"x", 2.0}, {"y", 1.5}, {"z", 0.5}}, 10);
  CHECK(wgt_word_cnt({"p"}, {"q"}, sw, idf) == 0.0);
  CHECK(wgt_word_cnt({"x"}, {"x"}, sw, idf) == 2.0);
  CHECK(wgt_word_cnt({"y", "z"}, {"z", "y"}, sw, idf) == 2.0);
  const IdfTable ones({{"red", 1.0}, {"car", 1.0}}, 3);
  CHECK(wgt_word_cnt({"red", "car"}, {"car", "red"}, sw, ones) == word_cnt({"red", "car"}, {"car", "red"}, sw));
}

TEST_CASE("rouge examples") {
  const Tokens s = {"a", "b", "c"};
  for (RougeKind k : {RougeKind::kRouge1, RougeKind::kRouge2, RougeKind::kRougeSu4}) {
    CHECK(rouge(s, s, k) == 1.0);
    CHECK(rouge(s, {"x", "y"}, k) == 0.0);
  }
  CHECK(rouge({"a", "b", "c"}, {"a", "b", "d"}, RougeKind::kRouge2) == 0.5);
  CHECK(rouge({"a"}, {"a"}, RougeKind::kRouge2) == 0.0);
}

TEST_CASE("rouge matches a naive counting oracle") {
  SeededRng rng(1);
  for (int t = 0; t < 100; ++t) {
    const Tokens a = testing::random_sentence(rng, 1 + rng.next_below(9), 0, 4);
    const Tokens b = testing::random_sentence(rng, 1 + rng.next_below(9), 0, 4);
    CHECK(rouge(a, b, RougeKind::kRouge1) == naive_rouge(a, b, 1));
    CHECK(rouge(a, b, RougeKind::kRouge2) == naive_rouge(a, b, 2));
    CHECK(rouge(a, b, RougeKind::kRougeSu4) == naive_rouge(a, b, 3));
    CHECK(rouge(a, b, RougeKind::kRougeSu4) == rouge(b, a, RougeKind::kRougeSu4));
  }
}

TEST_CASE("nonover reproduces the SICK examples") {
  const SentencePair zero = nonover(
      pair_of("children in red shirts are playing in the leaves", "three kids are sitting in the leaves"));
  CHECK(joined(zero.s0) == "children red shirts playing");
  CHECK(joined(zero.s1) == "three kids sitting");

  const SentencePair one =
      nonover(pair_of("three boys are jumping in the leaves", "three kids are jumping in the leaves"));
  CHECK(joined(one.s0) == "boys");
  CHECK(joined(one.s1) == "kids");

  const SentencePair two =
      nonover(pair_of("a man is jumping into an empty pool", "a man is jumping into a full pool"));
  CHECK(joined(two.s0) == "an empty");
  CHECK(joined(two.s1) == "a full");

  const SentencePair same = nonover(pair_of("a dog runs", "a dog runs"));
  CHECK(same.s0 == Tokens{"<empty>"});
  CHECK(same.s1 == Tokens{"<empty>"});
}

TEST_CASE("nonover left side shares no types with the original right side") {
  SeededRng rng(2);
  for (int t = 0; t < 50; ++t) {
    const SentencePair p{testing::random_sentence(rng, 1 + rng.next_below(6), 0, 6),
                         testing::random_sentence(rng, 1 + rng.next_below(6), 0, 6), 0, {}};
    const SentencePair n = nonover(p);
    for (const auto& w : n.s0) {
      if (w == kEmptyToken) continue;
      CHECK(std::find(p.s1.begin(), p.s1.end(), w) == p.s1.end());
    }
    CHECK(!n.s0.empty());
    CHECK(!n.s1.empty());
  }
}

TEST_CASE("negation feature") {
  CHECK(negation_feature(pair_of("the man isn't sleeping", "a man sleeps")) == 1);
  CHECK(negation_feature(pair_of("a cat", "a dog")) == 0);
  CHECK(negation_feature(pair_of("a cat", "nobody is here")) == 1);
}

TEST_CASE("nym features") {
  NymLexicon lex;
  CHECK(lex.empty());
  const SentencePair p{{"boys"}, {"kids"}, 0, {}};
  const NymCounts none = nym_features(p, lex, PapSet{});
  CHECK(none.syn + none.hyp0 + none.hyp1 + none.ant == 0);

  lex.add(NymLexicon::Relation::kSynonym, "boys", "kids");
  CHECK(nym_features(p, lex, PapSet{}).syn == 1);

  lex.add(NymLexicon::Relation::kHypernym, "dog", "animal");
  const NymCounts h = nym_features({{"dog"}, {"animal"}, 0, {}}, lex, PapSet{});
  CHECK(h.hyp0 == 1);
  CHECK(h.hyp1 == 0);

  PapSet pap;
  pap.add("empty", "full", 3);
  CHECK(nym_features({{"empty"}, {"full"}, 0, {}}, lex, pap).ant == 1);
  lex.add(NymLexicon::Relation::kAntonym, "up", "down");
  CHECK(nym_features({{"down"}, {"up"}, 0, {}}, lex, PapSet{}).ant == 1);
}

TEST_CASE("lexicon rejects a pair under two relations") {
  NymLexicon lex;
  lex.add(NymLexicon::Relation::kSynonym, "big", "large");
  CHECK_THROWS_AS(lex.add(NymLexicon::Relation::kAntonym, "large", "big"), ArgumentError);
}

TEST_CASE("lexicon file format") {
  std::istringstream in("syn\tboys\tkids\nhyp\tdog\tanimal\nant\tempty\tfull\n");
  const NymLexicon lex = read_nym_lexicon(in);
  CHECK(lex.synonyms("kids", "boys"));
  CHECK(lex.has_hypernym("dog", "animal"));
  CHECK(!lex.has_hypernym("animal", "dog"));
  CHECK(lex.antonyms("full", "empty"));

  std::istringstream bad("rel\ta\tb\n");
  CHECK_THROWS_AS(read_nym_lexicon(bad), FormatError);
}

TEST_CASE("extract_pap filters") {
  std::unordered_map<std::string, Vector> vecs = {
      {"empty", {1.0, 0.2}}, {"full", {1.0, 0.0}}, {"cat", {1.0, 0.0}}, {"banana", {0.0, 1.0}},
      {"sits", {0.9, 0.1}},  {"runs", {1.0, 0.0}}, {"big", {1.0, 0.0}}, {"large", {1.0, 0.05}}};
  const EmbeddingTable table(2, vecs, Vector{0.0, 0.0});
  PairDataset d;
  d.task = Task::kEntailment;
  CHECK(extract_pap(d, table, NymLexicon{}).size() == 0);

  d.pairs = {
      pair_of("an empty pool", "a full pool", kContradiction),
      pair_of("the empty glass", "the full glass", kNeutral),
      pair_of("a cat eats", "a banana eats", kContradiction),
      pair_of("a cat eats", "a banana eats", kContradiction),
      pair_of("he sits", "he runs", kContradiction),
      pair_of("a big dog", "a large dog", kContradiction),
      pair_of("a big dog", "a large dog", kContradiction),
      pair_of("he sits", "he runs", kEntailment),
  };
  NymLexicon lex;
  lex.add(NymLexicon::Relation::kSynonym, "big", "large");
  const PapSet pap = extract_pap(d, table, lex);
  CHECK(pap.contains("empty", "full"));
  CHECK(!pap.contains("cat", "banana"));   // cosine 0
  CHECK(!pap.contains("sits", "runs"));    // seen once, and in an entailment pair
  CHECK(!pap.contains("big", "large"));    // lexicon synonyms
  CHECK(!pap.contains("an", "a"));         // seen once
}

TEST_CASE("MT sidecar parsing") {
  std::string good;
  for (int i = 0; i < 10; ++i) {
    good += std::to_string(i);
    for (int k = 0; k < 15; ++k) good += "\t" + std::to_string(i * 0.5 + k);
    good += "\n";
  }
  std::istringstream in(good);
  const Matrix m = read_mt_sidecar(in, 10);
  CHECK(m.rows() == 10);
  CHECK(m.cols() == 15);
  CHECK(m(3, 2) == 3.5);

  std::istringstream short_row("0\t1\t2\t3\t4\t5\t6\t7\t8\t9\t10\t11\t12\t13\t14\n");
  try {
    read_mt_sidecar(short_row, 1, "mt.tsv");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("mt.tsv:1") != std::string::npos);
  }
  std::istringstream few(good);
  CHECK_THROWS_AS(read_mt_sidecar(few, 11), FormatError);
}

TEST_CASE("length features") {
  const SentencePair p = pair_of("a b c d e", "a b c d e f g");
  CHECK(length_features(p) == Vector{5, 7});
  const SentencePair sick =
      pair_of("three boys are jumping in the leaves", "three kids are jumping in the leaves");
  const SentencePair n = nonover(sick);
  CHECK(length_features(sick, &n) == Vector{7, 7, 1, 1});
  const SentencePair e = nonover(pair_of("x y", "x y"));
  CHECK(length_features(e)[0] == 1);
}

TEST_CASE("compute_extras layouts") {
  PairDataset as;
  as.task = Task::kAnswerSelection;
  as.pairs = {pair_of("who directed waterboy", "waterboy was directed by frank coraci", 1)};
  FeatureResources res;
  res.idf = build_idf({as.pairs[0].s1});
  const Matrix e = compute_extras(as, res);
  REQUIRE(e.cols() == 4);
  CHECK(e(0, 0) == 3);
  CHECK(e(0, 1) == 6);
  CHECK(e(0, 2) == 2);
  CHECK(e(0, 3) == doctest::Approx(2.0).epsilon(1e-15));

  PairDataset pi;
  pi.task = Task::kParaphrase;
  pi.pairs = {pair_of("a b c", "a b d")};
  const Matrix p = compute_extras(pi, res);
  REQUIRE(p.cols() == 20);
  CHECK(p(0, 0) == 0.0);
  CHECK(p(0, 15) == 3);
  CHECK(p(0, 18) == 0.5);

  PairDataset te;
  te.task = Task::kEntailment;
  te.pairs = {pair_of("the man is not sleeping", "the man is sleeping")};
  te.sidecar = Matrix(1, 15);
  te.sidecar->fill(0.25);
  const Matrix t = compute_extras(te, res);
  REQUIRE(t.cols() == 24);
  CHECK(t(0, 0) == 0.25);
  CHECK(t(0, 15) == 1);
  CHECK(t(0, 20) == 5);
  CHECK(t(0, 22) == 1);
  CHECK(t(0, 23) == 1);
}
