#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "storyweave/text_retrieval.hpp"
#include "test_support.hpp"

using namespace storyweave;
using testing_support::corpus_of;
using testing_support::doc;

namespace {

// Frozen five-document fixture; every word is lowercase so whitespace splitting
// is a valid independent tokenizer for it.
Corpus fixture() {
  return corpus_of({
      doc("d1", "Fireworks over Edinburgh castle"),
      doc("d2", "castle esplanade crowds watch fireworks fireworks"),
      doc("d3", "cycling race stage nine"),
      doc("d4", "tour de france cycling stage finish in paris"),
      doc("d5", "the castle tattoo"),
  });
}

// Second BM25 implementation straight from the textbook formula.
std::vector<std::pair<std::string, double>> oracle_rank(const std::map<std::string, std::string>& docs, const std::string& query,
                                                        double k1 = 1.2, double b = 0.75) {
  auto words = [](const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string w; in >> w;) {
      for (auto& ch : w) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      out.push_back(w);
    }
    return out;
  };
  const double n = static_cast<double>(docs.size());
  double total = 0;
  for (const auto& [id, text] : docs) total += static_cast<double>(words(text).size());
  const double avg = total / n;
  const auto q = words(query);
  const std::set<std::string> terms(q.begin(), q.end());
  std::vector<std::pair<std::string, double>> out;
  for (const auto& [id, text] : docs) {
    const auto w = words(text);
    double score = 0;
    for (const auto& t : terms) {
      double df = 0;
      for (const auto& [other, other_text] : docs) {
        auto ow = words(other_text);
        df += std::find(ow.begin(), ow.end(), t) != ow.end() ? 1 : 0;
      }
      const double tf = static_cast<double>(std::count(w.begin(), w.end(), t));
      if (tf == 0) continue;
      const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
      score += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * static_cast<double>(w.size()) / avg));
    }
    if (score > 0) out.emplace_back(id, score);
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.second != y.second ? x.second > y.second : x.first < y.first; });
  return out;
}

std::map<std::string, std::string> fixture_texts() {
  std::map<std::string, std::string> m;
  const auto corpus = fixture();
  for (const auto& d : corpus.documents()) m[d.doc_id] = d.text;
  return m;
}

}  // namespace

TEST(Tokenize, SpecExamples) {
  EXPECT_EQ(tokenize("Fireworks over Edinburgh Castle!"), (std::vector<std::string>{"fireworks", "over", "edinburgh", "castle"}));
  EXPECT_EQ(tokenize("#TDF2016 sprint"), (std::vector<std::string>{"tdf2016", "sprint"}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(tokenize("!!! ... ##").empty());
  EXPECT_EQ(tokenize("stage-9,finish"), (std::vector<std::string>{"stage", "9", "finish"}));
}

TEST(BuildIndex, SingleDocCounts) {
  const auto index = build_index(corpus_of({doc("d1", "a b a")}));
  ASSERT_EQ(index.postings("a").size(), 1u);
  EXPECT_EQ(index.postings("a")[0].term_frequency, 2u);
  EXPECT_EQ(index.postings("b")[0].term_frequency, 1u);
  EXPECT_EQ(index.doc_length(0), 3u);
  EXPECT_EQ(index.doc_count(), 1u);
}

TEST(BuildIndex, EmptyCorpus) {
  const auto index = build_index(Corpus{});
  EXPECT_EQ(index.doc_count(), 0u);
  EXPECT_TRUE(index.all_postings().empty());
}

TEST(BuildIndex, SharedTermHasTwoPostings) {
  const auto index = build_index(corpus_of({doc("d1", "castle"), doc("d2", "the castle")}));
  EXPECT_EQ(index.postings("castle").size(), 2u);
}

TEST(BuildIndex, Invariants) {
  const auto index = build_index(fixture());
  EXPECT_EQ(index.doc_count(), 5u);
  double sum = 0;
  for (std::size_t d = 0; d < index.doc_count(); ++d) sum += static_cast<double>(index.doc_length(d));
  EXPECT_NEAR(index.avg_doc_length(), sum / 5.0, 1e-9);
  for (const auto& [term, list] : index.all_postings()) {
    for (const auto& p : list) EXPECT_LT(p.doc, index.doc_count()) << term;
  }
}

TEST(Bm25Score, AbsentTermAndEmptyQueryAreZero) {
  const auto index = build_index(fixture());
  EXPECT_EQ(bm25_score(index, {}, {"bicycle"}, "d1"), 0.0);
  EXPECT_EQ(bm25_score(index, {}, {}, "d1"), 0.0);
}

TEST(Bm25Score, UnknownDocThrows) {
  const auto index = build_index(fixture());
  EXPECT_THROW(bm25_score(index, {}, {"castle"}, "nope"), NotFoundError);
}

TEST(Bm25Score, TwoDocExample) {
  const auto index = build_index(corpus_of({doc("d1", "fireworks over castle"), doc("d2", "cycling race")}));
  // N=2, df=1: idf = ln(1.5/1.5 + 1) = ln 2; len 3, avg 2.5.
  const double expected = std::log(2.0) * 2.2 / (1.0 + 1.2 * (0.25 + 0.75 * 3.0 / 2.5));
  EXPECT_NEAR(bm25_score(index, {}, {"fireworks"}, "d1"), expected, 1e-12);
  EXPECT_EQ(bm25_score(index, {}, {"fireworks"}, "d2"), 0.0);
  const auto ranked = rank_documents(index, {}, "fireworks", 10);
  ASSERT_EQ(ranked.size(), 1u);
  EXPECT_EQ(ranked[0].doc_id, "d1");
}

TEST(Bm25Score, RepeatedQueryTermsCountOnce) {
  const auto index = build_index(fixture());
  EXPECT_DOUBLE_EQ(bm25_score(index, {}, {"castle", "castle"}, "d1"), bm25_score(index, {}, {"castle"}, "d1"));
}

TEST(RankDocuments, FrozenFixtureMatchesOracle) {
  const auto index = build_index(fixture());
  struct Case {
    std::string query;
    std::vector<std::pair<std::string, double>> expected;  // frozen hand evaluation
  };
  const std::vector<Case> cases = {
      {"fireworks castle", {{"d2", 1.637895504577}, {"d1", 1.540506694946}, {"d5", 0.644452337833}}},
      {"cycling stage", {{"d3", 1.906961606117}, {"d4", 1.405862205970}}},
      {"castle tattoo", {{"d5", 2.301978204389}, {"d1", 0.587025891887}, {"d2", 0.498232059501}}},
  };
  for (const auto& c : cases) {
    const auto got = rank_documents(index, {}, c.query, 10);
    const auto oracle = oracle_rank(fixture_texts(), c.query);
    ASSERT_EQ(got.size(), c.expected.size()) << c.query;
    ASSERT_EQ(oracle.size(), c.expected.size()) << c.query;
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].doc_id, c.expected[i].first) << c.query;
      EXPECT_EQ(oracle[i].first, c.expected[i].first) << c.query;
      EXPECT_NEAR(got[i].score, c.expected[i].second, 1e-9) << c.query;
      EXPECT_NEAR(got[i].score, oracle[i].second, 1e-12) << c.query;
    }
  }
}

TEST(RankDocuments, KLargerThanCorpusReturnsPositiveOnly) {
  const auto index = build_index(fixture());
  const auto ranked = rank_documents(index, {}, "castle", 100);
  EXPECT_EQ(ranked.size(), 3u);
  for (const auto& r : ranked) EXPECT_GT(r.score, 0.0);
}

TEST(RankDocuments, TruncatesToK) {
  const auto index = build_index(fixture());
  const auto ranked = rank_documents(index, {}, "castle", 2);
  ASSERT_EQ(ranked.size(), 2u);
  EXPECT_EQ(ranked[0].doc_id, rank_documents(index, {}, "castle", 10)[0].doc_id);
  EXPECT_THROW(rank_documents(index, {}, "castle", 0), ValidationError);
}

TEST(RankDocuments, TiesBreakByAscendingDocId) {
  const auto index = build_index(corpus_of({doc("zeta", "castle view"), doc("alpha", "castle view"), doc("mid", "castle view")}));
  const auto ranked = rank_documents(index, {}, "castle", 10);
  ASSERT_EQ(ranked.size(), 3u);
  EXPECT_EQ(ranked[0].doc_id, "alpha");
  EXPECT_EQ(ranked[1].doc_id, "mid");
  EXPECT_EQ(ranked[2].doc_id, "zeta");
}

TEST(Bm25Params, Validation) {
  EXPECT_THROW((Bm25Params{-0.1, 0.75}.validate()), ValidationError);
  EXPECT_THROW((Bm25Params{1.2, 1.5}.validate()), ValidationError);
  EXPECT_NO_THROW((Bm25Params{0.0, 0.0}.validate()));
}

TEST(Bm25Property, MonotoneInTermFrequency) {
  testing_support::Gen gen(11);
  for (int round = 0; round < 200; ++round) {
    // Padding keeps the length fixed while tf varies.
    const int len = gen.integer(2, 12);
    const int tf = gen.integer(1, len - 1);
    auto text = [&](int k) {
      std::string s;
      for (int i = 0; i < len; ++i) s += (i < k ? "castle " : "pad ");
      return s;
    };
    const auto background = doc("z", "other words here castle");
    const auto lo = build_index(corpus_of({doc("a", text(tf)), background}));
    const auto hi = build_index(corpus_of({doc("a", text(tf + 1)), background}));
    EXPECT_LE(bm25_score(lo, {}, {"castle"}, "a"), bm25_score(hi, {}, {"castle"}, "a") + 1e-12);
  }
}

TEST(Bm25Property, NonMatchingDocsNeverRankedAndDeterministic) {
  testing_support::Gen gen(12);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e", "f", "g", "h"};
  for (int round = 0; round < 100; ++round) {
    std::vector<SocialDocument> docs;
    std::map<std::string, std::string> texts;
    for (int i = gen.integer(1, 15); i > 0; --i) {
      std::string t;
      for (int w = gen.integer(1, 8); w > 0; --w) t += vocab[static_cast<std::size_t>(gen.integer(0, 7))] + " ";
      const auto id = fmt::format("d{:02d}", i);
      docs.push_back(doc(id, t));
      texts[id] = t;
    }
    const auto corpus = corpus_of(docs);
    const auto index = build_index(corpus);
    std::string query;
    for (int w = gen.integer(1, 3); w > 0; --w) query += vocab[static_cast<std::size_t>(gen.integer(0, 7))] + " ";
    const auto ranked = rank_documents(index, {}, query, 100);
    const auto q = tokenize(query);
    for (const auto& r : ranked) {
      const auto t = tokenize(texts[r.doc_id]);
      EXPECT_TRUE(std::any_of(q.begin(), q.end(), [&](const auto& term) { return std::find(t.begin(), t.end(), term) != t.end(); }));
    }
    const auto oracle = oracle_rank(texts, query);
    ASSERT_EQ(ranked.size(), oracle.size());
    std::map<std::string, double> oracle_score(oracle.begin(), oracle.end());
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      ASSERT_TRUE(oracle_score.count(ranked[i].doc_id));
      EXPECT_NEAR(ranked[i].score, oracle_score[ranked[i].doc_id], 1e-9);
      if (i > 0) {
        EXPECT_GE(ranked[i - 1].score, ranked[i].score);
        if (ranked[i - 1].score == ranked[i].score) {
          EXPECT_LT(ranked[i - 1].doc_id, ranked[i].doc_id);
        }
      }
    }
    const auto again = rank_documents(build_index(corpus), {}, query, 100);
    ASSERT_EQ(again.size(), ranked.size());
    for (std::size_t i = 0; i < again.size(); ++i) EXPECT_EQ(again[i].doc_id, ranked[i].doc_id);
  }
}
