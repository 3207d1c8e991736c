#include <gtest/gtest.h>

#include <map>
#include <set>

#include "storyweave/synthetic.hpp"
#include "storyweave/illustrators.hpp"
#include "storyweave/text_retrieval.hpp"
#include "test_support.hpp"

using namespace storyweave;
using testing_support::TempDir;

namespace {

SyntheticEvent make_event(std::uint64_t seed, std::size_t docs = 300, std::size_t stories = 8) {
  SyntheticOptions o;
  o.seed = seed;
  o.n_docs = docs;
  o.n_stories = stories;
  return generate_synthetic_event(o);
}

std::set<std::string> planted_docs(const SyntheticEvent& ev) {
  std::set<std::string> out;
  for (const auto& story : ev.truth.stories()) {
    for (const auto& seg : story.segments) {
      for (const auto& r : seg.relevant) out.insert(ev.corpus.media_owner(r.media_id)->doc_id);
    }
  }
  return out;
}

}  // namespace

TEST(Synthetic, SeededDeterminism) {
  const auto a = make_event(7), b = make_event(7), c = make_event(8);
  EXPECT_EQ(serialize_corpus(a.corpus), serialize_corpus(b.corpus));
  EXPECT_EQ(serialize_ground_truth(a.truth), serialize_ground_truth(b.truth));
  ASSERT_EQ(a.media.size(), b.media.size());
  for (std::size_t i = 0; i < a.media.size(); ++i) {
    EXPECT_EQ(a.media[i].relative_path, b.media[i].relative_path);
    EXPECT_EQ(a.media[i].bytes, b.media[i].bytes);
  }
  EXPECT_NE(serialize_corpus(a.corpus), serialize_corpus(c.corpus));
}

TEST(Synthetic, WrittenFilesAreByteIdenticalAcrossRuns) {
  TempDir one, two;
  write_synthetic_event(make_event(3, 120, 4), one.path());
  write_synthetic_event(make_event(3, 120, 4), two.path());
  std::size_t files = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(one.path())) {
    if (!e.is_regular_file()) continue;
    ++files;
    const auto rel = std::filesystem::relative(e.path(), one.path());
    EXPECT_EQ(read_file(e.path()), read_file(two.path() / rel)) << rel;
  }
  EXPECT_GT(files, 6u);
}

TEST(Synthetic, OptionValidation) {
  EXPECT_THROW(make_event(1, 49, 1), ValidationError);
  EXPECT_THROW(make_event(1, 100, 0), ValidationError);
  EXPECT_THROW(make_event(1, 50, 20), ValidationError);
  EXPECT_NO_THROW(make_event(1, 50, 1));
}

TEST(Synthetic, Structure) {
  const auto ev = make_event(2, 400, 10);
  EXPECT_EQ(ev.corpus.size(), 400u);
  ASSERT_EQ(ev.stories.size(), 10u);
  ASSERT_EQ(ev.truth.stories().size(), 10u);
  for (std::size_t k = 0; k < ev.stories.size(); ++k) {
    const auto& story = ev.stories[k];
    EXPECT_GE(story.size(), 3u);
    EXPECT_LE(story.size(), 4u);
    const auto* truth = ev.truth.find(story.story_id);
    ASSERT_NE(truth, nullptr);
    ASSERT_EQ(truth->segments.size(), story.size());
    for (std::size_t s = 0; s < story.size(); ++s) {
      EXPECT_EQ(truth->segments[s].segment_id, story.segments[s].segment_id);
      EXPECT_GE(truth->segments[s].relevant.size(), 3u);
      int top = 0;
      for (const auto& r : truth->segments[s].relevant) {
        EXPECT_NE(ev.corpus.find_media(r.media_id), nullptr);
        EXPECT_TRUE(r.grade == 1 || r.grade == 2);
        top = std::max(top, r.grade);
      }
      EXPECT_EQ(top, 2);
    }
  }
  for (const auto& id : ev.decoy_docs) EXPECT_EQ(planted_docs(ev).count(id), 0u);
}

TEST(Synthetic, CrawlSpecKeepsPlantedAndDropsOutsiders) {
  const auto ev = make_event(4, 400, 8);
  const auto filtered = filter_corpus(ev.corpus, ev.spec);
  EXPECT_LT(filtered.size(), ev.corpus.size());
  for (const auto& id : planted_docs(ev)) EXPECT_NE(filtered.find_document(id), nullptr) << id;
}

TEST(Synthetic, RelevantDocOutranksBackground) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto ev = make_event(seed, 1200, 40);
    const auto corpus = filter_corpus(ev.corpus, ev.spec);
    const auto index = build_index(corpus);
    const auto planted = planted_docs(ev);
    const std::set<std::string> decoys(ev.decoy_docs.begin(), ev.decoy_docs.end());
    for (const auto& story : ev.stories) {
      const auto* truth = ev.truth.find(story.story_id);
      for (std::size_t s = 0; s < story.size(); ++s) {
        std::set<std::string> relevant;
        for (const auto& r : truth->segments[s].relevant) relevant.insert(corpus.media_owner(r.media_id)->doc_id);
        const auto tokens = tokenize(story.segments[s].description);
        double best_relevant = 0, best_background = 0;
        std::string background_id;
        for (const auto& d : corpus.documents()) {
          const double score = bm25_score(index, {}, tokens, d.doc_id);
          if (relevant.count(d.doc_id)) {
            best_relevant = std::max(best_relevant, score);
          } else if (!planted.count(d.doc_id) && !decoys.count(d.doc_id) && score > best_background) {
            best_background = score;
            background_id = d.doc_id;
          }
        }
        EXPECT_GT(best_relevant, best_background)
            << "seed " << seed << " " << story.segments[s].segment_id << " beaten by " << background_id;
      }
    }
  }
}

TEST(Synthetic, PlantedDuplicatesWithinHashThreshold) {
  const auto ev = make_event(5, 300, 8);
  std::map<std::string, std::string> bytes_of;
  for (const auto& m : ev.media) bytes_of[m.relative_path] = m.bytes;
  ASSERT_FALSE(ev.planted_duplicates.empty());
  for (const auto& [original, copy] : ev.planted_duplicates) {
    const auto a = decode_image_bytes(bytes_of.at(*ev.corpus.find_media(original)->raster_uri()));
    const auto b = decode_image_bytes(bytes_of.at(*ev.corpus.find_media(copy)->raster_uri()));
    EXPECT_LE(hamming_distance(perceptual_hash(a), perceptual_hash(b)), IllustratorConfig{}.duplicate_hamming_threshold)
        << original << " vs " << copy;
  }
}

TEST(Synthetic, GroundTruthRoundTrip) {
  const auto ev = make_event(6, 200, 5);
  const auto text = serialize_ground_truth(ev.truth);
  EXPECT_EQ(serialize_ground_truth(parse_ground_truth(text)), text);
  EXPECT_THROW(parse_ground_truth("{\"story_id\":1}\n"), ValidationError);
}

TEST(SimulateAnnotator, NoiseZeroEqualsGroundTruth) {
  const auto ev = make_event(9, 300, 8);
  for (const auto& story : ev.stories) {
    const auto* truth = ev.truth.find(story.story_id);
    IllustratedStoryline ill{story.story_id, {}, "oracle"};
    for (std::size_t s = 0; s < story.size(); ++s) ill.choices.push_back(truth->segments[s].relevant.front().media_id);
    ill.choices[1] = std::nullopt;
    const auto j = simulate_annotator(ev.truth, ill, 0.0, 1, "a1");
    for (std::size_t s = 0; s < story.size(); ++s) EXPECT_EQ(j.s[s], ev.truth.relevance(story.story_id, s, ill.choices[s]));
    for (std::size_t s = 1; s < story.size(); ++s) {
      EXPECT_EQ(j.t[s - 1], ev.truth.transition(story.story_id, s, ill.choices[s - 1], ill.choices[s]));
    }
    EXPECT_EQ(j.s[1], 0);
    const int expected = 1 + static_cast<int>(std::lround(4 * story_quality(j.s, j.t) / MetricParams{}.max_quality()));
    EXPECT_EQ(j.overall_rating, expected);
    EXPECT_EQ(j.method_name, "oracle");
    EXPECT_TRUE(validate_judgment(j, story.size()).empty());
  }
}

TEST(SimulateAnnotator, NoiseOneIsUniform) {
  const auto ev = make_event(10, 300, 8);
  std::map<int, int> counts;
  int total = 0;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    for (const auto& story : ev.stories) {
      IllustratedStoryline ill{story.story_id, std::vector<std::optional<std::string>>(story.size()), "none"};
      const auto j = simulate_annotator(ev.truth, ill, 1.0, seed, "a");
      for (int v : j.s) {
        ++counts[v];
        ++total;
      }
    }
  }
  for (int v = 0; v < 3; ++v) EXPECT_NEAR(counts[v] / static_cast<double>(total), 1.0 / 3.0, 0.03) << v;
  IllustratedStoryline ill{ev.stories[0].story_id, {std::nullopt}, "none"};
  EXPECT_THROW(simulate_annotator(ev.truth, ill, 1.5, 0, "a"), ValidationError);
}

TEST(GroundTruth, TransitionGrades) {
  GroundTruth gt;
  gt.add({"s", {{"s-1", {{"a", 2, 0}, {"b", 1, 5}}}, {"s-2", {{"c", 2, 0}, {"d", 2, 1}}}}});
  EXPECT_EQ(gt.relevance("s", 0, std::string("a")), 2);
  EXPECT_EQ(gt.relevance("s", 0, std::string("c")), 0);
  EXPECT_EQ(gt.relevance("s", 0, std::nullopt), 0);
  EXPECT_EQ(gt.relevance("missing", 0, std::string("a")), 0);
  EXPECT_EQ(gt.transition("s", 1, std::string("a"), std::string("c")), 2);
  EXPECT_EQ(gt.transition("s", 1, std::string("a"), std::string("d")), 1);
  EXPECT_EQ(gt.transition("s", 1, std::string("b"), std::string("zzz")), 0);
  EXPECT_EQ(gt.transition("s", 1, std::nullopt, std::string("c")), 0);
}
