#include <gtest/gtest.h>

#include "storyweave/story_model.hpp"
#include "test_support.hpp"

using namespace storyweave;
using testing_support::TempDir;

namespace {

std::string record(const std::string& id, const std::string& text, const std::string& ts = "2016-07-05T10:00:00Z",
                   const std::string& hashtags = "[]") {
  return fmt::format(
      R"({{"doc_id":"{}","source":"twitter","text":"{}","timestamp":"{}","hashtags":{},"media":[{{"media_id":"m-{}","kind":"image","uri":"img/{}.png"}}],"retweets":3,"favorites":1}})",
      id, text, ts, hashtags, id, id);
}

CrawlSpec tdf_spec() {
  CrawlSpec s;
  s.event_name = "TDF2016";
  s.terms = {"tour de france", "le tour"};
  s.hashtags = {"#TDF2016", "#TDF"};
  s.span_start = parse_date("2016-06-01");
  s.span_end = parse_date("2017-01-01");
  return s;
}

SocialDocument make(const std::string& id, const std::string& text, const std::string& ts,
                    std::vector<std::string> hashtags = {}) {
  auto d = testing_support::doc(id, text, ts);
  d.hashtags = std::move(hashtags);
  return d;
}

}  // namespace

TEST(LoadCorpus, ThreeValidRecords) {
  TempDir dir;
  write_file_atomic(dir / "c.jsonl", record("d1", "a") + "\n" + record("d2", "b") + "\n" + record("d3", "c") + "\n");
  auto load = load_corpus(dir / "c.jsonl");
  EXPECT_EQ(load.corpus.size(), 3u);
  EXPECT_EQ(load.diagnostics.skipped, 0u);
  EXPECT_EQ(load.corpus.base_dir(), dir.path());
  EXPECT_EQ(load.corpus.resolve("img/d1.png"), dir.path() / "img/d1.png");
}

TEST(LoadCorpus, MalformedRecordSkippedWithLineNumber) {
  auto load = parse_corpus(record("d1", "a") + "\n{not json\n" + record("d2", "b") + "\n");
  EXPECT_EQ(load.corpus.size(), 2u);
  EXPECT_EQ(load.diagnostics.skipped, 1u);
  ASSERT_EQ(load.diagnostics.warnings.size(), 1u);
  EXPECT_NE(load.diagnostics.warnings[0].find("line 2"), std::string::npos);
}

TEST(LoadCorpus, EmptyFileIsEmptyCorpus) {
  TempDir dir;
  write_file_atomic(dir / "empty.jsonl", "");
  auto load = load_corpus(dir / "empty.jsonl");
  EXPECT_TRUE(load.corpus.empty());
  EXPECT_EQ(load.diagnostics.skipped, 0u);
}

TEST(LoadCorpus, UnreadableFileIsFatal) {
  TempDir dir;
  EXPECT_THROW(load_corpus(dir / "missing.jsonl"), IoError);
}

TEST(LoadCorpus, SchemaViolationsAreSkipped) {
  const std::string bad_source = R"({"doc_id":"x","source":"myspace","text":"","timestamp":"2016-07-05T10:00:00Z","hashtags":[],"media":[],"retweets":0,"favorites":0})";
  const std::string negative = R"({"doc_id":"y","source":"flickr","text":"","timestamp":"2016-07-05T10:00:00Z","hashtags":[],"media":[],"retweets":-1,"favorites":0})";
  const std::string bad_time = R"({"doc_id":"z","source":"youtube","text":"","timestamp":"yesterday","hashtags":[],"media":[],"retweets":0,"favorites":0})";
  auto load = parse_corpus(bad_source + "\n" + negative + "\n" + bad_time + "\n" + record("d1", "a") + "\n" + record("d1", "dup") + "\n");
  EXPECT_EQ(load.corpus.size(), 1u);
  EXPECT_EQ(load.diagnostics.skipped, 4u);
}

TEST(LoadCorpus, DeterministicAndRoundTrips) {
  const std::string text = record("d2", "b") + "\n" + record("d1", "a") + "\n";
  auto a = parse_corpus(text);
  auto b = parse_corpus(text);
  EXPECT_EQ(serialize_corpus(a.corpus), serialize_corpus(b.corpus));
  EXPECT_EQ(a.corpus.documents()[0].doc_id, "d2");
  EXPECT_EQ(serialize_corpus(parse_corpus(serialize_corpus(a.corpus)).corpus), serialize_corpus(a.corpus));
}

TEST(Corpus, RejectsDuplicateIdsAndLeavesCorpusUnchanged) {
  Corpus c;
  c.add(testing_support::doc("d1", "x", "2016-07-05T10:00:00Z", {"m1"}));
  EXPECT_THROW(c.add(testing_support::doc("d1", "y")), ValidationError);
  EXPECT_THROW(c.add(testing_support::doc("d2", "y", "2016-07-05T10:00:00Z", {"m1"})), ValidationError);
  EXPECT_THROW(c.add(testing_support::doc("d3", "y", "2016-07-05T10:00:00Z", {"m2", "m2"})), ValidationError);
  EXPECT_EQ(c.size(), 1u);
  EXPECT_EQ(c.find_media("m2"), nullptr);
  ASSERT_NE(c.media_owner("m1"), nullptr);
  EXPECT_EQ(c.media_owner("m1")->doc_id, "d1");
}

TEST(MediaRef, VideoUsesThumbnailForRaster) {
  MediaRef image{"i", MediaKind::image, "a.png", std::nullopt};
  MediaRef video{"v", MediaKind::video, "a.mp4", std::nullopt};
  MediaRef thumb{"t", MediaKind::video, "a.mp4", std::string("a.jpg")};
  EXPECT_EQ(image.raster_uri(), "a.png");
  EXPECT_EQ(video.raster_uri(), std::nullopt);
  EXPECT_EQ(thumb.raster_uri(), "a.jpg");
}

TEST(CrawlSpec, Validation) {
  auto s = tdf_spec();
  EXPECT_NO_THROW(s.validate());
  auto reversed = s;
  std::swap(reversed.span_start, reversed.span_end);
  EXPECT_THROW(reversed.validate(), ValidationError);
  auto empty = s;
  empty.terms.clear();
  empty.hashtags.clear();
  EXPECT_THROW(empty.validate(), ValidationError);
  auto nohash = s;
  nohash.hashtags = {"TDF"};
  EXPECT_THROW(nohash.validate(), ValidationError);
}

TEST(MatchesCrawlSpec, HashtagInSpan) {
  EXPECT_TRUE(matches_crawl_spec(make("d", "stage win", "2016-07-05T10:00:00Z", {"#TDF2016"}), tdf_spec()));
  EXPECT_TRUE(matches_crawl_spec(make("d", "stage win", "2016-07-05T10:00:00Z", {"tdf2016"}), tdf_spec()));
}

TEST(MatchesCrawlSpec, OutsideSpanIsFalse) {
  EXPECT_FALSE(matches_crawl_spec(make("d", "tour de france stage 9", "2017-02-01T10:00:00Z"), tdf_spec()));
}

TEST(MatchesCrawlSpec, NoTermNoHashtagIsFalse) {
  EXPECT_FALSE(matches_crawl_spec(make("d", "edinburgh fireworks", "2016-07-05T10:00:00Z", {"#edfest"}), tdf_spec()));
}

TEST(MatchesCrawlSpec, TermsMatchOnWordBoundariesCaseInsensitively) {
  EXPECT_TRUE(matches_crawl_spec(make("d", "Watching Le Tour today!", "2016-07-05T10:00:00Z"), tdf_spec()));
  EXPECT_FALSE(matches_crawl_spec(make("d", "le tourist season", "2016-07-05T10:00:00Z"), tdf_spec()));
  EXPECT_FALSE(matches_crawl_spec(make("d", "#tdfan", "2016-07-05T10:00:00Z", {"#TDFan"}), tdf_spec()));
}

TEST(MatchesCrawlSpec, SpanBoundsAreInclusiveDays) {
  auto s = tdf_spec();
  EXPECT_TRUE(matches_crawl_spec(make("d", "le tour", "2016-06-01T00:00:00Z"), s));
  EXPECT_TRUE(matches_crawl_spec(make("d", "le tour", "2017-01-01T23:59:59Z"), s));
  EXPECT_FALSE(matches_crawl_spec(make("d", "le tour", "2016-05-31T23:59:59Z"), s));
  EXPECT_FALSE(matches_crawl_spec(make("d", "le tour", "2017-01-02T00:00:00Z"), s));
}

TEST(FilterCorpus, AllMatchIsIdentity) {
  auto c = testing_support::corpus_of({make("a", "le tour", "2016-07-01T00:00:00Z"), make("b", "tour de france", "2016-07-02T00:00:00Z")});
  EXPECT_EQ(serialize_corpus(filter_corpus(c, tdf_spec())), serialize_corpus(c));
}

TEST(FilterCorpus, NoneMatchIsEmpty) {
  auto c = testing_support::corpus_of({make("a", "cats", "2016-07-01T00:00:00Z"), make("b", "dogs", "2016-07-02T00:00:00Z")});
  EXPECT_TRUE(filter_corpus(c, tdf_spec()).empty());
}

TEST(FilterCorpus, MixedKeepsMatchesInOrder) {
  auto c = testing_support::corpus_of({
      make("e", "le tour", "2016-07-01T00:00:00Z"),
      make("a", "cats", "2016-07-01T00:00:00Z"),
      make("d", "tour de france", "2015-07-01T00:00:00Z"),
      make("b", "sprint", "2016-07-09T00:00:00Z", {"#TDF"}),
      make("c", "dogs", "2016-07-01T00:00:00Z"),
  });
  const auto spec = tdf_spec();
  std::vector<std::string> oracle;
  for (const auto& d : c.documents()) {
    if (matches_crawl_spec(d, spec)) oracle.push_back(d.doc_id);
  }
  std::vector<std::string> kept;
  const auto filtered = filter_corpus(c, spec);
  for (const auto& d : filtered.documents()) kept.push_back(d.doc_id);
  EXPECT_EQ(kept, oracle);
  EXPECT_EQ(kept, (std::vector<std::string>{"e", "b"}));
}

TEST(FilterCorpus, PropertyIdempotentAndInSpan) {
  testing_support::Gen gen(7);
  const std::vector<std::string> words = {"le", "tour", "de", "france", "cats", "sprint", "stage"};
  for (int round = 0; round < 50; ++round) {
    Corpus c;
    const int n = gen.integer(0, 30);
    for (int i = 0; i < n; ++i) {
      std::string text;
      for (int w = gen.integer(1, 6); w > 0; --w) text += words[static_cast<std::size_t>(gen.integer(0, 6))] + " ";
      const auto ts = fmt::format("{}-{:02d}-15T12:00:00Z", gen.integer(2015, 2017), gen.integer(1, 12));
      std::vector<std::string> tags;
      if (gen.coin()) tags.push_back(gen.coin() ? "#tdf" : "#other");
      c.add(make(fmt::format("d{}", i), text, ts, tags));
    }
    const auto spec = tdf_spec();
    const auto once = filter_corpus(c, spec);
    EXPECT_EQ(serialize_corpus(filter_corpus(once, spec)), serialize_corpus(once));
    for (const auto& d : once.documents()) EXPECT_TRUE(in_span(d.timestamp, spec));
  }
}

TEST(Storylines, LoadWarnsOutsideThreeToFour) {
  const std::string two = R"({"story_id":"s2","title":"t","event_name":"e","segments":[{"segment_id":"a","description":"x"},{"segment_id":"b","description":"y"}]})";
  const std::string three = R"({"story_id":"s3","title":"t","event_name":"e","segments":[{"segment_id":"a","description":"x"},{"segment_id":"b","description":"y"},{"segment_id":"c","description":"z"}]})";
  auto load = parse_storylines(two + "\n" + three + "\n" + three + "\n");
  ASSERT_EQ(load.stories.size(), 2u);
  EXPECT_EQ(load.diagnostics.skipped, 1u);  // duplicate story_id
  EXPECT_EQ(load.diagnostics.warnings.size(), 2u);
  EXPECT_EQ(load.stories[1].segments[2].order, 3);
}

TEST(Storylines, EmptyDescriptionRejected) {
  const std::string bad = R"({"story_id":"s","title":"t","event_name":"e","segments":[{"segment_id":"a","description":""}]})";
  auto load = parse_storylines(bad);
  EXPECT_TRUE(load.stories.empty());
  EXPECT_EQ(load.diagnostics.skipped, 1u);
}

TEST(Illustrated, JsonRoundTripWithNoIllustration) {
  IllustratedStoryline s{"s1", {std::string("m1"), std::nullopt, std::string("m3")}, "bm25"};
  auto back = illustrated_from_json(to_json(s));
  EXPECT_EQ(back.story_id, "s1");
  EXPECT_EQ(back.method_name, "bm25");
  EXPECT_EQ(back.choices, s.choices);
  EXPECT_EQ(back.no_illustration_count(), 1u);
}

TEST(Illustrated, LoadDirectoryInPathOrder) {
  TempDir dir;
  write_file_atomic(dir / "b/s2.json", to_json(IllustratedStoryline{"s2", {std::nullopt}, "random"}).dump(2));
  write_file_atomic(dir / "a/s1.json", to_json(IllustratedStoryline{"s1", {std::string("m")}, "bm25"}).dump(2));
  auto all = load_illustrated(dir.path());
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(all[0].story_id, "s1");
  EXPECT_EQ(all[1].story_id, "s2");
  write_file_atomic(dir / "all.jsonl", serialize_illustrated(all));
  EXPECT_EQ(serialize_illustrated(load_illustrated(dir / "all.jsonl")), serialize_illustrated(all));
}

TEST(Illustrated, BadRecordNamesFileAndLine) {
  TempDir dir;
  write_file_atomic(dir / "x.jsonl", "{\"story_id\":\"s\",\"method\":\"m\",\"choices\":[]}\n{\"story_id\":\"s\"}\n");
  try {
    load_illustrated(dir / "x.jsonl");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("x.jsonl:2"), std::string::npos) << e.what();
  }
}
