#pragma once

// Seeded synthetic event: a corpus with planted relevant media per segment,
// re-encoded duplicates, per-story posting peaks, concept and embedding
// sidecars, and the ground truth needed to simulate annotators.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "storyweave/common.hpp"
#include "storyweave/image_io.hpp"
#include "storyweave/quality_metric.hpp"
#include "storyweave/story_model.hpp"
#include "storyweave/visual_features.hpp"

namespace storyweave {

struct RelevantMedia {
  std::string media_id;
  int grade = 2;  // segment relevance, 1 or 2
  int group = 0;  // visual palette group; equal groups make coherent transitions
};

struct SegmentTruth {
  std::string segment_id;
  std::vector<RelevantMedia> relevant;
};

struct StoryTruth {
  std::string story_id;
  std::vector<SegmentTruth> segments;
};

class GroundTruth {
 public:
  void add(StoryTruth story) {
    index_.insert_or_assign(story.story_id, stories_.size());
    stories_.push_back(std::move(story));
  }

  const std::vector<StoryTruth>& stories() const { return stories_; }

  const StoryTruth* find(std::string_view story_id) const {
    auto it = index_.find(std::string(story_id));
    return it == index_.end() ? nullptr : &stories_[it->second];
  }

  // Relevance of `media_id` for segment `segment` of the story; 0 when unlisted.
  int relevance(std::string_view story_id, std::size_t segment, const std::optional<std::string>& media_id) const {
    const auto* r = lookup(story_id, segment, media_id);
    return r ? r->grade : 0;
  }

  // 0 unless both sides are relevant; 2 within one palette group, else 1.
  int transition(std::string_view story_id, std::size_t segment, const std::optional<std::string>& prev,
                 const std::optional<std::string>& cur) const {
    const auto* a = lookup(story_id, segment - 1, prev);
    const auto* b = lookup(story_id, segment, cur);
    if (!a || !b) return 0;
    return a->group == b->group ? 2 : 1;
  }

 private:
  const RelevantMedia* lookup(std::string_view story_id, std::size_t segment, const std::optional<std::string>& media_id) const {
    if (!media_id) return nullptr;
    const auto* story = find(story_id);
    if (!story || segment >= story->segments.size()) return nullptr;
    for (const auto& r : story->segments[segment].relevant) {
      if (r.media_id == *media_id) return &r;
    }
    return nullptr;
  }

  std::vector<StoryTruth> stories_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline json to_json(const StoryTruth& s) {
  json segs = json::array();
  for (const auto& seg : s.segments) {
    json rel = json::array();
    for (const auto& r : seg.relevant) rel.push_back({{"media_id", r.media_id}, {"grade", r.grade}, {"group", r.group}});
    segs.push_back({{"segment_id", seg.segment_id}, {"relevant", std::move(rel)}});
  }
  return {{"story_id", s.story_id}, {"segments", std::move(segs)}};
}

inline StoryTruth story_truth_from_json(const json& j) {
  StoryTruth s;
  s.story_id = detail::require<std::string>(j, "story_id");
  for (const auto& seg : j.at("segments")) {
    SegmentTruth t{detail::require<std::string>(seg, "segment_id"), {}};
    for (const auto& r : seg.at("relevant")) {
      t.relevant.push_back({detail::require<std::string>(r, "media_id"), detail::require<int>(r, "grade"), detail::require<int>(r, "group")});
    }
    s.segments.push_back(std::move(t));
  }
  return s;
}

inline std::string serialize_ground_truth(const GroundTruth& gt) {
  std::string out;
  for (const auto& s : gt.stories()) out += to_json(s).dump() + "\n";
  return out;
}

inline GroundTruth parse_ground_truth(std::string_view text) {
  GroundTruth gt;
  auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
    try {
      gt.add(story_truth_from_json(json::parse(lines[i])));
    } catch (const std::exception& e) {
      throw ValidationError(fmt::format("ground truth line {}: {}", i + 1, e.what()));
    }
  }
  return gt;
}

inline GroundTruth load_ground_truth(const std::filesystem::path& path) { return parse_ground_truth(read_file(path)); }

struct SyntheticOptions {
  std::uint64_t seed = 1;
  std::size_t n_docs = 400;
  std::size_t n_stories = 8;
  int image_size = 32;
  int duplicate_jpeg_quality = 70;
};

struct MediaFile {
  std::string relative_path;
  std::string bytes;
};

struct SyntheticEvent {
  CrawlSpec spec;
  Corpus corpus;
  std::vector<Storyline> stories;
  std::vector<ConceptAnnotation> concepts;  // corpus media order
  std::vector<Embedding> embeddings;        // corpus media order
  GroundTruth truth;
  std::vector<MediaFile> media;
  std::vector<std::pair<std::string, std::string>> planted_duplicates;  // (original, re-encoded) media ids
  std::vector<std::string> decoy_docs;  // planted irrelevant documents worded like a segment
};

namespace detail {

class SynthRng {
 public:
  explicit SynthRng(std::uint64_t seed) : engine_(seed) {}

  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
  int between(int lo, int hi) { return lo + static_cast<int>(below(static_cast<std::size_t>(hi - lo + 1))); }
  double unit() { return static_cast<double>(engine_() >> 11) * (1.0 / 9007199254740992.0); }
  bool chance(double p) { return unit() < p; }
  double normal() {
    // Box-Muller; one value per call keeps the stream simple to reason about.
    const double u1 = std::max(unit(), 1e-300), u2 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }
  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }

 private:
  std::mt19937_64 engine_;
};

inline std::string make_word(SynthRng& rng, std::set<std::string>& used) {
  static const char* consonants = "bdfgklmnprstvz";
  static const char* vowels = "aeiou";
  for (;;) {
    std::string w;
    const int syllables = rng.between(2, 3);
    for (int i = 0; i < syllables; ++i) {
      w += consonants[rng.below(14)];
      w += vowels[rng.below(5)];
    }
    if (used.insert(w).second) return w;
  }
}

inline Rgb palette_color(SynthRng& rng) {
  return {static_cast<std::uint8_t>(rng.between(30, 225)), static_cast<std::uint8_t>(rng.between(30, 225)),
          static_cast<std::uint8_t>(rng.between(30, 225))};
}

// Textured image around a base colour: a product of sinusoids modulates
// brightness so difference hashes of unrelated images disagree.
inline ImagePixels textured_image(SynthRng& rng, Rgb base, int size) {
  const double fx = 0.15 + 0.5 * rng.unit(), fy = 0.15 + 0.5 * rng.unit();
  const double px = 6.283185307179586 * rng.unit(), py = 6.283185307179586 * rng.unit();
  const double amp = 35.0 + 20.0 * rng.unit();
  ImagePixels img(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double m = amp * std::sin(fx * x + px) * std::cos(fy * y + py);
      auto ch = [&](std::uint8_t c) { return static_cast<std::uint8_t>(std::clamp(std::lround(c + m), 0L, 255L)); };
      img.at(x, y) = {ch(base.r), ch(base.g), ch(base.b)};
    }
  }
  return img;
}

inline std::string join_words(const std::vector<std::string>& words) {
  std::string s;
  for (const auto& w : words) {
    if (!s.empty()) s += ' ';
    s += w;
  }
  return s;
}

}  // namespace detail

// Planted per segment: a primary document (grade 2, story palette), a repost of
// the same image re-encoded as JPEG (grade 2, same palette) and a partial match
// (grade 1, off-palette). Each story draws a difficulty: on hard segments the
// primary and its repost carry one topic word each, and an irrelevant decoy
// using the full wording may compete. The remainder are distractors, story
// chatter around each story's peak day, and a few documents outside the crawl
// spec.
inline SyntheticEvent generate_synthetic_event(const SyntheticOptions& options) {
  using namespace std::chrono;
  if (options.n_docs < 50) throw ValidationError("generate_synthetic_event: n_docs must be >= 50");
  if (options.n_stories < 1) throw ValidationError("generate_synthetic_event: n_stories must be >= 1");
  detail::SynthRng rng(options.seed);
  std::set<std::string> used{"synthfest"};

  SyntheticEvent ev;
  ev.spec.event_name = "SynthFest";
  ev.spec.terms = {"synthfest", "synth fest"};
  ev.spec.hashtags = {"#synthfest"};
  ev.spec.span_start = sys_days{year{2024} / 8 / 1};
  ev.spec.span_end = sys_days{year{2024} / 8 / 21};
  const int span_days = (ev.spec.span_end - ev.spec.span_start).count() + 1;

  std::vector<std::string> filler;
  for (int i = 0; i < 150; ++i) filler.push_back(detail::make_word(rng, used));
  const std::vector<std::string> generic_concepts = {"person", "crowd", "street", "sky", "car", "unicycle",
                                                     "bathing_cap", "ballplayer", "tree", "building", "flag", "bicycle"};
  constexpr std::size_t embedding_dim = 16;

  struct PlannedDoc {
    std::string text;
    std::vector<std::string> hashtags;
    Timestamp timestamp;
    std::int64_t retweets = 0;
    std::optional<MediaKind> media;  // nullopt: text only
    bool thumbnail = true;
    std::optional<ImagePixels> image;
    bool jpeg = false;
    int duplicate_of = -1;  // planned-doc index whose image this re-encodes
    std::vector<Concept> concepts;
    std::vector<double> embedding;
    // ground-truth slot
    int story = -1, segment = -1, grade = 0, group = 0;
    bool decoy = false;
  };
  std::vector<PlannedDoc> planned;

  auto timestamp_near = [&](int day, double spread) {
    int d = day + static_cast<int>(std::lround(spread * rng.normal()));
    d = std::clamp(d, 0, span_days - 1);
    return Timestamp{ev.spec.span_start + days{d}} + seconds{static_cast<long>(rng.below(86400))};
  };
  auto random_vector = [&](double scale) {
    std::vector<double> v(embedding_dim);
    for (auto& x : v) x = scale * rng.normal();
    return v;
  };
  auto fillers = [&](int count) {
    std::vector<std::string> w;
    for (int i = 0; i < count; ++i) w.push_back(rng.pick(filler));
    return w;
  };

  std::vector<int> peak_day(options.n_stories);
  std::vector<std::string> title_word(options.n_stories);
  std::size_t planted_count = 0;
  std::vector<std::vector<std::vector<std::string>>> topic_words(options.n_stories);
  for (std::size_t k = 0; k < options.n_stories; ++k) {
    Storyline story;
    story.story_id = fmt::format("story-{:02d}", k + 1);
    story.event_name = ev.spec.event_name;
    title_word[k] = detail::make_word(rng, used);
    story.title = fmt::format("The {} story", title_word[k]);
    peak_day[k] = static_cast<int>(rng.below(static_cast<std::size_t>(span_days)));
    const int segments = rng.chance(0.5) ? 3 : 4;
    for (int s = 0; s < segments; ++s) {
      std::vector<std::string> topic = {detail::make_word(rng, used), detail::make_word(rng, used), detail::make_word(rng, used)};
      StorySegment seg{fmt::format("{}-s{}", story.story_id, s + 1), detail::join_words(topic) + " " + title_word[k], s + 1};
      story.segments.push_back(seg);
      topic_words[k].push_back(topic);
      planted_count += 4;
    }
    ev.stories.push_back(std::move(story));
  }
  if (planted_count + 10 > options.n_docs) {
    throw ValidationError(fmt::format("generate_synthetic_event: {} stories need at least {} documents", options.n_stories, planted_count + 10));
  }

  for (std::size_t k = 0; k < options.n_stories; ++k) {
    const Rgb story_palette = detail::palette_color(rng);
    const auto centroid = random_vector(3.0);
    // Share of segments whose primary document is worded weakly.
    const double difficulty = rng.unit();
    for (std::size_t s = 0; s < topic_words[k].size(); ++s) {
      const auto& topic = topic_words[k][s];
      const bool hard = rng.chance(difficulty);
      const std::string seg_concept = "c_" + topic[0];
      auto near_centroid = [&](double noise) {
        auto v = centroid;
        for (auto& x : v) x += noise * rng.normal();
        return v;
      };
      PlannedDoc primary;
      auto words = hard ? std::vector<std::string>{topic[2]} : topic;
      words.push_back(title_word[k]);
      for (auto& w : fillers(2)) words.push_back(w);
      rng.shuffle(words);
      primary.text = "synthfest " + detail::join_words(words);
      primary.hashtags = {"#synthfest"};
      primary.timestamp = timestamp_near(peak_day[k], 1.0);
      primary.retweets = rng.between(40, 120);
      primary.media = MediaKind::image;
      primary.image = detail::textured_image(rng, story_palette, options.image_size);
      primary.concepts = {{seg_concept, 0.9}, {"c_" + title_word[k], 0.7}, {"person", 0.4}};
      primary.embedding = near_centroid(0.3);
      primary.story = static_cast<int>(k);
      primary.segment = static_cast<int>(s);
      primary.grade = 2;
      primary.group = static_cast<int>(k);
      const int primary_index = static_cast<int>(planned.size());
      planned.push_back(primary);

      PlannedDoc repost = primary;
      auto repost_words = hard ? std::vector<std::string>{topic[1]} : topic;
      for (auto& w : fillers(3)) repost_words.push_back(w);
      rng.shuffle(repost_words);
      repost.text = detail::join_words(repost_words) + " #synthfest";
      repost.timestamp = timestamp_near(peak_day[k], 1.0);
      repost.retweets = rng.between(10, 60);
      repost.jpeg = true;
      repost.duplicate_of = primary_index;
      repost.embedding = near_centroid(0.3);
      planned.push_back(repost);

      PlannedDoc partial;
      auto partial_words = std::vector<std::string>{topic[0], topic[1]};
      for (auto& w : fillers(4)) partial_words.push_back(w);
      rng.shuffle(partial_words);
      partial.text = "synthfest " + detail::join_words(partial_words);
      partial.hashtags = {"#SynthFest"};
      partial.timestamp = timestamp_near(peak_day[k], 2.0);
      partial.retweets = rng.between(0, 40);
      partial.media = rng.chance(0.3) ? MediaKind::video : MediaKind::image;
      partial.image = detail::textured_image(rng, detail::palette_color(rng), options.image_size);
      partial.concepts = {{seg_concept, 0.6}, {rng.pick(generic_concepts), 0.5}};
      partial.embedding = near_centroid(1.5);
      partial.story = static_cast<int>(k);
      partial.segment = static_cast<int>(s);
      partial.grade = 1;
      partial.group = -1 - static_cast<int>(planned.size());
      planned.push_back(partial);

      if (hard && rng.chance(0.5)) {
        // Off-topic post that happens to use the segment's wording.
        PlannedDoc decoy;
        auto decoy_words = topic;
        for (auto& w : fillers(3)) decoy_words.push_back(w);
        rng.shuffle(decoy_words);
        decoy.text = "synthfest " + detail::join_words(decoy_words);
        decoy.hashtags = {"#synthfest"};
        decoy.timestamp = timestamp_near(peak_day[k], 3.0);
        decoy.retweets = rng.between(0, 80);
        decoy.media = MediaKind::image;
        decoy.image = detail::textured_image(rng, detail::palette_color(rng), options.image_size);
        decoy.concepts = {{rng.pick(generic_concepts), 0.8}};
        decoy.embedding = random_vector(3.0);
        decoy.decoy = true;
        planned.push_back(decoy);
      }
    }
  }

  const std::size_t remaining = options.n_docs - planned.size();
  const std::size_t off_event = std::max<std::size_t>(1, remaining / 20);
  for (std::size_t i = 0; i < remaining; ++i) {
    PlannedDoc d;
    const bool outside = i < off_event;
    const bool chatter = !outside && rng.chance(0.4);
    std::vector<std::string> words = fillers(rng.between(5, 9));
    if (chatter) {
      const auto k = rng.below(options.n_stories);
      words.push_back(title_word[k]);
      d.timestamp = timestamp_near(peak_day[k], 1.0);
    } else {
      d.timestamp = Timestamp{ev.spec.span_start + days{static_cast<int>(rng.below(static_cast<std::size_t>(span_days)))}} +
                    seconds{static_cast<long>(rng.below(86400))};
    }
    if (rng.chance(0.15)) {
      // a stray topic word from a random segment
      const auto k = rng.below(options.n_stories);
      const auto& segs = topic_words[k];
      words.push_back(segs[rng.below(segs.size())][rng.below(3)]);
    }
    rng.shuffle(words);
    if (outside) {
      if (rng.chance(0.5)) {
        d.text = "synthfest " + detail::join_words(words);
        d.hashtags = {"#synthfest"};
        d.timestamp = Timestamp{ev.spec.span_end + days{static_cast<int>(5 + rng.below(30))}};
      } else {
        d.text = detail::join_words(words);
      }
    } else {
      d.text = (rng.chance(0.5) ? "synthfest " : "") + detail::join_words(words);
      d.hashtags = {"#synthfest"};
    }
    d.retweets = rng.between(0, 80);
    const double media_roll = rng.unit();
    if (media_roll < 0.7) {
      d.media = MediaKind::image;
    } else if (media_roll < 0.85) {
      d.media = MediaKind::video;
      d.thumbnail = rng.chance(0.5);
    }
    if (d.media) {
      d.image = detail::textured_image(rng, detail::palette_color(rng), options.image_size);
      const int n_concepts = rng.between(1, 3);
      std::set<std::string> labels;
      for (int c = 0; c < n_concepts; ++c) labels.insert(rng.pick(generic_concepts));
      for (const auto& l : labels) d.concepts.push_back({l, 0.2 + 0.7 * rng.unit()});
      d.embedding = random_vector(3.0);
    }
    planned.push_back(std::move(d));
  }

  // Shuffle, keeping the index mapping so duplicates find their originals.
  std::vector<std::size_t> order(planned.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  std::vector<std::string> media_of_planned(planned.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    if (planned[order[pos]].media) media_of_planned[order[pos]] = fmt::format("m{:05d}", pos + 1);
  }

  std::vector<StoryTruth> truth(options.n_stories);
  for (std::size_t k = 0; k < options.n_stories; ++k) {
    truth[k].story_id = ev.stories[k].story_id;
    for (const auto& seg : ev.stories[k].segments) truth[k].segments.push_back({seg.segment_id, {}});
  }

  std::vector<std::string> encoded_png(planned.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::size_t p = order[pos];
    const auto& pd = planned[p];
    SocialDocument doc;
    doc.doc_id = fmt::format("d{:05d}", pos + 1);
    doc.source = Source::twitter;
    doc.text = pd.text;
    doc.timestamp = pd.timestamp;
    doc.hashtags = pd.hashtags;
    doc.retweets = pd.retweets;
    doc.favorites = pd.retweets / 2;
    if (pd.decoy) ev.decoy_docs.push_back(doc.doc_id);
    if (pd.media) {
      MediaRef m;
      m.media_id = media_of_planned[p];
      m.kind = *pd.media;
      const bool has_raster = m.kind == MediaKind::image || pd.thumbnail;
      if (m.kind == MediaKind::video) m.uri = fmt::format("media/{}.mp4", m.media_id);
      if (has_raster) {
        MediaFile file;
        if (pd.jpeg) {
          file.relative_path = fmt::format("media/{}.jpg", m.media_id);
          file.bytes = encode_jpeg(*pd.image, options.duplicate_jpeg_quality);
          ev.planted_duplicates.emplace_back(media_of_planned[static_cast<std::size_t>(pd.duplicate_of)], m.media_id);
        } else {
          file.relative_path = fmt::format("media/{}.png", m.media_id);
          file.bytes = encode_png(*pd.image);
        }
        if (m.kind == MediaKind::image) {
          m.uri = file.relative_path;
        } else {
          m.thumbnail_uri = file.relative_path;
        }
        ev.media.push_back(std::move(file));
      }
      if (!pd.concepts.empty()) ev.concepts.push_back({m.media_id, pd.concepts});
      if (!pd.embedding.empty()) ev.embeddings.push_back({m.media_id, pd.embedding});
      if (pd.story >= 0) {
        truth[static_cast<std::size_t>(pd.story)].segments[static_cast<std::size_t>(pd.segment)].relevant.push_back(
            {m.media_id, pd.grade, pd.group});
      }
      doc.media.push_back(std::move(m));
    }
    ev.corpus.add(std::move(doc));
  }
  for (auto& t : truth) {
    for (auto& seg : t.segments) {
      std::sort(seg.relevant.begin(), seg.relevant.end(), [](const auto& a, const auto& b) { return a.media_id < b.media_id; });
    }
    ev.truth.add(std::move(t));
  }
  std::sort(ev.planted_duplicates.begin(), ev.planted_duplicates.end());
  return ev;
}

struct SyntheticPaths {
  std::filesystem::path corpus, crawl_spec, stories, concepts, embeddings, ground_truth;
};

inline SyntheticPaths synthetic_paths(const std::filesystem::path& dir) {
  return {dir / "corpus.jsonl", dir / "crawl_spec.json", dir / "stories.jsonl",
          dir / "concepts.jsonl", dir / "embeddings.jsonl", dir / "ground_truth.jsonl"};
}

inline SyntheticPaths write_synthetic_event(const SyntheticEvent& ev, const std::filesystem::path& dir) {
  const auto paths = synthetic_paths(dir);
  write_file_atomic(paths.corpus, serialize_corpus(ev.corpus));
  write_file_atomic(paths.crawl_spec, to_json(ev.spec).dump(2) + "\n");
  std::string stories, concepts, embeddings;
  for (const auto& s : ev.stories) stories += to_json(s).dump() + "\n";
  for (const auto& c : ev.concepts) concepts += to_json(c).dump() + "\n";
  for (const auto& e : ev.embeddings) embeddings += to_json(e).dump() + "\n";
  write_file_atomic(paths.stories, stories);
  write_file_atomic(paths.concepts, concepts);
  write_file_atomic(paths.embeddings, embeddings);
  write_file_atomic(paths.ground_truth, serialize_ground_truth(ev.truth));
  for (const auto& m : ev.media) write_file_atomic(dir / m.relative_path, m.bytes);
  return paths;
}

// ---------------------------------------------------------------------------
// Simulated annotators

// Each s_i and t_i equals the ground truth with probability 1 - noise_rate and
// is uniform over {0,1,2} otherwise. The overall rating quantizes the true
// Quality onto 1..5; with probability noise_rate it moves one step up or down.
inline JudgmentSet simulate_annotator(const GroundTruth& truth, const IllustratedStoryline& story, double noise_rate,
                                      std::uint64_t seed, std::string annotator_id, const MetricParams& params = {}) {
  if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) throw ValidationError("simulate_annotator: noise_rate must lie in [0, 1]");
  detail::SynthRng rng(seed);
  JudgmentSet j;
  j.story_id = story.story_id;
  j.method_name = story.method_name;
  j.annotator_id = std::move(annotator_id);
  const std::size_t n = story.choices.size();
  std::vector<int> s_true, t_true;
  for (std::size_t i = 0; i < n; ++i) s_true.push_back(truth.relevance(story.story_id, i, story.choices[i]));
  for (std::size_t i = 1; i < n; ++i) t_true.push_back(truth.transition(story.story_id, i, story.choices[i - 1], story.choices[i]));
  auto noisy = [&](int truth_value) { return rng.unit() < noise_rate ? static_cast<int>(rng.below(3)) : truth_value; };
  for (int v : s_true) j.s.push_back(noisy(v));
  for (int v : t_true) j.t.push_back(noisy(v));
  double fraction = 0.0;
  if (n >= 2) {
    fraction = story_quality(s_true, t_true, params) / params.max_quality();
  } else if (n == 1) {
    fraction = s_true[0] / 2.0;
  }
  int rating = kMinOverallRating + static_cast<int>(std::lround((kMaxOverallRating - kMinOverallRating) * fraction));
  if (rng.unit() < noise_rate) rating += rng.chance(0.5) ? 1 : -1;
  j.overall_rating = std::clamp(rating, kMinOverallRating, kMaxOverallRating);
  return j;
}

}  // namespace storyweave
