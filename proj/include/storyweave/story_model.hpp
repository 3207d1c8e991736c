#pragma once

// Events, corpora, storylines and illustrated storylines, with line-delimited
// JSON ingestion and crawl-spec filtering.

#include <algorithm>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "storyweave/common.hpp"

namespace storyweave {

using json = nlohmann::json;

enum class Source { twitter, flickr, youtube };
enum class MediaKind { image, video };

inline std::string_view to_string(Source s) {
  switch (s) {
    case Source::twitter: return "twitter";
    case Source::flickr: return "flickr";
    case Source::youtube: return "youtube";
  }
  return "twitter";
}

inline std::optional<Source> parse_source(std::string_view s) {
  if (s == "twitter") return Source::twitter;
  if (s == "flickr") return Source::flickr;
  if (s == "youtube") return Source::youtube;
  return std::nullopt;
}

inline std::string_view to_string(MediaKind k) { return k == MediaKind::image ? "image" : "video"; }

struct MediaRef {
  std::string media_id;
  MediaKind kind = MediaKind::image;
  std::string uri;
  std::optional<std::string> thumbnail_uri;

  // The raster used for visual features: the image itself, or a video's thumbnail.
  std::optional<std::string> raster_uri() const {
    if (kind == MediaKind::image) return uri;
    return thumbnail_uri;
  }
};

struct SocialDocument {
  std::string doc_id;
  Source source = Source::twitter;
  std::string text;
  Timestamp timestamp{};
  std::vector<std::string> hashtags;
  std::vector<MediaRef> media;
  std::int64_t retweets = 0;
  std::int64_t favorites = 0;
};

// Immutable after loading; ids are unique across the collection.
class Corpus {
 public:
  Corpus() = default;

  // Throws ValidationError on a duplicate doc_id or media_id; the corpus is unchanged then.
  void add(SocialDocument doc) {
    if (doc_index_.count(doc.doc_id)) {
      throw ValidationError(fmt::format("duplicate doc_id '{}'", doc.doc_id));
    }
    for (std::size_t i = 0; i < doc.media.size(); ++i) {
      const auto& id = doc.media[i].media_id;
      if (media_index_.count(id)) throw ValidationError(fmt::format("duplicate media_id '{}'", id));
      for (std::size_t j = 0; j < i; ++j) {
        if (doc.media[j].media_id == id) throw ValidationError(fmt::format("duplicate media_id '{}'", id));
      }
    }
    const std::size_t index = docs_.size();
    doc_index_.emplace(doc.doc_id, index);
    for (std::size_t i = 0; i < doc.media.size(); ++i) media_index_.emplace(doc.media[i].media_id, std::pair{index, i});
    docs_.push_back(std::move(doc));
  }

  const std::vector<SocialDocument>& documents() const { return docs_; }
  std::size_t size() const { return docs_.size(); }
  bool empty() const { return docs_.empty(); }

  const SocialDocument* find_document(std::string_view doc_id) const {
    auto it = doc_index_.find(std::string(doc_id));
    return it == doc_index_.end() ? nullptr : &docs_[it->second];
  }

  const MediaRef* find_media(std::string_view media_id) const {
    auto it = media_index_.find(std::string(media_id));
    return it == media_index_.end() ? nullptr : &docs_[it->second.first].media[it->second.second];
  }

  // Owning document of a media item.
  const SocialDocument* media_owner(std::string_view media_id) const {
    auto it = media_index_.find(std::string(media_id));
    return it == media_index_.end() ? nullptr : &docs_[it->second.first];
  }

  // Directory relative media URIs are resolved against.
  const std::filesystem::path& base_dir() const { return base_dir_; }
  void set_base_dir(std::filesystem::path dir) { base_dir_ = std::move(dir); }

  std::filesystem::path resolve(std::string_view uri) const {
    std::filesystem::path p{std::string(uri)};
    return p.is_absolute() || base_dir_.empty() ? p : base_dir_ / p;
  }

 private:
  std::vector<SocialDocument> docs_;
  std::unordered_map<std::string, std::size_t> doc_index_;
  std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> media_index_;
  std::filesystem::path base_dir_;
};

struct CrawlSpec {
  std::string event_name;
  std::vector<std::string> terms;
  std::vector<std::string> hashtags;
  Date span_start{};
  Date span_end{};

  void validate() const {
    if (!(span_start < span_end)) throw ValidationError("crawl spec: span_start must precede span_end");
    if (terms.empty() && hashtags.empty()) throw ValidationError("crawl spec: needs at least one term or hashtag");
    for (const auto& h : hashtags) {
      if (h.size() < 2 || h.front() != '#') throw ValidationError(fmt::format("crawl spec: hashtag '{}' must begin with '#'", h));
    }
  }
};

struct StorySegment {
  std::string segment_id;
  std::string description;
  int order = 1;
};

struct Storyline {
  std::string story_id;
  std::string title;
  std::string event_name;
  std::vector<StorySegment> segments;

  std::size_t size() const { return segments.size(); }
};

// One choice per segment; std::nullopt is the NO_ILLUSTRATION marker.
struct IllustratedStoryline {
  std::string story_id;
  std::vector<std::optional<std::string>> choices;
  std::string method_name;

  std::size_t no_illustration_count() const {
    return static_cast<std::size_t>(std::count(choices.begin(), choices.end(), std::nullopt));
  }
};

enum class CorpusFormat { jsonl };

inline CorpusFormat parse_corpus_format(std::string_view id) {
  if (id == "jsonl" || id == "ndjson") return CorpusFormat::jsonl;
  throw ValidationError(fmt::format("unknown corpus format '{}'", id));
}

// ---------------------------------------------------------------------------
// JSON encoding

namespace detail {

template <typename T>
T require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError(fmt::format("missing field '{}'", key));
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(fmt::format("field '{}' has the wrong type", key));
  }
}

inline std::vector<std::string> require_strings(const json& j, const char* key) {
  return require<std::vector<std::string>>(j, key);
}

inline std::int64_t require_count(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number_integer()) throw ValidationError(fmt::format("field '{}' must be an integer", key));
  auto v = j.at(key).get<std::int64_t>();
  if (v < 0) throw ValidationError(fmt::format("field '{}' must be non-negative", key));
  return v;
}

}  // namespace detail

inline MediaRef media_from_json(const json& j) {
  MediaRef m;
  m.media_id = detail::require<std::string>(j, "media_id");
  if (m.media_id.empty()) throw ValidationError("empty media_id");
  auto kind = detail::require<std::string>(j, "kind");
  if (kind == "image") {
    m.kind = MediaKind::image;
  } else if (kind == "video") {
    m.kind = MediaKind::video;
  } else {
    throw ValidationError(fmt::format("unknown media kind '{}'", kind));
  }
  m.uri = detail::require<std::string>(j, "uri");
  if (j.contains("thumbnail_uri") && !j.at("thumbnail_uri").is_null()) {
    m.thumbnail_uri = detail::require<std::string>(j, "thumbnail_uri");
  }
  return m;
}

inline json to_json(const MediaRef& m) {
  json j = {{"media_id", m.media_id}, {"kind", to_string(m.kind)}, {"uri", m.uri}};
  if (m.thumbnail_uri) j["thumbnail_uri"] = *m.thumbnail_uri;
  return j;
}

inline SocialDocument document_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("record is not an object");
  SocialDocument d;
  d.doc_id = detail::require<std::string>(j, "doc_id");
  if (d.doc_id.empty()) throw ValidationError("empty doc_id");
  auto src = detail::require<std::string>(j, "source");
  auto parsed = parse_source(src);
  if (!parsed) throw ValidationError(fmt::format("unknown source '{}'", src));
  d.source = *parsed;
  d.text = detail::require<std::string>(j, "text");
  d.timestamp = parse_rfc3339(detail::require<std::string>(j, "timestamp"));
  d.hashtags = detail::require_strings(j, "hashtags");
  if (!j.contains("media") || !j.at("media").is_array()) throw ValidationError("field 'media' must be an array");
  for (const auto& m : j.at("media")) d.media.push_back(media_from_json(m));
  d.retweets = detail::require_count(j, "retweets");
  d.favorites = detail::require_count(j, "favorites");
  return d;
}

inline json to_json(const SocialDocument& d) {
  json media = json::array();
  for (const auto& m : d.media) media.push_back(to_json(m));
  return json{{"doc_id", d.doc_id},   {"source", to_string(d.source)},
              {"text", d.text},       {"timestamp", format_rfc3339(d.timestamp)},
              {"hashtags", d.hashtags}, {"media", std::move(media)},
              {"retweets", d.retweets}, {"favorites", d.favorites}};
}

inline std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& d : corpus.documents()) {
    out += to_json(d).dump();
    out += '\n';
  }
  return out;
}

inline CrawlSpec crawl_spec_from_json(const json& j) {
  CrawlSpec s;
  s.event_name = detail::require<std::string>(j, "event_name");
  s.terms = detail::require_strings(j, "terms");
  s.hashtags = detail::require_strings(j, "hashtags");
  s.span_start = parse_date(detail::require<std::string>(j, "span_start"));
  s.span_end = parse_date(detail::require<std::string>(j, "span_end"));
  s.validate();
  return s;
}

inline json to_json(const CrawlSpec& s) {
  return json{{"event_name", s.event_name},
              {"terms", s.terms},
              {"hashtags", s.hashtags},
              {"span_start", format_date(s.span_start)},
              {"span_end", format_date(s.span_end)}};
}

inline Storyline storyline_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("record is not an object");
  Storyline s;
  s.story_id = detail::require<std::string>(j, "story_id");
  if (s.story_id.empty()) throw ValidationError("empty story_id");
  s.title = detail::require<std::string>(j, "title");
  s.event_name = detail::require<std::string>(j, "event_name");
  if (!j.contains("segments") || !j.at("segments").is_array()) throw ValidationError("field 'segments' must be an array");
  int order = 1;
  for (const auto& seg : j.at("segments")) {
    StorySegment sg;
    sg.segment_id = detail::require<std::string>(seg, "segment_id");
    sg.description = detail::require<std::string>(seg, "description");
    if (sg.description.empty()) throw ValidationError(fmt::format("segment '{}' has an empty description", sg.segment_id));
    sg.order = order++;
    s.segments.push_back(std::move(sg));
  }
  if (s.segments.empty()) throw ValidationError(fmt::format("story '{}' has no segments", s.story_id));
  return s;
}

inline json to_json(const Storyline& s) {
  json segs = json::array();
  for (const auto& sg : s.segments) segs.push_back({{"segment_id", sg.segment_id}, {"description", sg.description}});
  return json{{"story_id", s.story_id}, {"title", s.title}, {"event_name", s.event_name}, {"segments", std::move(segs)}};
}

inline json to_json(const IllustratedStoryline& s) {
  json choices = json::array();
  for (const auto& c : s.choices) choices.push_back(c ? json(*c) : json(nullptr));
  return json{{"story_id", s.story_id}, {"method", s.method_name}, {"choices", std::move(choices)}};
}

inline IllustratedStoryline illustrated_from_json(const json& j) {
  IllustratedStoryline s;
  s.story_id = detail::require<std::string>(j, "story_id");
  if (j.contains("method")) {
    s.method_name = detail::require<std::string>(j, "method");
  } else {
    s.method_name = detail::require<std::string>(j, "method_name");
  }
  if (!j.contains("choices") || !j.at("choices").is_array()) throw ValidationError("field 'choices' must be an array");
  for (const auto& c : j.at("choices")) {
    if (c.is_null()) {
      s.choices.emplace_back(std::nullopt);
    } else if (c.is_string()) {
      s.choices.emplace_back(c.get<std::string>());
    } else {
      throw ValidationError("choices must be media ids or null");
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Loading

// Illustrated storylines from a JSONL file, or from every *.json record under
// a directory (sorted by path, so the order does not depend on the filesystem).
inline std::vector<IllustratedStoryline> load_illustrated(const std::filesystem::path& path) {
  std::vector<IllustratedStoryline> out;
  auto parse = [&](const std::string& text, const std::filesystem::path& file, std::size_t line) {
    try {
      out.push_back(illustrated_from_json(json::parse(text)));
    } catch (const json::exception& e) {
      throw ValidationError(fmt::format("{}:{}: {}", file.string(), line, e.what()));
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("{}:{}: {}", file.string(), line, e.what()));
    }
  };
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(path)) {
      if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) parse(read_file(f), f, 1);
    return out;
  }
  const auto lines = split_lines(read_file(path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t") != std::string::npos) parse(lines[i], path, i + 1);
  }
  return out;
}

inline std::string serialize_illustrated(const std::vector<IllustratedStoryline>& stories) {
  std::string out;
  for (const auto& s : stories) out += to_json(s).dump() + "\n";
  return out;
}

struct CorpusLoad {
  Corpus corpus;
  Diagnostics diagnostics;
};

// Malformed records (bad JSON, schema violations, duplicate ids) are skipped
// with a line-numbered warning. Blank lines are ignored.
inline CorpusLoad parse_corpus(std::string_view text, CorpusFormat = CorpusFormat::jsonl) {
  CorpusLoad result;
  auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      result.corpus.add(document_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      result.diagnostics.skip(i + 1, fmt::format("malformed JSON: {}", e.what()));
    } catch (const ValidationError& e) {
      result.diagnostics.skip(i + 1, e.what());
    }
  }
  return result;
}

inline CorpusLoad load_corpus(const std::filesystem::path& path, CorpusFormat format = CorpusFormat::jsonl) {
  auto result = parse_corpus(read_file(path), format);
  result.corpus.set_base_dir(path.parent_path());
  return result;
}

inline CrawlSpec load_crawl_spec(const std::filesystem::path& path) {
  try {
    return crawl_spec_from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("{}: malformed crawl spec: {}", path.string(), e.what()));
  }
}

struct StorylineLoad {
  std::vector<Storyline> stories;
  Diagnostics diagnostics;
};

// Stories outside 3..4 segments load with a warning.
inline StorylineLoad parse_storylines(std::string_view text) {
  StorylineLoad result;
  auto lines = split_lines(text);
  std::unordered_map<std::string, bool> seen;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      auto story = storyline_from_json(json::parse(line));
      if (seen.count(story.story_id)) {
        result.diagnostics.skip(i + 1, fmt::format("duplicate story_id '{}'", story.story_id));
        continue;
      }
      seen[story.story_id] = true;
      if (story.size() < 3 || story.size() > 4) {
        result.diagnostics.warn(fmt::format("line {}: story '{}' has {} segments (benchmark stories have 3 to 4)",
                                            i + 1, story.story_id, story.size()));
      }
      result.stories.push_back(std::move(story));
    } catch (const json::exception& e) {
      result.diagnostics.skip(i + 1, fmt::format("malformed JSON: {}", e.what()));
    } catch (const ValidationError& e) {
      result.diagnostics.skip(i + 1, e.what());
    }
  }
  return result;
}

inline StorylineLoad load_storylines(const std::filesystem::path& path) { return parse_storylines(read_file(path)); }

// ---------------------------------------------------------------------------
// Crawl-spec matching

namespace detail {

inline std::string_view strip_hash(std::string_view tag) {
  while (!tag.empty() && tag.front() == '#') tag.remove_prefix(1);
  return tag;
}

// Case-insensitive occurrence of `needle` in `haystack` bounded by non-word bytes.
inline bool contains_on_word_boundary(std::string_view haystack_lower, std::string_view needle_lower) {
  if (needle_lower.empty()) return false;
  std::size_t pos = haystack_lower.find(needle_lower);
  while (pos != std::string_view::npos) {
    const bool left_ok = pos == 0 || !is_word_byte(static_cast<unsigned char>(haystack_lower[pos - 1]));
    const std::size_t end = pos + needle_lower.size();
    const bool right_ok = end == haystack_lower.size() || !is_word_byte(static_cast<unsigned char>(haystack_lower[end]));
    if (left_ok && right_ok) return true;
    pos = haystack_lower.find(needle_lower, pos + 1);
  }
  return false;
}

}  // namespace detail

inline bool in_span(Timestamp t, const CrawlSpec& spec) {
  using namespace std::chrono;
  return t >= Timestamp{spec.span_start} && t < Timestamp{spec.span_end + days{1}};
}

inline bool matches_crawl_spec(const SocialDocument& doc, const CrawlSpec& spec) {
  if (!in_span(doc.timestamp, spec)) return false;
  for (const auto& want : spec.hashtags) {
    auto w = to_lower(detail::strip_hash(want));
    for (const auto& have : doc.hashtags) {
      if (to_lower(detail::strip_hash(have)) == w) return true;
    }
  }
  const auto text = to_lower(doc.text);
  for (const auto& term : spec.terms) {
    if (detail::contains_on_word_boundary(text, to_lower(term))) return true;
  }
  return false;
}

inline Corpus filter_corpus(const Corpus& corpus, const CrawlSpec& spec) {
  Corpus out;
  out.set_base_dir(corpus.base_dir());
  for (const auto& d : corpus.documents()) {
    if (matches_crawl_spec(d, spec)) out.add(d);
  }
  return out;
}

}  // namespace storyweave
