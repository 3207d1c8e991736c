#pragma once

// Pixel features (joint RGB histogram, colour moments, luma entropy, mean
// luminance), difference hashing, and concept/embedding sidecar loading.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "storyweave/common.hpp"
#include "storyweave/image_io.hpp"
#include "storyweave/story_model.hpp"

namespace storyweave {

// Rec. 601 luma.
inline double luma(const Rgb& p) { return 0.299 * p.r + 0.587 * p.g + 0.114 * p.b; }

inline std::uint8_t luma_level(const Rgb& p) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(luma(p)), 0L, 255L));
}

struct ColorHistogram {
  int bins_per_channel = 8;
  std::vector<double> values;  // index = (r_bin * bins + g_bin) * bins + b_bin

  double at(int r_bin, int g_bin, int b_bin) const {
    return values[(static_cast<std::size_t>(r_bin) * bins_per_channel + g_bin) * bins_per_channel + b_bin];
  }
};

inline ColorHistogram color_histogram(const ImagePixels& img, int bins_per_channel = 8) {
  if (bins_per_channel < 2 || bins_per_channel > 256) throw ValidationError("color_histogram: bins_per_channel must lie in [2, 256]");
  const auto bins = static_cast<std::size_t>(bins_per_channel);
  std::vector<std::size_t> counts(bins * bins * bins, 0);
  auto quantize = [&](std::uint8_t c) { return static_cast<std::size_t>(c) * bins / 256; };
  for (const auto& p : img.pixels()) ++counts[(quantize(p.r) * bins + quantize(p.g)) * bins + quantize(p.b)];
  ColorHistogram h{bins_per_channel, std::vector<double>(counts.size(), 0.0)};
  const double total = static_cast<double>(img.size());
  for (std::size_t i = 0; i < counts.size(); ++i) h.values[i] = static_cast<double>(counts[i]) / total;
  return h;
}

// L1 distance, in [0, 2] for normalized histograms.
inline double histogram_distance(const ColorHistogram& a, const ColorHistogram& b) {
  if (a.bins_per_channel != b.bins_per_channel || a.values.size() != b.values.size()) {
    throw ValidationError(fmt::format("histogram_distance: bin mismatch ({} vs {})", a.bins_per_channel, b.bins_per_channel));
  }
  double d = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) d += std::abs(a.values[i] - b.values[i]);
  return d;
}

struct ChannelMoments {
  double mean = 0.0;
  double stddev = 0.0;
  double skewness = 0.0;  // cube root of the third central moment
};

struct ColorMoments {
  std::array<ChannelMoments, 3> channels;  // R, G, B

  std::array<double, 9> flatten() const {
    std::array<double, 9> out{};
    for (std::size_t c = 0; c < 3; ++c) {
      out[c * 3] = channels[c].mean;
      out[c * 3 + 1] = channels[c].stddev;
      out[c * 3 + 2] = channels[c].skewness;
    }
    return out;
  }
};

// Population moments (divide by pixel count).
inline ColorMoments color_moments(const ImagePixels& img) {
  ColorMoments m;
  const double n = static_cast<double>(img.size());
  for (std::size_t c = 0; c < 3; ++c) {
    auto channel = [c](const Rgb& p) -> double { return c == 0 ? p.r : (c == 1 ? p.g : p.b); };
    double sum = 0.0;
    for (const auto& p : img.pixels()) sum += channel(p);
    const double mean = sum / n;
    double m2 = 0.0, m3 = 0.0;
    for (const auto& p : img.pixels()) {
      const double d = channel(p) - mean;
      m2 += d * d;
      m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    auto& out = m.channels[c];
    out.mean = mean;
    out.stddev = std::sqrt(m2);
    out.skewness = out.stddev == 0.0 ? 0.0 : std::cbrt(m3);
  }
  return m;
}

inline double moments_distance(const ColorMoments& a, const ColorMoments& b) {
  const auto fa = a.flatten(), fb = b.flatten();
  double d = 0.0;
  for (std::size_t i = 0; i < fa.size(); ++i) d += std::abs(fa[i] - fb[i]);
  return d;
}

// Shannon entropy (bits) of the 256-level luma histogram.
inline double visual_entropy(const ImagePixels& img) {
  std::array<std::size_t, 256> counts{};
  for (const auto& p : img.pixels()) ++counts[luma_level(p)];
  const double n = static_cast<double>(img.size());
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

inline double mean_luminance(const ImagePixels& img) {
  double sum = 0.0;
  for (const auto& p : img.pixels()) sum += luma(p);
  return sum / static_cast<double>(img.size());
}

// 64-bit difference hash: luma downscaled to 9x8 by block averaging; bit
// (63 - (row*8 + col)) is set when cell (row, col) is brighter than (row, col+1).
// Cell means are compared exactly as integer sums of 1000*luma cross-multiplied
// by cell areas, so equal-valued cells of different sizes never differ.
inline std::uint64_t perceptual_hash(const ImagePixels& img) {
  constexpr int cols = 9, rows = 8;
  std::array<std::uint64_t, cols * rows> sums{};
  std::array<std::uint64_t, cols * rows> areas{};
  const int w = img.width(), h = img.height();
  for (int r = 0; r < rows; ++r) {
    const int y0 = r * h / rows;
    const int y1 = std::max(y0 + 1, (r + 1) * h / rows);
    for (int c = 0; c < cols; ++c) {
      const int x0 = c * w / cols;
      const int x1 = std::max(x0 + 1, (c + 1) * w / cols);
      std::uint64_t sum = 0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          const auto& p = img.at(x, y);
          sum += 299u * p.r + 587u * p.g + 114u * p.b;
        }
      }
      const auto cell = static_cast<std::size_t>(r * cols + c);
      sums[cell] = sum;
      areas[cell] = static_cast<std::uint64_t>(y1 - y0) * static_cast<std::uint64_t>(x1 - x0);
    }
  }
  std::uint64_t hash = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols - 1; ++c) {
      const auto a = static_cast<std::size_t>(r * cols + c), b = a + 1;
      hash <<= 1;
      if (sums[a] * areas[b] > sums[b] * areas[a]) hash |= 1u;
    }
  }
  return hash;
}

inline int hamming_distance(std::uint64_t a, std::uint64_t b) { return std::popcount(a ^ b); }

// ---------------------------------------------------------------------------
// Per-media pixel features

struct PixelFeatures {
  ColorHistogram histogram;
  ColorMoments moments;
  double entropy = 0.0;
  double luminance = 0.0;
  std::uint64_t dhash = 0;
};

inline PixelFeatures extract_features(const ImagePixels& img, int histogram_bins = 8) {
  return {color_histogram(img, histogram_bins), color_moments(img), visual_entropy(img), mean_luminance(img),
          perceptual_hash(img)};
}

// Media whose raster is missing or undecodable are recorded as feature-less.
class FeatureStore {
 public:
  const PixelFeatures* find(std::string_view media_id) const {
    auto it = features_.find(std::string(media_id));
    return it == features_.end() ? nullptr : &it->second;
  }
  bool featureless(std::string_view media_id) const { return find(media_id) == nullptr; }

  void insert(std::string media_id, PixelFeatures f) { features_.insert_or_assign(std::move(media_id), std::move(f)); }
  std::size_t size() const { return features_.size(); }
  const Diagnostics& diagnostics() const { return diagnostics_; }
  Diagnostics& diagnostics() { return diagnostics_; }

 private:
  std::unordered_map<std::string, PixelFeatures> features_;
  Diagnostics diagnostics_;
};

// Images use their own uri; videos use thumbnail_uri and are skipped without one.
inline FeatureStore extract_corpus_features(const Corpus& corpus, int histogram_bins = 8) {
  FeatureStore store;
  for (const auto& doc : corpus.documents()) {
    for (const auto& m : doc.media) {
      auto raster = m.raster_uri();
      if (!raster) continue;
      std::string error;
      auto img = try_decode_image(corpus.resolve(*raster), &error);
      if (!img) {
        store.diagnostics().warn(fmt::format("media '{}' is feature-less: {}", m.media_id, error));
        continue;
      }
      store.insert(m.media_id, extract_features(*img, histogram_bins));
    }
  }
  return store;
}

// ---------------------------------------------------------------------------
// Sidecars

struct Concept {
  std::string label;
  double confidence = 0.0;
};

struct ConceptAnnotation {
  std::string media_id;
  std::vector<Concept> concepts;

  // Highest confidence, smallest label on ties.
  std::optional<std::string> top_label() const {
    const Concept* best = nullptr;
    for (const auto& c : concepts) {
      if (!best || c.confidence > best->confidence || (c.confidence == best->confidence && c.label < best->label)) best = &c;
    }
    if (!best) return std::nullopt;
    return best->label;
  }
};

struct Embedding {
  std::string media_id;
  std::vector<double> vector;
};

using ConceptMap = std::unordered_map<std::string, ConceptAnnotation>;
using EmbeddingMap = std::unordered_map<std::string, Embedding>;

template <typename T>
struct SidecarLoad {
  std::unordered_map<std::string, T> entries;
  Diagnostics diagnostics;
};

inline ConceptAnnotation concept_annotation_from_json(const json& j) {
  ConceptAnnotation a;
  a.media_id = detail::require<std::string>(j, "media_id");
  if (!j.contains("concepts") || !j.at("concepts").is_array()) throw ValidationError("field 'concepts' must be an array");
  for (const auto& c : j.at("concepts")) {
    Concept k{detail::require<std::string>(c, "label"), detail::require<double>(c, "confidence")};
    if (!(k.confidence >= 0.0 && k.confidence <= 1.0)) throw ValidationError(fmt::format("confidence of '{}' outside [0, 1]", k.label));
    for (const auto& prev : a.concepts) {
      if (prev.label == k.label) throw ValidationError(fmt::format("duplicate label '{}'", k.label));
    }
    a.concepts.push_back(std::move(k));
  }
  return a;
}

inline json to_json(const ConceptAnnotation& a) {
  json concepts = json::array();
  for (const auto& c : a.concepts) concepts.push_back({{"label", c.label}, {"confidence", c.confidence}});
  return {{"media_id", a.media_id}, {"concepts", std::move(concepts)}};
}

inline json to_json(const Embedding& e) { return {{"media_id", e.media_id}, {"vector", e.vector}}; }

namespace detail {

template <typename T, typename Parse, typename Check>
SidecarLoad<T> parse_sidecar(std::string_view text, Parse parse, Check check) {
  SidecarLoad<T> out;
  auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
    try {
      T entry = parse(json::parse(lines[i]));
      check(entry, out);
      auto id = entry.media_id;
      if (out.entries.count(id)) out.diagnostics.warn(fmt::format("line {}: duplicate media_id '{}', later row wins", i + 1, id));
      out.entries.insert_or_assign(id, std::move(entry));
    } catch (const json::exception& e) {
      out.diagnostics.skip(i + 1, fmt::format("malformed JSON: {}", e.what()));
    } catch (const ValidationError& e) {
      out.diagnostics.skip(i + 1, e.what());
    }
  }
  return out;
}

}  // namespace detail

inline SidecarLoad<ConceptAnnotation> parse_concepts(std::string_view text) {
  return detail::parse_sidecar<ConceptAnnotation>(text, concept_annotation_from_json, [](const auto&, const auto&) {});
}

// Every vector must match the dimension of the first accepted row.
inline SidecarLoad<Embedding> parse_embeddings(std::string_view text) {
  std::optional<std::size_t> dimension;
  auto parse = [](const json& j) {
    Embedding e{detail::require<std::string>(j, "media_id"), detail::require<std::vector<double>>(j, "vector")};
    if (e.vector.empty()) throw ValidationError("empty embedding vector");
    for (double v : e.vector) {
      if (!std::isfinite(v)) throw ValidationError("non-finite embedding entry");
    }
    return e;
  };
  auto check = [&dimension](const Embedding& e, const SidecarLoad<Embedding>&) {
    if (!dimension) dimension = e.vector.size();
    if (e.vector.size() != *dimension) {
      throw ValidationError(fmt::format("embedding dimension {} differs from {}", e.vector.size(), *dimension));
    }
  };
  return detail::parse_sidecar<Embedding>(text, parse, check);
}

inline SidecarLoad<ConceptAnnotation> load_concepts(const std::filesystem::path& path) { return parse_concepts(read_file(path)); }
inline SidecarLoad<Embedding> load_embeddings(const std::filesystem::path& path) { return parse_embeddings(read_file(path)); }

inline double euclidean_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ValidationError("euclidean_distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace storyweave
