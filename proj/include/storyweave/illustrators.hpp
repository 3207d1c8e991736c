#pragma once

// Segment-illustration baselines. Every method starts from the same BM25
// candidate pool per segment and re-ranks it; a segment with an empty pool
// gets no illustration.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "storyweave/common.hpp"
#include "storyweave/story_model.hpp"
#include "storyweave/text_retrieval.hpp"
#include "storyweave/visual_features.hpp"

namespace storyweave {

enum class IllustratorMethod { bm25, retweets, duplicates, concept_pool, concept_query, temporal, random };

inline constexpr std::array<std::string_view, 7> kIllustratorNames = {
    "bm25", "retweets", "duplicates", "concept_pool", "concept_query", "temporal", "random"};

inline std::string_view to_string(IllustratorMethod m) { return kIllustratorNames[static_cast<std::size_t>(m)]; }

inline std::optional<IllustratorMethod> parse_illustrator(std::string_view name) {
  for (std::size_t i = 0; i < kIllustratorNames.size(); ++i) {
    if (kIllustratorNames[i] == name) return static_cast<IllustratorMethod>(i);
  }
  return std::nullopt;
}

struct IllustratorConfig {
  IllustratorMethod method = IllustratorMethod::bm25;
  int pool_size = 50;
  int duplicate_hamming_threshold = 10;
  int prf_depth = 10;
  int concept_top_k = 10;
  double temporal_sigma_days = 1.0;
  std::uint64_t random_seed = 0;
  Bm25Params bm25;

  void validate() const {
    if (pool_size < 1) throw ValidationError("pool_size must be >= 1");
    if (duplicate_hamming_threshold < 0) throw ValidationError("duplicate_hamming_threshold must be >= 0");
    if (prf_depth < 0) throw ValidationError("prf_depth must be >= 0");
    if (concept_top_k < 0) throw ValidationError("concept_top_k must be >= 0");
    if (!(temporal_sigma_days > 0.0)) throw ValidationError("temporal_sigma_days must be > 0");
    bm25.validate();
  }
};

struct Candidate {
  std::string media_id;
  std::string doc_id;
  double score = 0.0;
};

struct CandidatePool {
  std::string segment_id;
  std::vector<Candidate> candidates;  // descending score, doc_id ascending on ties
};

// Top pool_size media by BM25 of the owning document against the segment
// description. A document contributes each of its media items in order.
inline CandidatePool candidate_pool(const StorySegment& segment, const Corpus& corpus, const InvertedIndex& index,
                                    const Bm25Params& bm25, int pool_size) {
  CandidatePool pool{segment.segment_id, {}};
  if (pool_size < 1 || index.doc_count() == 0) return pool;
  for (const auto& hit : rank_documents(index, bm25, segment.description, index.doc_count())) {
    const auto* doc = corpus.find_document(hit.doc_id);
    if (!doc) continue;
    for (const auto& m : doc->media) {
      if (pool.candidates.size() >= static_cast<std::size_t>(pool_size)) return pool;
      pool.candidates.push_back({m.media_id, doc->doc_id, hit.score});
    }
  }
  return pool;
}

// Smoothed daily posting volume turned into a prior over days.
class TemporalProfile {
 public:
  TemporalProfile() = default;

  // Nadaraya-Watson smoothing of the daily volume with a Gaussian kernel, so a
  // uniform profile stays uniform; the result is normalized to sum to 1 over
  // the span. Without an explicit span the corpus' first..last day is used.
  static TemporalProfile build(const Corpus& corpus, double sigma_days, std::optional<std::pair<Date, Date>> span = std::nullopt) {
    using namespace std::chrono;
    TemporalProfile p;
    if (corpus.empty() && !span) return p;
    Date first, last;
    if (span) {
      first = span->first;
      last = span->second;
    } else {
      first = last = floor<days>(corpus.documents().front().timestamp);
      for (const auto& d : corpus.documents()) {
        const Date day = floor<days>(d.timestamp);
        first = std::min(first, day);
        last = std::max(last, day);
      }
    }
    const auto n = static_cast<std::size_t>((last - first).count() + 1);
    std::vector<double> volume(n, 0.0);
    for (const auto& d : corpus.documents()) {
      const auto offset = (floor<days>(d.timestamp) - first).count();
      if (offset >= 0 && static_cast<std::size_t>(offset) < n) volume[static_cast<std::size_t>(offset)] += 1.0;
    }
    std::vector<double> smoothed(n, 0.0);
    for (std::size_t day = 0; day < n; ++day) {
      double num = 0.0, den = 0.0;
      for (std::size_t e = 0; e < n; ++e) {
        const double delta = static_cast<double>(day) - static_cast<double>(e);
        const double k = std::exp(-delta * delta / (2.0 * sigma_days * sigma_days));
        num += volume[e] * k;
        den += k;
      }
      smoothed[day] = num / den;
    }
    const double total = std::accumulate(smoothed.begin(), smoothed.end(), 0.0);
    if (total > 0.0) {
      for (auto& v : smoothed) v /= total;
    }
    p.first_ = first;
    p.prior_ = std::move(smoothed);
    return p;
  }

  // 0 outside the span.
  double prior(Timestamp t) const {
    using namespace std::chrono;
    if (prior_.empty()) return 0.0;
    const auto offset = (floor<days>(t) - first_).count();
    if (offset < 0 || static_cast<std::size_t>(offset) >= prior_.size()) return 0.0;
    return prior_[static_cast<std::size_t>(offset)];
  }

  const std::vector<double>& daily_prior() const { return prior_; }
  Date first_day() const { return first_; }

 private:
  Date first_{};
  std::vector<double> prior_;
};

// Everything an illustrator may consult. Pointers may be null when the
// corresponding evidence is unavailable; methods then fall back to BM25 order.
struct IllustrationInputs {
  const Corpus& corpus;
  const InvertedIndex& index;
  const FeatureStore* features = nullptr;
  const ConceptMap* concepts = nullptr;
  const TemporalProfile* temporal = nullptr;
};

namespace detail {

// Head of the pool under (key desc, BM25 desc, doc_id asc, pool position asc).
template <typename Key>
std::optional<std::size_t> best_by(const CandidatePool& pool, Key key) {
  std::optional<std::size_t> best;
  double best_key = 0.0;
  for (std::size_t i = 0; i < pool.candidates.size(); ++i) {
    const double k = key(i);
    if (!best) {
      best = i;
      best_key = k;
      continue;
    }
    const auto& c = pool.candidates[i];
    const auto& b = pool.candidates[*best];
    const bool better = k > best_key || (k == best_key && (c.score > b.score || (c.score == b.score && c.doc_id < b.doc_id)));
    if (better) {
      best = i;
      best_key = k;
    }
  }
  return best;
}

inline std::optional<std::string> choice_at(const CandidatePool& pool, std::optional<std::size_t> i) {
  if (!i) return std::nullopt;
  return pool.candidates[*i].media_id;
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace detail

inline std::optional<std::string> pick_bm25(const CandidatePool& pool) {
  return detail::choice_at(pool, detail::best_by(pool, [](std::size_t) { return 0.0; }));
}

inline std::optional<std::string> pick_retweets(const CandidatePool& pool, const Corpus& corpus) {
  return detail::choice_at(pool, detail::best_by(pool, [&](std::size_t i) {
                             const auto* doc = corpus.find_document(pool.candidates[i].doc_id);
                             return doc ? static_cast<double>(doc->retweets) : 0.0;
                           }));
}

// Single-link clusters over the pool: two candidates join when their hashes
// are within `threshold` bits. Feature-less media form singletons. Returns the
// cluster size of every candidate.
inline std::vector<std::size_t> duplicate_cluster_sizes(const CandidatePool& pool, const FeatureStore* features, int threshold) {
  const std::size_t n = pool.candidates.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<const PixelFeatures*> f(n, nullptr);
  if (features) {
    for (std::size_t i = 0; i < n; ++i) f[i] = features->find(pool.candidates[i].media_id);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!f[i]) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (f[j] && hamming_distance(f[i]->dhash, f[j]->dhash) <= threshold) parent[find(i)] = find(j);
    }
  }
  std::vector<std::size_t> count(n, 0);
  for (std::size_t i = 0; i < n; ++i) ++count[find(i)];
  std::vector<std::size_t> sizes(n);
  for (std::size_t i = 0; i < n; ++i) sizes[i] = count[find(i)];
  return sizes;
}

inline std::optional<std::string> pick_duplicates(const CandidatePool& pool, const FeatureStore* features, int threshold) {
  const auto sizes = duplicate_cluster_sizes(pool, features, threshold);
  return detail::choice_at(pool, detail::best_by(pool, [&](std::size_t i) { return static_cast<double>(sizes[i]); }));
}

// The top_k most frequent labels across the pool (frequency desc, label asc).
inline std::vector<std::string> popular_concepts(const CandidatePool& pool, const ConceptMap* concepts, int top_k) {
  std::map<std::string, std::size_t> freq;
  if (concepts) {
    for (const auto& c : pool.candidates) {
      auto it = concepts->find(c.media_id);
      if (it == concepts->end()) continue;
      for (const auto& k : it->second.concepts) ++freq[k.label];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> top;
  for (std::size_t i = 0; i < ranked.size() && i < static_cast<std::size_t>(std::max(top_k, 0)); ++i) top.push_back(ranked[i].first);
  return top;
}

inline std::optional<std::string> pick_concept_pool(const CandidatePool& pool, const ConceptMap* concepts, int top_k) {
  const auto top = popular_concepts(pool, concepts, top_k);
  const std::set<std::string> top_set(top.begin(), top.end());
  return detail::choice_at(pool, detail::best_by(pool, [&](std::size_t i) {
                             if (!concepts) return 0.0;
                             auto it = concepts->find(pool.candidates[i].media_id);
                             if (it == concepts->end()) return 0.0;
                             double hits = 0.0;
                             for (const auto& k : it->second.concepts) hits += top_set.count(k.label) ? 1.0 : 0.0;
                             return hits;
                           }));
}

// Label weights from the first prf_depth distinct documents of the pool: the
// number of their media items carrying each label.
inline std::map<std::string, double> feedback_concept_weights(const CandidatePool& pool, const ConceptMap* concepts, int prf_depth) {
  std::map<std::string, double> weight;
  if (!concepts || prf_depth <= 0) return weight;
  std::set<std::string> docs;
  for (const auto& c : pool.candidates) {
    if (!docs.count(c.doc_id)) {
      if (docs.size() >= static_cast<std::size_t>(prf_depth)) break;
      docs.insert(c.doc_id);
    }
    auto it = concepts->find(c.media_id);
    if (it == concepts->end()) continue;
    for (const auto& k : it->second.concepts) weight[k.label] += 1.0;
  }
  return weight;
}

inline std::optional<std::string> pick_concept_query(const CandidatePool& pool, const ConceptMap* concepts, int prf_depth) {
  const auto weight = feedback_concept_weights(pool, concepts, prf_depth);
  return detail::choice_at(pool, detail::best_by(pool, [&](std::size_t i) {
                             if (!concepts) return 0.0;
                             auto it = concepts->find(pool.candidates[i].media_id);
                             if (it == concepts->end()) return 0.0;
                             double s = 0.0;
                             for (const auto& k : it->second.concepts) {
                               auto w = weight.find(k.label);
                               if (w != weight.end()) s += w->second;
                             }
                             return s;
                           }));
}

// Without a profile every prior is equal and BM25 order decides.
inline std::optional<std::string> pick_temporal(const CandidatePool& pool, const Corpus& corpus, const TemporalProfile* profile) {
  return detail::choice_at(pool, detail::best_by(pool, [&](std::size_t i) {
                             const auto& c = pool.candidates[i];
                             if (!profile) return c.score;
                             const auto* doc = corpus.find_document(c.doc_id);
                             return doc ? c.score * profile->prior(doc->timestamp) : 0.0;
                           }));
}

// Uniform over every media item in the corpus; seeded per story and segment.
inline std::optional<std::string> pick_random(const Corpus& corpus, std::uint64_t seed, std::string_view story_id, std::size_t segment) {
  std::vector<const MediaRef*> all;
  for (const auto& d : corpus.documents()) {
    for (const auto& m : d.media) all.push_back(&m);
  }
  if (all.empty()) return std::nullopt;
  std::mt19937_64 rng(detail::fnv1a(story_id, seed * 0x9E3779B97F4A7C15ull + segment + 1));
  std::uniform_int_distribution<std::size_t> pick(0, all.size() - 1);
  return all[pick(rng)]->media_id;
}

inline std::vector<CandidatePool> candidate_pools(const Storyline& story, const IllustrationInputs& in, const IllustratorConfig& cfg) {
  std::vector<CandidatePool> pools;
  pools.reserve(story.size());
  for (const auto& seg : story.segments) pools.push_back(candidate_pool(seg, in.corpus, in.index, cfg.bm25, cfg.pool_size));
  return pools;
}

inline IllustratedStoryline illustrate(const Storyline& story, const IllustrationInputs& in, const IllustratorConfig& cfg) {
  cfg.validate();
  IllustratedStoryline out{story.story_id, {}, std::string(to_string(cfg.method))};
  for (std::size_t i = 0; i < story.size(); ++i) {
    if (cfg.method == IllustratorMethod::random) {
      out.choices.push_back(pick_random(in.corpus, cfg.random_seed, story.story_id, i));
      continue;
    }
    const auto pool = candidate_pool(story.segments[i], in.corpus, in.index, cfg.bm25, cfg.pool_size);
    switch (cfg.method) {
      case IllustratorMethod::bm25: out.choices.push_back(pick_bm25(pool)); break;
      case IllustratorMethod::retweets: out.choices.push_back(pick_retweets(pool, in.corpus)); break;
      case IllustratorMethod::duplicates:
        out.choices.push_back(pick_duplicates(pool, in.features, cfg.duplicate_hamming_threshold));
        break;
      case IllustratorMethod::concept_pool: out.choices.push_back(pick_concept_pool(pool, in.concepts, cfg.concept_top_k)); break;
      case IllustratorMethod::concept_query: out.choices.push_back(pick_concept_query(pool, in.concepts, cfg.prf_depth)); break;
      case IllustratorMethod::temporal: out.choices.push_back(pick_temporal(pool, in.corpus, in.temporal)); break;
      case IllustratorMethod::random: break;
    }
  }
  return out;
}

}  // namespace storyweave
