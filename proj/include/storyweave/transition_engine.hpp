#pragma once

// Picks one illustration per segment so that the summed transition cost along
// the storyline chain is minimal. The chain structure makes this an exact
// O(sum_i |pool_i| * |pool_{i+1}|) dynamic program; the exhaustive search is
// kept as an oracle.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "storyweave/common.hpp"
#include "storyweave/illustrators.hpp"
#include "storyweave/story_model.hpp"
#include "storyweave/visual_features.hpp"

namespace storyweave {

enum class TransitionKind { cnn_dense, visual_concepts, color_histogram, color_moments, visual_entropy, luminance };

inline constexpr std::array<std::string_view, 6> kTransitionNames = {
    "cnn_dense", "visual_concepts", "color_histogram", "color_moments", "visual_entropy", "luminance"};

inline std::string_view to_string(TransitionKind k) { return kTransitionNames[static_cast<std::size_t>(k)]; }

inline std::optional<TransitionKind> parse_transition(std::string_view name) {
  for (std::size_t i = 0; i < kTransitionNames.size(); ++i) {
    if (kTransitionNames[i] == name) return static_cast<TransitionKind>(i);
  }
  return std::nullopt;
}

inline constexpr double kInfiniteCost = std::numeric_limits<double>::infinity();

// Feature sources for transition costs; any may be null.
struct TransitionFeatures {
  const FeatureStore* pixels = nullptr;
  const EmbeddingMap* embeddings = nullptr;
  const ConceptMap* concepts = nullptr;
};

// Whether `media_id` has what `kind` needs.
inline bool has_transition_features(TransitionKind kind, std::string_view media_id, const TransitionFeatures& f) {
  const std::string id(media_id);
  switch (kind) {
    case TransitionKind::cnn_dense: return f.embeddings && f.embeddings->count(id);
    case TransitionKind::visual_concepts: {
      if (!f.concepts) return false;
      auto it = f.concepts->find(id);
      return it != f.concepts->end() && it->second.top_label().has_value();
    }
    default: return f.pixels && f.pixels->find(id);
  }
}

// Missing features on either side cost infinity.
inline double transition_cost(TransitionKind kind, std::string_view a, std::string_view b, const TransitionFeatures& f) {
  if (!has_transition_features(kind, a, f) || !has_transition_features(kind, b, f)) return kInfiniteCost;
  switch (kind) {
    case TransitionKind::cnn_dense:
      return euclidean_distance(f.embeddings->at(std::string(a)).vector, f.embeddings->at(std::string(b)).vector);
    case TransitionKind::visual_concepts:
      return f.concepts->at(std::string(a)).top_label() == f.concepts->at(std::string(b)).top_label() ? 0.0 : 1.0;
    case TransitionKind::color_histogram: return histogram_distance(f.pixels->find(a)->histogram, f.pixels->find(b)->histogram);
    case TransitionKind::color_moments: return moments_distance(f.pixels->find(a)->moments, f.pixels->find(b)->moments);
    case TransitionKind::visual_entropy: return std::abs(f.pixels->find(a)->entropy - f.pixels->find(b)->entropy);
    case TransitionKind::luminance: return std::abs(f.pixels->find(a)->luminance - f.pixels->find(b)->luminance);
  }
  return kInfiniteCost;
}

struct SelectionResult {
  std::vector<std::size_t> choices;  // one index per pool
  double total_cost = 0.0;
  std::string method_name;
  std::uint64_t cost_evaluations = 0;  // pairwise costs evaluated while filling the table
};

namespace detail {

inline void check_pools(std::span<const std::size_t> pool_sizes) {
  if (pool_sizes.empty()) throw ValidationError("select_sequence: needs at least one pool");
  for (std::size_t i = 0; i < pool_sizes.size(); ++i) {
    if (pool_sizes[i] == 0) throw ValidationError(fmt::format("select_sequence: pool for segment {} is empty", i + 1));
  }
}

// Left-to-right sum of the chosen chain.
template <typename CostFn>
double chain_cost(const std::vector<std::size_t>& choices, CostFn& cost) {
  double total = 0.0;
  for (std::size_t i = 1; i < choices.size(); ++i) total += cost(i, choices[i - 1], choices[i]);
  return total;
}

}  // namespace detail

// cost(i, a, b): cost of moving from candidate a of pool i-1 to candidate b of
// pool i, for i >= 1. Among minimal chains the lexicographically smallest index
// vector wins.
template <typename CostFn>
SelectionResult select_sequence_dp(std::span<const std::size_t> pool_sizes, CostFn cost) {
  detail::check_pools(pool_sizes);
  const std::size_t n = pool_sizes.size();
  SelectionResult result;
  // suffix[i][j]: minimal cost of the chain from pool i onward, starting at candidate j.
  std::vector<std::vector<double>> suffix(n);
  suffix[n - 1].assign(pool_sizes[n - 1], 0.0);
  for (std::size_t i = n - 1; i-- > 0;) {
    suffix[i].assign(pool_sizes[i], kInfiniteCost);
    for (std::size_t j = 0; j < pool_sizes[i]; ++j) {
      double best = kInfiniteCost;
      for (std::size_t k = 0; k < pool_sizes[i + 1]; ++k) {
        const double c = cost(i + 1, j, k) + suffix[i + 1][k];
        ++result.cost_evaluations;
        if (c < best) best = c;
      }
      suffix[i][j] = best;
    }
  }
  // Forward pass: the smallest index attaining the optimum at every step.
  std::size_t first = 0;
  for (std::size_t j = 1; j < pool_sizes[0]; ++j) {
    if (suffix[0][j] < suffix[0][first]) first = j;
  }
  result.choices.push_back(first);
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t prev = result.choices.back();
    const double target = suffix[i - 1][prev];
    std::size_t pick = 0;
    bool found = false;
    for (std::size_t k = 0; k < pool_sizes[i]; ++k) {
      if (cost(i, prev, k) + suffix[i][k] == target) {
        pick = k;
        found = true;
        break;
      }
    }
    // All-infinite rows compare equal above; this only guards NaN costs.
    if (!found) pick = 0;
    result.choices.push_back(pick);
  }
  result.total_cost = detail::chain_cost(result.choices, cost);
  return result;
}

inline constexpr std::size_t kBruteForceLimit = 1'000'000;

// Exhaustive search in lexicographic order; the first strict minimum is kept.
template <typename CostFn>
SelectionResult select_sequence_bruteforce(std::span<const std::size_t> pool_sizes, CostFn cost) {
  detail::check_pools(pool_sizes);
  std::size_t paths = 1;
  for (auto s : pool_sizes) {
    if (paths > kBruteForceLimit / s) throw ValidationError("select_sequence_bruteforce: more than 10^6 paths");
    paths *= s;
  }
  const std::size_t n = pool_sizes.size();
  std::vector<std::size_t> current(n, 0);
  SelectionResult result;
  bool have = false;
  for (std::size_t p = 0; p < paths; ++p) {
    const double c = detail::chain_cost(current, cost);
    if (!have || c < result.total_cost) {
      result.choices = current;
      result.total_cost = c;
      have = true;
    }
    for (std::size_t i = n; i-- > 0;) {
      if (++current[i] < pool_sizes[i]) break;
      current[i] = 0;
    }
  }
  return result;
}

// Chain selection over media-id pools with a feature-based cost.
inline SelectionResult select_transitions(const std::vector<std::vector<std::string>>& pools, TransitionKind kind,
                                          const TransitionFeatures& features) {
  std::vector<std::size_t> sizes;
  for (const auto& p : pools) sizes.push_back(p.size());
  auto result = select_sequence_dp(sizes, [&](std::size_t i, std::size_t a, std::size_t b) {
    return transition_cost(kind, pools[i - 1][a], pools[i][b], features);
  });
  result.method_name = std::string(to_string(kind));
  return result;
}

// Per-segment pools for the transition baselines, already restricted to media
// carrying the features the cost needs. An empty pool means the segment gets
// no illustration.
using SegmentPools = std::vector<std::vector<std::string>>;

inline std::vector<std::string> featured_only(const std::vector<std::string>& ids, TransitionKind kind,
                                              const TransitionFeatures& features, std::size_t limit) {
  std::vector<std::string> out;
  for (const auto& id : ids) {
    if (out.size() >= limit) break;
    if (has_transition_features(kind, id, features)) out.push_back(id);
  }
  return out;
}

// The first `pool_size` featured candidates of each segment's BM25 pool.
inline SegmentPools bm25_transition_pools(const Storyline& story, const IllustrationInputs& in, const IllustratorConfig& cfg,
                                          TransitionKind kind, const TransitionFeatures& features, int pool_size) {
  if (pool_size < 1) throw ValidationError("transition pool size must be >= 1");
  SegmentPools pools;
  for (const auto& seg : story.segments) {
    std::vector<std::string> ids;
    for (const auto& c : candidate_pool(seg, in.corpus, in.index, cfg.bm25, cfg.pool_size).candidates) ids.push_back(c.media_id);
    pools.push_back(featured_only(ids, kind, features, static_cast<std::size_t>(pool_size)));
  }
  return pools;
}

// Runs the chain selection over `pools`; segments whose pool is empty get no
// illustration and drop out of the chain.
inline IllustratedStoryline illustrate_transitions(const Storyline& story, const SegmentPools& pools, TransitionKind kind,
                                                   const TransitionFeatures& features) {
  if (pools.size() != story.size()) {
    throw ValidationError(fmt::format("story '{}' has {} segments but {} pools", story.story_id, story.size(), pools.size()));
  }
  IllustratedStoryline out{story.story_id, std::vector<std::optional<std::string>>(story.size()), std::string(to_string(kind))};
  SegmentPools chain;
  std::vector<std::size_t> segment_of;
  for (std::size_t i = 0; i < pools.size(); ++i) {
    if (pools[i].empty()) continue;
    chain.push_back(pools[i]);
    segment_of.push_back(i);
  }
  if (chain.empty()) return out;
  const auto selection = select_transitions(chain, kind, features);
  for (std::size_t p = 0; p < chain.size(); ++p) out.choices[segment_of[p]] = chain[p][selection.choices[p]];
  return out;
}

}  // namespace storyweave
