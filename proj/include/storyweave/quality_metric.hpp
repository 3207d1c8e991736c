#pragma once

// Storyline Quality: a boost on the first segment's relevance plus the
// averaged neighbourhood quality of consecutive segment pairs.
//
//   Quality     = alpha * s_1 + (1 - alpha) / (2 (N - 1)) * sum_{i=2..N} pairwise(i)
//   pairwise(i) = beta * (s_i + s_{i-1}) + (1 - beta) * (s_{i-1} * s_i + t_{i-1})
//
// s_i in {0,1,2} is segment relevance, t_{i-1} in {0,1,2} the coherence of the
// transition from segment i-1 to segment i.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "storyweave/common.hpp"
#include "storyweave/story_model.hpp"

namespace storyweave {

struct MetricParams {
  double alpha = 0.1;
  double beta = 0.6;

  // beta <= 0.5 is rejected unless explicitly allowed; the returned string is
  // then a warning for the caller to surface.
  std::optional<std::string> validate(bool allow_low_beta = false) const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError(fmt::format("alpha {} outside [0, 1]", alpha));
    if (!(beta >= 0.0 && beta <= 1.0)) throw ValidationError(fmt::format("beta {} outside [0, 1]", beta));
    if (beta <= 0.5) {
      if (!allow_low_beta) throw ValidationError(fmt::format("beta {} must exceed 0.5", beta));
      return fmt::format("beta {} <= 0.5: non-relevant illustrations are no longer penalised as intended", beta);
    }
    return std::nullopt;
  }

  // Attained when every judgment is 2; independent of N.
  double max_quality() const { return 2.0 * alpha + (1.0 - alpha) * (3.0 - beta); }
};

inline constexpr int kMinOverallRating = 1;
inline constexpr int kMaxOverallRating = 5;

struct JudgmentSet {
  std::string story_id;
  std::string method_name;  // optional in files; empty when unknown
  std::string annotator_id;
  std::vector<int> s;
  std::vector<int> t;
  int overall_rating = kMinOverallRating;

  friend bool operator==(const JudgmentSet&, const JudgmentSet&) = default;
};

struct ConsensusJudgment {
  std::string story_id;
  std::vector<int> s;
  std::vector<int> t;
  std::size_t annotator_count = 0;
};

namespace detail {

inline void check_judgment_value(int v, std::string_view what) {
  if (v < 0 || v > 2) throw ValidationError(fmt::format("{} value {} outside {{0, 1, 2}}", what, v));
}

}  // namespace detail

inline double pairwise_quality(int s_prev, int s_cur, int t_prev, double beta) {
  detail::check_judgment_value(s_prev, "segment");
  detail::check_judgment_value(s_cur, "segment");
  detail::check_judgment_value(t_prev, "transition");
  return beta * (s_cur + s_prev) + (1.0 - beta) * (s_prev * s_cur + t_prev);
}

inline double story_quality(const std::vector<int>& s, const std::vector<int>& t, const MetricParams& params = {}) {
  const std::size_t n = s.size();
  if (n < 2) throw ValidationError(fmt::format("story_quality: needs at least 2 segments, got {}", n));
  if (t.size() != n - 1) throw ValidationError(fmt::format("story_quality: {} segments need {} transitions, got {}", n, n - 1, t.size()));
  double pairs = 0.0;
  for (std::size_t i = 1; i < n; ++i) pairs += pairwise_quality(s[i - 1], s[i], t[i - 1], params.beta);
  return params.alpha * s[0] + (1.0 - params.alpha) / (2.0 * static_cast<double>(n - 1)) * pairs;
}

// Per-field problems; empty when the judgment is well-formed for a story of
// `segments` segments (or any length when segments is nullopt).
struct FieldError {
  std::string field;
  std::string reason;
};

inline std::vector<FieldError> validate_judgment(const JudgmentSet& j, std::optional<std::size_t> segments = std::nullopt) {
  std::vector<FieldError> errors;
  if (j.story_id.empty()) errors.push_back({"story_id", "must be non-empty"});
  if (j.annotator_id.empty()) errors.push_back({"annotator_id", "must be non-empty"});
  if (segments && j.s.size() != *segments) {
    errors.push_back({"s", fmt::format("expected {} segment scores, got {}", *segments, j.s.size())});
  }
  if (j.s.empty()) errors.push_back({"s", "must be non-empty"});
  const std::size_t want_t = segments ? (*segments == 0 ? 0 : *segments - 1) : (j.s.empty() ? 0 : j.s.size() - 1);
  if (j.t.size() != want_t) errors.push_back({"t", fmt::format("expected {} transition scores, got {}", want_t, j.t.size())});
  for (std::size_t i = 0; i < j.s.size(); ++i) {
    if (j.s[i] < 0 || j.s[i] > 2) errors.push_back({fmt::format("s[{}]", i), fmt::format("value {} outside {{0, 1, 2}}", j.s[i])});
  }
  for (std::size_t i = 0; i < j.t.size(); ++i) {
    if (j.t[i] < 0 || j.t[i] > 2) errors.push_back({fmt::format("t[{}]", i), fmt::format("value {} outside {{0, 1, 2}}", j.t[i])});
  }
  if (j.overall_rating < kMinOverallRating || j.overall_rating > kMaxOverallRating) {
    errors.push_back({"overall_rating", fmt::format("value {} outside [{}, {}]", j.overall_rating, kMinOverallRating, kMaxOverallRating)});
  }
  return errors;
}

namespace detail {

// Median of values in {0,1,2}; an x.5 median rounds down.
inline int median_half_down(std::vector<int> votes) {
  std::sort(votes.begin(), votes.end());
  const std::size_t n = votes.size();
  if (n % 2 == 1) return votes[n / 2];
  return (votes[n / 2 - 1] + votes[n / 2]) / 2;  // integer division floors non-negative sums
}

}  // namespace detail

inline ConsensusJudgment aggregate_judgments(const std::vector<JudgmentSet>& sets) {
  if (sets.empty()) throw ValidationError("aggregate_judgments: needs at least one judgment set");
  const auto& first = sets.front();
  for (const auto& j : sets) {
    if (j.story_id != first.story_id) throw ValidationError("aggregate_judgments: judgments cover different stories");
    if (j.s.size() != first.s.size() || j.t.size() != first.t.size()) {
      throw ValidationError(fmt::format("aggregate_judgments: mismatched lengths for story '{}'", first.story_id));
    }
    for (int v : j.s) detail::check_judgment_value(v, "segment");
    for (int v : j.t) detail::check_judgment_value(v, "transition");
  }
  ConsensusJudgment c{first.story_id, {}, {}, sets.size()};
  auto column = [&](auto member, std::size_t i) {
    std::vector<int> votes;
    votes.reserve(sets.size());
    for (const auto& j : sets) votes.push_back((j.*member)[i]);
    return detail::median_half_down(std::move(votes));
  };
  for (std::size_t i = 0; i < first.s.size(); ++i) c.s.push_back(column(&JudgmentSet::s, i));
  for (std::size_t i = 0; i < first.t.size(); ++i) c.t.push_back(column(&JudgmentSet::t, i));
  return c;
}

// Fraction of annotator pairs giving identical values, over every s and t
// position. 1.0 with fewer than two annotators.
inline double raw_agreement(const std::vector<JudgmentSet>& sets) {
  std::size_t agree = 0, total = 0;
  for (std::size_t a = 0; a < sets.size(); ++a) {
    for (std::size_t b = a + 1; b < sets.size(); ++b) {
      const auto& x = sets[a];
      const auto& y = sets[b];
      for (std::size_t i = 0; i < std::min(x.s.size(), y.s.size()); ++i, ++total) agree += x.s[i] == y.s[i];
      for (std::size_t i = 0; i < std::min(x.t.size(), y.t.size()); ++i, ++total) agree += x.t[i] == y.t[i];
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(agree) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// Correlation

class UndefinedCorrelationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct Correlation {
  double pearson = 0.0;
  double spearman = 0.0;
};

namespace detail {

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelationError("correlation undefined for constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// 1-based ranks; tied values share the mean of their ranks.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace detail

inline Correlation correlate(const std::vector<double>& metric_scores, const std::vector<double>& overall_ratings) {
  if (metric_scores.size() != overall_ratings.size()) throw ValidationError("correlate: inputs differ in length");
  if (metric_scores.size() < 3) throw ValidationError("correlate: needs at least 3 points");
  return {detail::pearson(metric_scores, overall_ratings),
          detail::pearson(detail::average_ranks(metric_scores), detail::average_ranks(overall_ratings))};
}

// ---------------------------------------------------------------------------
// Judgment files: one JSON record per line.

inline json to_json(const JudgmentSet& j) {
  json out = {{"story_id", j.story_id}, {"annotator_id", j.annotator_id}, {"s", j.s}, {"t", j.t}, {"overall_rating", j.overall_rating}};
  if (!j.method_name.empty()) out["method"] = j.method_name;
  return out;
}

inline JudgmentSet judgment_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("judgment is not an object");
  JudgmentSet out;
  out.story_id = detail::require<std::string>(j, "story_id");
  out.annotator_id = detail::require<std::string>(j, "annotator_id");
  out.s = detail::require<std::vector<int>>(j, "s");
  out.t = detail::require<std::vector<int>>(j, "t");
  out.overall_rating = detail::require<int>(j, "overall_rating");
  if (j.contains("method")) out.method_name = detail::require<std::string>(j, "method");
  return out;
}

inline std::string serialize_judgments(const std::vector<JudgmentSet>& sets) {
  std::string out;
  for (const auto& j : sets) {
    out += to_json(j).dump();
    out += '\n';
  }
  return out;
}

struct JudgmentLoad {
  std::vector<JudgmentSet> judgments;
  Diagnostics diagnostics;
};

inline JudgmentLoad parse_judgments(std::string_view text) {
  JudgmentLoad out;
  auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
    try {
      auto j = judgment_from_json(json::parse(lines[i]));
      auto errors = validate_judgment(j);
      if (!errors.empty()) {
        out.diagnostics.skip(i + 1, fmt::format("{}: {}", errors.front().field, errors.front().reason));
        continue;
      }
      out.judgments.push_back(std::move(j));
    } catch (const json::exception& e) {
      out.diagnostics.skip(i + 1, fmt::format("malformed JSON: {}", e.what()));
    } catch (const ValidationError& e) {
      out.diagnostics.skip(i + 1, e.what());
    }
  }
  return out;
}

inline JudgmentLoad load_judgments(const std::filesystem::path& path) { return parse_judgments(read_file(path)); }

// Segments without an illustration are scored as irrelevant regardless of
// what an annotator recorded.
inline std::vector<int> apply_no_illustration(std::vector<int> s, const IllustratedStoryline& story) {
  for (std::size_t i = 0; i < s.size() && i < story.choices.size(); ++i) {
    if (!story.choices[i]) s[i] = 0;
  }
  return s;
}

}  // namespace storyweave
