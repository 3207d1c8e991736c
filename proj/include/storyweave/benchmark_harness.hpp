#pragma once

// End-to-end runs: load an event, illustrate every story with every requested
// method, join with judgments (recorded or simulated) and emit per-method
// Quality reports plus a metric-vs-rating correlation summary.
//
// Output layout under the run's output directory:
//   illustrated/<method>/<story_id>.json   one illustrated-storyline record
//   reports/<method>.table                 TSV of per-story scores
//   reports/summary                        human-readable summary
//   reports/summary.json                   the same, machine-readable

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "storyweave/common.hpp"
#include "storyweave/illustrators.hpp"
#include "storyweave/quality_metric.hpp"
#include "storyweave/story_model.hpp"
#include "storyweave/synthetic.hpp"
#include "storyweave/text_retrieval.hpp"
#include "storyweave/transition_engine.hpp"
#include "storyweave/visual_features.hpp"

namespace storyweave {

// An illustrator or a transition baseline.
using MethodId = std::variant<IllustratorMethod, TransitionKind>;

inline std::optional<MethodId> parse_method(std::string_view name) {
  if (auto m = parse_illustrator(name)) return MethodId{*m};
  if (auto t = parse_transition(name)) return MethodId{*t};
  return std::nullopt;
}

inline std::string method_name(const MethodId& id) {
  return std::visit([](auto m) { return std::string(to_string(m)); }, id);
}

inline std::vector<std::string> all_method_names() {
  std::vector<std::string> names(kIllustratorNames.begin(), kIllustratorNames.end());
  names.insert(names.end(), kTransitionNames.begin(), kTransitionNames.end());
  return names;
}

// Where transition baselines draw their per-segment pools from.
enum class PoolSource { bm25, relevant };

inline PoolSource parse_pool_source(std::string_view name) {
  if (name == "bm25") return PoolSource::bm25;
  if (name == "relevant") return PoolSource::relevant;
  throw ValidationError(fmt::format("unknown transition pool source '{}' (bm25, relevant)", name));
}

struct RunConfig {
  IllustratorConfig illustrator;
  int transition_pool_size = 10;
  int histogram_bins = 8;
  PoolSource transition_pools = PoolSource::bm25;
};

// Recognised keys: pool_size, duplicate_hamming_threshold, prf_depth,
// concept_top_k, temporal_sigma_days, random_seed, bm25_k1, bm25_b,
// transition_pool_size, histogram_bins, transition_pools ("bm25" or
// "relevant"). Unknown keys are rejected.
inline RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  auto& ic = c.illustrator;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "pool_size") ic.pool_size = value.get<int>();
      else if (key == "duplicate_hamming_threshold") ic.duplicate_hamming_threshold = value.get<int>();
      else if (key == "prf_depth") ic.prf_depth = value.get<int>();
      else if (key == "concept_top_k") ic.concept_top_k = value.get<int>();
      else if (key == "temporal_sigma_days") ic.temporal_sigma_days = value.get<double>();
      else if (key == "random_seed") ic.random_seed = value.get<std::uint64_t>();
      else if (key == "bm25_k1") ic.bm25.k1 = value.get<double>();
      else if (key == "bm25_b") ic.bm25.b = value.get<double>();
      else if (key == "transition_pool_size") c.transition_pool_size = value.get<int>();
      else if (key == "histogram_bins") c.histogram_bins = value.get<int>();
      else if (key == "transition_pools") c.transition_pools = parse_pool_source(value.get<std::string>());
      else throw ValidationError(fmt::format("unknown config key '{}'", key));
    } catch (const json::exception&) {
      throw ValidationError(fmt::format("config key '{}' has the wrong type", key));
    }
  }
  ic.validate();
  if (c.transition_pool_size < 1) throw ValidationError("transition_pool_size must be >= 1");
  if (c.histogram_bins < 2 || c.histogram_bins > 256) throw ValidationError("histogram_bins must lie in [2, 256]");
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  try {
    return run_config_from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("{}: malformed config: {}", path.string(), e.what()));
  }
}

// Everything loaded for one event: corpus (already crawl-filtered), stories,
// sidecars, pixel features, index and temporal profile.
struct EventData {
  Corpus corpus;
  std::optional<CrawlSpec> spec;
  std::vector<Storyline> stories;
  ConceptMap concepts;
  EmbeddingMap embeddings;
  FeatureStore features;
  InvertedIndex index;
  TemporalProfile temporal;
  Diagnostics diagnostics;

  IllustrationInputs inputs() const { return {corpus, index, &features, &concepts, &temporal}; }
  TransitionFeatures transition_features() const { return {&features, &embeddings, &concepts}; }
};

struct EventPaths {
  std::filesystem::path corpus;
  std::optional<std::filesystem::path> crawl_spec;
  std::vector<std::filesystem::path> storylines;
  std::optional<std::filesystem::path> concepts;
  std::optional<std::filesystem::path> embeddings;
};

inline void merge_diagnostics(Diagnostics& into, const Diagnostics& from, std::string_view prefix) {
  into.skipped += from.skipped;
  for (const auto& w : from.warnings) into.warn(fmt::format("{}: {}", prefix, w));
}

inline EventData load_event(const EventPaths& paths, const RunConfig& config) {
  EventData ev;
  auto loaded = load_corpus(paths.corpus);
  merge_diagnostics(ev.diagnostics, loaded.diagnostics, paths.corpus.string());
  ev.corpus = std::move(loaded.corpus);
  if (paths.crawl_spec) {
    ev.spec = load_crawl_spec(*paths.crawl_spec);
    ev.corpus = filter_corpus(ev.corpus, *ev.spec);
  }
  for (const auto& p : paths.storylines) {
    auto s = load_storylines(p);
    merge_diagnostics(ev.diagnostics, s.diagnostics, p.string());
    for (auto& story : s.stories) ev.stories.push_back(std::move(story));
  }
  if (paths.concepts) {
    auto c = load_concepts(*paths.concepts);
    merge_diagnostics(ev.diagnostics, c.diagnostics, paths.concepts->string());
    ev.concepts = std::move(c.entries);
  }
  if (paths.embeddings) {
    auto e = load_embeddings(*paths.embeddings);
    merge_diagnostics(ev.diagnostics, e.diagnostics, paths.embeddings->string());
    ev.embeddings = std::move(e.entries);
  }
  ev.features = extract_corpus_features(ev.corpus, config.histogram_bins);
  merge_diagnostics(ev.diagnostics, ev.features.diagnostics(), "features");
  ev.index = build_index(ev.corpus);
  std::optional<std::pair<Date, Date>> span;
  if (ev.spec) span = std::pair{ev.spec->span_start, ev.spec->span_end};
  ev.temporal = TemporalProfile::build(ev.corpus, config.illustrator.temporal_sigma_days, span);
  return ev;
}

// The media judged relevant for each segment, in ground-truth order.
inline SegmentPools relevant_transition_pools(const Storyline& story, const GroundTruth& truth, TransitionKind kind,
                                              const TransitionFeatures& features, int pool_size) {
  if (pool_size < 1) throw ValidationError("transition pool size must be >= 1");
  const StoryTruth* st = truth.find(story.story_id);
  if (!st) throw NotFoundError(fmt::format("no relevance data for story '{}'", story.story_id));
  SegmentPools pools;
  for (std::size_t i = 0; i < story.size(); ++i) {
    std::vector<std::string> ids;
    if (i < st->segments.size()) {
      for (const auto& r : st->segments[i].relevant) ids.push_back(r.media_id);
    }
    pools.push_back(featured_only(ids, kind, features, static_cast<std::size_t>(pool_size)));
  }
  return pools;
}

// `relevant` is required when transition pools come from relevance data.
inline IllustratedStoryline run_method(const MethodId& method, const Storyline& story, const EventData& ev, const RunConfig& config,
                                       const GroundTruth* relevant = nullptr) {
  if (std::holds_alternative<IllustratorMethod>(method)) {
    auto cfg = config.illustrator;
    cfg.method = std::get<IllustratorMethod>(method);
    return illustrate(story, ev.inputs(), cfg);
  }
  const auto kind = std::get<TransitionKind>(method);
  const auto features = ev.transition_features();
  SegmentPools pools;
  if (config.transition_pools == PoolSource::relevant) {
    if (!relevant) throw ValidationError("transition pools from relevance data need a ground-truth file");
    pools = relevant_transition_pools(story, *relevant, kind, features, config.transition_pool_size);
  } else {
    pools = bm25_transition_pools(story, ev.inputs(), config.illustrator, kind, features, config.transition_pool_size);
  }
  return illustrate_transitions(story, pools, kind, features);
}

// ---------------------------------------------------------------------------
// Scoring

struct StoryScore {
  std::string story_id;
  double quality = 0.0;
  std::size_t no_illustration = 0;
  std::size_t annotators = 0;
  double overall_mean = 0.0;
};

struct MethodReport {
  std::string method_name;
  std::vector<StoryScore> stories;  // scored stories, input order
  std::vector<std::string> excluded;  // stories without usable judgments
  double mean_quality = 0.0;
  double median_quality = 0.0;
  std::size_t no_illustration_segments = 0;  // over scored and excluded stories
};

struct Evaluation {
  std::vector<MethodReport> reports;
  std::optional<Correlation> correlation;  // pooled over every scored (story, method)
  std::size_t correlation_points = 0;
  double agreement = 1.0;
  Diagnostics diagnostics;
};

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

inline void finalize_report(MethodReport& r) {
  std::vector<double> q;
  for (const auto& s : r.stories) q.push_back(s.quality);
  r.mean_quality = mean_of(q);
  r.median_quality = median_of(q);
}

// Groups illustrated storylines by method (first-seen order) and scores each
// against the judgments `lookup` returns for it.
template <typename Lookup>
Evaluation evaluate_illustrations(const std::vector<IllustratedStoryline>& illustrated, Lookup lookup, const MetricParams& params) {
  Evaluation ev;
  std::map<std::string, std::size_t> report_of;
  std::vector<double> metric, ratings;
  std::vector<double> agreements;
  for (const auto& story : illustrated) {
    auto [it, inserted] = report_of.emplace(story.method_name, ev.reports.size());
    if (inserted) {
      ev.reports.push_back({});
      ev.reports.back().method_name = story.method_name;
    }
    auto& report = ev.reports[it->second];
    report.no_illustration_segments += story.no_illustration_count();
    const std::vector<JudgmentSet> sets = lookup(story);
    std::vector<JudgmentSet> usable;
    for (const auto& j : sets) {
      if (j.s.size() == story.choices.size() && validate_judgment(j, story.choices.size()).empty()) {
        usable.push_back(j);
      } else {
        ev.diagnostics.warn(fmt::format("judgment by '{}' for '{}' ({}) does not fit the story; ignored", j.annotator_id,
                                        story.story_id, story.method_name));
      }
    }
    if (usable.empty() || story.choices.size() < 2) {
      report.excluded.push_back(story.story_id);
      continue;
    }
    const auto consensus = aggregate_judgments(usable);
    StoryScore score;
    score.story_id = story.story_id;
    score.quality = story_quality(apply_no_illustration(consensus.s, story), consensus.t, params);
    score.no_illustration = story.no_illustration_count();
    score.annotators = usable.size();
    double rating_sum = 0.0;
    for (const auto& j : usable) rating_sum += j.overall_rating;
    score.overall_mean = rating_sum / static_cast<double>(usable.size());
    metric.push_back(score.quality);
    ratings.push_back(score.overall_mean);
    if (usable.size() > 1) agreements.push_back(raw_agreement(usable));
    report.stories.push_back(std::move(score));
  }
  for (auto& r : ev.reports) finalize_report(r);
  ev.correlation_points = metric.size();
  if (metric.size() >= 3) {
    try {
      ev.correlation = correlate(metric, ratings);
    } catch (const UndefinedCorrelationError&) {
      ev.diagnostics.warn("correlation undefined: constant metric or rating values");
    }
  }
  ev.agreement = agreements.empty() ? 1.0 : mean_of(agreements);
  return ev;
}

// Judgments whose method is empty apply to every method.
inline auto judgment_lookup(const std::vector<JudgmentSet>& judgments) {
  return [&judgments](const IllustratedStoryline& story) {
    std::vector<JudgmentSet> out;
    for (const auto& j : judgments) {
      if (j.story_id == story.story_id && (j.method_name.empty() || j.method_name == story.method_name)) out.push_back(j);
    }
    return out;
  };
}

// ---------------------------------------------------------------------------
// Report rendering

inline std::string render_table(const MethodReport& r) {
  std::string out = "story_id\tquality\tno_illustration\tannotators\toverall_mean\n";
  for (const auto& s : r.stories) {
    out += fmt::format("{}\t{}\t{}\t{}\t{}\n", s.story_id, format_real(s.quality), s.no_illustration, s.annotators,
                       format_real(s.overall_mean));
  }
  return out;
}

inline json summary_json(const Evaluation& ev) {
  json methods = json::array();
  for (const auto& r : ev.reports) {
    methods.push_back({{"method", r.method_name},
                       {"stories_scored", r.stories.size()},
                       {"stories_excluded", r.excluded},
                       {"mean_quality", format_real(r.mean_quality)},
                       {"median_quality", format_real(r.median_quality)},
                       {"no_illustration_segments", r.no_illustration_segments}});
  }
  json corr = nullptr;
  if (ev.correlation) {
    corr = {{"points", ev.correlation_points},
            {"pearson", format_real(ev.correlation->pearson)},
            {"spearman", format_real(ev.correlation->spearman)}};
  }
  return {{"methods", std::move(methods)}, {"correlation", std::move(corr)}, {"annotator_agreement", format_real(ev.agreement)}};
}

inline std::string render_summary(const Evaluation& ev) {
  std::string out = fmt::format("{:<16} {:>7} {:>8} {:>10} {:>10} {:>15}\n", "method", "stories", "excluded", "mean", "median",
                                "no_illustration");
  for (const auto& r : ev.reports) {
    out += fmt::format("{:<16} {:>7} {:>8} {:>10} {:>10} {:>15}\n", r.method_name, r.stories.size(), r.excluded.size(),
                       fmt::format("{:.4f}", r.mean_quality), fmt::format("{:.4f}", r.median_quality), r.no_illustration_segments);
  }
  if (ev.correlation) {
    out += fmt::format("correlation over {} illustrated stories: pearson {:.4f}, spearman {:.4f}\n", ev.correlation_points,
                       ev.correlation->pearson, ev.correlation->spearman);
  } else {
    out += fmt::format("correlation over {} illustrated stories: undefined\n", ev.correlation_points);
  }
  out += fmt::format("annotator agreement: {:.4f}\n", ev.agreement);
  return out;
}

inline void write_reports(const Evaluation& ev, const std::filesystem::path& output_dir) {
  for (const auto& r : ev.reports) write_file_atomic(output_dir / "reports" / (r.method_name + ".table"), render_table(r));
  write_file_atomic(output_dir / "reports" / "summary", render_summary(ev));
  write_file_atomic(output_dir / "reports" / "summary.json", summary_json(ev).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Manifest

struct RunManifest {
  std::string event_name;
  EventPaths paths;
  std::vector<std::string> methods;
  RunConfig config;
  MetricParams params;
  std::filesystem::path output_dir;
  std::uint64_t random_seed = 0;
  std::optional<std::filesystem::path> judgments;
  std::optional<std::filesystem::path> ground_truth;
  int annotators = 3;
  double noise_rate = 0.0;

  void validate() const {
    if (methods.empty()) throw ValidationError("manifest: methods must be non-empty");
    for (const auto& m : methods) {
      if (!parse_method(m)) throw ValidationError(fmt::format("manifest: unknown method '{}'", m));
    }
    auto must_exist = [](const std::filesystem::path& p) {
      if (!std::filesystem::exists(p)) throw ValidationError(fmt::format("manifest: '{}' does not exist", p.string()));
    };
    must_exist(paths.corpus);
    if (paths.crawl_spec) must_exist(*paths.crawl_spec);
    for (const auto& p : paths.storylines) must_exist(p);
    if (paths.concepts) must_exist(*paths.concepts);
    if (paths.embeddings) must_exist(*paths.embeddings);
    if (judgments) must_exist(*judgments);
    if (ground_truth) must_exist(*ground_truth);
    if (!judgments && !ground_truth) throw ValidationError("manifest: needs judgments or ground_truth");
    if (annotators < 1) throw ValidationError("manifest: annotators must be >= 1");
    if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) throw ValidationError("manifest: noise_rate must lie in [0, 1]");
    params.validate();
  }
};

// Relative paths resolve against `base` (the manifest's directory).
inline RunManifest manifest_from_json(const json& j, const std::filesystem::path& base) {
  auto path = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };
  auto opt_path = [&](const char* key) -> std::optional<std::filesystem::path> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return path(detail::require<std::string>(j, key));
  };
  RunManifest m;
  m.event_name = j.value("event_name", std::string{});
  m.paths.corpus = path(detail::require<std::string>(j, "corpus"));
  m.paths.crawl_spec = opt_path("crawl_spec");
  for (const auto& s : detail::require<std::vector<std::string>>(j, "storylines")) m.paths.storylines.push_back(path(s));
  m.paths.concepts = opt_path("concepts");
  m.paths.embeddings = opt_path("embeddings");
  m.methods = detail::require<std::vector<std::string>>(j, "methods");
  if (j.contains("config")) {
    if (j.at("config").is_string()) {
      m.config = load_run_config(path(j.at("config").get<std::string>()));
    } else {
      m.config = run_config_from_json(j.at("config"));
    }
  }
  m.params.alpha = j.value("alpha", 0.1);
  m.params.beta = j.value("beta", 0.6);
  m.output_dir = path(detail::require<std::string>(j, "output_dir"));
  m.random_seed = j.value("random_seed", std::uint64_t{0});
  m.judgments = opt_path("judgments");
  m.ground_truth = opt_path("ground_truth");
  m.annotators = j.value("annotators", 3);
  m.noise_rate = j.value("noise_rate", 0.0);
  return m;
}

inline RunManifest load_manifest(const std::filesystem::path& path) {
  try {
    return manifest_from_json(json::parse(read_file(path)), path.parent_path());
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("{}: malformed manifest: {}", path.string(), e.what()));
  }
}

// Manifest for a directory written by write_synthetic_event; paths are
// relative to that directory.
inline json synthetic_manifest_json(const std::vector<std::string>& methods, std::uint64_t seed, double noise_rate,
                                    int annotators = 3) {
  const auto p = synthetic_paths("");
  return {{"event_name", "SynthFest"},
          {"corpus", p.corpus.string()},
          {"crawl_spec", p.crawl_spec.string()},
          {"storylines", json::array({p.stories.string()})},
          {"concepts", p.concepts.string()},
          {"embeddings", p.embeddings.string()},
          {"ground_truth", p.ground_truth.string()},
          {"methods", methods},
          {"output_dir", "run"},
          {"random_seed", seed},
          {"annotators", annotators},
          {"noise_rate", noise_rate},
          {"config", {{"random_seed", seed}, {"transition_pools", "relevant"}}}};
}

inline std::uint64_t annotator_seed(std::uint64_t run_seed, std::string_view story_id, std::string_view method, int annotator) {
  std::uint64_t h = detail::fnv1a(story_id, run_seed ^ 0xA0761D6478BD642Full);
  h = detail::fnv1a(method, h);
  return h ^ (static_cast<std::uint64_t>(annotator) * 0x9E3779B97F4A7C15ull);
}

// Simulated judgments for every (story, method) illustration.
inline std::vector<JudgmentSet> simulate_judgments(const GroundTruth& truth, const std::vector<IllustratedStoryline>& illustrated,
                                                   int annotators, double noise_rate, std::uint64_t seed, const MetricParams& params) {
  std::vector<JudgmentSet> out;
  for (const auto& story : illustrated) {
    if (!truth.find(story.story_id)) continue;
    for (int a = 1; a <= annotators; ++a) {
      out.push_back(simulate_annotator(truth, story, noise_rate, annotator_seed(seed, story.story_id, story.method_name, a),
                                       fmt::format("sim-{}", a), params));
    }
  }
  return out;
}

struct BenchmarkResult {
  Evaluation evaluation;
  std::vector<IllustratedStoryline> illustrated;
  Diagnostics diagnostics;
};

inline BenchmarkResult run_benchmark(const RunManifest& manifest) {
  manifest.validate();
  BenchmarkResult result;
  const EventData ev = load_event(manifest.paths, manifest.config);
  result.diagnostics = ev.diagnostics;
  std::optional<GroundTruth> truth;
  if (manifest.ground_truth) truth = load_ground_truth(*manifest.ground_truth);
  for (const auto& name : manifest.methods) {
    const auto method = *parse_method(name);
    for (const auto& story : ev.stories) {
      auto ill = run_method(method, story, ev, manifest.config, truth ? &*truth : nullptr);
      write_file_atomic(manifest.output_dir / "illustrated" / name / (story.story_id + ".json"), to_json(ill).dump(2) + "\n");
      result.illustrated.push_back(std::move(ill));
    }
  }
  std::vector<JudgmentSet> judgments;
  if (manifest.judgments) {
    auto loaded = load_judgments(*manifest.judgments);
    merge_diagnostics(result.diagnostics, loaded.diagnostics, manifest.judgments->string());
    judgments = std::move(loaded.judgments);
  } else {
    judgments = simulate_judgments(*truth, result.illustrated, manifest.annotators,
                                   manifest.noise_rate, manifest.random_seed, manifest.params);
  }
  result.evaluation = evaluate_illustrations(result.illustrated, judgment_lookup(judgments), manifest.params);
  merge_diagnostics(result.diagnostics, result.evaluation.diagnostics, "evaluation");
  write_reports(result.evaluation, manifest.output_dir);
  return result;
}

}  // namespace storyweave
