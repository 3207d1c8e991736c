// storyweave: batch entry point for filtering, retrieval, illustration,
// evaluation, synthetic fixtures, benchmark runs and the annotation service.
//
// Exit codes: 0 success, 1 validation error or bad usage, 2 runtime error.

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "storyweave/annotation_http.hpp"
#include "storyweave/storyweave.hpp"

namespace sw = storyweave;

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("storyweave");
  logger->set_pattern("%^%l%$: %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("STORYWEAVE_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only honour recognised ones.
    if (level != spdlog::level::off || std::string_view(env) == "off") spdlog::set_level(level);
  }
}

void report(const sw::Diagnostics& d, std::string_view what) {
  for (const auto& w : d.warnings) spdlog::warn("{}", w);
  if (d.skipped > 0) spdlog::info("{}: skipped {} record(s)", what, d.skipped);
}

std::string method_list() {
  std::string out;
  for (const auto& n : sw::all_method_names()) out += (out.empty() ? "" : ", ") + n;
  return out;
}

struct CommonInputs {
  std::string corpus;
  std::string spec;
  std::vector<std::string> stories;
  std::string concepts;
  std::string embeddings;
};

std::optional<std::filesystem::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::filesystem::path(s);
}

sw::EventPaths event_paths(const CommonInputs& in) {
  sw::EventPaths p;
  p.corpus = in.corpus;
  p.crawl_spec = opt_path(in.spec);
  for (const auto& s : in.stories) p.storylines.emplace_back(s);
  p.concepts = opt_path(in.concepts);
  p.embeddings = opt_path(in.embeddings);
  return p;
}

int cmd_filter(const CommonInputs& in, const std::string& out) {
  auto loaded = sw::load_corpus(in.corpus);
  report(loaded.diagnostics, in.corpus);
  const auto spec = sw::load_crawl_spec(in.spec);
  const auto kept = sw::filter_corpus(loaded.corpus, spec);
  sw::write_file_atomic(out, sw::serialize_corpus(kept));
  fmt::print("kept {} dropped {}\n", kept.size(), loaded.corpus.size() - kept.size());
  return 0;
}

int cmd_rank(const std::string& corpus_path, const std::string& query, int k, double k1, double b) {
  auto loaded = sw::load_corpus(corpus_path);
  report(loaded.diagnostics, corpus_path);
  const sw::Bm25Params params{k1, b};
  params.validate();
  const auto index = sw::build_index(loaded.corpus);
  const auto ranked = sw::rank_documents(index, params, query, k);
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    fmt::print("{}\t{}\t{}\n", i + 1, ranked[i].doc_id, sw::format_real(ranked[i].score));
  }
  return 0;
}

int cmd_illustrate(const CommonInputs& in, const std::string& method, const std::string& config_path,
                   std::optional<std::uint64_t> seed, const std::string& relevant_path, const std::string& out) {
  const auto id = sw::parse_method(method);
  if (!id) throw sw::ValidationError(fmt::format("unknown method '{}'; valid methods: {}", method, method_list()));
  auto config = config_path.empty() ? sw::RunConfig{} : sw::load_run_config(config_path);
  if (seed) config.illustrator.random_seed = *seed;
  std::optional<sw::GroundTruth> relevant;
  if (!relevant_path.empty()) {
    relevant = sw::load_ground_truth(relevant_path);
    config.transition_pools = sw::PoolSource::relevant;
  }
  const auto ev = sw::load_event(event_paths(in), config);
  report(ev.diagnostics, "inputs");
  std::vector<sw::IllustratedStoryline> results;
  std::size_t missing = 0;
  for (const auto& story : ev.stories) {
    results.push_back(sw::run_method(*id, story, ev, config, relevant ? &*relevant : nullptr));
    missing += results.back().no_illustration_count();
  }
  sw::write_file_atomic(out, sw::serialize_illustrated(results));
  fmt::print("illustrated {} stories with {} ({} segments without illustration)\n", results.size(), method, missing);
  return 0;
}

int cmd_evaluate(const std::string& illustrated_path, const std::string& judgments_path, double alpha, double beta,
                 bool allow_low_beta, const std::string& out) {
  const sw::MetricParams params{alpha, beta};
  if (auto warning = params.validate(allow_low_beta)) spdlog::warn("{}", *warning);
  const auto illustrated = sw::load_illustrated(illustrated_path);
  auto judgments = sw::load_judgments(judgments_path);
  report(judgments.diagnostics, judgments_path);
  const auto ev = sw::evaluate_illustrations(illustrated, sw::judgment_lookup(judgments.judgments), params);
  report(ev.diagnostics, "evaluation");
  for (const auto& r : ev.reports) {
    for (const auto& s : r.stories) fmt::print("{}\t{}\t{}\n", s.story_id, r.method_name, sw::format_real(s.quality));
    for (const auto& s : r.excluded) fmt::print("{}\t{}\texcluded\n", s, r.method_name);
  }
  fmt::print("{}", sw::render_summary(ev));
  if (!out.empty()) sw::write_reports(ev, out);
  return 0;
}

int cmd_synth(const sw::SyntheticOptions& opts, const std::string& out) {
  const auto ev = sw::generate_synthetic_event(opts);
  sw::write_synthetic_event(ev, out);
  const std::vector<std::string> methods = {"bm25", "random"};
  sw::write_file_atomic(std::filesystem::path(out) / "manifest.json",
                        sw::synthetic_manifest_json(methods, opts.seed, 0.0).dump(2) + "\n");
  fmt::print("wrote {} documents, {} stories, {} media files to {}\n", ev.corpus.size(), ev.stories.size(), ev.media.size(), out);
  return 0;
}

int cmd_bench(const std::string& manifest_path, const std::string& out) {
  auto manifest = sw::load_manifest(manifest_path);
  if (!out.empty()) manifest.output_dir = out;
  const auto result = sw::run_benchmark(manifest);
  report(result.diagnostics, "benchmark");
  fmt::print("{}", sw::render_summary(result.evaluation));
  return 0;
}

httplib::Server* g_server = nullptr;

void stop_server(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(const std::string& store, const std::vector<std::string>& stories, const std::string& illustrated,
              const std::vector<std::string>& annotators, const std::string& corpus_path, const std::string& media_dir,
              const std::string& host, int port, std::optional<std::uint64_t> shuffle_seed) {
  sw::ServiceCatalog catalog;
  for (const auto& s : stories) {
    auto loaded = sw::load_storylines(s);
    report(loaded.diagnostics, s);
    for (auto& st : loaded.stories) catalog.stories.push_back(std::move(st));
  }
  catalog.illustrated = sw::load_illustrated(illustrated);
  catalog.annotators = annotators;
  catalog.shuffle_seed = shuffle_seed;
  std::optional<sw::Corpus> corpus;
  if (!corpus_path.empty()) {
    auto loaded = sw::load_corpus(corpus_path);
    report(loaded.diagnostics, corpus_path);
    corpus = std::move(loaded.corpus);
  }
  // With a media directory, relative corpus URIs are served from it.
  catalog.media_uri = [corpus = std::move(corpus), serve_media = !media_dir.empty()](const std::string& id) {
    const sw::MediaRef* m = corpus ? corpus->find_media(id) : nullptr;
    if (!m) return id;
    const auto uri = m->raster_uri();
    if (!uri) return id;
    if (serve_media && std::filesystem::path(*uri).is_relative()) return "/media/" + *uri;
    return *uri;
  };
  sw::AnnotationService service(std::move(catalog), store);
  report(service.replay_diagnostics(), store);
  httplib::Server server;
  sw::bind_annotation_routes(server, service, opt_path(media_dir));
  int bound = port;
  if (port == 0) {
    bound = server.bind_to_any_port(host);
  } else if (!server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw sw::IoError(fmt::format("cannot bind {}:{}", host, port));
  g_server = &server;
  std::signal(SIGINT, stop_server);
  std::signal(SIGTERM, stop_server);
  fmt::print("serving {} tasks on http://{}:{}\n", service.task_count(), host, bound);
  std::fflush(stdout);
  server.listen_after_bind();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Visual storyline benchmark toolkit", "storyweave"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "storyweave 0.1.0");

  CommonInputs in;
  std::string out;

  auto* filter = app.add_subcommand("filter", "Keep the documents matching a crawl spec");
  filter->add_option("--corpus", in.corpus, "Corpus JSONL file")->required();
  filter->add_option("--spec", in.spec, "Crawl spec JSON file")->required();
  filter->add_option("--out", out, "Output corpus JSONL file")->required();

  std::string query;
  int k = 10;
  double k1 = 1.2;
  double b = 0.75;
  auto* rank = app.add_subcommand("rank", "Rank documents against a query with BM25");
  rank->add_option("--corpus", in.corpus, "Corpus JSONL file")->required();
  rank->add_option("--query", query, "Query text")->required();
  rank->add_option("--k", k, "Number of results")->capture_default_str();
  rank->add_option("--k1", k1, "BM25 term-frequency saturation")->capture_default_str();
  rank->add_option("--b", b, "BM25 length normalisation")->capture_default_str();

  std::string method;
  std::string config;
  std::optional<std::uint64_t> seed;
  auto* illustrate = app.add_subcommand("illustrate", "Illustrate storylines with one method");
  illustrate->add_option("--corpus", in.corpus, "Corpus JSONL file")->required();
  illustrate->add_option("--spec", in.spec, "Crawl spec JSON file; the corpus is filtered by it");
  illustrate->add_option("--stories", in.stories, "Storyline JSONL file(s)")->required();
  illustrate->add_option("--concepts", in.concepts, "Concept sidecar JSONL file");
  illustrate->add_option("--embeddings", in.embeddings, "Embedding sidecar JSONL file");
  illustrate->add_option("--method", method, "Method name: " + method_list())->required();
  illustrate->add_option("--config", config, "Illustrator config JSON file");
  illustrate->add_option("--seed", seed, "Seed for the random illustrator");
  std::string relevant;
  illustrate->add_option("--relevant", relevant, "Relevance JSONL file; transition methods draw their pools from it");
  illustrate->add_option("--out", out, "Output JSONL file of illustrated storylines")->required();

  std::string illustrated;
  std::string judgments;
  double alpha = 0.1;
  double beta = 0.6;
  bool allow_low_beta = false;
  auto* evaluate = app.add_subcommand("evaluate", "Score illustrated storylines against judgments");
  evaluate->add_option("--illustrated", illustrated, "Illustrated storylines (JSONL file or directory)")->required();
  evaluate->add_option("--judgments", judgments, "Judgment JSONL file")->required();
  evaluate->add_option("--alpha", alpha, "Weight of the first segment")->capture_default_str();
  evaluate->add_option("--beta", beta, "Relevance/coherence trade-off, must exceed 0.5")->capture_default_str();
  evaluate->add_flag("--allow-low-beta", allow_low_beta, "Accept beta <= 0.5 with a warning");
  evaluate->add_option("--out", out, "Directory for report files");

  sw::SyntheticOptions synth_opts;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic event fixture");
  synth->add_option("--seed", synth_opts.seed, "Generator seed")->capture_default_str();
  synth->add_option("--docs", synth_opts.n_docs, "Number of documents (>= 50)")->capture_default_str();
  synth->add_option("--stories", synth_opts.n_stories, "Number of storylines")->capture_default_str();
  synth->add_option("--image-size", synth_opts.image_size, "Side of generated images in pixels")->capture_default_str();
  synth->add_option("--out", out, "Output directory")->required();

  std::string manifest;
  auto* bench = app.add_subcommand("bench", "Run a benchmark manifest");
  bench->add_option("--manifest", manifest, "Run manifest JSON file")->required();
  bench->add_option("--out", out, "Output directory, overriding the manifest");

  std::string store;
  std::string media_dir;
  std::vector<std::string> annotators;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::uint64_t> shuffle_seed;
  auto* serve = app.add_subcommand("serve", "Start the annotation service");
  serve->add_option("--store", store, "Append-only judgment log (created if missing)")->required();
  serve->add_option("--stories", in.stories, "Storyline JSONL file(s)")->required();
  serve->add_option("--illustrated", illustrated, "Illustrated storylines (JSONL file or directory)")->required();
  serve->add_option("--annotators", annotators, "Annotator ids")->required()->delimiter(',');
  serve->add_option("--corpus", in.corpus, "Corpus JSONL file, used to resolve media URIs");
  serve->add_option("--media-dir", media_dir, "Directory served under /media/");
  serve->add_option("--host", host, "Listen address")->capture_default_str();
  serve->add_option("--port", port, "Listen port; 0 picks a free one")->capture_default_str();
  serve->add_option("--shuffle-seed", shuffle_seed, "Seeded per-annotator task order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return 1;
  }

  try {
    if (*filter) return cmd_filter(in, out);
    if (*rank) return cmd_rank(in.corpus, query, k, k1, b);
    if (*illustrate) return cmd_illustrate(in, method, config, seed, relevant, out);
    if (*evaluate) return cmd_evaluate(illustrated, judgments, alpha, beta, allow_low_beta, out);
    if (*synth) return cmd_synth(synth_opts, out);
    if (*bench) return cmd_bench(manifest, out);
    if (*serve) {
      return cmd_serve(store, in.stories, illustrated, annotators, in.corpus, media_dir, host, port, shuffle_seed);
    }
  } catch (const sw::ValidationError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const sw::NotFoundError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 1;
}
