// Walks one synthetic storyline through retrieval, illustration and scoring.
//
//   storyweave_demo [seed]

#include <cstdlib>
#include <filesystem>
#include <string>

#include <fmt/core.h>

#include "storyweave/storyweave.hpp"

namespace sw = storyweave;

int main(int argc, char** argv) {
  const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1;
  const auto dir = std::filesystem::temp_directory_path() / fmt::format("storyweave-demo-{}", seed);
  std::filesystem::remove_all(dir);

  sw::SyntheticOptions options;
  options.seed = seed;
  options.n_docs = 200;
  options.n_stories = 2;
  const auto event = sw::generate_synthetic_event(options);
  const auto paths = sw::write_synthetic_event(event, dir);
  fmt::print("event {}: {} documents, {} stories in {}\n", event.spec.event_name, event.corpus.size(), event.stories.size(),
             dir.string());

  sw::RunConfig config;
  config.transition_pools = sw::PoolSource::relevant;
  const auto data = sw::load_event({paths.corpus, paths.crawl_spec, {paths.stories}, paths.concepts, paths.embeddings}, config);
  const auto& story = data.stories.front();
  fmt::print("\n{} ({} segments, {} documents after crawl filtering)\n", story.title, story.size(), data.corpus.size());

  for (const auto& seg : story.segments) {
    const auto top = sw::rank_documents(data.index, config.illustrator.bm25, seg.description, 3);
    fmt::print("  {}: \"{}\"\n", seg.segment_id, seg.description);
    for (const auto& d : top) fmt::print("      {} {}\n", d.doc_id, sw::format_real(d.score));
  }

  fmt::print("\n{:<16} {:<32} {:>8}\n", "method", "choices", "quality");
  for (const std::string name : {"bm25", "duplicates", "temporal", "random", "color_histogram"}) {
    const auto ill = sw::run_method(*sw::parse_method(name), story, data, config, &event.truth);
    const auto j = sw::simulate_annotator(event.truth, ill, 0.0, seed, "demo");
    std::string choices;
    for (const auto& c : ill.choices) choices += (choices.empty() ? "" : " ") + c.value_or("-");
    const double q = sw::story_quality(sw::apply_no_illustration(j.s, ill), j.t);
    fmt::print("{:<16} {:<32} {:>8}\n", name, choices, sw::format_real(q));
  }
  fmt::print("\nmaximum quality {}\n", sw::format_real(sw::MetricParams{}.max_quality()));
  std::filesystem::remove_all(dir);
  return 0;
}
