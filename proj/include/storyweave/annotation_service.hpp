#pragma once

// Task queue and judgment store behind the annotation UI. Transport-free: the
// HTTP binding lives in annotation_http.hpp.
//
// Every state change is appended to a JSONL log before it becomes visible, and
// the log is replayed on start. Readers take an immutable snapshot; writers
// are serialized through one mutex.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "storyweave/common.hpp"
#include "storyweave/illustrators.hpp"
#include "storyweave/quality_metric.hpp"
#include "storyweave/story_model.hpp"

namespace storyweave {

enum class TaskStatus { pending, in_progress, complete };

inline std::string_view to_string(TaskStatus s) {
  switch (s) {
    case TaskStatus::pending: return "pending";
    case TaskStatus::in_progress: return "in_progress";
    case TaskStatus::complete: return "complete";
  }
  return "pending";
}

struct AnnotationTask {
  std::uint64_t task_id = 0;
  std::string story_id;
  std::string method_name;
  std::string annotator_id;
  TaskStatus status = TaskStatus::pending;
};

inline json to_json(const AnnotationTask& t) {
  return {{"task_id", t.task_id},
          {"story_id", t.story_id},
          {"method_name", t.method_name},
          {"annotator_id", t.annotator_id},
          {"status", std::string(to_string(t.status))}};
}

// Submission to a task the annotator has not claimed.
class ConflictError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A rejected judgment with one entry per offending field.
class JudgmentRejected : public ValidationError {
 public:
  explicit JudgmentRejected(std::vector<FieldError> errors)
      : ValidationError(errors.empty() ? "invalid judgment" : errors.front().field + ": " + errors.front().reason),
        errors_(std::move(errors)) {}
  const std::vector<FieldError>& errors() const { return errors_; }

 private:
  std::vector<FieldError> errors_;
};

inline json to_json(const std::vector<FieldError>& errors) {
  json out = json::array();
  for (const auto& e : errors) out.push_back({{"field", e.field}, {"reason", e.reason}});
  return out;
}

// What the service hands out: stories, their illustrations and the annotators.
struct ServiceCatalog {
  std::vector<Storyline> stories;
  std::vector<IllustratedStoryline> illustrated;
  std::vector<std::string> annotators;
  std::optional<std::uint64_t> shuffle_seed;  // per-annotator task order; story/method order when unset
  std::function<std::string(const std::string&)> media_uri;  // media id -> URI; identity when unset
};

// Export filter: comma-separated key:value pairs over story_id, method and
// annotator_id. An empty filter selects everything.
struct ExportFilter {
  std::optional<std::string> story_id;
  std::optional<std::string> method;
  std::optional<std::string> annotator_id;

  bool matches(const JudgmentSet& j) const {
    return (!story_id || *story_id == j.story_id) && (!method || *method == j.method_name) &&
           (!annotator_id || *annotator_id == j.annotator_id);
  }
};

inline ExportFilter parse_export_filter(std::string_view text) {
  ExportFilter f;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view part = text.substr(pos, end - pos);
    pos = end + 1;
    if (part.empty()) continue;
    const std::size_t colon = part.find(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 == part.size()) {
      throw ValidationError(fmt::format("filter term '{}' is not key:value", part));
    }
    const std::string_view key = part.substr(0, colon);
    std::string value(part.substr(colon + 1));
    if (key == "story_id") f.story_id = std::move(value);
    else if (key == "method" || key == "method_name") f.method = std::move(value);
    else if (key == "annotator_id" || key == "annotator") f.annotator_id = std::move(value);
    else throw ValidationError(fmt::format("unknown filter key '{}'", key));
  }
  return f;
}

class AnnotationService {
 public:
  // Opens (or creates) the log at `log_path` and replays it.
  AnnotationService(ServiceCatalog catalog, std::filesystem::path log_path)
      : catalog_(std::move(catalog)), log_path_(std::move(log_path)) {
    build_tasks();
    auto state = std::make_shared<State>();
    state->status.assign(tasks_.size(), TaskStatus::pending);
    state->judgment.resize(tasks_.size());
    replay(*state);
    std::atomic_store(&state_, std::shared_ptr<const State>(std::move(state)));
    if (!log_path_.parent_path().empty()) std::filesystem::create_directories(log_path_.parent_path());
    log_.open(log_path_, std::ios::app | std::ios::binary);
    if (!log_) throw IoError(fmt::format("cannot open annotation log '{}'", log_path_.string()));
  }

  const Diagnostics& replay_diagnostics() const { return replay_diagnostics_; }
  std::size_t task_count() const { return tasks_.size(); }

  AnnotationTask task(std::uint64_t task_id) const {
    const auto snap = snapshot();
    return make_task(index_of(task_id), *snap);
  }

  // The annotator's claimed task if any, otherwise the first pending task in
  // their order, which becomes claimed. nullopt when nothing is left.
  std::optional<AnnotationTask> next_task(const std::string& annotator_id) {
    const auto order_it = order_.find(annotator_id);
    if (order_it == order_.end()) throw NotFoundError(fmt::format("unknown annotator '{}'", annotator_id));
    if (auto held = claimed_by(*snapshot(), annotator_id)) return make_task(*held, *snapshot());
    std::lock_guard lock(write_mutex_);
    const auto snap = snapshot();
    if (auto held = claimed_by(*snap, annotator_id)) return make_task(*held, *snap);
    for (std::size_t idx : order_it->second) {
      if (snap->status[idx] != TaskStatus::pending) continue;
      auto next = std::make_shared<State>(*snap);
      next->status[idx] = TaskStatus::in_progress;
      append({{"event", "claim"}, {"task", key_json(idx)}});
      publish(std::move(next));
      return make_task(idx, *snapshot());
    }
    return std::nullopt;
  }

  // Title plus ordered segments with their descriptions and chosen media.
  json story_payload(std::uint64_t task_id) const {
    const std::size_t idx = index_of(task_id);
    const auto& key = tasks_[idx];
    const Storyline* story = find_story(key.story_id);
    if (!story) throw NotFoundError(fmt::format("story '{}' for task {} is not loaded", key.story_id, task_id));
    const IllustratedStoryline& ill = catalog_.illustrated[key.illustrated];
    json segments = json::array();
    for (std::size_t i = 0; i < story->size(); ++i) {
      const auto& seg = story->segments[i];
      const std::optional<std::string> media = i < ill.choices.size() ? ill.choices[i] : std::nullopt;
      json entry = {{"order", seg.order}, {"segment_id", seg.segment_id}, {"description", seg.description}};
      entry["media_id"] = media ? json(*media) : json(nullptr);
      entry["media_uri"] = media ? json(catalog_.media_uri ? catalog_.media_uri(*media) : *media) : json(nullptr);
      segments.push_back(std::move(entry));
    }
    return {{"task_id", task_id}, {"story_id", story->story_id}, {"method_name", ill.method_name},
            {"title", story->title}, {"segments", std::move(segments)}};
  }

  // Accepts a judgment for a claimed task; a completed task may be revised,
  // and the log keeps every version.
  AnnotationTask submit_judgment(std::uint64_t task_id, JudgmentSet judgment) {
    const std::size_t idx = index_of(task_id);
    const auto& key = tasks_[idx];
    const Storyline* story = find_story(key.story_id);
    if (!story) throw NotFoundError(fmt::format("story '{}' for task {} is not loaded", key.story_id, task_id));
    if (judgment.method_name.empty()) judgment.method_name = key.method;
    std::vector<FieldError> errors = validate_judgment(judgment, story->size());
    if (judgment.story_id != key.story_id) errors.push_back({"story_id", fmt::format("task is for story '{}'", key.story_id)});
    if (judgment.annotator_id != key.annotator) {
      errors.push_back({"annotator_id", fmt::format("task belongs to '{}'", key.annotator)});
    }
    if (judgment.method_name != key.method) errors.push_back({"method", fmt::format("task is for method '{}'", key.method)});
    if (!errors.empty()) throw JudgmentRejected(std::move(errors));

    std::lock_guard lock(write_mutex_);
    const auto snap = snapshot();
    if (snap->status[idx] == TaskStatus::pending) throw ConflictError(fmt::format("task {} is not claimed", task_id));
    auto next = std::make_shared<State>(*snap);
    next->status[idx] = TaskStatus::complete;
    next->judgment[idx] = judgment;
    ++next->revisions;
    append({{"event", "judgment"}, {"task", key_json(idx)}, {"judgment", to_json(judgment)}});
    publish(std::move(next));
    return make_task(idx, *snapshot());
  }

  // Latest judgment per completed task, in task order, as a judgment file.
  std::string export_judgments(const ExportFilter& filter = {}) const {
    const auto snap = snapshot();
    std::vector<JudgmentSet> out;
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
      if (snap->judgment[i] && filter.matches(*snap->judgment[i])) out.push_back(*snap->judgment[i]);
    }
    return serialize_judgments(out);
  }

  json progress() const {
    const auto snap = snapshot();
    auto counts = [] { return json{{"pending", 0}, {"in_progress", 0}, {"complete", 0}}; };
    json total = counts();
    json per = json::object();
    for (const auto& a : catalog_.annotators) per[a] = counts();
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
      const std::string s(to_string(snap->status[i]));
      total[s] = total[s].get<int>() + 1;
      per[tasks_[i].annotator][s] = per[tasks_[i].annotator][s].get<int>() + 1;
    }
    total["tasks"] = tasks_.size();
    total["revisions"] = snap->revisions;
    total["annotators"] = std::move(per);
    return total;
  }

 private:
  struct TaskKey {
    std::string story_id;
    std::string method;
    std::string annotator;
    std::size_t illustrated = 0;  // index into catalog_.illustrated
  };

  struct State {
    std::vector<TaskStatus> status;
    std::vector<std::optional<JudgmentSet>> judgment;
    std::uint64_t revisions = 0;  // accepted judgment records, including overwrites
  };

  std::shared_ptr<const State> snapshot() const { return std::atomic_load(&state_); }
  void publish(std::shared_ptr<State> next) { std::atomic_store(&state_, std::shared_ptr<const State>(std::move(next))); }

  void build_tasks() {
    std::vector<std::size_t> ill(catalog_.illustrated.size());
    for (std::size_t i = 0; i < ill.size(); ++i) ill[i] = i;
    std::sort(ill.begin(), ill.end(), [&](std::size_t a, std::size_t b) {
      const auto& x = catalog_.illustrated[a];
      const auto& y = catalog_.illustrated[b];
      return std::tie(x.story_id, x.method_name) < std::tie(y.story_id, y.method_name);
    });
    for (std::size_t i = 1; i < ill.size(); ++i) {
      const auto& x = catalog_.illustrated[ill[i - 1]];
      const auto& y = catalog_.illustrated[ill[i]];
      if (x.story_id == y.story_id && x.method_name == y.method_name) {
        throw ValidationError(fmt::format("duplicate illustration for story '{}' method '{}'", x.story_id, x.method_name));
      }
    }
    auto annotators = catalog_.annotators;
    std::sort(annotators.begin(), annotators.end());
    if (std::adjacent_find(annotators.begin(), annotators.end()) != annotators.end()) {
      throw ValidationError("duplicate annotator id");
    }
    for (std::size_t i : ill) {
      for (const auto& a : annotators) {
        if (a.empty()) throw ValidationError("annotator ids must be non-empty");
        key_index_[key_string(catalog_.illustrated[i].story_id, catalog_.illustrated[i].method_name, a)] = tasks_.size();
        tasks_.push_back({catalog_.illustrated[i].story_id, catalog_.illustrated[i].method_name, a, i});
      }
    }
    for (const auto& a : annotators) {
      auto& order = order_[a];
      for (std::size_t t = 0; t < tasks_.size(); ++t) {
        if (tasks_[t].annotator == a) order.push_back(t);
      }
      if (catalog_.shuffle_seed) {
        std::mt19937_64 rng(detail::fnv1a(a, *catalog_.shuffle_seed));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
      }
    }
  }

  static std::string key_string(const std::string& story, const std::string& method, const std::string& annotator) {
    return json::array({story, method, annotator}).dump();
  }

  json key_json(std::size_t idx) const {
    return {{"story_id", tasks_[idx].story_id}, {"method", tasks_[idx].method}, {"annotator_id", tasks_[idx].annotator}};
  }

  std::optional<std::size_t> lookup_key(const json& key) const {
    auto it = key_index_.find(key_string(detail::require<std::string>(key, "story_id"), detail::require<std::string>(key, "method"),
                                         detail::require<std::string>(key, "annotator_id")));
    if (it == key_index_.end()) return std::nullopt;
    return it->second;
  }

  void replay(State& state) {
    if (!std::filesystem::exists(log_path_)) return;
    const auto lines = split_lines(read_file(log_path_));
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
      try {
        const json rec = json::parse(lines[i]);
        const auto idx = lookup_key(rec.at("task"));
        if (!idx) {
          replay_diagnostics_.skip(i + 1, "task not in the current catalog");
          continue;
        }
        const std::string event = detail::require<std::string>(rec, "event");
        if (event == "claim") {
          if (state.status[*idx] == TaskStatus::pending) state.status[*idx] = TaskStatus::in_progress;
        } else if (event == "judgment") {
          state.judgment[*idx] = judgment_from_json(rec.at("judgment"));
          state.status[*idx] = TaskStatus::complete;
          ++state.revisions;
        } else {
          replay_diagnostics_.skip(i + 1, fmt::format("unknown event '{}'", event));
        }
      } catch (const json::exception& e) {
        replay_diagnostics_.skip(i + 1, fmt::format("malformed log record: {}", e.what()));
      } catch (const ValidationError& e) {
        replay_diagnostics_.skip(i + 1, e.what());
      }
    }
  }

  void append(const json& record) {
    log_ << record.dump() << '\n';
    log_.flush();
    if (!log_) throw IoError(fmt::format("write to annotation log '{}' failed", log_path_.string()));
  }

  std::size_t index_of(std::uint64_t task_id) const {
    if (task_id < 1 || task_id > tasks_.size()) throw NotFoundError(fmt::format("unknown task {}", task_id));
    return static_cast<std::size_t>(task_id - 1);
  }

  std::optional<std::size_t> claimed_by(const State& s, const std::string& annotator) const {
    for (std::size_t idx : order_.at(annotator)) {
      if (s.status[idx] == TaskStatus::in_progress) return idx;
    }
    return std::nullopt;
  }

  AnnotationTask make_task(std::size_t idx, const State& s) const {
    const auto& k = tasks_[idx];
    return {static_cast<std::uint64_t>(idx + 1), k.story_id, k.method, k.annotator, s.status[idx]};
  }

  const Storyline* find_story(const std::string& id) const {
    for (const auto& s : catalog_.stories) {
      if (s.story_id == id) return &s;
    }
    return nullptr;
  }

  ServiceCatalog catalog_;
  std::filesystem::path log_path_;
  std::vector<TaskKey> tasks_;  // task_id = index + 1
  std::map<std::string, std::size_t> key_index_;
  std::map<std::string, std::vector<std::size_t>> order_;  // per annotator
  Diagnostics replay_diagnostics_;
  std::shared_ptr<const State> state_;
  std::mutex write_mutex_;
  std::ofstream log_;
};

}  // namespace storyweave
