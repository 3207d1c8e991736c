#pragma once

// HTTP routes for AnnotationService (cpp-httplib):
//   GET  /annotators/{id}/next-task   the claimed task, or null
//   GET  /tasks/{id}/story            story payload for a task
//   POST /tasks/{id}/judgment         JudgmentSet body
//   GET  /export?filter=k:v,...       judgment file (JSONL)
//   GET  /progress                    task counts
// 400 validation failure, 404 unknown id, 409 submission to an unclaimed task.

#include <charconv>
#include <filesystem>
#include <optional>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "storyweave/annotation_service.hpp"

namespace storyweave {

namespace detail {

inline void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, std::string_view message, json fields = json::array()) {
  send_json(res, status, {{"error", std::string(message)}, {"fields", std::move(fields)}});
}

inline std::optional<std::uint64_t> parse_task_id(const std::string& s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// Maps the service's exceptions onto status codes.
template <typename Fn>
void guarded(httplib::Response& res, Fn fn) {
  try {
    fn();
  } catch (const JudgmentRejected& e) {
    send_error(res, 400, "judgment rejected", to_json(e.errors()));
  } catch (const ValidationError& e) {
    send_error(res, 400, e.what());
  } catch (const NotFoundError& e) {
    send_error(res, 404, e.what());
  } catch (const ConflictError& e) {
    send_error(res, 409, e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

// Unparseable ids cannot name a task.
inline std::uint64_t task_id_param(const httplib::Request& req) {
  auto id = parse_task_id(req.matches[1]);
  if (!id) throw NotFoundError(fmt::format("unknown task '{}'", std::string(req.matches[1])));
  return *id;
}

}  // namespace detail

// Registers the routes; when `media_dir` is set its files are served under /media/.
inline void bind_annotation_routes(httplib::Server& server, AnnotationService& service,
                                   const std::optional<std::filesystem::path>& media_dir = std::nullopt) {
  server.Get(R"(/annotators/([^/]+)/next-task)", [&service](const httplib::Request& req, httplib::Response& res) {
    detail::guarded(res, [&] {
      auto task = service.next_task(req.matches[1]);
      detail::send_json(res, 200, task ? to_json(*task) : json(nullptr));
    });
  });
  server.Get(R"(/tasks/([^/]+)/story)", [&service](const httplib::Request& req, httplib::Response& res) {
    detail::guarded(res, [&] { detail::send_json(res, 200, service.story_payload(detail::task_id_param(req))); });
  });
  server.Post(R"(/tasks/([^/]+)/judgment)", [&service](const httplib::Request& req, httplib::Response& res) {
    detail::guarded(res, [&] {
      const auto id = detail::task_id_param(req);
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::exception& e) {
        throw JudgmentRejected(std::vector<FieldError>{{"body", fmt::format("malformed JSON: {}", e.what())}});
      }
      JudgmentSet judgment;
      try {
        judgment = judgment_from_json(body);
      } catch (const ValidationError& e) {
        throw JudgmentRejected(std::vector<FieldError>{{"body", e.what()}});
      }
      auto task = service.submit_judgment(id, std::move(judgment));
      detail::send_json(res, 200, {{"accepted", true}, {"task", to_json(task)}});
    });
  });
  server.Get("/export", [&service](const httplib::Request& req, httplib::Response& res) {
    detail::guarded(res, [&] {
      const auto filter = parse_export_filter(req.has_param("filter") ? req.get_param_value("filter") : std::string{});
      res.status = 200;
      res.set_content(service.export_judgments(filter), "application/x-ndjson");
    });
  });
  server.Get("/progress", [&service](const httplib::Request&, httplib::Response& res) {
    detail::guarded(res, [&] { detail::send_json(res, 200, service.progress()); });
  });
  if (media_dir) server.set_mount_point("/media", media_dir->string());
}

}  // namespace storyweave
