#pragma once

// HTTP JSON API. Handlers are plain functions over a Service so they can be
// exercised without sockets; serve() binds them to an httplib server.
//
//   POST /api/query        {user, domain, text, k[, strategy]}
//   POST /api/feedback     {user, doc, rating}
//   GET  /api/suggestions  ?user&domain&k
//   GET  /api/stats
//   GET  /api/doc/{id}
//
// Success bodies are {"ok": payload}; errors are {"error": code, "message": text}.

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "vidagents/engine.hpp"
#include "vidagents/error.hpp"
#include "vidagents/io.hpp"

namespace vidagents {

struct ApiResponse {
  int status = 200;
  json body;
};

inline int http_status(Errc code) {
  switch (code) {
    case Errc::UnknownUser:
    case Errc::UnknownDomain:
    case Errc::UnknownDocument:
    case Errc::UnknownConcept:
    case Errc::UnknownCommunity:
    case Errc::UnknownStrategy:
      return 404;
    case Errc::InvalidRating:
      return 422;
    case Errc::IoFailure:
    case Errc::CorruptStore:
    case Errc::StepBudgetExceeded:
      return 500;
    default:
      return 400;
  }
}

inline ApiResponse api_ok(json payload) { return {200, json{{"ok", std::move(payload)}}}; }

inline ApiResponse api_error(const Error& e) {
  return {http_status(e.code()), json{{"error", std::string(e.code_name())}, {"message", e.what()}}};
}

inline json document_view(const KbDocument& doc, std::size_t storyboard_size) {
  json storyboard = json::array();
  for (const auto& f : summarize(doc.record, storyboard_size).keyframes) storyboard.push_back(f);
  return json{{"record", doc.record}, {"storyboard", storyboard}, {"tier", doc.tier}, {"tau", doc.tau},
              {"request_count", doc.request_count}};
}

/// Request-level facade over an Engine. All engine access is serialized;
/// with a state directory set, mutations are persisted before replying.
class Service {
 public:
  explicit Service(Engine& engine, std::optional<std::filesystem::path> state_dir = std::nullopt)
      : engine_(engine), state_dir_(std::move(state_dir)) {}

  ApiResponse handle_query(const std::string& body) {
    return guarded([&] {
      const json req = parse_body(body);
      RawQuery raw;
      raw.user_id = require_string(req, "user");
      raw.domain = require_string(req, "domain");
      raw.text = require_string(req, "text");
      raw.k = require_count(req, "k");
      std::optional<std::string> strategy;
      if (req.contains("strategy")) strategy = require_string(req, "strategy");
      std::lock_guard lock(mu_);
      QueryResult result = engine_.query(raw, strategy);
      persist();
      return api_ok(serialize_query_result(result));
    });
  }

  ApiResponse handle_feedback(const std::string& body) {
    return guarded([&] {
      const json req = parse_body(body);
      const std::string user = require_string(req, "user");
      const std::string doc = require_string(req, "doc");
      if (!req.contains("rating") || !req.at("rating").is_number_integer()) {
        throw Error(Errc::MalformedRequest, "field 'rating' must be an integer");
      }
      const int rating = req.at("rating").get<int>();
      std::lock_guard lock(mu_);
      const double tau = engine_.feedback(user, doc, rating);
      persist();
      return api_ok(json{{"tau", tau}});
    });
  }

  ApiResponse handle_suggestions(const std::map<std::string, std::string>& params) {
    return guarded([&] {
      auto get = [&](const char* key) -> std::string {
        auto it = params.find(key);
        if (it == params.end() || it->second.empty()) {
          throw Error(Errc::MalformedRequest, std::string("missing query parameter '") + key + "'");
        }
        return it->second;
      };
      std::size_t k = 5;
      if (auto it = params.find("k"); it != params.end()) {
        try {
          std::size_t used = 0;
          const long long v = std::stoll(it->second, &used);
          if (used != it->second.size() || v < 0) throw std::invalid_argument("k");
          k = static_cast<std::size_t>(v);
        } catch (const std::exception&) {
          throw Error(Errc::MalformedRequest, "query parameter 'k' must be a non-negative integer");
        }
      }
      std::lock_guard lock(mu_);
      json list = json::array();
      for (const auto& s : engine_.suggest(get("user"), get("domain"), k)) list.push_back(s);
      return api_ok(list);
    });
  }

  ApiResponse handle_stats() {
    return guarded([&] {
      std::lock_guard lock(mu_);
      json payload = engine_.stats();
      const auto& perf = engine_.last_performance();
      payload["performance"] = perf ? json(*perf) : json(nullptr);
      return api_ok(payload);
    });
  }

  ApiResponse handle_doc(const std::string& doc_id) {
    return guarded([&] {
      std::lock_guard lock(mu_);
      auto doc = engine_.document(doc_id);
      if (!doc) throw Error(Errc::UnknownDocument, "unknown document " + doc_id);
      return api_ok(document_view(*doc, engine_.config().storyboard_size));
    });
  }

  /// Routes a request; unknown routes answer 404 with code MalformedRequest.
  ApiResponse handle(const std::string& method, const std::string& path, const std::string& body,
                     const std::map<std::string, std::string>& params = {}) {
    static constexpr std::string_view kDocPrefix = "/api/doc/";
    if (method == "POST" && path == "/api/query") return handle_query(body);
    if (method == "POST" && path == "/api/feedback") return handle_feedback(body);
    if (method == "GET" && path == "/api/suggestions") return handle_suggestions(params);
    if (method == "GET" && path == "/api/stats") return handle_stats();
    if (method == "GET" && path.starts_with(kDocPrefix) && path.size() > kDocPrefix.size()) {
      return handle_doc(path.substr(kDocPrefix.size()));
    }
    ApiResponse r = api_error(Error(Errc::MalformedRequest, "no route for " + method + " " + path));
    r.status = 404;
    return r;
  }

 private:
  template <class F>
  ApiResponse guarded(F&& f) {
    try {
      return f();
    } catch (const Error& e) {
      return api_error(e);
    } catch (const std::exception& e) {
      return api_error(Error(Errc::MalformedRequest, e.what()));
    }
  }

  static json parse_body(const std::string& body) {
    json req = json::parse(body, nullptr, false);
    if (req.is_discarded() || !req.is_object()) throw Error(Errc::MalformedRequest, "request body must be a JSON object");
    return req;
  }

  static std::string require_string(const json& req, const char* key) {
    auto it = req.find(key);
    if (it == req.end() || !it->is_string()) {
      throw Error(Errc::MalformedRequest, std::string("field '") + key + "' must be a string");
    }
    return it->get<std::string>();
  }

  static std::size_t require_count(const json& req, const char* key) {
    auto it = req.find(key);
    if (it == req.end() || !it->is_number_integer() || it->get<long long>() < 0) {
      throw Error(Errc::MalformedRequest, std::string("field '") + key + "' must be a non-negative integer");
    }
    return it->get<std::size_t>();
  }

  void persist() {
    if (state_dir_) engine_.save(*state_dir_);
  }

  Engine& engine_;
  std::optional<std::filesystem::path> state_dir_;
  std::mutex mu_;
};

}  // namespace vidagents
