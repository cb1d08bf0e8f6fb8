#pragma once

// Socket-facing pieces: the HTTP server for Service and an HTTP page fetcher
// for the crawler. Kept apart so the core headers do not pull in httplib.

#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <string>

#include <httplib.h>

#include "vidagents/gateway.hpp"
#include "vidagents/ingestion.hpp"

namespace vidagents {

inline void install_routes(httplib::Server& server, Service& service, const std::string& cors_origin = "*") {
  server.set_default_headers({{"Access-Control-Allow-Origin", cors_origin},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});

  auto reply = [](httplib::Response& res, const ApiResponse& api) {
    res.status = api.status;
    res.set_content(api.body.dump(), "application/json");
  };
  auto params_of = [](const httplib::Request& req) {
    std::map<std::string, std::string> out;
    for (const auto& [k, v] : req.params) out.emplace(k, v);
    return out;
  };

  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server.Post("/api/query", [&, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.handle_query(req.body));
  });
  server.Post("/api/feedback", [&, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.handle_feedback(req.body));
  });
  server.Get("/api/suggestions", [&, reply, params_of](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.handle_suggestions(params_of(req)));
  });
  server.Get("/api/stats", [&, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, service.handle_stats());
  });
  server.Get(R"(/api/doc/(.+))", [&, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.handle_doc(req.matches[1].str()));
  });
}

/// Blocks until the server is stopped. Returns false if the port could not be bound.
inline bool serve(Service& service, const std::string& host, int port, const std::string& cors_origin = "*",
                  const std::function<void(httplib::Server&)>& on_ready = {}) {
  httplib::Server server;
  install_routes(server, service, cors_origin);
  if (!server.bind_to_port(host, port)) return false;
  if (on_ready) on_ready(server);
  return server.listen_after_bind();
}

/// Fetches http:// URIs with httplib and falls back to local files otherwise.
inline std::optional<std::string> fetch_http_or_file(const std::string& uri) {
  static const std::regex url_re(R"(^(http://[^/]+)(/.*)?$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(uri, m, url_re)) return fetch_local_file(uri);
  httplib::Client client(m[1].str());
  client.set_connection_timeout(5);
  client.set_read_timeout(10);
  client.set_follow_location(true);
  const std::string path = m[2].matched ? m[2].str() : "/";
  auto res = client.Get(path);
  if (!res || res->status != 200) return std::nullopt;
  return res->body;
}

}  // namespace vidagents
