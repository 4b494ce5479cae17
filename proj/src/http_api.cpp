#include "acrank/http_api.hpp"

#include <charconv>

#include "httplib.h"
#include "json.hpp"

namespace acrank {

using nlohmann::json;

std::string suggest_response_json(const SuggestResponse& r) {
  json items = json::array();
  for (const auto& s : r.suggestions) items.push_back({{"query", s.query}, {"score", s.score}});
  return json{{"suggestions", items}, {"ranker", r.ranker_id}, {"latency_ms", r.latency_ms}}
      .dump();
}

struct HttpServer::Impl {
  std::shared_ptr<SuggestService> service;
  httplib::Server server;
};

namespace {

void error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", message}}.dump(), "application/json");
}

}  // namespace

HttpServer::HttpServer(std::shared_ptr<SuggestService> service) : impl_(std::make_unique<Impl>()) {
  impl_->service = std::move(service);
  auto& srv = impl_->server;
  auto* svc = impl_->service.get();

  // The demo page is served from a different origin.
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  srv.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  srv.Get("/suggest", [svc](const httplib::Request& req, httplib::Response& res) {
    std::size_t k = 10;
    if (req.has_param("k")) {
      const auto v = req.get_param_value("k");
      const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), k);
      if (ec != std::errc() || end != v.data() + v.size() || v.empty()) {
        return error(res, 400, "k must be a non-negative integer");
      }
    }
    const auto ranker =
        req.has_param("ranker") ? req.get_param_value("ranker") : svc->default_ranker();
    try {
      const auto r = svc->suggest(req.get_param_value("prefix"),
                                  req.get_param_value("session_id"), k, ranker);
      res.set_content(suggest_response_json(r), "application/json");
    } catch (const UnknownRanker& e) {
      error(res, 400, e.what());
    } catch (const std::exception& e) {
      error(res, 500, e.what());
    }
  });

  srv.Post("/submit", [svc](const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception&) {
      return error(res, 400, "body is not JSON");
    }
    if (!body.is_object() || !body.contains("query") || !body["query"].is_string()) {
      return error(res, 400, "expected {\"session_id\": string, \"query\": string}");
    }
    std::string session;
    if (body.contains("session_id") && body["session_id"].is_string()) {
      session = body["session_id"].get<std::string>();
    }
    svc->record_submission(session, body["query"].get<std::string>());
    res.status = 204;
  });

  srv.Get("/rankers", [svc](const httplib::Request&, httplib::Response& res) {
    res.set_content(json(svc->ranker_ids()).dump(), "application/json");
  });

  srv.Get("/health", [svc](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"status", "ok"}, {"model_version", svc->model_version()}}.dump(),
                    "application/json");
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace acrank
