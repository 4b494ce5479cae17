#pragma once

#include <memory>
#include <string>

#include "acrank/serving.hpp"

namespace acrank {

// JSON over HTTP:
//   GET  /suggest?prefix=&session_id=&k=10&ranker=   -> SuggestResponse
//   POST /submit {"session_id": ..., "query": ...}    -> 204
//   GET  /rankers                                     -> ["mpc", ...]
//   GET  /health                                      -> {"status", "model_version"}
class HttpServer {
 public:
  explicit HttpServer(std::shared_ptr<SuggestService> service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 picks an ephemeral port. Returns the bound port, throws on failure.
  int bind(const std::string& host, int port);
  // Blocks until stop() is called.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string suggest_response_json(const SuggestResponse& r);

}  // namespace acrank
