// Copyright 2026 The patentrag Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "patentrag/service.hpp"

#include <chrono>

#include "httplib.h"
#include "patentrag/error.hpp"

namespace patentrag {
namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

struct ParsedRequest {
  std::string query;
  std::optional<int> k;
};

// Returns nullopt after writing a 400 response.
std::optional<ParsedRequest> parse_query_body(const httplib::Request& req, httplib::Response& res) {
  const nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    send_error(res, 400, "request body must be a JSON object");
    return std::nullopt;
  }
  const auto query = body.find("query");
  if (query == body.end() || !query->is_string()) {
    send_error(res, 400, "\"query\" must be a string");
    return std::nullopt;
  }
  ParsedRequest parsed{query->get<std::string>(), std::nullopt};
  if (parsed.query.find_first_not_of(" \t\r\n") == std::string::npos) {
    send_error(res, 400, "\"query\" must not be empty");
    return std::nullopt;
  }
  if (const auto k = body.find("k"); k != body.end() && !k->is_null()) {
    if (!k->is_number_integer() || k->get<long long>() < 1 || k->get<long long>() > 10000) {
      send_error(res, 400, "\"k\" must be a positive integer");
      return std::nullopt;
    }
    parsed.k = k->get<int>();
  }
  return parsed;
}

int status_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::RemoteUnavailable:
    case ErrorCode::GeneratorUnavailable:
      return 502;
    case ErrorCode::EmptyText:
    case ErrorCode::BadK:
    case ErrorCode::BadNprobe:
      return 400;
    case ErrorCode::EmptyIndex:
    case ErrorCode::EmptyContext:
      return 404;
    default:
      return 500;
  }
}

}  // namespace

SearchService::SearchService() : server_(std::make_unique<httplib::Server>()) { install_routes(); }

SearchService::~SearchService() {
  stop();
  if (loader_thread_.joinable()) loader_thread_.join();
}

void SearchService::set_pipeline(std::shared_ptr<const RagPipeline> pipeline) {
  std::lock_guard lock(mutex_);
  pipeline_ = std::move(pipeline);
  load_error_.clear();
}

std::shared_ptr<const RagPipeline> SearchService::pipeline() const {
  std::lock_guard lock(mutex_);
  return pipeline_;
}

void SearchService::load_async(std::function<std::shared_ptr<const RagPipeline>()> loader) {
  if (loader_thread_.joinable()) loader_thread_.join();
  loader_thread_ = std::thread([this, loader = std::move(loader)] {
    try {
      set_pipeline(loader());
    } catch (const std::exception& e) {
      std::lock_guard lock(mutex_);
      load_error_ = e.what();
    }
  });
}

int SearchService::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error(ErrorCode::IoFailure, "cannot bind " + host + ":" + std::to_string(port));
  server_thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void SearchService::run(const std::string& host, int port) {
  if (!server_->listen(host, port))
    throw Error(ErrorCode::IoFailure, "cannot serve on " + host + ":" + std::to_string(port));
}

void SearchService::stop() {
  if (server_) server_->stop();
  if (server_thread_.joinable()) server_thread_.join();
}

nlohmann::json SearchService::stats() const {
  const auto count = retrieval_count_.load();
  const double mean_ms = count ? static_cast<double>(retrieval_us_total_.load()) / 1000.0 / count : 0.0;
  return {{"queries_served", searches_.load() + answers_.load()},
          {"search_requests", searches_.load()},
          {"answer_requests", answers_.load()},
          {"failed_requests", failures_.load()},
          {"mean_retrieval_ms", mean_ms}};
}

void SearchService::install_routes() {
  server_->Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
    std::shared_ptr<const RagPipeline> snapshot;
    std::string load_error;
    {
      std::lock_guard lock(mutex_);
      snapshot = pipeline_;
      load_error = load_error_;
    }
    if (!snapshot) {
      nlohmann::json body = {{"status", load_error.empty() ? "loading" : "error"}};
      if (!load_error.empty()) body["reason"] = load_error;
      send_json(res, 503, body);
      return;
    }
    send_json(res, 200,
              {{"status", "ok"}, {"index_size", snapshot->index().size()}, {"dim", snapshot->index().dimension()}});
  });

  server_->Get("/v1/stats", [this](const httplib::Request&, httplib::Response& res) { send_json(res, 200, stats()); });

  server_->Post("/v1/search", [this](const httplib::Request& req, httplib::Response& res) {
    auto snapshot = pipeline();
    if (!snapshot) return send_error(res, 503, "index is loading");
    auto parsed = parse_query_body(req, res);
    if (!parsed) {
      ++failures_;
      return;
    }
    try {
      const auto started = std::chrono::steady_clock::now();
      const auto hits = snapshot->search(parsed->query, parsed->k);
      const auto us = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - started);
      retrieval_us_total_ += static_cast<std::uint64_t>(us.count());
      ++retrieval_count_;
      nlohmann::json body = {{"hits", nlohmann::json::array()}};
      for (const auto& hit : hits) body["hits"].push_back(to_json(hit));
      ++searches_;
      send_json(res, 200, body);
    } catch (const Error& e) {
      ++failures_;
      send_json(res, status_for(e), {{"error", std::string(to_string(e.code()))}, {"reason", e.what()}});
    }
  });

  server_->Post("/v1/answer", [this](const httplib::Request& req, httplib::Response& res) {
    auto snapshot = pipeline();
    if (!snapshot) return send_error(res, 503, "index is loading");
    auto parsed = parse_query_body(req, res);
    if (!parsed) {
      ++failures_;
      return;
    }
    try {
      const RagAnswer answer = snapshot->answer(parsed->query, parsed->k);
      retrieval_us_total_ += static_cast<std::uint64_t>(answer.retrieval_ms) * 1000;
      ++retrieval_count_;
      ++answers_;
      send_json(res, 200, to_json(answer));
    } catch (const Error& e) {
      ++failures_;
      send_json(res, status_for(e), {{"error", std::string(to_string(e.code()))}, {"reason", e.what()}});
    }
  });
}

}  // namespace patentrag
