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

#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "json.hpp"
#include "patentrag/ragpipe.hpp"

namespace httplib {
class Server;
}

namespace patentrag {

/// HTTP/1.1 JSON front end over a RagPipeline snapshot.
///
///   POST /v1/search {query, k?} -> {hits: [{doc_id, score, rank}]}
///   POST /v1/answer {query, k?} -> RagAnswer
///   GET  /healthz               -> {status, index_size, dim}
///   GET  /v1/stats              -> request counters
///
/// Requests run against whichever snapshot was current when they started;
/// set_pipeline() swaps snapshots without blocking in-flight requests. Until
/// a snapshot is installed every request is answered with 503.
class SearchService {
 public:
  SearchService();
  ~SearchService();
  SearchService(const SearchService&) = delete;
  SearchService& operator=(const SearchService&) = delete;

  void set_pipeline(std::shared_ptr<const RagPipeline> pipeline);
  std::shared_ptr<const RagPipeline> pipeline() const;

  /// Runs `loader` on a background thread and installs its result. Load
  /// failures are kept and reported by /healthz.
  void load_async(std::function<std::shared_ptr<const RagPipeline>()> loader);

  /// Binds (port 0 picks a free port) and serves on a background thread.
  /// Returns the bound port.
  int start(const std::string& host, int port);
  /// Binds and serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

  nlohmann::json stats() const;

 private:
  void install_routes();

  std::unique_ptr<httplib::Server> server_;
  std::thread server_thread_;
  std::thread loader_thread_;

  mutable std::mutex mutex_;
  std::shared_ptr<const RagPipeline> pipeline_;
  std::string load_error_;

  std::atomic<std::uint64_t> searches_{0};
  std::atomic<std::uint64_t> answers_{0};
  std::atomic<std::uint64_t> failures_{0};
  std::atomic<std::uint64_t> retrieval_us_total_{0};
  std::atomic<std::uint64_t> retrieval_count_{0};
};

}  // namespace patentrag
