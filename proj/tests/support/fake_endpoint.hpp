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

#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"

namespace patentrag::testing {

struct CapturedRequest {
  std::string path;
  std::string authorization;
  nlohmann::json body;
};

/// Local HTTP server standing in for a remote embedding or chat API. The
/// handler returns (status, body) for each captured request.
class FakeEndpoint {
 public:
  using Handler = std::function<std::pair<int, nlohmann::json>(const CapturedRequest&, int call_index)>;

  explicit FakeEndpoint(Handler handler) : handler_(std::move(handler)) {
    server_.Post(".*", [this](const httplib::Request& req, httplib::Response& res) {
      CapturedRequest captured{req.path, req.get_header_value("Authorization"),
                               nlohmann::json::parse(req.body, nullptr, false)};
      int index;
      {
        std::lock_guard lock(mutex_);
        index = static_cast<int>(requests_.size());
        requests_.push_back(captured);
      }
      auto [status, body] = handler_(captured, index);
      res.status = status;
      res.set_content(body.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }

  std::string url(const std::string& path = "/v1/endpoint") const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

  std::vector<CapturedRequest> requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
  }

 private:
  Handler handler_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mutex_;
  std::vector<CapturedRequest> requests_;
};

}  // namespace patentrag::testing
