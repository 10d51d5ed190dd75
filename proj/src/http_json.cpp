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

#include "patentrag/http_json.hpp"

#include <cstdlib>
#include <thread>

#include "httplib.h"

namespace patentrag {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw Error(ErrorCode::InvalidConfig, "endpoint URL must include a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

bool transient_status(int status) { return status == 429 || status >= 500; }

}  // namespace

std::string env_or_empty(const char* name) {
  const char* value = std::getenv(name);
  return value ? value : "";
}

nlohmann::json post_json(const std::string& url, const nlohmann::json& body,
                         const std::string& bearer_token, std::chrono::milliseconds timeout,
                         const RetryPolicy& retry, ErrorCode failure_code) {
  const SplitUrl target = split_url(url);
  httplib::Client client(target.origin);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());
  httplib::Headers headers;
  if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);

  const std::string payload = body.dump();
  std::string last_failure = "no attempt made";
  auto backoff = retry.initial_backoff;
  const int attempts = std::max(1, retry.max_attempts);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    auto response = client.Post(target.path, headers, payload, "application/json");
    if (!response) {
      last_failure = "connection failed (" + httplib::to_string(response.error()) + ")";
    } else if (response->status >= 200 && response->status < 300) {
      nlohmann::json parsed = nlohmann::json::parse(response->body, nullptr, false);
      if (parsed.is_discarded())
        throw Error(failure_code, url + " returned a non-JSON body");
      return parsed;
    } else {
      last_failure = "HTTP " + std::to_string(response->status);
      if (!transient_status(response->status))
        throw Error(failure_code, url + ": " + last_failure);
    }
    if (attempt < attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw Error(failure_code, url + ": " + last_failure + " after " + std::to_string(attempts) +
                                " attempts");
}

}  // namespace patentrag
