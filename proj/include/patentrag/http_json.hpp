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

#include <chrono>
#include <string>

#include "json.hpp"
#include "patentrag/error.hpp"

namespace patentrag {

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{100};
};

/// POSTs a JSON body and returns the parsed JSON response. Connection
/// failures, 429 and 5xx responses are retried with exponential backoff;
/// other failures are not. After the last attempt the error is raised with
/// `failure_code`. The bearer token never appears in error messages.
nlohmann::json post_json(const std::string& url, const nlohmann::json& body,
                         const std::string& bearer_token, std::chrono::milliseconds timeout,
                         const RetryPolicy& retry, ErrorCode failure_code);

/// Reads an environment variable; empty string when unset.
std::string env_or_empty(const char* name);

}  // namespace patentrag
