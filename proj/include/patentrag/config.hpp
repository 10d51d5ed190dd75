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

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "patentrag/embedder.hpp"
#include "patentrag/ragpipe.hpp"

namespace patentrag {

/// Application settings. Loaded from a JSON file (see README); API keys are
/// never read from the file, only from EMBEDDER_API_KEY / GENERATOR_API_KEY.
struct AppConfig {
  std::filesystem::path corpus_path;
  std::filesystem::path index_path;
  EmbedderConfig embedder;
  GeneratorConfig generator;
  int k = kDefaultTopK;
  std::optional<int> nprobe;
  int budget_chars = kDefaultBudgetChars;
  std::string bind_address = "127.0.0.1";
  int port = 8080;
};

nlohmann::json to_json(const EmbedderConfig& config);
EmbedderConfig embedder_config_from_json(const nlohmann::json& j, EmbedderConfig base = {});
nlohmann::json to_json(const GeneratorConfig& config);
GeneratorConfig generator_config_from_json(const nlohmann::json& j, GeneratorConfig base = {});

nlohmann::json to_json(const AppConfig& config);
/// Relative paths are resolved against `base_dir`. Rejects any key that
/// looks like a credential.
AppConfig app_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
AppConfig load_config(const std::filesystem::path& path);

/// Checks ranges; with `require_paths`, also that corpus and index exist.
void validate(const AppConfig& config, bool require_paths);

PipelineConfig pipeline_config(const AppConfig& config);

/// Sidecar written next to an index file recording how it was embedded.
std::filesystem::path index_metadata_path(const std::filesystem::path& index_path);
void write_index_metadata(const std::filesystem::path& index_path, const EmbedderConfig& embedder,
                          const std::filesystem::path& corpus_path);
/// Applies a sidecar, if present, onto `config` (embedder settings and a
/// missing corpus path).
void apply_index_metadata(AppConfig& config);

}  // namespace patentrag
