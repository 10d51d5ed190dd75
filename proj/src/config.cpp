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

#include "patentrag/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "patentrag/error.hpp"

namespace patentrag {
namespace {

bool looks_like_secret(std::string key) {
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
  for (const char* marker : {"api_key", "apikey", "secret", "token", "password"})
    if (key.find(marker) != std::string::npos) return true;
  return false;
}

void reject_secrets(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) return;
  for (const auto& [key, value] : j.items()) {
    if (looks_like_secret(key))
      throw Error(ErrorCode::InvalidConfig, "credential-like key '" + where + key +
                                                "' is not allowed in config files; use the environment");
    reject_secrets(value, where + key + ".");
  }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& target) {
  if (!j.contains(key) || j[key].is_null()) return;
  try {
    target = j[key].get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::InvalidConfig, std::string("config key '") + key + "' has the wrong type");
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  if (value.empty()) return {};
  std::filesystem::path p(value);
  return p.is_relative() && !base.empty() ? base / p : p;
}

}  // namespace

nlohmann::json to_json(const EmbedderConfig& c) {
  return {{"provider", c.provider == EmbedderProvider::Remote ? "remote" : "local"},
          {"model", c.model_name},
          {"dimension", c.dimension},
          {"endpoint_url", c.endpoint_url},
          {"batch_size", c.batch_size},
          {"timeout_ms", c.timeout_ms},
          {"normalize", c.normalize},
          {"seed", c.seed},
          {"max_retries", c.retry.max_attempts},
          {"max_in_flight", c.max_in_flight}};
}

EmbedderConfig embedder_config_from_json(const nlohmann::json& j, EmbedderConfig c) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "embedder config must be an object");
  std::string provider = c.provider == EmbedderProvider::Remote ? "remote" : "local";
  read(j, "provider", provider);
  if (provider == "remote") c.provider = EmbedderProvider::Remote;
  else if (provider == "local") c.provider = EmbedderProvider::Local;
  else throw Error(ErrorCode::InvalidConfig, "unknown embedder provider '" + provider + "'");
  read(j, "model", c.model_name);
  read(j, "dimension", c.dimension);
  read(j, "endpoint_url", c.endpoint_url);
  read(j, "batch_size", c.batch_size);
  read(j, "timeout_ms", c.timeout_ms);
  read(j, "normalize", c.normalize);
  read(j, "seed", c.seed);
  read(j, "max_retries", c.retry.max_attempts);
  read(j, "max_in_flight", c.max_in_flight);
  return c;
}

nlohmann::json to_json(const GeneratorConfig& c) {
  return {{"provider", c.provider == GeneratorProvider::Remote ? "remote" : "local_template"},
          {"model", c.model_name},
          {"endpoint_url", c.endpoint_url},
          {"temperature", c.temperature},
          {"timeout_ms", c.timeout_ms},
          {"max_retries", c.retry.max_attempts}};
}

GeneratorConfig generator_config_from_json(const nlohmann::json& j, GeneratorConfig c) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "generator config must be an object");
  std::string provider = c.provider == GeneratorProvider::Remote ? "remote" : "local_template";
  read(j, "provider", provider);
  if (provider == "remote") c.provider = GeneratorProvider::Remote;
  else if (provider == "local_template") c.provider = GeneratorProvider::LocalTemplate;
  else throw Error(ErrorCode::InvalidConfig, "unknown generator provider '" + provider + "'");
  read(j, "model", c.model_name);
  read(j, "endpoint_url", c.endpoint_url);
  read(j, "temperature", c.temperature);
  read(j, "timeout_ms", c.timeout_ms);
  read(j, "max_retries", c.retry.max_attempts);
  return c;
}

nlohmann::json to_json(const AppConfig& c) {
  nlohmann::json retrieval = {{"k", c.k}, {"budget_chars", c.budget_chars}};
  if (c.nprobe) retrieval["nprobe"] = *c.nprobe;
  return {{"corpus", c.corpus_path.string()},
          {"index", c.index_path.string()},
          {"retrieval", retrieval},
          {"embedder", to_json(c.embedder)},
          {"generator", to_json(c.generator)},
          {"service", {{"bind", c.bind_address}, {"port", c.port}}}};
}

AppConfig app_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  reject_secrets(j, "");
  AppConfig c;
  std::string corpus, index;
  read(j, "corpus", corpus);
  read(j, "index", index);
  c.corpus_path = resolve(base_dir, corpus);
  c.index_path = resolve(base_dir, index);
  if (j.contains("retrieval")) {
    const auto& r = j["retrieval"];
    read(r, "k", c.k);
    read(r, "budget_chars", c.budget_chars);
    if (r.contains("nprobe") && !r["nprobe"].is_null()) {
      int nprobe = 0;
      read(r, "nprobe", nprobe);
      c.nprobe = nprobe;
    }
  }
  if (j.contains("embedder")) c.embedder = embedder_config_from_json(j["embedder"]);
  if (j.contains("generator")) c.generator = generator_config_from_json(j["generator"]);
  if (j.contains("service")) {
    read(j["service"], "bind", c.bind_address);
    read(j["service"], "port", c.port);
  }
  return c;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open config '" + path.string() + "'");
  const nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::InvalidConfig, "config '" + path.string() + "' is not valid JSON");
  return app_config_from_json(j, path.parent_path());
}

void validate(const AppConfig& c, bool require_paths) {
  if (c.k < 1) throw Error(ErrorCode::InvalidConfig, "retrieval k must be >= 1");
  if (c.nprobe && *c.nprobe < 1) throw Error(ErrorCode::InvalidConfig, "nprobe must be >= 1");
  if (c.budget_chars < 1) throw Error(ErrorCode::InvalidConfig, "budget_chars must be >= 1");
  if (c.port < 0 || c.port > 65535) throw Error(ErrorCode::InvalidConfig, "port out of range");
  validate(c.embedder);
  validate(c.generator);
  if (require_paths) {
    if (c.corpus_path.empty() || !std::filesystem::exists(c.corpus_path))
      throw Error(ErrorCode::InvalidConfig, "corpus file '" + c.corpus_path.string() + "' not found");
    if (c.index_path.empty() || !std::filesystem::exists(c.index_path))
      throw Error(ErrorCode::InvalidConfig, "index file '" + c.index_path.string() + "' not found");
  }
}

PipelineConfig pipeline_config(const AppConfig& c) {
  PipelineConfig p;
  p.retrieval.k = c.k;
  p.retrieval.nprobe = c.nprobe;
  p.budget_chars = c.budget_chars;
  p.generator = c.generator;
  return p;
}

std::filesystem::path index_metadata_path(const std::filesystem::path& index_path) {
  return std::filesystem::path(index_path.string() + ".meta.json");
}

void write_index_metadata(const std::filesystem::path& index_path, const EmbedderConfig& embedder,
                          const std::filesystem::path& corpus_path) {
  const nlohmann::json j = {{"embedder", to_json(embedder)},
                            {"corpus", std::filesystem::absolute(corpus_path).string()}};
  std::ofstream out(index_metadata_path(index_path));
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write index metadata");
  out << j.dump(2) << '\n';
}

void apply_index_metadata(AppConfig& config) {
  const auto path = index_metadata_path(config.index_path);
  if (config.index_path.empty() || !std::filesystem::exists(path)) return;
  std::ifstream in(path);
  const nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw Error(ErrorCode::InvalidConfig, "index metadata '" + path.string() + "' is malformed");
  if (j.contains("embedder")) config.embedder = embedder_config_from_json(j["embedder"], config.embedder);
  if (config.corpus_path.empty() && j.contains("corpus") && j["corpus"].is_string())
    config.corpus_path = j["corpus"].get<std::string>();
}

}  // namespace patentrag
