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

#include "patentrag/embedder.hpp"

#include <cmath>
#include <semaphore>

#include "patentrag/error.hpp"
#include "patentrag/random.hpp"
#include "utf8.hpp"

namespace patentrag {
namespace {

bool is_blank(std::string_view text) {
  return text.find_first_not_of(" \t\n\v\f\r") == std::string_view::npos;
}

std::string fold_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_space = false;
  for (char c : text) {
    const bool space = c == ' ' || (c >= '\t' && c <= '\r');
    if (space) {
      if (!in_space) out.push_back(' ');
      in_space = true;
      continue;
    }
    in_space = false;
    out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
  }
  return out;
}

}  // namespace

void validate(const EmbedderConfig& config) {
  if (config.dimension < 2) throw Error(ErrorCode::InvalidConfig, "embedding dimension must be >= 2");
  if (config.batch_size < 1) throw Error(ErrorCode::InvalidConfig, "batch_size must be positive");
  if (config.timeout_ms < 1) throw Error(ErrorCode::InvalidConfig, "timeout_ms must be positive");
  if (config.provider == EmbedderProvider::Remote) {
    if (config.endpoint_url.empty())
      throw Error(ErrorCode::InvalidConfig, "remote embedder requires endpoint_url");
    if (config.max_in_flight < 1)
      throw Error(ErrorCode::InvalidConfig, "max_in_flight must be positive");
  }
}

void normalize_l2(Eigen::Ref<Eigen::VectorXf> v) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) sum += static_cast<double>(v[i]) * v[i];
  if (sum == 0.0) {
    v.setZero();
    if (v.size() > 0) v[0] = 1.0f;
    return;
  }
  const double norm = std::sqrt(sum);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = static_cast<float>(v[i] / norm);
}

EmbeddingVector local_hash_embed(std::string_view text, int dimension, std::uint64_t seed) {
  if (dimension < 2) throw Error(ErrorCode::InvalidArgument, "dimension must be >= 2");
  const std::string folded = fold_text(text);
  const std::vector<std::string_view> chars = utf8::code_points(folded);

  Eigen::VectorXf accumulator = Eigen::VectorXf::Zero(dimension);
  auto add_token = [&](std::string_view token) {
    const std::uint64_t hash = fnv1a64(token) ^ seed;
    const auto bucket = static_cast<Eigen::Index>(hash % static_cast<std::uint64_t>(dimension));
    accumulator[bucket] += (hash >> 63) ? -1.0f : 1.0f;
  };
  if (chars.size() < 3) {
    if (!folded.empty()) add_token(folded);
  } else {
    for (std::size_t i = 0; i + 3 <= chars.size(); ++i) {
      const char* begin = chars[i].data();
      const char* end = chars[i + 2].data() + chars[i + 2].size();
      add_token(std::string_view(begin, static_cast<std::size_t>(end - begin)));
    }
  }
  normalize_l2(accumulator);
  return EmbeddingVector{std::move(accumulator), std::nullopt};
}

// --- local ----------------------------------------------------------------

LocalHashEmbedder::LocalHashEmbedder(const EmbedderConfig& config)
    : dimension_(config.dimension), seed_(config.seed) {
  validate(config);
}

EmbeddingVector LocalHashEmbedder::embed(std::string_view text) const {
  if (is_blank(text)) throw Error(ErrorCode::EmptyText, "cannot embed blank text");
  return local_hash_embed(text, dimension_, seed_);
}

std::vector<EmbeddingVector> LocalHashEmbedder::embed_batch(std::span<const std::string> texts) const {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed(t));
  return out;
}

// --- remote ---------------------------------------------------------------

struct RemoteEmbedder::Limiter {
  explicit Limiter(int slots) : semaphore(slots) {}
  std::counting_semaphore<> semaphore;
};

RemoteEmbedder::RemoteEmbedder(EmbedderConfig config)
    : RemoteEmbedder(std::move(config), env_or_empty("EMBEDDER_API_KEY")) {}

RemoteEmbedder::RemoteEmbedder(EmbedderConfig config, std::string api_key)
    : config_(std::move(config)), api_key_(std::move(api_key)) {
  validate(config_);
  if (api_key_.empty())
    throw Error(ErrorCode::InvalidConfig, "remote embedder requires EMBEDDER_API_KEY");
  limiter_ = std::make_unique<Limiter>(config_.max_in_flight);
}

RemoteEmbedder::~RemoteEmbedder() = default;

EmbeddingVector RemoteEmbedder::embed(std::string_view text) const {
  const std::string owned(text);
  return std::move(embed_batch(std::span<const std::string>(&owned, 1)).front());
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_batch(std::span<const std::string> texts) const {
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (is_blank(texts[i]))
      throw Error(ErrorCode::EmptyText, "text " + std::to_string(i) + " is blank");
  }
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  const auto chunk = static_cast<std::size_t>(config_.batch_size);
  for (std::size_t begin = 0; begin < texts.size(); begin += chunk) {
    const std::size_t count = std::min(chunk, texts.size() - begin);
    try {
      auto vectors = request_chunk(texts.subspan(begin, count));
      for (auto& v : vectors) out.push_back(std::move(v));
    } catch (const Error& e) {
      throw Error(e.code(), "batch texts [" + std::to_string(begin) + ", " +
                                std::to_string(begin + count) + "): " + e.what());
    }
  }
  return out;
}

std::vector<EmbeddingVector> RemoteEmbedder::request_chunk(std::span<const std::string> texts) const {
  nlohmann::json body;
  body["model"] = config_.model_name;
  body["input"] = std::vector<std::string>(texts.begin(), texts.end());

  limiter_->semaphore.acquire();
  nlohmann::json response;
  try {
    response = post_json(config_.endpoint_url, body, api_key_,
                         std::chrono::milliseconds(config_.timeout_ms), config_.retry,
                         ErrorCode::RemoteUnavailable);
  } catch (...) {
    limiter_->semaphore.release();
    throw;
  }
  limiter_->semaphore.release();

  const auto data = response.find("data");
  if (data == response.end() || !data->is_array() || data->size() != texts.size())
    throw Error(ErrorCode::RemoteUnavailable, "malformed embedding response");

  std::vector<EmbeddingVector> out(texts.size());
  for (std::size_t i = 0; i < data->size(); ++i) {
    const auto& item = (*data)[i];
    std::size_t slot = i;
    if (item.contains("index") && item["index"].is_number_unsigned())
      slot = item["index"].get<std::size_t>();
    const auto embedding = item.find("embedding");
    if (slot >= out.size() || embedding == item.end() || !embedding->is_array())
      throw Error(ErrorCode::RemoteUnavailable, "malformed embedding response");
    if (embedding->size() != static_cast<std::size_t>(config_.dimension))
      throw Error(ErrorCode::DimensionMismatch,
                  "expected " + std::to_string(config_.dimension) + " floats, got " +
                      std::to_string(embedding->size()));
    Eigen::VectorXf values(config_.dimension);
    for (int d = 0; d < config_.dimension; ++d) {
      const auto& x = (*embedding)[static_cast<std::size_t>(d)];
      if (!x.is_number() || !std::isfinite(x.get<double>()))
        throw Error(ErrorCode::RemoteUnavailable, "non-finite embedding component");
      values[d] = x.get<float>();
    }
    if (config_.normalize) normalize_l2(values);
    out[slot].values = std::move(values);
  }
  for (const auto& v : out) {
    if (v.values.size() == 0) throw Error(ErrorCode::RemoteUnavailable, "duplicate response index");
  }
  return out;
}

// --- free functions -------------------------------------------------------

std::shared_ptr<const Embedder> make_embedder(const EmbedderConfig& config) {
  if (config.provider == EmbedderProvider::Remote) return std::make_shared<RemoteEmbedder>(config);
  return std::make_shared<LocalHashEmbedder>(config);
}

EmbeddingVector embed_text(std::string_view text, const EmbedderConfig& config) {
  return make_embedder(config)->embed(text);
}

std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts,
                                         const EmbedderConfig& config) {
  return make_embedder(config)->embed_batch(texts);
}

}  // namespace patentrag
