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

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "patentrag/http_json.hpp"

namespace patentrag {

/// Dense embedding of a document or query.
template <typename Scalar>
struct BasicEmbedding {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;
  std::optional<std::string> source_id;

  Eigen::Index dimension() const noexcept { return values.size(); }
};

using EmbeddingVector = BasicEmbedding<float>;

enum class EmbedderProvider { Remote, Local };

struct EmbedderConfig {
  EmbedderProvider provider = EmbedderProvider::Local;
  std::string model_name = "gpt-3.5-turbo-0125";
  int dimension = 1536;
  std::string endpoint_url;  // remote only
  int batch_size = 32;
  int timeout_ms = 30000;
  bool normalize = true;
  std::uint64_t seed = 42;  // local only
  RetryPolicy retry;
  int max_in_flight = 4;  // remote only
};

/// Throws Error(InvalidConfig) when the configuration cannot be used.
void validate(const EmbedderConfig& config);

/// Deterministic trigram feature hashing, bit-reproducible across platforms:
///   1. ASCII-lowercase the text and collapse whitespace runs to one space;
///   2. take every window of three code points (shorter text: one token);
///   3. h = FNV-1a-64(token bytes) ^ seed;
///   4. accumulator[h % dimension] += (h >> 63) ? -1 : +1;
///   5. L2-normalize (all-zero accumulator -> unit vector e0).
/// Requires dimension >= 2.
EmbeddingVector local_hash_embed(std::string_view text, int dimension, std::uint64_t seed);

/// Scales v to unit L2 norm in place; a zero vector becomes e0.
void normalize_l2(Eigen::Ref<Eigen::VectorXf> v);

class Embedder {
 public:
  virtual ~Embedder() = default;

  virtual int dimension() const noexcept = 0;
  /// Throws Error(EmptyText) for blank input.
  virtual EmbeddingVector embed(std::string_view text) const = 0;
  /// Output order matches input order.
  virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const = 0;
};

class LocalHashEmbedder final : public Embedder {
 public:
  explicit LocalHashEmbedder(const EmbedderConfig& config);

  int dimension() const noexcept override { return dimension_; }
  EmbeddingVector embed(std::string_view text) const override;
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override;

 private:
  int dimension_;
  std::uint64_t seed_;
};

/// Client for an embedding HTTP API:
///   POST {model, input: [texts]} -> {data: [{embedding: [floats]}]}
/// with the bearer token taken from EMBEDDER_API_KEY.
class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(EmbedderConfig config);
  RemoteEmbedder(EmbedderConfig config, std::string api_key);
  ~RemoteEmbedder() override;

  int dimension() const noexcept override { return config_.dimension; }
  EmbeddingVector embed(std::string_view text) const override;
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override;

 private:
  std::vector<EmbeddingVector> request_chunk(std::span<const std::string> texts) const;

  EmbedderConfig config_;
  std::string api_key_;
  struct Limiter;
  std::unique_ptr<Limiter> limiter_;
};

std::shared_ptr<const Embedder> make_embedder(const EmbedderConfig& config);

EmbeddingVector embed_text(std::string_view text, const EmbedderConfig& config);
std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts,
                                         const EmbedderConfig& config);

}  // namespace patentrag
