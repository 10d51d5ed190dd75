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

#include <algorithm>
#include <cstdlib>
#include <random>

#include "doctest.h"
#include "patentrag/embedder.hpp"
#include "patentrag/error.hpp"
#include "support/fake_endpoint.hpp"

using namespace patentrag;
using patentrag::testing::CapturedRequest;
using patentrag::testing::FakeEndpoint;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

EmbedderConfig local_config(int dim = 64) {
  EmbedderConfig c;
  c.provider = EmbedderProvider::Local;
  c.dimension = dim;
  return c;
}

EmbedderConfig remote_config(const std::string& url, int dim) {
  EmbedderConfig c;
  c.provider = EmbedderProvider::Remote;
  c.endpoint_url = url;
  c.dimension = dim;
  c.batch_size = 3;
  c.timeout_ms = 2000;
  c.retry = {3, std::chrono::milliseconds(1)};
  return c;
}

// Embedding API stand-in: component d of text t is (t.size() + d).
std::pair<int, nlohmann::json> echo_embeddings(const CapturedRequest& req, int dim) {
  nlohmann::json data = nlohmann::json::array();
  for (const auto& text : req.body["input"]) {
    std::vector<float> v;
    for (int d = 0; d < dim; ++d) v.push_back(float(text.get<std::string>().size() + d));
    data.push_back({{"embedding", v}});
  }
  return {200, {{"data", data}}};
}

}  // namespace

TEST_SUITE("embedder.local_hash_embed") {
  TEST_CASE("golden vector for \"abc\" is bit-exact") {
    // Hand-executed: FNV-1a("abc") = 0xe71fa2190541574b, ^42 -> ...5761,
    // bucket 0x61 % 8 = 1, top bit set -> -1; normalized: e1 * -1.
    const float golden[8] = {0.0f, -1.0f, 0.0f, 0.0f, 0.0f, 0.0f, 0.0f, 0.0f};
    const auto v = local_hash_embed("abc", 8, 42);
    REQUIRE(v.dimension() == 8);
    for (int i = 0; i < 8; ++i) CHECK(std::bit_cast<std::uint32_t>(v.values[i]) == std::bit_cast<std::uint32_t>(golden[i]));
  }

  TEST_CASE("golden vector over multi-byte code points") {
    // Frozen from an independent execution of the five hashing steps.
    const float golden[8] = {0x1.555556p-2f, -0x1.555556p-2f, 0.0f, -0x1.555556p-1f,
                             0x1.555556p-2f, 0x1.555556p-2f,  0x1.555556p-2f, 0.0f};
    const auto v = local_hash_embed("h\xC3\xA9llo w\xC3\xB6rld", 8, 42);
    for (int i = 0; i < 8; ++i) CHECK(std::bit_cast<std::uint32_t>(v.values[i]) == std::bit_cast<std::uint32_t>(golden[i]));
  }

  TEST_CASE("case and whitespace folding") {
    const auto a = local_hash_embed("Patent  Retrieval", 8, 42);
    const float golden[8] = {-0.5f, -0.5f, 0.0f, 0.0f, 0.0f, 0.0f, 0.5f, 0.5f};
    for (int i = 0; i < 8; ++i) CHECK(a.values[i] == golden[i]);
    CHECK(local_hash_embed("patent retrieval", 8, 42).values == a.values);
  }

  TEST_CASE("unit norm and short texts") {
    CHECK(local_hash_embed("aaa", 8, 42).values.norm() == doctest::Approx(1.0).epsilon(1e-6));
    const auto ab = local_hash_embed("ab", 8, 42);
    CHECK(ab.values.norm() == doctest::Approx(1.0).epsilon(1e-6));
    const auto empty = local_hash_embed("", 8, 42);
    CHECK(empty.values[0] == 1.0f);
    CHECK(empty.values.tail(7).isZero());
    CHECK_THROWS(local_hash_embed("abc", 1, 42));
  }

  TEST_CASE("seed changes the vector") {
    CHECK(local_hash_embed("battery electrode", 64, 1).values != local_hash_embed("battery electrode", 64, 2).values);
  }

  TEST_CASE("one-character edits rarely collide") {
    std::mt19937_64 rng(2024);
    int collisions = 0;
    for (int i = 0; i < 1000; ++i) {
      std::string a(3, 'a');
      for (char& c : a) c = char('a' + rng() % 26);
      std::string b = a;
      b[2] = char('a' + (b[2] - 'a' + 1 + rng() % 25) % 26);
      if (local_hash_embed(a, 256, 42).values == local_hash_embed(b, 256, 42).values) ++collisions;
    }
    // Single-trigram texts collide when bucket and sign agree: p = 1/512.
    CHECK(collisions <= 10);
  }
}

TEST_SUITE("embedder.local") {
  TEST_CASE("empty text is rejected") {
    LocalHashEmbedder e(local_config());
    CHECK(code_of([&] { e.embed(""); }) == ErrorCode::EmptyText);
    CHECK(code_of([&] { e.embed(" \n\t"); }) == ErrorCode::EmptyText);
    CHECK(code_of([&] { embed_text("", local_config()); }) == ErrorCode::EmptyText);
  }

  TEST_CASE("deterministic and batch equals element-wise embedding") {
    const auto cfg = local_config(128);
    const std::vector<std::string> texts = {"lithium cathode", "rotor blade", "antenna array", "genome",
                                            "solid electrolyte", "gas turbine", "mimo"};
    CHECK(embed_text(texts[0], cfg).values == embed_text(texts[0], cfg).values);
    const auto batch = embed_batch(texts, cfg);
    REQUIRE(batch.size() == texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) CHECK(batch[i].values == embed_text(texts[i], cfg).values);
    CHECK(embed_batch(std::vector<std::string>{texts[3]}, cfg)[0].values == embed_text(texts[3], cfg).values);

    std::vector<std::size_t> perm = {6, 2, 0, 5, 1, 4, 3};
    std::vector<std::string> permuted;
    for (auto p : perm) permuted.push_back(texts[p]);
    const auto permuted_batch = embed_batch(permuted, cfg);
    for (std::size_t i = 0; i < perm.size(); ++i) CHECK(permuted_batch[i].values == batch[perm[i]].values);
  }

  TEST_CASE("every local vector has unit norm") {
    const auto cfg = local_config(1536);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
      std::string text;
      for (int c = 0; c < 1 + int(rng() % 80); ++c) text.push_back(char(' ' + rng() % 95));
      if (text.find_first_not_of(' ') == std::string::npos) continue;
      const auto v = embed_text(text, cfg);
      CHECK(v.dimension() == 1536);
      CHECK(std::abs(v.values.norm() - 1.0f) <= 1e-4f);
      CHECK(v.values.allFinite());
    }
  }

  TEST_CASE("config validation") {
    auto cfg = local_config();
    cfg.dimension = 1;
    CHECK(code_of([&] { validate(cfg); }) == ErrorCode::InvalidConfig);
    cfg = local_config();
    cfg.batch_size = 0;
    CHECK(code_of([&] { validate(cfg); }) == ErrorCode::InvalidConfig);
    CHECK(EmbedderConfig{}.dimension == 1536);
    CHECK(EmbedderConfig{}.normalize);
  }
}

TEST_SUITE("embedder.remote") {
  TEST_CASE("request shape, bearer token and normalization") {
    FakeEndpoint endpoint([](const CapturedRequest& req, int) { return echo_embeddings(req, 4); });
    RemoteEmbedder embedder(remote_config(endpoint.url("/v1/embeddings"), 4), "sk-test-secret");
    const auto v = embedder.embed("abcd");
    const auto requests = endpoint.requests();
    REQUIRE(requests.size() == 1);
    CHECK(requests[0].path == "/v1/embeddings");
    CHECK(requests[0].authorization == "Bearer sk-test-secret");
    CHECK(requests[0].body["model"] == "gpt-3.5-turbo-0125");
    CHECK(requests[0].body["input"] == nlohmann::json::array({"abcd"}));
    // (4,5,6,7) / sqrt(126)
    CHECK(v.values[0] == doctest::Approx(4.0 / std::sqrt(126.0)));
    CHECK(std::abs(v.values.norm() - 1.0f) <= 1e-4f);
  }

  TEST_CASE("batch of 7 with batch_size 3 makes calls of 3, 3 and 1") {
    FakeEndpoint endpoint([](const CapturedRequest& req, int) { return echo_embeddings(req, 4); });
    RemoteEmbedder embedder(remote_config(endpoint.url(), 4), "key");
    std::vector<std::string> texts;
    for (int i = 1; i <= 7; ++i) texts.push_back(std::string(static_cast<std::size_t>(i), 'x'));
    const auto vectors = embedder.embed_batch(texts);
    const auto requests = endpoint.requests();
    REQUIRE(requests.size() == 3);
    CHECK(requests[0].body["input"].size() == 3);
    CHECK(requests[1].body["input"].size() == 3);
    CHECK(requests[2].body["input"].size() == 1);
    REQUIRE(vectors.size() == 7);
    for (std::size_t i = 0; i < 7; ++i) {
      Eigen::VectorXf expected(4);
      for (int d = 0; d < 4; ++d) expected[d] = float(i + 1 + d);
      normalize_l2(expected);
      CHECK(vectors[i].values.isApprox(expected));
    }
  }

  TEST_CASE("wrong dimension from the endpoint is DimensionMismatch") {
    FakeEndpoint endpoint([](const CapturedRequest& req, int) { return echo_embeddings(req, 7); });
    RemoteEmbedder embedder(remote_config(endpoint.url(), 8), "key");
    CHECK(code_of([&] { embedder.embed("text"); }) == ErrorCode::DimensionMismatch);
  }

  TEST_CASE("transient failures are retried, then succeed") {
    FakeEndpoint endpoint([](const CapturedRequest& req, int call) -> std::pair<int, nlohmann::json> {
      if (call < 2) return {503, {{"error", "busy"}}};
      return echo_embeddings(req, 4);
    });
    RemoteEmbedder embedder(remote_config(endpoint.url(), 4), "key");
    CHECK(embedder.embed("abc").dimension() == 4);
    CHECK(endpoint.requests().size() == 3);
  }

  TEST_CASE("persistent failure is RemoteUnavailable after bounded retries, with the chunk range") {
    FakeEndpoint endpoint([](const CapturedRequest&, int) -> std::pair<int, nlohmann::json> {
      return {500, {{"error", "down"}}};
    });
    RemoteEmbedder embedder(remote_config(endpoint.url(), 4), "sk-very-secret");
    try {
      embedder.embed_batch(std::vector<std::string>{"a", "b", "c", "d"});
      FAIL("expected failure");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::RemoteUnavailable);
      CHECK(std::string(e.what()).find("[0, 3)") != std::string::npos);
      CHECK(std::string(e.what()).find("sk-very-secret") == std::string::npos);
    }
    CHECK(endpoint.requests().size() == 3);
  }

  TEST_CASE("client errors are not retried") {
    FakeEndpoint endpoint([](const CapturedRequest&, int) -> std::pair<int, nlohmann::json> {
      return {401, {{"error", "unauthorized"}}};
    });
    RemoteEmbedder embedder(remote_config(endpoint.url(), 4), "key");
    CHECK(code_of([&] { embedder.embed("x"); }) == ErrorCode::RemoteUnavailable);
    CHECK(endpoint.requests().size() == 1);
  }

  TEST_CASE("unreachable endpoint") {
    auto cfg = remote_config("http://127.0.0.1:1/v1/embeddings", 4);
    cfg.retry.max_attempts = 2;
    RemoteEmbedder embedder(cfg, "key");
    CHECK(code_of([&] { embedder.embed("x"); }) == ErrorCode::RemoteUnavailable);
  }

  TEST_CASE("remote provider requires endpoint and API key") {
    auto cfg = remote_config("", 4);
    CHECK(code_of([&] { RemoteEmbedder e(cfg, "key"); }) == ErrorCode::InvalidConfig);
    cfg = remote_config("http://127.0.0.1:1/", 4);
    ::unsetenv("EMBEDDER_API_KEY");
    CHECK(code_of([&] { RemoteEmbedder e(cfg); }) == ErrorCode::InvalidConfig);
    ::setenv("EMBEDDER_API_KEY", "from-env", 1);
    CHECK_NOTHROW(RemoteEmbedder{cfg});
    ::unsetenv("EMBEDDER_API_KEY");
  }
}
