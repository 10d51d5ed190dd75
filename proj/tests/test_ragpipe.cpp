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

#include <cstdlib>

#include "doctest.h"
#include "patentrag/error.hpp"
#include "patentrag/ragpipe.hpp"
#include "support/fake_endpoint.hpp"
#include "support/test_support.hpp"

using namespace patentrag;
namespace t = patentrag::testing;
using nlohmann::json;

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

PatentRecord record(std::string id, std::string title, std::string abstract) {
  PatentRecord r;
  r.application_number = std::move(id);
  r.title = std::move(title);
  r.abstract = std::move(abstract);
  r.application_date = Date{std::chrono::year{2020}, std::chrono::month{1}, std::chrono::day{1}};
  r.status = "granted";
  r.field_of_invention = "unspecified";
  return r;
}

std::vector<SearchHit> hits_for(const std::vector<std::string>& ids) {
  std::vector<SearchHit> hits;
  for (std::size_t i = 0; i < ids.size(); ++i) hits.push_back({ids[i], 1.0f - 0.1f * float(i), int(i + 1)});
  return hits;
}

struct Fixture {
  std::vector<PatentRecord> records;
  std::shared_ptr<const Embedder> embedder;
  std::shared_ptr<const VectorIndex> index;
  std::shared_ptr<const RecordStore> store;

  explicit Fixture(int per_domain = 5) {
    std::mt19937_64 rng(7);
    int i = 0;
    for (int d = 0; d < 4; ++d)
      for (int j = 0; j < per_domain; ++j) {
        auto r = t::make_record(i++, t::domain_names()[d], rng);
        r.abstract = t::domain_text(d, rng, 10);
        records.push_back(r);
      }
    EmbedderConfig config;
    config.dimension = 256;
    embedder = make_embedder(config);
    index = std::make_shared<VectorIndex>(build_index(records, *embedder));
    store = std::make_shared<RecordStore>(records);
  }

  RagPipeline pipeline(PipelineConfig config = {}) const { return RagPipeline(embedder, index, store, config); }
};

class ScopedEnv {
 public:
  ScopedEnv(const char* name, const char* value) : name_(name) { ::setenv(name, value, 1); }
  ~ScopedEnv() { ::unsetenv(name_); }

 private:
  const char* name_;
};

}  // namespace

TEST_SUITE("ragpipe.retrieve") {
  TEST_CASE("an exact copy of a document's text ranks it first") {
    Fixture f;
    const std::string text = compose_document_text(f.records[7]);
    const auto hits = retrieve(text, *f.embedder, *f.index);
    REQUIRE(hits.size() == 5);
    CHECK(hits[0].doc_id == f.records[7].application_number);
    CHECK(hits[0].score == doctest::Approx(1.0f).epsilon(1e-5));
  }

  TEST_CASE("k and nprobe are honoured") {
    Fixture f;
    CHECK(retrieve("rotor blade", *f.embedder, *f.index, {3, std::nullopt}).size() == 3);
    VectorIndex trained = *f.index;
    trained.train_ivf(4, 1);
    const auto exact = retrieve("rotor blade", *f.embedder, trained, {5, std::nullopt});
    CHECK(retrieve("rotor blade", *f.embedder, trained, {5, 4}) == exact);
    CHECK(code_of([&] { retrieve("rotor blade", *f.embedder, *f.index, {5, 2}); }) == ErrorCode::NotTrained);
  }

  TEST_CASE("empty query") {
    Fixture f;
    CHECK(code_of([&] { retrieve("", *f.embedder, *f.index); }) == ErrorCode::EmptyText);
  }
}

TEST_SUITE("ragpipe.assemble_context") {
  TEST_CASE("short snippets are rendered whole") {
    std::vector<PatentRecord> records;
    for (int i = 0; i < 5; ++i) records.push_back(record("P" + std::to_string(i), "T", "abstract"));
    const RecordStore store(records);
    const auto context = assemble_context("q", hits_for({"P0", "P1", "P2", "P3", "P4"}), store);
    REQUIRE(context.snippets.size() == 5);
    for (const auto& s : context.snippets) CHECK_FALSE(s.truncated);
    CHECK(context.snippets[0].text == "[1] P0 | T | abstract");
    CHECK(context.rendered() ==
          "[1] P0 | T | abstract\n[2] P1 | T | abstract\n[3] P2 | T | abstract\n"
          "[4] P3 | T | abstract\n[5] P4 | T | abstract");
  }

  TEST_CASE("a very long abstract is cut to the budget") {
    const RecordStore store({record("P0", "Long", std::string(10000, 'x'))});
    const auto context = assemble_context("q", hits_for({"P0"}), store, 2048);
    CHECK(context.snippets[0].truncated);
    CHECK(context.rendered().size() == 2048);
  }

  TEST_CASE("unused share rolls over to later snippets") {
    // Budget 100 over five hits. "[1] a | t | x" is 13 chars, under its
    // share of 20. The four long snippets then get floor(87/4)=21,
    // floor(66/3)=22, floor(44/2)=22, floor(22/1)=22, each less one for the
    // newline: 20, 21, 21, 21. Equal fixed shares would have allowed 19.
    std::vector<PatentRecord> records{record("a", "t", "x")};
    for (const char* id : {"b", "c", "d", "e"}) records.push_back(record(id, "t", std::string(200, 'y')));
    const RecordStore store(records);
    const auto context = assemble_context("q", hits_for({"a", "b", "c", "d", "e"}), store, 100);
    std::vector<std::size_t> lengths;
    std::vector<bool> truncated;
    for (const auto& s : context.snippets) {
      lengths.push_back(s.text.size());
      truncated.push_back(s.truncated);
    }
    CHECK(lengths == std::vector<std::size_t>{13, 20, 21, 21, 21});
    CHECK(truncated == std::vector<bool>{false, true, true, true, true});
    CHECK(context.rendered().size() == 100);
  }

  TEST_CASE("multi-byte characters are never split") {
    const RecordStore store({record("P0", "T", std::string(50, 'a') + "\xC3\xA9\xC3\xA9\xC3\xA9")});
    for (int budget = 10; budget < 80; ++budget) {
      const auto context = assemble_context("q", hits_for({"P0"}), store, budget);
      const std::string text = context.rendered();
      CHECK(text.size() <= std::size_t(budget));
      if (!text.empty()) CHECK((static_cast<unsigned char>(text.back()) & 0xC0) != 0xC0);
    }
  }

  TEST_CASE("rendered length never exceeds the budget") {
    Fixture f;
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
      const int budget = 1 + int(rng() % 400);
      std::vector<std::string> ids;
      for (int i = 0; i < 5; ++i) ids.push_back(f.records[rng() % f.records.size()].application_number);
      const auto context = assemble_context("q", hits_for(ids), *f.store, budget);
      CHECK(context.rendered().size() <= std::size_t(budget));
      CHECK(context.snippets.size() == ids.size());
    }
  }

  TEST_CASE("errors") {
    const RecordStore store({record("P0", "T", "a")});
    CHECK(code_of([&] { assemble_context("q", hits_for({"P9"}), store); }) == ErrorCode::UnknownDocId);
    CHECK(code_of([&] { assemble_context("q", hits_for({"P0"}), store, 0); }) == ErrorCode::InvalidArgument);
  }
}

TEST_SUITE("ragpipe.generate") {
  TEST_CASE("template answer cites every hit in rank order") {
    const RecordStore store({record("A", "Alpha", "a"), record("B", "Beta", "b"), record("C", "Gamma", "c")});
    const auto context = assemble_context("q", hits_for({"B", "A", "C"}), store);
    const auto answer = generate_answer(context, {});
    CHECK(answer.answer_text == "Top match: Beta [1]; also relevant: [2], [3]");
    CHECK(answer.cited_doc_ids == std::vector<std::string>{"B", "A", "C"});
    CHECK(answer.retrieval_scores.size() == 3);
  }

  TEST_CASE("single hit template") {
    const RecordStore store({record("A", "Alpha", "a")});
    const auto answer = generate_answer(assemble_context("q", hits_for({"A"}), store), {});
    CHECK(answer.answer_text == "Top match: Alpha [1]");
  }

  TEST_CASE("no hits is EmptyContext") {
    const RecordStore store;
    const auto context = assemble_context("q", {}, store);
    CHECK(code_of([&] { generate_answer(context, {}); }) == ErrorCode::EmptyContext);
  }

  TEST_CASE("citation parsing") {
    const auto hits = hits_for({"A", "B", "C"});
    CHECK(parse_citations("See [3] and [1], not [4] or [0] or [x].", hits) == std::vector<std::string>{"A", "C"});
    CHECK(parse_citations("no citations", hits).empty());
    CHECK(parse_citations("[2][2]", hits) == std::vector<std::string>{"B"});
  }

  TEST_CASE("remote prompt puts the context before the question") {
    ScopedEnv key("GENERATOR_API_KEY", "gen-secret");
    t::FakeEndpoint endpoint([](const t::CapturedRequest& req, int) {
      const std::string prompt = req.body["messages"][1]["content"];
      return std::pair{200, json{{"choices", {{{"message", {{"role", "assistant"}, {"content", "[2] " + prompt}}}}}}}};
    });
    const RecordStore store({record("A", "Alpha", "first abstract"), record("B", "Beta", "second abstract")});
    const auto context = assemble_context("which battery?", hits_for({"A", "B"}), store);
    GeneratorConfig config;
    config.provider = GeneratorProvider::Remote;
    config.endpoint_url = endpoint.url("/v1/chat/completions");
    const auto answer = generate_answer(context, config);

    const auto requests = endpoint.requests();
    REQUIRE(requests.size() == 1);
    const auto& body = requests[0].body;
    CHECK(requests[0].authorization == "Bearer gen-secret");
    CHECK(body["model"] == "gpt-3.5-turbo-0125");
    CHECK(body["temperature"] == 0.0);
    CHECK(body["messages"][0]["role"] == "system");
    CHECK(body["messages"][0]["content"] == "Answer using only the numbered patent context; cite as [n]");
    const std::string prompt = body["messages"][1]["content"];
    const auto first = prompt.find("[1] A | Alpha | first abstract");
    const auto second = prompt.find("[2] B | Beta | second abstract");
    const auto question = prompt.find("which battery?");
    REQUIRE(first != std::string::npos);
    REQUIRE(second != std::string::npos);
    REQUIRE(question != std::string::npos);
    CHECK(first < second);
    CHECK(second < question);
    CHECK(answer.cited_doc_ids == std::vector<std::string>{"A", "B"});
  }

  TEST_CASE("remote failure is GeneratorUnavailable") {
    ScopedEnv key("GENERATOR_API_KEY", "gen-secret");
    t::FakeEndpoint endpoint([](const t::CapturedRequest&, int) { return std::pair{500, json{{"error", "down"}}}; });
    const RecordStore store({record("A", "Alpha", "a")});
    GeneratorConfig config;
    config.provider = GeneratorProvider::Remote;
    config.endpoint_url = endpoint.url();
    config.retry.initial_backoff = std::chrono::milliseconds(1);
    try {
      generate_answer(assemble_context("q", hits_for({"A"}), store), config);
      FAIL("expected GeneratorUnavailable");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::GeneratorUnavailable);
      CHECK(std::string(e.what()).find("gen-secret") == std::string::npos);
    }
    CHECK(endpoint.requests().size() == 3);
  }

  TEST_CASE("malformed remote response is GeneratorUnavailable") {
    ScopedEnv key("GENERATOR_API_KEY", "gen-secret");
    t::FakeEndpoint endpoint([](const t::CapturedRequest&, int) { return std::pair{200, json{{"choices", json::array()}}}; });
    const RecordStore store({record("A", "Alpha", "a")});
    GeneratorConfig config;
    config.provider = GeneratorProvider::Remote;
    config.endpoint_url = endpoint.url();
    CHECK(code_of([&] { generate_answer(assemble_context("q", hits_for({"A"}), store), config); }) ==
          ErrorCode::GeneratorUnavailable);
  }
}

TEST_SUITE("ragpipe.pipeline") {
  TEST_CASE("answers are deterministic apart from timings") {
    Fixture f;
    const auto pipeline = f.pipeline();
    const auto a = pipeline.answer("lithium cathode electrolyte");
    const auto b = pipeline.answer("lithium cathode electrolyte");
    CHECK(a.answer_text == b.answer_text);
    CHECK(a.cited_doc_ids == b.cited_doc_ids);
    CHECK(a.retrieval_scores == b.retrieval_scores);
    CHECK(a.cited_doc_ids.size() == 5);
    const auto hits = pipeline.search("lithium cathode electrolyte");
    for (std::size_t i = 0; i < hits.size(); ++i) CHECK(a.cited_doc_ids[i] == hits[i].doc_id);
  }

  TEST_CASE("query about one domain retrieves that domain") {
    Fixture f;
    const auto hits = f.pipeline().search("antenna beamforming spectrum modulation carrier", 3);
    for (const auto& h : hits) CHECK(f.store->find(h.doc_id)->field_of_invention == "wireless");
  }

  TEST_CASE("dimension mismatch between embedder and index") {
    Fixture f;
    EmbedderConfig other;
    other.dimension = 64;
    CHECK(code_of([&] { RagPipeline(make_embedder(other), f.index, f.store, {}); }) == ErrorCode::DimensionMismatch);
  }

  TEST_CASE("answer JSON fields") {
    Fixture f;
    const json j = to_json(f.pipeline().answer("rotor blade", 2));
    CHECK(j["cited_doc_ids"].size() == 2);
    CHECK(j["retrieval_scores"].size() == 2);
    CHECK(j.contains("answer_text"));
    CHECK(j.contains("retrieval_ms"));
    CHECK(j.contains("generation_ms"));
  }
}
