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
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "patentrag/corpus.hpp"
#include "patentrag/embedder.hpp"
#include "patentrag/http_json.hpp"
#include "patentrag/index.hpp"

// Two-stage answer pipeline: retrieve the top-k patents for a query, render
// them into a bounded numbered context, then hand context and query to a
// generator.

namespace patentrag {

inline constexpr int kDefaultTopK = 5;
inline constexpr int kDefaultBudgetChars = 2048;  // ~512 tokens at 4 chars/token
inline constexpr std::string_view kSystemInstruction =
    "Answer using only the numbered patent context; cite as [n]";

/// Read-only lookup from application number to record.
class RecordStore {
 public:
  RecordStore() = default;
  explicit RecordStore(std::vector<PatentRecord> records);

  const PatentRecord* find(std::string_view id) const;
  const std::vector<PatentRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }

 private:
  std::vector<PatentRecord> records_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

struct Snippet {
  std::string doc_id;
  std::string title;
  std::string text;  // "[rank] id | title | abstract", possibly cut
  bool truncated = false;
};

struct RetrievalContext {
  std::string query;
  std::vector<SearchHit> hits;
  std::vector<Snippet> snippets;
  int budget_chars = kDefaultBudgetChars;

  /// Non-empty snippets joined by '\n'; never longer than budget_chars.
  std::string rendered() const;
};

enum class GeneratorProvider { Remote, LocalTemplate };

struct GeneratorConfig {
  GeneratorProvider provider = GeneratorProvider::LocalTemplate;
  std::string model_name = "gpt-3.5-turbo-0125";
  std::string endpoint_url;  // remote only
  double temperature = 0.0;
  int timeout_ms = 60000;
  RetryPolicy retry;
};

void validate(const GeneratorConfig& config);

struct RagAnswer {
  std::string answer_text;
  std::vector<std::string> cited_doc_ids;  // in retrieval order
  std::vector<float> retrieval_scores;
  std::int64_t retrieval_ms = 0;
  std::int64_t generation_ms = 0;
};

nlohmann::json to_json(const RagAnswer& answer);
nlohmann::json to_json(const SearchHit& hit);

struct RetrievalOptions {
  int k = kDefaultTopK;
  std::optional<int> nprobe;  // set: approximate search over the IVF partition
};

/// Embeds the query and returns the top-k hits from the index.
std::vector<SearchHit> retrieve(std::string_view query, const Embedder& embedder,
                                const VectorIndex& index, const RetrievalOptions& options = {});

/// Renders one snippet per hit in rank order. Each snippet may use an equal
/// share of what is left of the budget (the '\n' separator included), so
/// space a short snippet does not use passes to the ones after it.
/// Throws UnknownDocId when a hit has no record.
RetrievalContext assemble_context(std::string_view query, std::vector<SearchHit> hits,
                                  const RecordStore& records, int budget_chars = kDefaultBudgetChars);

/// Chat-completion messages for the remote generator: the fixed system
/// instruction, then one user message holding the numbered context followed
/// by the question.
nlohmann::json build_messages(const RetrievalContext& context);

/// Extracts "[n]" citations and maps them to hit ids, ordered by rank.
std::vector<std::string> parse_citations(std::string_view answer, const std::vector<SearchHit>& hits);

/// Deterministic answer: "Top match: <rank-1 title> [1]; also relevant: [2], ..., [K]".
std::string render_template_answer(const RetrievalContext& context);

/// Throws EmptyContext for a context without hits, GeneratorUnavailable when
/// the remote generator fails after its retries. retrieval_ms is left 0.
RagAnswer generate_answer(const RetrievalContext& context, const GeneratorConfig& config);

struct PipelineConfig {
  RetrievalOptions retrieval;
  int budget_chars = kDefaultBudgetChars;
  GeneratorConfig generator;
};

/// Immutable end-to-end pipeline over one index snapshot.
class RagPipeline {
 public:
  RagPipeline(std::shared_ptr<const Embedder> embedder, std::shared_ptr<const VectorIndex> index,
              std::shared_ptr<const RecordStore> records, PipelineConfig config);

  std::vector<SearchHit> search(std::string_view query, std::optional<int> k = std::nullopt) const;
  RagAnswer answer(std::string_view query, std::optional<int> k = std::nullopt) const;

  const VectorIndex& index() const noexcept { return *index_; }
  const Embedder& embedder() const noexcept { return *embedder_; }
  const RecordStore& records() const noexcept { return *records_; }
  const PipelineConfig& config() const noexcept { return config_; }

 private:
  std::shared_ptr<const Embedder> embedder_;
  std::shared_ptr<const VectorIndex> index_;
  std::shared_ptr<const RecordStore> records_;
  PipelineConfig config_;
};

/// Embeds compose_document_text() of every record into a fresh index.
VectorIndex build_index(const std::vector<PatentRecord>& records, const Embedder& embedder);

}  // namespace patentrag
