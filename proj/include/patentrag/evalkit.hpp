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
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "patentrag/corpus.hpp"
#include "patentrag/embedder.hpp"
#include "patentrag/index.hpp"
#include "patentrag/ragpipe.hpp"

// Retrieval quality metrics: top-1 accuracy, recall@k, kNN domain
// classification and clustering purity, plus the report that ties them
// together.

namespace patentrag {

struct LabeledQuery {
  std::string query_text;
  std::set<std::string> relevant_doc_ids;
  std::optional<std::string> expected_domain;
};

/// Reads {"query", "relevant_ids": [...], "domain"?} lines.
std::vector<LabeledQuery> load_queries(const std::filesystem::path& path);
std::vector<LabeledQuery> parse_queries(std::istream& in);

/// |top-k hit ids ∩ relevant| / |relevant|. Throws EmptyRelevantSet, BadK.
double recall_at_k(std::span<const SearchHit> hits, const std::set<std::string>& relevant, int k);

/// 1.0 iff the rank-1 hit is relevant. Throws EmptyHits.
double top1_accuracy(std::span<const SearchHit> hits, const std::set<std::string>& relevant);

/// Majority vote over the field_of_invention of the top-k exact hits. Ties
/// go to the label with the larger summed score, then to the smaller label.
std::string classify_by_knn(const Eigen::Ref<const Eigen::VectorXf>& query, const VectorIndex& index,
                            const RecordStore& records, int k = kDefaultTopK);

/// (1/N) * sum over clusters of the size of its largest label group.
/// Both maps must cover the same documents. Throws EmptyInput.
double clustering_purity(const std::map<std::string, std::uint32_t>& assignments,
                         const std::map<std::string, std::string>& labels);

/// Purity of a trained index's inverted-file lists against record domains.
double ivf_purity(const VectorIndex& index, const RecordStore& records);

struct DomainRates {
  double accuracy = 0.0;
  double recall = 0.0;
  std::size_t n_queries = 0;
};

struct QueryFailure {
  std::size_t query_index;
  std::string message;
};

struct EvalReport {
  std::string model_label;
  double accuracy = 0.0;
  double recall_at_k = 0.0;
  int k = kDefaultTopK;
  std::map<std::string, DomainRates> per_domain;
  std::size_t n_queries = 0;  // successfully scored
  std::vector<QueryFailure> failures;
};

struct EvalOptions {
  std::string model_label = "local-hash-embedder";
  RetrievalOptions retrieval;
};

/// Scores every query against `index`. A query that fails (empty text,
/// unknown relevant id, ...) is listed in `failures` and left out of the
/// averages. If `split` is given, every relevant id must be a test-split id.
/// Throws NoSuccessfulQueries when nothing could be scored.
EvalReport run_eval(const VectorIndex& index, const RecordStore& corpus, const Embedder& embedder,
                    std::span<const LabeledQuery> queries, const EvalOptions& options,
                    const CorpusSplit* split = nullptr);

/// Same, over a fresh index of the full corpus.
EvalReport run_eval(const RecordStore& corpus, const Embedder& embedder,
                    std::span<const LabeledQuery> queries, const EvalOptions& options,
                    const CorpusSplit* split = nullptr);

struct ReferenceResult {
  std::string_view model;
  double accuracy;
  double recall;
};

/// Reference figures for hosted-model configurations, displayed beside
/// measured rows for orientation only.
inline constexpr ReferenceResult kReferenceResults[] = {
    {"gpt-3.5-turbo", 0.612, 0.804},
    {"gpt-3.5-turbo+RAG", 0.653, 0.867},
    {"gpt-3.5-turbo-0125", 0.628, 0.826},
    {"gpt-3.5-turbo-0125+RAG", 0.805, 0.921},
    {"gpt-4.0", 0.801, 0.913},
};

nlohmann::json to_json(const EvalReport& report);
/// Aligned plain-text table: Model | Accuracy rate | Recall, measured row
/// first, then the reference rows.
std::string render_table(const EvalReport& report);

}  // namespace patentrag
