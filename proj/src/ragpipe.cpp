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

#include "patentrag/ragpipe.hpp"

#include <chrono>
#include <set>

#include "patentrag/error.hpp"
#include "utf8.hpp"

namespace patentrag {
namespace {

std::int64_t elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - since)
      .count();
}

std::string complete_remote(const RetrievalContext& context, const GeneratorConfig& config) {
  const std::string api_key = env_or_empty("GENERATOR_API_KEY");
  if (api_key.empty()) throw Error(ErrorCode::InvalidConfig, "remote generator requires GENERATOR_API_KEY");
  nlohmann::json body;
  body["model"] = config.model_name;
  body["messages"] = build_messages(context);
  body["temperature"] = config.temperature;
  const nlohmann::json response =
      post_json(config.endpoint_url, body, api_key, std::chrono::milliseconds(config.timeout_ms),
                config.retry, ErrorCode::GeneratorUnavailable);
  const auto choices = response.find("choices");
  if (choices == response.end() || !choices->is_array() || choices->empty())
    throw Error(ErrorCode::GeneratorUnavailable, "response has no choices");
  const auto& message = (*choices)[0].value("message", nlohmann::json::object());
  const auto content = message.find("content");
  if (content == message.end() || !content->is_string())
    throw Error(ErrorCode::GeneratorUnavailable, "response has no message content");
  return content->get<std::string>();
}

}  // namespace

RecordStore::RecordStore(std::vector<PatentRecord> records) : records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i) by_id_.emplace(records_[i].application_number, i);
}

const PatentRecord* RecordStore::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &records_[it->second];
}

std::string RetrievalContext::rendered() const {
  std::string out;
  for (const auto& s : snippets) {
    if (s.text.empty()) continue;
    if (!out.empty()) out.push_back('\n');
    out += s.text;
  }
  return out;
}

void validate(const GeneratorConfig& config) {
  if (config.temperature < 0.0) throw Error(ErrorCode::InvalidConfig, "temperature must be >= 0");
  if (config.timeout_ms < 1) throw Error(ErrorCode::InvalidConfig, "timeout_ms must be positive");
  if (config.provider == GeneratorProvider::Remote && config.endpoint_url.empty())
    throw Error(ErrorCode::InvalidConfig, "remote generator requires endpoint_url");
}

nlohmann::json to_json(const SearchHit& hit) {
  return {{"doc_id", hit.doc_id}, {"score", hit.score}, {"rank", hit.rank}};
}

nlohmann::json to_json(const RagAnswer& answer) {
  nlohmann::json j;
  j["answer_text"] = answer.answer_text;
  j["cited_doc_ids"] = answer.cited_doc_ids;
  j["retrieval_scores"] = answer.retrieval_scores;
  j["retrieval_ms"] = answer.retrieval_ms;
  j["generation_ms"] = answer.generation_ms;
  return j;
}

std::vector<SearchHit> retrieve(std::string_view query, const Embedder& embedder,
                                const VectorIndex& index, const RetrievalOptions& options) {
  const EmbeddingVector q = embedder.embed(query);
  if (options.nprobe) return search_ivf(index, q.values, options.k, *options.nprobe);
  return search_exact(index, q.values, options.k);
}

RetrievalContext assemble_context(std::string_view query, std::vector<SearchHit> hits,
                                  const RecordStore& records, int budget_chars) {
  if (budget_chars < 1) throw Error(ErrorCode::InvalidArgument, "budget_chars must be positive");
  RetrievalContext context;
  context.query = std::string(query);
  context.budget_chars = budget_chars;
  context.hits = std::move(hits);

  std::size_t remaining = static_cast<std::size_t>(budget_chars);
  bool any_rendered = false;
  const std::size_t n = context.hits.size();
  for (std::size_t i = 0; i < n; ++i) {
    const SearchHit& hit = context.hits[i];
    const PatentRecord* record = records.find(hit.doc_id);
    if (!record) throw Error(ErrorCode::UnknownDocId, hit.doc_id);

    const std::string full = "[" + std::to_string(hit.rank) + "] " + hit.doc_id + " | " +
                             record->title + " | " + record->abstract;
    const std::size_t share = remaining / (n - i);
    const std::size_t separator = any_rendered ? 1 : 0;
    Snippet snippet{hit.doc_id, record->title, {}, false};
    if (share > separator) {
      const std::size_t allowance = share - separator;
      if (full.size() <= allowance) {
        snippet.text = full;
      } else {
        snippet.text = full.substr(0, utf8::safe_prefix(full, allowance));
        snippet.truncated = true;
      }
    } else {
      snippet.truncated = true;
    }
    if (!snippet.text.empty()) {
      remaining -= separator + snippet.text.size();
      any_rendered = true;
    }
    context.snippets.push_back(std::move(snippet));
  }
  return context;
}

nlohmann::json build_messages(const RetrievalContext& context) {
  nlohmann::json messages = nlohmann::json::array();
  messages.push_back({{"role", "system"}, {"content", std::string(kSystemInstruction)}});
  messages.push_back(
      {{"role", "user"}, {"content", "Context:\n" + context.rendered() + "\n\nQuestion: " + context.query}});
  return messages;
}

std::vector<std::string> parse_citations(std::string_view answer, const std::vector<SearchHit>& hits) {
  std::set<std::size_t> ranks;
  for (std::size_t open = answer.find('['); open != std::string_view::npos;
       open = answer.find('[', open + 1)) {
    std::size_t pos = open + 1;
    std::size_t value = 0;
    std::size_t digits = 0;
    while (pos < answer.size() && answer[pos] >= '0' && answer[pos] <= '9' && digits < 6) {
      value = value * 10 + static_cast<std::size_t>(answer[pos] - '0');
      ++pos;
      ++digits;
    }
    if (digits > 0 && pos < answer.size() && answer[pos] == ']' && value >= 1 && value <= hits.size())
      ranks.insert(value);
  }
  std::vector<std::string> ids;
  for (std::size_t r : ranks) ids.push_back(hits[r - 1].doc_id);
  return ids;
}

std::string render_template_answer(const RetrievalContext& context) {
  std::string text = "Top match: " + context.snippets.front().title + " [1]";
  if (context.snippets.size() > 1) {
    text += "; also relevant: ";
    for (std::size_t i = 1; i < context.snippets.size(); ++i) {
      if (i > 1) text += ", ";
      text += "[" + std::to_string(i + 1) + "]";
    }
  }
  return text;
}

RagAnswer generate_answer(const RetrievalContext& context, const GeneratorConfig& config) {
  if (context.hits.empty() || context.snippets.empty())
    throw Error(ErrorCode::EmptyContext, "no retrieved documents to answer from");
  validate(config);
  const auto started = std::chrono::steady_clock::now();
  RagAnswer answer;
  for (const auto& hit : context.hits) answer.retrieval_scores.push_back(hit.score);
  if (config.provider == GeneratorProvider::LocalTemplate) {
    answer.answer_text = render_template_answer(context);
    for (const auto& hit : context.hits) answer.cited_doc_ids.push_back(hit.doc_id);
  } else {
    answer.answer_text = complete_remote(context, config);
    answer.cited_doc_ids = parse_citations(answer.answer_text, context.hits);
  }
  answer.generation_ms = elapsed_ms(started);
  return answer;
}

RagPipeline::RagPipeline(std::shared_ptr<const Embedder> embedder, std::shared_ptr<const VectorIndex> index,
                         std::shared_ptr<const RecordStore> records, PipelineConfig config)
    : embedder_(std::move(embedder)),
      index_(std::move(index)),
      records_(std::move(records)),
      config_(std::move(config)) {
  if (!embedder_ || !index_ || !records_)
    throw Error(ErrorCode::InvalidArgument, "pipeline needs an embedder, an index and records");
  if (config_.retrieval.k < 1) throw Error(ErrorCode::BadK, "k must be >= 1");
  if (embedder_->dimension() != index_->dimension())
    throw Error(ErrorCode::DimensionMismatch, "embedder dimension " + std::to_string(embedder_->dimension()) +
                                                  " != index dimension " +
                                                  std::to_string(index_->dimension()));
  validate(config_.generator);
}

std::vector<SearchHit> RagPipeline::search(std::string_view query, std::optional<int> k) const {
  RetrievalOptions options = config_.retrieval;
  if (k) options.k = *k;
  return retrieve(query, *embedder_, *index_, options);
}

RagAnswer RagPipeline::answer(std::string_view query, std::optional<int> k) const {
  const auto started = std::chrono::steady_clock::now();
  std::vector<SearchHit> hits = search(query, k);
  const std::int64_t retrieval_ms = elapsed_ms(started);
  const RetrievalContext context = assemble_context(query, std::move(hits), *records_, config_.budget_chars);
  RagAnswer answer = generate_answer(context, config_.generator);
  answer.retrieval_ms = retrieval_ms;
  return answer;
}

VectorIndex build_index(const std::vector<PatentRecord>& records, const Embedder& embedder) {
  std::vector<std::string> texts;
  texts.reserve(records.size());
  for (const auto& r : records) texts.push_back(compose_document_text(r));
  std::vector<EmbeddingVector> vectors = embedder.embed_batch(texts);
  VectorIndex index(embedder.dimension());
  for (std::size_t i = 0; i < records.size(); ++i) index.add(records[i].application_number, vectors[i].values);
  return index;
}

}  // namespace patentrag
