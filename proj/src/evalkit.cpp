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

#include "patentrag/evalkit.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "patentrag/error.hpp"

namespace patentrag {
namespace {

std::string percent(double rate) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.1f%%", rate * 100.0);
  return buffer;
}

std::string pad_right(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string pad_left(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

}  // namespace

std::vector<LabeledQuery> parse_queries(std::istream& in) {
  std::vector<LabeledQuery> queries;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fail = [&](const std::string& why) {
      return Error(ErrorCode::InvalidArgument, "query line " + std::to_string(number) + ": " + why);
    };
    const nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw fail("not a JSON object");
    LabeledQuery q;
    if (!j.contains("query") || !j["query"].is_string()) throw fail("missing \"query\"");
    q.query_text = j["query"].get<std::string>();
    if (!j.contains("relevant_ids") || !j["relevant_ids"].is_array()) throw fail("missing \"relevant_ids\"");
    for (const auto& id : j["relevant_ids"]) {
      if (!id.is_string()) throw fail("relevant_ids must be strings");
      q.relevant_doc_ids.insert(id.get<std::string>());
    }
    if (q.relevant_doc_ids.empty()) throw fail("relevant_ids is empty");
    if (j.contains("domain") && j["domain"].is_string()) q.expected_domain = j["domain"].get<std::string>();
    queries.push_back(std::move(q));
  }
  return queries;
}

std::vector<LabeledQuery> load_queries(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableSource, "cannot open '" + path.string() + "'");
  return parse_queries(in);
}

double recall_at_k(std::span<const SearchHit> hits, const std::set<std::string>& relevant, int k) {
  if (k < 1) throw Error(ErrorCode::BadK, "k must be >= 1");
  if (relevant.empty()) throw Error(ErrorCode::EmptyRelevantSet, "no relevant documents");
  std::set<std::string> found;
  const std::size_t limit = std::min(hits.size(), static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < limit; ++i)
    if (relevant.count(hits[i].doc_id)) found.insert(hits[i].doc_id);
  return static_cast<double>(found.size()) / static_cast<double>(relevant.size());
}

double top1_accuracy(std::span<const SearchHit> hits, const std::set<std::string>& relevant) {
  if (hits.empty()) throw Error(ErrorCode::EmptyHits, "no hits to score");
  return relevant.count(hits.front().doc_id) ? 1.0 : 0.0;
}

std::string classify_by_knn(const Eigen::Ref<const Eigen::VectorXf>& query, const VectorIndex& index,
                            const RecordStore& records, int k) {
  const std::vector<SearchHit> hits = search_exact(index, query, k);
  struct Tally {
    int votes = 0;
    double score = 0.0;
  };
  std::map<std::string, Tally> tallies;
  for (const auto& hit : hits) {
    const PatentRecord* record = records.find(hit.doc_id);
    if (!record) throw Error(ErrorCode::UnknownDocId, hit.doc_id);
    Tally& t = tallies[record->field_of_invention];
    ++t.votes;
    t.score += hit.score;
  }
  // std::map iterates labels in ascending order, so strict comparisons keep
  // the smallest label on a full tie.
  auto best = tallies.begin();
  for (auto it = std::next(tallies.begin()); it != tallies.end(); ++it) {
    if (it->second.votes > best->second.votes ||
        (it->second.votes == best->second.votes && it->second.score > best->second.score))
      best = it;
  }
  return best->first;
}

double clustering_purity(const std::map<std::string, std::uint32_t>& assignments,
                         const std::map<std::string, std::string>& labels) {
  if (assignments.empty() || labels.empty()) throw Error(ErrorCode::EmptyInput, "nothing to score");
  if (assignments.size() != labels.size())
    throw Error(ErrorCode::InvalidArgument, "assignments and labels cover different documents");
  std::map<std::uint32_t, std::map<std::string, std::size_t>> counts;
  for (const auto& [doc, cluster] : assignments) {
    auto label = labels.find(doc);
    if (label == labels.end()) throw Error(ErrorCode::InvalidArgument, "no label for '" + doc + "'");
    ++counts[cluster][label->second];
  }
  std::size_t majority_total = 0;
  for (const auto& [cluster, by_label] : counts) {
    std::size_t best = 0;
    for (const auto& [label, n] : by_label) best = std::max(best, n);
    majority_total += best;
  }
  return static_cast<double>(majority_total) / static_cast<double>(assignments.size());
}

double ivf_purity(const VectorIndex& index, const RecordStore& records) {
  if (!index.is_trained()) throw Error(ErrorCode::NotTrained, "index has no inverted-file partition");
  std::map<std::string, std::uint32_t> assignments;
  std::map<std::string, std::string> labels;
  for (std::size_t i = 0; i < index.size(); ++i) {
    const PatentRecord* record = records.find(index.id_at(i));
    if (!record) throw Error(ErrorCode::UnknownDocId, index.id_at(i));
    assignments[index.id_at(i)] = index.ivf()->assignments[i];
    labels[index.id_at(i)] = record->field_of_invention;
  }
  return clustering_purity(assignments, labels);
}

EvalReport run_eval(const VectorIndex& index, const RecordStore& corpus, const Embedder& embedder,
                    std::span<const LabeledQuery> queries, const EvalOptions& options,
                    const CorpusSplit* split) {
  if (split) {
    const std::set<std::string> test_ids(split->test_ids.begin(), split->test_ids.end());
    for (std::size_t i = 0; i < queries.size(); ++i) {
      for (const auto& id : queries[i].relevant_doc_ids)
        if (!test_ids.count(id))
          throw Error(ErrorCode::InvalidArgument,
                      "query " + std::to_string(i) + " references non-test document '" + id + "'");
    }
  }

  EvalReport report;
  report.model_label = options.model_label;
  report.k = options.retrieval.k;
  double accuracy_sum = 0.0;
  double recall_sum = 0.0;
  std::map<std::string, std::pair<double, double>> domain_sums;

  for (std::size_t i = 0; i < queries.size(); ++i) {
    const LabeledQuery& q = queries[i];
    try {
      if (q.relevant_doc_ids.empty()) throw Error(ErrorCode::EmptyRelevantSet, "no relevant documents");
      for (const auto& id : q.relevant_doc_ids)
        if (!corpus.find(id)) throw Error(ErrorCode::UnknownDocId, id);
      const std::vector<SearchHit> hits = retrieve(q.query_text, embedder, index, options.retrieval);
      const double accuracy = top1_accuracy(hits, q.relevant_doc_ids);
      const double recall = recall_at_k(hits, q.relevant_doc_ids, options.retrieval.k);
      const std::string domain =
          q.expected_domain ? *q.expected_domain : corpus.find(*q.relevant_doc_ids.begin())->field_of_invention;
      accuracy_sum += accuracy;
      recall_sum += recall;
      auto& sums = domain_sums[domain];
      sums.first += accuracy;
      sums.second += recall;
      ++report.per_domain[domain].n_queries;
      ++report.n_queries;
    } catch (const Error& e) {
      report.failures.push_back({i, e.what()});
    }
  }
  if (report.n_queries == 0)
    throw Error(ErrorCode::NoSuccessfulQueries,
                std::to_string(report.failures.size()) + " of " + std::to_string(queries.size()) +
                    " queries failed");

  report.accuracy = accuracy_sum / static_cast<double>(report.n_queries);
  report.recall_at_k = recall_sum / static_cast<double>(report.n_queries);
  for (auto& [domain, rates] : report.per_domain) {
    const auto& sums = domain_sums[domain];
    rates.accuracy = sums.first / static_cast<double>(rates.n_queries);
    rates.recall = sums.second / static_cast<double>(rates.n_queries);
  }
  return report;
}

EvalReport run_eval(const RecordStore& corpus, const Embedder& embedder,
                    std::span<const LabeledQuery> queries, const EvalOptions& options,
                    const CorpusSplit* split) {
  VectorIndex index = build_index(corpus.records(), embedder);
  return run_eval(index, corpus, embedder, queries, options, split);
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json j;
  j["model_label"] = report.model_label;
  j["accuracy"] = report.accuracy;
  j["recall_at_k"] = report.recall_at_k;
  j["k"] = report.k;
  j["n_queries"] = report.n_queries;
  j["n_failed"] = report.failures.size();
  nlohmann::json domains = nlohmann::json::object();
  for (const auto& [domain, rates] : report.per_domain)
    domains[domain] = {{"accuracy", rates.accuracy}, {"recall", rates.recall}, {"n_queries", rates.n_queries}};
  j["per_domain"] = std::move(domains);
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : report.failures) failures.push_back({{"query_index", f.query_index}, {"error", f.message}});
  j["failures"] = std::move(failures);
  nlohmann::json reference = nlohmann::json::array();
  for (const auto& r : kReferenceResults)
    reference.push_back({{"model", r.model}, {"accuracy", r.accuracy}, {"recall", r.recall}});
  j["reference"] = std::move(reference);
  return j;
}

std::string render_table(const EvalReport& report) {
  std::size_t model_width = 5;
  model_width = std::max(model_width, report.model_label.size());
  for (const auto& r : kReferenceResults) model_width = std::max(model_width, r.model.size() + 12);
  const std::string recall_header = "Recall@" + std::to_string(report.k);
  const std::size_t acc_width = 13;
  const std::size_t rec_width = std::max<std::size_t>(recall_header.size(), 8);

  std::ostringstream out;
  auto row = [&](const std::string& model, const std::string& acc, const std::string& rec, const std::string& n) {
    out << pad_right(model, model_width) << "  " << pad_left(acc, acc_width) << "  "
        << pad_left(rec, rec_width) << "  " << pad_left(n, 7) << '\n';
  };
  row("Model", "Accuracy rate", recall_header, "Queries");
  out << std::string(model_width + acc_width + rec_width + 13, '-') << '\n';
  row(report.model_label, percent(report.accuracy), percent(report.recall_at_k), std::to_string(report.n_queries));
  for (const auto& r : kReferenceResults)
    row(std::string(r.model) + " (reference)", percent(r.accuracy), percent(r.recall), "-");
  if (!report.failures.empty()) out << report.failures.size() << " queries failed and were excluded\n";
  if (!report.per_domain.empty()) {
    out << '\n';
    std::size_t domain_width = 6;
    for (const auto& [d, _] : report.per_domain) domain_width = std::max(domain_width, d.size());
    out << pad_right("Domain", domain_width) << "  " << pad_left("Accuracy rate", acc_width) << "  "
        << pad_left(recall_header, rec_width) << "  " << pad_left("Queries", 7) << '\n';
    for (const auto& [d, rates] : report.per_domain)
      out << pad_right(d, domain_width) << "  " << pad_left(percent(rates.accuracy), acc_width) << "  "
          << pad_left(percent(rates.recall), rec_width) << "  " << pad_left(std::to_string(rates.n_queries), 7)
          << '\n';
  }
  return out.str();
}

}  // namespace patentrag
