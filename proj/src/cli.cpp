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

#include "patentrag/cli.hpp"

#include <csignal>
#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "patentrag/config.hpp"
#include "patentrag/corpus.hpp"
#include "patentrag/error.hpp"
#include "patentrag/evalkit.hpp"
#include "patentrag/index.hpp"
#include "patentrag/ragpipe.hpp"
#include "patentrag/service.hpp"

namespace patentrag {
namespace {

struct CommonOptions {
  std::string config_path;
  std::string index_path;
  std::string corpus_path;
  std::optional<int> k;
  std::optional<int> nprobe;
};

struct IngestOptions {
  std::string input;
  std::string format;
  std::string output;
  std::string rejections;
  std::string today;
};

struct IndexOptions {
  std::string corpus;
  std::string output;
  std::string config_path;
  std::optional<int> dim;
  int nlist = 0;
  std::uint64_t seed = 42;
  bool local_embedder = false;
};

struct AnswerOptions {
  std::string query;
  std::optional<int> budget;
  std::string generator;
  bool no_timings = false;
};

struct EvalCliOptions {
  std::string queries;
  std::string label = "local-hash-embedder";
  std::string report_path;
  std::optional<std::uint64_t> split_seed;
};

struct ServeOptions {
  std::optional<std::string> bind;
  std::optional<int> port;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_k) {
  cmd->add_option("--config", o.config_path, "JSON configuration file");
  cmd->add_option("--index", o.index_path, "binary index file");
  cmd->add_option("--corpus", o.corpus_path, "normalized corpus JSONL");
  if (with_k) {
    cmd->add_option("--k", o.k, "number of results")->check(CLI::PositiveNumber);
    cmd->add_option("--nprobe", o.nprobe, "search the inverted-file partition, scanning this many lists")
        ->check(CLI::PositiveNumber);
  }
}

AppConfig resolve_config(const CommonOptions& o) {
  AppConfig config = o.config_path.empty() ? AppConfig{} : load_config(o.config_path);
  if (!o.index_path.empty()) config.index_path = o.index_path;
  if (!o.corpus_path.empty()) config.corpus_path = o.corpus_path;
  apply_index_metadata(config);
  if (o.k) config.k = *o.k;
  if (o.nprobe) config.nprobe = *o.nprobe;
  return config;
}

std::shared_ptr<const VectorIndex> open_index(AppConfig& config) {
  if (config.index_path.empty()) throw Error(ErrorCode::InvalidConfig, "no index given (--index or config)");
  auto index = std::make_shared<const VectorIndex>(load_index(config.index_path));
  config.embedder.dimension = index->dimension();
  return index;
}

std::shared_ptr<const RecordStore> open_records(const AppConfig& config) {
  if (config.corpus_path.empty()) throw Error(ErrorCode::InvalidConfig, "no corpus given (--corpus or config)");
  return std::make_shared<const RecordStore>(load_corpus(config.corpus_path));
}

std::shared_ptr<const RagPipeline> open_pipeline(AppConfig config) {
  validate(config, false);
  auto index = open_index(config);
  auto records = open_records(config);
  return std::make_shared<const RagPipeline>(make_embedder(config.embedder), std::move(index),
                                             std::move(records), pipeline_config(config));
}

int cmd_ingest(const IngestOptions& o, std::ostream& out, std::ostream& err) {
  const InputFormat format = o.format.empty() ? format_from_path(o.input) : parse_format(o.format);
  Date ingestion_date = today_utc();
  if (!o.today.empty()) {
    auto parsed = parse_date(o.today);
    if (!parsed) throw Error(ErrorCode::InvalidArgument, "--today must be a date, got '" + o.today + "'");
    ingestion_date = *parsed;
  }
  const ParseResult parsed = parse_records(std::filesystem::path(o.input), format);

  std::vector<PatentRecord> normalized;
  std::vector<RejectedRecord> rejected;
  for (const auto& raw : parsed.records) {
    auto result = normalize_record(raw, ingestion_date);
    if (auto* r = std::get_if<PatentRecord>(&result)) normalized.push_back(std::move(*r));
    else rejected.push_back(std::get<RejectedRecord>(std::move(result)));
  }
  DedupResult dedup = deduplicate(std::move(normalized));
  rejected.insert(rejected.end(), dedup.rejected.begin(), dedup.rejected.end());

  std::ofstream corpus_out(o.output);
  if (!corpus_out) throw Error(ErrorCode::IoFailure, "cannot write '" + o.output + "'");
  write_jsonl(corpus_out, dedup.kept);

  const std::string rejections_path = o.rejections.empty() ? o.output + ".rejected.jsonl" : o.rejections;
  std::ofstream reject_out(rejections_path);
  if (!reject_out) throw Error(ErrorCode::IoFailure, "cannot write '" + rejections_path + "'");
  write_jsonl(reject_out, rejected);
  for (const auto& e : parsed.errors) {
    reject_out << nlohmann::json{{"reason", "ParseError"}, {"line", e.line}, {"detail", e.message}}.dump() << '\n';
    err << o.input << ":" << e.line << ": " << e.message << '\n';
  }

  std::map<std::string, std::size_t> by_reason;
  for (const auto& r : rejected) ++by_reason[std::string(to_string(r.reason))];
  out << nlohmann::json{{"accepted", dedup.kept.size()},
                        {"rejected", by_reason},
                        {"parse_errors", parsed.errors.size()},
                        {"corpus", o.output},
                        {"rejections", rejections_path}}
             .dump()
      << '\n';
  return 0;
}

int cmd_index(const IndexOptions& o, std::ostream& out) {
  AppConfig config = o.config_path.empty() ? AppConfig{} : load_config(o.config_path);
  std::filesystem::path corpus_path = o.corpus.empty() ? config.corpus_path : std::filesystem::path(o.corpus);
  std::filesystem::path output = o.output.empty() ? config.index_path : std::filesystem::path(o.output);
  if (corpus_path.empty() || output.empty())
    throw Error(ErrorCode::InvalidArgument, "index needs --corpus and --output (or a config naming them)");
  if (o.config_path.empty()) config.embedder.provider = EmbedderProvider::Remote;
  if (o.local_embedder) config.embedder.provider = EmbedderProvider::Local;
  if (o.dim) config.embedder.dimension = *o.dim;
  config.embedder.seed = o.seed;
  validate(config.embedder);

  const std::vector<PatentRecord> records = load_corpus(corpus_path);
  if (records.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus '" + corpus_path.string() + "' is empty");
  const auto embedder = make_embedder(config.embedder);
  VectorIndex index = build_index(records, *embedder);
  if (o.nlist > 0) index.train_ivf(o.nlist, o.seed);
  save_index(index, output);
  write_index_metadata(output, config.embedder, corpus_path);
  out << nlohmann::json{{"index", output.string()},
                        {"entries", index.size()},
                        {"dim", index.dimension()},
                        {"nlist", index.is_trained() ? index.ivf()->nlist() : 0}}
             .dump()
      << '\n';
  return 0;
}

int cmd_search(const CommonOptions& common, const std::string& query, std::ostream& out) {
  AppConfig config = resolve_config(common);
  validate(config, false);
  auto index = open_index(config);
  const auto embedder = make_embedder(config.embedder);
  const auto hits = retrieve(query, *embedder, *index, {config.k, config.nprobe});
  for (const auto& hit : hits) out << to_json(hit).dump() << '\n';
  return 0;
}

int cmd_answer(const CommonOptions& common, const AnswerOptions& o, std::ostream& out) {
  AppConfig config = resolve_config(common);
  if (o.budget) config.budget_chars = *o.budget;
  if (!o.generator.empty())
    config.generator = generator_config_from_json({{"provider", o.generator}}, config.generator);
  RagAnswer answer = open_pipeline(config)->answer(o.query);
  if (o.no_timings) answer.retrieval_ms = answer.generation_ms = 0;
  out << to_json(answer).dump() << '\n';
  return 0;
}

int cmd_eval(const CommonOptions& common, const EvalCliOptions& o, std::ostream& out) {
  AppConfig config = resolve_config(common);
  validate(config, false);
  const std::vector<LabeledQuery> queries = load_queries(o.queries);
  auto records = open_records(config);

  EvalOptions options;
  options.model_label = o.label;
  options.retrieval = {config.k, config.nprobe};
  std::optional<CorpusSplit> split;
  if (o.split_seed) split = stratified_split(records->records(), SplitRatios{}, *o.split_seed);

  EvalReport report;
  if (!config.index_path.empty()) {
    auto index = open_index(config);
    report = run_eval(*index, *records, *make_embedder(config.embedder), queries, options,
                      split ? &*split : nullptr);
  } else {
    report = run_eval(*records, *make_embedder(config.embedder), queries, options, split ? &*split : nullptr);
  }
  const nlohmann::json j = to_json(report);
  if (!o.report_path.empty()) {
    std::ofstream report_out(o.report_path);
    if (!report_out) throw Error(ErrorCode::IoFailure, "cannot write '" + o.report_path + "'");
    report_out << j.dump(2) << '\n';
  }
  out << j.dump() << "\n\n" << render_table(report);
  return 0;
}

SearchService* g_running_service = nullptr;

extern "C" void stop_on_signal(int) {
  if (g_running_service) g_running_service->stop();
}

int cmd_serve(const CommonOptions& common, const ServeOptions& o, std::ostream& err) {
  AppConfig config = resolve_config(common);
  if (o.bind) config.bind_address = *o.bind;
  if (o.port) config.port = *o.port;
  validate(config, true);

  SearchService service;
  service.load_async([config] { return open_pipeline(config); });
  g_running_service = &service;
  std::signal(SIGINT, stop_on_signal);
  std::signal(SIGTERM, stop_on_signal);
  err << "serving on " << config.bind_address << ":" << config.port << '\n';
  service.run(config.bind_address, config.port);
  g_running_service = nullptr;
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semantic patent retrieval: ingest, index, search, answer, eval, serve", "patentrag"};
  app.require_subcommand(1);

  IngestOptions ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "normalize a raw CSV/JSONL export into a corpus");
  ingest_cmd->add_option("--input,-i", ingest.input, "raw export")->required();
  ingest_cmd->add_option("--format", ingest.format, "csv or jsonl (default: from extension)");
  ingest_cmd->add_option("--output,-o", ingest.output, "normalized corpus JSONL")->required();
  ingest_cmd->add_option("--rejections", ingest.rejections, "rejection report JSONL");
  ingest_cmd->add_option("--today", ingest.today, "ingestion date bounding application dates");

  IndexOptions index;
  auto* index_cmd = app.add_subcommand("index", "embed a corpus into a binary index");
  index_cmd->add_option("--corpus", index.corpus, "normalized corpus JSONL");
  index_cmd->add_option("--output,-o", index.output, "index file to write");
  index_cmd->add_option("--config", index.config_path, "JSON configuration file");
  index_cmd->add_option("--dim", index.dim, "embedding dimension")->check(CLI::Range(2, 1 << 20));
  index_cmd->add_option("--nlist", index.nlist, "train an inverted-file partition with this many lists")
      ->check(CLI::NonNegativeNumber);
  index_cmd->add_option("--seed", index.seed, "seed for the local embedder and k-means");
  index_cmd->add_flag("--local-embedder", index.local_embedder, "use the offline hashing embedder");

  CommonOptions search_common;
  std::string search_query;
  auto* search_cmd = app.add_subcommand("search", "print the top-k hits as JSON lines");
  add_common(search_cmd, search_common, true);
  search_cmd->add_option("--query,-q", search_query, "query text")->required();

  CommonOptions answer_common;
  AnswerOptions answer;
  auto* answer_cmd = app.add_subcommand("answer", "retrieve context and generate an answer");
  add_common(answer_cmd, answer_common, true);
  answer_cmd->add_option("--query,-q", answer.query, "query text")->required();
  answer_cmd->add_option("--budget", answer.budget, "context budget in characters")->check(CLI::PositiveNumber);
  answer_cmd->add_option("--generator", answer.generator, "local_template or remote");
  answer_cmd->add_flag("--no-timings", answer.no_timings, "report retrieval_ms/generation_ms as 0");

  CommonOptions eval_common;
  EvalCliOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "score labeled queries (accuracy, recall@k)");
  add_common(eval_cmd, eval_common, true);
  eval_cmd->add_option("--queries", eval.queries, "labeled queries JSONL")->required();
  eval_cmd->add_option("--label", eval.label, "model label for the report");
  eval_cmd->add_option("--report", eval.report_path, "also write the JSON report here");
  eval_cmd->add_option("--split-seed", eval.split_seed, "require queries to target this split's test set");

  CommonOptions serve_common;
  ServeOptions serve;
  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP JSON service");
  add_common(serve_cmd, serve_common, false);
  serve_cmd->add_option("--bind", serve.bind, "bind address");
  serve_cmd->add_option("--port", serve.port, "port")->check(CLI::Range(0, 65535));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*ingest_cmd) return cmd_ingest(ingest, out, err);
    if (*index_cmd) return cmd_index(index, out);
    if (*search_cmd) return cmd_search(search_common, search_query, out);
    if (*answer_cmd) return cmd_answer(answer_common, answer, out);
    if (*eval_cmd) return cmd_eval(eval_common, eval, out);
    if (*serve_cmd) return cmd_serve(serve_common, serve, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, out, err);
}

}  // namespace patentrag
