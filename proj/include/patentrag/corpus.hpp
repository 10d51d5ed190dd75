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

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

// Patent corpus ingestion: parsing raw exports, field normalization,
// de-duplication and stratified train/validation/test splitting.

namespace patentrag {

using Date = std::chrono::year_month_day;

/// Parses YYYY-MM-DD, MM/DD/YYYY or DD.MM.YYYY. Returns nullopt for any other
/// shape or an impossible calendar date.
std::optional<Date> parse_date(std::string_view text);
std::string format_iso_date(const Date& date);
Date today_utc();

/// One normalized patent application.
struct PatentRecord {
  std::string application_number;
  std::string title;
  std::string abstract;  // empty when the source had none, see abstract_missing()
  Date application_date{};
  std::string status;
  std::optional<std::string> publication_number;
  std::optional<std::string> publication_type;
  std::string field_of_invention;
  std::vector<std::string> ipc_codes;
  std::vector<std::string> inventors;
  std::optional<std::string> background;

  bool abstract_missing() const noexcept { return abstract.empty(); }
  bool operator==(const PatentRecord&) const = default;
};

enum class RejectReason { MissingRequiredField, InvalidDate, DuplicateKey, Inconsistent };

std::string_view to_string(RejectReason reason) noexcept;

struct RejectedRecord {
  std::string raw_payload;
  RejectReason reason;
  std::string detail;
  std::size_t line = 0;  // 0 when the record did not come from a parsed source
};

/// A parsed row keyed by canonical snake_case field names. List-valued
/// fields (IPC codes, inventors) are carried as ';'-separated strings.
struct RawRecord {
  std::size_t line = 0;
  std::string payload;
  std::map<std::string, std::string> fields;
};

struct ParseError {
  std::size_t line;
  std::string message;
};

enum class InputFormat { Csv, Jsonl };

/// "csv" or "jsonl" (case-insensitive); throws Error(UnknownFormat) otherwise.
InputFormat parse_format(std::string_view name);
/// Picks the format from a file extension (.csv, .jsonl, .ndjson).
InputFormat format_from_path(const std::filesystem::path& path);

/// Maps a header such as "Application Number" or "Classification (IPC)" to
/// its canonical key ("application_number", "ipc_codes"). Unknown headers
/// are snake_cased and kept.
std::string canonical_field_key(std::string_view header);

struct ParseResult {
  std::vector<RawRecord> records;
  std::vector<ParseError> errors;
};

ParseResult parse_records(std::istream& source, InputFormat format);
ParseResult parse_records(const std::filesystem::path& path, InputFormat format);

using NormalizeResult = std::variant<PatentRecord, RejectedRecord>;

/// Applies the cleaning rules to one raw record. `ingestion_date` bounds the
/// application date from above (future filings are rejected as Inconsistent).
NormalizeResult normalize_record(const RawRecord& raw, const Date& ingestion_date);
NormalizeResult normalize_record(const RawRecord& raw);

/// Uppercase and strip every whitespace character.
std::string normalize_ipc_code(std::string_view code);
bool is_valid_ipc_code(std::string_view code);
/// Trim, collapse whitespace runs, and collapse runs of one repeated
/// punctuation character ("!!!" -> "!").
std::string clean_text(std::string_view text);

struct DedupResult {
  std::vector<PatentRecord> kept;
  std::vector<RejectedRecord> rejected;
};

/// First occurrence of each application_number wins; input order is kept.
DedupResult deduplicate(std::vector<PatentRecord> records);

struct SplitRatios {
  int train = 8;
  int validation = 1;
  int test = 1;
};

struct CorpusSplit {
  std::vector<std::string> train_ids;
  std::vector<std::string> validation_ids;
  std::vector<std::string> test_ids;
  std::uint64_t seed = 0;
  SplitRatios ratios;
};

/// Per-stratum sizes for n records: floors of the exact proportions, then the
/// leftover records handed out one each in train, validation, test order.
std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& ratios);

/// Stratifies by field_of_invention, shuffles each stratum with a generator
/// seeded from (seed, stratum name) and partitions it by split_sizes().
CorpusSplit stratified_split(const std::vector<PatentRecord>& records,
                             const SplitRatios& ratios, std::uint64_t seed);

/// "TITLE: ...\nABSTRACT: ...\nDOMAIN: ...[\nBACKGROUND: ...]"
std::string compose_document_text(const PatentRecord& record);

// JSONL interchange. Records use the snake_case field names above.
nlohmann::json to_json(const PatentRecord& record);
nlohmann::json to_json(const RejectedRecord& rejected);
RawRecord raw_from_record(const PatentRecord& record);
void write_jsonl(std::ostream& out, const std::vector<PatentRecord>& records);
void write_jsonl(std::ostream& out, const std::vector<RejectedRecord>& rejected);

/// Reads a normalized corpus written by write_jsonl. Any rejected or
/// malformed line is an Error(InvalidArgument).
std::vector<PatentRecord> load_corpus(const std::filesystem::path& path);

}  // namespace patentrag
