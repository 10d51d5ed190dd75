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

#include "patentrag/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "patentrag/error.hpp"
#include "patentrag/random.hpp"
#include "utf8.hpp"

namespace patentrag {
namespace {

bool is_space(unsigned char c) { return c == ' ' || (c >= '\t' && c <= '\r'); }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : trim(s)) {
    if (is_space(static_cast<unsigned char>(c))) {
      pending_space = true;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::vector<std::string> split_list(std::string_view s, std::string_view separators) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find_first_of(separators, start);
    if (end == std::string_view::npos) end = s.size();
    std::string_view item = trim(s.substr(start, end - start));
    if (!item.empty()) out.emplace_back(item);
    start = end + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

const std::map<std::string, std::string, std::less<>>& field_aliases() {
  static const std::map<std::string, std::string, std::less<>> aliases = {
      {"application_no", "application_number"},
      {"app_number", "application_number"},
      {"date", "application_date"},
      {"filing_date", "application_date"},
      {"application_status", "status"},
      {"legal_status", "status"},
      {"publication_no", "publication_number"},
      {"field", "field_of_invention"},
      {"domain", "field_of_invention"},
      {"technical_field", "field_of_invention"},
      {"ipc", "ipc_codes"},
      {"ipc_code", "ipc_codes"},
      {"ipc_classification", "ipc_codes"},
      {"classification_ipc", "ipc_codes"},
      {"inventor", "inventors"},
      {"inventor_information", "inventors"},
      {"background_of_invention", "background"},
      {"invention_background", "background"},
  };
  return aliases;
}

// --- CSV ------------------------------------------------------------------

struct CsvRow {
  std::size_t line;
  std::string payload;
  std::vector<std::string> cells;
  std::string error;
};

std::vector<CsvRow> split_csv(std::string_view text) {
  std::vector<CsvRow> rows;
  std::size_t i = 0;
  std::size_t line = 1;
  while (i < text.size()) {
    CsvRow row{line, {}, {}, {}};
    const std::size_t row_begin = i;
    std::string cell;
    bool in_quotes = false;
    bool cell_was_quoted = false;
    bool done = false;
    while (!done) {
      if (i >= text.size()) {
        if (in_quotes) row.error = "unterminated quoted field";
        row.cells.push_back(std::move(cell));
        break;
      }
      const char c = text[i];
      if (in_quotes) {
        if (c == '"') {
          if (i + 1 < text.size() && text[i + 1] == '"') {
            cell.push_back('"');
            i += 2;
          } else {
            in_quotes = false;
            ++i;
          }
        } else {
          if (c == '\n') ++line;
          cell.push_back(c);
          ++i;
        }
        continue;
      }
      switch (c) {
        case ',':
          row.cells.push_back(std::move(cell));
          cell.clear();
          cell_was_quoted = false;
          ++i;
          break;
        case '"':
          if (cell.empty() && !cell_was_quoted) {
            in_quotes = true;
            cell_was_quoted = true;
          } else if (row.error.empty()) {
            row.error = "stray quote in field";
          }
          ++i;
          break;
        case '\r':
          ++i;
          break;
        case '\n':
          row.cells.push_back(std::move(cell));
          ++line;
          ++i;
          done = true;
          break;
        default:
          if (cell_was_quoted && row.error.empty()) row.error = "text after closing quote";
          cell.push_back(c);
          ++i;
      }
    }
    std::string_view payload = text.substr(row_begin, i - row_begin);
    while (!payload.empty() && (payload.back() == '\n' || payload.back() == '\r'))
      payload.remove_suffix(1);
    row.payload = std::string(payload);
    rows.push_back(std::move(row));
  }
  return rows;
}

bool blank_row(const CsvRow& row) {
  return row.error.empty() && row.cells.size() == 1 && trim(row.cells[0]).empty();
}

ParseResult parse_csv(std::string_view text) {
  ParseResult result;
  std::vector<CsvRow> rows = split_csv(text);
  auto it = std::find_if(rows.begin(), rows.end(), [](const CsvRow& r) { return !blank_row(r); });
  if (it == rows.end()) return result;
  if (!it->error.empty()) {
    result.errors.push_back({it->line, "malformed header: " + it->error});
    return result;
  }
  std::vector<std::string> keys;
  for (const auto& h : it->cells) keys.push_back(canonical_field_key(h));
  for (++it; it != rows.end(); ++it) {
    if (blank_row(*it)) continue;
    if (!it->error.empty()) {
      result.errors.push_back({it->line, it->error});
      continue;
    }
    if (!utf8::valid(it->payload)) {
      result.errors.push_back({it->line, "invalid UTF-8"});
      continue;
    }
    if (it->cells.size() != keys.size()) {
      result.errors.push_back({it->line, "expected " + std::to_string(keys.size()) +
                                             " fields, found " + std::to_string(it->cells.size())});
      continue;
    }
    RawRecord raw{it->line, it->payload, {}};
    for (std::size_t c = 0; c < keys.size(); ++c) {
      if (!trim(it->cells[c]).empty()) raw.fields[keys[c]] = it->cells[c];
    }
    result.records.push_back(std::move(raw));
  }
  return result;
}

// --- JSONL ----------------------------------------------------------------

std::string json_scalar_text(const nlohmann::json& v) {
  return v.is_string() ? v.get<std::string>() : v.dump();
}

ParseResult parse_jsonl(std::istream& in) {
  ParseResult result;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (!utf8::valid(line)) {
      result.errors.push_back({number, "invalid UTF-8"});
      continue;
    }
    nlohmann::json object = nlohmann::json::parse(line, nullptr, false);
    if (object.is_discarded()) {
      result.errors.push_back({number, "malformed JSON"});
      continue;
    }
    if (!object.is_object()) {
      result.errors.push_back({number, "line is not a JSON object"});
      continue;
    }
    RawRecord raw{number, line, {}};
    for (const auto& [key, value] : object.items()) {
      if (value.is_null()) continue;
      std::string text;
      if (value.is_array()) {
        std::vector<std::string> parts;
        for (const auto& element : value) {
          if (!element.is_null()) parts.push_back(json_scalar_text(element));
        }
        text = join(parts, "; ");
      } else {
        text = json_scalar_text(value);
      }
      raw.fields[canonical_field_key(key)] = std::move(text);
    }
    result.records.push_back(std::move(raw));
  }
  return result;
}

// --- normalization --------------------------------------------------------

std::optional<std::string> field(const RawRecord& raw, const std::string& key) {
  auto it = raw.fields.find(key);
  if (it == raw.fields.end()) return std::nullopt;
  std::string_view value = trim(it->second);
  if (value.empty()) return std::nullopt;
  return std::string(value);
}

RejectedRecord reject(const RawRecord& raw, RejectReason reason, std::string detail) {
  return RejectedRecord{raw.payload, reason, std::move(detail), raw.line};
}

std::string normalize_label(std::string_view s) { return ascii_lower(collapse_whitespace(s)); }

std::string normalize_key(std::string_view s) {
  std::string out;
  for (char c : s)
    if (!is_space(static_cast<unsigned char>(c)))
      out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  return out;
}

std::optional<int> parse_digits(std::string_view s, std::size_t width) {
  if (s.size() != width) return std::nullopt;
  int value = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    value = value * 10 + (c - '0');
  }
  return value;
}

}  // namespace

// --- dates ----------------------------------------------------------------

std::optional<Date> parse_date(std::string_view text) {
  text = trim(text);
  std::optional<int> y, m, d;
  if (text.size() == 10 && text[4] == '-' && text[7] == '-') {
    y = parse_digits(text.substr(0, 4), 4);
    m = parse_digits(text.substr(5, 2), 2);
    d = parse_digits(text.substr(8, 2), 2);
  } else if (text.size() == 10 && text[2] == '/' && text[5] == '/') {
    m = parse_digits(text.substr(0, 2), 2);
    d = parse_digits(text.substr(3, 2), 2);
    y = parse_digits(text.substr(6, 4), 4);
  } else if (text.size() == 10 && text[2] == '.' && text[5] == '.') {
    d = parse_digits(text.substr(0, 2), 2);
    m = parse_digits(text.substr(3, 2), 2);
    y = parse_digits(text.substr(6, 4), 4);
  }
  if (!y || !m || !d) return std::nullopt;
  Date date{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
            std::chrono::day{static_cast<unsigned>(*d)}};
  if (!date.ok()) return std::nullopt;
  return date;
}

std::string format_iso_date(const Date& date) {
  char buffer[16];
  std::snprintf(buffer, sizeof buffer, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buffer;
}

Date today_utc() {
  return Date{std::chrono::floor<std::chrono::days>(std::chrono::system_clock::now())};
}

std::string_view to_string(RejectReason reason) noexcept {
  switch (reason) {
    case RejectReason::MissingRequiredField: return "MissingRequiredField";
    case RejectReason::InvalidDate: return "InvalidDate";
    case RejectReason::DuplicateKey: return "DuplicateKey";
    case RejectReason::Inconsistent: return "Inconsistent";
  }
  return "Unknown";
}

// --- parsing --------------------------------------------------------------

InputFormat parse_format(std::string_view name) {
  const std::string lowered = ascii_lower(trim(name));
  if (lowered == "csv") return InputFormat::Csv;
  if (lowered == "jsonl" || lowered == "ndjson") return InputFormat::Jsonl;
  throw Error(ErrorCode::UnknownFormat, "unsupported input format '" + std::string(name) + "'");
}

InputFormat format_from_path(const std::filesystem::path& path) {
  const std::string ext = ascii_lower(path.extension().string());
  if (ext == ".csv") return InputFormat::Csv;
  if (ext == ".jsonl" || ext == ".ndjson") return InputFormat::Jsonl;
  throw Error(ErrorCode::UnknownFormat, "cannot infer format from '" + path.string() + "'");
}

std::string canonical_field_key(std::string_view header) {
  std::string key;
  bool pending_sep = false;
  char prev = 0;
  for (char c : trim(header)) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc)) {
      // camelCase boundary
      if (std::isupper(uc) && prev && std::islower(static_cast<unsigned char>(prev)))
        pending_sep = true;
      if (pending_sep && !key.empty()) key.push_back('_');
      pending_sep = false;
      key.push_back(static_cast<char>(std::tolower(uc)));
    } else {
      pending_sep = true;
    }
    prev = c;
  }
  auto alias = field_aliases().find(key);
  return alias == field_aliases().end() ? key : alias->second;
}

ParseResult parse_records(std::istream& source, InputFormat format) {
  if (!source) throw Error(ErrorCode::UnreadableSource, "input stream is not readable");
  if (format == InputFormat::Jsonl) return parse_jsonl(source);
  std::string text{std::istreambuf_iterator<char>(source), std::istreambuf_iterator<char>()};
  if (source.bad()) throw Error(ErrorCode::UnreadableSource, "read failure");
  if (text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);
  return parse_csv(text);
}

ParseResult parse_records(const std::filesystem::path& path, InputFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableSource, "cannot open '" + path.string() + "'");
  return parse_records(in, format);
}

// --- normalization --------------------------------------------------------

std::string normalize_ipc_code(std::string_view code) { return normalize_key(code); }

bool is_valid_ipc_code(std::string_view code) {
  // section A-H, two-digit class, subclass letter, group digits '/' subgroup digits
  if (code.size() < 7) return false;
  if (code[0] < 'A' || code[0] > 'H') return false;
  if (!std::isdigit(static_cast<unsigned char>(code[1])) ||
      !std::isdigit(static_cast<unsigned char>(code[2])))
    return false;
  if (code[3] < 'A' || code[3] > 'Z') return false;
  const std::size_t slash = code.find('/', 4);
  if (slash == std::string_view::npos || slash == 4 || slash + 1 == code.size()) return false;
  auto all_digits = [](std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  return all_digits(code.substr(4, slash - 4)) && all_digits(code.substr(slash + 1));
}

std::string clean_text(std::string_view text) {
  const std::string collapsed = collapse_whitespace(text);
  std::string out;
  out.reserve(collapsed.size());
  for (char c : collapsed) {
    if (std::ispunct(static_cast<unsigned char>(c)) && !out.empty() && out.back() == c) continue;
    out.push_back(c);
  }
  return out;
}

NormalizeResult normalize_record(const RawRecord& raw) { return normalize_record(raw, today_utc()); }

NormalizeResult normalize_record(const RawRecord& raw, const Date& ingestion_date) {
  PatentRecord record;

  auto number = field(raw, "application_number");
  if (!number) return reject(raw, RejectReason::MissingRequiredField, "application_number");
  record.application_number = normalize_key(*number);

  auto title = field(raw, "title");
  if (title) record.title = clean_text(*title);
  if (record.title.empty()) return reject(raw, RejectReason::MissingRequiredField, "title");

  auto date_text = field(raw, "application_date");
  if (!date_text) return reject(raw, RejectReason::MissingRequiredField, "application_date");
  auto date = parse_date(*date_text);
  if (!date) return reject(raw, RejectReason::InvalidDate, *date_text);
  if (std::chrono::sys_days{*date} > std::chrono::sys_days{ingestion_date})
    return reject(raw, RejectReason::Inconsistent, "application_date after ingestion date");
  record.application_date = *date;

  record.abstract = clean_text(field(raw, "abstract").value_or(""));
  record.status = normalize_label(field(raw, "status").value_or(""));
  record.field_of_invention = normalize_label(field(raw, "field_of_invention").value_or(""));
  if (record.field_of_invention.empty()) record.field_of_invention = "unspecified";

  if (auto v = field(raw, "publication_number")) record.publication_number = normalize_key(*v);
  if (auto v = field(raw, "publication_type")) record.publication_type = collapse_whitespace(*v);
  if (auto v = field(raw, "background")) {
    std::string cleaned = clean_text(*v);
    if (!cleaned.empty()) record.background = std::move(cleaned);
  }

  if (auto v = field(raw, "ipc_codes")) {
    // The list separators are split before whitespace is stripped so that
    // "G06F 16/33; H04L 9/00" yields two codes.
    for (const auto& part : split_list(*v, ";,")) {
      std::string code = normalize_ipc_code(part);
      if (is_valid_ipc_code(code) &&
          std::find(record.ipc_codes.begin(), record.ipc_codes.end(), code) == record.ipc_codes.end())
        record.ipc_codes.push_back(std::move(code));
    }
  }
  if (auto v = field(raw, "inventors")) {
    for (const auto& part : split_list(*v, ";")) record.inventors.push_back(collapse_whitespace(part));
  }
  return record;
}

// --- dedup / split --------------------------------------------------------

DedupResult deduplicate(std::vector<PatentRecord> records) {
  DedupResult result;
  std::unordered_set<std::string> seen;
  for (auto& record : records) {
    if (seen.insert(record.application_number).second) {
      result.kept.push_back(std::move(record));
    } else {
      result.rejected.push_back(
          {to_json(record).dump(), RejectReason::DuplicateKey, record.application_number, 0});
    }
  }
  return result;
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& ratios) {
  if (ratios.train <= 0 || ratios.validation <= 0 || ratios.test <= 0)
    throw Error(ErrorCode::InvalidArgument, "split ratios must be positive");
  const std::array<std::size_t, 3> parts{static_cast<std::size_t>(ratios.train),
                                         static_cast<std::size_t>(ratios.validation),
                                         static_cast<std::size_t>(ratios.test)};
  const std::size_t total = parts[0] + parts[1] + parts[2];
  std::array<std::size_t, 3> sizes{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    sizes[i] = n * parts[i] / total;
    assigned += sizes[i];
  }
  for (int i = 0; assigned < n; i = (i + 1) % 3, ++assigned) ++sizes[i];
  return sizes;
}

CorpusSplit stratified_split(const std::vector<PatentRecord>& records, const SplitRatios& ratios,
                             std::uint64_t seed) {
  if (records.empty()) throw Error(ErrorCode::EmptyCorpus, "no records to split");
  std::map<std::string, std::vector<std::string>> strata;
  for (const auto& r : records) strata[r.field_of_invention].push_back(r.application_number);

  CorpusSplit split;
  split.seed = seed;
  split.ratios = ratios;
  for (auto& [name, ids] : strata) {
    Engine engine(seed ^ fnv1a64(name));
    for (std::size_t i = ids.size(); i > 1; --i) {
      std::swap(ids[i - 1], ids[uniform_index(engine, i)]);
    }
    const auto sizes = split_sizes(ids.size(), ratios);
    auto first = ids.begin();
    split.train_ids.insert(split.train_ids.end(), first, first + sizes[0]);
    first += sizes[0];
    split.validation_ids.insert(split.validation_ids.end(), first, first + sizes[1]);
    first += sizes[1];
    split.test_ids.insert(split.test_ids.end(), first, first + sizes[2]);
  }
  return split;
}

std::string compose_document_text(const PatentRecord& record) {
  std::string text = "TITLE: " + record.title + "\nABSTRACT: " + record.abstract +
                     "\nDOMAIN: " + record.field_of_invention;
  if (record.background) text += "\nBACKGROUND: " + *record.background;
  return text;
}

// --- serialization --------------------------------------------------------

nlohmann::json to_json(const PatentRecord& record) {
  nlohmann::json j;
  j["application_number"] = record.application_number;
  j["title"] = record.title;
  j["abstract"] = record.abstract;
  j["application_date"] = format_iso_date(record.application_date);
  j["status"] = record.status;
  if (record.publication_number) j["publication_number"] = *record.publication_number;
  if (record.publication_type) j["publication_type"] = *record.publication_type;
  j["field_of_invention"] = record.field_of_invention;
  j["ipc_codes"] = record.ipc_codes;
  j["inventors"] = record.inventors;
  if (record.background) j["background"] = *record.background;
  return j;
}

nlohmann::json to_json(const RejectedRecord& rejected) {
  nlohmann::json j;
  j["reason"] = std::string(to_string(rejected.reason));
  j["detail"] = rejected.detail;
  if (rejected.line) j["line"] = rejected.line;
  j["raw_payload"] = rejected.raw_payload;
  return j;
}

RawRecord raw_from_record(const PatentRecord& record) {
  RawRecord raw;
  raw.payload = to_json(record).dump();
  raw.fields["application_number"] = record.application_number;
  raw.fields["title"] = record.title;
  raw.fields["abstract"] = record.abstract;
  raw.fields["application_date"] = format_iso_date(record.application_date);
  raw.fields["status"] = record.status;
  if (record.publication_number) raw.fields["publication_number"] = *record.publication_number;
  if (record.publication_type) raw.fields["publication_type"] = *record.publication_type;
  raw.fields["field_of_invention"] = record.field_of_invention;
  raw.fields["ipc_codes"] = join(record.ipc_codes, "; ");
  raw.fields["inventors"] = join(record.inventors, "; ");
  if (record.background) raw.fields["background"] = *record.background;
  return raw;
}

void write_jsonl(std::ostream& out, const std::vector<PatentRecord>& records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

void write_jsonl(std::ostream& out, const std::vector<RejectedRecord>& rejected) {
  for (const auto& r : rejected) out << to_json(r).dump() << '\n';
}

std::vector<PatentRecord> load_corpus(const std::filesystem::path& path) {
  ParseResult parsed = parse_records(path, InputFormat::Jsonl);
  if (!parsed.errors.empty()) {
    const auto& e = parsed.errors.front();
    throw Error(ErrorCode::InvalidArgument,
                path.string() + ":" + std::to_string(e.line) + ": " + e.message);
  }
  // Normalized corpora were already date-checked at ingestion.
  const Date no_upper_bound{std::chrono::year{9999}, std::chrono::December, std::chrono::day{31}};
  std::vector<PatentRecord> records;
  records.reserve(parsed.records.size());
  for (const auto& raw : parsed.records) {
    auto result = normalize_record(raw, no_upper_bound);
    if (auto* rejected = std::get_if<RejectedRecord>(&result)) {
      throw Error(ErrorCode::InvalidArgument, path.string() + ":" + std::to_string(raw.line) +
                                                  ": " + std::string(to_string(rejected->reason)));
    }
    records.push_back(std::get<PatentRecord>(std::move(result)));
  }
  return records;
}

}  // namespace patentrag
