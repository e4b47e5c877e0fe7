// Relational-table corpus: canonical JSON-lines parsing, an import adapter
// for column-major records, mention-level views and the noise pre-filter.
#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tabkb/common.hpp"
#include "tabkb/text.hpp"

namespace tabkb::corpus {

struct TableContext {
  std::string page_title;
  std::string caption;
  std::string surrounding_text;
  std::optional<int> last_edit_year;  // 4-digit year in [1990, 2100] when present

  bool operator==(const TableContext&) const = default;
};

// A relational table after ingestion. `rows` holds data rows only; the
// header row of the source record has been folded into `headings`.
struct Table {
  std::string id;
  std::vector<std::string> headings;
  int core_column_index = 0;
  std::vector<std::vector<std::string>> rows;
  TableContext context;

  bool operator==(const Table&) const = default;
};

struct ParseReport {
  std::size_t lines = 0;
  std::size_t parsed = 0;
  std::size_t malformed = 0;  // unparseable or schema-violating lines
  std::size_t dropped = 0;    // structurally valid but invariant-violating tables
  std::vector<std::string> warnings;

  void warn(std::string msg) { warnings.push_back(std::move(msg)); }
};

namespace detail {

inline std::optional<int> sanitize_year(long long y, ParseReport* report,
                                        const std::string& where) {
  if (y >= 1990 && y <= 2100) return static_cast<int>(y);
  if (report) report->warn(where + ": lastEditYear out of range, ignored");
  return std::nullopt;
}

inline std::optional<int> year_from_text(std::string_view s) {
  int run = 0, value = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i < s.size() && s[i] >= '0' && s[i] <= '9') {
      ++run;
      value = value * 10 + (s[i] - '0');
      continue;
    }
    if (run == 4 && value >= 1990 && value <= 2100) return value;
    run = 0;
    value = 0;
  }
  return std::nullopt;
}

// Shared tail of both record shapes: applies the header-row convention and
// validates the Table invariants. Returns nullopt after recording a warning.
inline std::optional<Table> finish_table(
    std::string id, std::vector<std::string> headings, int header_row_index,
    std::vector<std::vector<std::string>> rows, int core_column_index,
    TableContext context, ParseReport* report, const std::string& where) {
  auto reject = [&](const std::string& why) -> std::optional<Table> {
    if (report) {
      report->warn(where + ": " + why);
      ++report->dropped;
    }
    return std::nullopt;
  };

  if (header_row_index >= 0) {
    if (static_cast<std::size_t>(header_row_index) >= rows.size())
      return reject("headerRowIndex beyond last row");
    if (headings.empty()) headings = rows[static_cast<std::size_t>(header_row_index)];
    rows.erase(rows.begin() + header_row_index);
  }
  if (headings.empty()) return reject("table has no headings");
  if (core_column_index < 0 ||
      static_cast<std::size_t>(core_column_index) >= headings.size())
    return reject("coreColumnIndex outside the column range");
  for (const auto& row : rows) {
    if (row.size() != headings.size())
      return reject("row width differs from heading count");
  }

  bool has_core_mention = false;
  for (const auto& row : rows) {
    if (!text::normalize(row[static_cast<std::size_t>(core_column_index)]).empty()) {
      has_core_mention = true;
      break;
    }
  }
  if (!has_core_mention) return reject("core column has no mentions");

  Table t;
  t.id = std::move(id);
  t.headings = std::move(headings);
  t.core_column_index = core_column_index;
  t.rows = std::move(rows);
  t.context = std::move(context);
  return t;
}

inline std::vector<std::vector<std::string>> to_string_matrix(
    const nlohmann::json& j) {
  std::vector<std::vector<std::string>> out;
  for (const auto& row : j) {
    std::vector<std::string> cells;
    for (const auto& cell : row) {
      cells.push_back(cell.is_string() ? cell.get<std::string>() : cell.dump());
    }
    out.push_back(std::move(cells));
  }
  return out;
}

inline std::optional<Table> parse_canonical(const nlohmann::json& j,
                                            ParseReport* report,
                                            const std::string& where) {
  std::string id = j.at("id").get<std::string>();
  std::vector<std::string> headings;
  if (j.contains("headings")) headings = j["headings"].get<std::vector<std::string>>();
  auto rows = to_string_matrix(j.at("rows"));
  int core = j.at("coreColumnIndex").get<int>();
  int header_row = j.value("headerRowIndex", 0);

  TableContext ctx;
  ctx.page_title = j.value("pageTitle", std::string());
  ctx.caption = j.value("caption", std::string());
  ctx.surrounding_text = j.value("surroundingText", std::string());
  if (j.contains("lastEditYear") && j["lastEditYear"].is_number_integer()) {
    ctx.last_edit_year =
        sanitize_year(j["lastEditYear"].get<long long>(), report, where);
  }
  return finish_table(std::move(id), std::move(headings), header_row,
                      std::move(rows), core, std::move(ctx), report, where);
}

// Import adapter for crawler-style exports: `relation` is column-major when
// the orientation flag says HORIZONTAL, row-major when VERTICAL.
inline std::optional<Table> parse_column_major(const nlohmann::json& j,
                                               ParseReport* report,
                                               const std::string& where) {
  auto matrix = to_string_matrix(j.at("relation"));
  std::string orientation = j.value("tableOrientation", std::string("HORIZONTAL"));
  if (orientation == "HORIZONTAL") {
    std::vector<std::vector<std::string>> transposed;
    if (!matrix.empty()) {
      std::size_t nrows = matrix[0].size();
      for (const auto& col : matrix) nrows = std::min(nrows, col.size());
      transposed.assign(nrows, std::vector<std::string>(matrix.size()));
      for (std::size_t c = 0; c < matrix.size(); ++c)
        for (std::size_t r = 0; r < nrows; ++r) transposed[r][c] = matrix[c][r];
    }
    matrix = std::move(transposed);
  }

  std::string id;
  if (j.contains("id")) {
    id = j["id"].get<std::string>();
  } else if (j.contains("url")) {
    id = j["url"].get<std::string>() + "#" + std::to_string(j.value("tableNum", 0));
  } else {
    id = where;
  }

  TableContext ctx;
  ctx.page_title = j.value("pageTitle", std::string());
  ctx.caption = j.value("title", std::string());
  ctx.surrounding_text = j.value("textBeforeTable", std::string());
  if (j.contains("textAfterTable")) {
    if (!ctx.surrounding_text.empty()) ctx.surrounding_text += " ";
    ctx.surrounding_text += j["textAfterTable"].get<std::string>();
  }
  if (j.contains("lastModified")) {
    if (j["lastModified"].is_number_integer()) {
      ctx.last_edit_year =
          sanitize_year(j["lastModified"].get<long long>(), report, where);
    } else if (j["lastModified"].is_string()) {
      ctx.last_edit_year = year_from_text(j["lastModified"].get<std::string>());
    }
  }

  int header_row = j.value("headerRowIndex", 0);
  int core = j.value("keyColumnIndex", 0);
  return finish_table(std::move(id), {}, header_row, std::move(matrix), core,
                      std::move(ctx), report, where);
}

}  // namespace detail

// Parses a JSON-lines corpus stream. Malformed lines are skipped and counted;
// tables violating invariants are dropped and counted; input order preserved.
inline std::vector<Table> parse_corpus(std::istream& in,
                                       ParseReport* report = nullptr) {
  if (!in) throw DataError("corpus stream is not readable");
  std::vector<Table> tables;
  std::string line;
  std::size_t line_no = 0;
  ParseReport local;
  ParseReport& rep = report ? *report : local;
  while (std::getline(in, line)) {
    ++line_no;
    ++rep.lines;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no);
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      rep.warn(where + ": not a JSON object");
      ++rep.malformed;
      continue;
    }
    std::optional<Table> t;
    try {
      t = j.contains("relation") ? detail::parse_column_major(j, &rep, where)
                                 : detail::parse_canonical(j, &rep, where);
    } catch (const nlohmann::json::exception& e) {
      rep.warn(where + ": " + e.what());
      ++rep.malformed;
      continue;
    }
    if (t) {
      tables.push_back(std::move(*t));
      ++rep.parsed;
    }
  }
  if (in.bad()) throw DataError("I/O error while reading corpus stream");
  return tables;
}

inline std::vector<Table> load_corpus(const std::string& path,
                                      ParseReport* report = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus file: " + path);
  return parse_corpus(in, report);
}

// Canonical serialization: one JSON object per line, data rows only
// (headerRowIndex -1 marks the headings as already extracted).
inline std::string serialize_table(const Table& t) {
  nlohmann::ordered_json j;
  j["id"] = t.id;
  j["headings"] = t.headings;
  j["rows"] = t.rows;
  j["coreColumnIndex"] = t.core_column_index;
  j["headerRowIndex"] = -1;
  j["pageTitle"] = t.context.page_title;
  j["caption"] = t.context.caption;
  j["surroundingText"] = t.context.surrounding_text;
  if (t.context.last_edit_year) {
    j["lastEditYear"] = *t.context.last_edit_year;
  } else {
    j["lastEditYear"] = nullptr;
  }
  return j.dump();
}

inline void save_corpus(const std::vector<Table>& tables,
                        const std::string& path) {
  std::string out;
  for (const Table& t : tables) {
    out += serialize_table(t);
    out += '\n';
  }
  write_text_file(path, out);
}

struct MentionOccurrence {
  int row_index = 0;     // index into Table::rows (data rows)
  std::string raw;       // cell text as found
  std::string key;       // normalized form, the cross-table identity
};

// One entry per non-empty core-column cell, in row order.
inline std::vector<MentionOccurrence> core_mentions(const Table& t) {
  std::vector<MentionOccurrence> out;
  const auto col = static_cast<std::size_t>(t.core_column_index);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    std::string key = text::normalize(t.rows[r][col]);
    if (key.empty()) continue;
    out.push_back({static_cast<int>(r), t.rows[r][col], std::move(key)});
  }
  return out;
}

// The versioned noise pattern set: pure numbers, dates and email addresses,
// matched against the normalized mention.
inline constexpr int kNoisePatternVersion = 1;

inline const std::vector<std::regex>& noise_patterns() {
  static const std::vector<std::regex> patterns = [] {
    std::vector<std::regex> p;
    // number with optional sign, thousands separators and decimals
    p.emplace_back(R"(^[+-]?((\d{1,3}(,\d{3})+|\d+)(\.\d+)?|\.\d+)$)");
    // YYYY-MM-DD
    p.emplace_back(R"(^\d{4}-\d{2}-\d{2}$)");
    // DD/MM/YYYY and MM/DD/YYYY
    p.emplace_back(R"(^\d{1,2}/\d{1,2}/\d{4}$)");
    // Month DD, YYYY (full names and the usual abbreviations)
    p.emplace_back(
        R"(^(january|february|march|april|may|june|july|august|september|october|november|december|jan\.?|feb\.?|mar\.?|apr\.?|jun\.?|jul\.?|aug\.?|sept?\.?|oct\.?|nov\.?|dec\.?) \d{1,2}, \d{4}$)");
    // email address
    p.emplace_back(R"(^[a-z0-9][a-z0-9._%+-]*@[a-z0-9.-]+\.[a-z]{2,}$)");
    return p;
  }();
  return patterns;
}

inline bool is_noise_mention(std::string_view m) {
  const std::string norm = text::normalize(m);
  if (norm.empty()) return false;
  for (const auto& re : noise_patterns()) {
    if (std::regex_match(norm, re)) return true;
  }
  return false;
}

// Digest of the set of normalized core mentions: equal for two tables iff
// their mention sets are equal, order- and duplicate-insensitive.
inline std::uint64_t identical_core_key(const Table& t) {
  std::set<std::string> keys;
  for (const auto& m : core_mentions(t)) keys.insert(m.key);
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& k : keys) {
    h = fnv1a64(k, h);
    h = fnv1a64(std::string_view("\x1f", 1), h);
  }
  return h;
}

}  // namespace tabkb::corpus
