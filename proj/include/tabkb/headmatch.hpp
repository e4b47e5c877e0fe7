// Step 2: match table headings to KB properties with naive, label-similarity
// and pairwise-value-similarity (PVS) features over the linked entities'
// triples.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tabkb/common.hpp"
#include "tabkb/corpus.hpp"
#include "tabkb/kb.hpp"
#include "tabkb/learn.hpp"
#include "tabkb/link.hpp"
#include "tabkb/sim.hpp"
#include "tabkb/text.hpp"

namespace tabkb::headmatch {

enum class ValueKind { kTime = 0, kNumerical = 1, kString = 2, kOther = 3 };

inline const char* kind_name(ValueKind k) {
  switch (k) {
    case ValueKind::kTime: return "time";
    case ValueKind::kNumerical: return "numerical";
    case ValueKind::kString: return "string";
    default: return "other";
  }
}

struct TypedValue {
  std::string raw;
  std::set<ValueKind> kinds;
  std::optional<int> year;     // present whenever kTime is held
  std::optional<double> number;  // present whenever kNumerical is held

  bool has(ValueKind k) const { return kinds.count(k) > 0; }
};

namespace detail {

inline const std::set<std::string>& null_markers() {
  static const std::set<std::string> markers = {
      "-", "--", "?", "n/a", "na", "none", "null", "unknown"};
  return markers;
}

// Parses a decimal number with optional sign and thousands separators.
inline std::optional<double> parse_number(std::string_view tok) {
  static const std::regex re(R"(^[+-]?((\d{1,3}(,\d{3})+|\d+)(\.\d+)?|\.\d+)$)");
  std::string s(tok);
  if (!std::regex_match(s, re)) return std::nullopt;
  s.erase(std::remove(s.begin(), s.end(), ','), s.end());
  return std::strtod(s.c_str(), nullptr);
}

inline std::string strip_unit_chars(std::string_view tok) {
  static const std::string_view currency[] = {"$", "€", "£", "¥"};
  std::string s(tok);
  for (auto c : currency) {
    if (s.size() > c.size() && s.compare(0, c.size(), c) == 0) {
      s.erase(0, c.size());
      break;
    }
  }
  if (!s.empty() && s.back() == '%') s.pop_back();
  return s;
}

inline std::optional<int> date_year(const std::string& norm) {
  static const std::regex iso(R"(^(\d{4})-\d{2}-\d{2}$)");
  static const std::regex slash(R"(^\d{1,2}/\d{1,2}/(\d{4})$)");
  static const std::regex month(
      R"(^(january|february|march|april|may|june|july|august|september|october|november|december|jan\.?|feb\.?|mar\.?|apr\.?|jun\.?|jul\.?|aug\.?|sept?\.?|oct\.?|nov\.?|dec\.?) \d{1,2}, (\d{4})$)");
  std::smatch m;
  if (std::regex_match(norm, m, iso)) return std::stoi(m[1].str());
  if (std::regex_match(norm, m, slash)) return std::stoi(m[1].str());
  if (std::regex_match(norm, m, month)) return std::stoi(m[2].str());
  return std::nullopt;
}

}  // namespace detail

// Classifies a cell or KB object as time / numerical / string / other.
// Ambiguous values such as "1836" carry both time and numerical.
inline TypedValue detect_value_kind(std::string_view v) {
  TypedValue tv;
  tv.raw = std::string(v);
  const std::string norm = text::normalize(v);
  if (norm.empty() || detail::null_markers().count(norm)) {
    tv.kinds.insert(ValueKind::kOther);
    return tv;
  }

  // time: a bare 4-digit year or one of the recognized date formats
  if (norm.size() == 4 &&
      std::all_of(norm.begin(), norm.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    int y = std::stoi(norm);
    if (y >= 1000 && y <= 2999) {
      tv.kinds.insert(ValueKind::kTime);
      tv.year = y;
    }
  } else if (auto y = detail::date_year(norm)) {
    tv.kinds.insert(ValueKind::kTime);
    tv.year = y;
  }

  // numerical: the first term parses as a number once units are stripped
  const auto toks = text::terms(norm);
  if (!toks.empty()) {
    if (auto n = detail::parse_number(detail::strip_unit_chars(toks.front()))) {
      tv.kinds.insert(ValueKind::kNumerical);
      tv.number = n;
    }
  }

  // string: any alphabetic content
  for (char32_t cp : text::decode_utf8(norm)) {
    if ((cp >= U'a' && cp <= U'z') || cp >= 0xC0) {
      tv.kinds.insert(ValueKind::kString);
      break;
    }
  }

  if (tv.kinds.empty()) tv.kinds.insert(ValueKind::kOther);
  return tv;
}

// Majority vote across all values' kind sets; ties resolve in the order
// time > numerical > string > other.
inline ValueKind column_data_type(const std::vector<TypedValue>& values) {
  if (values.empty()) throw InternalError("column_data_type on empty list");
  int counts[4] = {0, 0, 0, 0};
  for (const auto& v : values) {
    for (ValueKind k : v.kinds) counts[static_cast<int>(k)] += 1;
  }
  int best = 0;
  for (int k = 1; k < 4; ++k) {
    if (counts[k] > counts[best]) best = k;
  }
  return static_cast<ValueKind>(best);
}

inline constexpr double kNumericEps = 1e-9;

// Kind-specific bounded similarity; 0 when either side lacks the kind.
inline double value_similarity(const TypedValue& a, const TypedValue& b,
                               ValueKind kind) {
  if (!a.has(kind) || !b.has(kind)) return 0.0;
  switch (kind) {
    case ValueKind::kTime: {
      double dy = std::abs(static_cast<double>(*a.year - *b.year));
      return 1.0 / (1.0 + dy);
    }
    case ValueKind::kNumerical: {
      double denom = std::max({std::abs(*a.number), std::abs(*b.number), kNumericEps});
      return std::clamp(1.0 - std::abs(*a.number - *b.number) / denom, 0.0, 1.0);
    }
    default:
      return 1.0 - sim::edit_distance_norm(a.raw, b.raw);
  }
}

struct PvsAggregates {
  double max = 0;
  double sum = 0;
  double avg = 0;
};

// Aggregated pairwise value similarities over the full cross-product.
inline PvsAggregates pvs(const std::vector<TypedValue>& col_values,
                         const std::vector<TypedValue>& kb_values,
                         ValueKind kind) {
  PvsAggregates out;
  if (col_values.empty() || kb_values.empty()) return out;
  for (const auto& a : col_values) {
    for (const auto& b : kb_values) {
      double s = value_similarity(a, b, kind);
      out.max = std::max(out.max, s);
      out.sum += s;
    }
  }
  out.avg = out.sum / static_cast<double>(col_values.size() * kb_values.size());
  return out;
}

inline const std::vector<std::string>& heading_feature_schema() {
  static const std::vector<std::string> names = {
      "is_core_column", "heading_length", "property_length",
      "edit",           "letter",         "jaccard",
      "substring",      "pvs_max",        "pvs_sum",
      "pvs_avg"};
  return names;
}

struct HeadingCandidate {
  int column = 0;
  std::string property;
  std::vector<double> features;
};

// Candidate (heading, property) pairs for one table: properties come from
// the linked entities' triples, filtered to those whose object values share
// the column's majority data type.
inline std::vector<HeadingCandidate> heading_candidates(
    const corpus::Table& t, const link::LinkAssignment& links,
    const kb::KbSnapshot& kb) {
  std::vector<HeadingCandidate> out;
  std::set<std::string> linked;
  for (const auto& [_, lm] : links.by_row) linked.insert(lm.entity_id);
  if (linked.empty()) return out;

  const auto props = kb.properties_of(linked);
  if (props.empty()) return out;

  // Typed object values per property, computed once.
  std::map<std::string, std::pair<std::vector<TypedValue>, ValueKind>> typed_props;
  for (const auto& [prop, values] : props) {
    std::vector<TypedValue> typed;
    for (const auto& [_, obj] : values) {
      if (!text::normalize(obj).empty()) typed.push_back(detect_value_kind(obj));
    }
    if (!typed.empty()) {
      ValueKind kind = column_data_type(typed);
      typed_props[prop] = {std::move(typed), kind};
    }
  }

  std::set<int> linked_rows;
  for (const auto& [row, _] : links.by_row) linked_rows.insert(row);

  for (int col = 0; col < static_cast<int>(t.headings.size()); ++col) {
    std::vector<TypedValue> col_values;
    for (int row : linked_rows) {
      const std::string& cell = t.rows[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)];
      if (!text::normalize(cell).empty()) col_values.push_back(detect_value_kind(cell));
    }
    if (col_values.empty()) continue;
    const ValueKind col_kind = column_data_type(col_values);
    const std::string heading_norm = text::normalize(t.headings[static_cast<std::size_t>(col)]);

    for (const auto& [prop, typed] : typed_props) {
      if (typed.second != col_kind) continue;  // data-type filter
      PvsAggregates agg = pvs(col_values, typed.first, col_kind);
      HeadingCandidate hc;
      hc.column = col;
      hc.property = prop;
      hc.features = {
          col == t.core_column_index ? 1.0 : 0.0,
          static_cast<double>(text::codepoint_count(heading_norm)),
          static_cast<double>(text::codepoint_count(text::normalize(prop))),
          sim::edit_distance_norm(heading_norm, prop),
          sim::letter_overlap(heading_norm, prop),
          sim::jaccard_terms(heading_norm, prop),
          sim::substring_indicator(heading_norm, prop),
          agg.max,
          agg.sum,
          agg.avg,
      };
      out.push_back(std::move(hc));
    }
  }
  return out;
}

struct MatchedProperty {
  std::string property_id;
  double confidence = 0;
};

struct HeadingMatch {
  std::map<int, MatchedProperty> by_column;  // at most one property per column
};

// Per column: among classifier-positive candidates keep the one with the
// highest pvs_avg (ties by label jaccard, then property id).
inline HeadingMatch match_headings(const corpus::Table& t,
                                   const link::LinkAssignment& links,
                                   const kb::KbSnapshot& kb,
                                   const learn::TreeEnsembleModel& model) {
  if (model.schema != heading_feature_schema()) {
    throw DataError("model schema does not match the heading feature schema");
  }
  HeadingMatch out;
  struct Best {
    double pvs_avg = -1;
    double jaccard = -1;
    std::string property;
    double score = 0;
  };
  std::map<int, Best> best;
  for (const auto& hc : heading_candidates(t, links, kb)) {
    auto p = model.predict(hc.features);
    if (p.label != 1) continue;
    const double pvs_avg = hc.features[9];
    const double jac = hc.features[5];
    auto& b = best[hc.column];
    bool better = pvs_avg > b.pvs_avg ||
                  (pvs_avg == b.pvs_avg && jac > b.jaccard) ||
                  (pvs_avg == b.pvs_avg && jac == b.jaccard &&
                   !b.property.empty() && hc.property < b.property);
    if (better) b = {pvs_avg, jac, hc.property, p.score};
  }
  for (const auto& [col, b] : best) {
    out.by_column[col] = {b.property, b.score};
  }
  return out;
}

// TSV output: (table_id, column_index, heading, property_id, confidence).
inline void save_heading_matches(
    const std::vector<std::pair<const corpus::Table*, HeadingMatch>>& matches,
    const std::string& path) {
  std::string out;
  for (const auto& [t, hm] : matches) {
    for (const auto& [col, m] : hm.by_column) {
      out += tsv_escape(t->id);
      out += '\t';
      out += std::to_string(col);
      out += '\t';
      out += tsv_escape(t->headings[static_cast<std::size_t>(col)]);
      out += '\t';
      out += tsv_escape(m.property_id);
      out += '\t';
      out += fmt_fixed(m.confidence, 6);
      out += '\n';
    }
  }
  write_text_file(path, out);
}

inline std::map<std::string, HeadingMatch> load_heading_matches(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open heading matches file: " + path);
  std::map<std::string, HeadingMatch> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = kb::detail::split_tsv(line);
    if (fields.size() != 5) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 5 fields");
    }
    const std::string where = path + ":" + std::to_string(line_no);
    out[fields[0]].by_column[static_cast<int>(parse_int_field(fields[1], where))] = {
        fields[3], parse_double_field(fields[4], where)};
  }
  return out;
}

}  // namespace tabkb::headmatch
