// Metrics and gold-standard comparison: macro precision/recall/F1 for the
// per-table tasks, accuracy for discovery and resolution.
#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tabkb/common.hpp"

namespace tabkb::eval {

// Items are opaque strings (e.g. "row|entity"); one set per table.
using ItemsByTable = std::map<std::string, std::set<std::string>>;

struct PrfReport {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t tables = 0;  // tables with non-empty gold
  // micro counterparts, for diagnostics
  double micro_precision = 0;
  double micro_recall = 0;
  double micro_f1 = 0;
};

// Macro average over tables with non-empty gold. A table with gold but no
// predictions scores zero; F1 is averaged per table.
inline PrfReport macro_prf(const ItemsByTable& gold, const ItemsByTable& predicted) {
  bool any_gold = false;
  for (const auto& [_, items] : gold) {
    if (!items.empty()) any_gold = true;
  }
  if (!any_gold) throw DataError("gold standard is empty");

  PrfReport rep;
  double sum_p = 0, sum_r = 0, sum_f = 0;
  std::size_t micro_correct = 0, micro_pred = 0, micro_gold = 0;
  for (const auto& [table, gold_items] : gold) {
    if (gold_items.empty()) continue;
    const auto pit = predicted.find(table);
    std::size_t n_pred = pit == predicted.end() ? 0 : pit->second.size();
    std::size_t correct = 0;
    if (pit != predicted.end()) {
      for (const auto& item : pit->second) correct += gold_items.count(item);
    }
    double p = n_pred > 0 ? static_cast<double>(correct) / static_cast<double>(n_pred) : 0.0;
    double r = static_cast<double>(correct) / static_cast<double>(gold_items.size());
    double f = (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
    sum_p += p;
    sum_r += r;
    sum_f += f;
    ++rep.tables;
    micro_correct += correct;
    micro_pred += n_pred;
    micro_gold += gold_items.size();
  }
  rep.precision = sum_p / static_cast<double>(rep.tables);
  rep.recall = sum_r / static_cast<double>(rep.tables);
  rep.f1 = sum_f / static_cast<double>(rep.tables);
  rep.micro_precision =
      micro_pred > 0 ? static_cast<double>(micro_correct) / static_cast<double>(micro_pred) : 0.0;
  rep.micro_recall =
      micro_gold > 0 ? static_cast<double>(micro_correct) / static_cast<double>(micro_gold) : 0.0;
  rep.micro_f1 = (rep.micro_precision + rep.micro_recall) > 0
                     ? 2 * rep.micro_precision * rep.micro_recall /
                           (rep.micro_precision + rep.micro_recall)
                     : 0.0;
  return rep;
}

// Matches over keys present in gold; missing predictions count as wrong.
inline double accuracy(const std::map<std::string, std::string>& gold,
                       const std::map<std::string, std::string>& predicted) {
  if (gold.empty()) throw DataError("gold standard is empty");
  std::size_t correct = 0;
  for (const auto& [key, want] : gold) {
    auto it = predicted.find(key);
    if (it != predicted.end() && it->second == want) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(gold.size());
}

// --- gold file loading (CSV with a header row) ---

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

template <typename Fn>
void for_each_csv_row(const std::string& path, std::size_t n_fields, Fn fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open gold file: " + path);
  std::string line;
  bool header = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    auto fields = split_csv(line);
    if (fields.size() < n_fields) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(n_fields) + " fields");
    }
    fn(fields);
  }
}

}  // namespace detail

// linking gold: table_id,row_index,entity_id
inline ItemsByTable load_link_gold(const std::string& path) {
  ItemsByTable out;
  detail::for_each_csv_row(path, 3, [&](const std::vector<std::string>& f) {
    out[f[0]].insert(f[1] + "|" + f[2]);
  });
  return out;
}

// heading gold: table_id,column_index,property_id
inline ItemsByTable load_heading_gold(const std::string& path) {
  ItemsByTable out;
  detail::for_each_csv_row(path, 3, [&](const std::vector<std::string>& f) {
    out[f[0]].insert(f[1] + "|" + f[2]);
  });
  return out;
}

// discovery gold: mention,verdict
inline std::map<std::string, std::string> load_discovery_gold(
    const std::string& path) {
  std::map<std::string, std::string> out;
  detail::for_each_csv_row(path, 2, [&](const std::vector<std::string>& f) {
    out[f[0]] = f[1];
  });
  return out;
}

struct ResolutionPair {
  std::string mention1, table1, mention2, table2;
  bool same = false;

  std::string key() const {
    return mention1 + "|" + table1 + "|" + mention2 + "|" + table2;
  }
};

// resolution gold: mention1,table1,mention2,table2,same
inline std::vector<ResolutionPair> load_resolution_gold(const std::string& path) {
  std::vector<ResolutionPair> out;
  detail::for_each_csv_row(path, 5, [&](const std::vector<std::string>& f) {
    out.push_back({f[0], f[1], f[2], f[3], f[4] == "1" || f[4] == "true"});
  });
  return out;
}

inline nlohmann::ordered_json prf_to_json(const PrfReport& r) {
  nlohmann::ordered_json j;
  j["macro"] = {{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}};
  j["micro"] = {{"precision", r.micro_precision},
                {"recall", r.micro_recall},
                {"f1", r.micro_f1}};
  j["tables"] = r.tables;
  return j;
}

inline std::string prf_to_text(const PrfReport& r) {
  std::string out;
  out += "            precision  recall     f1\n";
  out += "macro       " + fmt_fixed(r.precision, 4) + "     " +
         fmt_fixed(r.recall, 4) + "     " + fmt_fixed(r.f1, 4) + "\n";
  out += "micro       " + fmt_fixed(r.micro_precision, 4) + "     " +
         fmt_fixed(r.micro_recall, 4) + "     " + fmt_fixed(r.micro_f1, 4) + "\n";
  out += "tables      " + std::to_string(r.tables) + "\n";
  return out;
}

}  // namespace tabkb::eval
