// Step 3: corpus-wide dossiers for unlinked mentions and their verdict
// (known-entity alias, novel entity, or noise) from origin, saliency,
// semantic and temporal feature families.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tabkb/common.hpp"
#include "tabkb/corpus.hpp"
#include "tabkb/headmatch.hpp"
#include "tabkb/kb.hpp"
#include "tabkb/learn.hpp"
#include "tabkb/link.hpp"
#include "tabkb/retrieve.hpp"
#include "tabkb/sim.hpp"

namespace tabkb::discover {

// Label similarity used by the saliency features: unweighted mean of the
// four lexical kernels, with edit distance inverted into a similarity.
inline double label_similarity(std::string_view a, std::string_view b) {
  return (1.0 - sim::edit_distance_norm(a, b) + sim::letter_overlap(a, b) +
          sim::jaccard_terms(a, b) + sim::substring_indicator(a, b)) /
         4.0;
}

struct MentionDossier {
  std::string key;
  std::vector<std::string> origin_tables;  // sorted linkable tables with the key
  std::vector<std::string> stat_tables;    // identical-core representatives
  int identical_core_groups = 0;
  bool appears_as_header = false;
  std::vector<double> linked_counts;           // per stat table
  std::vector<double> link_rates;              // per stat table
  std::vector<double> matched_heading_counts;  // per stat table
  std::map<int, int> usage_years;              // last-edit year -> table count
};

struct DiscoverOptions {
  // Tables with identical core mention sets count once in the per-table
  // statistics (reused tables only differ at editing time).
  bool collapse_identical_cores = true;
  int wd_top_k = 1;
};

// One dossier per unlinked mention key occurring in at least one linkable
// table. Duplicate occurrences within a table count once.
inline std::map<std::string, MentionDossier> build_dossiers(
    const std::vector<corpus::Table>& tables,
    const std::vector<link::LinkedTable>& linked,
    const std::map<std::string, headmatch::HeadingMatch>& heading_matches,
    const DiscoverOptions& opts = {}) {
  std::map<std::string, const corpus::Table*> table_by_id;
  for (const auto& t : tables) table_by_id[t.id] = &t;

  // Keys that are unlinked somewhere in a linkable table.
  std::set<std::string> unlinked_keys;
  for (const auto& lt : linked) {
    if (!lt.linkable()) continue;
    for (const auto& occ : lt.mentions) {
      if (!lt.links.by_row.count(occ.row_index)) unlinked_keys.insert(occ.key);
    }
  }

  std::map<std::string, MentionDossier> dossiers;
  for (const auto& lt : linked) {
    if (!lt.linkable()) continue;
    auto tit = table_by_id.find(lt.table_id);
    if (tit == table_by_id.end()) continue;
    const corpus::Table& t = *tit->second;
    const std::string header_key =
        text::normalize(t.headings[static_cast<std::size_t>(t.core_column_index)]);

    std::set<std::string> keys_here;
    for (const auto& occ : lt.mentions) keys_here.insert(occ.key);
    for (const auto& key : keys_here) {
      if (!unlinked_keys.count(key)) continue;
      auto& d = dossiers[key];
      d.key = key;
      d.origin_tables.push_back(lt.table_id);
      if (key == header_key) d.appears_as_header = true;
      if (t.context.last_edit_year) d.usage_years[*t.context.last_edit_year] += 1;
    }
  }

  std::map<std::string, const link::LinkedTable*> linked_by_id;
  for (const auto& lt : linked) linked_by_id[lt.table_id] = &lt;

  for (auto& [key, d] : dossiers) {
    std::sort(d.origin_tables.begin(), d.origin_tables.end());

    std::set<std::uint64_t> digests;
    std::set<std::uint64_t> seen_for_stats;
    for (const auto& tid : d.origin_tables) {
      const corpus::Table& t = *table_by_id.at(tid);
      const link::LinkedTable& lt = *linked_by_id.at(tid);
      std::uint64_t digest = corpus::identical_core_key(t);
      digests.insert(digest);
      if (opts.collapse_identical_cores && !seen_for_stats.insert(digest).second) {
        continue;
      }
      d.stat_tables.push_back(tid);
      const double n_linked = static_cast<double>(lt.links.by_row.size());
      d.linked_counts.push_back(n_linked);
      d.link_rates.push_back(
          lt.mentions.empty() ? 0.0 : n_linked / static_cast<double>(lt.mentions.size()));
      auto hit = heading_matches.find(tid);
      d.matched_heading_counts.push_back(
          hit == heading_matches.end()
              ? 0.0
              : static_cast<double>(hit->second.by_column.size()));
    }
    d.identical_core_groups = static_cast<int>(digests.size());
  }
  return dossiers;
}

struct MedAggregates {
  double max = 0, sum = 0, avg = 0, min = 0;
};

// Mention-entity distance: aggregated label similarity between linked
// mentions of the origin tables and their entities' canonical labels.
inline MedAggregates med_features(
    const MentionDossier& dossier,
    const std::map<std::string, const link::LinkedTable*>& linked_by_id,
    const kb::KbSnapshot& kb) {
  std::vector<double> sims;
  for (const auto& tid : dossier.stat_tables) {
    auto it = linked_by_id.find(tid);
    if (it == linked_by_id.end()) continue;
    const link::LinkedTable& lt = *it->second;
    for (const auto& occ : lt.mentions) {
      auto lm = lt.links.by_row.find(occ.row_index);
      if (lm == lt.links.by_row.end()) continue;
      sims.push_back(label_similarity(occ.raw, kb.entity(lm->second.entity_id).label));
    }
  }
  if (sims.empty()) return {};
  MedAggregates out;
  out.max = *std::max_element(sims.begin(), sims.end());
  out.min = *std::min_element(sims.begin(), sims.end());
  for (double s : sims) out.sum += s;
  out.avg = out.sum / static_cast<double>(sims.size());
  return out;
}

// Nearest KB distance: best label similarity among the top-k retrieved
// candidates; 0 when nothing is retrieved.
inline double wd_feature(std::string_view mention,
                         const retrieve::SearchIndex& idx,
                         const kb::KbSnapshot& kb, int k) {
  double best = 0;
  for (const auto& c : idx.search(mention, k)) {
    best = std::max(best, label_similarity(mention, kb.entity(c.entity_id).label));
  }
  return best;
}

struct SemanticFeatures {
  double neural = 0;   // embedding cosine to the top candidate label
  double topical = 0;  // type-distribution cosine against co-occurring links
  double lexical = 0;  // normalized edit distance to the top candidate label
};

namespace detail {

inline double sparse_cosine(const std::map<std::string, double>& a,
                            const std::map<std::string, double>& b) {
  if (a.empty() || b.empty()) return 0.0;
  double dot = 0, na = 0, nb = 0;
  for (const auto& [k, v] : a) {
    na += v * v;
    auto it = b.find(k);
    if (it != b.end()) dot += v * it->second;
  }
  for (const auto& [_, v] : b) nb += v * v;
  if (na <= 0 || nb <= 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace detail

inline SemanticFeatures semantic_features(
    std::string_view mention, const MentionDossier& dossier,
    const retrieve::SearchIndex& idx, const kb::KbSnapshot& kb,
    const sim::TermEmbeddings& emb,
    const std::map<std::string, const link::LinkedTable*>& linked_by_id) {
  SemanticFeatures out;
  auto top = idx.search(mention, 1);
  if (top.empty()) return out;
  const kb::KbEntity& e = kb.entity(top.front().entity_id);

  out.neural = sim::embedding_cosine(mention, e.label, emb);
  out.lexical = sim::edit_distance_norm(mention, e.label);

  // Topical space: ancestor-expanded types of the linked mentions that
  // co-occur with the mention, against the candidate's own types.
  std::map<std::string, double> cooccur;
  for (const auto& tid : dossier.origin_tables) {
    auto it = linked_by_id.find(tid);
    if (it == linked_by_id.end()) continue;
    for (const auto& [_, lm] : it->second->links.by_row) {
      for (const auto& ty : kb.expanded_types(lm.entity_id)) cooccur[ty] += 1;
    }
  }
  std::map<std::string, double> cand;
  for (const auto& ty : kb.expanded_types(e.id)) cand[ty] = 1;
  out.topical = detail::sparse_cosine(cooccur, cand);
  return out;
}

struct TemporalFeatures {
  double slope = 0;
  double r_squared = 0;
  double usage_since_year = 0;
  double frequency = 0;  // number of (year, count) pairs
};

// Least-squares line over (year, count): the usage-over-time baseline.
inline TemporalFeatures temporal_features(const MentionDossier& dossier) {
  TemporalFeatures out;
  const auto& ys = dossier.usage_years;
  if (ys.empty()) return out;
  out.usage_since_year = static_cast<double>(ys.begin()->first);
  out.frequency = static_cast<double>(ys.size());
  if (ys.size() < 2) return out;  // slope and r^2 are 0 by convention

  double n = static_cast<double>(ys.size());
  double mx = 0, my = 0;
  for (const auto& [year, count] : ys) {
    mx += year;
    my += count;
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (const auto& [year, count] : ys) {
    const double dx = year - mx;
    const double dy = count - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx > 0) out.slope = sxy / sxx;
  if (sxx > 0 && syy > 0) out.r_squared = (sxy * sxy) / (sxx * syy);
  return out;
}

inline const std::vector<std::string>& discovery_feature_schema() {
  static const std::vector<std::string> names = {
      // origin block
      "n_origin_tables", "n_identical_core_groups", "appears_as_header",
      "linked_sum", "linked_max", "linked_min", "linked_avg", "linked_std",
      "rate_sum", "rate_max", "rate_min", "rate_avg", "rate_std",
      "matched_headings_sum", "matched_headings_max", "matched_headings_min",
      "matched_headings_avg", "matched_headings_std",
      // saliency block
      "med_max", "med_sum", "med_avg", "med_min", "wd",
      // semantic block
      "semantic_neural", "semantic_topical", "semantic_lexical",
      // temporal baseline block
      "temporal_slope", "temporal_r2", "usage_since_year", "usage_frequency"};
  return names;
}

inline std::vector<std::string> feature_family(std::string_view family) {
  const auto& all = discovery_feature_schema();
  if (family == "origin") return {all.begin(), all.begin() + 18};
  if (family == "saliency") return {all.begin() + 18, all.begin() + 23};
  if (family == "semantic") return {all.begin() + 23, all.begin() + 26};
  if (family == "temporal") return {all.begin() + 26, all.end()};
  throw DataError("unknown feature family: " + std::string(family));
}

namespace detail {

inline void append_aggregates(std::vector<double>& out,
                              const std::vector<double>& xs) {
  if (xs.empty()) {
    out.insert(out.end(), {0, 0, 0, 0, 0});
    return;
  }
  double sum = 0;
  for (double x : xs) sum += x;
  const double avg = sum / static_cast<double>(xs.size());
  double var = 0;
  for (double x : xs) var += (x - avg) * (x - avg);
  var /= static_cast<double>(xs.size());
  out.push_back(sum);
  out.push_back(*std::max_element(xs.begin(), xs.end()));
  out.push_back(*std::min_element(xs.begin(), xs.end()));
  out.push_back(avg);
  out.push_back(std::sqrt(var));
}

}  // namespace detail

inline std::vector<double> extract_discovery_features(
    const MentionDossier& dossier,
    const std::map<std::string, const link::LinkedTable*>& linked_by_id,
    const retrieve::SearchIndex& idx, const kb::KbSnapshot& kb,
    const sim::TermEmbeddings& emb, const DiscoverOptions& opts = {}) {
  std::vector<double> x;
  x.reserve(discovery_feature_schema().size());
  x.push_back(static_cast<double>(dossier.origin_tables.size()));
  x.push_back(static_cast<double>(dossier.identical_core_groups));
  x.push_back(dossier.appears_as_header ? 1.0 : 0.0);
  detail::append_aggregates(x, dossier.linked_counts);
  detail::append_aggregates(x, dossier.link_rates);
  detail::append_aggregates(x, dossier.matched_heading_counts);

  MedAggregates med = med_features(dossier, linked_by_id, kb);
  x.push_back(med.max);
  x.push_back(med.sum);
  x.push_back(med.avg);
  x.push_back(med.min);
  x.push_back(wd_feature(dossier.key, idx, kb, opts.wd_top_k));

  SemanticFeatures sem =
      semantic_features(dossier.key, dossier, idx, kb, emb, linked_by_id);
  x.push_back(sem.neural);
  x.push_back(sem.topical);
  x.push_back(sem.lexical);

  TemporalFeatures tmp = temporal_features(dossier);
  x.push_back(tmp.slope);
  x.push_back(tmp.r_squared);
  x.push_back(tmp.usage_since_year);
  x.push_back(tmp.frequency);
  return x;
}

struct Verdict {
  enum Kind { kInKb, kOutOfKb, kNotEntity };
  Kind kind = kInKb;
  double score = 0;  // fraction of trees voting out-of-KB
};

inline const char* verdict_name(Verdict::Kind k) {
  switch (k) {
    case Verdict::kInKb: return "in_kb";
    case Verdict::kOutOfKb: return "out_of_kb";
    default: return "not_entity";
  }
}

inline std::optional<Verdict::Kind> parse_verdict(std::string_view s) {
  if (s == "in_kb") return Verdict::kInKb;
  if (s == "out_of_kb") return Verdict::kOutOfKb;
  if (s == "not_entity") return Verdict::kNotEntity;
  return std::nullopt;
}

// Noise goes straight to not-entity; everything else is the binary in-KB /
// out-of-KB decision. The model may be trained on any subset of the
// discovery schema (feature families); values are projected by name.
inline Verdict classify_mention(const learn::TreeEnsembleModel& model,
                                const std::vector<double>& features,
                                bool noise_flag) {
  if (noise_flag) return {Verdict::kNotEntity, 1.0};
  auto p = model.predict_named(discovery_feature_schema(), features);
  return {p.label == 1 ? Verdict::kOutOfKb : Verdict::kInKb, p.score};
}

struct DiscoveryRow {
  std::string key;
  Verdict verdict;
  int n_origin_tables = 0;
  std::string example_table_id;
};

// TSV output: (mention_key, verdict, score, |T_m|, example_table_id).
inline void save_discovery(const std::vector<DiscoveryRow>& rows,
                           const std::string& path) {
  std::string out;
  for (const auto& r : rows) {
    out += tsv_escape(r.key);
    out += '\t';
    out += verdict_name(r.verdict.kind);
    out += '\t';
    out += fmt_fixed(r.verdict.score, 6);
    out += '\t';
    out += std::to_string(r.n_origin_tables);
    out += '\t';
    out += tsv_escape(r.example_table_id);
    out += '\n';
  }
  write_text_file(path, out);
}

inline std::vector<DiscoveryRow> load_discovery(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open discovery file: " + path);
  std::vector<DiscoveryRow> rows;
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
    DiscoveryRow r;
    r.key = fields[0];
    auto kind = parse_verdict(fields[1]);
    if (!kind) throw DataError(path + ":" + std::to_string(line_no) + ": bad verdict");
    r.verdict.kind = *kind;
    const std::string where = path + ":" + std::to_string(line_no);
    r.verdict.score = parse_double_field(fields[2], where);
    r.n_origin_tables = static_cast<int>(parse_int_field(fields[3], where));
    r.example_table_id = fields[4];
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace tabkb::discover
