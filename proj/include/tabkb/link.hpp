// Step 1: candidate retrieval per mention, table typing by majority vote,
// per-candidate linkability classification, type-filtered disambiguation to
// at most one entity per mention, and corpus-wide exact-match propagation.
#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tabkb/common.hpp"
#include "tabkb/corpus.hpp"
#include "tabkb/kb.hpp"
#include "tabkb/learn.hpp"
#include "tabkb/retrieve.hpp"
#include "tabkb/sim.hpp"

namespace tabkb::link {

struct TableTypeVote {
  std::vector<std::string> winning_types;  // sorted; more than one on a tie
  std::map<std::string, int> vote_counts;
  bool expanded = false;  // vote ran over ancestor-expanded types

  bool empty() const { return winning_types.empty(); }

  bool contains(const std::string& type_id) const {
    return std::binary_search(winning_types.begin(), winning_types.end(), type_id);
  }
};

struct MentionCandidates {
  int row_index = 0;
  std::string raw;
  std::string key;
  std::vector<retrieve::Candidate> candidates;  // rank ascending
};

using CandidateMatrix = std::vector<MentionCandidates>;

inline CandidateMatrix build_candidates(const corpus::Table& t,
                                        const retrieve::SearchIndex& idx,
                                        const retrieve::SearchParams& params) {
  CandidateMatrix matrix;
  for (auto& occ : corpus::core_mentions(t)) {
    MentionCandidates mc;
    mc.row_index = occ.row_index;
    mc.raw = occ.raw;
    mc.key = occ.key;
    mc.candidates = idx.search(occ.key, params.top_k, params.popularity_lambda);
    matrix.push_back(std::move(mc));
  }
  return matrix;
}

// Majority vote among the types of each mention's rank-1 candidate; ties
// return all tied types, no typed rank-1 candidates returns an empty vote.
inline TableTypeVote infer_table_type(const CandidateMatrix& matrix,
                                      const kb::KbSnapshot& kb,
                                      bool expand_type_vote = false) {
  TableTypeVote vote;
  vote.expanded = expand_type_vote;
  for (const auto& mc : matrix) {
    if (mc.candidates.empty()) continue;
    const auto& top = mc.candidates.front();
    const auto& types = expand_type_vote
                            ? kb.expanded_types(top.entity_id)
                            : kb.entity(top.entity_id).type_ids;
    std::set<std::string> unique(types.begin(), types.end());
    for (const auto& ty : unique) vote.vote_counts[ty] += 1;
  }
  int best = 0;
  for (const auto& [_, n] : vote.vote_counts) best = std::max(best, n);
  for (const auto& [ty, n] : vote.vote_counts) {
    if (n == best && best > 0) vote.winning_types.push_back(ty);
  }
  return vote;
}

inline const std::vector<std::string>& link_feature_schema() {
  static const std::vector<std::string> names = {
      "rank",          "type_exists", "type_matches_table", "has_disambig_tag",
      "edit",          "letter",      "jaccard",            "substring",
      "phi_mention_label", "phi_typed", "phi_mention_description"};
  return names;
}

// Trailing parenthesized suffix on the label, e.g. "Boston (film)".
inline bool has_disambiguation_tag(std::string_view label) {
  std::size_t end = label.size();
  while (end > 0 && (label[end - 1] == ' ' || label[end - 1] == '\t')) --end;
  if (end == 0 || label[end - 1] != ')') return false;
  std::size_t open = label.rfind('(', end - 1);
  return open != std::string_view::npos && open + 1 < end - 1;
}

inline std::vector<double> extract_link_features(
    const std::string& mention_raw, const retrieve::Candidate& c,
    const TableTypeVote& vote, const kb::KbSnapshot& kb,
    const sim::TermEmbeddings& emb) {
  const kb::KbEntity& e = kb.entity(c.entity_id);
  const auto& cand_types =
      vote.expanded ? kb.expanded_types(e.id) : e.type_ids;

  double type_matches = 0;
  for (const auto& ty : cand_types) {
    if (vote.contains(ty)) {
      type_matches = 1;
      break;
    }
  }

  auto join_types = [](const std::vector<std::string>& types) {
    std::string s;
    for (const auto& ty : types) {
      if (!s.empty()) s += ' ';
      s += ty;
    }
    return s;
  };
  const std::string mention_typed =
      mention_raw + " " + join_types(vote.winning_types);
  const std::string label_typed = e.label + " " + join_types(e.type_ids);

  return {
      static_cast<double>(c.rank),
      e.type_ids.empty() ? 0.0 : 1.0,
      type_matches,
      has_disambiguation_tag(e.label) ? 1.0 : 0.0,
      sim::edit_distance_norm(mention_raw, e.label),
      sim::letter_overlap(mention_raw, e.label),
      sim::jaccard_terms(mention_raw, e.label),
      sim::substring_indicator(mention_raw, e.label),
      sim::soft_match_phi(mention_raw, e.label, emb),
      sim::soft_match_phi(mention_typed, label_typed, emb),
      sim::soft_match_phi(mention_raw, e.description, emb),
  };
}

struct CandidateDecision {
  bool positive = false;
  double score = 0;  // fraction of trees voting linkable
};

using DecisionMatrix = std::vector<std::vector<CandidateDecision>>;

// One independent decision per (mention, candidate) pair; a row may carry
// several positives before disambiguation, or none at all.
inline DecisionMatrix classify_candidates(
    const learn::TreeEnsembleModel& model,
    const std::vector<std::vector<std::vector<double>>>& features) {
  if (model.schema != link_feature_schema()) {
    throw DataError("model schema does not match the link feature schema");
  }
  DecisionMatrix out;
  out.reserve(features.size());
  for (const auto& row : features) {
    std::vector<CandidateDecision> decisions;
    decisions.reserve(row.size());
    for (const auto& x : row) {
      auto p = model.predict(x);
      decisions.push_back({p.label == 1, p.score});
    }
    out.push_back(std::move(decisions));
  }
  return out;
}

struct LinkedMention {
  std::string entity_id;
  double confidence = 0;
};

struct LinkAssignment {
  std::map<int, LinkedMention> by_row;  // at most one entity per mention
};

struct DisambiguateOptions {
  // Keep the lowest-rank positive when the type vote is empty. Off by
  // default: untyped tables are normally excluded from linking.
  bool empty_vote_fallback = false;
  // Select among eligible positives by classifier score instead of
  // retrieval rank.
  bool select_by_score = false;
};

// Keeps, per mention, the top-ranked positive candidate sharing a type with
// the table vote; mentions with no type-compatible positive stay unlinked.
inline LinkAssignment disambiguate(const DecisionMatrix& decisions,
                                   const CandidateMatrix& matrix,
                                   const TableTypeVote& vote,
                                   const kb::KbSnapshot& kb,
                                   DisambiguateOptions opts = {}) {
  if (decisions.size() != matrix.size()) {
    throw InternalError("decision matrix does not align with candidates");
  }
  LinkAssignment out;
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    const auto& mc = matrix[i];
    const auto& row = decisions[i];
    const int kept_rank_limit = static_cast<int>(mc.candidates.size());

    int best = -1;
    for (int j = 0; j < kept_rank_limit; ++j) {
      if (!row[static_cast<std::size_t>(j)].positive) continue;
      if (!vote.empty()) {
        const auto& types =
            vote.expanded ? kb.expanded_types(mc.candidates[static_cast<std::size_t>(j)].entity_id)
                          : kb.entity(mc.candidates[static_cast<std::size_t>(j)].entity_id).type_ids;
        bool shares = false;
        for (const auto& ty : types) {
          if (vote.contains(ty)) {
            shares = true;
            break;
          }
        }
        if (!shares) continue;
      } else if (!opts.empty_vote_fallback) {
        continue;
      }
      if (best < 0) {
        best = j;
      } else if (opts.select_by_score &&
                 row[static_cast<std::size_t>(j)].score >
                     row[static_cast<std::size_t>(best)].score) {
        best = j;
      }
      if (!opts.select_by_score) break;  // candidates are rank-ordered
    }
    if (best >= 0) {
      out.by_row[mc.row_index] = {
          mc.candidates[static_cast<std::size_t>(best)].entity_id,
          row[static_cast<std::size_t>(best)].score};
    }
  }
  return out;
}

// Everything later stages need about one linked table.
struct LinkedTable {
  std::string table_id;
  TableTypeVote vote;
  std::vector<corpus::MentionOccurrence> mentions;
  LinkAssignment links;

  bool linkable() const { return !links.by_row.empty(); }
};

inline LinkedTable link_table(const corpus::Table& t,
                              const retrieve::SearchIndex& idx,
                              const kb::KbSnapshot& kb,
                              const sim::TermEmbeddings& emb,
                              const learn::TreeEnsembleModel& model,
                              const retrieve::SearchParams& params = {},
                              DisambiguateOptions opts = {},
                              bool expand_type_vote = false) {
  LinkedTable lt;
  lt.table_id = t.id;
  lt.mentions = corpus::core_mentions(t);
  CandidateMatrix matrix = build_candidates(t, idx, params);
  lt.vote = infer_table_type(matrix, kb, expand_type_vote);
  std::vector<std::vector<std::vector<double>>> features;
  features.reserve(matrix.size());
  for (const auto& mc : matrix) {
    std::vector<std::vector<double>> row;
    row.reserve(mc.candidates.size());
    for (const auto& c : mc.candidates) {
      row.push_back(extract_link_features(mc.raw, c, lt.vote, kb, emb));
    }
    features.push_back(std::move(row));
  }
  lt.links = disambiguate(classify_candidates(model, features), matrix,
                          lt.vote, kb, opts);
  return lt;
}

namespace detail {

inline bool votes_intersect(const TableTypeVote& a, const TableTypeVote& b) {
  for (const auto& ty : a.winning_types) {
    if (b.contains(ty)) return true;
  }
  return false;
}

}  // namespace detail

// An unlinked mention inherits the entity of an exact-match linked mention
// from another table with an intersecting type vote; conflicting donors
// leave it unlinked. Runs to a fixpoint, so a second pass is a no-op.
inline std::size_t propagate_exact_matches(std::vector<LinkedTable>& tables) {
  std::size_t total = 0;
  while (true) {
    struct Donor {
      std::size_t table_idx;
      std::string entity_id;
      double confidence;
    };
    std::map<std::string, std::vector<Donor>> donors;
    for (std::size_t ti = 0; ti < tables.size(); ++ti) {
      if (tables[ti].vote.empty()) continue;
      for (const auto& occ : tables[ti].mentions) {
        auto it = tables[ti].links.by_row.find(occ.row_index);
        if (it == tables[ti].links.by_row.end()) continue;
        donors[occ.key].push_back({ti, it->second.entity_id, it->second.confidence});
      }
    }

    struct Inherit {
      std::size_t table_idx;
      int row_index;
      LinkedMention link;
    };
    std::vector<Inherit> batch;
    for (std::size_t ti = 0; ti < tables.size(); ++ti) {
      if (tables[ti].vote.empty()) continue;
      for (const auto& occ : tables[ti].mentions) {
        if (tables[ti].links.by_row.count(occ.row_index)) continue;
        auto dit = donors.find(occ.key);
        if (dit == donors.end()) continue;
        std::set<std::string> entities;
        double confidence = 0;
        for (const auto& d : dit->second) {
          if (d.table_idx == ti) continue;
          if (!detail::votes_intersect(tables[d.table_idx].vote, tables[ti].vote))
            continue;
          entities.insert(d.entity_id);
          confidence = std::max(confidence, d.confidence);
        }
        if (entities.size() == 1) {
          batch.push_back({ti, occ.row_index, {*entities.begin(), confidence}});
        }
      }
    }
    if (batch.empty()) break;
    for (auto& b : batch) {
      tables[b.table_idx].links.by_row[b.row_index] = std::move(b.link);
    }
    total += batch.size();
  }
  return total;
}

// TSV output: (table_id, row_index, mention, entity_id, confidence); tables
// with zero links are omitted.
inline void save_links(const std::vector<LinkedTable>& tables,
                       const std::string& path) {
  std::string out;
  for (const auto& lt : tables) {
    if (!lt.linkable()) continue;
    std::map<int, const corpus::MentionOccurrence*> by_row;
    for (const auto& occ : lt.mentions) by_row[occ.row_index] = &occ;
    for (const auto& [row, lm] : lt.links.by_row) {
      out += tsv_escape(lt.table_id);
      out += '\t';
      out += std::to_string(row);
      out += '\t';
      auto it = by_row.find(row);
      out += tsv_escape(it != by_row.end() ? it->second->raw : std::string());
      out += '\t';
      out += tsv_escape(lm.entity_id);
      out += '\t';
      out += fmt_fixed(lm.confidence, 6);
      out += '\n';
    }
  }
  write_text_file(path, out);
}

inline std::map<std::string, LinkAssignment> load_links(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open links file: " + path);
  std::map<std::string, LinkAssignment> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = kb::detail::split_tsv(line);
    if (fields.size() != 5) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected 5 fields");
    }
    const std::string where = path + ":" + std::to_string(line_no);
    int row = static_cast<int>(parse_int_field(fields[1], where));
    out[fields[0]].by_row[row] = {fields[3], parse_double_field(fields[4], where)};
  }
  return out;
}

}  // namespace tabkb::link
