// Local candidate-entity search standing in for a live lookup API: keyword
// relevance (BM25 saturation) fused multiplicatively with popularity.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tabkb/common.hpp"
#include "tabkb/kb.hpp"
#include "tabkb/text.hpp"

namespace tabkb::retrieve {

enum class IndexFields { kTitleOnly, kTitleContent };

inline IndexFields parse_fields(std::string_view s) {
  if (s == "title") return IndexFields::kTitleOnly;
  if (s == "title+content") return IndexFields::kTitleContent;
  throw DataError("unknown search field configuration: " + std::string(s));
}

inline const char* fields_name(IndexFields f) {
  return f == IndexFields::kTitleOnly ? "title" : "title+content";
}

struct Candidate {
  std::string entity_id;
  int rank = 0;  // 1-based
  double retrieval_score = 0.0;
};

struct SearchParams {
  int top_k = 10;                  // recall saturates around ten candidates
  double popularity_lambda = 0.3;  // weight of the popularity fusion term
};

class SearchIndex {
 public:
  // Title-only indexes labels and surface forms; title+content additionally
  // indexes descriptions at a lower field weight.
  static SearchIndex build(const kb::KbSnapshot& kb, IndexFields fields) {
    SearchIndex idx;
    idx.fields_ = fields;
    const auto& entities = kb.entities();
    std::vector<std::size_t> order(entities.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return entities[a].id < entities[b].id;
    });

    for (std::size_t pos : order) {
      const auto& e = entities[pos];
      std::uint32_t doc = static_cast<std::uint32_t>(idx.doc_ids_.size());
      idx.doc_ids_.push_back(e.id);
      idx.popularity_.push_back(e.popularity);

      std::map<std::string, double> tf;
      double len = 0;
      auto add_tokens = [&](std::string_view field, double weight) {
        for (const auto& tok : text::terms(field)) {
          tf[tok] += weight;
          len += weight;
        }
      };
      add_tokens(e.label, kTitleWeight);
      for (const auto& form : kb.surface_forms_of(e.id)) {
        if (form != text::normalize(e.label)) add_tokens(form, kTitleWeight);
      }
      if (fields == IndexFields::kTitleContent) {
        add_tokens(e.description, kContentWeight);
      }
      idx.doc_len_.push_back(len);
      for (const auto& [tok, f] : tf) idx.postings_[tok].push_back({doc, f});
    }

    double total = 0;
    for (double l : idx.doc_len_) total += l;
    idx.avg_len_ = idx.doc_len_.empty() ? 0.0
                                        : total / static_cast<double>(idx.doc_len_.size());
    return idx;
  }

  // Top-k by tf-idf relevance times (1 + lambda * ln(1 + popularity)), ties
  // broken by ascending entity id.
  std::vector<Candidate> search(std::string_view query, int k,
                                double popularity_lambda = 0.3) const {
    if (k < 1) throw DataError("search requires k >= 1");
    std::vector<Candidate> out;
    auto tokens = text::terms(query);
    if (tokens.empty() || doc_ids_.empty()) return out;

    std::vector<double> scores(doc_ids_.size(), 0.0);
    const double n_docs = static_cast<double>(doc_ids_.size());
    for (const auto& tok : tokens) {
      auto it = postings_.find(tok);
      if (it == postings_.end()) continue;
      const double df = static_cast<double>(it->second.size());
      const double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
      for (const auto& p : it->second) {
        const double norm_len = avg_len_ > 0 ? doc_len_[p.doc] / avg_len_ : 1.0;
        const double tf_part = (p.tf * (kBm25K1 + 1.0)) /
                               (p.tf + kBm25K1 * (1.0 - kBm25B + kBm25B * norm_len));
        scores[p.doc] += idf * tf_part;
      }
    }

    std::vector<std::uint32_t> matched;
    for (std::uint32_t d = 0; d < scores.size(); ++d) {
      if (scores[d] > 0) {
        scores[d] *= 1.0 + popularity_lambda * std::log1p(popularity_[d]);
        matched.push_back(d);
      }
    }
    std::sort(matched.begin(), matched.end(), [&](std::uint32_t a, std::uint32_t b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return doc_ids_[a] < doc_ids_[b];
    });
    if (matched.size() > static_cast<std::size_t>(k)) matched.resize(k);

    out.reserve(matched.size());
    for (std::size_t i = 0; i < matched.size(); ++i) {
      out.push_back({doc_ids_[matched[i]], static_cast<int>(i) + 1,
                     scores[matched[i]]});
    }
    return out;
  }

  IndexFields fields() const { return fields_; }
  std::size_t size() const { return doc_ids_.size(); }

  std::vector<std::string> vocabulary() const {
    std::vector<std::string> v;
    v.reserve(postings_.size());
    for (const auto& [tok, _] : postings_) v.push_back(tok);
    return v;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write index file: " + path);
    write_u32(out, kMagic);
    write_u32(out, kVersion);
    write_u32(out, fields_ == IndexFields::kTitleOnly ? 0u : 1u);
    write_u64(out, doc_ids_.size());
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
      write_string(out, doc_ids_[i]);
      write_f64(out, doc_len_[i]);
      write_f64(out, popularity_[i]);
    }
    write_f64(out, avg_len_);
    write_u64(out, postings_.size());
    for (const auto& [tok, plist] : postings_) {
      write_string(out, tok);
      write_u64(out, plist.size());
      for (const auto& p : plist) {
        write_u32(out, p.doc);
        write_f64(out, p.tf);
      }
    }
    if (!out) throw DataError("write failed: " + path);
  }

  static SearchIndex load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open index file: " + path);
    if (read_u32(in) != kMagic) throw DataError(path + ": not an index file");
    if (read_u32(in) != kVersion) throw DataError(path + ": unsupported index version");
    SearchIndex idx;
    idx.fields_ = read_u32(in) == 0 ? IndexFields::kTitleOnly
                                    : IndexFields::kTitleContent;
    std::uint64_t ndocs = read_u64(in);
    idx.doc_ids_.reserve(ndocs);
    for (std::uint64_t i = 0; i < ndocs; ++i) {
      idx.doc_ids_.push_back(read_string(in));
      idx.doc_len_.push_back(read_f64(in));
      idx.popularity_.push_back(read_f64(in));
    }
    idx.avg_len_ = read_f64(in);
    std::uint64_t nterms = read_u64(in);
    for (std::uint64_t i = 0; i < nterms; ++i) {
      std::string tok = read_string(in);
      std::uint64_t np = read_u64(in);
      auto& plist = idx.postings_[tok];
      plist.reserve(np);
      for (std::uint64_t j = 0; j < np; ++j) {
        Posting p;
        p.doc = read_u32(in);
        p.tf = read_f64(in);
        plist.push_back(p);
      }
    }
    if (!in) throw DataError(path + ": truncated index file");
    return idx;
  }

 private:
  struct Posting {
    std::uint32_t doc = 0;
    double tf = 0;
  };

  static constexpr double kBm25K1 = 1.2;
  static constexpr double kBm25B = 0.75;
  static constexpr double kTitleWeight = 1.0;
  static constexpr double kContentWeight = 0.5;
  static constexpr std::uint32_t kMagic = 0x54424b49;  // "TBKI"
  static constexpr std::uint32_t kVersion = 1;

  static void write_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 4);
  }
  static void write_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 8);
  }
  static void write_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    write_u64(out, bits);
  }
  static void write_string(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  static std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  static std::uint64_t read_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  static double read_f64(std::istream& in) {
    std::uint64_t bits = read_u64(in);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
  static std::string read_string(std::istream& in) {
    std::uint32_t len = read_u32(in);
    std::string s(len, '\0');
    in.read(s.data(), len);
    return s;
  }

  IndexFields fields_ = IndexFields::kTitleOnly;
  std::vector<std::string> doc_ids_;  // sorted ascending
  std::vector<double> doc_len_;
  std::vector<double> popularity_;
  double avg_len_ = 0;
  std::map<std::string, std::vector<Posting>> postings_;
};

}  // namespace tabkb::retrieve
