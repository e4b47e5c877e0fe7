// Pairwise text-similarity kernels: the four lexical measures used by the
// linking and matching classifiers, embedding cosine, and the soft term
// matcher phi. All kernels normalize their inputs and are pure functions.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tabkb/common.hpp"
#include "tabkb/text.hpp"

namespace tabkb::sim {

// Levenshtein distance over code points, two-row dynamic program.
inline std::size_t levenshtein(const std::vector<char32_t>& a,
                               const std::vector<char32_t>& b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t cost = (a[i - 1] == b[j - 1]) ? 0 : 1;
      cur[j] = std::min({cur[j - 1] + 1, prev[j] + 1, prev[j - 1] + cost});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// LD(a,b) / max{|a|,|b|}; 0 when both sides are empty.
inline double edit_distance_norm(std::string_view a, std::string_view b) {
  auto ca = text::decode_utf8(text::normalize(a));
  auto cb = text::decode_utf8(text::normalize(b));
  std::size_t denom = std::max(ca.size(), cb.size());
  if (denom == 0) return 0.0;
  return static_cast<double>(levenshtein(ca, cb)) / static_cast<double>(denom);
}

// |L_a ∩ L_b| / max{|a|,|b|} with L the character set; identical strings
// with repeated characters score below 1.
inline double letter_overlap(std::string_view a, std::string_view b) {
  auto ca = text::decode_utf8(text::normalize(a));
  auto cb = text::decode_utf8(text::normalize(b));
  std::size_t denom = std::max(ca.size(), cb.size());
  if (denom == 0) return 0.0;
  std::set<char32_t> sa(ca.begin(), ca.end());
  std::set<char32_t> sb(cb.begin(), cb.end());
  std::size_t common = 0;
  for (char32_t c : sa) common += sb.count(c);
  return static_cast<double>(common) / static_cast<double>(denom);
}

// |W_a ∩ W_b| / |W_a ∪ W_b| over whitespace-delimited term sets.
inline double jaccard_terms(std::string_view a, std::string_view b) {
  auto ta = text::terms(a);
  auto tb = text::terms(b);
  std::set<std::string> sa(ta.begin(), ta.end());
  std::set<std::string> sb(tb.begin(), tb.end());
  if (sa.empty() && sb.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& t : sa) common += sb.count(t);
  std::size_t uni = sa.size() + sb.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

// 1 if one normalized string contains the other.
inline double substring_indicator(std::string_view a, std::string_view b) {
  std::string na = text::normalize(a);
  std::string nb = text::normalize(b);
  if (na.find(nb) != std::string::npos || nb.find(na) != std::string::npos)
    return 1.0;
  return 0.0;
}

// Term embeddings loaded from a text file: first line "<vocab> <dim>", then
// one line per token with its vector.
struct TermEmbeddings {
  int dimension = 0;
  std::unordered_map<std::string, std::vector<double>> vectors;

  bool empty() const { return vectors.empty(); }

  const std::vector<double>* find(const std::string& token) const {
    auto it = vectors.find(token);
    return it == vectors.end() ? nullptr : &it->second;
  }

  static TermEmbeddings load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embedding file: " + path);
    TermEmbeddings emb;
    std::size_t vocab = 0;
    if (!(in >> vocab >> emb.dimension) || emb.dimension <= 0) {
      throw DataError(path + ": bad embedding header");
    }
    for (std::size_t i = 0; i < vocab; ++i) {
      std::string token;
      if (!(in >> token)) throw DataError(path + ": truncated embedding file");
      std::vector<double> v(static_cast<std::size_t>(emb.dimension));
      for (double& x : v) {
        if (!(in >> x)) throw DataError(path + ": truncated vector for " + token);
      }
      emb.vectors[text::normalize(token)] = std::move(v);
    }
    return emb;
  }
};

namespace detail {

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na <= 0 || nb <= 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Mean vector of the in-vocabulary tokens; empty when everything is OOV.
inline std::vector<double> mean_vector(std::string_view s,
                                       const TermEmbeddings& emb) {
  std::vector<double> acc;
  std::size_t n = 0;
  for (const auto& tok : text::terms(s)) {
    const auto* v = emb.find(tok);
    if (!v) continue;
    if (acc.empty()) acc.assign(v->size(), 0.0);
    for (std::size_t i = 0; i < v->size(); ++i) acc[i] += (*v)[i];
    ++n;
  }
  if (n == 0) return {};
  for (double& x : acc) x /= static_cast<double>(n);
  return acc;
}

}  // namespace detail

// Cosine of the mean token vectors; 0 when either side is fully OOV.
inline double embedding_cosine(std::string_view a, std::string_view b,
                               const TermEmbeddings& emb) {
  auto va = detail::mean_vector(a, emb);
  auto vb = detail::mean_vector(b, emb);
  if (va.empty() || vb.empty()) return 0.0;
  return detail::cosine(va, vb);
}

// Soft term matcher: mean over query tokens of the best doc-token cosine,
// clamped to [0,1]. A deterministic stand-in for a trained short-text
// matching network; used only as a scalar feature downstream.
inline double soft_match_phi(std::string_view query, std::string_view doc,
                             const TermEmbeddings& emb) {
  std::vector<const std::vector<double>*> doc_vecs;
  for (const auto& tok : text::terms(doc)) {
    if (const auto* v = emb.find(tok)) doc_vecs.push_back(v);
  }
  if (doc_vecs.empty()) return 0.0;
  double total = 0;
  std::size_t n = 0;
  for (const auto& tok : text::terms(query)) {
    const auto* q = emb.find(tok);
    if (!q) continue;
    double best = 0;
    for (const auto* d : doc_vecs) best = std::max(best, detail::cosine(*q, *d));
    total += std::clamp(best, 0.0, 1.0);
    ++n;
  }
  if (n == 0) return 0.0;
  return total / static_cast<double>(n);
}

}  // namespace tabkb::sim
