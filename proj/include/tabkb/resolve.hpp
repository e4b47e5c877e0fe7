// Step 4: decide when mention occurrences refer to the same entity (type
// resolution over table type distributions, surface-form resolution over
// string / embedding / table-similarity features) and emit typed clusters.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tabkb/common.hpp"
#include "tabkb/corpus.hpp"
#include "tabkb/kb.hpp"
#include "tabkb/learn.hpp"
#include "tabkb/link.hpp"
#include "tabkb/sim.hpp"
#include "tabkb/text.hpp"

namespace tabkb::resolve {

// L2-normalized distribution over KB types.
struct TypeDistribution {
  std::map<std::string, double> weights;

  bool empty() const { return weights.empty(); }

  void l2_normalize() {
    double norm = 0;
    for (const auto& [_, w] : weights) norm += w * w;
    if (norm <= 0) {
      weights.clear();
      return;
    }
    norm = std::sqrt(norm);
    for (auto& [_, w] : weights) w /= norm;
  }

  static double cosine(const TypeDistribution& a, const TypeDistribution& b) {
    if (a.empty() || b.empty()) return 0.0;
    double dot = 0, na = 0, nb = 0;
    for (const auto& [k, v] : a.weights) {
      na += v * v;
      auto it = b.weights.find(k);
      if (it != b.weights.end()) dot += v * it->second;
    }
    for (const auto& [_, v] : b.weights) nb += v * v;
    if (na <= 0 || nb <= 0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
  }
};

// Ancestor-expanded type counts over a table's linked mentions.
inline TypeDistribution table_type_distribution(const link::LinkedTable& lt,
                                                const kb::KbSnapshot& kb) {
  TypeDistribution d;
  for (const auto& [_, lm] : lt.links.by_row) {
    for (const auto& ty : kb.expanded_types(lm.entity_id)) d.weights[ty] += 1;
  }
  d.l2_normalize();
  return d;
}

inline constexpr double kDefaultTheta = 0.95;

enum class TypeResolution { kSame, kDifferent };

// Same entity type iff the table type distributions agree (cosine >= theta).
inline TypeResolution type_resolve(const TypeDistribution& t1,
                                   const TypeDistribution& t2,
                                   double theta = kDefaultTheta) {
  if (t1.empty() || t2.empty()) return TypeResolution::kDifferent;
  return TypeDistribution::cosine(t1, t2) >= theta ? TypeResolution::kSame
                                                   : TypeResolution::kDifferent;
}

struct Mention2vecConfig {
  int dimension = 64;
  int window = 5;
  int negatives = 5;
  int epochs = 5;
  int min_count = 2;
  std::uint64_t seed = 42;
  double learning_rate = 0.025;
};

// Skip-gram-with-negative-sampling embeddings over core-column mention
// sequences (one table's core column = one sentence). Deterministic under a
// fixed seed.
struct MentionEmbeddings {
  int dimension = 0;
  Mention2vecConfig config;
  std::map<std::string, std::vector<float>> vectors;

  double cosine(const std::string& a, const std::string& b) const {
    auto ia = vectors.find(a);
    auto ib = vectors.find(b);
    if (ia == vectors.end() || ib == vectors.end()) return 0.0;
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < ia->second.size(); ++i) {
      dot += static_cast<double>(ia->second[i]) * ib->second[i];
      na += static_cast<double>(ia->second[i]) * ia->second[i];
      nb += static_cast<double>(ib->second[i]) * ib->second[i];
    }
    if (na <= 0 || nb <= 0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
  }

  // Text format: "<vocab> <dim>" header, then one "key\tfloats" line each.
  void save(const std::string& path) const {
    std::string out = std::to_string(vectors.size()) + " " +
                      std::to_string(dimension) + "\n";
    for (const auto& [key, vec] : vectors) {
      out += key;
      out += '\t';
      for (std::size_t i = 0; i < vec.size(); ++i) {
        if (i) out += ' ';
        out += fmt_general(vec[i], 9);
      }
      out += '\n';
    }
    write_text_file(path, out);
  }

  static MentionEmbeddings load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open mention embedding file: " + path);
    MentionEmbeddings emb;
    std::string header;
    if (!std::getline(in, header)) throw DataError(path + ": empty file");
    std::size_t vocab = 0;
    if (std::sscanf(header.c_str(), "%zu %d", &vocab, &emb.dimension) != 2) {
      throw DataError(path + ": bad header");
    }
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::size_t tab = line.find('\t');
      if (tab == std::string::npos) throw DataError(path + ": missing tab separator");
      std::vector<float> vec;
      vec.reserve(static_cast<std::size_t>(emb.dimension));
      const char* p = line.c_str() + tab + 1;
      char* end = nullptr;
      for (int i = 0; i < emb.dimension; ++i) {
        vec.push_back(std::strtof(p, &end));
        if (end == p) throw DataError(path + ": truncated vector");
        p = end;
      }
      emb.vectors[line.substr(0, tab)] = std::move(vec);
    }
    if (emb.vectors.size() != vocab) throw DataError(path + ": vocab size mismatch");
    return emb;
  }
};

inline MentionEmbeddings train_mention_embeddings(
    const std::vector<corpus::Table>& tables, Mention2vecConfig cfg = {}) {
  // Vocabulary over mention keys, word2vec ordering (count desc, key asc).
  std::map<std::string, int> counts;
  std::vector<std::vector<std::string>> raw_sentences;
  for (const auto& t : tables) {
    std::vector<std::string> sent;
    for (const auto& occ : corpus::core_mentions(t)) {
      counts[occ.key] += 1;
      sent.push_back(occ.key);
    }
    if (!sent.empty()) raw_sentences.push_back(std::move(sent));
  }
  std::vector<std::pair<std::string, int>> vocab;
  for (const auto& [key, n] : counts) {
    if (n >= cfg.min_count) vocab.emplace_back(key, n);
  }
  std::sort(vocab.begin(), vocab.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  MentionEmbeddings out;
  out.dimension = cfg.dimension;
  out.config = cfg;
  if (vocab.empty()) return out;

  std::map<std::string, std::size_t> vocab_index;
  for (std::size_t i = 0; i < vocab.size(); ++i) vocab_index[vocab[i].first] = i;

  std::vector<std::vector<std::size_t>> sentences;
  std::size_t total_tokens = 0;
  for (const auto& sent : raw_sentences) {
    std::vector<std::size_t> ids;
    for (const auto& key : sent) {
      auto it = vocab_index.find(key);
      if (it != vocab_index.end()) ids.push_back(it->second);
    }
    total_tokens += ids.size();
    if (ids.size() >= 2) sentences.push_back(std::move(ids));
  }

  const std::size_t v = vocab.size();
  const std::size_t dim = static_cast<std::size_t>(cfg.dimension);
  std::vector<float> input(v * dim), output(v * dim, 0.0f);
  SplitMix64 init_rng(derive_seed(cfg.seed, "mention2vec-init"));
  for (auto& x : input) {
    x = static_cast<float>((init_rng.next_double() - 0.5) / cfg.dimension);
  }

  // Unigram^0.75 negative-sampling distribution.
  std::vector<double> cumulative(v);
  double acc = 0;
  for (std::size_t i = 0; i < v; ++i) {
    acc += std::pow(static_cast<double>(vocab[i].second), 0.75);
    cumulative[i] = acc;
  }
  auto sample_negative = [&](SplitMix64& rng) {
    double r = rng.next_double() * acc;
    return static_cast<std::size_t>(
        std::lower_bound(cumulative.begin(), cumulative.end(), r) -
        cumulative.begin());
  };

  SplitMix64 rng(derive_seed(cfg.seed, "mention2vec-train"));
  const double total_steps =
      std::max<double>(1.0, static_cast<double>(cfg.epochs) *
                                static_cast<double>(total_tokens));
  double processed = 0;
  std::vector<float> grad(dim);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& sent : sentences) {
      for (std::size_t i = 0; i < sent.size(); ++i) {
        processed += 1;
        const double alpha =
            std::max(cfg.learning_rate * (1.0 - processed / total_steps),
                     cfg.learning_rate * 1e-4);
        const std::size_t reduced = 1 + rng.next_below(static_cast<std::uint64_t>(cfg.window));
        const std::size_t center = sent[i];
        const std::size_t lo = i >= reduced ? i - reduced : 0;
        const std::size_t hi = std::min(sent.size() - 1, i + reduced);
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          const std::size_t context = sent[j];
          std::fill(grad.begin(), grad.end(), 0.0f);
          float* wc = &input[center * dim];
          for (int neg = 0; neg <= cfg.negatives; ++neg) {
            std::size_t target;
            double label;
            if (neg == 0) {
              target = context;
              label = 1;
            } else {
              target = sample_negative(rng);
              if (target == context) continue;
              label = 0;
            }
            float* ct = &output[target * dim];
            double f = 0;
            for (std::size_t d = 0; d < dim; ++d) f += static_cast<double>(wc[d]) * ct[d];
            const double g = (label - 1.0 / (1.0 + std::exp(-f))) * alpha;
            for (std::size_t d = 0; d < dim; ++d) {
              grad[d] += static_cast<float>(g * ct[d]);
              ct[d] += static_cast<float>(g * wc[d]);
            }
          }
          for (std::size_t d = 0; d < dim; ++d) wc[d] += grad[d];
        }
      }
    }
  }

  for (std::size_t i = 0; i < v; ++i) {
    out.vectors[vocab[i].first] =
        std::vector<float>(input.begin() + static_cast<std::ptrdiff_t>(i * dim),
                           input.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
  }
  return out;
}

// Exact maximum-weight bipartite matching via the Hungarian potentials
// method on the negated, zero-padded square matrix.
inline double max_weight_bipartite_matching(
    const std::vector<std::vector<double>>& w) {
  const std::size_t n1 = w.size();
  const std::size_t n2 = n1 ? w[0].size() : 0;
  if (n1 == 0 || n2 == 0) return 0.0;
  const std::size_t n = std::max(n1, n2);
  constexpr double kInf = std::numeric_limits<double>::infinity();

  auto cost = [&](std::size_t i, std::size_t j) {
    return (i < n1 && j < n2) ? -w[i][j] : 0.0;
  };

  std::vector<double> u(n + 1, 0), v(n + 1, 0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      std::size_t i0 = p[j0], j1 = 0;
      double delta = kInf;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  double total = 0;
  for (std::size_t j = 1; j <= n; ++j) {
    std::size_t i = p[j];
    if (i >= 1 && i - 1 < n1 && j - 1 < n2) total += w[i - 1][j - 1];
  }
  return total;
}

// Matched weight sum of pairwise heading term similarities, normalized by
// the larger heading count.
inline double heading_bipartite_similarity(const std::vector<std::string>& h1,
                                           const std::vector<std::string>& h2) {
  if (h1.empty() || h2.empty()) return 0.0;
  std::vector<std::vector<double>> w(h1.size(), std::vector<double>(h2.size()));
  for (std::size_t i = 0; i < h1.size(); ++i) {
    for (std::size_t j = 0; j < h2.size(); ++j) {
      w[i][j] = 1.0 - sim::edit_distance_norm(h1[i], h2[j]);
    }
  }
  return max_weight_bipartite_matching(w) /
         static_cast<double>(std::max(h1.size(), h2.size()));
}

// Everything surface resolution needs to describe one table.
struct TableView {
  const corpus::Table* table = nullptr;
  TypeDistribution distribution;
  std::set<std::string> linked_entities;

  static TableView make(const corpus::Table& t, const link::LinkedTable& lt,
                        const kb::KbSnapshot& kb) {
    TableView view;
    view.table = &t;
    view.distribution = table_type_distribution(lt, kb);
    for (const auto& [_, lm] : lt.links.by_row) {
      view.linked_entities.insert(lm.entity_id);
    }
    return view;
  }
};

namespace detail {

inline double set_jaccard(const std::set<std::string>& a,
                          const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& x : a) common += b.count(x);
  return static_cast<double>(common) /
         static_cast<double>(a.size() + b.size() - common);
}

}  // namespace detail

// (caption, page title, surrounding text, heading set) token Jaccard,
// linked-entity overlap, type-distribution cosine, bipartite headings.
inline std::vector<double> table_similarity_features(const TableView& t1,
                                                     const TableView& t2) {
  std::set<std::string> h1, h2;
  std::vector<std::string> hl1, hl2;
  for (const auto& h : t1.table->headings) {
    std::string n = text::normalize(h);
    if (n.empty()) continue;
    h1.insert(n);
    hl1.push_back(n);
  }
  for (const auto& h : t2.table->headings) {
    std::string n = text::normalize(h);
    if (n.empty()) continue;
    h2.insert(n);
    hl2.push_back(n);
  }
  return {
      sim::jaccard_terms(t1.table->context.caption, t2.table->context.caption),
      sim::jaccard_terms(t1.table->context.page_title, t2.table->context.page_title),
      sim::jaccard_terms(t1.table->context.surrounding_text,
                         t2.table->context.surrounding_text),
      detail::set_jaccard(h1, h2),
      detail::set_jaccard(t1.linked_entities, t2.linked_entities),
      TypeDistribution::cosine(t1.distribution, t2.distribution),
      heading_bipartite_similarity(hl1, hl2),
  };
}

inline const std::vector<std::string>& pair_feature_schema() {
  static const std::vector<std::string> names = {
      "edit",          "letter",           "jaccard",
      "substring",     "mention2vec_cosine", "caption_jaccard",
      "page_title_jaccard", "surrounding_jaccard", "heading_jaccard",
      "entity_jaccard", "type_dist_cosine", "heading_bipartite"};
  return names;
}

// Symmetric by construction: the pair is sorted on (mention, table id)
// before feature extraction.
inline std::vector<double> pair_features(const std::string& m1,
                                         const TableView& t1,
                                         const std::string& m2,
                                         const TableView& t2,
                                         const MentionEmbeddings& memb) {
  const std::string* a = &m1;
  const std::string* b = &m2;
  const TableView* ta = &t1;
  const TableView* tb = &t2;
  if (std::tie(m2, t2.table->id) < std::tie(m1, t1.table->id)) {
    std::swap(a, b);
    std::swap(ta, tb);
  }
  std::vector<double> x = {
      sim::edit_distance_norm(*a, *b),
      sim::letter_overlap(*a, *b),
      sim::jaccard_terms(*a, *b),
      sim::substring_indicator(*a, *b),
      memb.cosine(text::normalize(*a), text::normalize(*b)),
  };
  for (double f : table_similarity_features(*ta, *tb)) x.push_back(f);
  return x;
}

inline constexpr double kEmbeddingThreshold = 0.95;

// Combined-model decision when a model is given; otherwise the standalone
// embedding mode (cosine >= 0.95).
inline bool surface_resolve(const learn::TreeEnsembleModel* model,
                            const std::string& m1, const TableView& t1,
                            const std::string& m2, const TableView& t2,
                            const MentionEmbeddings& memb,
                            double embedding_threshold = kEmbeddingThreshold) {
  if (model) {
    if (model->schema != pair_feature_schema()) {
      throw DataError("model schema does not match the pair feature schema");
    }
    return model->predict(pair_features(m1, t1, m2, t2, memb)).label == 1;
  }
  return memb.cosine(text::normalize(m1), text::normalize(m2)) >=
         embedding_threshold;
}

struct Occurrence {
  std::string key;
  std::string table_id;

  auto operator<=>(const Occurrence&) const = default;
};

struct EntityCluster {
  std::vector<Occurrence> members;  // sorted
  std::string canonical;            // most frequent raw surface
  std::string assigned_type;
  std::set<std::string> tables;
};

// Connected components under the transitive closure of positive decisions.
// Output is independent of pair processing order.
inline std::vector<EntityCluster> cluster(
    const std::vector<Occurrence>& nodes,
    const std::vector<std::pair<std::size_t, std::size_t>>& positive_pairs,
    const std::map<std::string, TableView>& views,
    const std::map<std::pair<std::string, std::string>,
                   std::map<std::string, int>>& raw_counts) {
  std::vector<std::size_t> parent(nodes.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const auto& [a, b] : positive_pairs) {
    if (a >= nodes.size() || b >= nodes.size()) {
      throw InternalError("positive pair references an unknown occurrence");
    }
    std::size_t ra = find(a), rb = find(b);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }

  std::map<std::size_t, std::vector<std::size_t>> components;
  for (std::size_t i = 0; i < nodes.size(); ++i) components[find(i)].push_back(i);

  std::vector<EntityCluster> clusters;
  for (const auto& [_, idxs] : components) {
    EntityCluster c;
    for (std::size_t i : idxs) c.members.push_back(nodes[i]);
    std::sort(c.members.begin(), c.members.end());
    c.members.erase(std::unique(c.members.begin(), c.members.end()),
                    c.members.end());

    // Canonical form: most frequent raw surface, ties to the smallest.
    std::map<std::string, int> surface_counts;
    TypeDistribution summed;
    for (const auto& m : c.members) {
      c.tables.insert(m.table_id);
      auto rit = raw_counts.find({m.key, m.table_id});
      if (rit != raw_counts.end()) {
        for (const auto& [raw, n] : rit->second) surface_counts[raw] += n;
      } else {
        surface_counts[m.key] += 1;
      }
    }
    for (const auto& tid : c.tables) {
      auto vit = views.find(tid);
      if (vit == views.end()) continue;
      for (const auto& [ty, wgt] : vit->second.distribution.weights) {
        summed.weights[ty] += wgt;
      }
    }
    int best_count = 0;
    for (const auto& [raw, n] : surface_counts) {
      if (n > best_count) {
        best_count = n;
        c.canonical = raw;
      }
    }
    double best_weight = 0;
    for (const auto& [ty, wgt] : summed.weights) {
      if (wgt > best_weight) {
        best_weight = wgt;
        c.assigned_type = ty;
      }
    }
    clusters.push_back(std::move(c));
  }
  std::sort(clusters.begin(), clusters.end(),
            [](const EntityCluster& a, const EntityCluster& b) {
              return a.members.front() < b.members.front();
            });
  return clusters;
}

// JSON-lines output: one cluster per line.
inline void save_clusters(const std::vector<EntityCluster>& clusters,
                          const std::string& path) {
  std::string out;
  for (const auto& c : clusters) {
    nlohmann::ordered_json j;
    j["canonical"] = c.canonical;
    nlohmann::ordered_json members = nlohmann::ordered_json::array();
    for (const auto& m : c.members) {
      members.push_back({m.key, m.table_id});
    }
    j["members"] = std::move(members);
    j["type"] = c.assigned_type;
    j["size"] = c.members.size();
    out += j.dump();
    out += '\n';
  }
  write_text_file(path, out);
}

}  // namespace tabkb::resolve
