// The shared trainable binary classifier: deterministic bagged decision
// trees with Gini splits, group-aware cross-validation and per-feature
// importances. Bootstrap sampling is keyed by example id so that permuting
// a dataset does not change the trained model.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tabkb/common.hpp"

namespace tabkb::learn {

struct Example {
  std::vector<double> x;
  int label = 0;  // 0 or 1
  std::string group;  // source table / mention; kept whole during splits
  std::uint64_t id = 0;
};

struct Dataset {
  std::vector<std::string> schema;
  std::vector<Example> examples;

  void add(std::vector<double> x, int label, std::string group) {
    if (x.size() != schema.size())
      throw InternalError("example arity does not match the dataset schema");
    examples.push_back({std::move(x), label, std::move(group),
                        static_cast<std::uint64_t>(examples.size())});
  }

  // Projection onto a feature subset, preserving labels, groups and ids.
  Dataset select(const std::vector<std::string>& names) const {
    std::vector<std::size_t> cols;
    for (const auto& n : names) {
      auto it = std::find(schema.begin(), schema.end(), n);
      if (it == schema.end()) throw DataError("unknown feature: " + n);
      cols.push_back(static_cast<std::size_t>(it - schema.begin()));
    }
    Dataset out;
    out.schema = names;
    for (const auto& e : examples) {
      Example ne;
      ne.label = e.label;
      ne.group = e.group;
      ne.id = e.id;
      for (std::size_t c : cols) ne.x.push_back(e.x[c]);
      out.examples.push_back(std::move(ne));
    }
    return out;
  }

  // TSV with a header row naming the features; the final column is the
  // label, and an optional leading "group" column carries the group key.
  static Dataset load_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty dataset");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> header;
    std::size_t start = 0;
    while (start <= line.size()) {
      std::size_t tab = line.find('\t', start);
      if (tab == std::string::npos) tab = line.size();
      header.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    if (header.size() < 2 || header.back() != "label")
      throw DataError(path + ": final header column must be 'label'");
    bool has_group = header.front() == "group";

    Dataset ds;
    ds.schema.assign(header.begin() + (has_group ? 1 : 0), header.end() - 1);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::vector<std::string> fields;
      start = 0;
      while (start <= line.size()) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) tab = line.size();
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
      }
      if (fields.size() != header.size())
        throw DataError(path + ":" + std::to_string(line_no) + ": field count mismatch");
      std::string group = has_group ? fields[0] : std::to_string(line_no);
      std::vector<double> x;
      for (std::size_t i = has_group ? 1 : 0; i + 1 < fields.size(); ++i) {
        char* end = nullptr;
        x.push_back(std::strtod(fields[i].c_str(), &end));
        if (end == fields[i].c_str())
          throw DataError(path + ":" + std::to_string(line_no) + ": bad number");
      }
      int label = fields.back() == "1" ? 1 : (fields.back() == "0" ? 0 : -1);
      if (label < 0)
        throw DataError(path + ":" + std::to_string(line_no) + ": label must be 0 or 1");
      ds.add(std::move(x), label, std::move(group));
    }
    return ds;
  }

  void save_tsv(const std::string& path) const {
    std::string out = "group";
    for (const auto& n : schema) out += "\t" + n;
    out += "\tlabel\n";
    for (const auto& e : examples) {
      out += tsv_escape(e.group);
      for (double v : e.x) out += "\t" + fmt_general(v, 17);
      out += "\t" + std::to_string(e.label) + "\n";
    }
    write_text_file(path, out);
  }
};

struct TrainConfig {
  int trees = 100;
  int max_depth = 12;
  int min_split = 2;
  std::uint64_t seed = 42;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0;
  int left = -1;
  int right = -1;
  int label = 0;
};

struct Tree {
  std::vector<TreeNode> nodes;

  int predict(const std::vector<double>& x) const {
    int cur = 0;
    while (nodes[static_cast<std::size_t>(cur)].feature >= 0) {
      const TreeNode& n = nodes[static_cast<std::size_t>(cur)];
      cur = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(cur)].label;
  }
};

struct Prediction {
  int label = 0;
  double score = 0;  // fraction of trees voting 1
};

struct TreeEnsembleModel {
  std::vector<std::string> schema;
  TrainConfig config;
  std::vector<Tree> trees;
  std::map<std::string, double> importance;

  Prediction predict(const std::vector<double>& x) const {
    if (x.size() != schema.size())
      throw DataError("feature vector arity does not match the model schema");
    int votes = 0;
    for (const auto& t : trees) votes += t.predict(x);
    double score = trees.empty() ? 0.0
                                 : static_cast<double>(votes) /
                                       static_cast<double>(trees.size());
    return {score >= 0.5 ? 1 : 0, score};
  }

  // Projects a wider feature map onto the model schema.
  Prediction predict_named(const std::vector<std::string>& names,
                           const std::vector<double>& values) const {
    std::vector<double> x;
    x.reserve(schema.size());
    for (const auto& want : schema) {
      auto it = std::find(names.begin(), names.end(), want);
      if (it == names.end())
        throw DataError("model schema requires missing feature: " + want);
      x.push_back(values[static_cast<std::size_t>(it - names.begin())]);
    }
    return predict(x);
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["format"] = "tabkb.model";
    j["version"] = 1;
    j["schema"] = schema;
    j["seed"] = config.seed;
    j["config"] = {{"trees", config.trees},
                   {"max_depth", config.max_depth},
                   {"min_split", config.min_split}};
    j["importance"] = importance;
    nlohmann::ordered_json jtrees = nlohmann::ordered_json::array();
    for (const auto& t : trees) {
      nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
      for (const auto& n : t.nodes) {
        nodes.push_back({n.feature, n.threshold, n.left, n.right, n.label});
      }
      jtrees.push_back({{"nodes", std::move(nodes)}});
    }
    j["trees"] = std::move(jtrees);
    return j;
  }

  static TreeEnsembleModel from_json(const nlohmann::json& j) {
    if (j.value("format", std::string()) != "tabkb.model")
      throw DataError("not a model file");
    if (j.value("version", 0) != 1) throw DataError("unsupported model version");
    TreeEnsembleModel m;
    m.schema = j.at("schema").get<std::vector<std::string>>();
    m.config.seed = j.at("seed").get<std::uint64_t>();
    m.config.trees = j.at("config").at("trees").get<int>();
    m.config.max_depth = j.at("config").at("max_depth").get<int>();
    m.config.min_split = j.at("config").at("min_split").get<int>();
    for (const auto& [k, v] : j.at("importance").items()) {
      m.importance[k] = v.get<double>();
    }
    for (const auto& jt : j.at("trees")) {
      Tree t;
      for (const auto& jn : jt.at("nodes")) {
        TreeNode n;
        n.feature = jn.at(0).get<int>();
        n.threshold = jn.at(1).get<double>();
        n.left = jn.at(2).get<int>();
        n.right = jn.at(3).get<int>();
        n.label = jn.at(4).get<int>();
        t.nodes.push_back(n);
      }
      m.trees.push_back(std::move(t));
    }
    return m;
  }

  void save(const std::string& path) const {
    write_text_file(path, to_json().dump() + "\n");
  }

  static TreeEnsembleModel load(const std::string& path) {
    return from_json(nlohmann::json::parse(read_text_file(path)));
  }
};

namespace detail {

inline double gini(std::size_t pos, std::size_t n) {
  if (n == 0) return 0.0;
  double p = static_cast<double>(pos) / static_cast<double>(n);
  return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

struct TreeBuilder {
  const std::vector<const Example*>& examples;
  int max_depth;
  int min_split;
  std::size_t n_features;
  std::size_t feature_subset;
  SplitMix64& rng;
  Tree tree;
  std::map<int, double>& importance_acc;
  std::size_t total_n;

  int build(std::vector<std::size_t> idx, int depth) {
    std::size_t pos = 0;
    for (std::size_t i : idx) pos += static_cast<std::size_t>(examples[i]->label);
    const std::size_t n = idx.size();

    auto make_leaf = [&]() {
      TreeNode leaf;
      leaf.label = (2 * pos >= n) ? 1 : 0;
      tree.nodes.push_back(leaf);
      return static_cast<int>(tree.nodes.size() - 1);
    };

    if (pos == 0 || pos == n || depth >= max_depth ||
        n < static_cast<std::size_t>(min_split)) {
      return make_leaf();
    }

    // Features are visited in a per-node random order; ones that are
    // constant within the node do not count against the subset budget.
    std::vector<std::size_t> feats(n_features);
    for (std::size_t i = 0; i < n_features; ++i) feats[i] = i;
    for (std::size_t i = 0; i + 1 < n_features; ++i) {
      std::size_t j = i + rng.next_below(n_features - i);
      std::swap(feats[i], feats[j]);
    }

    const double parent_gini = gini(pos, n);
    double best_gain = 1e-12;
    int best_feature = -1;
    double best_threshold = 0;

    std::vector<std::pair<double, int>> vals(n);
    std::size_t visited = 0;
    for (std::size_t f : feats) {
      if (visited >= feature_subset) break;
      for (std::size_t i = 0; i < n; ++i) {
        vals[i] = {examples[idx[i]]->x[f], examples[idx[i]]->label};
      }
      std::sort(vals.begin(), vals.end());
      if (vals.front().first == vals.back().first) continue;  // constant here
      ++visited;
      std::size_t left_pos = 0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_pos += static_cast<std::size_t>(vals[i].second);
        if (vals[i].first == vals[i + 1].first) continue;
        double thr = vals[i].first + (vals[i + 1].first - vals[i].first) / 2.0;
        if (!(thr < vals[i + 1].first)) continue;  // degenerate float midpoint
        std::size_t nl = i + 1, nr = n - nl;
        double gain = parent_gini -
                      (static_cast<double>(nl) / static_cast<double>(n)) *
                          gini(left_pos, nl) -
                      (static_cast<double>(nr) / static_cast<double>(n)) *
                          gini(pos - left_pos, nr);
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = thr;
        }
      }
    }

    if (best_feature < 0) return make_leaf();

    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t i : idx) {
      if (examples[i]->x[static_cast<std::size_t>(best_feature)] <= best_threshold) {
        left_idx.push_back(i);
      } else {
        right_idx.push_back(i);
      }
    }
    if (left_idx.empty() || right_idx.empty()) return make_leaf();

    importance_acc[best_feature] +=
        best_gain * static_cast<double>(n) / static_cast<double>(total_n);

    TreeNode node;
    node.feature = best_feature;
    node.threshold = best_threshold;
    tree.nodes.push_back(node);
    int self = static_cast<int>(tree.nodes.size() - 1);
    idx.clear();
    idx.shrink_to_fit();
    int l = build(std::move(left_idx), depth + 1);
    int r = build(std::move(right_idx), depth + 1);
    tree.nodes[static_cast<std::size_t>(self)].left = l;
    tree.nodes[static_cast<std::size_t>(self)].right = r;
    return self;
  }
};

}  // namespace detail

inline TreeEnsembleModel train(const Dataset& data, TrainConfig config = {}) {
  std::size_t pos = 0;
  for (const auto& e : data.examples) pos += static_cast<std::size_t>(e.label);
  if (data.examples.size() < 2 || pos == 0 || pos == data.examples.size()) {
    throw DataError("training data must contain both classes");
  }

  // Sort by example id: sampling is then independent of storage order.
  std::vector<const Example*> by_id;
  by_id.reserve(data.examples.size());
  for (const auto& e : data.examples) by_id.push_back(&e);
  std::sort(by_id.begin(), by_id.end(),
            [](const Example* a, const Example* b) { return a->id < b->id; });
  for (std::size_t i = 1; i < by_id.size(); ++i) {
    if (by_id[i]->id == by_id[i - 1]->id)
      throw DataError("duplicate example ids in dataset");
  }

  TreeEnsembleModel model;
  model.schema = data.schema;
  model.config = config;

  const std::size_t n = by_id.size();
  const std::size_t d = data.schema.size();
  const std::size_t subset = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d)))));

  std::map<int, double> importance_acc;
  for (int t = 0; t < config.trees; ++t) {
    SplitMix64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> sample(n);
    for (std::size_t i = 0; i < n; ++i) sample[i] = rng.next_below(n);

    detail::TreeBuilder builder{by_id,
                                config.max_depth,
                                config.min_split,
                                d,
                                subset,
                                rng,
                                {},
                                importance_acc,
                                n};
    builder.build(std::move(sample), 0);
    model.trees.push_back(std::move(builder.tree));
  }

  double total = 0;
  for (const auto& [_, v] : importance_acc) total += v;
  for (std::size_t f = 0; f < d; ++f) {
    auto it = importance_acc.find(static_cast<int>(f));
    double v = it == importance_acc.end() ? 0.0 : it->second;
    model.importance[data.schema[f]] = total > 0 ? v / total : 0.0;
  }
  return model;
}

inline std::map<std::string, double> feature_importance(
    const TreeEnsembleModel& model) {
  return model.importance;
}

struct MetricSummary {
  double mean = 0;
  double stddev = 0;
};

using CvReport = std::map<std::string, MetricSummary>;

namespace detail {

inline std::map<std::string, double> binary_metrics(
    const std::vector<int>& gold, const std::vector<int>& pred) {
  std::size_t tp = 0, fp = 0, fn = 0, correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] == pred[i]) ++correct;
    if (pred[i] == 1 && gold[i] == 1) ++tp;
    if (pred[i] == 1 && gold[i] == 0) ++fp;
    if (pred[i] == 0 && gold[i] == 1) ++fn;
  }
  double acc = gold.empty() ? 0.0
                            : static_cast<double>(correct) /
                                  static_cast<double>(gold.size());
  double p = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  double r = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  double f1 = (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
  return {{"accuracy", acc}, {"precision", p}, {"recall", r}, {"f1", f1}};
}

}  // namespace detail

// Deterministic group-aware fold assignment: groups are dealt greedily
// (largest first) onto the lightest fold, so no group straddles folds.
inline std::vector<std::vector<std::size_t>> assign_folds(const Dataset& data,
                                                          int folds) {
  if (folds < 2) throw DataError("cross-validation needs at least 2 folds");
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    groups[data.examples[i].group].push_back(i);
  }
  if (groups.size() < static_cast<std::size_t>(folds)) {
    throw DataError("fewer groups than folds");
  }
  std::vector<const std::pair<const std::string, std::vector<std::size_t>>*> order;
  for (const auto& g : groups) order.push_back(&g);
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) {
    if (a->second.size() != b->second.size())
      return a->second.size() > b->second.size();
    return a->first < b->first;
  });

  std::vector<std::vector<std::size_t>> fold_members(static_cast<std::size_t>(folds));
  std::vector<std::size_t> fold_load(static_cast<std::size_t>(folds), 0);
  std::vector<std::size_t> fold_pos(static_cast<std::size_t>(folds), 0);
  for (const auto* g : order) {
    std::size_t best = 0;
    for (std::size_t f = 1; f < fold_members.size(); ++f) {
      if (fold_load[f] < fold_load[best] ||
          (fold_load[f] == fold_load[best] && fold_pos[f] < fold_pos[best])) {
        best = f;
      }
    }
    for (std::size_t i : g->second) {
      fold_members[best].push_back(i);
      ++fold_load[best];
      fold_pos[best] += static_cast<std::size_t>(data.examples[i].label);
    }
  }
  return fold_members;
}

// Stratified, group-aware k-fold cross-validation: no group straddles folds.
inline CvReport cross_validate(const Dataset& data, int folds = 5,
                               TrainConfig config = {}) {
  std::size_t pos = 0;
  for (const auto& e : data.examples) pos += static_cast<std::size_t>(e.label);
  std::size_t neg = data.examples.size() - pos;
  if (folds >= 2 && std::min(pos, neg) < static_cast<std::size_t>(folds)) {
    throw DataError("too few examples per class for " + std::to_string(folds) +
                    " folds");
  }
  auto fold_members = assign_folds(data, folds);

  std::map<std::string, std::vector<double>> collected;
  for (std::size_t f = 0; f < fold_members.size(); ++f) {
    Dataset train_ds;
    train_ds.schema = data.schema;
    std::vector<const Example*> test;
    for (std::size_t g = 0; g < fold_members.size(); ++g) {
      for (std::size_t i : fold_members[g]) {
        if (g == f) {
          test.push_back(&data.examples[i]);
        } else {
          train_ds.examples.push_back(data.examples[i]);
        }
      }
    }
    TrainConfig fold_config = config;
    fold_config.seed = derive_seed(config.seed, 1000 + f);
    TreeEnsembleModel model = train(train_ds, fold_config);
    std::vector<int> gold, pred;
    for (const auto* e : test) {
      gold.push_back(e->label);
      pred.push_back(model.predict(e->x).label);
    }
    for (const auto& [k, v] : detail::binary_metrics(gold, pred)) {
      collected[k].push_back(v);
    }
  }

  CvReport report;
  for (const auto& [k, vs] : collected) {
    double mean = 0;
    for (double v : vs) mean += v;
    mean /= static_cast<double>(vs.size());
    double var = 0;
    for (double v : vs) var += (v - mean) * (v - mean);
    var /= static_cast<double>(vs.size());
    report[k] = {mean, std::sqrt(var)};
  }
  return report;
}

}  // namespace tabkb::learn
