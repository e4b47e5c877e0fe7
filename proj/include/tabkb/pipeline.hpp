// Pipeline orchestration: flat key-value config, stage functions with pure
// file contracts, dataset builders for the trainable components, and the
// run manifest. Running the stages separately equals running `run`.
#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tabkb/common.hpp"
#include "tabkb/corpus.hpp"
#include "tabkb/discover.hpp"
#include "tabkb/eval.hpp"
#include "tabkb/headmatch.hpp"
#include "tabkb/kb.hpp"
#include "tabkb/learn.hpp"
#include "tabkb/link.hpp"
#include "tabkb/resolve.hpp"
#include "tabkb/retrieve.hpp"
#include "tabkb/sim.hpp"

namespace tabkb::pipeline {

struct PipelineConfig {
  // paths
  std::string corpus;
  std::string kb_dir;
  std::string embeddings;
  std::string output_dir;
  std::string link_model;
  std::string heading_model;
  std::string discovery_model;
  std::string resolve_model;  // optional; empty selects the embedding mode

  // retrieval
  std::string search_fields = "title+content";
  int top_k = 10;
  double popularity_lambda = 0.3;

  // linking
  bool empty_vote_fallback = false;
  bool select_by_score = false;
  bool expand_type_vote = false;

  // discovery
  std::string wd_fields = "title";
  int wd_top_k = 1;
  bool collapse_identical_cores = true;

  // resolution
  double theta = resolve::kDefaultTheta;
  int m2v_dim = 64;
  int m2v_window = 5;
  int m2v_negatives = 5;
  int m2v_epochs = 5;
  int m2v_min_count = 2;
  std::optional<std::uint64_t> m2v_seed;  // defaults to a derived seed

  // learner defaults (used by the train subcommands)
  int trees = 100;
  int max_depth = 12;

  std::uint64_t seed = 42;

  void set(const std::string& key, const std::string& value);
  static PipelineConfig load(const std::string& path);
  nlohmann::ordered_json to_json() const;

  resolve::Mention2vecConfig m2v_config() const {
    resolve::Mention2vecConfig c;
    c.dimension = m2v_dim;
    c.window = m2v_window;
    c.negatives = m2v_negatives;
    c.epochs = m2v_epochs;
    c.min_count = m2v_min_count;
    c.seed = m2v_seed ? *m2v_seed : derive_seed(seed, "mention2vec");
    return c;
  }

  retrieve::SearchParams search_params() const {
    return {top_k, popularity_lambda};
  }

  discover::DiscoverOptions discover_options() const {
    return {collapse_identical_cores, wd_top_k};
  }

  link::DisambiguateOptions disambiguate_options() const {
    return {empty_vote_fallback, select_by_score};
  }

  std::string out(const std::string& name) const {
    return output_dir + "/" + name;
  }
};

namespace detail {

inline bool parse_bool(const std::string& v) {
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw DataError("expected a boolean, got: " + v);
}

inline std::string trim(std::string_view s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string_view::npos) return {};
  std::size_t b = s.find_last_not_of(" \t");
  return std::string(s.substr(a, b - a + 1));
}

}  // namespace detail

inline void PipelineConfig::set(const std::string& key, const std::string& value) {
  const std::string where = "config key " + key;
  auto as_int = [&] { return static_cast<int>(parse_int_field(value, where)); };
  auto as_double = [&] { return parse_double_field(value, where); };
  if (key == "corpus") corpus = value;
  else if (key == "kb_dir") kb_dir = value;
  else if (key == "embeddings") embeddings = value;
  else if (key == "output_dir") output_dir = value;
  else if (key == "link_model") link_model = value;
  else if (key == "heading_model") heading_model = value;
  else if (key == "discovery_model") discovery_model = value;
  else if (key == "resolve_model") resolve_model = value;
  else if (key == "search_fields") search_fields = value;
  else if (key == "top_k") top_k = as_int();
  else if (key == "popularity_lambda") popularity_lambda = as_double();
  else if (key == "empty_vote_fallback") empty_vote_fallback = detail::parse_bool(value);
  else if (key == "select_by_score") select_by_score = detail::parse_bool(value);
  else if (key == "expand_type_vote") expand_type_vote = detail::parse_bool(value);
  else if (key == "wd_fields") wd_fields = value;
  else if (key == "wd_top_k") wd_top_k = as_int();
  else if (key == "collapse_identical_cores") collapse_identical_cores = detail::parse_bool(value);
  else if (key == "theta") theta = as_double();
  else if (key == "m2v_dim") m2v_dim = as_int();
  else if (key == "m2v_window") m2v_window = as_int();
  else if (key == "m2v_negatives") m2v_negatives = as_int();
  else if (key == "m2v_epochs") m2v_epochs = as_int();
  else if (key == "m2v_min_count") m2v_min_count = as_int();
  else if (key == "m2v_seed") m2v_seed = static_cast<std::uint64_t>(parse_int_field(value, where));
  else if (key == "trees") trees = as_int();
  else if (key == "max_depth") max_depth = as_int();
  else if (key == "seed") seed = static_cast<std::uint64_t>(parse_int_field(value, where));
  else throw DataError("unknown config key: " + key);
}

// Flat "key = value" text file; '#' starts a comment line.
inline PipelineConfig PipelineConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  PipelineConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected key=value");
    }
    cfg.set(detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
  }
  return cfg;
}

inline nlohmann::ordered_json PipelineConfig::to_json() const {
  nlohmann::ordered_json j;
  j["corpus"] = corpus;
  j["kb_dir"] = kb_dir;
  j["embeddings"] = embeddings;
  j["output_dir"] = output_dir;
  j["link_model"] = link_model;
  j["heading_model"] = heading_model;
  j["discovery_model"] = discovery_model;
  j["resolve_model"] = resolve_model;
  j["search_fields"] = search_fields;
  j["top_k"] = top_k;
  j["popularity_lambda"] = popularity_lambda;
  j["empty_vote_fallback"] = empty_vote_fallback;
  j["select_by_score"] = select_by_score;
  j["expand_type_vote"] = expand_type_vote;
  j["wd_fields"] = wd_fields;
  j["wd_top_k"] = wd_top_k;
  j["collapse_identical_cores"] = collapse_identical_cores;
  j["theta"] = theta;
  j["m2v_dim"] = m2v_dim;
  j["m2v_window"] = m2v_window;
  j["m2v_negatives"] = m2v_negatives;
  j["m2v_epochs"] = m2v_epochs;
  j["m2v_min_count"] = m2v_min_count;
  if (m2v_seed) {
    j["m2v_seed"] = *m2v_seed;
  } else {
    j["m2v_seed"] = nullptr;
  }
  j["trees"] = trees;
  j["max_depth"] = max_depth;
  j["seed"] = seed;
  return j;
}

struct StageStats {
  std::string name;
  std::map<std::string, std::uint64_t> counts;
  double seconds = 0;
};

struct RunManifest {
  nlohmann::ordered_json config_snapshot;
  std::map<std::string, std::string> input_digests;
  std::vector<StageStats> stages;

  void add_input(const std::string& path) {
    input_digests[path] = hex64(fnv1a64_file(path));
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["config"] = config_snapshot;
    j["inputs"] = input_digests;
    nlohmann::ordered_json js = nlohmann::ordered_json::array();
    for (const auto& s : stages) {
      js.push_back({{"name", s.name}, {"counts", s.counts}, {"seconds", s.seconds}});
    }
    j["stages"] = std::move(js);
    return j;
  }

  void save(const std::string& path) const {
    write_text_file(path, to_json().dump(2) + "\n");
  }
};

namespace detail {

class StageTimer {
 public:
  StageTimer(RunManifest& manifest, std::string name)
      : manifest_(manifest), start_(std::chrono::steady_clock::now()) {
    stats_.name = std::move(name);
  }
  ~StageTimer() {
    stats_.seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start_)
                         .count();
    manifest_.stages.push_back(stats_);
  }
  void count(const std::string& key, std::uint64_t v) { stats_.counts[key] = v; }

 private:
  RunManifest& manifest_;
  StageStats stats_;
  std::chrono::steady_clock::time_point start_;
};

// Reassembles the per-table linking state from the corpus and a links file;
// type votes are not persisted and stay empty (no later stage needs them).
inline std::vector<link::LinkedTable> assemble_linked_tables(
    const std::vector<corpus::Table>& tables,
    const std::map<std::string, link::LinkAssignment>& links) {
  std::vector<link::LinkedTable> out;
  out.reserve(tables.size());
  for (const auto& t : tables) {
    link::LinkedTable lt;
    lt.table_id = t.id;
    lt.mentions = corpus::core_mentions(t);
    auto it = links.find(t.id);
    if (it != links.end()) lt.links = it->second;
    out.push_back(std::move(lt));
  }
  return out;
}

}  // namespace detail

// --- stages -----------------------------------------------------------

inline void stage_ingest(const PipelineConfig& cfg, RunManifest& manifest) {
  detail::StageTimer timer(manifest, "ingest");
  manifest.add_input(cfg.corpus);
  corpus::ParseReport report;
  auto tables = corpus::load_corpus(cfg.corpus, &report);
  corpus::save_corpus(tables, cfg.out("corpus.jsonl"));
  timer.count("lines", report.lines);
  timer.count("tables", report.parsed);
  timer.count("malformed", report.malformed);
  timer.count("dropped", report.dropped);
}

inline void stage_build_index(const PipelineConfig& cfg, RunManifest& manifest) {
  detail::StageTimer timer(manifest, "build-index");
  auto kb = kb::KbSnapshot::load(kb::KbPaths::in_dir(cfg.kb_dir));
  auto idx = retrieve::SearchIndex::build(kb, retrieve::parse_fields(cfg.search_fields));
  idx.save(cfg.out("index.bin"));
  timer.count("entities", idx.size());
  timer.count("vocabulary", idx.vocabulary().size());
}

inline void stage_link(const PipelineConfig& cfg, RunManifest& manifest) {
  detail::StageTimer timer(manifest, "link");
  auto tables = corpus::load_corpus(cfg.out("corpus.jsonl"));
  auto kb = kb::KbSnapshot::load(kb::KbPaths::in_dir(cfg.kb_dir));
  auto idx = retrieve::SearchIndex::load(cfg.out("index.bin"));
  auto emb = sim::TermEmbeddings::load(cfg.embeddings);
  auto model = learn::TreeEnsembleModel::load(cfg.link_model);

  std::vector<link::LinkedTable> linked;
  linked.reserve(tables.size());
  for (const auto& t : tables) {
    linked.push_back(link::link_table(t, idx, kb, emb, model,
                                      cfg.search_params(),
                                      cfg.disambiguate_options(),
                                      cfg.expand_type_vote));
  }
  std::size_t propagated = link::propagate_exact_matches(linked);
  link::save_links(linked, cfg.out("links.tsv"));

  std::uint64_t linkable = 0, total_links = 0;
  for (const auto& lt : linked) {
    if (lt.linkable()) ++linkable;
    total_links += lt.links.by_row.size();
  }
  timer.count("tables", tables.size());
  timer.count("linkable_tables", linkable);
  timer.count("links", total_links);
  timer.count("propagated", propagated);
}

inline void stage_match_headings(const PipelineConfig& cfg, RunManifest& manifest) {
  detail::StageTimer timer(manifest, "match-headings");
  auto tables = corpus::load_corpus(cfg.out("corpus.jsonl"));
  auto kb = kb::KbSnapshot::load(kb::KbPaths::in_dir(cfg.kb_dir));
  auto links = link::load_links(cfg.out("links.tsv"));
  auto model = learn::TreeEnsembleModel::load(cfg.heading_model);

  std::vector<std::pair<const corpus::Table*, headmatch::HeadingMatch>> matches;
  std::uint64_t matched = 0, duplicate_columns = 0;
  for (const auto& t : tables) {
    auto it = links.find(t.id);
    if (it == links.end()) continue;
    auto hm = headmatch::match_headings(t, it->second, kb, model);
    matched += hm.by_column.size();
    // distinct columns may map to the same property; surfaced as a count
    std::set<std::string> seen;
    for (const auto& [_, m] : hm.by_column) {
      if (!seen.insert(m.property_id).second) ++duplicate_columns;
    }
    matches.emplace_back(&t, std::move(hm));
  }
  headmatch::save_heading_matches(matches, cfg.out("headings.tsv"));
  timer.count("tables_with_links", matches.size());
  timer.count("matched_headings", matched);
  timer.count("duplicate_property_columns", duplicate_columns);
}

// Discovery accepts either a plain binary model (noise handled by the regex
// pre-filter) or a two-stage "model3" file (learned entity-ness instead of
// the regex).
struct DiscoveryModel {
  std::optional<learn::TreeEnsembleModel> entity;  // present in 3-class mode
  learn::TreeEnsembleModel novelty;

  static DiscoveryModel load(const std::string& path) {
    auto j = nlohmann::json::parse(read_text_file(path));
    DiscoveryModel m;
    if (j.value("format", std::string()) == "tabkb.model3") {
      m.entity = learn::TreeEnsembleModel::from_json(j.at("entity"));
      m.novelty = learn::TreeEnsembleModel::from_json(j.at("novelty"));
    } else {
      m.novelty = learn::TreeEnsembleModel::from_json(j);
    }
    return m;
  }

  discover::Verdict classify(const std::vector<double>& features,
                             bool noise_flag) const {
    if (entity) {
      auto p = entity->predict_named(discover::discovery_feature_schema(), features);
      if (p.label == 0) return {discover::Verdict::kNotEntity, 1.0 - p.score};
      return discover::classify_mention(novelty, features, false);
    }
    return discover::classify_mention(novelty, features, noise_flag);
  }
};

inline void stage_discover(const PipelineConfig& cfg, RunManifest& manifest) {
  detail::StageTimer timer(manifest, "discover");
  auto tables = corpus::load_corpus(cfg.out("corpus.jsonl"));
  auto kb = kb::KbSnapshot::load(kb::KbPaths::in_dir(cfg.kb_dir));
  auto links = link::load_links(cfg.out("links.tsv"));
  auto headings = headmatch::load_heading_matches(cfg.out("headings.tsv"));
  auto emb = sim::TermEmbeddings::load(cfg.embeddings);
  auto model = DiscoveryModel::load(cfg.discovery_model);
  auto wd_idx = retrieve::SearchIndex::build(kb, retrieve::parse_fields(cfg.wd_fields));

  auto linked = detail::assemble_linked_tables(tables, links);
  std::map<std::string, const link::LinkedTable*> linked_by_id;
  for (const auto& lt : linked) linked_by_id[lt.table_id] = &lt;

  const auto opts = cfg.discover_options();
  auto dossiers = discover::build_dossiers(tables, linked, headings, opts);

  std::vector<discover::DiscoveryRow> rows;
  std::uint64_t n_in = 0, n_out = 0, n_noise = 0;
  for (const auto& [key, d] : dossiers) {
    auto features =
        discover::extract_discovery_features(d, linked_by_id, wd_idx, kb, emb, opts);
    bool noise = corpus::is_noise_mention(key);
    discover::DiscoveryRow row;
    row.key = key;
    row.verdict = model.classify(features, noise);
    row.n_origin_tables = static_cast<int>(d.origin_tables.size());
    row.example_table_id = d.origin_tables.front();
    switch (row.verdict.kind) {
      case discover::Verdict::kInKb: ++n_in; break;
      case discover::Verdict::kOutOfKb: ++n_out; break;
      default: ++n_noise; break;
    }
    rows.push_back(std::move(row));
  }
  discover::save_discovery(rows, cfg.out("discovery.tsv"));
  timer.count("dossiers", dossiers.size());
  timer.count("in_kb", n_in);
  timer.count("out_of_kb", n_out);
  timer.count("not_entity", n_noise);
}

inline void stage_resolve(const PipelineConfig& cfg, RunManifest& manifest) {
  detail::StageTimer timer(manifest, "resolve");
  auto tables = corpus::load_corpus(cfg.out("corpus.jsonl"));
  auto kb = kb::KbSnapshot::load(kb::KbPaths::in_dir(cfg.kb_dir));
  auto links = link::load_links(cfg.out("links.tsv"));
  auto verdicts = discover::load_discovery(cfg.out("discovery.tsv"));

  auto memb = resolve::train_mention_embeddings(tables, cfg.m2v_config());
  memb.save(cfg.out("mention_embeddings.txt"));

  std::optional<learn::TreeEnsembleModel> model;
  if (!cfg.resolve_model.empty()) {
    model = learn::TreeEnsembleModel::load(cfg.resolve_model);
  }

  std::set<std::string> novel_keys;
  for (const auto& row : verdicts) {
    if (row.verdict.kind == discover::Verdict::kOutOfKb) novel_keys.insert(row.key);
  }

  // Occurrence nodes: novel keys, unlinked, in linkable tables.
  auto linked = detail::assemble_linked_tables(tables, links);
  std::map<std::string, const corpus::Table*> table_by_id;
  for (const auto& t : tables) table_by_id[t.id] = &t;

  std::vector<resolve::Occurrence> nodes;
  std::map<std::pair<std::string, std::string>, std::map<std::string, int>> raw_counts;
  std::map<std::string, resolve::TableView> views;
  for (const auto& lt : linked) {
    if (!lt.linkable()) continue;
    bool table_used = false;
    std::set<std::string> keys_here;
    for (const auto& occ : lt.mentions) {
      if (lt.links.by_row.count(occ.row_index)) continue;
      if (!novel_keys.count(occ.key)) continue;
      raw_counts[{occ.key, lt.table_id}][occ.raw] += 1;
      if (keys_here.insert(occ.key).second) {
        nodes.push_back({occ.key, lt.table_id});
        table_used = true;
      }
    }
    if (table_used) {
      views[lt.table_id] =
          resolve::TableView::make(*table_by_id.at(lt.table_id), lt, kb);
    }
  }
  std::sort(nodes.begin(), nodes.end());

  // Same-key pairs resolve on type distributions; cross-key pairs pass a
  // cheap lexical block before the surface-form decision.
  std::vector<std::pair<std::size_t, std::size_t>> positives;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      const auto& a = nodes[i];
      const auto& b = nodes[j];
      const auto& va = views.at(a.table_id);
      const auto& vb = views.at(b.table_id);
      bool same = false;
      if (a.key == b.key) {
        same = resolve::type_resolve(va.distribution, vb.distribution,
                                     cfg.theta) == resolve::TypeResolution::kSame;
      } else {
        bool blocked = sim::jaccard_terms(a.key, b.key) > 0 ||
                       sim::substring_indicator(a.key, b.key) == 1.0 ||
                       sim::edit_distance_norm(a.key, b.key) <= 0.5;
        if (blocked) {
          same = resolve::surface_resolve(model ? &*model : nullptr, a.key, va,
                                          b.key, vb, memb);
        }
      }
      if (same) positives.emplace_back(i, j);
    }
  }

  auto clusters = resolve::cluster(nodes, positives, views, raw_counts);
  resolve::save_clusters(clusters, cfg.out("clusters.jsonl"));
  timer.count("occurrences", nodes.size());
  timer.count("positive_pairs", positives.size());
  timer.count("clusters", clusters.size());
}

inline void validate_config(const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  auto require = [](const std::string& path, const char* what) {
    if (path.empty()) throw DataError(std::string("config is missing ") + what);
    if (!fs::exists(path)) {
      throw DataError(std::string(what) + " does not exist: " + path);
    }
  };
  require(cfg.corpus, "corpus");
  require(cfg.kb_dir, "kb_dir");
  require(cfg.embeddings, "embeddings");
  require(cfg.link_model, "link_model");
  require(cfg.heading_model, "heading_model");
  require(cfg.discovery_model, "discovery_model");
  if (!cfg.resolve_model.empty()) require(cfg.resolve_model, "resolve_model");
  if (cfg.output_dir.empty()) throw DataError("config is missing output_dir");
}

// Steps 1-4 in order, each stage reading the previous stage's files.
inline RunManifest run_pipeline(const PipelineConfig& cfg) {
  validate_config(cfg);
  std::filesystem::create_directories(cfg.output_dir);
  RunManifest manifest;
  manifest.config_snapshot = cfg.to_json();
  stage_ingest(cfg, manifest);
  stage_build_index(cfg, manifest);
  stage_link(cfg, manifest);
  stage_match_headings(cfg, manifest);
  stage_discover(cfg, manifest);
  stage_resolve(cfg, manifest);
  manifest.save(cfg.out("manifest.json"));
  return manifest;
}

// --- dataset builders for the train subcommands ------------------------

// Candidate-level linking dataset labeled from (table, row, entity) gold.
// Only tables present in the gold standard contribute examples.
inline learn::Dataset build_link_dataset(
    const std::vector<corpus::Table>& tables, const kb::KbSnapshot& kb,
    const retrieve::SearchIndex& idx, const sim::TermEmbeddings& emb,
    const eval::ItemsByTable& gold, const retrieve::SearchParams& params,
    bool expand_type_vote = false) {
  learn::Dataset ds;
  ds.schema = link::link_feature_schema();
  for (const auto& t : tables) {
    auto git = gold.find(t.id);
    if (git == gold.end()) continue;
    auto matrix = link::build_candidates(t, idx, params);
    auto vote = link::infer_table_type(matrix, kb, expand_type_vote);
    for (const auto& mc : matrix) {
      for (const auto& c : mc.candidates) {
        const std::string item = std::to_string(mc.row_index) + "|" + c.entity_id;
        int label = git->second.count(item) ? 1 : 0;
        ds.add(link::extract_link_features(mc.raw, c, vote, kb, emb), label, t.id);
      }
    }
  }
  return ds;
}

// Heading-candidate dataset labeled from (table, column, property) gold.
inline learn::Dataset build_heading_dataset(
    const std::vector<corpus::Table>& tables, const kb::KbSnapshot& kb,
    const std::map<std::string, link::LinkAssignment>& links,
    const eval::ItemsByTable& gold) {
  learn::Dataset ds;
  ds.schema = headmatch::heading_feature_schema();
  for (const auto& t : tables) {
    auto git = gold.find(t.id);
    if (git == gold.end()) continue;
    auto lit = links.find(t.id);
    if (lit == links.end()) continue;
    for (const auto& hc : headmatch::heading_candidates(t, lit->second, kb)) {
      const std::string item = std::to_string(hc.column) + "|" + hc.property;
      ds.add(hc.features, git->second.count(item) ? 1 : 0, t.id);
    }
  }
  return ds;
}

struct DiscoveryDatasets {
  learn::Dataset novelty;  // in-KB (0) vs out-of-KB (1)
  learn::Dataset entity;   // not-entity (0) vs entity (1), for 3-class mode
};

inline DiscoveryDatasets build_discovery_datasets(
    const std::vector<corpus::Table>& tables, const kb::KbSnapshot& kb,
    const std::map<std::string, link::LinkAssignment>& links,
    const std::map<std::string, headmatch::HeadingMatch>& headings,
    const sim::TermEmbeddings& emb, const retrieve::SearchIndex& wd_idx,
    const std::map<std::string, std::string>& gold,
    const discover::DiscoverOptions& opts,
    const std::vector<std::string>& feature_names) {
  auto linked = detail::assemble_linked_tables(tables, links);
  std::map<std::string, const link::LinkedTable*> linked_by_id;
  for (const auto& lt : linked) linked_by_id[lt.table_id] = &lt;
  auto dossiers = discover::build_dossiers(tables, linked, headings, opts);

  DiscoveryDatasets out;
  out.novelty.schema = feature_names;
  out.entity.schema = feature_names;
  const auto& full = discover::discovery_feature_schema();
  std::vector<std::size_t> cols;
  for (const auto& n : feature_names) {
    auto it = std::find(full.begin(), full.end(), n);
    if (it == full.end()) throw DataError("unknown discovery feature: " + n);
    cols.push_back(static_cast<std::size_t>(it - full.begin()));
  }

  for (const auto& [key, verdict] : gold) {
    auto dit = dossiers.find(text::normalize(key));
    if (dit == dossiers.end()) continue;
    auto kind = discover::parse_verdict(verdict);
    if (!kind) throw DataError("bad verdict in discovery gold: " + verdict);
    auto features = discover::extract_discovery_features(
        dit->second, linked_by_id, wd_idx, kb, emb, opts);
    std::vector<double> x;
    for (std::size_t c : cols) x.push_back(features[c]);
    out.entity.add(x, *kind == discover::Verdict::kNotEntity ? 0 : 1, dit->first);
    if (*kind != discover::Verdict::kNotEntity) {
      out.novelty.add(std::move(x),
                      *kind == discover::Verdict::kOutOfKb ? 1 : 0, dit->first);
    }
  }
  return out;
}

// Pairwise resolution dataset from (mention1, table1, mention2, table2, same).
inline learn::Dataset build_resolution_dataset(
    const std::vector<corpus::Table>& tables, const kb::KbSnapshot& kb,
    const std::map<std::string, link::LinkAssignment>& links,
    const resolve::MentionEmbeddings& memb,
    const std::vector<eval::ResolutionPair>& gold) {
  std::map<std::string, const corpus::Table*> table_by_id;
  for (const auto& t : tables) table_by_id[t.id] = &t;
  auto linked = detail::assemble_linked_tables(tables, links);
  std::map<std::string, const link::LinkedTable*> linked_by_id;
  for (const auto& lt : linked) linked_by_id[lt.table_id] = &lt;

  std::map<std::string, resolve::TableView> views;
  auto view_of = [&](const std::string& table_id) -> const resolve::TableView& {
    auto it = views.find(table_id);
    if (it == views.end()) {
      auto tit = table_by_id.find(table_id);
      if (tit == table_by_id.end()) throw DataError("unknown table in gold: " + table_id);
      it = views
               .emplace(table_id, resolve::TableView::make(
                                      *tit->second, *linked_by_id.at(table_id), kb))
               .first;
    }
    return it->second;
  };

  learn::Dataset ds;
  ds.schema = resolve::pair_feature_schema();
  for (const auto& p : gold) {
    const auto& v1 = view_of(p.table1);
    const auto& v2 = view_of(p.table2);
    std::string m1 = text::normalize(p.mention1);
    std::string m2 = text::normalize(p.mention2);
    std::string group = std::min(m1, m2) + "|" + std::max(m1, m2);
    ds.add(resolve::pair_features(m1, v1, m2, v2, memb), p.same ? 1 : 0,
           std::move(group));
  }
  return ds;
}

}  // namespace tabkb::pipeline
