// tabkb command-line tool: pipeline stages, model training, dataset-level
// train/predict/cv, and evaluation against gold standards.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tabkb/tabkb.hpp"

namespace {

using namespace tabkb;

struct StageArgs {
  std::string config_path;
  std::vector<std::string> overrides;
};

pipeline::PipelineConfig resolve_config(const StageArgs& args) {
  pipeline::PipelineConfig cfg = args.config_path.empty()
                                     ? pipeline::PipelineConfig{}
                                     : pipeline::PipelineConfig::load(args.config_path);
  for (const auto& kv : args.overrides) {
    std::size_t eq = kv.find('=');
    if (eq == std::string::npos) throw DataError("--set expects key=value, got: " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (cfg.output_dir.empty()) throw DataError("config is missing output_dir");
  std::filesystem::create_directories(cfg.output_dir);
  return cfg;
}

void add_stage_options(CLI::App* cmd, StageArgs& args) {
  cmd->add_option("--config", args.config_path, "pipeline config file");
  cmd->add_option("--set", args.overrides, "override a config key (key=value)")
      ->take_all();
}

void print_manifest_tail(const pipeline::RunManifest& manifest) {
  for (const auto& s : manifest.stages) {
    std::string counts;
    for (const auto& [k, v] : s.counts) {
      counts += " " + k + "=" + std::to_string(v);
    }
    std::fprintf(stderr, "stage %-14s %6.2fs%s\n", s.name.c_str(), s.seconds,
                 counts.c_str());
  }
}

learn::TrainConfig train_config_from(int trees, int max_depth, std::uint64_t seed) {
  learn::TrainConfig cfg;
  cfg.trees = trees;
  cfg.max_depth = max_depth;
  cfg.seed = seed;
  return cfg;
}

void report_cv(const learn::CvReport& report) {
  std::printf("%-12s %8s %8s\n", "metric", "mean", "std");
  for (const auto& [name, m] : report) {
    std::printf("%-12s %8.4f %8.4f\n", name.c_str(), m.mean, m.stddev);
  }
}

int run_cli(int argc, char** argv) {
  CLI::App app{"tabkb: match relational web tables against a KB snapshot and "
               "discover novel entities"};
  app.require_subcommand(1);

  // --- stage subcommands on a shared config ---
  StageArgs ingest_args, index_args, link_args, head_args, disc_args,
      resolve_args, run_args;

  auto* cmd_ingest =
      app.add_subcommand("ingest", "validate and normalize a corpus");
  add_stage_options(cmd_ingest, ingest_args);

  auto* cmd_index =
      app.add_subcommand("build-index", "build the candidate search index");
  add_stage_options(cmd_index, index_args);
  std::string search_fields_flag;
  cmd_index->add_option("--search-fields", search_fields_flag,
                        "title or title+content");

  auto* cmd_link = app.add_subcommand("link", "link core-column mentions");
  add_stage_options(cmd_link, link_args);
  std::optional<int> top_k_flag;
  std::optional<double> lambda_flag;
  cmd_link->add_option("--top-k", top_k_flag, "candidates per mention");
  cmd_link->add_option("--popularity-lambda", lambda_flag,
                       "popularity fusion weight");

  auto* cmd_head =
      app.add_subcommand("match-headings", "match headings to KB properties");
  add_stage_options(cmd_head, head_args);

  auto* cmd_disc =
      app.add_subcommand("discover", "classify unlinked mentions");
  add_stage_options(cmd_disc, disc_args);
  std::string wd_fields_flag, collapse_flag;
  std::optional<int> wd_topk_flag;
  cmd_disc->add_option("--wd-fields", wd_fields_flag, "title or title+content");
  cmd_disc->add_option("--wd-topk", wd_topk_flag, "top-k for the WD feature");
  cmd_disc->add_option("--collapse-identical-cores", collapse_flag, "on or off");

  auto* cmd_resolve =
      app.add_subcommand("resolve", "cluster novel mentions into entities");
  add_stage_options(cmd_resolve, resolve_args);
  std::optional<double> theta_flag;
  std::optional<int> m2v_dim, m2v_window, m2v_negatives, m2v_epochs, m2v_min_count;
  cmd_resolve->add_option("--theta", theta_flag, "type resolution threshold");
  cmd_resolve->add_option("--mention2vec-dim", m2v_dim);
  cmd_resolve->add_option("--mention2vec-window", m2v_window);
  cmd_resolve->add_option("--mention2vec-negatives", m2v_negatives);
  cmd_resolve->add_option("--mention2vec-epochs", m2v_epochs);
  cmd_resolve->add_option("--mention2vec-min-count", m2v_min_count);
  std::optional<std::uint64_t> m2v_seed;
  cmd_resolve->add_option("--mention2vec-seed", m2v_seed,
                          "overrides the derived seed");

  auto* cmd_run = app.add_subcommand("run", "run all pipeline stages");
  add_stage_options(cmd_run, run_args);

  // --- train ---
  auto* cmd_train = app.add_subcommand("train", "train a classifier");
  cmd_train->require_subcommand(1);
  struct TrainCommon {
    std::string corpus, kb_dir, embeddings, links, headings, memb, gold, out, data;
    int trees = 100, max_depth = 12;
    std::uint64_t seed = 42;
    std::string search_fields = "title+content";
    int top_k = 10;
    double popularity_lambda = 0.3;
    bool expand_type_vote = false;
    std::string wd_fields = "title";
    int wd_topk = 1;
    std::string collapse = "on";
    std::string families = "origin,saliency,semantic";
    std::string mode = "binary";
    int m2v_dim = 64, m2v_window = 5, m2v_negatives = 5, m2v_epochs = 5,
        m2v_min_count = 2;
  } tc;
  auto add_learner_options = [&](CLI::App* cmd) {
    cmd->add_option("--trees", tc.trees);
    cmd->add_option("--max-depth", tc.max_depth);
    cmd->add_option("--seed", tc.seed);
    cmd->add_option("--out", tc.out, "model output path")->required();
    cmd->add_option("--gold", tc.gold, "gold standard CSV")->required();
  };

  auto* cmd_train_link = cmd_train->add_subcommand("link");
  cmd_train_link->add_option("--corpus", tc.corpus)->required();
  cmd_train_link->add_option("--kb", tc.kb_dir)->required();
  cmd_train_link->add_option("--embeddings", tc.embeddings)->required();
  cmd_train_link->add_option("--search-fields", tc.search_fields);
  cmd_train_link->add_option("--top-k", tc.top_k);
  cmd_train_link->add_option("--popularity-lambda", tc.popularity_lambda);
  cmd_train_link->add_flag("--expand-type-vote", tc.expand_type_vote);
  add_learner_options(cmd_train_link);

  auto* cmd_train_head = cmd_train->add_subcommand("headings");
  cmd_train_head->add_option("--corpus", tc.corpus)->required();
  cmd_train_head->add_option("--kb", tc.kb_dir)->required();
  cmd_train_head->add_option("--links", tc.links)->required();
  add_learner_options(cmd_train_head);

  auto* cmd_train_disc = cmd_train->add_subcommand("discover");
  cmd_train_disc->add_option("--corpus", tc.corpus)->required();
  cmd_train_disc->add_option("--kb", tc.kb_dir)->required();
  cmd_train_disc->add_option("--links", tc.links)->required();
  cmd_train_disc->add_option("--headings", tc.headings)->required();
  cmd_train_disc->add_option("--embeddings", tc.embeddings)->required();
  cmd_train_disc->add_option("--families", tc.families,
                             "comma-separated feature families");
  cmd_train_disc->add_option("--mode", tc.mode, "binary or three-class");
  cmd_train_disc->add_option("--wd-fields", tc.wd_fields);
  cmd_train_disc->add_option("--wd-topk", tc.wd_topk);
  cmd_train_disc->add_option("--collapse-identical-cores", tc.collapse);
  add_learner_options(cmd_train_disc);

  auto* cmd_train_resolve = cmd_train->add_subcommand("resolve");
  cmd_train_resolve->add_option("--corpus", tc.corpus)->required();
  cmd_train_resolve->add_option("--kb", tc.kb_dir)->required();
  cmd_train_resolve->add_option("--links", tc.links)->required();
  cmd_train_resolve->add_option("--memb", tc.memb,
                                "mention embeddings file (trained when absent)");
  cmd_train_resolve->add_option("--mention2vec-dim", tc.m2v_dim);
  cmd_train_resolve->add_option("--mention2vec-window", tc.m2v_window);
  cmd_train_resolve->add_option("--mention2vec-negatives", tc.m2v_negatives);
  cmd_train_resolve->add_option("--mention2vec-epochs", tc.m2v_epochs);
  cmd_train_resolve->add_option("--mention2vec-min-count", tc.m2v_min_count);
  add_learner_options(cmd_train_resolve);

  auto* cmd_train_data = cmd_train->add_subcommand(
      "dataset", "train from a feature TSV (header row, final column = label)");
  cmd_train_data->add_option("--data", tc.data)->required();
  cmd_train_data->add_option("--trees", tc.trees);
  cmd_train_data->add_option("--max-depth", tc.max_depth);
  cmd_train_data->add_option("--seed", tc.seed);
  cmd_train_data->add_option("--out", tc.out)->required();

  // --- predict / cv ---
  std::string predict_model, predict_data, predict_out;
  auto* cmd_predict = app.add_subcommand("predict", "predict a dataset TSV");
  cmd_predict->add_option("--model", predict_model)->required();
  cmd_predict->add_option("--data", predict_data)->required();
  cmd_predict->add_option("--out", predict_out, "output TSV (default stdout)");

  std::string cv_data;
  int cv_folds = 5;
  int cv_trees = 100, cv_max_depth = 12;
  std::uint64_t cv_seed = 42;
  auto* cmd_cv = app.add_subcommand("cv", "cross-validate a dataset TSV");
  cmd_cv->add_option("--data", cv_data)->required();
  cmd_cv->add_option("--folds", cv_folds);
  cmd_cv->add_option("--trees", cv_trees);
  cmd_cv->add_option("--max-depth", cv_max_depth);
  cmd_cv->add_option("--seed", cv_seed);

  // --- eval ---
  auto* cmd_eval = app.add_subcommand("eval", "evaluate against a gold standard");
  cmd_eval->require_subcommand(1);
  struct EvalCommon {
    std::string gold, pred, out, corpus, kb_dir, links, model, memb;
    double threshold = resolve::kEmbeddingThreshold;
  } ec;
  auto* cmd_eval_link = cmd_eval->add_subcommand("link");
  cmd_eval_link->add_option("--gold", ec.gold)->required();
  cmd_eval_link->add_option("--pred", ec.pred, "links TSV")->required();
  cmd_eval_link->add_option("--out", ec.out, "JSON report path");
  auto* cmd_eval_head = cmd_eval->add_subcommand("headings");
  cmd_eval_head->add_option("--gold", ec.gold)->required();
  cmd_eval_head->add_option("--pred", ec.pred, "headings TSV")->required();
  cmd_eval_head->add_option("--out", ec.out, "JSON report path");
  auto* cmd_eval_disc = cmd_eval->add_subcommand("discover");
  cmd_eval_disc->add_option("--gold", ec.gold)->required();
  cmd_eval_disc->add_option("--pred", ec.pred, "discovery TSV")->required();
  cmd_eval_disc->add_option("--out", ec.out, "JSON report path");
  auto* cmd_eval_resolve = cmd_eval->add_subcommand("resolve");
  cmd_eval_resolve->add_option("--gold", ec.gold)->required();
  cmd_eval_resolve->add_option("--corpus", ec.corpus)->required();
  cmd_eval_resolve->add_option("--kb", ec.kb_dir)->required();
  cmd_eval_resolve->add_option("--links", ec.links)->required();
  cmd_eval_resolve->add_option("--memb", ec.memb)->required();
  cmd_eval_resolve->add_option("--model", ec.model,
                               "pair model (embedding threshold mode when absent)");
  cmd_eval_resolve->add_option("--threshold", ec.threshold);
  cmd_eval_resolve->add_option("--out", ec.out, "JSON report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // usage problems exit with 1; --help and --version exit with 0
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  // --- stage dispatch ---
  if (*cmd_ingest) {
    auto cfg = resolve_config(ingest_args);
    pipeline::RunManifest manifest;
    pipeline::stage_ingest(cfg, manifest);
    print_manifest_tail(manifest);
    return 0;
  }
  if (*cmd_index) {
    auto cfg = resolve_config(index_args);
    if (!search_fields_flag.empty()) cfg.search_fields = search_fields_flag;
    pipeline::RunManifest manifest;
    pipeline::stage_build_index(cfg, manifest);
    print_manifest_tail(manifest);
    return 0;
  }
  if (*cmd_link) {
    auto cfg = resolve_config(link_args);
    if (top_k_flag) cfg.top_k = *top_k_flag;
    if (lambda_flag) cfg.popularity_lambda = *lambda_flag;
    pipeline::RunManifest manifest;
    pipeline::stage_link(cfg, manifest);
    print_manifest_tail(manifest);
    return 0;
  }
  if (*cmd_head) {
    auto cfg = resolve_config(head_args);
    pipeline::RunManifest manifest;
    pipeline::stage_match_headings(cfg, manifest);
    print_manifest_tail(manifest);
    return 0;
  }
  if (*cmd_disc) {
    auto cfg = resolve_config(disc_args);
    if (!wd_fields_flag.empty()) cfg.wd_fields = wd_fields_flag;
    if (wd_topk_flag) cfg.wd_top_k = *wd_topk_flag;
    if (!collapse_flag.empty())
      cfg.collapse_identical_cores = pipeline::detail::parse_bool(collapse_flag);
    pipeline::RunManifest manifest;
    pipeline::stage_discover(cfg, manifest);
    print_manifest_tail(manifest);
    return 0;
  }
  if (*cmd_resolve) {
    auto cfg = resolve_config(resolve_args);
    if (theta_flag) cfg.theta = *theta_flag;
    if (m2v_dim) cfg.m2v_dim = *m2v_dim;
    if (m2v_window) cfg.m2v_window = *m2v_window;
    if (m2v_negatives) cfg.m2v_negatives = *m2v_negatives;
    if (m2v_epochs) cfg.m2v_epochs = *m2v_epochs;
    if (m2v_min_count) cfg.m2v_min_count = *m2v_min_count;
    if (m2v_seed) cfg.m2v_seed = *m2v_seed;
    pipeline::RunManifest manifest;
    pipeline::stage_resolve(cfg, manifest);
    print_manifest_tail(manifest);
    return 0;
  }
  if (*cmd_run) {
    auto cfg = resolve_config(run_args);
    auto manifest = pipeline::run_pipeline(cfg);
    print_manifest_tail(manifest);
    std::printf("%s\n", cfg.out("manifest.json").c_str());
    return 0;
  }

  // --- train dispatch ---
  if (*cmd_train) {
    auto cfg = train_config_from(tc.trees, tc.max_depth, tc.seed);
    if (*cmd_train_link) {
      auto tables = corpus::load_corpus(tc.corpus);
      auto kb = kb::KbSnapshot::load(kb::KbPaths::in_dir(tc.kb_dir));
      auto emb = sim::TermEmbeddings::load(tc.embeddings);
      auto idx = retrieve::SearchIndex::build(
          kb, retrieve::parse_fields(tc.search_fields));
      auto gold = eval::load_link_gold(tc.gold);
      auto ds = pipeline::build_link_dataset(
          tables, kb, idx, emb, gold, {tc.top_k, tc.popularity_lambda},
          tc.expand_type_vote);
      learn::train(ds, cfg).save(tc.out);
    } else if (*cmd_train_head) {
      auto tables = corpus::load_corpus(tc.corpus);
      auto kb = kb::KbSnapshot::load(kb::KbPaths::in_dir(tc.kb_dir));
      auto links = link::load_links(tc.links);
      auto gold = eval::load_heading_gold(tc.gold);
      auto ds = pipeline::build_heading_dataset(tables, kb, links, gold);
      learn::train(ds, cfg).save(tc.out);
    } else if (*cmd_train_disc) {
      auto tables = corpus::load_corpus(tc.corpus);
      auto kb = kb::KbSnapshot::load(kb::KbPaths::in_dir(tc.kb_dir));
      auto links = link::load_links(tc.links);
      auto headings = headmatch::load_heading_matches(tc.headings);
      auto emb = sim::TermEmbeddings::load(tc.embeddings);
      auto wd_idx =
          retrieve::SearchIndex::build(kb, retrieve::parse_fields(tc.wd_fields));
      auto gold = eval::load_discovery_gold(tc.gold);
      std::vector<std::string> names;
      for (const auto& fam : {"origin", "saliency", "semantic", "temporal"}) {
        if (tc.families.find(fam) == std::string::npos) continue;
        for (auto& n : discover::feature_family(fam)) names.push_back(n);
      }
      if (names.empty()) throw DataError("no feature families selected");
      discover::DiscoverOptions opts{pipeline::detail::parse_bool(tc.collapse),
                                     tc.wd_topk};
      auto datasets = pipeline::build_discovery_datasets(
          tables, kb, links, headings, emb, wd_idx, gold, opts, names);
      if (tc.mode == "three-class") {
        nlohmann::ordered_json j;
        j["format"] = "tabkb.model3";
        j["version"] = 1;
        learn::TrainConfig entity_cfg = cfg;
        entity_cfg.seed = derive_seed(cfg.seed, "entity");
        j["entity"] = learn::train(datasets.entity, entity_cfg).to_json();
        j["novelty"] = learn::train(datasets.novelty, cfg).to_json();
        write_text_file(tc.out, j.dump() + "\n");
      } else {
        learn::train(datasets.novelty, cfg).save(tc.out);
      }
    } else if (*cmd_train_resolve) {
      auto tables = corpus::load_corpus(tc.corpus);
      auto kb = kb::KbSnapshot::load(kb::KbPaths::in_dir(tc.kb_dir));
      auto links = link::load_links(tc.links);
      resolve::MentionEmbeddings memb;
      if (!tc.memb.empty()) {
        memb = resolve::MentionEmbeddings::load(tc.memb);
      } else {
        resolve::Mention2vecConfig mc;
        mc.dimension = tc.m2v_dim;
        mc.window = tc.m2v_window;
        mc.negatives = tc.m2v_negatives;
        mc.epochs = tc.m2v_epochs;
        mc.min_count = tc.m2v_min_count;
        mc.seed = derive_seed(tc.seed, "mention2vec");
        memb = resolve::train_mention_embeddings(tables, mc);
      }
      auto gold = eval::load_resolution_gold(tc.gold);
      auto ds = pipeline::build_resolution_dataset(tables, kb, links, memb, gold);
      learn::train(ds, cfg).save(tc.out);
    } else if (*cmd_train_data) {
      auto ds = learn::Dataset::load_tsv(tc.data);
      learn::train(ds, cfg).save(tc.out);
    }
    return 0;
  }

  if (*cmd_predict) {
    auto model = learn::TreeEnsembleModel::load(predict_model);
    auto ds = learn::Dataset::load_tsv(predict_data);
    if (ds.schema != model.schema) {
      throw DataError("dataset schema does not match the model schema");
    }
    std::string out = "label\tscore\n";
    for (const auto& e : ds.examples) {
      auto p = model.predict(e.x);
      out += std::to_string(p.label) + "\t" + fmt_fixed(p.score, 6) + "\n";
    }
    if (predict_out.empty()) {
      std::fputs(out.c_str(), stdout);
    } else {
      write_text_file(predict_out, out);
    }
    return 0;
  }

  if (*cmd_cv) {
    auto ds = learn::Dataset::load_tsv(cv_data);
    report_cv(learn::cross_validate(
        ds, cv_folds, train_config_from(cv_trees, cv_max_depth, cv_seed)));
    return 0;
  }

  // --- eval dispatch ---
  if (*cmd_eval) {
    auto write_report = [&](const nlohmann::ordered_json& j) {
      if (!ec.out.empty()) write_text_file(ec.out, j.dump(2) + "\n");
    };
    if (*cmd_eval_link || *cmd_eval_head) {
      auto gold = *cmd_eval_link ? eval::load_link_gold(ec.gold)
                                 : eval::load_heading_gold(ec.gold);
      eval::ItemsByTable pred;
      std::ifstream in(ec.pred, std::ios::binary);
      if (!in) throw DataError("cannot open predictions: " + ec.pred);
      std::string line;
      while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto f = kb::detail::split_tsv(line);
        if (f.size() != 5) throw DataError(ec.pred + ": expected 5 fields");
        pred[f[0]].insert(f[1] + "|" + f[3]);
      }
      auto rep = eval::macro_prf(gold, pred);
      std::fputs(eval::prf_to_text(rep).c_str(), stdout);
      write_report(eval::prf_to_json(rep));
    } else if (*cmd_eval_disc) {
      auto gold = eval::load_discovery_gold(ec.gold);
      std::map<std::string, std::string> gold_norm;
      for (const auto& [k, v] : gold) gold_norm[text::normalize(k)] = v;
      std::map<std::string, std::string> pred;
      for (const auto& row : discover::load_discovery(ec.pred)) {
        pred[row.key] = discover::verdict_name(row.verdict.kind);
      }
      double acc = eval::accuracy(gold_norm, pred);
      std::printf("accuracy    %.4f (%zu gold mentions)\n", acc, gold_norm.size());
      write_report({{"accuracy", acc}, {"gold", gold_norm.size()}});
    } else if (*cmd_eval_resolve) {
      auto tables = corpus::load_corpus(ec.corpus);
      auto kb = kb::KbSnapshot::load(kb::KbPaths::in_dir(ec.kb_dir));
      auto links = link::load_links(ec.links);
      auto memb = resolve::MentionEmbeddings::load(ec.memb);
      auto gold = eval::load_resolution_gold(ec.gold);
      std::optional<learn::TreeEnsembleModel> model;
      if (!ec.model.empty()) model = learn::TreeEnsembleModel::load(ec.model);
      auto ds = pipeline::build_resolution_dataset(tables, kb, links, memb, gold);
      std::size_t correct = 0;
      for (std::size_t i = 0; i < gold.size(); ++i) {
        bool same;
        if (model) {
          same = model->predict(ds.examples[i].x).label == 1;
        } else {
          same = ds.examples[i].x[4] >= ec.threshold;  // mention2vec cosine
        }
        if (same == gold[i].same) ++correct;
      }
      double acc = gold.empty() ? 0.0
                                : static_cast<double>(correct) /
                                      static_cast<double>(gold.size());
      std::printf("accuracy    %.4f (%zu gold pairs)\n", acc, gold.size());
      write_report({{"accuracy", acc}, {"gold", gold.size()}});
    }
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const tabkb::DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 3;
  }
}
