// Deterministic benchmark world for the acceptance suite: a 40-table corpus
// over a 300-entity snapshot where the gold links, heading matches, verdicts
// and resolution pairs are recoverable by construction.
//
// Per domain (cities, companies, football clubs, films), each of 10 tables
// carries 7 rows whose core cells are exact entity labels (gold links), one
// typo of a known label (gold in-KB alias), and two slots holding novel
// entities, noise strings, or a cross-domain ambiguous mention.
#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tabkb/corpus.hpp"
#include "tabkb/eval.hpp"
#include "tabkb/text.hpp"

namespace fixture {

struct World {
  std::string root;
  std::string corpus_path;
  std::string kb_dir;
  std::string embeddings_path;
  std::string link_gold_csv;
  std::string heading_gold_csv;
  std::string discovery_gold_csv;
  std::string resolution_gold_csv;

  tabkb::eval::ItemsByTable link_gold;
  tabkb::eval::ItemsByTable heading_gold;
  std::map<std::string, std::string> discovery_gold;   // normalized key -> verdict
  std::map<std::string, std::string> discovery_style;  // normalized key -> stratum
  std::vector<tabkb::eval::ResolutionPair> resolution_gold;
  std::vector<std::string> resolution_style;           // stratum per pair

  std::vector<std::string> train_tables;  // per-domain tables 0..7
  std::vector<std::string> test_tables;   // per-domain tables 8..9
};

namespace detail {

inline std::string cap(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

inline std::string csv_field(const std::string& s) {
  if (s.find(',') == std::string::npos && s.find('"') == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

struct TokenSpace {
  tabkb::SplitMix64& rng;
  std::set<std::string> used;

  std::string fresh(const std::vector<std::string>& bank) {
    while (true) {
      std::string t = bank[rng.next_below(bank.size())] + bank[rng.next_below(bank.size())];
      if (rng.next_below(2) == 0) t += bank[rng.next_below(bank.size())];
      if (used.insert(t).second) return t;
    }
  }
};

}  // namespace detail

inline World build(const std::string& root, std::uint64_t seed = 7) {
  namespace fs = std::filesystem;
  using tabkb::SplitMix64;
  using detail::cap;

  World world;
  world.root = root;
  world.kb_dir = root + "/kb";
  fs::create_directories(world.kb_dir);
  world.corpus_path = root + "/corpus.jsonl";
  world.embeddings_path = root + "/embeddings.txt";
  world.link_gold_csv = root + "/link_gold.csv";
  world.heading_gold_csv = root + "/heading_gold.csv";
  world.discovery_gold_csv = root + "/discovery_gold.csv";
  world.resolution_gold_csv = root + "/resolution_gold.csv";

  SplitMix64 rng(seed);
  detail::TokenSpace tokens{rng, {}};

  const std::vector<std::string> kb_bank = {
      "bar", "zen", "vol", "qua", "mer", "tol", "rin", "sav", "dor", "lex",
      "pin", "gor", "nel", "tam", "ruv", "kel", "osh", "ban", "cru", "ven"};
  const std::vector<std::string> fresh_bank = {
      "zyq", "xol", "qev", "vyx", "wur", "jyn", "kex", "zaf", "yqo", "xim",
      "quv", "zyr"};

  // token -> embedding cluster (0..3 = domains, 4 = novel vocabulary)
  std::map<std::string, int> token_cluster;
  auto claim_tokens = [&](const std::string& txt, int cluster) {
    for (const auto& tok : tabkb::text::terms(txt)) {
      token_cluster.emplace(tok, cluster);
    }
  };

  struct DomainSpec {
    std::string noun;          // "city"
    std::string type_id;       // "City"
    std::string core_heading;  // core column heading
    std::vector<std::string> heading_props;  // columns 1..3
    std::string distractor_prop;             // triples only
    std::vector<std::string> label_suffixes;
    std::string novel_suffix;  // second surface variant marker
  };
  const std::vector<DomainSpec> domains = {
      {"city", "City", "city",
       {"population", "founded", "country"}, "elevation",
       {"Falls", "Harbor", "Ridge", "Heights", "Crossing"}, "township"},
      {"company", "Company", "company",
       {"revenue", "founded", "industry"}, "employees",
       {"Industries", "Systems", "Holdings", "Labs", "Logistics"}, "inc"},
      {"club", "SoccerClub", "club",
       {"capacity", "founded", "stadium"}, "attendance",
       {"United", "Rovers", "Athletic", "Wanderers", "Albion"}, "fc"},
      {"film", "Film", "film",
       {"runtime", "released", "director"}, "budget",
       {"Voyage", "Affair", "Chronicle", "Horizon", "Legacy"}, "ii"},
  };

  const std::vector<std::string> countries = {
      "Arvadia", "Belmora", "Costara", "Durnland",
      "Elvenia", "Fornexia", "Galdora", "Hestria"};
  const std::vector<std::string> industries = {
      "machinery", "software", "textiles", "logistics",
      "chemicals", "robotics", "publishing", "mining"};
  const std::vector<std::string> first_names = {
      "Aldo", "Mira", "Tomas", "Petra", "Ivan", "Sela", "Rodo", "Anya"};

  // --- entities -------------------------------------------------------
  struct Entity {
    std::string id;
    std::string label;
    double popularity;
    std::string description;
    std::map<std::string, std::string> values;  // property -> object
  };
  std::vector<std::vector<Entity>> pool(domains.size());

  auto make_values = [&](std::size_t d) {
    std::map<std::string, std::string> v;
    switch (d) {
      case 0:
        v["population"] = std::to_string(3000 + rng.next_below(970000));
        v["founded"] = std::to_string(1200 + rng.next_below(700));
        v["country"] = countries[rng.next_below(countries.size())];
        v["elevation"] = std::to_string(1 + rng.next_below(950));
        break;
      case 1:
        v["revenue"] = tabkb::fmt_fixed((15.0 + static_cast<double>(rng.next_below(9980))) / 10.0, 1);
        v["founded"] = std::to_string(1900 + rng.next_below(90));
        v["industry"] = industries[rng.next_below(industries.size())];
        v["employees"] = std::to_string(100000 + rng.next_below(800000));
        break;
      case 2:
        v["capacity"] = std::to_string(3000 + rng.next_below(82000));
        v["founded"] = std::to_string(1880 + rng.next_below(100));
        v["stadium"] = cap(tokens.fresh(kb_bank)) + " " +
                       std::vector<std::string>{"Arena", "Park", "Grounds"}
                           [rng.next_below(3)];
        v["attendance"] = std::to_string(50 + rng.next_below(450));
        break;
      default:
        v["runtime"] = std::to_string(60 + rng.next_below(180));
        v["released"] = std::to_string(1950 + rng.next_below(65));
        v["director"] = first_names[rng.next_below(first_names.size())] + " " +
                        cap(tokens.fresh(kb_bank));
        v["budget"] = std::to_string(1000000 + rng.next_below(89000000));
        break;
    }
    return v;
  };

  std::string entities_tsv, types_tsv, surface_tsv, triples_tsv;
  int entity_counter = 0;
  for (std::size_t d = 0; d < domains.size(); ++d) {
    for (int i = 0; i < 75; ++i) {
      Entity e;
      ++entity_counter;
      char idbuf[16];
      std::snprintf(idbuf, sizeof(idbuf), "E%03d", entity_counter);
      e.id = idbuf;
      e.label = cap(tokens.fresh(kb_bank)) + " " +
                domains[d].label_suffixes[static_cast<std::size_t>(i) % 5];
      e.popularity = static_cast<double>(1 + rng.next_below(999));
      std::string region = cap(tokens.fresh(kb_bank));
      e.description = e.label + " is a " + domains[d].noun + " from the " +
                      region + " region";
      e.values = make_values(d);
      claim_tokens(e.label, static_cast<int>(d));
      claim_tokens(e.description, static_cast<int>(d));

      entities_tsv += e.id + "\t" + e.label + "\t" +
                      tabkb::fmt_fixed(e.popularity, 0) + "\t" + e.description + "\n";
      types_tsv += e.id + "\t" + domains[d].type_id + "\n";
      if (i % 5 == 0) {
        surface_tsv += tabkb::text::terms(e.label)[0] + "\t" + e.id + "\n";
      }
      for (const auto& [prop, value] : e.values) {
        triples_tsv += e.id + "\t" + prop + "\t" + value + "\n";
      }
      pool[d].push_back(std::move(e));
    }
  }

  tabkb::write_text_file(world.kb_dir + "/entities.tsv", entities_tsv);
  tabkb::write_text_file(world.kb_dir + "/types.tsv", types_tsv);
  tabkb::write_text_file(world.kb_dir + "/surface_forms.tsv", surface_tsv);
  tabkb::write_text_file(world.kb_dir + "/triples.tsv", triples_tsv);
  tabkb::write_text_file(world.kb_dir + "/type_hierarchy.tsv",
                         "Thing\t\n"
                         "Place\tThing\n"
                         "Settlement\tPlace\n"
                         "City\tSettlement\n"
                         "Organisation\tThing\n"
                         "Company\tOrganisation\n"
                         "SportsTeam\tOrganisation\n"
                         "SoccerClub\tSportsTeam\n"
                         "Work\tThing\n"
                         "Film\tWork\n");
  for (std::size_t d = 0; d < domains.size(); ++d) {
    claim_tokens(domains[d].type_id, static_cast<int>(d));
    claim_tokens(domains[d].noun, static_cast<int>(d));
  }

  // --- novel entities ---------------------------------------------------
  struct Novel {
    std::vector<std::string> variants;  // raw surfaces
    std::vector<int> hosts;             // table index within the domain
    bool shares_token = false;          // sibling pairs share a first token
    bool common_suffix = false;         // carries a KB-suffix token
  };
  const std::vector<std::vector<int>> host_pattern = {
      {0, 3, 6}, {1, 4, 7}, {2, 5, 8}, {3, 6, 9}, {0, 1, 2}, {7, 8, 9}};

  std::vector<std::vector<Novel>> novels(domains.size());
  for (std::size_t d = 0; d < domains.size(); ++d) {
    std::string sibling_token;
    for (int i = 0; i < 6; ++i) {
      Novel n;
      n.hosts = host_pattern[static_cast<std::size_t>(i)];
      if (d == 1 && i == 4) {
        n.variants = {"Trustees Of Boston University"};
      } else if (d == 1 && i == 5) {
        n.variants = {"Trustees Of Boston"};
      } else if (i % 3 == 0) {
        // one familiar suffix token, so retrieval finds weak neighbours
        std::string base = cap(tokens.fresh(fresh_bank)) + " " +
                           domains[d].label_suffixes[0];
        n.variants = {base};
        n.common_suffix = true;
      } else {
        std::string t1 = (i == 3 && !sibling_token.empty())
                             ? sibling_token
                             : tokens.fresh(fresh_bank);
        if (i == 2) sibling_token = t1;
        n.shares_token = (i == 3);
        std::string base = cap(t1) + " " + cap(tokens.fresh(fresh_bank));
        n.variants = {base, base + " " + domains[d].novel_suffix};
      }
      for (const auto& v : n.variants) claim_tokens(v, 4);
      novels[d].push_back(std::move(n));
    }
  }

  // --- typo aliases -------------------------------------------------------
  auto typo_of = [](const std::string& label, int variant) {
    auto words = tabkb::text::terms(label);  // lowercase; re-capitalize below
    std::string w = words.back();
    if (variant == 0 && w.size() > 2) {
      w.erase(w.size() - 2, 1);  // drop a character
    } else if (variant == 1) {
      w.insert(w.size() / 2, 1, w[w.size() / 2]);  // double a character
    } else if (w.size() > 1) {
      std::swap(w[w.size() - 1], w[w.size() - 2]);  // adjacent transposition
    }
    std::string out;
    for (std::size_t i = 0; i + 1 < words.size(); ++i) {
      out += cap(words[i]);
      out += ' ';
    }
    out += cap(w);
    return out;
  };

  // --- tables ---------------------------------------------------------
  struct Fill {
    std::string mention;
    std::string verdict;  // discovery gold class
    std::string style;
  };
  std::map<std::pair<std::size_t, int>, std::vector<Fill>> extra_fills;
  extra_fills[{0, 4}].push_back({"1,234.5", "not_entity", "noise"});
  extra_fills[{0, 5}].push_back({"Vrexal Zanor", "out_of_kb", "shared"});
  extra_fills[{1, 4}].push_back({"12/31/2013", "not_entity", "noise"});
  extra_fills[{1, 5}].push_back({"Vrexal Zanor", "out_of_kb", "shared"});
  extra_fills[{2, 4}].push_back({"42", "not_entity", "noise"});
  extra_fills[{2, 5}].push_back({"March 3, 2012", "not_entity", "noise"});
  extra_fills[{3, 4}].push_back({"-7.25", "not_entity", "noise"});
  extra_fills[{3, 5}].push_back({"info@zyrqev.com", "not_entity", "noise"});
  claim_tokens("Vrexal Zanor", 4);

  std::string corpus_jsonl;
  std::string link_gold_csv = "table_id,row_index,entity_id\n";
  std::string heading_gold_csv = "table_id,column_index,property_id\n";

  auto add_discovery_gold = [&](const std::string& mention,
                                const std::string& verdict,
                                const std::string& style) {
    std::string key = tabkb::text::normalize(mention);
    world.discovery_gold[key] = verdict;
    world.discovery_style[key] = style;
  };

  // surface used by novel i at its h-th host (0,1,0 over the variants)
  auto novel_surface = [&](const Novel& n, std::size_t host_ordinal) {
    if (n.variants.size() == 1) return n.variants[0];
    return n.variants[host_ordinal % 2];
  };

  std::map<std::pair<std::size_t, int>, std::string> table_ids;
  for (std::size_t d = 0; d < domains.size(); ++d) {
    for (int k = 0; k < 10; ++k) {
      char idbuf[32];
      std::snprintf(idbuf, sizeof(idbuf), "%s_%02d", domains[d].noun.c_str(), k);
      table_ids[{d, k}] = idbuf;
      if (k < 8) {
        world.train_tables.push_back(idbuf);
      } else {
        world.test_tables.push_back(idbuf);
      }
    }
  }

  for (std::size_t d = 0; d < domains.size(); ++d) {
    const auto& spec = domains[d];
    for (int k = 0; k < 10; ++k) {
      const std::string table_id = table_ids[{d, k}];

      struct Row {
        std::string mention;
        std::map<std::string, std::string> values;
        std::string gold_entity;  // empty for unlinked rows
      };
      std::vector<Row> rows;

      for (int j = 0; j < 7; ++j) {
        const Entity& e = pool[d][static_cast<std::size_t>((4 * k + j) % 75)];
        rows.push_back({e.label, e.values, e.id});
      }
      {
        const Entity& target = pool[d][static_cast<std::size_t>(50 + k % 5)];
        std::string mention = typo_of(target.label, (50 + k % 5) % 3);
        rows.push_back({mention, target.values, ""});
        add_discovery_gold(mention, "in_kb", "typo");
        claim_tokens(mention, static_cast<int>(d));
      }
      for (std::size_t i = 0; i < novels[d].size(); ++i) {
        const Novel& n = novels[d][i];
        auto hit = std::find(n.hosts.begin(), n.hosts.end(), k);
        if (hit == n.hosts.end()) continue;
        std::string surface =
            novel_surface(n, static_cast<std::size_t>(hit - n.hosts.begin()));
        rows.push_back({surface, make_values(d), ""});
        add_discovery_gold(surface, "out_of_kb",
                           n.common_suffix ? "novel_suffix" : "novel_fresh");
      }
      auto fit = extra_fills.find({d, k});
      if (fit != extra_fills.end()) {
        for (const auto& fill : fit->second) {
          rows.push_back({fill.mention, make_values(d), ""});
          add_discovery_gold(fill.mention, fill.verdict, fill.style);
        }
      }

      // deterministic shuffle fixes the final row indices
      for (std::size_t i = rows.size(); i > 1; --i) {
        std::swap(rows[i - 1], rows[rng.next_below(i)]);
      }

      std::vector<std::string> headings = {spec.core_heading};
      for (const auto& p : spec.heading_props) headings.push_back(p);
      if (k == 4) headings[1] = headings[1] + " total";

      tabkb::corpus::Table t;
      t.id = table_id;
      t.headings = headings;
      t.core_column_index = 0;
      for (const auto& row : rows) {
        std::vector<std::string> cells = {row.mention};
        for (const auto& p : spec.heading_props) {
          auto vit = row.values.find(p);
          cells.push_back(vit == row.values.end() ? "" : vit->second);
        }
        t.rows.push_back(std::move(cells));
      }
      t.context.page_title = cap(spec.noun) + " register " + std::to_string(k);
      t.context.caption = "list of " + spec.noun + " records volume " + std::to_string(k);
      t.context.surrounding_text =
          "public registry of " + spec.noun + " entries compiled for volume " +
          std::to_string(k);
      t.context.last_edit_year = 2010 + (3 * k + static_cast<int>(d)) % 9;

      corpus_jsonl += tabkb::corpus::serialize_table(t);
      corpus_jsonl += '\n';

      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].gold_entity.empty()) continue;
        link_gold_csv += detail::csv_field(table_id) + "," + std::to_string(r) +
                         "," + rows[r].gold_entity + "\n";
        world.link_gold[table_id].insert(std::to_string(r) + "|" + rows[r].gold_entity);
      }
      for (std::size_t c = 0; c < spec.heading_props.size(); ++c) {
        heading_gold_csv += detail::csv_field(table_id) + "," +
                            std::to_string(c + 1) + "," + spec.heading_props[c] + "\n";
        world.heading_gold[table_id].insert(std::to_string(c + 1) + "|" +
                                            spec.heading_props[c]);
      }
    }
  }
  tabkb::write_text_file(world.corpus_path, corpus_jsonl);
  tabkb::write_text_file(world.link_gold_csv, link_gold_csv);
  tabkb::write_text_file(world.heading_gold_csv, heading_gold_csv);

  // --- resolution gold ----------------------------------------------------
  auto add_pair = [&](const std::string& m1, std::size_t d1, int k1,
                      const std::string& m2, std::size_t d2, int k2, bool same,
                      const std::string& style) {
    world.resolution_gold.push_back(
        {m1, table_ids[{d1, k1}], m2, table_ids[{d2, k2}], same});
    world.resolution_style.push_back(style);
  };
  for (std::size_t d = 0; d < domains.size(); ++d) {
    for (const auto& n : novels[d]) {
      const std::string s0 = novel_surface(n, 0);
      const std::string s1 = novel_surface(n, 1);
      const std::string s2 = novel_surface(n, 2);
      add_pair(s0, d, n.hosts[0], s1, d, n.hosts[1], true,
               s0 == s1 ? "pos_same" : "pos_variant");
      add_pair(s1, d, n.hosts[1], s2, d, n.hosts[2], true,
               s1 == s2 ? "pos_same" : "pos_variant");
      add_pair(s0, d, n.hosts[0], s2, d, n.hosts[2], true, "pos_same");
    }
    for (auto [i, j] : std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {2, 3}, {0, 2}}) {
      const Novel& a = novels[d][static_cast<std::size_t>(i)];
      const Novel& b = novels[d][static_cast<std::size_t>(j)];
      add_pair(novel_surface(a, 0), d, a.hosts[0], novel_surface(b, 0), d,
               b.hosts[0], false,
               (i == 2 && j == 3) ? "neg_sibling" : "neg_domain");
    }
    const Novel& a = novels[d][0];
    const Novel& b = novels[(d + 1) % domains.size()][0];
    add_pair(novel_surface(a, 0), d, a.hosts[0], novel_surface(b, 0),
             (d + 1) % domains.size(), b.hosts[0], false, "neg_cross");
  }
  add_pair(novels[1][4].variants[0], 1, novels[1][4].hosts[0],
           novels[1][5].variants[0], 1, novels[1][5].hosts[0], false,
           "neg_nearmiss");
  add_pair("Vrexal Zanor", 0, 5, "Vrexal Zanor", 1, 5, false, "neg_samekey");

  std::string resolution_csv = "mention1,table1,mention2,table2,same\n";
  for (const auto& p : world.resolution_gold) {
    resolution_csv += detail::csv_field(p.mention1) + "," + p.table1 + "," +
                      detail::csv_field(p.mention2) + "," + p.table2 + "," +
                      (p.same ? "1" : "0") + "\n";
  }
  tabkb::write_text_file(world.resolution_gold_csv, resolution_csv);

  std::string discovery_csv = "mention,verdict\n";
  for (const auto& [key, verdict] : world.discovery_gold) {
    discovery_csv += detail::csv_field(key) + "," + verdict + "\n";
  }
  tabkb::write_text_file(world.discovery_gold_csv, discovery_csv);

  // --- term embeddings ------------------------------------------------
  // Clustered unit vectors: one axis per domain plus a novel-vocabulary
  // axis, with a per-token jitter. Typo tokens sit next to their source
  // domain, novel tokens far from every KB label.
  const int dim = 16;
  std::string emb = std::to_string(token_cluster.size()) + " " + std::to_string(dim) + "\n";
  for (const auto& [tok, cluster] : token_cluster) {
    std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
    v[static_cast<std::size_t>(cluster) * 3] = 1.0;
    SplitMix64 jitter(tabkb::fnv1a64(tok, seed ^ 0x5bd1e995u));
    double norm = 0;
    std::vector<double> j(static_cast<std::size_t>(dim));
    for (auto& x : j) {
      x = jitter.next_double() * 2.0 - 1.0;
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += 0.35 * j[i] / norm;
    norm = 0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    emb += tok;
    for (double x : v) {
      emb += ' ';
      emb += tabkb::fmt_fixed(x / norm, 6);
    }
    emb += '\n';
  }
  tabkb::write_text_file(world.embeddings_path, emb);

  return world;
}

}  // namespace fixture
