// Knowledge-base snapshot: entities, hierarchical types, surface forms and
// triples, loaded from TSV files and immutable afterwards.
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tabkb/common.hpp"
#include "tabkb/text.hpp"

namespace tabkb::kb {

struct KbEntity {
  std::string id;
  std::string label;
  double popularity = 0.0;
  std::string description;
  std::vector<std::string> type_ids;  // direct types, snapshot order
};

struct Triple {
  std::string subject;
  std::string predicate;
  std::string object;
};

struct KbPaths {
  std::string entities;
  std::string types;
  std::string hierarchy;
  std::string surface_forms;
  std::string triples;

  static KbPaths in_dir(const std::string& dir) {
    return {dir + "/entities.tsv", dir + "/types.tsv",
            dir + "/type_hierarchy.tsv", dir + "/surface_forms.tsv",
            dir + "/triples.tsv"};
  }
};

namespace detail {

inline std::vector<std::string> split_tsv(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(tsv_unescape(line.substr(start)));
      break;
    }
    fields.push_back(tsv_unescape(line.substr(start, tab - start)));
    start = tab + 1;
  }
  return fields;
}

template <typename Fn>
void for_each_tsv_row(const std::string& path, std::size_t min_fields, Fn fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open snapshot file: " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_tsv(line);
    if (fields.size() < min_fields) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected at least " + std::to_string(min_fields) +
                      " fields");
    }
    fn(fields, line_no);
  }
}

}  // namespace detail

class KbSnapshot {
 public:
  static KbSnapshot load(const KbPaths& paths) {
    KbSnapshot kb;

    detail::for_each_tsv_row(paths.entities, 4, [&](auto& f, std::size_t ln) {
      if (kb.index_.count(f[0])) {
        throw DataError(paths.entities + ":" + std::to_string(ln) +
                        ": duplicate entity id " + f[0]);
      }
      KbEntity e;
      e.id = f[0];
      e.label = f[1];
      char* end = nullptr;
      e.popularity = std::strtod(f[2].c_str(), &end);
      if (end == f[2].c_str() || e.popularity < 0) {
        throw DataError(paths.entities + ":" + std::to_string(ln) +
                        ": invalid popularity for " + f[0]);
      }
      e.description = f[3];
      kb.index_[e.id] = kb.entities_.size();
      kb.entities_.push_back(std::move(e));
    });

    detail::for_each_tsv_row(paths.hierarchy, 1, [&](auto& f, std::size_t) {
      std::optional<std::string> parent;
      if (f.size() >= 2 && !f[1].empty()) parent = f[1];
      kb.hierarchy_[f[0]] = parent;
    });
    for (const auto& [type_id, parent] : kb.hierarchy_) {
      if (parent && !kb.hierarchy_.count(*parent)) {
        throw DataError(paths.hierarchy + ": parent type " + *parent +
                        " of " + type_id + " is not declared");
      }
    }
    kb.check_acyclic(paths.hierarchy);

    detail::for_each_tsv_row(paths.types, 2, [&](auto& f, std::size_t ln) {
      auto it = kb.index_.find(f[0]);
      if (it == kb.index_.end()) {
        throw DataError(paths.types + ":" + std::to_string(ln) +
                        ": unknown entity " + f[0]);
      }
      if (!kb.hierarchy_.count(f[1])) {
        throw DataError(paths.types + ":" + std::to_string(ln) +
                        ": type " + f[1] + " missing from the hierarchy");
      }
      kb.entities_[it->second].type_ids.push_back(f[1]);
    });
    for (const auto& e : kb.entities_) {
      if (e.type_ids.empty()) {
        throw DataError(paths.types + ": entity " + e.id +
                        " has no type (snapshot is restricted to typed entities)");
      }
    }

    // Canonical labels are surface forms by construction; file rows append.
    for (std::size_t i = 0; i < kb.entities_.size(); ++i) {
      kb.add_surface_form(text::normalize(kb.entities_[i].label), i);
    }
    detail::for_each_tsv_row(paths.surface_forms, 2,
                             [&](auto& f, std::size_t ln) {
      auto it = kb.index_.find(f[1]);
      if (it == kb.index_.end()) {
        throw DataError(paths.surface_forms + ":" + std::to_string(ln) +
                        ": unknown entity " + f[1]);
      }
      std::string form = text::normalize(f[0]);
      if (!form.empty()) kb.add_surface_form(form, it->second);
    });

    detail::for_each_tsv_row(paths.triples, 3, [&](auto& f, std::size_t ln) {
      auto it = kb.index_.find(f[0]);
      if (it == kb.index_.end()) {
        throw DataError(paths.triples + ":" + std::to_string(ln) +
                        ": triple subject " + f[0] + " is not in the snapshot");
      }
      kb.triples_by_entity_[f[0]].push_back({f[0], f[1], f[2]});
    });

    for (const auto& e : kb.entities_) kb.expand_types(e);
    return kb;
  }

  const std::vector<KbEntity>& entities() const { return entities_; }

  bool contains(std::string_view id) const {
    return index_.count(std::string(id)) > 0;
  }

  const KbEntity& entity(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) throw DataError("unknown entity: " + std::string(id));
    return entities_[it->second];
  }

  // Direct types plus all hierarchy ancestors, most-specific first.
  const std::vector<std::string>& expanded_types(std::string_view id) const {
    auto it = expanded_types_.find(std::string(id));
    if (it == expanded_types_.end())
      throw DataError("unknown entity: " + std::string(id));
    return it->second;
  }

  std::vector<std::string> surface_lookup(std::string_view key) const {
    auto it = surface_forms_.find(std::string(key));
    if (it == surface_forms_.end()) return {};
    return it->second;
  }

  const std::map<std::string, std::vector<std::string>>& surface_form_index()
      const {
    return surface_forms_;
  }

  std::vector<std::string> surface_forms_of(std::string_view id) const {
    auto it = forms_by_entity_.find(std::string(id));
    if (it == forms_by_entity_.end()) return {};
    return it->second;
  }

  const std::vector<Triple>& triples_of(std::string_view id) const {
    static const std::vector<Triple> kEmpty;
    auto it = triples_by_entity_.find(std::string(id));
    return it == triples_by_entity_.end() ? kEmpty : it->second;
  }

  // Union of the entities' triples grouped by predicate.
  std::map<std::string, std::vector<std::pair<std::string, std::string>>>
  properties_of(const std::set<std::string>& ids) const {
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> out;
    for (const auto& id : ids) {
      if (!contains(id)) throw DataError("unknown entity: " + id);
      for (const auto& t : triples_of(id)) {
        out[t.predicate].emplace_back(t.subject, t.object);
      }
    }
    return out;
  }

  const std::map<std::string, std::optional<std::string>>& hierarchy() const {
    return hierarchy_;
  }

 private:
  void add_surface_form(const std::string& form, std::size_t entity_idx) {
    auto& list = surface_forms_[form];
    const std::string& id = entities_[entity_idx].id;
    for (const auto& existing : list) {
      if (existing == id) return;
    }
    list.push_back(id);
    forms_by_entity_[id].push_back(form);
  }

  void check_acyclic(const std::string& path) const {
    for (const auto& [start, _] : hierarchy_) {
      std::set<std::string> seen;
      const std::string* cur = &start;
      while (true) {
        if (!seen.insert(*cur).second) {
          throw DataError(path + ": type hierarchy contains a cycle at " + *cur);
        }
        const auto& parent = hierarchy_.at(*cur);
        if (!parent) break;
        cur = &*parent;
      }
    }
  }

  // Breadth-first over the parent chain keeps direct types ahead of their
  // ancestors (most-specific first).
  void expand_types(const KbEntity& e) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    std::vector<std::string> frontier;
    for (const auto& direct : e.type_ids) {
      if (seen.insert(direct).second) {
        out.push_back(direct);
        frontier.push_back(direct);
      }
    }
    while (!frontier.empty()) {
      std::vector<std::string> next;
      for (const auto& type_id : frontier) {
        const auto& parent = hierarchy_.at(type_id);
        if (parent && seen.insert(*parent).second) {
          out.push_back(*parent);
          next.push_back(*parent);
        }
      }
      frontier = std::move(next);
    }
    expanded_types_[e.id] = std::move(out);
  }

  std::vector<KbEntity> entities_;
  std::unordered_map<std::string, std::size_t> index_;
  std::map<std::string, std::optional<std::string>> hierarchy_;
  std::map<std::string, std::vector<std::string>> surface_forms_;
  std::unordered_map<std::string, std::vector<std::string>> forms_by_entity_;
  std::unordered_map<std::string, std::vector<Triple>> triples_by_entity_;
  std::unordered_map<std::string, std::vector<std::string>> expanded_types_;
};

}  // namespace tabkb::kb
