#include "hirpcn/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <tuple>

#include "hirpcn/error.hpp"

namespace hirpcn {

std::optional<int> code_level(std::string_view code) noexcept {
  if (code.empty() || (code.size() - 1) % 2 != 0) return std::nullopt;
  if (!std::isupper(static_cast<unsigned char>(code[0]))) return std::nullopt;
  for (std::size_t i = 1; i < code.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(code[i]))) return std::nullopt;
  }
  return 1 + static_cast<int>(code.size() - 1) / 2;
}

std::string code_prefix(std::string_view code, int level) {
  return std::string(code.substr(0, 1 + 2 * static_cast<std::size_t>(level - 1)));
}

DisciplineTaxonomy DisciplineTaxonomy::build(std::span<const TaxonomyNode> nodes) {
  DisciplineTaxonomy t;
  Discipline root;
  root.id = kRootId;
  t.nodes_.push_back(root);

  // Shorter codes first so parents exist before children; ties by code.
  std::vector<TaxonomyNode> sorted(nodes.begin(), nodes.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.code.size() != b.code.size()) return a.code.size() < b.code.size();
    return a.code < b.code;
  });

  for (const auto& node : sorted) {
    const auto implied = code_level(node.code);
    if (!implied || *implied != node.level) {
      throw Error(ErrorCode::LevelMismatch,
                  "code '" + node.code + "' declared at level " + std::to_string(node.level));
    }
    if (t.index_.contains(node.code)) {
      throw Error(ErrorCode::DuplicateCode, "code '" + node.code + "' appears twice");
    }
    Discipline d;
    d.id = static_cast<DisciplineId>(t.nodes_.size());
    d.code = node.code;
    d.level = node.level;
    if (node.level == 1) {
      d.parent_id = kRootId;
    } else {
      const auto it = t.index_.find(code_prefix(node.code, node.level - 1));
      if (it == t.index_.end()) {
        throw Error(ErrorCode::OrphanNode, "no parent for code '" + node.code + "'");
      }
      d.parent_id = it->second;
    }
    t.index_.emplace(d.code, d.id);
    t.nodes_.push_back(std::move(d));
  }

  // Parent chains must reach root without revisiting a node.
  for (const auto& d : t.nodes_) {
    std::vector<bool> seen(t.nodes_.size(), false);
    DisciplineId cur = d.id;
    while (cur != kRootId) {
      if (seen[static_cast<std::size_t>(cur)]) {
        throw Error(ErrorCode::CycleDetected, "parent chain of '" + d.code + "' revisits a node");
      }
      seen[static_cast<std::size_t>(cur)] = true;
      cur = *t.nodes_[static_cast<std::size_t>(cur)].parent_id;
    }
  }

  int depth = 0;
  for (const auto& d : t.nodes_) depth = std::max(depth, d.level);
  t.levels_.assign(static_cast<std::size_t>(depth) + 1, {});
  t.level_index_.assign(t.nodes_.size(), 0);
  for (const auto& d : t.nodes_) {
    t.levels_[static_cast<std::size_t>(d.level)].push_back(d.id);
    if (d.parent_id) t.nodes_[static_cast<std::size_t>(*d.parent_id)].children.push_back(d.id);
  }
  // Ids were assigned in (length, code) order, so each level is code-sorted.
  for (auto& lvl : t.levels_) {
    for (std::size_t i = 0; i < lvl.size(); ++i) {
      t.level_index_[static_cast<std::size_t>(lvl[i])] = static_cast<int>(i);
    }
  }

  const auto violations = validate_partial_order(t);
  if (!violations.empty()) {
    const auto& v = violations.front();
    throw Error(ErrorCode::CycleDetected, std::string("partial order violated: ") +
                                              std::string(to_string(v.axiom)));
  }
  return t;
}

const Discipline& DisciplineTaxonomy::at(DisciplineId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
    throw Error(ErrorCode::UnknownNode, "discipline id " + std::to_string(id));
  }
  return nodes_[static_cast<std::size_t>(id)];
}

std::optional<DisciplineId> DisciplineTaxonomy::find(std::string_view code) const {
  const auto it = index_.find(std::string(code));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

DisciplineId DisciplineTaxonomy::id_of(std::string_view code) const {
  const auto id = find(code);
  if (!id) throw Error(ErrorCode::UnknownCode, "code '" + std::string(code) + "'");
  return *id;
}

std::span<const DisciplineId> DisciplineTaxonomy::level(int k) const {
  if (k < 0 || k > depth()) {
    throw Error(ErrorCode::LevelOutOfRange, "level " + std::to_string(k));
  }
  return levels_[static_cast<std::size_t>(k)];
}

int DisciplineTaxonomy::index_in_level(DisciplineId id) const {
  at(id);
  return level_index_[static_cast<std::size_t>(id)];
}

bool DisciplineTaxonomy::is_ancestor(DisciplineId ancestor, DisciplineId descendant) const {
  const Discipline* cur = &at(descendant);
  while (cur->parent_id) {
    if (*cur->parent_id == ancestor) return true;
    cur = &at(*cur->parent_id);
  }
  return false;
}

DisciplineTaxonomy load_taxonomy(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array()) {
    throw Error(ErrorCode::SchemaError, "taxonomy document needs a 'nodes' array");
  }
  std::vector<TaxonomyNode> nodes;
  for (const auto& n : doc["nodes"]) {
    if (!n.contains("code") || !n["code"].is_string()) {
      throw Error(ErrorCode::SchemaError, "taxonomy node missing 'code'");
    }
    if (!n.contains("level") || !n["level"].is_number_integer()) {
      throw Error(ErrorCode::SchemaError, "taxonomy node missing 'level'");
    }
    nodes.push_back({n["code"].get<std::string>(), n["level"].get<int>()});
  }
  auto t = DisciplineTaxonomy::build(nodes);
  if (doc.contains("depth") && doc["depth"].get<int>() != t.depth()) {
    throw Error(ErrorCode::LevelMismatch, "declared depth " + std::to_string(doc["depth"].get<int>()) +
                                              " but nodes reach " + std::to_string(t.depth()));
  }
  return t;
}

DisciplineTaxonomy load_taxonomy_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return load_taxonomy(doc);
}

nlohmann::json taxonomy_to_json(const DisciplineTaxonomy& t) {
  nlohmann::ordered_json doc;
  doc["depth"] = t.depth();
  auto nodes = nlohmann::ordered_json::array();
  for (const auto& d : t.nodes()) {
    if (d.id == kRootId) continue;
    nlohmann::ordered_json n;
    n["code"] = d.code;
    n["level"] = d.level;
    nodes.push_back(std::move(n));
  }
  doc["nodes"] = std::move(nodes);
  return nlohmann::json::parse(doc.dump());
}

DisciplineTaxonomy make_fixture_taxonomy(std::span<const std::string> letters, int branching,
                                         int depth) {
  std::vector<TaxonomyNode> nodes;
  std::vector<std::string> frontier(letters.begin(), letters.end());
  for (const auto& l : frontier) nodes.push_back({l, 1});
  for (int level = 2; level <= depth; ++level) {
    std::vector<std::string> next;
    for (const auto& parent : frontier) {
      for (int c = 1; c <= branching; ++c) {
        char digits[3];
        digits[0] = static_cast<char>('0' + c / 10);
        digits[1] = static_cast<char>('0' + c % 10);
        digits[2] = '\0';
        next.push_back(parent + digits);
        nodes.push_back({next.back(), level});
      }
    }
    frontier = std::move(next);
  }
  return DisciplineTaxonomy::build(nodes);
}

// ---------------------------------------------------------------------------

std::string_view to_string(Axiom axiom) noexcept {
  switch (axiom) {
    case Axiom::GreatestElement: return "GreatestElement";
    case Axiom::Asymmetry: return "Asymmetry";
    case Axiom::AntiReflexivity: return "AntiReflexivity";
    case Axiom::Transitivity: return "Transitivity";
  }
  return "?";
}

Relation belongs_to_closure(const DisciplineTaxonomy& t) {
  Relation rel;
  for (const auto& d : t.nodes()) {
    auto parent = d.parent_id;
    while (parent) {
      rel.emplace(d.id, *parent);
      parent = t.at(*parent).parent_id;
    }
  }
  return rel;
}

std::vector<Violation> validate_relation(std::size_t node_count, const Relation& rel,
                                         DisciplineId root) {
  std::vector<Violation> out;
  std::vector<std::vector<DisciplineId>> above(node_count);
  for (const auto& [a, b] : rel) above[static_cast<std::size_t>(a)].push_back(b);

  for (DisciplineId x = 0; x < static_cast<DisciplineId>(node_count); ++x) {
    if (x == root) continue;
    if (!rel.contains({x, root})) out.push_back({Axiom::GreatestElement, x, root});
  }
  for (DisciplineId y : above[static_cast<std::size_t>(root)]) {
    out.push_back({Axiom::GreatestElement, root, y});
  }
  for (const auto& [a, b] : rel) {
    if (a == b) {
      out.push_back({Axiom::AntiReflexivity, a, b});
    } else if (a < b && rel.contains({b, a})) {
      out.push_back({Axiom::Asymmetry, a, b});
    }
  }
  for (const auto& [x, y] : rel) {
    if (x == y) continue;
    for (DisciplineId z : above[static_cast<std::size_t>(y)]) {
      if (z != x && !rel.contains({x, z})) out.push_back({Axiom::Transitivity, x, z});
    }
  }
  std::sort(out.begin(), out.end(), [](const Violation& l, const Violation& r) {
    return std::tie(l.axiom, l.a, l.b) < std::tie(r.axiom, r.a, r.b);
  });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Violation> validate_partial_order(const DisciplineTaxonomy& t) {
  return validate_relation(t.size(), belongs_to_closure(t));
}

// ---------------------------------------------------------------------------

const std::set<DisciplineId>& TopicPath::labels_at(int k) const {
  static const std::set<DisciplineId> kEmpty;
  if (k < 0 || k >= static_cast<int>(levels.size())) return kEmpty;
  return levels[static_cast<std::size_t>(k)].labels;
}

TopicPath encode_topic_path(std::span<const std::string> codes, const DisciplineTaxonomy& t) {
  TopicPath p;
  p.levels.push_back(LabelSet{{kRootId}, false});

  std::vector<const Discipline*> nodes;
  for (const auto& c : codes) nodes.push_back(&t.at(t.id_of(c)));

  if (nodes.empty()) {
    p.levels.push_back(LabelSet{{}, true});
    return p;
  }

  int max_level = 0;
  for (const auto* d : nodes) max_level = std::max(max_level, d->level);
  for (int k = 1; k <= max_level; ++k) {
    LabelSet set;
    for (const auto* d : nodes) {
      if (d->level >= k) set.labels.insert(t.id_of(code_prefix(d->code, k)));
    }
    p.levels.push_back(std::move(set));
  }

  // A code ends early only if it is not subsumed by a deeper code.
  const bool mixed = std::any_of(nodes.begin(), nodes.end(), [&](const Discipline* d) {
    if (d->level == max_level) return false;
    return std::none_of(nodes.begin(), nodes.end(),
                        [&](const Discipline* o) { return t.is_ancestor(d->id, o->id); });
  });
  if (mixed || max_level == t.depth()) {
    p.levels.back().stop = true;
  } else {
    p.levels.push_back(LabelSet{{}, true});
  }
  return p;
}

std::optional<std::string> path_incoherence(const TopicPath& p, const DisciplineTaxonomy& t) {
  if (p.levels.empty() || p.levels.front().labels != std::set<DisciplineId>{kRootId}) {
    return "L_0 must be {root}";
  }
  for (std::size_t k = 1; k < p.levels.size(); ++k) {
    for (DisciplineId id : p.levels[k].labels) {
      if (id <= kRootId || static_cast<std::size_t>(id) >= t.size()) {
        return "unknown discipline id " + std::to_string(id);
      }
      const auto& d = t.at(id);
      if (d.level != static_cast<int>(k)) {
        return "'" + d.code + "' is not a level-" + std::to_string(k) + " discipline";
      }
      if (!p.levels[k - 1].labels.contains(*d.parent_id)) {
        return "parent of '" + d.code + "' missing from level " + std::to_string(k - 1);
      }
    }
  }
  return std::nullopt;
}

std::vector<std::string> decode_topic_path(const TopicPath& p, const DisciplineTaxonomy& t) {
  if (auto why = path_incoherence(p, t)) throw Error(ErrorCode::IncoherentPath, *why);
  std::vector<std::string> out;
  for (std::size_t k = 1; k < p.levels.size(); ++k) {
    for (DisciplineId id : p.levels[k].labels) {
      const bool has_child = k + 1 < p.levels.size() &&
                             std::any_of(p.levels[k + 1].labels.begin(), p.levels[k + 1].labels.end(),
                                         [&](DisciplineId c) { return t.at(c).parent_id == id; });
      if (!has_child) out.push_back(t.at(id).code);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace hirpcn
