#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

namespace hirpcn {

using DisciplineId = std::int32_t;

/// Reserved id of the synthetic root node. Its code is empty and it never
/// appears in predictions.
inline constexpr DisciplineId kRootId = 0;

struct Discipline {
  DisciplineId id = kRootId;
  std::string code;  // ApplyID, e.g. "F0601"; empty for root
  int level = 0;     // 0 for root, 1..H otherwise
  std::optional<DisciplineId> parent_id;  // absent only for root
  std::vector<DisciplineId> children;     // sorted by code
};

/// Level implied by an ApplyID code: one uppercase letter, then two decimal
/// digits per deeper level. Returns nullopt for malformed codes.
std::optional<int> code_level(std::string_view code) noexcept;

/// Code prefix at `level` (1-based). Requires level <= code_level(code).
std::string code_prefix(std::string_view code, int level);

struct TaxonomyNode {
  std::string code;
  int level = 0;
};

/// The hierarchical discipline structure: a tree of ApplyID codes under a
/// single root. Immutable after construction; safe for concurrent reads.
class DisciplineTaxonomy {
 public:
  /// Builds and validates a taxonomy. Parents are inferred by code prefix.
  /// Throws DuplicateCode, OrphanNode, CycleDetected or LevelMismatch.
  static DisciplineTaxonomy build(std::span<const TaxonomyNode> nodes);

  int depth() const noexcept { return static_cast<int>(levels_.size()) - 1; }
  std::size_t size() const noexcept { return nodes_.size(); }
  /// Number of non-root disciplines.
  std::size_t discipline_count() const noexcept { return nodes_.size() - 1; }

  const Discipline& root() const noexcept { return nodes_.front(); }
  const Discipline& at(DisciplineId id) const;
  std::optional<DisciplineId> find(std::string_view code) const;
  /// Throws UnknownCode.
  DisciplineId id_of(std::string_view code) const;

  /// Disciplines at level k (k = 0 yields the root), sorted by code.
  std::span<const DisciplineId> level(int k) const;
  /// Position of a discipline inside its level's sorted list.
  int index_in_level(DisciplineId id) const;

  /// True when `descendant` lies strictly below `ancestor`.
  bool is_ancestor(DisciplineId ancestor, DisciplineId descendant) const;

  const std::vector<Discipline>& nodes() const noexcept { return nodes_; }

 private:
  std::vector<Discipline> nodes_;  // index == id; nodes_[0] is root
  std::vector<std::vector<DisciplineId>> levels_;
  std::vector<int> level_index_;
  std::unordered_map<std::string, DisciplineId> index_;
};

/// Parses `{"depth": H, "nodes": [{"code": "F", "level": 1}, ...]}`.
DisciplineTaxonomy load_taxonomy(const nlohmann::json& doc);
DisciplineTaxonomy load_taxonomy_file(const std::filesystem::path& path);
nlohmann::json taxonomy_to_json(const DisciplineTaxonomy& t);

/// Regular synthetic taxonomy: `letters` level-1 disciplines, each internal
/// node with `branching` children numbered 01.., down to `depth` levels.
DisciplineTaxonomy make_fixture_taxonomy(std::span<const std::string> letters,
                                         int branching, int depth);

// ---------------------------------------------------------------------------
// Partial order checks.
//
// The Belong-to relation is stored as pairs (a, b) meaning a ≺ b: a lies
// under b. Root must be the unique greatest element.

using Relation = std::set<std::pair<DisciplineId, DisciplineId>>;

enum class Axiom { GreatestElement, Asymmetry, AntiReflexivity, Transitivity };

struct Violation {
  Axiom axiom;
  DisciplineId a;
  DisciplineId b;

  friend bool operator==(const Violation&, const Violation&) = default;
};

std::string_view to_string(Axiom axiom) noexcept;

/// Transitive closure of the parent links, root included.
Relation belongs_to_closure(const DisciplineTaxonomy& t);

/// Checks the four axioms over an explicit relation on ids [0, node_count).
/// Transitivity is only reported for distinct endpoints; a ≺ b ≺ a is an
/// asymmetry violation, reported once per unordered pair.
std::vector<Violation> validate_relation(std::size_t node_count, const Relation& rel,
                                         DisciplineId root = kRootId);

std::vector<Violation> validate_partial_order(const DisciplineTaxonomy& t);

// ---------------------------------------------------------------------------
// Topic paths.

struct LabelSet {
  std::set<DisciplineId> labels;
  bool stop = false;

  bool empty() const noexcept { return labels.empty() && !stop; }
  friend bool operator==(const LabelSet&, const LabelSet&) = default;
};

/// [L_0, L_1, ..., L_{H_A}] with L_0 = {root}. The end-of-prediction marker
/// lives in the last set.
struct TopicPath {
  std::vector<LabelSet> levels;

  int effective_depth() const noexcept { return static_cast<int>(levels.size()) - 1; }
  /// Labels at level k, empty when k is beyond the path.
  const std::set<DisciplineId>& labels_at(int k) const;

  friend bool operator==(const TopicPath&, const TopicPath&) = default;
};

/// Encodes a code set as a topic path. Set k holds every length-k prefix.
/// Stop placement:
///  - codes of mixed depth: stop joins the deepest set;
///  - all codes at depth k < H: a singleton {stop} set is appended at k + 1;
///  - all codes at depth H: stop joins L_H.
/// Codes that are ancestors of other codes in the set are subsumed.
/// An empty code set encodes to [{root}, {stop}]. Throws UnknownCode.
TopicPath encode_topic_path(std::span<const std::string> codes, const DisciplineTaxonomy& t);

/// Maximal codes of a path (labels without a child in the next set), sorted.
/// Throws IncoherentPath when a label's parent is missing from the previous
/// set or a label sits at the wrong level.
std::vector<std::string> decode_topic_path(const TopicPath& p, const DisciplineTaxonomy& t);

/// First violated coherence condition, or nullopt if the path is coherent.
std::optional<std::string> path_incoherence(const TopicPath& p, const DisciplineTaxonomy& t);

}  // namespace hirpcn
