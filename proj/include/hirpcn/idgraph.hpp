#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hirpcn/corpus.hpp"
#include "hirpcn/taxonomy.hpp"

namespace hirpcn {

/// Per-discipline topic frequency tables F_a; K_a is the key set.
struct TopicStats {
  /// Indexed by discipline id; entry 0 (root) stays empty.
  std::vector<std::map<std::string, std::size_t>> frequency;

  bool empty() const noexcept;
  const std::map<std::string, std::size_t>& of(DisciplineId a) const;
};

/// Each proposal adds every distinct keyword once to F_x for each
/// discipline x on each label's prefix chain. Throws UnknownCode.
TopicStats collect_topic_stats(std::span<const Proposal> corpus, const DisciplineTaxonomy& t);

struct EdgeWeight {
  double p = 0.0;  // co-selection proportion
  double d = 0.0;  // topic disparity
  double w = 0.0;  // p^alpha * d^beta
};

/// Micro Rao-Stirling weight of a -> b with 0^0 = 1.
/// Throws SelfEdge or EmptySource.
EdgeWeight edge_weight(const TopicStats& stats, DisciplineId a, DisciplineId b, double alpha,
                       double beta);

struct Edge {
  DisciplineId src;
  DisciplineId dst;
  EdgeWeight weight;
};

/// Directed weighted graph over all non-root disciplines. Immutable after
/// construction; concurrent reads are safe.
class InterGraph {
 public:
  InterGraph() = default;
  InterGraph(std::size_t node_count, double alpha, double beta, std::vector<Edge> edges);

  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }
  std::size_t node_count() const noexcept { return node_count_; }
  /// Sorted by (src, dst) id.
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::span<const std::size_t> out_edges(DisciplineId a) const;
  std::span<const std::size_t> in_edges(DisciplineId a) const;
  /// Weight of a -> b, or 0 when absent.
  double weight(DisciplineId a, DisciplineId b) const;
  bool has_node(DisciplineId a) const noexcept;

 private:
  std::size_t node_count_ = 0;  // ids 1..node_count_-1 are disciplines
  double alpha_ = 0.0;
  double beta_ = 0.0;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::vector<std::size_t>> in_;
};

/// One edge per ordered pair with K_a ∩ K_b non-empty. Edges whose weight is
/// 0 (but p > 0) are kept so alpha/beta change weights and never topology.
InterGraph build_graph(const TopicStats& stats, double alpha, double beta);

struct SampledNeighborhood {
  std::vector<DisciplineId> centrals;  // sorted
  std::vector<DisciplineId> members;   // sorted; centrals ⊆ members
  /// members.size()^2 row-major; entry (i, j) is w(members[i] -> members[j]).
  std::vector<double> adjacency;

  std::size_t size() const noexcept { return members.size(); }
  double adj(std::size_t i, std::size_t j) const { return adjacency[i * members.size() + j]; }
};

/// Breadth-first expansion over both edge directions up to `hops`, with the
/// adjacency restricted to the members. Throws UnknownNode.
SampledNeighborhood sample_neighborhood(const InterGraph& g, std::span<const DisciplineId> centrals,
                                        int hops);

/// `{"alpha":..,"beta":..,"edges":[{"src":..,"dst":..,"p":..,"d":..,"w":..}]}`,
/// edges sorted by (src, dst) code.
nlohmann::ordered_json graph_to_json(const InterGraph& g, const DisciplineTaxonomy& t);
InterGraph graph_from_json(const nlohmann::json& j, const DisciplineTaxonomy& t);
InterGraph load_graph_file(const std::filesystem::path& path, const DisciplineTaxonomy& t);

}  // namespace hirpcn
