#include "hirpcn/idgraph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>

#include "hirpcn/error.hpp"

namespace hirpcn {

bool TopicStats::empty() const noexcept {
  return std::all_of(frequency.begin(), frequency.end(), [](const auto& f) { return f.empty(); });
}

const std::map<std::string, std::size_t>& TopicStats::of(DisciplineId a) const {
  if (a < 0 || static_cast<std::size_t>(a) >= frequency.size()) {
    throw Error(ErrorCode::UnknownNode, "discipline id " + std::to_string(a));
  }
  return frequency[static_cast<std::size_t>(a)];
}

TopicStats collect_topic_stats(std::span<const Proposal> corpus, const DisciplineTaxonomy& t) {
  TopicStats stats;
  stats.frequency.resize(t.size());
  for (const auto& p : corpus) {
    std::set<std::string> topics(p.keywords.begin(), p.keywords.end());
    std::set<DisciplineId> chain;
    for (const auto& code : p.labels) {
      for (DisciplineId cur = t.id_of(code); cur != kRootId; cur = *t.at(cur).parent_id) {
        chain.insert(cur);
      }
    }
    for (DisciplineId x : chain) {
      auto& f = stats.frequency[static_cast<std::size_t>(x)];
      for (const auto& k : topics) ++f[k];
    }
  }
  return stats;
}

namespace {

// pow with the 0^0 = 1 convention spelled out.
double power(double base, double exponent) {
  if (exponent == 0.0) return 1.0;
  return std::pow(base, exponent);
}

}  // namespace

EdgeWeight edge_weight(const TopicStats& stats, DisciplineId a, DisciplineId b, double alpha,
                       double beta) {
  if (a == b) throw Error(ErrorCode::SelfEdge, "discipline id " + std::to_string(a));
  const auto& fa = stats.of(a);
  const auto& fb = stats.of(b);
  if (fa.empty()) throw Error(ErrorCode::EmptySource, "discipline id " + std::to_string(a));

  std::size_t total = 0;
  std::size_t shared_freq = 0;
  std::size_t shared = 0;
  for (const auto& [topic, count] : fa) {
    total += count;
    if (fb.contains(topic)) {
      shared_freq += count;
      ++shared;
    }
  }
  EdgeWeight e;
  e.p = static_cast<double>(shared_freq) / static_cast<double>(total);
  e.d = 1.0 - static_cast<double>(shared) / static_cast<double>(fa.size());
  e.w = power(e.p, alpha) * power(e.d, beta);
  return e;
}

InterGraph::InterGraph(std::size_t node_count, double alpha, double beta, std::vector<Edge> edges)
    : node_count_(node_count), alpha_(alpha), beta_(beta), edges_(std::move(edges)) {
  std::sort(edges_.begin(), edges_.end(), [](const Edge& l, const Edge& r) {
    return std::pair(l.src, l.dst) < std::pair(r.src, r.dst);
  });
  out_.assign(node_count_, {});
  in_.assign(node_count_, {});
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const auto& e = edges_[i];
    if (!has_node(e.src) || !has_node(e.dst)) {
      throw Error(ErrorCode::UnknownNode, "edge " + std::to_string(e.src) + "->" + std::to_string(e.dst));
    }
    if (e.src == e.dst) throw Error(ErrorCode::SelfEdge, "discipline id " + std::to_string(e.src));
    out_[static_cast<std::size_t>(e.src)].push_back(i);
    in_[static_cast<std::size_t>(e.dst)].push_back(i);
  }
}

bool InterGraph::has_node(DisciplineId a) const noexcept {
  return a > kRootId && static_cast<std::size_t>(a) < node_count_;
}

std::span<const std::size_t> InterGraph::out_edges(DisciplineId a) const {
  if (!has_node(a)) throw Error(ErrorCode::UnknownNode, "discipline id " + std::to_string(a));
  return out_[static_cast<std::size_t>(a)];
}

std::span<const std::size_t> InterGraph::in_edges(DisciplineId a) const {
  if (!has_node(a)) throw Error(ErrorCode::UnknownNode, "discipline id " + std::to_string(a));
  return in_[static_cast<std::size_t>(a)];
}

double InterGraph::weight(DisciplineId a, DisciplineId b) const {
  for (std::size_t i : out_edges(a)) {
    if (edges_[i].dst == b) return edges_[i].weight.w;
  }
  return 0.0;
}

InterGraph build_graph(const TopicStats& stats, double alpha, double beta) {
  // Inverted index topic -> disciplines citing it.
  std::map<std::string, std::vector<DisciplineId>> citing;
  for (std::size_t a = 1; a < stats.frequency.size(); ++a) {
    for (const auto& [topic, count] : stats.frequency[a]) {
      citing[topic].push_back(static_cast<DisciplineId>(a));
    }
  }
  std::set<std::pair<DisciplineId, DisciplineId>> pairs;
  for (const auto& [topic, ids] : citing) {
    for (DisciplineId a : ids) {
      for (DisciplineId b : ids) {
        if (a != b) pairs.emplace(a, b);
      }
    }
  }
  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (const auto& [a, b] : pairs) edges.push_back({a, b, edge_weight(stats, a, b, alpha, beta)});
  return InterGraph(stats.frequency.size(), alpha, beta, std::move(edges));
}

SampledNeighborhood sample_neighborhood(const InterGraph& g, std::span<const DisciplineId> centrals,
                                        int hops) {
  SampledNeighborhood s;
  std::set<DisciplineId> members;
  std::vector<DisciplineId> frontier;
  for (DisciplineId c : centrals) {
    if (!g.has_node(c)) throw Error(ErrorCode::UnknownNode, "discipline id " + std::to_string(c));
    if (members.insert(c).second) frontier.push_back(c);
  }
  s.centrals.assign(members.begin(), members.end());
  for (int h = 0; h < hops && !frontier.empty(); ++h) {
    std::vector<DisciplineId> next;
    for (DisciplineId u : frontier) {
      for (std::size_t e : g.out_edges(u)) {
        if (members.insert(g.edges()[e].dst).second) next.push_back(g.edges()[e].dst);
      }
      for (std::size_t e : g.in_edges(u)) {
        if (members.insert(g.edges()[e].src).second) next.push_back(g.edges()[e].src);
      }
    }
    frontier = std::move(next);
  }
  s.members.assign(members.begin(), members.end());
  const std::size_t n = s.members.size();
  std::unordered_map<DisciplineId, std::size_t> pos;
  for (std::size_t i = 0; i < n; ++i) pos.emplace(s.members[i], i);
  s.adjacency.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t e : g.out_edges(s.members[i])) {
      const auto& edge = g.edges()[e];
      const auto it = pos.find(edge.dst);
      if (it != pos.end()) s.adjacency[i * n + it->second] = edge.weight.w;
    }
  }
  return s;
}

nlohmann::ordered_json graph_to_json(const InterGraph& g, const DisciplineTaxonomy& t) {
  std::vector<const Edge*> sorted;
  for (const auto& e : g.edges()) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(), [&](const Edge* l, const Edge* r) {
    return std::pair(t.at(l->src).code, t.at(l->dst).code) <
           std::pair(t.at(r->src).code, t.at(r->dst).code);
  });
  nlohmann::ordered_json j;
  j["alpha"] = g.alpha();
  j["beta"] = g.beta();
  auto edges = nlohmann::ordered_json::array();
  for (const Edge* e : sorted) {
    nlohmann::ordered_json je;
    je["src"] = t.at(e->src).code;
    je["dst"] = t.at(e->dst).code;
    je["p"] = e->weight.p;
    je["d"] = e->weight.d;
    je["w"] = e->weight.w;
    edges.push_back(std::move(je));
  }
  j["edges"] = std::move(edges);
  return j;
}

InterGraph graph_from_json(const nlohmann::json& j, const DisciplineTaxonomy& t) {
  for (const char* field : {"alpha", "beta", "edges"}) {
    if (!j.contains(field)) throw Error(ErrorCode::SchemaError, std::string("graph missing '") + field + "'");
  }
  std::vector<Edge> edges;
  for (const auto& je : j["edges"]) {
    for (const char* field : {"src", "dst", "p", "d", "w"}) {
      if (!je.contains(field)) throw Error(ErrorCode::SchemaError, std::string("edge missing '") + field + "'");
    }
    Edge e;
    e.src = t.id_of(je["src"].get<std::string>());
    e.dst = t.id_of(je["dst"].get<std::string>());
    e.weight = {je["p"].get<double>(), je["d"].get<double>(), je["w"].get<double>()};
    edges.push_back(e);
  }
  return InterGraph(t.size(), j["alpha"].get<double>(), j["beta"].get<double>(), std::move(edges));
}

InterGraph load_graph_file(const std::filesystem::path& path, const DisciplineTaxonomy& t) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return graph_from_json(j, t);
}

}  // namespace hirpcn
