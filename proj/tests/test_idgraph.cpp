#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>

#include <doctest.h>

#include "hirpcn/idgraph.hpp"
#include "test_util.hpp"

using namespace hirpcn;
using testutil::fixture_taxonomy;

namespace {

DisciplineTaxonomy two_letters() {
  std::vector<TaxonomyNode> nodes = {{"A", 1}, {"B", 1}, {"C", 1}};
  return DisciplineTaxonomy::build(nodes);
}

/// K_a = {t1, t2} with counts {3, 1}; K_b = {t2, t3} with counts {2, 2}.
TopicStats hand_stats(const DisciplineTaxonomy& t) {
  TopicStats s;
  s.frequency.resize(t.size());
  s.frequency[static_cast<std::size_t>(t.id_of("A"))] = {{"t1", 3}, {"t2", 1}};
  s.frequency[static_cast<std::size_t>(t.id_of("B"))] = {{"t2", 2}, {"t3", 2}};
  s.frequency[static_cast<std::size_t>(t.id_of("C"))] = {{"t9", 1}};
  return s;
}

}  // namespace

TEST_CASE("hand fixture weights") {
  const auto t = two_letters();
  const auto s = hand_stats(t);
  const auto a = t.id_of("A"), b = t.id_of("B"), c = t.id_of("C");

  auto e = edge_weight(s, a, b, 1.0, 1.0);
  CHECK(std::abs(e.p - 0.25) <= 1e-12);
  CHECK(std::abs(e.d - 0.5) <= 1e-12);
  CHECK(std::abs(e.w - 0.125) <= 1e-12);

  e = edge_weight(s, a, b, 0.1, 0.1);
  CHECK(std::abs(e.w - std::pow(0.125, 0.1)) <= 1e-12);
  CHECK(std::abs(e.w - 0.8122523963562356) <= 1e-12);

  e = edge_weight(s, b, a, 1.0, 1.0);
  CHECK(std::abs(e.p - 0.5) <= 1e-12);
  CHECK(std::abs(e.d - 0.5) <= 1e-12);
  CHECK(std::abs(e.w - 0.25) <= 1e-12);

  CHECK(edge_weight(s, a, b, 0.0, 0.0).w == 1.0);
  CHECK(edge_weight(s, a, c, 1.0, 0.0).w == 0.0);  // disjoint: p = 0
  CHECK(edge_weight(s, a, c, 0.0, 0.0).w == 1.0);  // 0^0 = 1

  CHECK_ERROR(edge_weight(s, a, a, 1.0, 1.0), ErrorCode::SelfEdge);
  TopicStats empty_a = s;
  empty_a.frequency[static_cast<std::size_t>(a)].clear();
  CHECK_ERROR(edge_weight(empty_a, a, b, 1.0, 1.0), ErrorCode::EmptySource);
}

TEST_CASE("subset topics give zero disparity") {
  const auto t = two_letters();
  TopicStats s;
  s.frequency.resize(t.size());
  s.frequency[static_cast<std::size_t>(t.id_of("A"))] = {{"t1", 1}};
  s.frequency[static_cast<std::size_t>(t.id_of("B"))] = {{"t1", 1}, {"t2", 1}};
  const auto e = edge_weight(s, t.id_of("A"), t.id_of("B"), 1.0, 1.0);
  CHECK(e.d == 0.0);
  CHECK(e.w == 0.0);
}

TEST_CASE("build_graph topology") {
  const auto t = two_letters();
  const auto g = build_graph(hand_stats(t), 1.0, 1.0);
  REQUIRE(g.edges().size() == 2);  // A<->B; C shares nothing
  CHECK(g.weight(t.id_of("A"), t.id_of("B")) == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(g.weight(t.id_of("B"), t.id_of("A")) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(g.weight(t.id_of("A"), t.id_of("C")) == 0.0);

  const auto g0 = build_graph(hand_stats(t), 0.0, 0.0);
  for (const auto& e : g0.edges()) CHECK(e.weight.w == 1.0);

  // JSON round trip keeps weights exactly.
  const auto back = graph_from_json(graph_to_json(g, t), t);
  REQUIRE(back.edges().size() == g.edges().size());
  for (std::size_t i = 0; i < g.edges().size(); ++i) CHECK(back.edges()[i].weight.w == g.edges()[i].weight.w);
}

TEST_CASE("collect_topic_stats propagates to ancestors once per proposal") {
  std::vector<TaxonomyNode> nodes = {{"F", 1}, {"F06", 2}};
  const auto t = DisciplineTaxonomy::build(nodes);
  Proposal p;
  p.id = "x";
  p.keywords = {"t1", "t2", "t1"};
  p.labels = {"F06"};
  const std::vector<Proposal> corpus = {p};
  const auto s = collect_topic_stats(corpus, t);
  const std::map<std::string, std::size_t> want = {{"t1", 1}, {"t2", 1}};
  CHECK(s.of(t.id_of("F")) == want);
  CHECK(s.of(t.id_of("F06")) == want);
  CHECK(collect_topic_stats(std::vector<Proposal>{}, t).empty());
}

TEST_CASE("fixture corpus: stats and edges match an independent recount") {
  const auto t = fixture_taxonomy();
  const auto corpus = generate_corpus(t, CorpusConfig{});
  const auto stats = collect_topic_stats(corpus, t);

  std::vector<std::map<std::string, std::size_t>> freq(t.size());
  for (const auto& p : corpus) {
    std::set<DisciplineId> chain;
    for (const auto& code : p.labels) {
      for (int k = 1; k <= *code_level(code); ++k) chain.insert(t.id_of(code_prefix(code, k)));
    }
    const std::set<std::string> kw(p.keywords.begin(), p.keywords.end());
    for (auto d : chain) {
      for (const auto& w : kw) ++freq[static_cast<std::size_t>(d)][w];
    }
  }
  for (std::size_t i = 1; i < t.size(); ++i) CHECK(stats.frequency[i] == freq[i]);

  const auto g = build_graph(stats, 0.1, 0.1);
  std::size_t expected_edges = 0;
  for (std::size_t a = 1; a < t.size(); ++a) {
    for (std::size_t b = 1; b < t.size(); ++b) {
      if (a == b || freq[a].empty()) continue;
      double total = 0, shared_freq = 0, shared = 0;
      for (const auto& [w, n] : freq[a]) {
        total += static_cast<double>(n);
        if (freq[b].contains(w)) {
          shared_freq += static_cast<double>(n);
          shared += 1;
        }
      }
      if (shared == 0) continue;
      ++expected_edges;
      const double p = shared_freq / total;
      const double d = 1.0 - shared / static_cast<double>(freq[a].size());
      const double w = std::pow(p, 0.1) * (d == 0.0 ? 0.0 : std::pow(d, 0.1));
      CHECK(std::abs(g.weight(static_cast<DisciplineId>(a), static_cast<DisciplineId>(b)) - w) <= 1e-12);
    }
  }
  CHECK(g.edges().size() == expected_edges);
  for (const auto& e : g.edges()) {
    CHECK(e.weight.p >= 0.0);
    CHECK(e.weight.p <= 1.0);
    CHECK(e.weight.d < 1.0);
  }
}

TEST_CASE("sample_neighborhood") {
  const auto t = fixture_taxonomy();
  const auto corpus = generate_corpus(t, CorpusConfig{});
  const auto g = build_graph(collect_topic_stats(corpus, t), 0.1, 0.1);
  const DisciplineId c = t.id_of("A02");
  const std::vector<DisciplineId> centrals = {c};

  const auto h0 = sample_neighborhood(g, centrals, 0);
  CHECK(h0.members == centrals);
  CHECK(h0.adj(0, 0) == 0.0);

  // Independent BFS over both directions.
  std::set<DisciplineId> want = {c};
  for (const auto& e : g.edges()) {
    if (e.src == c) want.insert(e.dst);
    if (e.dst == c) want.insert(e.src);
  }
  const auto h1 = sample_neighborhood(g, centrals, 1);
  CHECK(std::vector<DisciplineId>(want.begin(), want.end()) == h1.members);
  for (std::size_t i = 0; i < h1.size(); ++i) {
    for (std::size_t j = 0; j < h1.size(); ++j) CHECK(h1.adj(i, j) == g.weight(h1.members[i], h1.members[j]));
  }
  const auto h2 = sample_neighborhood(g, centrals, 2);
  CHECK(std::includes(h2.members.begin(), h2.members.end(), h1.members.begin(), h1.members.end()));

  const std::vector<DisciplineId> bad = {999};
  CHECK_ERROR(sample_neighborhood(g, bad, 1), ErrorCode::UnknownNode);
}

TEST_CASE("star graph: one hop from the centre reaches everything") {
  const auto t = two_letters();
  const auto a = t.id_of("A"), b = t.id_of("B"), c = t.id_of("C");
  std::vector<Edge> edges = {{a, b, {1, 1, 1}}, {c, a, {1, 1, 1}}};
  const InterGraph g(t.size(), 1, 1, edges);
  const std::vector<DisciplineId> centre = {a};
  CHECK(sample_neighborhood(g, centre, 1).members == std::vector<DisciplineId>{a, b, c});
}
