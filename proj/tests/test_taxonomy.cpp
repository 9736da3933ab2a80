#include <algorithm>
#include <random>
#include <set>

#include <doctest.h>

#include "hirpcn/taxonomy.hpp"
#include "test_util.hpp"

using namespace hirpcn;
using testutil::fixture_taxonomy;

namespace {

DisciplineTaxonomy build(std::initializer_list<std::pair<const char*, int>> nodes) {
  std::vector<TaxonomyNode> v;
  for (auto [c, l] : nodes) v.push_back({c, l});
  return DisciplineTaxonomy::build(v);
}

DisciplineTaxonomy small() { return build({{"F", 1}, {"F06", 2}, {"F0601", 3}, {"C", 1}, {"C09", 2}}); }

LabelSet ls(const DisciplineTaxonomy& t, std::initializer_list<const char*> codes, bool stop = false) {
  LabelSet s;
  for (auto c : codes) s.labels.insert(t.id_of(c));
  s.stop = stop;
  return s;
}

LabelSet root_set() { return LabelSet{{kRootId}, false}; }

}  // namespace

TEST_CASE("code levels follow the ApplyID length rule") {
  CHECK(code_level("F") == 1);
  CHECK(code_level("F06") == 2);
  CHECK(code_level("F0601") == 3);
  CHECK_FALSE(code_level("F0").has_value());
  CHECK_FALSE(code_level("f06").has_value());
  CHECK_FALSE(code_level("F0x").has_value());
  CHECK_FALSE(code_level("").has_value());
  CHECK(code_prefix("F0601", 2) == "F06");
}

TEST_CASE("load infers parents by prefix") {
  const auto t = small();
  CHECK(t.depth() == 3);
  const auto& leaf = t.at(t.id_of("F0601"));
  REQUIRE(leaf.parent_id.has_value());
  CHECK(t.at(*leaf.parent_id).code == "F06");
  CHECK(t.at(t.id_of("F")).parent_id == kRootId);
  CHECK(t.root().code.empty());
  CHECK(t.is_ancestor(t.id_of("F"), t.id_of("F0601")));
  CHECK_FALSE(t.is_ancestor(t.id_of("C"), t.id_of("F0601")));
}

TEST_CASE("load errors") {
  CHECK_ERROR(build({{"F06", 2}}), ErrorCode::OrphanNode);
  CHECK_ERROR(build({{"F", 1}, {"F", 1}}), ErrorCode::DuplicateCode);
  CHECK_ERROR(build({{"F", 1}, {"F06", 3}}), ErrorCode::LevelMismatch);
  const auto t = small();
  CHECK_ERROR(t.id_of("Z99"), ErrorCode::UnknownCode);
}

TEST_CASE("taxonomy JSON round trip") {
  const auto t = small();
  const auto j = taxonomy_to_json(t);
  CHECK(j["depth"] == 3);
  const auto back = load_taxonomy(j);
  REQUIRE(back.size() == t.size());
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(back.nodes()[i].code == t.nodes()[i].code);
}

TEST_CASE("fixture taxonomy has 2 + 6 + 18 + 54 nodes") {
  const auto t = fixture_taxonomy();
  CHECK(t.depth() == 4);
  CHECK(t.level(1).size() == 2);
  CHECK(t.level(2).size() == 6);
  CHECK(t.level(3).size() == 18);
  CHECK(t.level(4).size() == 54);
  CHECK(t.discipline_count() == 80);
  CHECK(t.find("B030302").has_value());
  CHECK_FALSE(t.find("B0304").has_value());
}

TEST_CASE("partial order validation") {
  const auto t = fixture_taxonomy();
  CHECK(validate_partial_order(t).empty());

  // a ≺ b, b ≺ c, every node ≺ root, closure missing a ≺ c.
  Relation rel{{1, 2}, {2, 3}, {1, 0}, {2, 0}, {3, 0}};
  auto v = validate_relation(4, rel);
  REQUIRE(v.size() == 1);
  CHECK(v[0] == Violation{Axiom::Transitivity, 1, 3});

  Relation sym{{1, 2}, {2, 1}, {1, 0}, {2, 0}};
  v = validate_relation(3, sym);
  REQUIRE(v.size() == 1);
  CHECK(v[0].axiom == Axiom::Asymmetry);

  Relation refl{{1, 1}, {1, 0}};
  v = validate_relation(2, refl);
  REQUIRE(!v.empty());
  CHECK(v[0].axiom == Axiom::AntiReflexivity);

  Relation no_root{{1, 2}};
  v = validate_relation(3, no_root);
  CHECK(std::any_of(v.begin(), v.end(), [](const Violation& x) { return x.axiom == Axiom::GreatestElement; }));
}

TEST_CASE("encode: worked example {F0601, C09}") {
  const auto t = small();
  const std::vector<std::string> codes = {"F0601", "C09"};
  const auto p = encode_topic_path(codes, t);
  REQUIRE(p.levels.size() == 4);
  CHECK(p.levels[0] == root_set());
  CHECK(p.levels[1] == ls(t, {"F", "C"}));
  CHECK(p.levels[2] == ls(t, {"F06", "C09"}));
  CHECK(p.levels[3] == ls(t, {"F0601"}, true));
  const auto back = decode_topic_path(p, t);
  CHECK(back == std::vector<std::string>{"C09", "F0601"});
}

TEST_CASE("encode stop placement") {
  const auto t = fixture_taxonomy();
  auto enc = [&](std::vector<std::string> c) { return encode_topic_path(c, t); };

  auto p = enc({"A"});
  REQUIRE(p.levels.size() == 3);
  CHECK(p.levels[2] == LabelSet{{}, true});

  p = enc({"A0101"});
  REQUIRE(p.effective_depth() == 4);
  CHECK(p.levels[4] == LabelSet{{}, true});

  // Full depth: stop joins L_H.
  p = enc({"A010101"});
  REQUIRE(p.effective_depth() == 4);
  CHECK(p.levels[4] == ls(t, {"A010101"}, true));

  // Ancestors are subsumed.
  CHECK(enc({"A01", "A0102"}) == enc({"A0102"}));

  CHECK(encode_topic_path(std::vector<std::string>{}, t).levels.size() == 2);
  CHECK_ERROR(enc({"Q"}), ErrorCode::UnknownCode);
}

TEST_CASE("decode rejects incoherent paths") {
  const auto t = small();
  TopicPath p{{root_set(), ls(t, {"F"}), ls(t, {"C09"})}};
  CHECK_ERROR(decode_topic_path(p, t), ErrorCode::IncoherentPath);
  CHECK(path_incoherence(p, t).has_value());
  TopicPath q{{root_set(), ls(t, {"F"}), LabelSet{{}, true}}};
  CHECK(decode_topic_path(q, t) == std::vector<std::string>{"F"});
  CHECK_FALSE(path_incoherence(q, t).has_value());
}

TEST_CASE("encode/decode round trip on 1000 random code sets") {
  const auto t = fixture_taxonomy();
  std::mt19937_64 rng(12345);
  std::vector<std::string> all;
  for (const auto& d : t.nodes()) {
    if (d.id != kRootId) all.push_back(d.code);
  }
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 4;
    std::set<std::string> picked;
    while (picked.size() < n) picked.insert(all[rng() % all.size()]);
    // Drop codes that are ancestors of other picks; those are subsumed.
    std::vector<std::string> antichain;
    for (const auto& c : picked) {
      bool ancestor = false;
      for (const auto& o : picked) ancestor |= o != c && o.starts_with(c);
      if (!ancestor) antichain.push_back(c);
    }
    const std::vector<std::string> codes(picked.begin(), picked.end());
    const auto p = encode_topic_path(codes, t);
    CHECK_FALSE(path_incoherence(p, t).has_value());
    const auto back = decode_topic_path(p, t);
    CHECK(back == antichain);
    CHECK(encode_topic_path(back, t) == p);
  }
}
