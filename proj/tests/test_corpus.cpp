#include <filesystem>
#include <set>

#include <doctest.h>

#include "hirpcn/corpus.hpp"
#include "test_util.hpp"

using namespace hirpcn;
using testutil::fixture_taxonomy;

namespace {

Proposal sample_proposal() {
  Proposal p;
  p.id = "P1";
  p.title = "deep mining algorithm";
  p.keywords = {"mining", "graph"};
  p.abstract = "";
  p.research_field = "data";
  p.labels = {"F06"};
  return p;
}

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "hirpcn_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("tokenize pads, prepends the type token and truncates") {
  const std::vector<Proposal> corpus = {sample_proposal()};
  const auto vocab = Vocabulary::build(corpus);
  const auto tp = tokenize(corpus[0], vocab, 8);
  const auto title = static_cast<std::size_t>(DocType::Title);
  const auto abs = static_cast<std::size_t>(DocType::Abstract);
  CHECK(tp.tokens[abs] == std::vector<std::int32_t>{Vocabulary::type_token(DocType::Abstract), 0, 0, 0, 0, 0, 0, 0});
  CHECK(tp.tokens[title] == std::vector<std::int32_t>{Vocabulary::type_token(DocType::Title), vocab.lookup("deep"),
                                                      vocab.lookup("mining"), vocab.lookup("algorithm"), 0, 0, 0, 0});
  CHECK(vocab.lookup("deep") >= Vocabulary::kFirstWord);
  CHECK(vocab.lookup("never-seen") == Vocabulary::kUnk);

  Proposal longp = sample_proposal();
  longp.abstract = "a b c d e f g h i j k l";
  const auto t2 = tokenize(longp, vocab, 8);
  for (const auto& d : t2.tokens) CHECK(d.size() == 8);
  CHECK(tokenize(longp, vocab, 8) == t2);
}

TEST_CASE("vocabulary reserves ids and round-trips through JSON") {
  const std::vector<Proposal> corpus = {sample_proposal()};
  const auto vocab = Vocabulary::build(corpus);
  CHECK(vocab.size() == static_cast<std::size_t>(Vocabulary::kFirstWord) + 5);  // deep mining algorithm graph data
  CHECK(Vocabulary::from_json(vocab.to_json()) == vocab);
}

TEST_CASE("generator: deterministic, exact interdisciplinary count, coherent labels") {
  const auto t = fixture_taxonomy();
  CorpusConfig cfg;
  CHECK(generate_corpus(t, CorpusConfig{.size = 0}).empty());
  const auto a = generate_corpus(t, cfg);
  const auto b = generate_corpus(t, cfg);
  REQUIRE(a.size() == 500);
  CHECK(corpus_to_jsonl(a) == corpus_to_jsonl(b));

  std::size_t inter = 0;
  for (const auto& p : a) {
    std::set<char> letters;
    for (const auto& c : p.labels) letters.insert(c.front());
    inter += letters.size() >= 2;
    CHECK_FALSE(path_incoherence(encode_topic_path(p.labels, t), t).has_value());
  }
  CHECK(inter == 150);

  cfg.seed = 8;
  CHECK(corpus_to_jsonl(generate_corpus(t, cfg)) != corpus_to_jsonl(a));
}

TEST_CASE("generator: at least 80% of document words are planted for the labels") {
  const auto t = fixture_taxonomy();
  CorpusConfig cfg;
  const auto vocab = planted_vocabularies(t, cfg);
  const auto corpus = generate_corpus(t, cfg);
  for (const auto& p : corpus) {
    std::set<std::string> allowed;
    for (const auto& code : p.labels) {
      for (auto id = t.id_of(code); id != kRootId; id = *t.at(id).parent_id) {
        allowed.insert(vocab[static_cast<std::size_t>(id)].begin(), vocab[static_cast<std::size_t>(id)].end());
      }
    }
    for (const auto& doc : p.documents()) {
      if (doc.empty()) continue;
      std::size_t planted = 0;
      for (const auto& w : doc) planted += allowed.contains(w);
      CHECK(static_cast<double>(planted) >= 0.8 * static_cast<double>(doc.size()));
    }
  }
}

TEST_CASE("generator separability: non-sibling leaves overlap below shared rate + 0.05") {
  const auto t = fixture_taxonomy();
  CorpusConfig cfg;
  const auto vocab = planted_vocabularies(t, cfg);
  const auto leaves = t.level(t.depth());
  for (auto a : leaves) {
    const auto& va = vocab[static_cast<std::size_t>(a)];
    REQUIRE(va.size() == cfg.vocab_per_discipline);
    const std::set<std::string> sa(va.begin(), va.end());
    for (auto b : leaves) {
      if (a == b || t.at(a).parent_id == t.at(b).parent_id) continue;
      std::size_t shared = 0;
      for (const auto& w : vocab[static_cast<std::size_t>(b)]) shared += sa.contains(w);
      CHECK(static_cast<double>(shared) / static_cast<double>(va.size()) < cfg.shared_topic_rate + 0.05);
    }
  }
}

TEST_CASE("generator config validation") {
  const auto t = fixture_taxonomy();
  CHECK_ERROR(generate_corpus(t, CorpusConfig{.interdisciplinary_rate = 1.5}), ErrorCode::ConfigInvalid);
  CHECK_ERROR(generate_corpus(t, CorpusConfig{.shared_topic_rate = -0.1}), ErrorCode::ConfigInvalid);
}

TEST_CASE("JSONL round trip and errors") {
  const auto t = fixture_taxonomy();
  const auto corpus = generate_corpus(t, CorpusConfig{.size = 20});
  const auto path = temp_path("corpus.jsonl");
  write_corpus(path, corpus);
  CHECK(read_corpus(path) == corpus);
  CHECK(parse_corpus("").empty());
  CHECK(parse_corpus("\n\n").empty());

  CHECK_ERROR(parse_corpus("{not json}\n"), ErrorCode::ParseError);
  try {
    parse_corpus(R"({"id":"x","title":"","keywords":[],"abstract":"","research_field":""})");
    FAIL("expected SchemaError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaError);
    CHECK(std::string(e.what()).find("labels") != std::string::npos);
  }
  CHECK_ERROR(read_corpus(temp_path("missing.jsonl")), ErrorCode::Io);
}
