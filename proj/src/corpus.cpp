#include "hirpcn/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "hirpcn/error.hpp"
#include "hirpcn/seed.hpp"

namespace hirpcn {

std::string_view to_string(DocType t) noexcept {
  switch (t) {
    case DocType::Title: return "title";
    case DocType::Keywords: return "keywords";
    case DocType::Abstract: return "abstract";
    case DocType::ResearchField: return "research_field";
  }
  return "?";
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::array<std::vector<std::string>, kDocTypeCount> Proposal::documents() const {
  std::array<std::vector<std::string>, kDocTypeCount> docs;
  docs[0] = split_words(title);
  for (const auto& k : keywords) {
    for (auto& w : split_words(k)) docs[1].push_back(std::move(w));
  }
  docs[2] = split_words(abstract);
  docs[3] = split_words(research_field);
  return docs;
}

// ---------------------------------------------------------------------------

Vocabulary::Vocabulary() {
  words_ = {"<pad>", "<unk>", "<title>", "<keywords>", "<abstract>", "<research_field>"};
  for (std::size_t i = 0; i < words_.size(); ++i) ids_.emplace(words_[i], static_cast<std::int32_t>(i));
}

Vocabulary Vocabulary::build(std::span<const Proposal> corpus) {
  std::set<std::string> seen;
  for (const auto& p : corpus) {
    for (const auto& doc : p.documents()) seen.insert(doc.begin(), doc.end());
  }
  Vocabulary v;
  for (const auto& w : seen) {
    if (v.ids_.contains(w)) continue;
    v.ids_.emplace(w, static_cast<std::int32_t>(v.words_.size()));
    v.words_.push_back(w);
  }
  return v;
}

std::int32_t Vocabulary::lookup(std::string_view word) const {
  const auto it = ids_.find(std::string(word));
  return it == ids_.end() ? kUnk : it->second;
}

nlohmann::json Vocabulary::to_json() const {
  return nlohmann::json{{"words", words_}};
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  if (!j.contains("words") || !j["words"].is_array()) {
    throw Error(ErrorCode::SchemaError, "vocabulary missing 'words'");
  }
  Vocabulary v;
  const auto words = j["words"].get<std::vector<std::string>>();
  if (words.size() < static_cast<std::size_t>(kFirstWord) ||
      !std::equal(v.words_.begin(), v.words_.end(), words.begin())) {
    throw Error(ErrorCode::SchemaError, "vocabulary reserved ids do not match");
  }
  v.words_ = words;
  v.ids_.clear();
  for (std::size_t i = 0; i < v.words_.size(); ++i) {
    v.ids_.emplace(v.words_[i], static_cast<std::int32_t>(i));
  }
  return v;
}

TokenizedProposal tokenize(const Proposal& p, const Vocabulary& vocab, std::size_t doc_len) {
  TokenizedProposal out;
  out.doc_len = doc_len;
  const auto docs = p.documents();
  for (std::size_t t = 0; t < kDocTypeCount; ++t) {
    auto& row = out.tokens[t];
    row.assign(doc_len, Vocabulary::kPad);
    if (doc_len == 0) continue;
    row[0] = Vocabulary::type_token(static_cast<DocType>(t));
    const std::size_t n = std::min(docs[t].size(), doc_len - 1);
    for (std::size_t i = 0; i < n; ++i) row[i + 1] = vocab.lookup(docs[t][i]);
  }
  return out;
}

// ---------------------------------------------------------------------------

void CorpusConfig::validate() const {
  auto bad = [](const std::string& why) { throw Error(ErrorCode::ConfigInvalid, why); };
  if (shared_topic_rate < 0.0 || shared_topic_rate > 1.0) bad("shared_topic_rate outside [0,1]");
  if (interdisciplinary_rate < 0.0 || interdisciplinary_rate > 1.0) {
    bad("interdisciplinary_rate outside [0,1]");
  }
  if (vocab_per_discipline == 0) bad("vocab_per_discipline must be positive");
  if (doc_len < 2) bad("doc_len must be at least 2");
  double total = 0.0;
  for (double w : depth_weights) {
    if (w < 0.0) bad("negative depth weight");
    total += w;
  }
  if (total <= 0.0) bad("depth_weights sum to zero");
}

namespace {

// Portable RNG helpers: the standard distributions are implementation
// defined, the raw mt19937_64 stream is not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }
  double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  std::size_t weighted(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double r = unit() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (r < weights[i]) return i;
      r -= weights[i];
    }
    for (std::size_t i = weights.size(); i-- > 0;) {
      if (weights[i] > 0.0) return i;
    }
    return 0;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

 private:
  std::mt19937_64 gen_;
};

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

constexpr std::string_view kFillers[] = {
    "the",    "and",      "of",      "study",   "method", "based",   "approach", "research",
    "novel",  "analysis", "towards", "using",   "new",    "system",  "model",    "key",
    "theory", "for",      "with",    "applied", "its",    "general", "problem",  "efficient",
};

bool related(const DisciplineTaxonomy& t, DisciplineId a, DisciplineId b) {
  return a == b || t.is_ancestor(a, b) || t.is_ancestor(b, a);
}

}  // namespace

std::span<const std::string_view> filler_words() noexcept { return kFillers; }

std::vector<std::vector<std::string>> planted_vocabularies(const DisciplineTaxonomy& t,
                                                          const CorpusConfig& cfg) {
  cfg.validate();
  const std::size_t n = t.size();
  const std::size_t per = cfg.vocab_per_discipline;
  const auto borrowed =
      static_cast<std::size_t>(std::llround(cfg.shared_topic_rate * static_cast<double>(per)));
  const std::size_t native = per - std::min(borrowed, per);

  std::vector<std::vector<std::string>> vocab(n);
  std::vector<std::vector<std::string>> free_native(n);
  for (const auto& d : t.nodes()) {
    if (d.id == kRootId) continue;
    const std::string stem = lower(d.code) + "w";
    for (std::size_t i = 0; i < native; ++i) {
      auto w = stem + std::to_string(i);
      vocab[static_cast<std::size_t>(d.id)].push_back(w);
      free_native[static_cast<std::size_t>(d.id)].push_back(std::move(w));
    }
  }

  Rng rng(derive_seed(cfg.seed, "planted-vocabulary"));
  std::set<std::pair<DisciplineId, DisciplineId>> sharing;
  for (const auto& d : t.nodes()) {
    if (d.id == kRootId) continue;
    for (std::size_t k = 0; k < per - native; ++k) {
      std::vector<DisciplineId> donors;
      for (const auto& other : t.nodes()) {
        if (other.id == kRootId || related(t, d.id, other.id)) continue;
        if (free_native[static_cast<std::size_t>(other.id)].empty()) continue;
        if (sharing.contains({std::min(d.id, other.id), std::max(d.id, other.id)})) continue;
        donors.push_back(other.id);
      }
      if (donors.empty()) break;
      const DisciplineId donor = donors[rng.index(donors.size())];
      auto& pool = free_native[static_cast<std::size_t>(donor)];
      const std::size_t pick = rng.index(pool.size());
      vocab[static_cast<std::size_t>(d.id)].push_back(pool[pick]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
      sharing.emplace(std::min(d.id, donor), std::max(d.id, donor));
    }
  }
  return vocab;
}

std::vector<Proposal> generate_corpus(const DisciplineTaxonomy& t, const CorpusConfig& cfg) {
  cfg.validate();
  std::vector<Proposal> out;
  if (cfg.size == 0) return out;

  const auto letters = t.level(1);
  const auto n_inter = static_cast<std::size_t>(
      std::llround(cfg.interdisciplinary_rate * static_cast<double>(cfg.size)));
  if (n_inter > 0 && letters.size() < 2) {
    throw Error(ErrorCode::ConfigInvalid, "interdisciplinary proposals need two level-1 disciplines");
  }

  std::vector<double> depth_weights(static_cast<std::size_t>(t.depth()), 0.0);
  for (std::size_t i = 0; i < depth_weights.size() && i < cfg.depth_weights.size(); ++i) {
    depth_weights[i] = cfg.depth_weights[i];
  }
  if (std::all_of(depth_weights.begin(), depth_weights.end(), [](double w) { return w == 0.0; })) {
    throw Error(ErrorCode::ConfigInvalid, "no admissible label depth for this taxonomy");
  }

  const auto vocab = planted_vocabularies(t, cfg);
  Rng rng(derive_seed(cfg.seed, "corpus"));

  std::vector<std::size_t> order(cfg.size);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<bool> inter(cfg.size, false);
  for (std::size_t i = 0; i < n_inter; ++i) inter[order[i]] = true;

  auto random_code_under = [&](DisciplineId letter) {
    const std::size_t depth = rng.weighted(depth_weights) + 1;
    DisciplineId cur = letter;
    while (static_cast<std::size_t>(t.at(cur).level) < depth) {
      const auto& kids = t.at(cur).children;
      if (kids.empty()) break;
      cur = kids[rng.index(kids.size())];
    }
    return cur;
  };

  for (std::size_t i = 0; i < cfg.size; ++i) {
    std::vector<DisciplineId> codes;
    if (inter[i]) {
      const std::size_t a = rng.index(letters.size());
      std::size_t b = rng.index(letters.size() - 1);
      if (b >= a) ++b;
      codes.push_back(random_code_under(letters[a]));
      codes.push_back(random_code_under(letters[b]));
    } else {
      codes.push_back(random_code_under(letters[rng.index(letters.size())]));
    }

    // Prefix chains of every label, weighted toward deeper nodes.
    std::vector<std::vector<DisciplineId>> chains;
    for (DisciplineId c : codes) {
      std::vector<DisciplineId> chain;
      for (DisciplineId cur = c; cur != kRootId; cur = *t.at(cur).parent_id) chain.push_back(cur);
      std::reverse(chain.begin(), chain.end());
      chains.push_back(std::move(chain));
    }
    std::size_t turn = rng.index(chains.size());
    auto planted_word = [&]() -> const std::string& {
      const auto& chain = chains[turn++ % chains.size()];
      std::vector<double> w;
      for (DisciplineId id : chain) w.push_back(static_cast<double>(t.at(id).level));
      const auto& words = vocab[static_cast<std::size_t>(chain[rng.weighted(w)])];
      return words[rng.index(words.size())];
    };
    auto document = [&](std::size_t len) {
      const std::size_t fillers = len * 15 / 100;
      std::vector<std::string> words;
      for (std::size_t k = 0; k + fillers < len; ++k) words.push_back(planted_word());
      for (std::size_t k = 0; k < fillers; ++k) {
        const std::size_t at = rng.index(words.size() + 1);
        words.insert(words.begin() + static_cast<std::ptrdiff_t>(at),
                     std::string(kFillers[rng.index(std::size(kFillers))]));
      }
      std::string text;
      for (const auto& w : words) {
        if (!text.empty()) text += ' ';
        text += w;
      }
      return text;
    };

    Proposal p;
    char id[16];
    std::snprintf(id, sizeof id, "P%05zu", i);
    p.id = id;
    p.title = document(6 + rng.index(4));
    std::set<std::string> kw;
    for (int tries = 0; kw.size() < 4 && tries < 32; ++tries) kw.insert(planted_word());
    p.keywords.assign(kw.begin(), kw.end());
    p.abstract = document(cfg.doc_len / 2 + rng.index(cfg.doc_len + 1));
    p.research_field = document(3 + rng.index(2));
    for (DisciplineId c : codes) p.labels.push_back(t.at(c).code);
    std::sort(p.labels.begin(), p.labels.end());
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------

nlohmann::ordered_json proposal_to_json(const Proposal& p) {
  nlohmann::ordered_json j;
  j["id"] = p.id;
  j["title"] = p.title;
  j["keywords"] = p.keywords;
  j["abstract"] = p.abstract;
  j["research_field"] = p.research_field;
  j["labels"] = p.labels;
  return j;
}

Proposal proposal_from_json(const nlohmann::json& j, std::size_t line) {
  auto missing = [&](const char* field) {
    return Error(ErrorCode::SchemaError,
                 "line " + std::to_string(line) + ": missing or mistyped field '" + field + "'");
  };
  if (!j.is_object()) throw Error(ErrorCode::SchemaError, "line " + std::to_string(line) + ": not an object");
  auto str = [&](const char* field) {
    if (!j.contains(field) || !j[field].is_string()) throw missing(field);
    return j[field].get<std::string>();
  };
  auto list = [&](const char* field) {
    if (!j.contains(field) || !j[field].is_array()) throw missing(field);
    std::vector<std::string> v;
    for (const auto& e : j[field]) {
      if (!e.is_string()) throw missing(field);
      v.push_back(e.get<std::string>());
    }
    return v;
  };
  Proposal p;
  p.id = str("id");
  p.title = str("title");
  p.keywords = list("keywords");
  p.abstract = str("abstract");
  p.research_field = str("research_field");
  p.labels = list("labels");
  return p;
}

std::vector<Proposal> parse_corpus(std::string_view text) {
  std::vector<Proposal> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.size() > kMaxLineBytes) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": exceeds 1 MiB");
    }
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(proposal_from_json(j, line_no));
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<Proposal> read_corpus(const std::filesystem::path& path) {
  return parse_corpus(read_file(path));
}

std::string corpus_to_jsonl(std::span<const Proposal> corpus) {
  std::string out;
  for (const auto& p : corpus) {
    out += proposal_to_json(p).dump();
    out += '\n';
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCode::Io, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot rename into " + path.string() + ": " + ec.message());
}

void write_corpus(const std::filesystem::path& path, std::span<const Proposal> corpus) {
  write_file_atomic(path, corpus_to_jsonl(corpus));
}

}  // namespace hirpcn
