#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "hirpcn/taxonomy.hpp"

namespace hirpcn {

enum class DocType : std::size_t { Title = 0, Keywords = 1, Abstract = 2, ResearchField = 3 };
inline constexpr std::size_t kDocTypeCount = 4;

std::string_view to_string(DocType t) noexcept;

struct Proposal {
  std::string id;
  std::string title;
  std::vector<std::string> keywords;  // doubles as the topic set
  std::string abstract;
  std::string research_field;
  std::vector<std::string> labels;  // ApplyID codes

  /// Word sequences in fixed type order: title, keywords, abstract, field.
  std::array<std::vector<std::string>, kDocTypeCount> documents() const;

  friend bool operator==(const Proposal&, const Proposal&) = default;
};

/// Token ids: 0 pad, 1 unk, 2..5 the four type tokens, then corpus words.
class Vocabulary {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;
  static constexpr std::int32_t kFirstWord = 2 + static_cast<std::int32_t>(kDocTypeCount);

  Vocabulary();

  /// Every word seen in the corpus (min frequency 1), ids in lexicographic
  /// word order.
  static Vocabulary build(std::span<const Proposal> corpus);

  static std::int32_t type_token(DocType t) noexcept {
    return 2 + static_cast<std::int32_t>(t);
  }

  std::int32_t lookup(std::string_view word) const;
  std::size_t size() const noexcept { return words_.size(); }
  const std::string& word(std::int32_t id) const { return words_.at(static_cast<std::size_t>(id)); }

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.words_ == b.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::int32_t> ids_;
};

struct TokenizedProposal {
  /// One row per document type, each exactly doc_len ids; position 0 holds
  /// the type token.
  std::array<std::vector<std::int32_t>, kDocTypeCount> tokens;
  std::size_t doc_len = 0;

  friend bool operator==(const TokenizedProposal&, const TokenizedProposal&) = default;
};

/// Total and deterministic. Unknown words map to kUnk; a document keeps its
/// first doc_len - 1 words after the type token, then pads with kPad.
TokenizedProposal tokenize(const Proposal& p, const Vocabulary& vocab, std::size_t doc_len);

std::vector<std::string> split_words(std::string_view text);

// ---------------------------------------------------------------------------
// Synthetic corpus.

struct CorpusConfig {
  std::uint64_t seed = 7;
  std::size_t size = 500;
  std::size_t vocab_per_discipline = 20;
  double shared_topic_rate = 0.1;
  double interdisciplinary_rate = 0.3;
  std::size_t doc_len = 32;
  /// Relative frequency of label depth 1..H; missing entries count as 0.
  std::vector<double> depth_weights = {0.1, 0.15, 0.25, 0.5};

  /// Throws ConfigInvalid.
  void validate() const;
};

/// Planted word lists, indexed by discipline id (root entry empty). Each
/// discipline owns `vocab_per_discipline` words, a `shared_topic_rate`
/// fraction of which are borrowed from other disciplines. Any two
/// disciplines share at most one planted word.
std::vector<std::vector<std::string>> planted_vocabularies(const DisciplineTaxonomy& t,
                                                          const CorpusConfig& cfg);

/// Filler words used for the non-planted share of each document.
std::span<const std::string_view> filler_words() noexcept;

/// Deterministic given cfg.seed. Exactly round(size * interdisciplinary_rate)
/// proposals carry two codes under distinct level-1 letters. At least 80% of
/// each document's words come from the planted vocabularies of the labeled
/// disciplines' prefix chains. Throws ConfigInvalid.
std::vector<Proposal> generate_corpus(const DisciplineTaxonomy& t, const CorpusConfig& cfg);

// ---------------------------------------------------------------------------
// JSONL.

nlohmann::ordered_json proposal_to_json(const Proposal& p);
/// Throws SchemaError naming the first missing or mistyped field.
Proposal proposal_from_json(const nlohmann::json& j, std::size_t line);

/// One proposal per line. Blank lines are skipped. Throws ParseError(line),
/// SchemaError(line, field) or Io.
std::vector<Proposal> read_corpus(const std::filesystem::path& path);
std::vector<Proposal> parse_corpus(std::string_view text);
void write_corpus(const std::filesystem::path& path, std::span<const Proposal> corpus);
std::string corpus_to_jsonl(std::span<const Proposal> corpus);

/// Lines longer than this are rejected as ParseError.
inline constexpr std::size_t kMaxLineBytes = 1u << 20;

/// Writes through a temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace hirpcn
