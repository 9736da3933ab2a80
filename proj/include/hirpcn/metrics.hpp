#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hirpcn/taxonomy.hpp"

namespace hirpcn {

struct ClassScore {
  int level = 0;
  std::string code;
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

/// Decisions are (level, label) pairs; stop markers are not labels.
struct F1Report {
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> level_micro;  // index k - 1
  std::vector<double> level_macro;
  std::vector<ClassScore> classes;  // sorted by (level, code)
};

/// Micro F1 pools TP/FP/FN over all decisions; macro averages per-class F1
/// over classes present in truth or prediction. With nothing to score
/// (2TP + FP + FN = 0) F1 is 1. Throws LengthMismatch.
F1Report f1_report(std::span<const TopicPath> preds, std::span<const TopicPath> truths,
                   const DisciplineTaxonomy& t);

/// Penalty by remaining levels after the first divergence: 0->1, 1->10,
/// 2->30, 3 or more->50.
inline constexpr std::array<int, 4> kDistancePenalty = {1, 10, 30, 50};

/// Prefix-divergence distance from truth code l to predicted code l_hat.
/// Remaining levels count from the first differing level to l's depth; when
/// one code extends the other the divergence is one past the shorter depth.
/// Throws UnknownCode.
int code_distance(std::string_view l, std::string_view l_hat, const DisciplineTaxonomy& t);

/// Sum over truth labels of the closest predicted label's distance; k when
/// exactly one set is empty, 0 when both are.
double level_distance(std::span<const std::string> truth, std::span<const std::string> pred, int k,
                      const DisciplineTaxonomy& t);

struct DistanceReport {
  std::vector<double> level_mean;  // index k - 1
  double mean = 0.0;               // mean over levels of level_mean
};

DistanceReport distance_report(std::span<const TopicPath> preds, std::span<const TopicPath> truths,
                               const DisciplineTaxonomy& t);

enum class WrongCase { Correct, Lack, TooMuch, Wrong, Other };

std::string_view to_string(WrongCase c) noexcept;

/// Category of every level 1..max(depth of either path). Wrong means some
/// predicted label's parent is missing from the predicted previous set.
/// Priority: Lack, TooMuch, Wrong, Other.
std::vector<WrongCase> wrong_cases(const TopicPath& pred, const TopicPath& truth,
                                   const DisciplineTaxonomy& t);

struct WrongCaseReport {
  /// counts[k - 1][c] for c in Lack, TooMuch, Wrong, Other.
  std::vector<std::array<std::size_t, 4>> counts;
  std::array<std::size_t, 4> totals{};
  std::size_t mismatches = 0;  // (sample, level) pairs that differ
  std::size_t correct = 0;
};

WrongCaseReport wrong_case_report(std::span<const TopicPath> preds, std::span<const TopicPath> truths,
                                  const DisciplineTaxonomy& t);

/// Codes at level k of a path, sorted.
std::vector<std::string> codes_at(const TopicPath& p, int k, const DisciplineTaxonomy& t);

nlohmann::ordered_json to_json(const F1Report& r);
nlohmann::ordered_json to_json(const DistanceReport& r);
nlohmann::ordered_json to_json(const WrongCaseReport& r);

}  // namespace hirpcn
