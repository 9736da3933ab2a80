#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hirpcn/model.hpp"

namespace hirpcn {

struct GradCheckConfig {
  ModelConfig model;  // dropout is forced to 0; vocab_size comes from the corpus
  std::uint64_t seed = 1;
  std::size_t samples = 200;
  double tolerance = 1e-4;
  double step = 1e-6;
  /// Denominator floor of the relative error, so entries whose true
  /// gradient is ~0 are judged on absolute error instead.
  double floor = 1e-3;
};

struct GradCheckEntry {
  std::string param;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckResult {
  std::vector<GradCheckEntry> entries;
  std::vector<std::string> groups;  // parameter groups covered
  GradCheckEntry worst;
  double max_rel_error = 0.0;
  double seconds = 0.0;
  bool pass = false;
};

/// |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor);

/// Central differences of the teacher-forced loss of one synthetic proposal
/// whose truth path reaches the taxonomy's full depth, on the fixture
/// taxonomy. Every parameter tensor contributes at least one sampled entry;
/// lookup tables are sampled from the rows the proposal uses.
GradCheckResult grad_check(const GradCheckConfig& cfg);

}  // namespace hirpcn
