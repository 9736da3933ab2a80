#include "hirpcn/metrics.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "hirpcn/error.hpp"

namespace hirpcn {

namespace {

void require_aligned(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(a) + " predictions vs " + std::to_string(b) + " truths");
  }
}

double f1_of(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::vector<std::string> codes_at(const TopicPath& p, int k, const DisciplineTaxonomy& t) {
  std::vector<std::string> out;
  for (DisciplineId id : p.labels_at(k)) out.push_back(t.at(id).code);
  std::sort(out.begin(), out.end());
  return out;
}

F1Report f1_report(std::span<const TopicPath> preds, std::span<const TopicPath> truths,
                   const DisciplineTaxonomy& t) {
  require_aligned(preds.size(), truths.size());
  const int depth = t.depth();
  // Keyed by id; ids are assigned in (level, code) order.
  std::map<DisciplineId, ClassScore> scores;
  for (std::size_t s = 0; s < preds.size(); ++s) {
    for (int k = 1; k <= depth; ++k) {
      const auto& p = preds[s].labels_at(k);
      const auto& g = truths[s].labels_at(k);
      for (DisciplineId id : p) {
        auto& c = scores[id];
        (g.contains(id) ? c.tp : c.fp) += 1;
      }
      for (DisciplineId id : g) {
        if (!p.contains(id)) scores[id].fn += 1;
      }
    }
  }
  F1Report r;
  std::vector<std::size_t> tp(depth, 0), fp(depth, 0), fn(depth, 0);
  std::vector<double> macro_sum(depth, 0.0);
  std::vector<std::size_t> macro_n(depth, 0);
  double all_macro = 0.0;
  for (auto& [id, c] : scores) {
    const auto& d = t.at(id);
    c.level = d.level;
    c.code = d.code;
    c.precision = ratio(c.tp, c.tp + c.fp);
    c.recall = ratio(c.tp, c.tp + c.fn);
    c.f1 = f1_of(c.tp, c.fp, c.fn);
    const auto k = static_cast<std::size_t>(d.level) - 1;
    tp[k] += c.tp;
    fp[k] += c.fp;
    fn[k] += c.fn;
    macro_sum[k] += c.f1;
    macro_n[k] += 1;
    all_macro += c.f1;
    r.classes.push_back(c);
  }
  std::size_t TP = 0, FP = 0, FN = 0;
  for (int k = 0; k < depth; ++k) {
    r.level_micro.push_back(f1_of(tp[k], fp[k], fn[k]));
    r.level_macro.push_back(macro_n[k] == 0 ? 1.0 : macro_sum[k] / static_cast<double>(macro_n[k]));
    TP += tp[k];
    FP += fp[k];
    FN += fn[k];
  }
  r.micro_f1 = f1_of(TP, FP, FN);
  r.macro_f1 = r.classes.empty() ? 1.0 : all_macro / static_cast<double>(r.classes.size());
  return r;
}

int code_distance(std::string_view l, std::string_view l_hat, const DisciplineTaxonomy& t) {
  const int dl = t.at(t.id_of(l)).level;
  const int dh = t.at(t.id_of(l_hat)).level;
  const int common = std::min(dl, dh);
  int diverge = 0;
  for (int k = 1; k <= common && diverge == 0; ++k) {
    if (code_prefix(l, k) != code_prefix(l_hat, k)) diverge = k;
  }
  if (diverge == 0) {
    if (dl == dh) return 0;
    diverge = common + 1;
  }
  const int remaining = std::clamp(dl - diverge, 0, static_cast<int>(kDistancePenalty.size()) - 1);
  return kDistancePenalty[static_cast<std::size_t>(remaining)];
}

double level_distance(std::span<const std::string> truth, std::span<const std::string> pred, int k,
                      const DisciplineTaxonomy& t) {
  if (truth.empty() && pred.empty()) return 0.0;
  if (truth.empty() || pred.empty()) return static_cast<double>(k);
  double total = 0.0;
  for (const auto& l : truth) {
    int best = std::numeric_limits<int>::max();
    for (const auto& lh : pred) best = std::min(best, code_distance(l, lh, t));
    total += best;
  }
  return total;
}

DistanceReport distance_report(std::span<const TopicPath> preds, std::span<const TopicPath> truths,
                               const DisciplineTaxonomy& t) {
  require_aligned(preds.size(), truths.size());
  DistanceReport r;
  const int depth = t.depth();
  r.level_mean.assign(static_cast<std::size_t>(depth), 0.0);
  if (preds.empty()) return r;
  for (std::size_t s = 0; s < preds.size(); ++s) {
    for (int k = 1; k <= depth; ++k) {
      r.level_mean[static_cast<std::size_t>(k) - 1] +=
          level_distance(codes_at(truths[s], k, t), codes_at(preds[s], k, t), k, t);
    }
  }
  for (auto& v : r.level_mean) v /= static_cast<double>(preds.size());
  for (double v : r.level_mean) r.mean += v;
  r.mean /= static_cast<double>(depth);
  return r;
}

std::string_view to_string(WrongCase c) noexcept {
  switch (c) {
    case WrongCase::Correct: return "Correct";
    case WrongCase::Lack: return "Lack";
    case WrongCase::TooMuch: return "TooMuch";
    case WrongCase::Wrong: return "Wrong";
    case WrongCase::Other: return "Other";
  }
  return "?";
}

std::vector<WrongCase> wrong_cases(const TopicPath& pred, const TopicPath& truth,
                                   const DisciplineTaxonomy& t) {
  const int levels = std::max(pred.effective_depth(), truth.effective_depth());
  std::vector<WrongCase> out;
  for (int k = 1; k <= levels; ++k) {
    const auto& p = pred.labels_at(k);
    const auto& g = truth.labels_at(k);
    if (p == g) {
      out.push_back(WrongCase::Correct);
    } else if (p.empty()) {
      out.push_back(WrongCase::Lack);
    } else if (g.empty()) {
      out.push_back(WrongCase::TooMuch);
    } else {
      const auto& prev = k == 1 ? std::set<DisciplineId>{kRootId} : pred.labels_at(k - 1);
      const bool broken = std::any_of(p.begin(), p.end(), [&](DisciplineId id) {
        const auto& d = t.at(id);
        return !d.parent_id || !prev.contains(*d.parent_id);
      });
      out.push_back(broken ? WrongCase::Wrong : WrongCase::Other);
    }
  }
  return out;
}

WrongCaseReport wrong_case_report(std::span<const TopicPath> preds, std::span<const TopicPath> truths,
                                  const DisciplineTaxonomy& t) {
  require_aligned(preds.size(), truths.size());
  WrongCaseReport r;
  r.counts.assign(static_cast<std::size_t>(t.depth()), {});
  for (std::size_t s = 0; s < preds.size(); ++s) {
    const auto cases = wrong_cases(preds[s], truths[s], t);
    for (std::size_t k = 0; k < cases.size(); ++k) {
      if (cases[k] == WrongCase::Correct) {
        ++r.correct;
        continue;
      }
      const auto c = static_cast<std::size_t>(cases[k]) - 1;
      if (k >= r.counts.size()) r.counts.resize(k + 1, {});
      ++r.counts[k][c];
      ++r.totals[c];
      ++r.mismatches;
    }
  }
  return r;
}

nlohmann::ordered_json to_json(const F1Report& r) {
  nlohmann::ordered_json j;
  j["micro_f1"] = r.micro_f1;
  j["macro_f1"] = r.macro_f1;
  j["level_micro_f1"] = r.level_micro;
  j["level_macro_f1"] = r.level_macro;
  auto classes = nlohmann::ordered_json::array();
  for (const auto& c : r.classes) {
    nlohmann::ordered_json jc;
    jc["level"] = c.level;
    jc["code"] = c.code;
    jc["tp"] = c.tp;
    jc["fp"] = c.fp;
    jc["fn"] = c.fn;
    jc["precision"] = c.precision;
    jc["recall"] = c.recall;
    jc["f1"] = c.f1;
    classes.push_back(std::move(jc));
  }
  j["classes"] = std::move(classes);
  return j;
}

nlohmann::ordered_json to_json(const DistanceReport& r) {
  nlohmann::ordered_json j;
  j["level_mean"] = r.level_mean;
  j["mean"] = r.mean;
  j["penalty"] = kDistancePenalty;
  return j;
}

nlohmann::ordered_json to_json(const WrongCaseReport& r) {
  static constexpr std::array<WrongCase, 4> kinds = {WrongCase::Lack, WrongCase::TooMuch,
                                                     WrongCase::Wrong, WrongCase::Other};
  nlohmann::ordered_json j;
  auto levels = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < r.counts.size(); ++k) {
    nlohmann::ordered_json jl;
    jl["level"] = k + 1;
    for (std::size_t c = 0; c < kinds.size(); ++c) jl[std::string(to_string(kinds[c]))] = r.counts[k][c];
    levels.push_back(std::move(jl));
  }
  j["levels"] = std::move(levels);
  nlohmann::ordered_json totals;
  for (std::size_t c = 0; c < kinds.size(); ++c) totals[std::string(to_string(kinds[c]))] = r.totals[c];
  j["totals"] = std::move(totals);
  j["mismatches"] = r.mismatches;
  j["correct"] = r.correct;
  return j;
}

}  // namespace hirpcn
