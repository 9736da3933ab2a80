#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hirpcn/corpus.hpp"
#include "hirpcn/metrics.hpp"
#include "hirpcn/model.hpp"

namespace hirpcn {

inline constexpr std::string_view kStopToken = "<stop>";

/// [["F","C"],["F06","C09"],["F0601","<stop>"]]; L_0 is implied.
nlohmann::ordered_json path_to_json(const TopicPath& p, const DisciplineTaxonomy& t);
/// Inverse of path_to_json. Throws SchemaError or UnknownCode.
TopicPath path_from_json(const nlohmann::json& j, const DisciplineTaxonomy& t);

/// {"id", "path", "probs"[, "attention"]}. Attention holds
/// "document" (per SIE block, per head) and "steps" (per step: level, then
/// "self" and "cross" per IF block, per head).
nlohmann::ordered_json prediction_to_json(const std::string& id, const Prediction& p,
                                          const DisciplineTaxonomy& t, bool attention);

struct PredictionRecord {
  std::string id;
  TopicPath path;
};

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path,
                                               const DisciplineTaxonomy& t);

struct EvaluationReport {
  F1Report f1;
  DistanceReport distance;
  WrongCaseReport wrong_cases;
  nlohmann::ordered_json json;  // {f1, distance, wrong_cases, samples}
  std::string csv;              // id,level,truth,pred,case,distance
};

/// Aligns predictions with truth proposals by id. Every truth id needs a
/// prediction. Throws LengthMismatch naming a missing id.
EvaluationReport evaluate_predictions(std::span<const PredictionRecord> preds,
                                      std::span<const Proposal> truth, const DisciplineTaxonomy& t);

EvaluationReport evaluate_paths(std::span<const std::string> ids, std::span<const TopicPath> preds,
                                std::span<const TopicPath> truths, const DisciplineTaxonomy& t);

}  // namespace hirpcn
