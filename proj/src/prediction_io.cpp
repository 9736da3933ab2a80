#include "hirpcn/prediction_io.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>

#include "hirpcn/error.hpp"

namespace hirpcn {

namespace {

nlohmann::ordered_json heads_to_json(const std::vector<ad::Matrix>& heads) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& m : heads) {
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const auto row = m.row(r);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    out.push_back(std::move(rows));
  }
  return out;
}

std::string join(const std::vector<std::string>& codes) {
  std::string out;
  for (const auto& c : codes) {
    if (!out.empty()) out += ' ';
    out += c;
  }
  return out;
}

}  // namespace

nlohmann::ordered_json path_to_json(const TopicPath& p, const DisciplineTaxonomy& t) {
  auto out = nlohmann::ordered_json::array();
  for (std::size_t k = 1; k < p.levels.size(); ++k) {
    std::vector<std::string> codes;
    for (DisciplineId id : p.levels[k].labels) codes.push_back(t.at(id).code);
    std::sort(codes.begin(), codes.end());
    if (p.levels[k].stop) codes.emplace_back(kStopToken);
    out.push_back(codes);
  }
  return out;
}

TopicPath path_from_json(const nlohmann::json& j, const DisciplineTaxonomy& t) {
  if (!j.is_array()) throw Error(ErrorCode::SchemaError, "path must be an array of arrays");
  TopicPath p;
  p.levels.push_back(LabelSet{{kRootId}, false});
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_array()) throw Error(ErrorCode::SchemaError, "path level " + std::to_string(k + 1) + " is not an array");
    LabelSet set;
    for (const auto& c : j[k]) {
      if (!c.is_string()) throw Error(ErrorCode::SchemaError, "path entries must be strings");
      const auto code = c.get<std::string>();
      if (code == kStopToken) {
        set.stop = true;
        continue;
      }
      const DisciplineId id = t.id_of(code);
      if (t.at(id).level != static_cast<int>(k) + 1) {
        throw Error(ErrorCode::SchemaError, "'" + code + "' listed at level " + std::to_string(k + 1));
      }
      set.labels.insert(id);
    }
    p.levels.push_back(std::move(set));
  }
  return p;
}

nlohmann::ordered_json prediction_to_json(const std::string& id, const Prediction& p,
                                          const DisciplineTaxonomy& t, bool attention) {
  nlohmann::ordered_json j;
  j["id"] = id;
  j["path"] = path_to_json(p.path, t);
  auto probs = nlohmann::ordered_json::array();
  for (const auto& s : p.steps) probs.push_back(s.probs);
  j["probs"] = std::move(probs);
  if (attention) {
    nlohmann::ordered_json a;
    auto doc = nlohmann::ordered_json::array();
    for (const auto& layer : p.document_attention) doc.push_back(heads_to_json(layer));
    a["document"] = std::move(doc);
    auto steps = nlohmann::ordered_json::array();
    for (const auto& s : p.steps) {
      nlohmann::ordered_json js;
      js["level"] = s.level;
      auto self = nlohmann::ordered_json::array();
      for (const auto& layer : s.self_attention) self.push_back(heads_to_json(layer));
      auto cross = nlohmann::ordered_json::array();
      for (const auto& layer : s.cross_attention) cross.push_back(heads_to_json(layer));
      js["self"] = std::move(self);
      js["cross"] = std::move(cross);
      steps.push_back(std::move(js));
    }
    a["steps"] = std::move(steps);
    j["attention"] = std::move(a);
  }
  return j;
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path,
                                               const DisciplineTaxonomy& t) {
  const std::string text = read_file(path);
  std::vector<PredictionRecord> out;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line.size() > kMaxLineBytes) throw Error(ErrorCode::ParseError, "line " + std::to_string(n) + ": too long");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(n) + ": " + e.what());
    }
    for (const char* field : {"id", "path"}) {
      if (!j.contains(field)) {
        throw Error(ErrorCode::SchemaError, "line " + std::to_string(n) + ": missing field '" + field + "'");
      }
    }
    out.push_back({j["id"].get<std::string>(), path_from_json(j["path"], t)});
  }
  return out;
}

EvaluationReport evaluate_paths(std::span<const std::string> ids, std::span<const TopicPath> preds,
                                std::span<const TopicPath> truths, const DisciplineTaxonomy& t) {
  EvaluationReport r;
  r.f1 = f1_report(preds, truths, t);
  r.distance = distance_report(preds, truths, t);
  r.wrong_cases = wrong_case_report(preds, truths, t);
  r.json["f1"] = to_json(r.f1);
  r.json["distance"] = to_json(r.distance);
  r.json["wrong_cases"] = to_json(r.wrong_cases);
  r.json["samples"] = preds.size();

  std::ostringstream csv;
  csv << "id,level,truth,pred,case,distance\n";
  for (std::size_t s = 0; s < preds.size(); ++s) {
    const auto cases = wrong_cases(preds[s], truths[s], t);
    for (std::size_t k = 0; k < cases.size(); ++k) {
      const int level = static_cast<int>(k) + 1;
      const auto truth_codes = codes_at(truths[s], level, t);
      const auto pred_codes = codes_at(preds[s], level, t);
      csv << ids[s] << ',' << level << ',' << join(truth_codes) << ',' << join(pred_codes) << ','
          << to_string(cases[k]) << ',' << level_distance(truth_codes, pred_codes, level, t) << '\n';
    }
  }
  r.csv = csv.str();
  return r;
}

EvaluationReport evaluate_predictions(std::span<const PredictionRecord> preds,
                                      std::span<const Proposal> truth, const DisciplineTaxonomy& t) {
  std::unordered_map<std::string, const PredictionRecord*> by_id;
  for (const auto& p : preds) by_id.emplace(p.id, &p);
  std::vector<std::string> ids;
  std::vector<TopicPath> pred_paths, truth_paths;
  for (const auto& p : truth) {
    const auto it = by_id.find(p.id);
    if (it == by_id.end()) throw Error(ErrorCode::LengthMismatch, "no prediction for '" + p.id + "'");
    ids.push_back(p.id);
    pred_paths.push_back(it->second->path);
    truth_paths.push_back(encode_topic_path(p.labels, t));
  }
  return evaluate_paths(ids, pred_paths, truth_paths, t);
}

}  // namespace hirpcn
