#include "forge/qe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "forge/error.hpp"

namespace forge::qe {

std::string_view to_string(Aggregate a) {
  switch (a) {
    case Aggregate::Max: return "max";
    case Aggregate::Mean: return "mean";
    case Aggregate::Min: return "min";
  }
  return "max";
}

Aggregate aggregate_from_string(std::string_view s) {
  if (s == "max") return Aggregate::Max;
  if (s == "mean") return Aggregate::Mean;
  if (s == "min") return Aggregate::Min;
  throw Error(ErrorCode::InvalidArgument, "unknown aggregate '" + std::string(s) + "'");
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Fail: return "fail";
    case Verdict::Pass: return "pass";
    case Verdict::PassHighQuality: return "pass_high_quality";
  }
  return "fail";
}

void GateConfig::validate() const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(threshold) || !in_unit(high_quality_threshold)) {
    throw Error(ErrorCode::InvalidArgument, "thresholds must lie in [0,1]");
  }
  if (high_quality_threshold < threshold) {
    throw Error(ErrorCode::InvalidArgument, "high_quality_threshold must be >= threshold");
  }
}

std::vector<double> score_backtranslations(const BacktranslationSet& bt, const textmetrics::ChrfParams& params) {
  if (bt.backtranslations.empty()) {
    throw Error(ErrorCode::EmptyBacktranslationSet, "no backtranslations for '" + bt.record.problem_id + "'");
  }
  std::set<std::string_view> ids;
  std::vector<double> scores;
  scores.reserve(bt.backtranslations.size());
  for (const auto& b : bt.backtranslations) {
    if (!ids.insert(b.backtranslator_id).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate backtranslator id '" + b.backtranslator_id + "'");
    }
    scores.push_back(textmetrics::chrf_pp(bt.record.source_text, b.text, params).value);
  }
  return scores;
}

double aggregate(std::span<const double> scores, Aggregate how) {
  if (scores.empty()) throw Error(ErrorCode::EmptyBacktranslationSet, "nothing to aggregate");
  switch (how) {
    case Aggregate::Max: return *std::max_element(scores.begin(), scores.end());
    case Aggregate::Min: return *std::min_element(scores.begin(), scores.end());
    case Aggregate::Mean:
      return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
  }
  return 0.0;
}

Verdict verdict_for(double m, const GateConfig& cfg) {
  if (m < cfg.threshold) return Verdict::Fail;
  if (m >= cfg.high_quality_threshold) return Verdict::PassHighQuality;
  return Verdict::Pass;
}

QualityReport gate_scores(std::string problem_id, std::string target_lang, std::vector<std::string> ids,
                          std::vector<double> scores, const GateConfig& cfg) {
  cfg.validate();
  if (scores.empty()) throw Error(ErrorCode::EmptyBacktranslationSet, "no scores for '" + problem_id + "'");
  QualityReport r;
  r.problem_id = std::move(problem_id);
  r.target_lang = std::move(target_lang);
  r.backtranslator_ids = std::move(ids);
  r.per_backtranslator_scores = std::move(scores);
  r.aggregate_m = aggregate(r.per_backtranslator_scores, cfg.aggregate);
  r.verdict = verdict_for(r.aggregate_m, cfg);
  return r;
}

QualityReport gate(const BacktranslationSet& bt, const GateConfig& cfg, const textmetrics::ChrfParams& params) {
  std::vector<std::string> ids;
  for (const auto& b : bt.backtranslations) ids.push_back(b.backtranslator_id);
  return gate_scores(bt.record.problem_id, bt.record.target_lang.code, std::move(ids),
                     score_backtranslations(bt, params), cfg);
}

double derive_threshold(double reference_metric_target, double l1_slope) {
  if (!(l1_slope > 0.0)) throw Error(ErrorCode::NonPositiveSlope, "slope must be > 0");
  return reference_metric_target / l1_slope;
}

Json to_json(const QualityReport& r) {
  Json j;
  j["problem_id"] = r.problem_id;
  j["target_lang"] = r.target_lang;
  j["backtranslators"] = r.backtranslator_ids;
  j["scores"] = r.per_backtranslator_scores;
  j["num_backtranslators"] = r.num_backtranslators();
  j["M"] = r.aggregate_m;
  j["verdict"] = std::string(to_string(r.verdict));
  return j;
}

std::vector<ValidationRow> validation_report(const std::map<std::string, ScorePairs>& by_language,
                                             stats::CorrelationKind kind) {
  std::vector<ValidationRow> rows;
  for (const auto& [lang, pairs] : by_language) {
    ValidationRow row;
    row.language = lang;
    row.correlation = kind == stats::CorrelationKind::Spearman ? stats::spearman(pairs.reference, pairs.estimate)
                                                                : stats::pearson(pairs.reference, pairs.estimate);
    row.fit = stats::l1_slope(pairs.reference, pairs.estimate, true);
    rows.push_back(row);
  }
  // strongest correlation first
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ValidationRow& a, const ValidationRow& b) { return a.correlation.rho > b.correlation.rho; });
  return rows;
}

ScorePairs read_score_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  ScorePairs out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    double a = 0.0, b = 0.0;
    if (!(ss >> a)) continue;
    if (!(ss >> b)) {
      throw Error(ErrorCode::MalformedRecord, path.string() + ":" + std::to_string(line_no) + ": expected two numbers");
    }
    out.reference.push_back(a);
    out.estimate.push_back(b);
  }
  return out;
}

std::string format_validation_table(const std::vector<ValidationRow>& rows) {
  std::ostringstream out;
  out << "language\tn\trho\tp_value\tl1_slope\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s\t%zu\t%.2f\t%.3e\t%.4f\n", r.language.c_str(), r.correlation.n,
                  r.correlation.rho, r.correlation.p_value, r.fit.slope);
    out << buf;
  }
  return out.str();
}

}  // namespace forge::qe
