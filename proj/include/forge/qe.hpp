#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "forge/manifest.hpp"
#include "forge/model.hpp"
#include "forge/stats.hpp"
#include "forge/textmetrics.hpp"

// Backtranslation quality estimation: a forward translation x_t of source x_s is
// translated back by several independent models, each backtranslation is scored
// against x_s with chrF++, the scores are aggregated into M, and M is compared
// with the standard and high-quality thresholds.
namespace forge::qe {

struct Backtranslation {
  std::string backtranslator_id;
  std::string text;

  friend bool operator==(const Backtranslation&, const Backtranslation&) = default;
};

struct BacktranslationSet {
  TranslationRecord record;
  std::vector<Backtranslation> backtranslations;
};

enum class Aggregate { Max, Mean, Min };

std::string_view to_string(Aggregate a);
Aggregate aggregate_from_string(std::string_view s);

inline constexpr double kStandardThreshold = 0.625;
inline constexpr double kHighQualityThreshold = 0.85;

struct GateConfig {
  double threshold = kStandardThreshold;
  double high_quality_threshold = kHighQualityThreshold;
  Aggregate aggregate = Aggregate::Max;

  void validate() const;
};

enum class Verdict { Fail, Pass, PassHighQuality };

std::string_view to_string(Verdict v);

struct QualityReport {
  std::string problem_id;
  std::string target_lang;
  std::vector<std::string> backtranslator_ids;
  std::vector<double> per_backtranslator_scores;
  double aggregate_m = 0.0;
  Verdict verdict = Verdict::Fail;

  std::size_t num_backtranslators() const { return per_backtranslator_scores.size(); }
};

/// Element i is chrf_pp(reference = x_s, hypothesis = i-th backtranslation).
/// Throws EmptyBacktranslationSet; duplicate backtranslator ids are InvalidArgument.
std::vector<double> score_backtranslations(const BacktranslationSet& bt,
                                           const textmetrics::ChrfParams& params = {});

double aggregate(std::span<const double> scores, Aggregate how);

Verdict verdict_for(double m, const GateConfig& cfg);

QualityReport gate(const BacktranslationSet& bt, const GateConfig& cfg = {},
                   const textmetrics::ChrfParams& params = {});

// Gate from precomputed scores (used when scores come from an external scorer).
QualityReport gate_scores(std::string problem_id, std::string target_lang, std::vector<std::string> ids,
                          std::vector<double> scores, const GateConfig& cfg = {});

/// Threshold for the backtranslation metric that corresponds to a target on the
/// reference-based metric, given the fitted slope between the two.
double derive_threshold(double reference_metric_target, double l1_slope);

Json to_json(const QualityReport& report);

// -- metric validation ----------------------------------------------------

// Per-sample pair of a reference-based score and the QE score for the same sample.
struct ScorePairs {
  std::vector<double> reference;
  std::vector<double> estimate;
};

struct ValidationRow {
  std::string language;
  stats::CorrelationResult correlation;
  stats::L1FitResult fit;  // estimate ~ slope * reference, through the origin
};

/// One row per language: Spearman (or Pearson) correlation between the reference
/// score and the QE score, plus the through-origin L1 slope.
std::vector<ValidationRow> validation_report(const std::map<std::string, ScorePairs>& by_language,
                                             stats::CorrelationKind kind = stats::CorrelationKind::Spearman);

/// Reads "reference<ws>estimate" lines (a '#' starts a comment).
ScorePairs read_score_pairs(const std::filesystem::path& path);

std::string format_validation_table(const std::vector<ValidationRow>& rows);

}  // namespace forge::qe
