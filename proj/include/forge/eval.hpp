#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "forge/manifest.hpp"
#include "forge/model.hpp"
#include "forge/stats.hpp"
#include "forge/transport.hpp"

namespace forge::eval {

// ---- answer extraction ----

/// Letter of the last "A)".."E)" in the response by byte offset; N if none.
Choice parse_answer(std::string_view response);

/// Answer-like strings the parser deliberately ignores (lowercase "a)",
/// full-width letters or parentheses). Logged so parsing can be audited.
std::vector<std::string> answer_near_misses(std::string_view response);

// ---- prompts ----

class PromptCatalog {
 public:
  static PromptCatalog load(const std::filesystem::path& path);
  static PromptCatalog from_json(const Json& j);
  // data/prompts.json from the source tree.
  static PromptCatalog load_default();

  bool has_language(std::string_view lang) const { return system_.contains(std::string(lang)); }
  const std::string& system_prompt(std::string_view lang) const;  // throws MissingPrompt
  const std::string& task_prompt(std::string_view name) const;    // throws MissingPrompt
  std::vector<std::string> languages() const;

  // Question text followed by the five labelled options.
  std::string user_text(const ProblemRecord& record) const;

 private:
  std::map<std::string, std::string> system_;
  std::map<std::string, std::string> tasks_;
  std::string user_template_;
};

std::filesystem::path default_prompt_path();

// ---- model access ----

struct ChatRequest {
  std::string system;
  std::string text;
  std::string image_b64;  // empty when no image is attached
};

class ModelClient {
 public:
  virtual ~ModelClient() = default;
  // Must be safe to call from several threads at once.
  virtual std::string chat(const ChatRequest& request) = 0;
  virtual std::string id() const = 0;
};

// POST {base}/chat {"system","text","image_b64"} -> {"text"}.
class HttpModelClient : public ModelClient {
 public:
  HttpModelClient(transport::Endpoint endpoint, transport::RetryPolicy retry = {}, std::string id = "http-model");
  std::string chat(const ChatRequest& request) override;
  std::string id() const override { return id_; }

 private:
  transport::Endpoint endpoint_;
  transport::RetryPolicy retry_;
  std::string id_;
};

struct EvalResult {
  std::string problem_id;
  std::string language;
  int run_index = 0;
  std::string raw_response;
  Choice parsed = Choice::N;
  bool correct = false;
  std::string error;  // non-empty when the query failed; parsed is then N
  std::vector<std::string> near_misses;
};

struct EvalOptions {
  int runs = 1;
  std::size_t concurrency = 4;
  bool attach_images = true;
  std::filesystem::path image_root;  // image_ref is resolved against this
};

/// runs x |manifest| results ordered by (run, manifest position). Failures of
/// individual queries are recorded on the result instead of being thrown.
std::vector<EvalResult> evaluate(const DatasetManifest& manifest, ModelClient& client, const PromptCatalog& prompts,
                                 const EvalOptions& options = {});

/// Re-derives parsed/correct from raw_response, e.g. after a parser change.
void reparse(std::vector<EvalResult>& results, const std::vector<ProblemRecord>& problems);

Json to_json(const EvalResult& r);
EvalResult eval_result_from_json(const Json& j);
void append_results(const std::vector<EvalResult>& results, const std::filesystem::path& path);
std::vector<EvalResult> read_results(const std::filesystem::path& path);

// ---- aggregation ----

struct LanguageInfo {
  std::string code;
  std::optional<double> presence;  // percent of web content
  std::optional<ResourceClass> cluster;

  // Presence and cluster from the built-in table when known.
  static LanguageInfo of(std::string_view code);
};

struct LanguageAccuracy {
  std::string language;
  std::size_t num_problems = 0;
  std::size_t runs = 0;
  stats::AccuracySummary accuracy;
};

struct ClusterMean {
  ResourceClass cluster = ResourceClass::High;
  double mean = 0.0;
  std::vector<std::string> members;
};

struct AccuracyReport {
  std::vector<LanguageAccuracy> languages;  // in requested order
  std::vector<ClusterMean> clusters;        // High, Mid, Low; empty clusters omitted
  std::optional<double> english;
  std::optional<stats::CorrelationResult> presence_correlation;  // needs >= 2 varying languages
};

/// Throws MissingLanguage when a requested language has no results, and
/// InvalidCounts when runs of one language cover different numbers of problems.
AccuracyReport aggregate(std::span<const EvalResult> results, std::span<const LanguageInfo> languages);

Json to_json(const AccuracyReport& report);
std::string format_report(const AccuracyReport& report);

/// Two-proportion test of English accuracy on `subset` against English
/// accuracy on the remaining problems, pooled over runs.
double subset_independence_pvalue(std::span<const EvalResult> english_results, const std::set<std::string>& subset);

// ---- human comparison ----

enum class Outcome { Correct, Incorrect, Blank };

struct HumanRecord {
  std::string participant_id;
  int level = 0;
  std::map<int, Outcome> outcomes;  // problem number -> outcome
};

/// CSV columns: participant_id, level, problem_number, outcome (C, I or B).
/// A header line is optional.
std::vector<HumanRecord> read_human_csv(const std::filesystem::path& path);

/// #Correct + #Blank/5, optionally restricted to some problem numbers.
double human_score(const HumanRecord& record);
double human_score(const HumanRecord& record, const std::set<int>& problems);

/// 100 x share of the level's participants whose score is strictly below
/// model_score. Scores are computed on `problems` when given.
double percentile_rank(double model_score, std::span<const HumanRecord> humans, int level,
                       const std::optional<std::set<int>>& problems = std::nullopt);

/// Default Weight Correlation blocks: the level's problems sorted by number and
/// cut into thirds weighted 0.33, 0.66 and 1.0.
std::map<int, double> default_block_weights(const std::vector<int>& problem_numbers);

struct ProblemIndices {
  int problem = 0;
  double model_accuracy = 0.0;
  double difficulty = 0.0;       // mean participant credit
  double difficulty_top1 = 0.0;  // same over the top 1% (at least one participant)
  double discriminative = 0.0;   // top 20% minus bottom 20%
  double weight = 0.0;
};

struct DifficultyReport {
  int level = 0;
  std::size_t participants = 0;
  std::vector<ProblemIndices> problems;  // ascending problem number
  // nullopt when either side is constant
  std::optional<stats::CorrelationResult> difficulty;
  std::optional<stats::CorrelationResult> difficulty_top1;
  std::optional<stats::CorrelationResult> discriminative;
  std::optional<stats::CorrelationResult> weight;
};

/// Per-problem credit is 1 for Correct, 1/5 for Blank, 0 otherwise. Participants
/// are ranked by human_score on the evaluated problems (ties by participant_id).
/// Problems are those present in model_accuracy. Throws InsufficientParticipants
/// with fewer than 5 participants at the level.
DifficultyReport difficulty_indices(std::span<const HumanRecord> humans, int level,
                                    const std::map<int, double>& model_accuracy,
                                    const std::map<int, double>& block_weights = {});

/// Mean correctness per problem number over all runs, for problems of one level
/// (and one contest year when given, since numbers repeat across years).
std::map<int, double> model_problem_accuracy(std::span<const EvalResult> results,
                                             const std::vector<ProblemRecord>& problems, int level,
                                             std::optional<int> year = std::nullopt);

}  // namespace forge::eval
