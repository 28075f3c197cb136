#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "forge/compose.hpp"
#include "forge/manifest.hpp"
#include "forge/model.hpp"
#include "forge/qe.hpp"
#include "forge/review.hpp"
#include "forge/transport.hpp"

namespace forge::pipeline {

// -- clients ----------------------------------------------------------------

class TranslationClient {
 public:
  virtual ~TranslationClient() = default;
  // Non-empty text or a thrown Error (TransportError for service failures).
  virtual std::string translate(std::string_view text, std::string_view src, std::string_view tgt) = 0;
  virtual std::string id() const = 0;
};

class EchoTranslationClient : public TranslationClient {
 public:
  explicit EchoTranslationClient(std::string id = "echo") : id_(std::move(id)) {}
  std::string translate(std::string_view text, std::string_view, std::string_view) override {
    return std::string(text);
  }
  std::string id() const override { return id_; }

 private:
  std::string id_;
};

// POST {base}/translate {"text","src","tgt"} -> {"text"}
class HttpTranslationClient : public TranslationClient {
 public:
  HttpTranslationClient(transport::Endpoint endpoint, transport::RetryPolicy retry = {}, std::string id = {});
  std::string translate(std::string_view text, std::string_view src, std::string_view tgt) override;
  std::string id() const override { return id_; }

 private:
  transport::Endpoint endpoint_;
  transport::RetryPolicy retry_;
  std::string id_;
};

enum class JudgeLabel { Corrupted, NotCorrupted };

std::string_view to_string(JudgeLabel l);

// Accepts exactly {"label": "corrupted"} or {"label": "not corrupted"};
// anything else is a JudgeProtocolError.
JudgeLabel parse_judge_response(std::string_view body);

class JudgeClient {
 public:
  virtual ~JudgeClient() = default;
  virtual JudgeLabel judge(std::string_view image_b64, std::string_view transcript) = 0;
};

class FixedJudgeClient : public JudgeClient {
 public:
  explicit FixedJudgeClient(JudgeLabel label = JudgeLabel::NotCorrupted) : label_(label) {}
  JudgeLabel judge(std::string_view, std::string_view) override { return label_; }

 private:
  JudgeLabel label_;
};

// POST {base}/judge {"image_b64","transcript"} -> {"label"}
class HttpJudgeClient : public JudgeClient {
 public:
  explicit HttpJudgeClient(transport::Endpoint endpoint, transport::RetryPolicy retry = {});
  JudgeLabel judge(std::string_view image_b64, std::string_view transcript) override;

 private:
  transport::Endpoint endpoint_;
  transport::RetryPolicy retry_;
};

// -- cleaning and filtering -------------------------------------------------

struct CleanRule {
  std::string pattern;      // ICU regex
  std::string replacement;  // $1 refers to groups
};

// Soft hyphens, words hyphenated across a line break, stray line breaks and
// runs of spaces; applied in this order.
std::vector<CleanRule> default_clean_rules();

class Cleaner {
 public:
  explicit Cleaner(std::vector<CleanRule> rules = default_clean_rules());  // ConfigError on a bad regex
  std::string apply(std::string_view text) const;
  ProblemRecord apply(ProblemRecord record) const;  // question and options

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

// One id per line; '#' starts a comment.
std::set<std::string> read_blocklist(const std::filesystem::path& path);

// -- dedup --------------------------------------------------------------------

struct DedupResult {
  std::vector<ProblemRecord> kept;                          // input order
  std::vector<std::pair<std::string, std::string>> removed;  // (removed id, id that outranked it)
};

/// A record is dropped when some other record with text_similarity >= threshold
/// ranks before it by (level, year, number, id). Every pair is judged on its
/// own, so the result does not depend on input order. threshold in (0, 1].
DedupResult dedup_report(const std::vector<ProblemRecord>& pool, double threshold = 0.90,
                         std::size_t concurrency = 1);
std::vector<ProblemRecord> dedup(const std::vector<ProblemRecord>& pool, double threshold = 0.90);

// -- corruption check ---------------------------------------------------------

struct CorruptionFlag {
  std::string problem_id;
  JudgeLabel label = JudgeLabel::Corrupted;
  int round = 1;
  bool resolved = false;
};

struct JudgeItem {
  ProblemRecord record;
  std::string transcript;
  std::string image_b64;  // empty when the image is unavailable
};

// Question followed by "A) ..." .. "E) ..." lines.
std::string transcript_of(const ProblemRecord& record);

/// Judges every item and returns a flag for each one labelled corrupted, in
/// batch order. Judge errors are not swallowed.
std::vector<CorruptionFlag> corruption_pass(const std::vector<JudgeItem>& batch, JudgeClient& judge, int round = 1,
                                            std::size_t concurrency = 1);

struct CorruptionOptions {
  int max_rounds = 5;
  std::size_t concurrency = 1;
  std::filesystem::path image_root;
  // Called after each round's flags were enqueued; tests use it to act as the reviewer.
  std::function<void(int round)> after_round;
  // Cached labels by (problem id, transcript) from an earlier run.
  std::map<std::pair<std::string, std::string>, JudgeLabel> cached;
  // Receives every label actually judged (for the audit log).
  std::function<void(const JudgeItem&, JudgeLabel, int round)> on_judged;
};

struct CorruptionResult {
  std::vector<ProblemRecord> clean;  // input order, fixes applied
  std::vector<CorruptionFlag> flags;
  int rounds = 0;
  std::set<std::string> excluded;    // flagged and never resolved, or discarded in review
};

/// Round 1 judges everything; each flagged sample gets a CorruptionFix task.
/// Later rounds re-judge only samples whose task was fixed since the last
/// round. The loop stops when a round raises no new flag or after max_rounds.
/// Fixes already in the store are applied before round 1.
CorruptionResult corruption_loop(const std::vector<ProblemRecord>& records, JudgeClient& judge,
                                 review::ReviewStore& store, const CorruptionOptions& options = {});

// -- translation ----------------------------------------------------------------

struct SampleFailure {
  std::string problem_id;
  std::string language;
  std::string stage;
  std::string error;  // ErrorCode name
  std::string message;
};

struct TranslateResult {
  std::vector<TranslationRecord> records;  // question texts, input order, failures skipped
  std::vector<ProblemRecord> problems;     // translated question and options, aligned with records
  std::vector<SampleFailure> failures;
  std::vector<std::string> length_warnings;  // problem ids
};

// Output length outside [0.2, 5] times the input length (in code points).
bool length_suspicious(std::string_view source, std::string_view target);

/// Translates question and options of each record. Options without any letter
/// (numbers, formulas) are copied. A failing sample lands in `failures` and
/// never stops the batch.
TranslateResult translate_stage(const std::vector<ProblemRecord>& records, const LanguageTag& source,
                                const LanguageTag& target, TranslationClient& client, std::size_t concurrency = 1);

// -- configuration and the full run ------------------------------------------

inline const std::vector<std::string> kStageOrder = {"clean", "blocklist", "dedup",   "corruption",
                                                     "translate", "qe",    "compose", "manifest"};

struct ComposeSettings {
  std::filesystem::path font_dir;  // empty: bundled fonts
  compose::LayoutConfig layout;
};

struct PipelineConfig {
  std::string source_lang = "eng";
  std::vector<std::string> languages;
  std::filesystem::path pool;
  std::filesystem::path out_dir;
  std::filesystem::path image_root;  // image_ref is relative to this
  std::optional<std::filesystem::path> blocklist;
  std::optional<std::filesystem::path> review_store;
  std::vector<std::string> stages = kStageOrder;
  std::size_t concurrency = 4;
  double dedup_threshold = 0.90;
  int max_rounds = 5;
  qe::GateConfig gate;
  std::vector<CleanRule> clean_rules = default_clean_rules();
  std::string translator = "echo";                   // "echo" or an http:// endpoint
  std::vector<std::string> backtranslators{"echo"};  // distinct
  std::string judge = "accept";                      // "accept" or an http:// endpoint
  bool enqueue_scoring = false;  // a TranslationScore task for every emitted sample
  ComposeSettings compose;

  bool has_stage(std::string_view s) const;
  void validate() const;  // ConfigError

  // Relative paths are resolved against the config file's directory.
  static PipelineConfig from_json(const Json& j, const std::filesystem::path& base_dir = {});
  static PipelineConfig load(const std::filesystem::path& path);
};

struct PipelineClients {
  std::shared_ptr<TranslationClient> translator;
  std::vector<std::shared_ptr<TranslationClient>> backtranslators;
  std::shared_ptr<JudgeClient> judge;
};

PipelineClients make_clients(const PipelineConfig& config, transport::RetryPolicy retry = {});

struct LanguageOutcome {
  std::string language;
  std::vector<qe::QualityReport> reports;  // one per gated sample, pool order
  std::size_t standard = 0;
  std::size_t high_quality = 0;
  std::filesystem::path standard_path;
  std::filesystem::path high_quality_path;
};

struct PipelineResult {
  std::size_t pool_size = 0;
  std::size_t after_filters = 0;  // after clean/blocklist/dedup/corruption
  std::vector<std::string> blocked;
  std::vector<std::pair<std::string, std::string>> duplicates;
  std::vector<CorruptionFlag> flags;
  std::vector<LanguageOutcome> languages;
  std::vector<SampleFailure> failures;
  std::vector<std::string> length_warnings;  // "lang:id"
  std::filesystem::path audit_log;
};

struct RunOptions {
  bool resume = false;  // reuse translate/qe/judge results from the audit log
  std::function<void(int round)> after_corruption_round;
};

/// clean -> blocklist -> dedup -> corruption -> per language: translate -> qe
/// -> compose -> manifest. Writes out_dir/<lang>/{standard,high_quality}.jsonl
/// and out_dir/audit.jsonl. A null store means an in-memory one (or the
/// configured review_store directory).
PipelineResult run_pipeline(const PipelineConfig& config, const PipelineClients& clients,
                            review::ReviewStore* store = nullptr, const RunOptions& options = {});

}  // namespace forge::pipeline
