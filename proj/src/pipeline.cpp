#include "forge/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <sstream>
#include <tuple>

#include <unicode/regex.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "forge/config.hpp"
#include "forge/error.hpp"
#include "forge/parallel.hpp"
#include "forge/textmetrics.hpp"
#include "forge/unicode.hpp"

namespace forge::pipeline {

namespace fs = std::filesystem;

namespace {

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string message_of(const Error& e) {
  const std::string what = e.what();
  const auto prefix = std::string(to_string(e.code())) + ": ";
  return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
}

SampleFailure failure_from(std::string id, std::string lang, std::string stage, std::exception_ptr ep) {
  SampleFailure f{std::move(id), std::move(lang), std::move(stage), "Unexpected", ""};
  try {
    std::rethrow_exception(ep);
  } catch (const Error& e) {
    f.error = std::string(to_string(e.code()));
    f.message = message_of(e);
  } catch (const std::exception& e) {
    f.message = e.what();
  }
  return f;
}

Json failure_json(const SampleFailure& f) {
  Json j{{"stage", f.stage}, {"problem_id", f.problem_id}};
  if (!f.language.empty()) j["lang"] = f.language;
  j["outcome"] = "failed";
  j["error"] = f.error;
  j["message"] = f.message;
  return j;
}

Json options_json(const ProblemRecord& r) {
  Json a = Json::array();
  for (const auto& o : r.options) a.push_back(o);
  return a;
}

}  // namespace

// -- clients ------------------------------------------------------------------

HttpTranslationClient::HttpTranslationClient(transport::Endpoint endpoint, transport::RetryPolicy retry, std::string id)
    : endpoint_(std::move(endpoint)), retry_(std::move(retry)), id_(id.empty() ? endpoint_.url() : std::move(id)) {}

std::string HttpTranslationClient::translate(std::string_view text, std::string_view src, std::string_view tgt) {
  const std::string body = Json{{"text", text}, {"src", src}, {"tgt", tgt}}.dump();
  return transport::with_retry(retry_, [&] {
    const std::string raw = transport::post_json(endpoint_, "/translate", body);
    Json j;
    try {
      j = Json::parse(raw);
    } catch (const Json::exception&) {
      throw Error(ErrorCode::TransportError, "translate: response is not JSON");
    }
    if (!j.is_object() || !j.contains("text") || !j["text"].is_string())
      throw Error(ErrorCode::TransportError, "translate: response has no text field");
    auto out = j["text"].get<std::string>();
    if (out.empty()) throw Error(ErrorCode::EmptyText, "translate: empty translation");
    return out;
  });
}

std::string_view to_string(JudgeLabel l) { return l == JudgeLabel::Corrupted ? "corrupted" : "not corrupted"; }

JudgeLabel parse_judge_response(std::string_view body) {
  Json j;
  try {
    j = Json::parse(body);
  } catch (const Json::exception&) {
    throw Error(ErrorCode::JudgeProtocolError, "judge response is not JSON");
  }
  if (!j.is_object() || !j.contains("label") || !j["label"].is_string())
    throw Error(ErrorCode::JudgeProtocolError, "judge response has no label");
  const auto label = j["label"].get<std::string>();
  if (label == "corrupted") return JudgeLabel::Corrupted;
  if (label == "not corrupted") return JudgeLabel::NotCorrupted;
  throw Error(ErrorCode::JudgeProtocolError, "unknown judge label '" + label + "'");
}

HttpJudgeClient::HttpJudgeClient(transport::Endpoint endpoint, transport::RetryPolicy retry)
    : endpoint_(std::move(endpoint)), retry_(std::move(retry)) {}

JudgeLabel HttpJudgeClient::judge(std::string_view image_b64, std::string_view transcript) {
  const std::string body = Json{{"image_b64", image_b64}, {"transcript", transcript}}.dump();
  const std::string raw = transport::with_retry(retry_, [&] { return transport::post_json(endpoint_, "/judge", body); });
  return parse_judge_response(raw);
}

// -- cleaning -------------------------------------------------------------------

std::vector<CleanRule> default_clean_rules() {
  return {
      {R"(\u00AD)", ""},
      {R"((\p{L})-[ \t]*\R[ \t]*(\p{Ll}))", "$1$2"},
      {R"([ \t]*\R[ \t]*)", " "},
      {R"([ \t]{2,})", " "},
      {R"(^[ \t]+|[ \t]+$)", ""},
  };
}

struct Cleaner::Impl {
  std::vector<std::pair<std::unique_ptr<icu::RegexPattern>, icu::UnicodeString>> rules;
};

Cleaner::Cleaner(std::vector<CleanRule> rules) {
  auto impl = std::make_shared<Impl>();
  for (const auto& r : rules) {
    UErrorCode status = U_ZERO_ERROR;
    UParseError perr{};
    std::unique_ptr<icu::RegexPattern> p(
        icu::RegexPattern::compile(icu::UnicodeString::fromUTF8(r.pattern), 0, perr, status));
    if (U_FAILURE(status))
      throw Error(ErrorCode::ConfigError, "bad clean rule '" + r.pattern + "': " + u_errorName(status));
    impl->rules.emplace_back(std::move(p), icu::UnicodeString::fromUTF8(r.replacement));
  }
  impl_ = std::move(impl);
}

std::string Cleaner::apply(std::string_view text) const {
  icu::UnicodeString s = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  for (const auto& [pattern, replacement] : impl_->rules) {
    UErrorCode status = U_ZERO_ERROR;
    std::unique_ptr<icu::RegexMatcher> m(pattern->matcher(s, status));
    icu::UnicodeString out = m->replaceAll(replacement, status);
    if (U_FAILURE(status)) throw Error(ErrorCode::InvalidArgument, std::string("clean rule failed: ") + u_errorName(status));
    s = out;
  }
  std::string out;
  s.toUTF8String(out);
  return out;
}

ProblemRecord Cleaner::apply(ProblemRecord record) const {
  record.question_text = apply(record.question_text);
  for (auto& o : record.options) o = apply(o);
  return record;
}

std::set<std::string> read_blocklist(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read blocklist " + path.string());
  std::set<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    ids.insert(line.substr(b, e - b + 1));
  }
  return ids;
}

// -- dedup ----------------------------------------------------------------------

DedupResult dedup_report(const std::vector<ProblemRecord>& pool, double threshold, std::size_t concurrency) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "dedup threshold must be in (0, 1]");
  const std::size_t n = pool.size();
  std::vector<textmetrics::TrigramSet> grams(n);
  parallel_for(n, concurrency, [&](std::size_t i) { grams[i] = textmetrics::trigram_set(pool[i].question_text); });

  auto rank = [&](std::size_t i) {
    const auto& r = pool[i];
    return std::tie(r.level, r.year, r.number, r.id);
  };
  // winner[i]: best-ranked record that outranks i and is similar enough, or n
  std::vector<std::size_t> winner(n, n);
  parallel_for(n, concurrency, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !(rank(j) < rank(i))) continue;
      if (winner[i] != n && !(rank(j) < rank(winner[i]))) continue;
      const double a = static_cast<double>(grams[i].size()), b = static_cast<double>(grams[j].size());
      if (std::max(a, b) > 0 && std::min(a, b) / std::max(a, b) < threshold) continue;
      if (textmetrics::jaccard(grams[i], grams[j]) >= threshold) winner[i] = j;
    }
  });

  DedupResult out;
  for (std::size_t i = 0; i < n; ++i) {
    if (winner[i] == n) {
      out.kept.push_back(pool[i]);
    } else {
      out.removed.emplace_back(pool[i].id, pool[winner[i]].id);
    }
  }
  return out;
}

std::vector<ProblemRecord> dedup(const std::vector<ProblemRecord>& pool, double threshold) {
  return dedup_report(pool, threshold).kept;
}

// -- corruption -------------------------------------------------------------------

std::string transcript_of(const ProblemRecord& r) {
  std::string t = r.question_text;
  for (std::size_t i = 0; i < r.options.size(); ++i) {
    t += '\n';
    t += to_char(kOptionLabels[i]);
    t += ") ";
    t += r.options[i];
  }
  return t;
}

std::vector<CorruptionFlag> corruption_pass(const std::vector<JudgeItem>& batch, JudgeClient& judge, int round,
                                            std::size_t concurrency) {
  std::vector<JudgeLabel> labels(batch.size());
  parallel_for(batch.size(), concurrency,
               [&](std::size_t i) { labels[i] = judge.judge(batch[i].image_b64, batch[i].transcript); });
  std::vector<CorruptionFlag> flags;
  for (std::size_t i = 0; i < batch.size(); ++i)
    if (labels[i] == JudgeLabel::Corrupted) flags.push_back({batch[i].record.id, JudgeLabel::Corrupted, round, false});
  return flags;
}

namespace {

void apply_fix(ProblemRecord& r, const review::TaskFix& fix) {
  if (fix.text) r.question_text = *fix.text;
  if (fix.bbox) r.bbox = *fix.bbox;
}

JudgeItem judge_item(const ProblemRecord& r, const fs::path& image_root) {
  JudgeItem item{r, transcript_of(r), {}};
  if (!r.image_ref.empty()) {
    const fs::path p = image_root / r.image_ref;
    std::error_code ec;
    if (fs::is_regular_file(p, ec)) item.image_b64 = transport::base64_encode(read_bytes(p));
  }
  return item;
}

Json task_payload(const ProblemRecord& r, const fs::path& image_root) {
  Json p{{"image_ref", r.image_ref},
         {"question_text", r.question_text},
         {"options", options_json(r)},
         {"bbox", Json{{"x", r.bbox.x}, {"y", r.bbox.y}, {"w", r.bbox.width}, {"h", r.bbox.height}}}};
  try {
    const auto img = compose::read_png(image_root / r.image_ref);
    p["image_width"] = img.width;
    p["image_height"] = img.height;
  } catch (const Error&) {
    // size unknown; bbox fixes are then only checked for positivity
  }
  return p;
}

}  // namespace

CorruptionResult corruption_loop(const std::vector<ProblemRecord>& records, JudgeClient& judge,
                                 review::ReviewStore& store, const CorruptionOptions& options) {
  if (options.max_rounds < 1) throw Error(ErrorCode::InvalidArgument, "max_rounds must be >= 1");
  std::vector<ProblemRecord> working = records;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < working.size(); ++i) index[working[i].id] = i;

  for (auto& r : working)
    if (auto fix = store.latest_fix(review::TaskKind::CorruptionFix, r.id)) apply_fix(r, *fix);
  store.take_recheck(review::TaskKind::CorruptionFix);  // already applied above

  CorruptionResult result;
  const auto discarded = store.discarded("");
  std::set<std::string> withheld;

  auto judge_batch = [&](const std::vector<std::size_t>& which, int round) {
    std::vector<JudgeItem> batch(which.size());
    parallel_for(which.size(), options.concurrency,
                 [&](std::size_t k) { batch[k] = judge_item(working[which[k]], options.image_root); });
    std::vector<JudgeLabel> labels(batch.size());
    std::vector<char> fresh(batch.size(), 0);
    parallel_for(batch.size(), options.concurrency, [&](std::size_t k) {
      const auto hit = options.cached.find({batch[k].record.id, batch[k].transcript});
      if (hit != options.cached.end()) {
        labels[k] = hit->second;
      } else {
        labels[k] = judge.judge(batch[k].image_b64, batch[k].transcript);
        fresh[k] = 1;
      }
    });
    if (options.on_judged)
      for (std::size_t k = 0; k < batch.size(); ++k)
        if (fresh[k]) options.on_judged(batch[k], labels[k], round);
    std::vector<std::size_t> flagged;
    for (std::size_t k = 0; k < batch.size(); ++k) {
      const auto& r = working[which[k]];
      if (labels[k] == JudgeLabel::Corrupted) {
        flagged.push_back(which[k]);
        result.flags.push_back({r.id, JudgeLabel::Corrupted, round, false});
        withheld.insert(r.id);
        if (!store.has_open(review::TaskKind::CorruptionFix, r.id))
          store.enqueue(review::TaskKind::CorruptionFix, r.id, task_payload(r, options.image_root));
      } else if (withheld.erase(r.id)) {
        for (auto& f : result.flags)
          if (f.problem_id == r.id) f.resolved = true;
      }
    }
    return flagged;
  };

  std::vector<std::size_t> all;
  for (std::size_t i = 0; i < working.size(); ++i)
    if (!discarded.count(working[i].id)) all.push_back(i);

  result.rounds = 1;
  auto flagged = judge_batch(all, 1);
  if (options.after_round) options.after_round(1);
  for (int round = 2; !flagged.empty() && round <= options.max_rounds; ++round) {
    std::vector<std::size_t> recheck;
    for (const auto& item : store.take_recheck(review::TaskKind::CorruptionFix)) {
      const auto it = index.find(item.problem_id);
      if (it == index.end()) continue;
      apply_fix(working[it->second], item.fix);
      if (std::find(recheck.begin(), recheck.end(), it->second) == recheck.end()) recheck.push_back(it->second);
    }
    if (recheck.empty()) break;  // nobody has fixed anything yet
    std::sort(recheck.begin(), recheck.end());
    result.rounds = round;
    flagged = judge_batch(recheck, round);
    if (options.after_round) options.after_round(round);
  }

  const auto discarded_now = store.discarded("");
  result.excluded = withheld;
  for (const auto& r : working)
    if (discarded_now.count(r.id)) result.excluded.insert(r.id);
  for (const auto& r : working)
    if (!result.excluded.count(r.id)) result.clean.push_back(r);
  return result;
}

// -- translation ------------------------------------------------------------------

bool length_suspicious(std::string_view source, std::string_view target) {
  const double s = static_cast<double>(unicode::to_code_points(source).size());
  const double t = static_cast<double>(unicode::to_code_points(target).size());
  if (s == 0) return t != 0;
  return t < 0.2 * s || t > 5.0 * s;
}

namespace {

bool has_letter(std::string_view text) {
  for (char32_t cp : unicode::to_code_points(text))
    if (u_isalpha(static_cast<UChar32>(cp))) return true;
  return false;
}

struct Translated {
  ProblemRecord problem;
  TranslationRecord record;
  bool warning = false;
};

Translated translate_one(const ProblemRecord& r, const LanguageTag& src, const LanguageTag& tgt,
                         TranslationClient& client) {
  Translated t;
  t.problem = r;
  auto call = [&](const std::string& text) {
    std::string out = client.translate(text, src.code, tgt.code);
    if (out.empty()) throw Error(ErrorCode::EmptyText, "empty translation");
    if (length_suspicious(text, out)) t.warning = true;
    return out;
  };
  t.problem.question_text = call(r.question_text);
  for (auto& o : t.problem.options)
    if (has_letter(o)) o = call(o);
  t.record = TranslationRecord{r.id, src, tgt, r.question_text, t.problem.question_text, client.id()};
  validate(t.record);
  return t;
}

}  // namespace

TranslateResult translate_stage(const std::vector<ProblemRecord>& records, const LanguageTag& source,
                                const LanguageTag& target, TranslationClient& client, std::size_t concurrency) {
  if (source.code == target.code) throw Error(ErrorCode::InvalidArgument, "source and target language are equal");
  std::vector<std::optional<Translated>> done(records.size());
  std::vector<std::exception_ptr> errors(records.size());
  parallel_for(records.size(), concurrency, [&](std::size_t i) {
    try {
      done[i] = translate_one(records[i], source, target, client);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  TranslateResult out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (errors[i]) {
      out.failures.push_back(failure_from(records[i].id, target.code, "translate", errors[i]));
      continue;
    }
    if (done[i]->warning) out.length_warnings.push_back(records[i].id);
    out.records.push_back(std::move(done[i]->record));
    out.problems.push_back(std::move(done[i]->problem));
  }
  return out;
}

// -- configuration ------------------------------------------------------------------

bool PipelineConfig::has_stage(std::string_view s) const {
  return std::find(stages.begin(), stages.end(), s) != stages.end();
}

void PipelineConfig::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::ConfigError, m); };
  if (!is_valid_language_code(source_lang)) bad("source_lang '" + source_lang + "' is not a language code");
  std::set<std::string> seen;
  for (const auto& l : languages) {
    if (!is_valid_language_code(l)) bad("'" + l + "' is not a language code");
    if (l == source_lang) bad("languages must not contain the source language");
    if (!seen.insert(l).second) bad("language '" + l + "' listed twice");
  }
  if (pool.empty()) bad("pool is required");
  if (out_dir.empty()) bad("out_dir is required");
  std::size_t last = 0;
  std::set<std::string> stage_seen;
  for (const auto& s : stages) {
    const auto it = std::find(kStageOrder.begin(), kStageOrder.end(), s);
    if (it == kStageOrder.end()) bad("unknown stage '" + s + "'");
    if (!stage_seen.insert(s).second) bad("stage '" + s + "' listed twice");
    const auto pos = static_cast<std::size_t>(it - kStageOrder.begin());
    if (pos < last) bad("stage '" + s + "' is out of order");
    last = pos;
  }
  for (const char* s : {"qe", "compose"})
    if (has_stage(s) && !has_stage("translate")) bad(std::string("stage '") + s + "' needs 'translate'");
  if (has_stage("manifest") && !has_stage("qe")) bad("stage 'manifest' needs 'qe'");
  if (has_stage("blocklist") && !blocklist) bad("stage 'blocklist' needs a blocklist file");
  if (concurrency < 1) bad("concurrency must be >= 1");
  if (!(dedup_threshold > 0.0 && dedup_threshold <= 1.0)) bad("dedup threshold must be in (0, 1]");
  if (max_rounds < 1) bad("max_rounds must be >= 1");
  try {
    gate.validate();
  } catch (const Error& e) {
    bad(message_of(e));
  }
  if (backtranslators.empty()) bad("at least one backtranslator is required");
  std::set<std::string> bt;
  for (const auto& b : backtranslators)
    if (!bt.insert(b).second) bad("backtranslator '" + b + "' listed twice");
  auto check_client = [&](const std::string& what, const std::string& v, const char* local) {
    if (v == local) return;
    try {
      transport::Endpoint::parse(v);
    } catch (const Error&) {
      bad(what + " must be '" + local + "' or an http:// endpoint, got '" + v + "'");
    }
  };
  check_client("translator", translator, "echo");
  for (const auto& b : backtranslators) check_client("backtranslator", b, "echo");
  check_client("judge", judge, "accept");
  Cleaner{clean_rules};
  try {
    compose.layout.validate();
  } catch (const Error& e) {
    bad(message_of(e));
  }
}

namespace {

class Reader {
 public:
  Reader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw Error(ErrorCode::ConfigError, where_ + " must be a table");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (const auto& [k, v] : j_.items())
      if (!used_.count(k)) throw Error(ErrorCode::ConfigError, "unknown key '" + prefix() + k + "'");
  }

  const Json* get(const std::string& k) {
    used_.insert(k);
    return j_.contains(k) ? &j_[k] : nullptr;
  }
  template <class T>
  void read(const std::string& k, T& out) {
    if (const Json* v = get(k)) {
      try {
        out = v->get<T>();
      } catch (const Json::exception&) {
        throw Error(ErrorCode::ConfigError, "'" + prefix() + k + "' has the wrong type");
      }
    }
  }
  void path(const std::string& k, fs::path& out, const fs::path& base) {
    std::string s;
    read(k, s);
    if (!s.empty()) out = base / s;
  }
  void path(const std::string& k, std::optional<fs::path>& out, const fs::path& base) {
    fs::path p;
    path(k, p, base);
    if (!p.empty()) out = p;
  }
  std::string prefix() const { return where_.empty() ? "" : where_ + "."; }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> used_;
};

}  // namespace

PipelineConfig PipelineConfig::from_json(const Json& j, const fs::path& base) {
  PipelineConfig c;
  {
    Reader top(j, "");
    top.read("source_lang", c.source_lang);
    top.read("languages", c.languages);
    top.path("pool", c.pool, base);
    top.path("out_dir", c.out_dir, base);
    top.path("image_root", c.image_root, base);
    if (c.image_root.empty()) c.image_root = c.pool.parent_path();
    top.path("blocklist", c.blocklist, base);
    top.path("review_store", c.review_store, base);
    top.read("stages", c.stages);
    int concurrency = static_cast<int>(c.concurrency);
    top.read("concurrency", concurrency);
    if (concurrency < 1) throw Error(ErrorCode::ConfigError, "concurrency must be >= 1");
    c.concurrency = static_cast<std::size_t>(concurrency);
    top.read("enqueue_scoring", c.enqueue_scoring);

    if (const Json* d = top.get("dedup")) {
      Reader r(*d, "dedup");
      r.read("threshold", c.dedup_threshold);
    }
    if (const Json* d = top.get("corruption")) {
      Reader r(*d, "corruption");
      r.read("max_rounds", c.max_rounds);
    }
    if (const Json* d = top.get("qe")) {
      Reader r(*d, "qe");
      r.read("threshold", c.gate.threshold);
      r.read("high_quality_threshold", c.gate.high_quality_threshold);
      std::string agg;
      r.read("aggregate", agg);
      if (!agg.empty()) {
        try {
          c.gate.aggregate = qe::aggregate_from_string(agg);
        } catch (const Error&) {
          throw Error(ErrorCode::ConfigError, "unknown qe.aggregate '" + agg + "'");
        }
      }
    }
    if (const Json* d = top.get("clients")) {
      Reader r(*d, "clients");
      r.read("translator", c.translator);
      r.read("backtranslators", c.backtranslators);
      r.read("judge", c.judge);
    }
    if (const Json* d = top.get("compose")) {
      Reader r(*d, "compose");
      r.path("font_dir", c.compose.font_dir, base);
      r.read("initial_font", c.compose.layout.initial_font);
      r.read("min_font", c.compose.layout.min_font);
      r.read("line_spacing", c.compose.layout.line_spacing);
      r.read("step", c.compose.layout.step);
    }
    if (const Json* d = top.get("clean")) {
      Reader r(*d, "clean");
      bool defaults = true;
      r.read("use_defaults", defaults);
      std::vector<std::vector<std::string>> rules;
      r.read("rules", rules);
      if (!defaults) c.clean_rules.clear();
      for (const auto& rule : rules) {
        if (rule.size() != 2) throw Error(ErrorCode::ConfigError, "clean.rules entries are [pattern, replacement]");
        c.clean_rules.push_back({rule[0], rule[1]});
      }
    }
  }
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  return from_json(config::load_file(path), path.parent_path());
}

PipelineClients make_clients(const PipelineConfig& config, transport::RetryPolicy retry) {
  auto translator = [&](const std::string& spec) -> std::shared_ptr<TranslationClient> {
    if (spec == "echo") return std::make_shared<EchoTranslationClient>();
    return std::make_shared<HttpTranslationClient>(transport::Endpoint::parse(spec), retry, spec);
  };
  PipelineClients c;
  c.translator = translator(config.translator);
  for (const auto& b : config.backtranslators) c.backtranslators.push_back(translator(b));
  if (config.judge == "accept") {
    c.judge = std::make_shared<FixedJudgeClient>(JudgeLabel::NotCorrupted);
  } else {
    c.judge = std::make_shared<HttpJudgeClient>(transport::Endpoint::parse(config.judge), retry);
  }
  return c;
}

// -- the run --------------------------------------------------------------------------

namespace {

class AuditLog {
 public:
  AuditLog(const fs::path& path, bool append) : out_(path, append ? std::ios::app : std::ios::trunc) {
    if (!out_) throw Error(ErrorCode::IoFailure, "cannot open audit log " + path.string());
  }
  void write(const Json& j) {
    std::lock_guard lock(mu_);
    out_ << j.dump() << '\n';
    out_.flush();
  }

 private:
  std::mutex mu_;
  std::ofstream out_;
};

struct ResumeCache {
  // (id, lang) -> translate entry
  std::map<std::pair<std::string, std::string>, Json> translations;
  // (id, lang) -> qe entry
  std::map<std::pair<std::string, std::string>, Json> backtranslations;
  std::map<std::pair<std::string, std::string>, JudgeLabel> judged;
};

ResumeCache load_resume(const fs::path& path) {
  ResumeCache c;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception&) {
      continue;  // a torn last line from an interrupted run
    }
    if (!j.is_object() || j.value("outcome", "") != "ok") continue;
    const std::string stage = j.value("stage", "");
    const std::string id = j.value("problem_id", "");
    if (stage == "translate") {
      c.translations[{id, j.value("lang", "")}] = j;
    } else if (stage == "qe") {
      c.backtranslations[{id, j.value("lang", "")}] = j;
    } else if (stage == "corruption" && j.contains("label")) {
      const auto label = j["label"].get<std::string>() == "corrupted" ? JudgeLabel::Corrupted : JudgeLabel::NotCorrupted;
      c.judged[{id, j.value("transcript", "")}] = label;
    }
  }
  return c;
}

std::optional<Translated> cached_translation(const ResumeCache& cache, const ProblemRecord& r,
                                             const LanguageTag& src, const LanguageTag& tgt,
                                             const TranslationClient& client) {
  const auto it = cache.translations.find({r.id, tgt.code});
  if (it == cache.translations.end()) return std::nullopt;
  const Json& j = it->second;
  try {
    if (j.at("translator") != client.id() || j.at("source").at("question") != r.question_text ||
        j.at("source").at("options") != options_json(r))
      return std::nullopt;
    Translated t;
    t.problem = r;
    t.problem.question_text = j.at("target").at("question").get<std::string>();
    const auto& opts = j.at("target").at("options");
    if (opts.size() != 5) return std::nullopt;
    for (std::size_t k = 0; k < 5; ++k) t.problem.options[k] = opts[k].get<std::string>();
    t.warning = j.value("length_warning", false);
    t.record = TranslationRecord{r.id, src, tgt, r.question_text, t.problem.question_text, client.id()};
    return t;
  } catch (const Json::exception&) {
    return std::nullopt;
  }
}

std::optional<std::vector<qe::Backtranslation>> cached_backtranslations(const ResumeCache& cache,
                                                                        const TranslationRecord& rec,
                                                                        const std::vector<std::string>& ids) {
  const auto it = cache.backtranslations.find({rec.problem_id, rec.target_lang.code});
  if (it == cache.backtranslations.end()) return std::nullopt;
  const Json& j = it->second;
  try {
    if (j.at("target_question") != rec.target_text || j.at("source_question") != rec.source_text) return std::nullopt;
    std::vector<qe::Backtranslation> out;
    for (const auto& b : j.at("backtranslations"))
      out.push_back({b.at("id").get<std::string>(), b.at("text").get<std::string>()});
    if (out.size() != ids.size()) return std::nullopt;
    for (std::size_t k = 0; k < ids.size(); ++k)
      if (out[k].backtranslator_id != ids[k]) return std::nullopt;
    return out;
  } catch (const Json::exception&) {
    return std::nullopt;
  }
}

std::string file_stem_for(std::string_view id) {
  std::string s;
  for (char c : id) s += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  return s;
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config, const PipelineClients& clients, review::ReviewStore* store,
                            const RunOptions& options) {
  config.validate();
  if (!clients.translator || !clients.judge || clients.backtranslators.empty())
    throw Error(ErrorCode::ConfigError, "translator, judge and at least one backtranslator are required");
  for (const auto& b : clients.backtranslators)
    if (!b) throw Error(ErrorCode::ConfigError, "null backtranslator");

  std::unique_ptr<review::ReviewStore> owned;
  if (!store) {
    owned = config.review_store ? std::make_unique<review::ReviewStore>(*config.review_store)
                                : std::make_unique<review::ReviewStore>();
    store = owned.get();
  }

  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + config.out_dir.string());

  PipelineResult result;
  result.audit_log = config.out_dir / "audit.jsonl";
  const ResumeCache cache = options.resume ? load_resume(result.audit_log) : ResumeCache{};
  AuditLog audit(result.audit_log, options.resume);
  const std::size_t conc = config.concurrency;

  std::vector<ProblemRecord> pool = read_problem_pool(config.pool);
  result.pool_size = pool.size();

  if (config.has_stage("clean")) {
    const Cleaner cleaner(config.clean_rules);
    for (auto& r : pool) {
      ProblemRecord cleaned = cleaner.apply(r);
      if (!(cleaned == r)) audit.write(Json{{"stage", "clean"}, {"problem_id", r.id}, {"outcome", "changed"}});
      r = std::move(cleaned);
    }
  }

  if (config.has_stage("blocklist")) {
    const auto blocked = read_blocklist(*config.blocklist);
    std::vector<ProblemRecord> kept;
    for (auto& r : pool) {
      if (blocked.count(r.id)) {
        result.blocked.push_back(r.id);
        audit.write(Json{{"stage", "blocklist"}, {"problem_id", r.id}, {"outcome", "removed"}});
      } else {
        kept.push_back(std::move(r));
      }
    }
    pool = std::move(kept);
  }

  if (config.has_stage("dedup")) {
    auto d = dedup_report(pool, config.dedup_threshold, conc);
    for (const auto& [removed, kept] : d.removed)
      audit.write(Json{{"stage", "dedup"}, {"problem_id", removed}, {"outcome", "removed"}, {"kept", kept}});
    result.duplicates = std::move(d.removed);
    pool = std::move(d.kept);
  }

  if (config.has_stage("corruption")) {
    CorruptionOptions co;
    co.max_rounds = config.max_rounds;
    co.concurrency = conc;
    co.image_root = config.image_root;
    co.after_round = options.after_corruption_round;
    co.cached = cache.judged;
    co.on_judged = [&](const JudgeItem& item, JudgeLabel label, int round) {
      audit.write(Json{{"stage", "corruption"},
                       {"problem_id", item.record.id},
                       {"outcome", "ok"},
                       {"round", round},
                       {"label", to_string(label)},
                       {"transcript", item.transcript}});
    };
    auto cr = corruption_loop(pool, *clients.judge, *store, co);
    for (const auto& id : cr.excluded)
      audit.write(Json{{"stage", "corruption"}, {"problem_id", id}, {"outcome", "excluded"}});
    result.flags = std::move(cr.flags);
    pool = std::move(cr.clean);
  } else {
    // review decisions still hold when the judge is skipped
    const auto discarded = store->discarded("");
    std::erase_if(pool, [&](const ProblemRecord& r) { return discarded.count(r.id) > 0; });
  }
  result.after_filters = pool.size();

  if (!config.has_stage("translate")) return result;

  std::optional<compose::FontStack> fonts;
  if (config.has_stage("compose"))
    fonts.emplace(config.compose.font_dir.empty() ? compose::FontStack::bundled()
                                                  : compose::FontStack::from_dir(config.compose.font_dir));

  const LanguageTag src = LanguageTag::of(config.source_lang);
  std::vector<std::string> bt_ids;
  for (const auto& b : clients.backtranslators) bt_ids.push_back(b->id());
  if (std::set<std::string>(bt_ids.begin(), bt_ids.end()).size() != bt_ids.size())
    throw Error(ErrorCode::ConfigError, "backtranslator ids must be distinct");

  for (const auto& lang : config.languages) {
    const LanguageTag tgt = LanguageTag::of(lang);
    LanguageOutcome outcome;
    outcome.language = lang;
    const std::size_t n = pool.size();

    // translate
    std::vector<std::optional<Translated>> translated(n);
    std::vector<std::optional<SampleFailure>> failed(n);
    parallel_for(n, conc, [&](std::size_t i) {
      const auto& r = pool[i];
      if (auto hit = cached_translation(cache, r, src, tgt, *clients.translator)) {
        translated[i] = std::move(hit);
        return;
      }
      try {
        auto t = translate_one(r, src, tgt, *clients.translator);
        Json j{{"stage", "translate"},
               {"problem_id", r.id},
               {"lang", lang},
               {"outcome", "ok"},
               {"translator", clients.translator->id()},
               {"source", Json{{"question", r.question_text}, {"options", options_json(r)}}},
               {"target", Json{{"question", t.problem.question_text}, {"options", options_json(t.problem)}}}};
        if (t.warning) j["length_warning"] = true;
        audit.write(j);
        translated[i] = std::move(t);
      } catch (...) {
        failed[i] = failure_from(r.id, lang, "translate", std::current_exception());
        audit.write(failure_json(*failed[i]));
      }
    });

    // backtranslate and gate
    std::vector<std::optional<qe::QualityReport>> reports(n);
    parallel_for(n, conc, [&](std::size_t i) {
      if (!translated[i]) return;
      const auto& rec = translated[i]->record;
      try {
        auto bts = cached_backtranslations(cache, rec, bt_ids);
        if (!bts) {
          bts.emplace();
          for (const auto& b : clients.backtranslators)
            bts->push_back({b->id(), b->translate(rec.target_text, tgt.code, src.code)});
          Json arr = Json::array();
          for (const auto& b : *bts) arr.push_back(Json{{"id", b.backtranslator_id}, {"text", b.text}});
          audit.write(Json{{"stage", "qe"},
                           {"problem_id", rec.problem_id},
                           {"lang", lang},
                           {"outcome", "ok"},
                           {"source_question", rec.source_text},
                           {"target_question", rec.target_text},
                           {"backtranslations", arr}});
        }
        reports[i] = qe::gate(qe::BacktranslationSet{rec, std::move(*bts)}, config.gate);
      } catch (...) {
        failed[i] = failure_from(rec.problem_id, lang, "qe", std::current_exception());
        audit.write(failure_json(*failed[i]));
      }
    });

    // compose
    std::vector<char> composed_ok(n, 1);
    if (fonts) {
      const fs::path image_dir = config.out_dir / lang / "images";
      parallel_for(n, conc, [&](std::size_t i) {
        if (!reports[i] || reports[i]->verdict == qe::Verdict::Fail) return;
        auto& p = translated[i]->problem;
        const fs::path input = config.image_root / p.image_ref;
        const std::string out_ref = "images/" + file_stem_for(p.id) + ".png";
        if (auto fix = store->latest_fix(review::TaskKind::BboxAdjust, p.id, lang); fix && fix->bbox) p.bbox = *fix->bbox;
        try {
          const auto layout = compose::wrap_text(p.question_text, p.bbox.width, p.bbox.height, *fonts,
                                                 config.compose.layout);
          if (!layout.fits) throw Error(ErrorCode::LayoutDoesNotFit, "text does not fit the bbox at the minimum size");
          auto img = compose::read_png(input);
          compose::paste_text(img, p.bbox, layout, *fonts);
          compose::write_png(img, image_dir / (file_stem_for(p.id) + ".png"));
          p.image_ref = out_ref;
          audit.write(Json{{"stage", "compose"},
                           {"problem_id", p.id},
                           {"lang", lang},
                           {"outcome", "ok"},
                           {"image_ref", out_ref},
                           {"font_size", layout.font_size}});
        } catch (...) {
          composed_ok[i] = 0;
          failed[i] = failure_from(p.id, lang, "compose", std::current_exception());
          audit.write(failure_json(*failed[i]));
          if (failed[i]->error == to_string(ErrorCode::LayoutDoesNotFit) &&
              !store->has_open(review::TaskKind::BboxAdjust, p.id, lang)) {
            Json payload = task_payload(p, config.image_root);
            payload["question_text"] = p.question_text;
            store->enqueue(review::TaskKind::BboxAdjust, p.id, std::move(payload), lang);
          }
        }
      });
    }

    for (std::size_t i = 0; i < n; ++i) {
      if (failed[i]) result.failures.push_back(*failed[i]);
      if (translated[i] && translated[i]->warning) result.length_warnings.push_back(lang + ":" + pool[i].id);
      if (reports[i]) outcome.reports.push_back(*reports[i]);
    }

    if (config.has_stage("manifest")) {
      const auto discarded = store->discarded(lang);
      std::set<std::string> scoring;
      for (const auto& t : store->all())
        if (t.kind == review::TaskKind::TranslationScore && t.language == lang) scoring.insert(t.problem_id);
      DatasetManifest standard{tgt, Split::Standard, {}};
      DatasetManifest high{tgt, Split::HighQuality, {}};
      for (std::size_t i = 0; i < n; ++i) {
        if (!reports[i] || !composed_ok[i]) continue;
        const auto& id = pool[i].id;
        Json entry{{"stage", "manifest"}, {"problem_id", id}, {"lang", lang}};
        if (reports[i]->verdict == qe::Verdict::Fail) {
          entry["outcome"] = "excluded";
          entry["reason"] = "qe";
          entry["m"] = reports[i]->aggregate_m;
        } else if (discarded.count(id)) {
          entry["outcome"] = "excluded";
          entry["reason"] = "review";
        } else {
          const auto& p = translated[i]->problem;
          standard.entries.push_back(p);
          Json splits = Json::array({"standard"});
          if (reports[i]->verdict == qe::Verdict::PassHighQuality) {
            high.entries.push_back(p);
            splits.push_back("high_quality");
          }
          entry["outcome"] = "ok";
          entry["splits"] = splits;
          entry["m"] = reports[i]->aggregate_m;
          if (config.enqueue_scoring && !scoring.count(id))
            store->enqueue(review::TaskKind::TranslationScore, id,
                           Json{{"source", pool[i].question_text}, {"target", p.question_text}}, lang);
        }
        audit.write(entry);
      }
      outcome.standard = standard.entries.size();
      outcome.high_quality = high.entries.size();
      outcome.standard_path = config.out_dir / lang / "standard.jsonl";
      outcome.high_quality_path = config.out_dir / lang / "high_quality.jsonl";
      fs::create_directories(outcome.standard_path.parent_path(), ec);
      write_manifest(standard, outcome.standard_path);
      write_manifest(high, outcome.high_quality_path);
    }
    result.languages.push_back(std::move(outcome));
  }
  return result;
}

}  // namespace forge::pipeline
