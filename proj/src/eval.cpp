#include "forge/eval.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "forge/error.hpp"
#include "forge/parallel.hpp"

#ifndef FORGE_DATA_DIR
#define FORGE_DATA_DIR "data"
#endif

namespace forge::eval {

Choice parse_answer(std::string_view response) {
  // Bytes 'A'..'E' and ')' never occur inside a multi-byte UTF-8 sequence, so a
  // byte scan is safe on arbitrary text.
  for (std::size_t i = response.size(); i >= 2; --i) {
    const char letter = response[i - 2];
    if (response[i - 1] == ')' && letter >= 'A' && letter <= 'E') return static_cast<Choice>(letter);
  }
  return Choice::N;
}

std::vector<std::string> answer_near_misses(std::string_view s) {
  constexpr std::string_view kFullParen = "\xEF\xBC\x89";  // U+FF09
  std::vector<std::string> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c >= 'a' && c <= 'e' && i + 1 < s.size() && s[i + 1] == ')') {
      // skip words like "data)"
      if (i == 0 || !std::isalpha(static_cast<unsigned char>(s[i - 1]))) out.emplace_back(s.substr(i, 2));
    } else if (c >= 'A' && c <= 'E' && s.substr(i + 1, 3) == kFullParen) {
      out.emplace_back(s.substr(i, 4));
    } else if (s.substr(i, 2) == "\xEF\xBC" && i + 2 < s.size()) {
      // full-width A..E are EF BC A1..A5
      const auto third = static_cast<unsigned char>(s[i + 2]);
      if (third >= 0xA1 && third <= 0xA5) {
        if (i + 3 < s.size() && s[i + 3] == ')') {
          out.emplace_back(s.substr(i, 4));
        } else if (s.substr(i + 3, 3) == kFullParen) {
          out.emplace_back(s.substr(i, 6));
        }
      }
    }
  }
  return out;
}

// ---- prompts ----

PromptCatalog PromptCatalog::from_json(const Json& j) {
  PromptCatalog c;
  try {
    for (const auto& [lang, text] : j.at("system").items()) c.system_[lang] = text.get<std::string>();
    if (j.contains("tasks")) {
      for (const auto& [name, text] : j.at("tasks").items()) c.tasks_[name] = text.get<std::string>();
    }
    c.user_template_ = j.value("user_template", std::string("{question}\n\nA) {A}\nB) {B}\nC) {C}\nD) {D}\nE) {E}"));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("prompt catalog: ") + e.what());
  }
  return c;
}

PromptCatalog PromptCatalog::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
  return from_json(j);
}

std::filesystem::path default_prompt_path() { return std::filesystem::path(FORGE_DATA_DIR) / "prompts.json"; }

PromptCatalog PromptCatalog::load_default() { return load(default_prompt_path()); }

const std::string& PromptCatalog::system_prompt(std::string_view lang) const {
  auto it = system_.find(std::string(lang));
  if (it == system_.end()) throw Error(ErrorCode::MissingPrompt, "no system prompt for '" + std::string(lang) + "'");
  return it->second;
}

const std::string& PromptCatalog::task_prompt(std::string_view name) const {
  auto it = tasks_.find(std::string(name));
  if (it == tasks_.end()) throw Error(ErrorCode::MissingPrompt, "no task prompt '" + std::string(name) + "'");
  return it->second;
}

std::vector<std::string> PromptCatalog::languages() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : system_) out.push_back(k);
  return out;
}

std::string PromptCatalog::user_text(const ProblemRecord& r) const {
  std::string out;
  const std::string& t = user_template_;
  for (std::size_t i = 0; i < t.size();) {
    if (t[i] == '{') {
      const auto close = t.find('}', i);
      if (close != std::string::npos) {
        const std::string_view key(t.data() + i + 1, close - i - 1);
        if (key == "question") {
          out += r.question_text;
          i = close + 1;
          continue;
        }
        if (key.size() == 1 && key[0] >= 'A' && key[0] <= 'E') {
          out += r.options[static_cast<std::size_t>(key[0] - 'A')];
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(t[i++]);
  }
  return out;
}

// ---- model access ----

HttpModelClient::HttpModelClient(transport::Endpoint endpoint, transport::RetryPolicy retry, std::string id)
    : endpoint_(std::move(endpoint)), retry_(std::move(retry)), id_(std::move(id)) {}

std::string HttpModelClient::chat(const ChatRequest& request) {
  Json body;
  body["system"] = request.system;
  body["text"] = request.text;
  body["image_b64"] = request.image_b64;
  const std::string payload = body.dump();
  return transport::with_retry(retry_, [&] {
    const std::string raw = transport::post_json(endpoint_, "/chat", payload);
    Json j = Json::parse(raw, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("text") || !j["text"].is_string()) {
      throw Error(ErrorCode::TransportError, "malformed /chat response");
    }
    return j["text"].get<std::string>();
  });
}

namespace {

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read image " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void score(EvalResult& r, Choice key) {
  r.parsed = parse_answer(r.raw_response);
  r.correct = r.parsed == key;
  r.near_misses = answer_near_misses(r.raw_response);
}

}  // namespace

std::vector<EvalResult> evaluate(const DatasetManifest& manifest, ModelClient& client, const PromptCatalog& prompts,
                                 const EvalOptions& options) {
  if (options.runs < 1) throw Error(ErrorCode::InvalidArgument, "runs must be >= 1");
  const std::string& system = prompts.system_prompt(manifest.language.code);
  const auto& entries = manifest.entries;

  // one image read per problem, shared by all runs
  std::vector<std::string> images(entries.size());
  std::vector<std::string> image_errors(entries.size());
  if (options.attach_images) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].image_ref.empty()) continue;
      try {
        images[i] = transport::base64_encode(read_bytes(options.image_root / entries[i].image_ref));
      } catch (const std::exception& e) {
        image_errors[i] = e.what();
      }
    }
  }

  const std::size_t runs = static_cast<std::size_t>(options.runs);
  std::vector<EvalResult> results(runs * entries.size());
  parallel_for(results.size(), options.concurrency, [&](std::size_t job) {
    const std::size_t run = job / entries.size();
    const std::size_t i = job % entries.size();
    EvalResult& r = results[job];
    r.problem_id = entries[i].id;
    r.language = manifest.language.code;
    r.run_index = static_cast<int>(run);
    if (!image_errors[i].empty()) {
      r.error = image_errors[i];
      return;
    }
    try {
      r.raw_response = client.chat(ChatRequest{system, prompts.user_text(entries[i]), images[i]});
      score(r, entries[i].answer_key);
    } catch (const std::exception& e) {
      r.error = e.what();
      r.parsed = Choice::N;
      r.correct = false;
    }
  });
  return results;
}

void reparse(std::vector<EvalResult>& results, const std::vector<ProblemRecord>& problems) {
  std::unordered_map<std::string, Choice> keys;
  for (const auto& p : problems) keys[p.id] = p.answer_key;
  for (auto& r : results) {
    auto it = keys.find(r.problem_id);
    if (it == keys.end()) throw Error(ErrorCode::MalformedRecord, "unknown problem '" + r.problem_id + "'");
    if (r.error.empty()) score(r, it->second);
  }
}

Json to_json(const EvalResult& r) {
  Json j;
  j["problem_id"] = r.problem_id;
  j["lang"] = r.language;
  j["run"] = r.run_index;
  j["response"] = r.raw_response;
  j["parsed"] = std::string(1, to_char(r.parsed));
  j["correct"] = r.correct;
  if (!r.error.empty()) j["error"] = r.error;
  if (!r.near_misses.empty()) j["near_misses"] = r.near_misses;
  return j;
}

EvalResult eval_result_from_json(const Json& j) {
  EvalResult r;
  try {
    r.problem_id = j.at("problem_id").get<std::string>();
    r.language = j.at("lang").get<std::string>();
    r.run_index = j.at("run").get<int>();
    r.raw_response = j.at("response").get<std::string>();
    const auto parsed = j.at("parsed").get<std::string>();
    auto c = parsed.size() == 1 ? choice_from_char(parsed[0]) : std::nullopt;
    if (!c) throw Error(ErrorCode::MalformedRecord, "bad parsed value '" + parsed + "'");
    r.parsed = *c;
    r.correct = j.at("correct").get<bool>();
    r.error = j.value("error", std::string());
    if (j.contains("near_misses")) r.near_misses = j["near_misses"].get<std::vector<std::string>>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("eval result: ") + e.what());
  }
  return r;
}

void append_results(const std::vector<EvalResult>& results, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  for (const auto& r : results) out << to_json(r).dump() << '\n';
}

std::vector<EvalResult> read_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<EvalResult> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::MalformedRecord, path.string() + ":" + std::to_string(line_no));
    out.push_back(eval_result_from_json(j));
  }
  return out;
}

// ---- aggregation ----

LanguageInfo LanguageInfo::of(std::string_view code) {
  LanguageInfo info;
  info.code = std::string(code);
  info.presence = known_presence(code);
  if (info.presence) info.cluster = classify_resource(*info.presence);
  return info;
}

AccuracyReport aggregate(std::span<const EvalResult> results, std::span<const LanguageInfo> languages) {
  AccuracyReport report;
  for (const auto& info : languages) {
    std::map<int, std::pair<long, long>> per_run;  // run -> (correct, total)
    for (const auto& r : results) {
      if (r.language != info.code) continue;
      auto& [correct, total] = per_run[r.run_index];
      correct += r.correct ? 1 : 0;
      ++total;
    }
    if (per_run.empty()) throw Error(ErrorCode::MissingLanguage, "no results for '" + info.code + "'");
    const long n = per_run.begin()->second.second;
    std::vector<long> corrects;
    for (const auto& [run, ct] : per_run) {
      if (ct.second != n) {
        throw Error(ErrorCode::InvalidCounts, "runs of '" + info.code + "' cover different problem counts");
      }
      corrects.push_back(ct.first);
    }
    LanguageAccuracy la;
    la.language = info.code;
    la.num_problems = static_cast<std::size_t>(n);
    la.runs = corrects.size();
    la.accuracy = stats::accuracy_with_stderr(corrects, n);
    if (info.code == "eng") report.english = la.accuracy.mean;
    report.languages.push_back(std::move(la));
  }

  for (ResourceClass rc : {ResourceClass::High, ResourceClass::Mid, ResourceClass::Low}) {
    ClusterMean cm;
    cm.cluster = rc;
    double sum = 0.0;
    for (std::size_t i = 0; i < languages.size(); ++i) {
      if (languages[i].cluster != rc) continue;
      cm.members.push_back(languages[i].code);
      sum += report.languages[i].accuracy.mean;
    }
    if (cm.members.empty()) continue;
    cm.mean = sum / static_cast<double>(cm.members.size());
    report.clusters.push_back(std::move(cm));
  }

  std::vector<double> presence, accuracy;
  for (std::size_t i = 0; i < languages.size(); ++i) {
    if (!languages[i].presence) continue;
    presence.push_back(*languages[i].presence);
    accuracy.push_back(report.languages[i].accuracy.mean);
  }
  if (presence.size() >= 2) {
    try {
      report.presence_correlation = stats::spearman(presence, accuracy);
    } catch (const Error&) {
      // constant presence or accuracy: correlation undefined
    }
  }
  return report;
}

Json to_json(const AccuracyReport& report) {
  Json j;
  j["languages"] = Json::array();
  for (const auto& la : report.languages) {
    j["languages"].push_back({{"lang", la.language},
                              {"accuracy", la.accuracy.mean},
                              {"stderr", la.accuracy.standard_error},
                              {"problems", la.num_problems},
                              {"runs", la.runs}});
  }
  j["clusters"] = Json::object();
  for (const auto& c : report.clusters) {
    j["clusters"][std::string(to_string(c.cluster))] = {{"mean", c.mean}, {"members", c.members}};
  }
  j["english"] = report.english ? Json(*report.english) : Json(nullptr);
  if (report.presence_correlation) {
    j["presence_spearman"] = {{"rho", report.presence_correlation->rho},
                              {"p_value", report.presence_correlation->p_value},
                              {"n", report.presence_correlation->n}};
  } else {
    j["presence_spearman"] = nullptr;
  }
  return j;
}

std::string format_report(const AccuracyReport& report) {
  std::ostringstream out;
  char buf[200];
  out << "language\taccuracy\tstderr\tproblems\truns\n";
  for (const auto& la : report.languages) {
    std::snprintf(buf, sizeof buf, "%s\t%.4f\t%.4f\t%zu\t%zu\n", la.language.c_str(), la.accuracy.mean,
                  la.accuracy.standard_error, la.num_problems, la.runs);
    out << buf;
  }
  for (const auto& c : report.clusters) {
    std::snprintf(buf, sizeof buf, "cluster:%s\t%.4f\n", std::string(to_string(c.cluster)).c_str(), c.mean);
    out << buf;
  }
  if (report.english) {
    std::snprintf(buf, sizeof buf, "english\t%.4f\n", *report.english);
    out << buf;
  }
  if (report.presence_correlation) {
    std::snprintf(buf, sizeof buf, "presence_spearman\t%.4f\tp=%.3e\n", report.presence_correlation->rho,
                  report.presence_correlation->p_value);
    out << buf;
  }
  return out.str();
}

double subset_independence_pvalue(std::span<const EvalResult> english_results, const std::set<std::string>& subset) {
  long in_ok = 0, in_n = 0, out_ok = 0, out_n = 0;
  for (const auto& r : english_results) {
    if (subset.contains(r.problem_id)) {
      in_ok += r.correct;
      ++in_n;
    } else {
      out_ok += r.correct;
      ++out_n;
    }
  }
  return stats::two_proportion_test(in_ok, in_n, out_ok, out_n);
}

// ---- human comparison ----

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

int parse_int_field(std::string_view s, const std::string& where) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw Error(ErrorCode::MalformedRecord, where);
  return v;
}

double credit(Outcome o) {
  switch (o) {
    case Outcome::Correct: return 1.0;
    case Outcome::Blank: return 0.2;
    case Outcome::Incorrect: return 0.0;
  }
  return 0.0;
}

}  // namespace

std::vector<HumanRecord> read_human_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<HumanRecord> out;
  std::map<std::pair<std::string, int>, std::size_t> index;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      f.push_back(trim(rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (line_no == 1 && !f.empty() && f[0] == "participant_id") continue;
    if (f.size() != 4) throw Error(ErrorCode::MalformedRecord, where + ": expected 4 columns");
    const int level = parse_int_field(f[1], where + ": level");
    const int number = parse_int_field(f[2], where + ": problem_number");
    Outcome o;
    if (f[3] == "C") {
      o = Outcome::Correct;
    } else if (f[3] == "I") {
      o = Outcome::Incorrect;
    } else if (f[3] == "B") {
      o = Outcome::Blank;
    } else {
      throw Error(ErrorCode::MalformedRecord, where + ": outcome must be C, I or B");
    }
    const auto key = std::make_pair(std::string(f[0]), level);
    auto [it, inserted] = index.try_emplace(key, out.size());
    if (inserted) out.push_back(HumanRecord{key.first, level, {}});
    if (!out[it->second].outcomes.emplace(number, o).second) {
      throw Error(ErrorCode::MalformedRecord, where + ": repeated problem " + std::to_string(number));
    }
  }
  return out;
}

double human_score(const HumanRecord& record) {
  long correct = 0, blank = 0;
  for (const auto& [p, o] : record.outcomes) {
    correct += o == Outcome::Correct;
    blank += o == Outcome::Blank;
  }
  return static_cast<double>(correct) + static_cast<double>(blank) / 5.0;
}

double human_score(const HumanRecord& record, const std::set<int>& problems) {
  long correct = 0, blank = 0;
  for (const auto& [p, o] : record.outcomes) {
    if (!problems.contains(p)) continue;
    correct += o == Outcome::Correct;
    blank += o == Outcome::Blank;
  }
  return static_cast<double>(correct) + static_cast<double>(blank) / 5.0;
}

double percentile_rank(double model_score, std::span<const HumanRecord> humans, int level,
                       const std::optional<std::set<int>>& problems) {
  std::size_t total = 0, below = 0;
  for (const auto& h : humans) {
    if (h.level != level) continue;
    ++total;
    const double s = problems ? human_score(h, *problems) : human_score(h);
    if (s < model_score) ++below;
  }
  if (total == 0) throw Error(ErrorCode::NoParticipants, "no participants at level " + std::to_string(level));
  return 100.0 * static_cast<double>(below) / static_cast<double>(total);
}

std::map<int, double> default_block_weights(const std::vector<int>& problem_numbers) {
  std::vector<int> sorted = problem_numbers;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  static constexpr double kWeights[] = {0.33, 0.66, 1.0};
  std::map<int, double> out;
  const std::size_t n = sorted.size();
  for (std::size_t i = 0; i < n; ++i) out[sorted[i]] = kWeights[3 * i / n];
  return out;
}

DifficultyReport difficulty_indices(std::span<const HumanRecord> humans, int level,
                                    const std::map<int, double>& model_accuracy,
                                    const std::map<int, double>& block_weights) {
  std::vector<const HumanRecord*> group;
  std::set<int> level_problems;
  for (const auto& h : humans) {
    if (h.level != level) continue;
    group.push_back(&h);
    for (const auto& [p, o] : h.outcomes) level_problems.insert(p);
  }
  if (group.size() < 5) {
    throw Error(ErrorCode::InsufficientParticipants,
                std::to_string(group.size()) + " participants at level " + std::to_string(level) + ", need 5");
  }
  std::set<int> problems;
  for (const auto& [p, acc] : model_accuracy) problems.insert(p);
  for (const auto* h : group) {
    for (int p : problems) {
      if (!h->outcomes.contains(p)) {
        throw Error(ErrorCode::MalformedRecord,
                    "participant '" + h->participant_id + "' has no outcome for problem " + std::to_string(p));
      }
    }
  }

  std::vector<std::pair<double, const HumanRecord*>> ranked;
  for (const auto* h : group) ranked.emplace_back(human_score(*h, problems), h);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second->participant_id < b.second->participant_id;
  });
  const std::size_t n = ranked.size();
  const std::size_t top1 = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.01 * static_cast<double>(n))));
  const std::size_t k20 = n / 5;

  std::map<int, double> weights = block_weights;
  if (weights.empty()) weights = default_block_weights({level_problems.begin(), level_problems.end()});

  auto mean_credit = [&](int p, std::size_t from, std::size_t to) {
    double s = 0.0;
    for (std::size_t i = from; i < to; ++i) s += credit(ranked[i].second->outcomes.at(p));
    return s / static_cast<double>(to - from);
  };

  DifficultyReport rep;
  rep.level = level;
  rep.participants = n;
  std::vector<double> model, diff, diff1, disc, wt;
  for (int p : problems) {
    auto w = weights.find(p);
    if (w == weights.end()) throw Error(ErrorCode::InvalidArgument, "no block weight for problem " + std::to_string(p));
    ProblemIndices pi;
    pi.problem = p;
    pi.model_accuracy = model_accuracy.at(p);
    pi.difficulty = mean_credit(p, 0, n);
    pi.difficulty_top1 = mean_credit(p, 0, top1);
    pi.discriminative = mean_credit(p, 0, k20) - mean_credit(p, n - k20, n);
    pi.weight = w->second;
    model.push_back(pi.model_accuracy);
    diff.push_back(pi.difficulty);
    diff1.push_back(pi.difficulty_top1);
    disc.push_back(pi.discriminative);
    wt.push_back(pi.weight);
    rep.problems.push_back(pi);
  }
  auto corr = [&](const std::vector<double>& index) -> std::optional<stats::CorrelationResult> {
    try {
      return stats::spearman(index, model);
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  rep.difficulty = corr(diff);
  rep.difficulty_top1 = corr(diff1);
  rep.discriminative = corr(disc);
  rep.weight = corr(wt);
  return rep;
}

std::map<int, double> model_problem_accuracy(std::span<const EvalResult> results,
                                             const std::vector<ProblemRecord>& problems, int level,
                                             std::optional<int> year) {
  std::unordered_map<std::string, const ProblemRecord*> by_id;
  for (const auto& p : problems) by_id[p.id] = &p;
  std::map<int, std::pair<double, long>> acc;
  for (const auto& r : results) {
    auto it = by_id.find(r.problem_id);
    if (it == by_id.end() || it->second->level != level) continue;
    if (year && it->second->year != *year) continue;
    auto& [sum, count] = acc[it->second->number];
    sum += r.correct ? 1.0 : 0.0;
    ++count;
  }
  std::map<int, double> out;
  for (const auto& [p, sc] : acc) out[p] = sc.first / static_cast<double>(sc.second);
  return out;
}

}  // namespace forge::eval
