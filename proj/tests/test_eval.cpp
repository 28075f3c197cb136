#include "doctest.h"

#include <atomic>
#include <cmath>
#include <mutex>
#include <random>
#include <thread>

#include "forge/error.hpp"
#include "forge/eval.hpp"
#include "httplib.h"
#include "test_util.hpp"

using namespace forge;
using namespace forge::eval;

namespace {

// Forward scan remembering the last hit; no shared code with parse_answer.
Choice brute_force_parse(const std::string& s) {
  Choice last = Choice::N;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    for (char L : std::string("ABCDE")) {
      if (s[i] == L && s[i + 1] == ')') last = static_cast<Choice>(L);
    }
  }
  return last;
}

DatasetManifest balanced_manifest(std::size_t n, const char* lang = "eng") {
  DatasetManifest m;
  m.language = LanguageTag::of(lang);
  for (std::size_t i = 0; i < n; ++i) m.entries.push_back(forge::testing::make_problem(static_cast<int>(i)));
  return m;
}

Choice key_of(const DatasetManifest& m, const std::string& text) {
  for (const auto& e : m.entries) {
    if (text.rfind(e.question_text, 0) == 0) return e.answer_key;
  }
  return Choice::N;
}

class FnClient : public ModelClient {
 public:
  explicit FnClient(std::function<std::string(const ChatRequest&)> fn) : fn_(std::move(fn)) {}
  std::string chat(const ChatRequest& r) override { return fn_(r); }
  std::string id() const override { return "mock"; }

 private:
  std::function<std::string(const ChatRequest&)> fn_;
};

EvalResult result(std::string id, std::string lang, int run, bool correct) {
  EvalResult r;
  r.problem_id = std::move(id);
  r.language = std::move(lang);
  r.run_index = run;
  r.correct = correct;
  r.parsed = correct ? Choice::A : Choice::N;
  return r;
}

// n results for one language/run with the first `correct` marked right.
void add_run(std::vector<EvalResult>& out, const std::string& lang, int run, int n, int correct) {
  for (int i = 0; i < n; ++i) out.push_back(result("p" + std::to_string(i), lang, run, i < correct));
}

HumanRecord human(std::string id, int level, const std::string& outcomes) {
  HumanRecord h{std::move(id), level, {}};
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const Outcome o = outcomes[i] == 'C' ? Outcome::Correct : outcomes[i] == 'B' ? Outcome::Blank : Outcome::Incorrect;
    h.outcomes[static_cast<int>(i) + 1] = o;
  }
  return h;
}

}  // namespace

TEST_CASE("parse_answer basic cases") {
  CHECK(parse_answer("Reasoning: the sum is 12.\nAnswer: C)") == Choice::C);
  CHECK(parse_answer("At first B) looked right, but finally D)") == Choice::D);
  CHECK(parse_answer("no option given") == Choice::N);
  CHECK(parse_answer("") == Choice::N);
  CHECK(parse_answer(")") == Choice::N);
  CHECK(parse_answer("F) G) a)") == Choice::N);
  CHECK(parse_answer("E)") == Choice::E);
  CHECK(parse_answer("Resposta: A)\n") == Choice::A);
  CHECK(parse_answer("答案：B)。") == Choice::B);
  CHECK(parse_answer("Ａ）") == Choice::N);  // full-width is not an answer string
}

TEST_CASE("parse_answer fuzz against a position scan") {
  std::mt19937 rng(2024);
  const std::vector<std::string> inject = {"A)", "B)", "C)", "D)", "E)", "a)", "F)", "(A", "A )", "Ａ)", "B）", ")", "Answer: "};
  std::uniform_int_distribution<std::size_t> pick(0, inject.size() - 1);
  for (int i = 0; i < 10000; ++i) {
    std::string s;
    const int pieces = static_cast<int>(rng() % 6);
    for (int k = 0; k < pieces; ++k) {
      s += forge::testing::random_unicode(rng, 12);
      if (rng() % 2) s += inject[pick(rng)];
    }
    const Choice got = parse_answer(s);
    CHECK(got == brute_force_parse(s));
    CHECK(parse_answer(s) == got);
  }
}

TEST_CASE("near misses are reported but not parsed") {
  const auto nm = answer_near_misses("maybe b) or Ａ) or C） but not data)");
  CHECK(nm == std::vector<std::string>{"b)", "Ａ)", "C）"});
  CHECK(answer_near_misses("Answer: B)").empty());
}

TEST_CASE("prompt catalog") {
  const auto cat = PromptCatalog::load_default();
  const auto langs = cat.languages();
  CHECK(langs.size() == 13);
  for (const auto& l : {"eng", "cat", "afr", "deu", "spa", "fra", "ind", "est", "swh", "tur", "lin", "tso", "vie"}) {
    REQUIRE(cat.has_language(l));
    // every prompt asks for the letter-parenthesis answer format
    CHECK(cat.system_prompt(l).find("A), B), C), D)") != std::string::npos);
  }
  CHECK(cat.system_prompt("eng").find("Reasoning:") != std::string::npos);
  CHECK(cat.system_prompt("eng").find("Answer: A), B), C), D) or E)") != std::string::npos);
  CHECK(cat.task_prompt("corruption_detection").find("Return ONLY the label.") != std::string::npos);
  CHECK_THROWS_AS(cat.system_prompt("zho"), Error);
  CHECK_THROWS_AS(cat.task_prompt("nope"), Error);

  auto p = forge::testing::make_problem(1, "How many?");
  p.options = {"one", "two", "three", "four", "five"};
  CHECK(cat.user_text(p) == "How many?\n\nA) one\nB) two\nC) three\nD) four\nE) five");
}

TEST_CASE("evaluate with mock clients") {
  const auto prompts = PromptCatalog::load_default();
  const auto m = balanced_manifest(100);
  EvalOptions opt;
  opt.attach_images = false;
  opt.runs = 2;

  FnClient oracle([&](const ChatRequest& r) { return std::string("Answer: ") + to_char(key_of(m, r.text)) + ")"; });
  auto res = evaluate(m, oracle, prompts, opt);
  REQUIRE(res.size() == 200);
  CHECK(std::all_of(res.begin(), res.end(), [](const EvalResult& r) { return r.correct; }));
  CHECK(res[0].run_index == 0);
  CHECK(res[100].run_index == 1);
  CHECK(res[37].problem_id == m.entries[37].id);

  FnClient always_a([](const ChatRequest&) { return std::string("Answer: A)"); });
  res = evaluate(m, always_a, prompts, opt);
  const auto report = aggregate(res, std::vector{LanguageInfo::of("eng")});
  CHECK(report.languages[0].accuracy.mean == doctest::Approx(0.2));

  // system prompt follows the manifest language
  auto cat_manifest = balanced_manifest(3, "cat");
  FnClient check_system([&](const ChatRequest& r) {
    return r.system == prompts.system_prompt("cat") ? std::string("A)") : std::string("wrong");
  });
  for (const auto& r : evaluate(cat_manifest, check_system, prompts, opt)) CHECK(r.parsed == Choice::A);

  CHECK_THROWS_AS(evaluate(balanced_manifest(2, "zho"), always_a, prompts, opt), Error);
  opt.runs = 0;
  CHECK_THROWS_AS(evaluate(m, always_a, prompts, opt), Error);
}

TEST_CASE("per-sample failures do not abort the batch") {
  const auto prompts = PromptCatalog::load_default();
  const auto m = balanced_manifest(3);
  EvalOptions opt;
  opt.attach_images = false;
  FnClient flaky([&](const ChatRequest& r) -> std::string {
    if (r.text.rfind(m.entries[1].question_text, 0) == 0) throw Error(ErrorCode::TransportError, "boom");
    return "B)";
  });
  const auto res = evaluate(m, flaky, prompts, opt);
  REQUIRE(res.size() == 3);
  CHECK(res[1].parsed == Choice::N);
  CHECK_FALSE(res[1].correct);
  CHECK(res[1].error.find("boom") != std::string::npos);
  CHECK(res[0].error.empty());
  CHECK(res[2].parsed == Choice::B);
}

TEST_CASE("images are attached as base64 and missing files are per-sample errors") {
  forge::testing::TempDir dir;
  std::filesystem::create_directories(dir / "images");
  forge::testing::spit(dir / "images/p0.png", std::string("\x89PNG\r\n\x1a\n", 8));
  auto m = balanced_manifest(2);
  const auto prompts = PromptCatalog::load_default();
  EvalOptions opt;
  opt.image_root = dir.path();
  FnClient echo_image([](const ChatRequest& r) { return r.image_b64 + " A)"; });
  const auto res = evaluate(m, echo_image, prompts, opt);
  CHECK(res[0].raw_response == transport::base64_encode(std::string("\x89PNG\r\n\x1a\n", 8)) + " A)");
  CHECK(res[1].error.find("cannot read image") != std::string::npos);
}

TEST_CASE("uniform random mock stays inside the binomial band") {
  const auto prompts = PromptCatalog::load_default();
  const auto m = balanced_manifest(1000);
  std::mutex mu;
  std::mt19937 rng(99);
  FnClient random_client([&](const ChatRequest&) {
    std::lock_guard lock(mu);
    return std::string("Answer: ") + "ABCDE"[rng() % 5] + ")";
  });
  EvalOptions opt;
  opt.attach_images = false;
  opt.runs = 3;
  opt.concurrency = 8;
  const auto res = evaluate(m, random_client, prompts, opt);
  REQUIRE(res.size() == 3000);
  const auto rep = aggregate(res, std::vector{LanguageInfo::of("eng")});
  const double sigma = std::sqrt(0.2 * 0.8 / 3000.0);
  CHECK(std::abs(rep.languages[0].accuracy.mean - 0.2) <= 3 * sigma);
  CHECK(rep.languages[0].runs == 3);
}

TEST_CASE("parallel and serial evaluation agree") {
  const auto prompts = PromptCatalog::load_default();
  const auto m = balanced_manifest(50);
  FnClient det([](const ChatRequest& r) { return std::string(r.text.size() % 2 ? "C)" : "D)"); });
  EvalOptions serial;
  serial.attach_images = false;
  serial.concurrency = 1;
  serial.runs = 2;
  EvalOptions par = serial;
  par.concurrency = 8;
  const auto a = evaluate(m, det, prompts, serial);
  const auto b = evaluate(m, det, prompts, par);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(to_json(a[i]) == to_json(b[i]));
}

TEST_CASE("http model client") {
  httplib::Server srv;
  std::atomic<int> calls{0};
  srv.Post("/v1/chat", [&](const httplib::Request& req, httplib::Response& res) {
    if (calls++ < 2) {
      res.status = 503;
      return;
    }
    const auto j = Json::parse(req.body);
    Json out;
    out["text"] = "echo " + j["system"].get<std::string>() + "|" + j["text"].get<std::string>() + "|" +
                  j["image_b64"].get<std::string>() + " B)";
    res.set_content(out.dump(), "application/json");
  });
  const int port = srv.bind_to_any_port("127.0.0.1");
  std::thread t([&] { srv.listen_after_bind(); });
  srv.wait_until_ready();

  std::vector<std::chrono::milliseconds> sleeps;
  transport::RetryPolicy policy;
  policy.sleep = [&](std::chrono::milliseconds d) { sleeps.push_back(d); };
  HttpModelClient client(transport::Endpoint::parse("http://127.0.0.1:" + std::to_string(port) + "/v1"), policy);
  CHECK(client.chat({"sys", "q", "aW1n"}) == "echo sys|q|aW1n B)");
  CHECK(calls == 3);
  CHECK(sleeps == std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(1000), std::chrono::milliseconds(2000)});

  calls = -100;  // keep failing
  sleeps.clear();
  srv.Post("/v1/chat", [&](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  CHECK_THROWS_AS(client.chat({"s", "t", ""}), Error);
  CHECK(sleeps.size() == 3);
  CHECK(sleeps.back() == std::chrono::milliseconds(4000));

  srv.stop();
  t.join();
}

TEST_CASE("results audit log round trip and reparse") {
  forge::testing::TempDir dir;
  const auto m = balanced_manifest(4);
  std::vector<EvalResult> res;
  for (int i = 0; i < 4; ++i) {
    EvalResult r = result(m.entries[i].id, "eng", 0, false);
    r.raw_response = std::string("I think ") + to_char(m.entries[i].answer_key) + ") and b)";
    res.push_back(r);
  }
  res[2].error = "timeout";
  res[2].raw_response.clear();
  append_results(res, dir / "log.jsonl");
  auto back = read_results(dir / "log.jsonl");
  REQUIRE(back.size() == 4);
  CHECK(back[1].raw_response == res[1].raw_response);
  CHECK(back[2].error == "timeout");
  reparse(back, m.entries);
  CHECK(back[0].correct);
  CHECK(back[0].near_misses == std::vector<std::string>{"b)"});
  CHECK_FALSE(back[2].correct);
}

TEST_CASE("aggregate") {
  std::vector<EvalResult> res;
  add_run(res, "cat", 0, 10, 6);
  auto rep = aggregate(res, std::vector{LanguageInfo::of("cat")});
  REQUIRE(rep.clusters.size() == 1);
  CHECK(rep.clusters[0].cluster == ResourceClass::Mid);
  CHECK(rep.clusters[0].mean == rep.languages[0].accuracy.mean);
  CHECK_FALSE(rep.english.has_value());

  CHECK_THROWS_AS(aggregate(res, std::vector{LanguageInfo::of("eng")}), Error);

  // accuracy monotone in presence
  res.clear();
  std::vector<LanguageInfo> langs;
  const char* codes[] = {"tso", "lin", "mlt", "swh", "afr", "est", "cat", "ind", "tur", "fra", "deu", "eng"};
  for (int i = 0; i < 12; ++i) {
    add_run(res, codes[i], 0, 20, i + 5);
    add_run(res, codes[i], 1, 20, i + 7);
    langs.push_back(LanguageInfo::of(codes[i]));
  }
  rep = aggregate(res, langs);
  REQUIRE(rep.presence_correlation.has_value());
  CHECK(rep.presence_correlation->rho == doctest::Approx(1.0));
  CHECK(rep.english == doctest::Approx((16.0 + 18.0) / 40.0));

  // language i has accuracy (2i + 12) / 40; Low = i 0..4, Mid = 5..7, High = 8..11
  std::map<ResourceClass, std::vector<int>> members;
  for (int i = 0; i < 12; ++i) members[*langs[i].cluster].push_back(i);
  for (const auto& c : rep.clusters) {
    double s = 0;
    for (int i : members[c.cluster]) s += (2.0 * i + 12.0) / 40.0;
    CHECK(c.mean == doctest::Approx(s / members[c.cluster].size()).epsilon(1e-12));
    double lo = 1, hi = 0;
    for (const auto& m : c.members) {
      for (const auto& la : rep.languages) {
        if (la.language == m) {
          lo = std::min(lo, la.accuracy.mean);
          hi = std::max(hi, la.accuracy.mean);
        }
      }
    }
    CHECK(c.mean >= lo);
    CHECK(c.mean <= hi);
  }
  CHECK(rep.clusters.size() == 3);
  CHECK(rep.languages[11].accuracy.standard_error == doctest::Approx(std::sqrt(2.0 * 0.05 * 0.05) / std::sqrt(2.0)));
  CHECK(format_report(rep).find("eng\t0.8500") != std::string::npos);

  // uneven runs are rejected
  std::vector<EvalResult> uneven;
  add_run(uneven, "eng", 0, 5, 1);
  add_run(uneven, "eng", 1, 4, 1);
  CHECK_THROWS_AS(aggregate(uneven, std::vector{LanguageInfo::of("eng")}), Error);
}

TEST_CASE("subset independence") {
  std::vector<EvalResult> res;
  for (int i = 0; i < 100; ++i) res.push_back(result("p" + std::to_string(i), "eng", 0, i % 2 == 0));
  std::set<std::string> subset;
  for (int i = 0; i < 50; ++i) subset.insert("p" + std::to_string(i));
  CHECK(subset_independence_pvalue(res, subset) == doctest::Approx(1.0));
  CHECK(subset_independence_pvalue(res, subset) == stats::two_proportion_test(25, 50, 25, 50));
}

TEST_CASE("human_score") {
  HumanRecord h = human("u", 3, std::string(20, 'C') + std::string(5, 'B') + std::string(5, 'I'));
  CHECK(human_score(h) == 21.0);
  CHECK(human_score(human("u", 3, std::string(30, 'B'))) == 6.0);
  CHECK(human_score(human("u", 3, std::string(24, 'C'))) == 24.0);
  CHECK(human_score(h, {1, 2, 21, 30}) == 2.2);

  std::mt19937 rng(5);
  for (int t = 0; t < 200; ++t) {
    std::string o;
    for (int i = 0; i < 24; ++i) o.push_back("CI"[rng() % 2]);
    CHECK(human_score(human("x", 0, o)) == static_cast<double>(std::count(o.begin(), o.end(), 'C')));
  }
}

TEST_CASE("percentile_rank") {
  std::vector<HumanRecord> hs = {human("a", 2, "CCCII"), human("b", 2, "CCIII"), human("c", 2, "CCCCC"),
                                 human("d", 2, "CIBBI"), human("e", 2, "BBBBB"), human("z", 5, "CCCCC")};
  // scores: 3, 2, 5, 1.4, 1.0
  CHECK(percentile_rank(0.5, hs, 2) == 0.0);
  CHECK(percentile_rank(5.5, hs, 2) == 100.0);
  CHECK(percentile_rank(5.0, hs, 2) == 80.0);  // strict
  CHECK(percentile_rank(2.0, hs, 2) == 40.0);
  CHECK(percentile_rank(1.0, hs, 5) == 0.0);
  CHECK(percentile_rank(0.5, hs, 2, std::set<int>{1}) == 20.0);  // e scores 0.2, rest 1.0
  CHECK_THROWS_AS(percentile_rank(1.0, hs, 7), Error);

  // brute force over many model scores, and monotonicity
  double prev = -1;
  for (int k = 0; k <= 60; ++k) {
    const double s = k / 10.0;
    int below = 0, total = 0;
    for (const auto& h : hs) {
      if (h.level != 2) continue;
      ++total;
      below += human_score(h) < s;
    }
    const double p = percentile_rank(s, hs, 2);
    CHECK(p == 100.0 * below / total);
    CHECK(p >= prev);
    prev = p;
  }
}

TEST_CASE("human csv") {
  forge::testing::TempDir dir;
  forge::testing::spit(dir / "h.csv",
                       "participant_id,level,problem_number,outcome\n"
                       "u1,3,1,C\nu1,3,2,B\nu2, 3, 1, I\nu2,3,2,C\nu1,4,1,C\n");
  const auto hs = read_human_csv(dir / "h.csv");
  REQUIRE(hs.size() == 3);
  CHECK(hs[0].participant_id == "u1");
  CHECK(hs[0].outcomes.size() == 2);
  CHECK(human_score(hs[0]) == 1.2);
  CHECK(hs[1].outcomes.at(1) == Outcome::Incorrect);
  CHECK(hs[2].level == 4);

  forge::testing::spit(dir / "bad.csv", "u1,3,1,X\n");
  CHECK_THROWS_AS(read_human_csv(dir / "bad.csv"), Error);
  forge::testing::spit(dir / "dup.csv", "u1,3,1,C\nu1,3,1,I\n");
  CHECK_THROWS_AS(read_human_csv(dir / "dup.csv"), Error);
}

TEST_CASE("difficulty indices on a 10-participant fixture") {
  // 6 problems, 10 participants, level 1
  std::vector<HumanRecord> hs = {
      human("p01", 1, "CCCCCC"), human("p02", 1, "CCCCCI"), human("p03", 1, "CCCCBI"), human("p04", 1, "CCCIII"),
      human("p05", 1, "CCBIIC"), human("p06", 1, "CCIIII"), human("p07", 1, "CBIIBI"), human("p08", 1, "CIIIII"),
      human("p09", 1, "CIIBII"), human("p10", 1, "CIIIIB"), human("x", 2, "IIIIII")};
  const std::map<int, double> model = {{1, 1.0}, {2, 0.9}, {3, 0.5}, {4, 0.6}, {5, 0.2}, {6, 0.1}};
  const auto rep = difficulty_indices(hs, 1, model);
  CHECK(rep.participants == 10);
  REQUIRE(rep.problems.size() == 6);

  // brute force: scores, ordering by (score desc, id), slice by counts
  std::vector<std::pair<double, std::string>> order;
  for (int i = 0; i < 10; ++i) order.emplace_back(-human_score(hs[i]), hs[i].participant_id);
  std::sort(order.begin(), order.end());
  auto find = [&](const std::string& id) -> const HumanRecord& {
    for (const auto& h : hs)
      if (h.participant_id == id) return h;
    throw std::runtime_error("missing");
  };
  auto cr = [](Outcome o) { return o == Outcome::Correct ? 1.0 : o == Outcome::Blank ? 0.2 : 0.0; };
  for (int p = 1; p <= 6; ++p) {
    double all = 0, top2 = 0, bot2 = 0;
    for (int i = 0; i < 10; ++i) all += cr(find(order[i].second).outcomes.at(p));
    for (int i = 0; i < 2; ++i) top2 += cr(find(order[i].second).outcomes.at(p));
    for (int i = 8; i < 10; ++i) bot2 += cr(find(order[i].second).outcomes.at(p));
    const auto& pi = rep.problems[p - 1];
    CHECK(pi.problem == p);
    CHECK(pi.difficulty == doctest::Approx(all / 10).epsilon(1e-12));
    CHECK(pi.difficulty_top1 == cr(find(order[0].second).outcomes.at(p)));
    CHECK(pi.discriminative == doctest::Approx(top2 / 2 - bot2 / 2).epsilon(1e-12));
    CHECK(pi.weight == (p <= 2 ? 0.33 : p <= 4 ? 0.66 : 1.0));
    CHECK(pi.difficulty >= 0.0);
    CHECK(pi.difficulty <= 1.0);
    CHECK(std::abs(pi.discriminative) <= 1.0);
  }
  // problem 1 is solved by everyone
  CHECK(rep.problems[0].difficulty == 1.0);
  // hand values: problem 2 credits 1,1,1,1,1,1,.2,0,0,0 -> 6.2/10
  CHECK(rep.problems[1].difficulty == doctest::Approx(0.62));
  // top two (p01, p02) solved 3, bottom two (p10 score 1.2 and p08 score 1.0) did not
  CHECK(rep.problems[2].discriminative == 1.0);

  REQUIRE(rep.difficulty.has_value());
  std::vector<double> d, m;
  for (const auto& pi : rep.problems) {
    d.push_back(pi.difficulty);
    m.push_back(pi.model_accuracy);
  }
  CHECK(rep.difficulty->rho == doctest::Approx(stats::spearman(d, m).rho).epsilon(1e-12));
  REQUIRE(rep.weight.has_value());
  CHECK(rep.weight->rho < 0);
  // the single top-1% participant solved everything, so that column is constant
  CHECK_FALSE(rep.difficulty_top1.has_value());

  std::vector<HumanRecord> few(hs.begin(), hs.begin() + 4);
  try {
    difficulty_indices(few, 1, model);
    FAIL("expected InsufficientParticipants");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientParticipants);
  }
}

TEST_CASE("discriminative index extremes") {
  // top 20% all correct, bottom 20% all wrong on problem 2
  std::vector<HumanRecord> hs = {human("a", 0, "CC"), human("b", 0, "CI"), human("c", 0, "CI"),
                                 human("d", 0, "II"), human("e", 0, "II")};
  const auto rep = difficulty_indices(hs, 0, {{1, 0.5}, {2, 0.7}});
  CHECK(rep.problems[1].discriminative == 1.0);
  CHECK(rep.problems[0].discriminative == 1.0);
}

TEST_CASE("block weights and model per-problem accuracy") {
  const auto w = default_block_weights({3, 1, 2, 4, 5, 6, 7});
  CHECK(w.at(1) == 0.33);
  CHECK(w.at(3) == 0.33);
  CHECK(w.at(4) == 0.66);
  CHECK(w.at(5) == 0.66);
  CHECK(w.at(6) == 1.0);

  std::vector<ProblemRecord> probs;
  for (int i = 0; i < 3; ++i) {
    auto p = forge::testing::make_problem(i);
    p.level = 2;
    p.number = i + 1;
    probs.push_back(p);
  }
  std::vector<EvalResult> res = {result("p0", "eng", 0, true), result("p0", "eng", 1, false),
                                 result("p1", "eng", 0, true), result("p1", "eng", 1, true),
                                 result("p2", "eng", 0, false)};
  const auto acc = model_problem_accuracy(res, probs, 2);
  CHECK(acc.at(1) == 0.5);
  CHECK(acc.at(2) == 1.0);
  CHECK(acc.at(3) == 0.0);
  CHECK(model_problem_accuracy(res, probs, 3).empty());
}
