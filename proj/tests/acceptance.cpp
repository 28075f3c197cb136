// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "forge/compose.hpp"
#include "forge/error.hpp"
#include "forge/eval.hpp"
#include "forge/manifest.hpp"
#include "forge/pipeline.hpp"
#include "forge/qe.hpp"
#include "forge/stats.hpp"
#include "forge/techniques.hpp"
#include "forge/textmetrics.hpp"
#include "forge/unicode.hpp"
#include "metric_corpus.hpp"
#include "metric_oracle.hpp"
#include "test_util.hpp"

using namespace forge;
namespace fs = std::filesystem;
using forge::testing::TempDir;

namespace {

// Collects the first few mismatches of a criterion.
struct Check {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 5) failures.push_back(what);
    if (!ok) ++failed;
  }
  int failed = 0;
};

std::string num(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

int g_failed = 0;

void criterion(const char* name, double limit_ms, const std::function<void(Check&)>& body) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.expect(false, std::string("threw ") + e.what());
  }
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  if (ms > limit_ms) c.expect(false, "took " + num(ms) + " ms, limit " + num(limit_ms) + " ms");
  const bool ok = c.failed == 0;
  g_failed += !ok;
  std::printf("%s %-28s %9.2f ms\n", ok ? "PASS" : "FAIL", name, ms);
  for (const auto& f : c.failures) std::printf("     %s\n", f.c_str());
  if (c.failed > static_cast<int>(c.failures.size())) std::printf("     ... %d more\n", c.failed - static_cast<int>(c.failures.size()));
  std::fflush(stdout);
}

// ---- shared oracles ----

std::vector<double> brute_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      less += w < v[i];
      equal += w == v[i];
    }
    r[i] = less + (equal + 1) / 2;
  }
  return r;
}

double brute_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

Choice brute_parse(const std::string& s) {
  Choice last = Choice::N;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    if (s[i] >= 'A' && s[i] <= 'E' && s[i + 1] == ')') last = static_cast<Choice>(s[i]);
  }
  return last;
}

std::string mutate(std::string s, std::mt19937& rng, int edits) {
  static const std::string letters = "abcdefghijklmnopqrstuvwxyz ";
  for (int k = 0; k < edits && !s.empty(); ++k) s[rng() % s.size()] = letters[rng() % letters.size()];
  return s;
}

// ---- desk pipeline fixtures ----

std::vector<ProblemRecord> desk_pool(int n) {
  static const char* things[] = {"apples", "marbles", "coins", "stickers", "pencils", "cards", "shells", "books"};
  std::vector<ProblemRecord> pool;
  for (int i = 0; i < n; ++i) {
    auto r = forge::testing::make_problem(
        i, "Ana has " + std::to_string(11 + 9 * i) + " " + things[i % 8] + " and gives " + std::to_string(2 + i) +
               " to her friend on day " + std::to_string(i) + ". How many remain?");
    r.options = {"Some", std::to_string(i), std::to_string(i + 2), "none", "7 cm"};
    pool.push_back(r);
  }
  return pool;
}

class Saboteur : public pipeline::TranslationClient {
 public:
  Saboteur(std::string id, std::vector<std::string> marks) : id_(std::move(id)), marks_(std::move(marks)) {}
  std::string translate(std::string_view text, std::string_view, std::string_view) override {
    for (const auto& m : marks_)
      if (text.find(m) != std::string_view::npos) return "qqq zzz vvv";
    return std::string(text);
  }
  std::string id() const override { return id_; }

 private:
  std::string id_;
  std::vector<std::string> marks_;
};

struct DeskRun {
  TempDir dir;
  pipeline::PipelineConfig config;
  explicit DeskRun(const std::vector<ProblemRecord>& pool, std::size_t concurrency) {
    {
      std::ofstream out(dir / "pool.jsonl");
      for (const auto& r : pool) out << manifest_line(r, LanguageTag::of("eng"), Split::Standard).dump() << '\n';
    }
    config.pool = dir / "pool.jsonl";
    config.out_dir = dir / "out";
    config.image_root = dir.path();
    config.languages = {"cat", "deu"};
    config.stages = {"clean", "dedup", "corruption", "translate", "qe", "manifest"};
    config.concurrency = concurrency;
  }
  fs::path path(const std::string& lang, Split s) const {
    return config.out_dir / lang / (s == Split::Standard ? "standard.jsonl" : "high_quality.jsonl");
  }
  std::set<std::string> ids(const std::string& lang, Split s) const {
    std::set<std::string> out;
    for (const auto& e : read_manifest(path(lang, s)).entries) out.insert(e.id);
    return out;
  }
};

}  // namespace

int main() {
  criterion("threshold derivation", 1.0, [](Check& c) {
    const double t = qe::derive_threshold(0.5, 0.8);
    c.expect(t == 0.625, "derive_threshold(0.5, 0.8) = " + num(t));
  });

  criterion("chrF++ oracle suite", 1000.0, [](Check& c) {
    for (const auto& p : forge::testing::kChrfCorpus) {
      const double got = textmetrics::chrf_pp(p.reference, p.hypothesis).value;
      const double brute = forge::testing::oracle::chrf_pp(p.reference, p.hypothesis);
      c.expect(std::abs(got - brute) <= 1e-9, std::string(p.hypothesis) + ": " + num(got) + " vs oracle " + num(brute));
      c.expect(std::abs(got - p.chrf_pp) <= 1e-9,
               std::string(p.hypothesis) + ": " + num(got) + " vs frozen " + num(p.chrf_pp));
    }
    for (const char* s : {"a", "The sum of the digits is 10.", "Ein Würfel hat sechs Flächen"}) {
      c.expect(textmetrics::chrf_pp(s, s).value == 1.0, std::string("identical: ") + s);
      c.expect(textmetrics::chrf_pp(s, "").value == 0.0, std::string("empty hypothesis: ") + s);
    }
  });

  criterion("QE gate properties", 10000.0, [](Check& c) {
    std::mt19937 rng(7);
    const auto pool = desk_pool(40);
    const qe::GateConfig cfg;
    for (int trial = 0; trial < 1000; ++trial) {
      const auto& src = pool[rng() % pool.size()];
      qe::BacktranslationSet bt;
      bt.record.problem_id = src.id;
      bt.record.source_text = src.question_text;
      const int k = 1 + static_cast<int>(rng() % 4);
      for (int i = 0; i < k; ++i)
        bt.backtranslations.push_back({"m" + std::to_string(i), mutate(src.question_text, rng, static_cast<int>(rng() % 40))});
      const auto before = qe::gate(bt, cfg);
      bt.backtranslations.push_back({"extra", mutate(src.question_text, rng, static_cast<int>(rng() % 40))});
      const auto after = qe::gate(bt, cfg);
      c.expect(after.aggregate_m >= before.aggregate_m, "M decreased in trial " + std::to_string(trial));
      c.expect(before.verdict == qe::Verdict::Fail || after.verdict != qe::Verdict::Fail,
               "Pass flipped to Fail in trial " + std::to_string(trial));
    }
    // every manifest pair built from gated samples keeps HighQuality inside Standard
    for (int trial = 0; trial < 50; ++trial) {
      DatasetManifest standard{LanguageTag::of("cat"), Split::Standard, {}};
      DatasetManifest high{LanguageTag::of("cat"), Split::HighQuality, {}};
      for (const auto& r : pool) {
        qe::BacktranslationSet bt;
        bt.record.problem_id = r.id;
        bt.record.source_text = r.question_text;
        bt.backtranslations = {{"a", mutate(r.question_text, rng, static_cast<int>(rng() % 30))},
                               {"b", mutate(r.question_text, rng, static_cast<int>(rng() % 30))}};
        const auto v = qe::gate(bt, cfg).verdict;
        if (v != qe::Verdict::Fail) standard.entries.push_back(r);
        if (v == qe::Verdict::PassHighQuality) high.entries.push_back(r);
      }
      c.expect(split_containment_violations(standard, high).empty(), "HighQuality not inside Standard");
    }
  });

  criterion("L1 slope robustness", 5000.0, [](Check& c) {
    std::vector<double> x, y;
    for (int i = 1; i <= 10; ++i) {
      x.push_back(i);
      y.push_back(0.8 * i);
    }
    x.push_back(4.5);
    y.push_back(55.0);
    const auto fit = stats::l1_slope(x, y);
    c.expect(fit.slope == 0.8, "slope with outlier = " + num(fit.slope));

    std::mt19937 rng(11);
    std::uniform_real_distribution<double> ux(0.05, 1.0);
    std::normal_distribution<double> noise(0.0, 0.05);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> xs(12), ys(12);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        xs[i] = ux(rng);
        ys[i] = 0.8 * xs[i] + noise(rng);
      }
      const auto f = stats::l1_slope(xs, ys);
      const double lipschitz = std::accumulate(xs.begin(), xs.end(), 0.0);
      const double step = 1e-3;
      double best = 1e300;
      for (double s = -1.0; s <= 3.0; s += step) {
        double obj = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) obj += std::abs(ys[i] - s * xs[i]);
        best = std::min(best, obj);
      }
      c.expect(f.objective <= best + 1e-12, "beaten by grid in trial " + std::to_string(trial));
      c.expect(f.objective >= best - lipschitz * step / 2 - 1e-12, "below grid bound in trial " + std::to_string(trial));
    }
  });

  criterion("Spearman validation harness", 1000.0, [](Check& c) {
    std::vector<double> x, up, down;
    for (int i = 0; i < 30; ++i) {
      x.push_back(i * 0.37);
      up.push_back(std::exp(i * 0.1));
      down.push_back(-i * i * 1.5);
    }
    c.expect(stats::spearman(x, up).rho == 1.0, "increasing rho = " + num(stats::spearman(x, up).rho));
    c.expect(stats::spearman(x, down).rho == -1.0, "decreasing rho = " + num(stats::spearman(x, down).rho));

    const std::vector<double> tx{1, 2, 2, 3, 4, 4, 4, 7, 8, 8};
    const std::vector<double> ty{3, 1, 1, 5, 5, 2, 9, 9, 0, 6};
    const double expected = brute_pearson(brute_ranks(tx), brute_ranks(ty));
    const double got = stats::spearman(tx, ty).rho;
    c.expect(std::abs(got - expected) <= 1e-12, "tied rho " + num(got) + " vs " + num(expected));

    // score files in, one table row per language out
    TempDir dir;
    std::mt19937 rng(3);
    std::normal_distribution<double> g(0.0, 0.05);
    for (const char* lang : {"deu", "cat"}) {
      std::ofstream out(dir / (std::string(lang) + ".tsv"));
      out << "# reference estimate\n";
      for (int i = 0; i < 50; ++i) {
        const double r = 0.2 + 0.6 * i / 50.0;
        out << r << '\t' << 0.8 * r + g(rng) << '\n';
      }
    }
    std::map<std::string, qe::ScorePairs> by_lang;
    for (const char* lang : {"deu", "cat"}) by_lang[lang] = qe::read_score_pairs(dir / (std::string(lang) + ".tsv"));
    const auto rows = qe::validation_report(by_lang);
    c.expect(rows.size() == 2, "expected two rows");
    for (const auto& row : rows) {
      const auto& p = by_lang[row.language];
      const double want = brute_pearson(brute_ranks(p.reference), brute_ranks(p.estimate));
      c.expect(std::abs(row.correlation.rho - want) <= 1e-12, row.language + " rho mismatch");
    }
    const auto table = qe::format_validation_table(rows);
    c.expect(table.find("deu") != std::string::npos && table.find("cat") != std::string::npos, "table misses a row");
  });

  criterion("answer parser", 5000.0, [](Check& c) {
    c.expect(eval::parse_answer("The total is 12, so the answer is C)") == Choice::C, "single answer");
    c.expect(eval::parse_answer("First I thought B) but the answer is D)") == Choice::D, "conflicting answers");
    c.expect(eval::parse_answer("I cannot decide.") == Choice::N, "no answer");
    std::mt19937 rng(1234);
    const std::vector<std::string> inject = {"A)", "B)", "C)", "D)", "E)", "a)", "F)", "(A", "B )", "Ｃ)", "D）", ")"};
    for (int i = 0; i < 10000; ++i) {
      std::string s;
      const int pieces = static_cast<int>(rng() % 6);
      for (int k = 0; k < pieces; ++k) {
        s += forge::testing::random_unicode(rng, 12);
        if (rng() % 2) s += inject[rng() % inject.size()];
      }
      c.expect(eval::parse_answer(s) == brute_parse(s), "fuzz case " + std::to_string(i));
    }
  });

  criterion("desk pipeline end to end", 30000.0, [](Check& c) {
    const auto pool = desk_pool(10);
    auto clients = [](std::vector<std::string> marks) {
      pipeline::PipelineClients cl;
      cl.translator = std::make_shared<pipeline::EchoTranslationClient>();
      cl.backtranslators = {std::make_shared<Saboteur>("bt-a", marks), std::make_shared<Saboteur>("bt-b", marks)};
      cl.judge = std::make_shared<pipeline::FixedJudgeClient>();
      return cl;
    };
    DeskRun clean(pool, 4);
    pipeline::run_pipeline(clean.config, clients({}));
    for (const char* lang : {"cat", "deu"})
      for (auto s : {Split::Standard, Split::HighQuality})
        c.expect(clean.ids(lang, s).size() == 10, std::string(lang) + " split misses records");

    const std::vector<std::string> marks = {"on day 1.", "on day 4.", "on day 7."};
    const std::set<std::string> gone = {"p1", "p4", "p7"};
    DeskRun serial(pool, 1), parallel(pool, 8);
    pipeline::run_pipeline(serial.config, clients(marks));
    pipeline::run_pipeline(parallel.config, clients(marks));
    for (const char* lang : {"cat", "deu"}) {
      for (auto s : {Split::Standard, Split::HighQuality}) {
        const auto ids = serial.ids(lang, s);
        std::set<std::string> expect;
        for (const auto& r : pool)
          if (!gone.count(r.id)) expect.insert(r.id);
        c.expect(ids == expect, std::string(lang) + " sabotaged ids not exactly removed");
        c.expect(forge::testing::slurp(serial.path(lang, s)) == forge::testing::slurp(parallel.path(lang, s)),
                 std::string(lang) + " parallel manifest differs from serial");
      }
    }
  });

  criterion("human statistics", 1000.0, [](Check& c) {
    auto human = [](std::string id, int level, const std::string& o) {
      eval::HumanRecord h{std::move(id), level, {}};
      for (std::size_t i = 0; i < o.size(); ++i)
        h.outcomes[static_cast<int>(i) + 1] =
            o[i] == 'C' ? eval::Outcome::Correct : o[i] == 'B' ? eval::Outcome::Blank : eval::Outcome::Incorrect;
      return h;
    };
    const auto h25 = human("u", 1, std::string(20, 'C') + std::string(5, 'B') + std::string(5, 'I'));
    c.expect(eval::human_score(h25) == 21.0, "human_score = " + num(eval::human_score(h25)));

    const std::vector<std::string> rows = {"CCCCCCCC", "CCCCCCCI", "CCCCBIIC", "CCCIIIBI", "CCBICIII",
                                           "CCIIIIIB", "CBIIBICI", "CIIICIII", "CIIBIIII", "BIIIIIIC"};
    std::vector<eval::HumanRecord> hs;
    for (std::size_t i = 0; i < rows.size(); ++i) hs.push_back(human("h" + std::to_string(i), 2, rows[i]));
    std::map<int, double> model;
    for (int p = 1; p <= 8; ++p) model[p] = 1.0 - 0.11 * p + (p % 3) * 0.05;
    std::vector<int> numbers;
    for (const auto& [p, _] : model) numbers.push_back(p);
    const auto rep = eval::difficulty_indices(hs, 2, model, eval::default_block_weights(numbers));

    auto credit = [](eval::Outcome o) { return o == eval::Outcome::Correct ? 1.0 : o == eval::Outcome::Blank ? 0.2 : 0.0; };
    auto score = [&](const eval::HumanRecord& h) {
      double s = 0;
      for (const auto& [_, o] : h.outcomes) s += credit(o);
      return s;
    };
    std::vector<std::size_t> order(hs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (score(hs[a]) != score(hs[b])) return score(hs[a]) > score(hs[b]);
      return hs[a].participant_id < hs[b].participant_id;
    });
    c.expect(rep.problems.size() == 8, "expected 8 problems");
    for (const auto& pi : rep.problems) {
      double all = 0, top = 0, bottom = 0;
      for (std::size_t r = 0; r < order.size(); ++r) {
        const double v = credit(hs[order[r]].outcomes.at(pi.problem));
        all += v;
        if (r < 2) top += v;
        if (r >= 8) bottom += v;
      }
      const std::string tag = "problem " + std::to_string(pi.problem);
      c.expect(std::abs(pi.difficulty - all / 10) <= 1e-12, tag + " difficulty");
      c.expect(pi.difficulty_top1 == credit(hs[order[0]].outcomes.at(pi.problem)), tag + " top 1%");
      c.expect(std::abs(pi.discriminative - (top - bottom) / 2) <= 1e-12, tag + " discriminative");
      const int block = 3 * (pi.problem - 1) / 8;  // problems are numbered 1..8
      const double w = block == 0 ? 0.33 : block == 1 ? 0.66 : 1.0;
      c.expect(pi.weight == w, tag + " weight " + num(pi.weight));
    }
    for (double m = 0.0; m <= 9.0; m += 0.1) {
      double below = 0;
      for (const auto& h : hs) below += score(h) < m;
      c.expect(std::abs(eval::percentile_rank(m, hs, 2) - 100.0 * below / 10) <= 1e-12, "percentile at " + num(m));
    }
  });

  criterion("steering algebra", 5000.0, [](Check& c) {
    std::mt19937 rng(5);
    std::normal_distribution<float> g(0.0f, 1.0f);
    auto dump = [&](std::uint32_t layers, std::uint32_t samples, std::uint32_t dim) {
      techniques::ActivationDump d;
      d.num_layers = layers;
      d.num_samples = samples;
      d.hidden_dim = dim;
      d.values.resize(static_cast<std::size_t>(layers) * samples * dim);
      for (auto& v : d.values) v = g(rng);
      return d;
    };
    const auto o = dump(36, 6, 8), en = dump(36, 6, 8);
    const auto v = techniques::compute_steering_vectors(o, en);

    techniques::SteeringConfig cfg;
    cfg.total_layers = 36;
    cfg.forward_start_layer = 2;
    cfg.forward_num_layers = 10;
    cfg.backward_start_layer = 20;
    cfg.backward_num_layers = 8;
    cfg.c = 0.0;
    c.expect(techniques::apply_steering(o, v, cfg).values == o.values, "c = 0 changed the dump");

    cfg.c = 0.75;
    const auto there = techniques::apply_steering(o, v, cfg);
    cfg.c = -0.75;
    const auto back = techniques::apply_steering(there, v, cfg);
    double worst = 0;
    for (std::size_t i = 0; i < o.values.size(); ++i) worst = std::max(worst, double(std::abs(back.values[i] - o.values[i])));
    c.expect(worst <= 1e-6, "round trip error " + num(worst));

    techniques::SteeringConfig all;
    all.total_layers = 36;
    all.forward_num_layers = 36;
    all.c = 1.0;
    const auto moved = techniques::apply_steering(o, v, all);
    worst = 0;
    for (std::size_t l = 0; l < 36; ++l) {
      for (std::size_t k = 0; k < 8; ++k) {
        double a = 0, b = 0;
        for (std::size_t s = 0; s < 6; ++s) {
          a += moved.at(l, s, k);
          b += en.at(l, s, k);
        }
        worst = std::max(worst, std::abs(a / 6 - b / 6));
      }
    }
    c.expect(worst <= 1e-6, "steered means off by " + num(worst));

    const auto preset = techniques::SteeringConfig::preset_36_layers();
    c.expect(preset.c == 1.0 / (2 * 5), "preset c = " + num(preset.c));
    const auto p = techniques::apply_steering(o, v, preset);
    for (std::size_t l = 0; l < 36; ++l) {
      for (std::size_t s = 0; s < 6; ++s) {
        for (std::size_t k = 0; k < 8; ++k) {
          double want = o.at(l, s, k);
          if (l >= 6 && l <= 10) want = o.at(l, s, k) + 0.1 * v.forward[l * 8 + k];
          if (l >= 21 && l <= 25) want = o.at(l, s, k) + 0.1 * v.backward[l * 8 + k];
          c.expect(std::abs(p.at(l, s, k) - want) <= 1e-6, "preset layer " + std::to_string(l));
        }
      }
    }
  });

  criterion("compose", 30000.0, [](Check& c) {
    const auto fonts = compose::FontStack::bundled();
    auto joined = [](const compose::TextLayout& l) {
      std::string out;
      for (const auto& line : l.lines) out += (out.empty() ? "" : " ") + line;
      return unicode::normalize(out);
    };
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> dim(1.0, 400.0);
    for (int i = 0; i < 1000; ++i) {
      const auto text = forge::testing::random_unicode(rng, 60);
      const auto l = compose::wrap_text(text, dim(rng), dim(rng), fonts);
      c.expect(joined(l) == unicode::normalize(text), "content lost in case " + std::to_string(i));
    }

    compose::Image img;
    img.width = 240;
    img.height = 120;
    img.bgr.resize(240 * 120 * 3);
    for (int y = 0; y < 120; ++y)
      for (int x = 0; x < 240; ++x) {
        auto* px = &img.bgr[(static_cast<std::size_t>(y) * 240 + x) * 3];
        px[0] = static_cast<std::uint8_t>((x * 7 + y * 3) % 256);
        px[1] = static_cast<std::uint8_t>((x * y) % 256);
        px[2] = static_cast<std::uint8_t>((x + y * 5) % 256);
      }
    const BoundingBox box{20, 30, 200, 60};
    for (int y = box.y; y < box.y + box.height; ++y)
      for (int x = box.x; x < box.x + box.width; ++x)
        for (int k = 0; k < 3; ++k) img.bgr[(static_cast<std::size_t>(y) * 240 + x) * 3 + k] = 255;
    const auto before = img;
    const auto layout = compose::wrap_text("Quants triangles hi ha a la figura? Compta-los tots amb cura.", box.width,
                                           box.height, fonts);
    compose::paste_text(img, box, layout, fonts);
    int outside = 0, inside = 0;
    for (int y = 0; y < 120; ++y)
      for (int x = 0; x < 240; ++x) {
        const bool in = x >= box.x && x < box.x + box.width && y >= box.y && y < box.y + box.height;
        const bool changed = img.pixel(x, y) != before.pixel(x, y);
        (in ? inside : outside) += changed;
      }
    c.expect(outside == 0, std::to_string(outside) + " pixels changed outside the box");
    c.expect(inside > 0, "nothing drawn inside the box");
  });

  criterion("mock model evaluation", 10000.0, [](Check& c) {
    DatasetManifest m{LanguageTag::of("eng"), Split::Standard, {}};
    for (int i = 0; i < 1000; ++i) m.entries.push_back(forge::testing::make_problem(i));
    std::map<char, int> keys;
    for (const auto& e : m.entries) keys[to_char(e.answer_key)]++;
    for (const auto& [_, n] : keys) c.expect(n == 200, "answer keys are not balanced");

    class Uniform : public eval::ModelClient {
     public:
      std::string chat(const eval::ChatRequest&) override {
        std::lock_guard lock(mu_);
        return std::string("My answer: ") + "ABCDE"[std::uniform_int_distribution<int>(0, 4)(rng_)] + ")";
      }
      std::string id() const override { return "uniform"; }

     private:
      std::mutex mu_;
      std::mt19937 rng_{2025};
    } model;
    eval::EvalOptions opt;
    opt.runs = 3;
    opt.attach_images = false;
    opt.concurrency = 8;
    const auto res = eval::evaluate(m, model, eval::PromptCatalog::load_default(), opt);
    c.expect(res.size() == 3000, "expected 3000 results");
    const auto rep = eval::aggregate(res, std::vector{eval::LanguageInfo::of("eng")});
    const double acc = rep.languages[0].accuracy.mean;
    const double sigma = std::sqrt(0.2 * 0.8 / 3000.0);
    c.expect(std::abs(acc - 0.2) <= 3 * sigma, "accuracy " + num(acc) + " outside 0.2 +- " + num(3 * sigma));
  });

  std::printf("%d of 11 criteria failed\n", g_failed);
  return g_failed == 0 ? 0 : 1;
}
