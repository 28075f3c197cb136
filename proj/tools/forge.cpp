#include <atomic>
#include <csignal>
#include <pthread.h>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "forge/compose.hpp"
#include "forge/error.hpp"
#include "forge/eval.hpp"
#include "forge/manifest.hpp"
#include "forge/pipeline.hpp"
#include "forge/qe.hpp"
#include "forge/review.hpp"
#include "forge/review_server.hpp"
#include "forge/stats.hpp"
#include "forge/techniques.hpp"
#include "forge/textmetrics.hpp"

namespace fs = std::filesystem;
using namespace forge;

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> read_column(const fs::path& p) {
  std::vector<double> v;
  std::ifstream in(p);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + p.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    v.push_back(std::stod(line));
  }
  return v;
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(prec) << v;
  return ss.str();
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + p.string());
  return out;
}

// Answers with a uniformly random letter; for sanity checks of the harness.
class RandomModelClient : public eval::ModelClient {
 public:
  explicit RandomModelClient(unsigned seed) : seed_(seed) {}
  std::string chat(const eval::ChatRequest& req) override {
    std::mt19937_64 rng(seed_ ^ std::hash<std::string>{}(req.text) ^ (counter_++ * 0x9E3779B97F4A7C15ull));
    const char letter = static_cast<char>('A' + std::uniform_int_distribution<int>(0, 4)(rng));
    return std::string("Answer: ") + letter + ")";
  }
  std::string id() const override { return "random"; }

 private:
  unsigned seed_;
  std::atomic<unsigned long long> counter_{0};
};

// ---- metrics ----

void cmd_metrics(const std::string& metric, const std::string& ref, const std::string& hyp, const fs::path& tsv) {
  auto score = [&](const std::string& r, const std::string& h) -> double {
    if (metric == "chrfpp") return textmetrics::chrf_pp(r, h).value;
    if (metric == "bleu") return textmetrics::bleu(r, h).value;
    if (metric == "rouge1") return textmetrics::rouge1(r, h).f1;
    if (metric == "similarity") return textmetrics::text_similarity(r, h);
    throw Error(ErrorCode::InvalidArgument, "unknown metric " + metric);
  };
  if (tsv.empty()) {
    std::cout << fmt(score(ref, hyp), 6) << "\n";
    return;
  }
  std::ifstream in(tsv);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + tsv.string());
  std::string line;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw Error(ErrorCode::MalformedRecord, "expected reference<TAB>hypothesis");
    std::cout << fmt(score(line.substr(0, tab), line.substr(tab + 1)), 6) << "\n";
  }
}

// ---- qe ----

// Input lines: {"id","lang","source","target","backtranslations":[{"id","text"}]}
void cmd_qe_gate(const fs::path& input, const qe::GateConfig& cfg, const fs::path& out_path) {
  std::ifstream in(input);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + input.string());
  std::ofstream file;
  if (!out_path.empty()) file = open_out(out_path);
  std::ostream& out = out_path.empty() ? std::cout : file;
  std::string line;
  std::size_t n = 0, pass = 0, hq = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = Json::parse(line);
    qe::BacktranslationSet bt;
    bt.record.problem_id = j.at("id").get<std::string>();
    bt.record.source_text = j.at("source").get<std::string>();
    bt.record.target_text = j.value("target", std::string{});
    bt.record.target_lang.code = j.value("lang", std::string{});
    for (const auto& b : j.at("backtranslations")) {
      bt.backtranslations.push_back({b.at("id").get<std::string>(), b.at("text").get<std::string>()});
    }
    const auto report = qe::gate(bt, cfg);
    out << qe::to_json(report).dump() << "\n";
    ++n;
    if (report.verdict != qe::Verdict::Fail) ++pass;
    if (report.verdict == qe::Verdict::PassHighQuality) ++hq;
  }
  std::cerr << n << " gated, " << pass << " standard, " << hq << " high quality\n";
}

void cmd_qe_validate(const std::vector<std::string>& specs, bool pearson) {
  std::map<std::string, qe::ScorePairs> by_lang;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidArgument, "expected LANG=FILE, got " + s);
    by_lang[s.substr(0, eq)] = qe::read_score_pairs(s.substr(eq + 1));
  }
  const auto rows = qe::validation_report(
      by_lang, pearson ? stats::CorrelationKind::Pearson : stats::CorrelationKind::Spearman);
  std::cout << qe::format_validation_table(rows);
}

// ---- stats ----

void cmd_correlation(const fs::path& xf, const fs::path& yf, bool pearson) {
  const auto x = read_column(xf), y = read_column(yf);
  const auto r = pearson ? stats::pearson(x, y) : stats::spearman(x, y);
  std::cout << (pearson ? "pearson" : "spearman") << " rho=" << fmt(r.rho) << " p=" << fmt(r.p_value, 6)
            << " n=" << r.n << "\n";
}

void cmd_l1slope(const fs::path& xf, const fs::path& yf, bool intercept) {
  const auto x = read_column(xf), y = read_column(yf);
  const auto r = stats::l1_slope(x, y, !intercept);
  std::cout << "slope=" << fmt(r.slope, 6) << " intercept=" << fmt(r.intercept, 6)
            << " objective=" << fmt(r.objective, 6) << "\n";
}

void cmd_proptest(long a, long na, long b, long nb) {
  std::cout << "p=" << fmt(stats::two_proportion_test(a, na, b, nb), 6) << "\n";
}

// ---- compose ----

compose::FontStack fonts_from(const fs::path& dir) {
  return dir.empty() ? compose::FontStack::bundled() : compose::FontStack::from_dir(dir);
}

void cmd_compose_one(const fs::path& input, const fs::path& output, const std::vector<int>& bbox,
                     const std::string& text, const fs::path& font_dir, const compose::LayoutConfig& cfg) {
  if (bbox.size() != 4) throw Error(ErrorCode::InvalidArgument, "--bbox takes x y w h");
  const auto fonts = fonts_from(font_dir);
  const auto layout =
      compose::compose_file(input, output, BoundingBox{bbox[0], bbox[1], bbox[2], bbox[3]}, text, fonts, cfg);
  std::cout << "font " << layout.font_size << "pt, " << layout.lines.size() << " lines\n";
}

int cmd_compose_manifest(const fs::path& manifest_path, const fs::path& image_root, const fs::path& out_dir,
                         const fs::path& font_dir, const compose::LayoutConfig& cfg) {
  const auto manifest = read_manifest(manifest_path);
  const auto fonts = fonts_from(font_dir);
  const fs::path root = image_root.empty() ? manifest_path.parent_path() : image_root;
  fs::create_directories(out_dir);
  int failed = 0;
  for (const auto& r : manifest.entries) {
    if (r.image_ref.empty()) continue;
    try {
      compose::compose_file(root / r.image_ref, out_dir / (r.id + ".png"), r.bbox, r.question_text, fonts, cfg);
    } catch (const Error& e) {
      std::cerr << r.id << ": " << e.what() << "\n";
      ++failed;
    }
  }
  std::cout << manifest.entries.size() - failed << " composed, " << failed << " failed\n";
  return failed == 0 ? 0 : 1;
}

// ---- run / dedup / translate ----

void cmd_run(const fs::path& config_path, bool resume) {
  const auto config = pipeline::PipelineConfig::load(config_path);
  const auto clients = pipeline::make_clients(config);
  std::unique_ptr<review::ReviewStore> store;
  if (config.review_store) store = std::make_unique<review::ReviewStore>(*config.review_store);
  pipeline::RunOptions opts;
  opts.resume = resume;
  const auto res = pipeline::run_pipeline(config, clients, store.get(), opts);
  std::cout << "pool " << res.pool_size << ", after filters " << res.after_filters << ", blocked "
            << res.blocked.size() << ", duplicates " << res.duplicates.size() << ", flags " << res.flags.size()
            << "\n";
  for (const auto& l : res.languages) {
    std::cout << l.language << ": standard " << l.standard << ", high quality " << l.high_quality << "\n";
  }
  for (const auto& f : res.failures) {
    std::cerr << "failed " << f.language << ":" << f.problem_id << " at " << f.stage << ": " << f.message << "\n";
  }
  for (const auto& w : res.length_warnings) std::cerr << "length warning " << w << "\n";
}

void cmd_dedup(const fs::path& pool_path, const fs::path& out, double threshold) {
  const auto pool = read_problem_pool(pool_path);
  const auto res = pipeline::dedup_report(pool, threshold, std::thread::hardware_concurrency());
  auto file = open_out(out);
  for (const auto& r : res.kept) file << manifest_line(r, LanguageTag{"eng", {}}, Split::Standard).dump() << "\n";
  for (const auto& [removed, winner] : res.removed) std::cerr << removed << " duplicates " << winner << "\n";
  std::cout << res.kept.size() << " kept, " << res.removed.size() << " removed\n";
}

void cmd_translate(const fs::path& pool_path, const std::string& src, const std::string& tgt,
                   const std::string& endpoint, const fs::path& out, std::size_t concurrency) {
  const auto pool = read_problem_pool(pool_path);
  std::unique_ptr<pipeline::TranslationClient> client;
  if (endpoint.empty() || endpoint == "echo") {
    client = std::make_unique<pipeline::EchoTranslationClient>();
  } else {
    client = std::make_unique<pipeline::HttpTranslationClient>(transport::Endpoint::parse(endpoint));
  }
  const auto res = pipeline::translate_stage(pool, LanguageTag::of(src), LanguageTag::of(tgt), *client, concurrency);
  auto file = open_out(out);
  const auto lang = LanguageTag::of(tgt);
  for (const auto& p : res.problems) file << manifest_line(p, lang, Split::Standard).dump() << "\n";
  for (const auto& f : res.failures) std::cerr << "failed " << f.problem_id << ": " << f.message << "\n";
  for (const auto& w : res.length_warnings) std::cerr << "length warning " << w << "\n";
  std::cout << res.problems.size() << " translated, " << res.failures.size() << " failed\n";
}

// ---- eval / report ----

void cmd_eval(const std::vector<std::string>& manifests, const std::string& endpoint, std::optional<unsigned> seed,
              const fs::path& out, const eval::EvalOptions& opts, const fs::path& prompts_path) {
  const auto prompts = prompts_path.empty() ? eval::PromptCatalog::load_default() : eval::PromptCatalog::load(prompts_path);
  std::unique_ptr<eval::ModelClient> client;
  if (seed) {
    client = std::make_unique<RandomModelClient>(*seed);
  } else {
    if (endpoint.empty()) throw Error(ErrorCode::InvalidArgument, "--model-endpoint or --random-seed is required");
    client = std::make_unique<eval::HttpModelClient>(transport::Endpoint::parse(endpoint));
  }
  for (const auto& m : manifests) {
    const auto manifest = read_manifest(m);
    auto o = opts;
    if (o.image_root.empty()) o.image_root = fs::path(m).parent_path();
    const auto results = eval::evaluate(manifest, *client, prompts, o);
    eval::append_results(results, out);
    std::size_t correct = 0, errors = 0;
    for (const auto& r : results) {
      correct += r.correct;
      errors += !r.error.empty();
    }
    std::cout << manifest.language.code << ": " << correct << "/" << results.size() << " correct";
    if (errors) std::cout << ", " << errors << " errors";
    std::cout << "\n";
  }
}

void cmd_report(const std::vector<std::string>& result_files, const std::string& langs, bool as_json) {
  std::vector<eval::EvalResult> results;
  for (const auto& f : result_files) {
    auto part = eval::read_results(f);
    results.insert(results.end(), part.begin(), part.end());
  }
  std::vector<std::string> codes = split_list(langs);
  if (codes.empty()) {
    std::set<std::string> seen;
    for (const auto& r : results) {
      if (seen.insert(r.language).second) codes.push_back(r.language);
    }
  }
  std::vector<eval::LanguageInfo> infos;
  for (const auto& c : codes) infos.push_back(eval::LanguageInfo::of(c));
  const auto report = eval::aggregate(results, infos);
  if (as_json) {
    std::cout << eval::to_json(report).dump(2) << "\n";
  } else {
    std::cout << eval::format_report(report);
  }
}

void cmd_report_subset(const std::vector<std::string>& result_files, const fs::path& subset_file) {
  std::vector<eval::EvalResult> english;
  for (const auto& f : result_files) {
    for (auto& r : eval::read_results(f)) {
      if (r.language == "eng") english.push_back(std::move(r));
    }
  }
  std::set<std::string> subset;
  std::ifstream in(subset_file);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + subset_file.string());
  std::string id;
  while (in >> id) subset.insert(id);
  std::cout << "subset independence p=" << fmt(eval::subset_independence_pvalue(english, subset), 6) << "\n";
}

void print_corr(const char* name, const std::optional<stats::CorrelationResult>& c) {
  std::cout << std::left << std::setw(16) << name;
  if (c) {
    std::cout << "rho=" << fmt(c->rho) << " p=" << fmt(c->p_value) << "\n";
  } else {
    std::cout << "n/a\n";
  }
}

void cmd_report_human(const std::vector<std::string>& result_files, const fs::path& csv, int level,
                      const fs::path& manifest_path, std::optional<int> year, const std::string& language) {
  std::vector<eval::EvalResult> results;
  for (const auto& f : result_files) {
    for (auto& r : eval::read_results(f)) {
      if (language.empty() || r.language == language) results.push_back(std::move(r));
    }
  }
  const auto problems = read_manifest(manifest_path).entries;
  const auto humans = eval::read_human_csv(csv);
  const auto accuracy = eval::model_problem_accuracy(results, problems, level, year);
  std::vector<int> numbers;
  for (const auto& [n, _] : accuracy) numbers.push_back(n);
  const auto rep = eval::difficulty_indices(humans, level, accuracy, eval::default_block_weights(numbers));

  std::set<int> evaluated(numbers.begin(), numbers.end());
  double model_score = 0.0;
  for (const auto& [_, a] : accuracy) model_score += a;
  std::cout << "level " << level << ", " << rep.participants << " participants, " << numbers.size()
            << " problems\n";
  std::cout << "model score " << fmt(model_score, 2) << ", percentile "
            << fmt(eval::percentile_rank(model_score, humans, level, evaluated), 1) << "\n";
  print_corr("difficulty", rep.difficulty);
  print_corr("difficulty top1", rep.difficulty_top1);
  print_corr("discriminative", rep.discriminative);
  print_corr("weight", rep.weight);
}

// ---- steering ----

void cmd_steer_compute(const fs::path& original, const fs::path& english, const fs::path& out) {
  const auto v = techniques::compute_steering_vectors(techniques::read_dump(original), techniques::read_dump(english));
  techniques::write_vectors(v, out);
  std::cout << v.num_layers << " layers x " << v.hidden_dim << "\n";
}

void cmd_steer_apply(const fs::path& dump_path, const fs::path& vectors, const fs::path& out,
                     techniques::SteeringConfig cfg) {
  const auto dump = techniques::read_dump(dump_path);
  if (cfg.total_layers == 0) cfg.total_layers = dump.num_layers;
  techniques::write_dump(techniques::apply_steering(dump, techniques::read_vectors(vectors), cfg), out);
}

// ---- review server ----

void cmd_review_serve(const std::string& host, int port, const fs::path& store_dir, const fs::path& static_dir) {
  // Server threads inherit the mask, so SIGINT/SIGTERM only reach sigwait below.
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

  review::ReviewStore store(store_dir);
  std::optional<fs::path> stat;
  if (!static_dir.empty()) stat = static_dir;
  review::ReviewServer server(store, stat);
  const int bound = server.bind(host, port);
  server.start();
  std::cout << "listening on " << host << ":" << bound << std::endl;
  int sig = 0;
  sigwait(&stop_signals, &sig);
  server.stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"forge: build, gate and evaluate multilingual multimodal benchmarks"};
  app.require_subcommand(1);

  // metrics
  auto* metrics = app.add_subcommand("metrics", "score a hypothesis against a reference");
  std::string metric = "chrfpp", ref, hyp;
  fs::path tsv;
  metrics->add_option("--metric", metric)->check(CLI::IsMember({"chrfpp", "bleu", "rouge1", "similarity"}));
  metrics->add_option("--reference,-r", ref);
  metrics->add_option("--hypothesis,-y", hyp);
  metrics->add_option("--tsv", tsv, "reference<TAB>hypothesis per line")->check(CLI::ExistingFile);

  // qe
  auto* qe_cmd = app.add_subcommand("qe", "backtranslation quality estimation");
  qe_cmd->require_subcommand(1);
  auto* qe_gate = qe_cmd->add_subcommand("gate", "gate backtranslation sets (JSONL)");
  fs::path qe_in, qe_out;
  qe::GateConfig gate_cfg;
  std::string aggregate = "max";
  qe_gate->add_option("--input", qe_in)->required()->check(CLI::ExistingFile);
  qe_gate->add_option("--out", qe_out);
  qe_gate->add_option("--threshold", gate_cfg.threshold);
  qe_gate->add_option("--hq-threshold", gate_cfg.high_quality_threshold);
  qe_gate->add_option("--aggregate", aggregate)->check(CLI::IsMember({"max", "mean", "min"}));
  auto* qe_thr = qe_cmd->add_subcommand("threshold", "translate a reference-metric target into a QE threshold");
  double target = 0.5, slope = 0.8;
  qe_thr->add_option("--target", target)->required();
  qe_thr->add_option("--slope", slope)->required();
  auto* qe_val = qe_cmd->add_subcommand("validate", "correlation and slope per language");
  std::vector<std::string> score_files;
  bool val_pearson = false;
  qe_val->add_option("files", score_files, "LANG=FILE with 'reference estimate' lines")->required();
  qe_val->add_flag("--pearson", val_pearson);

  // stats
  auto* st = app.add_subcommand("stats", "statistics on one-value-per-line files");
  st->require_subcommand(1);
  fs::path xf, yf;
  bool pearson = false, with_intercept = false;
  auto* st_corr = st->add_subcommand("correlation", "Spearman (default) or Pearson");
  st_corr->add_option("x", xf)->required()->check(CLI::ExistingFile);
  st_corr->add_option("y", yf)->required()->check(CLI::ExistingFile);
  st_corr->add_flag("--pearson", pearson);
  auto* st_l1 = st->add_subcommand("l1slope", "least absolute deviations fit");
  st_l1->add_option("x", xf)->required()->check(CLI::ExistingFile);
  st_l1->add_option("y", yf)->required()->check(CLI::ExistingFile);
  st_l1->add_flag("--intercept", with_intercept);
  auto* st_prop = st->add_subcommand("proptest", "two-proportion z-test");
  long sa = 0, na = 0, sb = 0, nb = 0;
  st_prop->add_option("successes_a", sa)->required();
  st_prop->add_option("n_a", na)->required();
  st_prop->add_option("successes_b", sb)->required();
  st_prop->add_option("n_b", nb)->required();

  // compose
  auto* comp = app.add_subcommand("compose", "paste translated text into problem images");
  fs::path comp_manifest, comp_root, comp_out, font_dir, comp_in, comp_output;
  std::vector<int> bbox;
  std::string comp_text;
  compose::LayoutConfig layout;
  comp->add_option("--manifest", comp_manifest)->check(CLI::ExistingFile);
  comp->add_option("--image-root", comp_root);
  comp->add_option("--out-dir", comp_out);
  comp->add_option("--font-dir", font_dir)->check(CLI::ExistingDirectory);
  comp->add_option("--input", comp_in)->check(CLI::ExistingFile);
  comp->add_option("--output", comp_output);
  comp->add_option("--bbox", bbox)->expected(4);
  comp->add_option("--text", comp_text);
  comp->add_option("--initial-font", layout.initial_font);
  comp->add_option("--min-font", layout.min_font);
  comp->add_option("--line-spacing", layout.line_spacing);

  // run
  auto* run = app.add_subcommand("run", "run the construction pipeline");
  fs::path config_path;
  bool resume = false;
  run->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
  run->add_flag("--resume", resume, "reuse results recorded in the audit log");

  // dedup
  auto* dd = app.add_subcommand("dedup", "drop near-duplicate problems");
  fs::path dd_pool, dd_out;
  double dd_threshold = 0.90;
  dd->add_option("--pool", dd_pool)->required()->check(CLI::ExistingFile);
  dd->add_option("--out", dd_out)->required();
  dd->add_option("--threshold", dd_threshold);

  // translate
  auto* tr = app.add_subcommand("translate", "translate a problem pool");
  fs::path tr_pool, tr_out;
  std::string tr_src = "eng", tr_tgt, tr_endpoint = "echo";
  std::size_t concurrency = 4;
  tr->add_option("--pool", tr_pool)->required()->check(CLI::ExistingFile);
  tr->add_option("--src", tr_src);
  tr->add_option("--tgt", tr_tgt)->required();
  tr->add_option("--endpoint", tr_endpoint, "http://host:port or echo");
  tr->add_option("--out", tr_out)->required();
  tr->add_option("--concurrency", concurrency);

  // eval
  auto* ev = app.add_subcommand("eval", "query a model on manifests");
  std::vector<std::string> ev_manifests;
  std::string model_endpoint;
  std::optional<unsigned> random_seed;
  fs::path ev_out, prompts_path;
  eval::EvalOptions ev_opts;
  bool no_images = false;
  ev->add_option("--manifest", ev_manifests)->required()->check(CLI::ExistingFile);
  ev->add_option("--model-endpoint", model_endpoint);
  ev->add_option("--random-seed", random_seed, "answer uniformly at random instead of querying a model");
  ev->add_option("--runs", ev_opts.runs)->check(CLI::PositiveNumber);
  ev->add_option("--concurrency", ev_opts.concurrency)->check(CLI::PositiveNumber);
  ev->add_option("--image-root", ev_opts.image_root);
  ev->add_option("--prompts", prompts_path)->check(CLI::ExistingFile);
  ev->add_flag("--no-images", no_images);
  ev->add_option("--out", ev_out)->required();

  // report
  auto* rp = app.add_subcommand("report", "aggregate evaluation results");
  std::vector<std::string> rp_results;
  std::string rp_langs, rp_lang;
  bool rp_json = false;
  fs::path human_csv, rp_manifest, subset_file;
  int rp_level = 0;
  std::optional<int> rp_year;
  rp->add_option("--results", rp_results)->required()->check(CLI::ExistingFile);
  rp->add_option("--langs", rp_langs, "comma-separated, in report order");
  rp->add_flag("--json", rp_json);
  rp->add_option("--human-csv", human_csv)->check(CLI::ExistingFile);
  rp->add_option("--level", rp_level);
  rp->add_option("--year", rp_year);
  rp->add_option("--manifest", rp_manifest)->check(CLI::ExistingFile);
  rp->add_option("--lang", rp_lang, "language used for the human comparison");
  rp->add_option("--subset", subset_file, "ids for the English subset test")->check(CLI::ExistingFile);

  // steer
  auto* sr = app.add_subcommand("steer", "activation steering on exported dumps");
  sr->require_subcommand(1);
  fs::path s_orig, s_en, s_out, s_dump, s_vec;
  auto* s_comp = sr->add_subcommand("compute", "steering vectors from paired dumps");
  s_comp->add_option("--original", s_orig)->required()->check(CLI::ExistingFile);
  s_comp->add_option("--english", s_en)->required()->check(CLI::ExistingFile);
  s_comp->add_option("--out", s_out)->required();
  auto* s_apply = sr->add_subcommand("apply", "steer a dump");
  techniques::SteeringConfig scfg;
  std::optional<int> preset;
  std::optional<double> c_opt;
  s_apply->add_option("--dump", s_dump)->required()->check(CLI::ExistingFile);
  s_apply->add_option("--vectors", s_vec)->required()->check(CLI::ExistingFile);
  s_apply->add_option("--out", s_out)->required();
  s_apply->add_option("--preset", preset)->check(CLI::IsMember({36, 28}));
  s_apply->add_option("--c", c_opt);
  s_apply->add_option("--forward-start", scfg.forward_start_layer);
  s_apply->add_option("--forward-layers", scfg.forward_num_layers);
  s_apply->add_option("--backward-start", scfg.backward_start_layer);
  s_apply->add_option("--backward-layers", scfg.backward_num_layers);
  s_apply->add_flag("--steer-images", scfg.steer_images);

  // review-serve
  auto* rs = app.add_subcommand("review-serve", "serve the review queue over HTTP");
  int port = 8080;
  std::string host = "127.0.0.1";
  fs::path store_dir, static_dir;
  rs->add_option("--port", port);
  rs->add_option("--host", host);
  rs->add_option("--store", store_dir)->required();
  rs->add_option("--static", static_dir)->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*metrics) {
      if (tsv.empty() && (metrics->count("--reference") == 0 || metrics->count("--hypothesis") == 0)) {
        throw Error(ErrorCode::InvalidArgument, "give --reference and --hypothesis, or --tsv");
      }
      cmd_metrics(metric, ref, hyp, tsv);
    } else if (*qe_gate) {
      gate_cfg.aggregate = qe::aggregate_from_string(aggregate);
      gate_cfg.validate();
      cmd_qe_gate(qe_in, gate_cfg, qe_out);
    } else if (*qe_thr) {
      std::cout << fmt(qe::derive_threshold(target, slope), 6) << "\n";
    } else if (*qe_val) {
      cmd_qe_validate(score_files, val_pearson);
    } else if (*st_corr) {
      cmd_correlation(xf, yf, pearson);
    } else if (*st_l1) {
      cmd_l1slope(xf, yf, with_intercept);
    } else if (*st_prop) {
      cmd_proptest(sa, na, sb, nb);
    } else if (*comp) {
      layout.validate();
      if (!comp_manifest.empty()) {
        if (comp_out.empty()) throw Error(ErrorCode::InvalidArgument, "--manifest needs --out-dir");
        return cmd_compose_manifest(comp_manifest, comp_root, comp_out, font_dir, layout);
      }
      if (comp_in.empty() || comp_output.empty()) {
        throw Error(ErrorCode::InvalidArgument, "give --manifest and --out-dir, or --input, --output, --bbox, --text");
      }
      cmd_compose_one(comp_in, comp_output, bbox, comp_text, font_dir, layout);
    } else if (*run) {
      cmd_run(config_path, resume);
    } else if (*dd) {
      cmd_dedup(dd_pool, dd_out, dd_threshold);
    } else if (*tr) {
      cmd_translate(tr_pool, tr_src, tr_tgt, tr_endpoint, tr_out, concurrency);
    } else if (*ev) {
      ev_opts.attach_images = !no_images;
      cmd_eval(ev_manifests, model_endpoint, random_seed, ev_out, ev_opts, prompts_path);
    } else if (*rp) {
      if (!human_csv.empty()) {
        if (rp_manifest.empty() || rp_level == 0) throw Error(ErrorCode::InvalidArgument, "--human-csv needs --manifest and --level");
        cmd_report_human(rp_results, human_csv, rp_level, rp_manifest, rp_year, rp_lang);
      } else if (!subset_file.empty()) {
        cmd_report_subset(rp_results, subset_file);
      } else {
        cmd_report(rp_results, rp_langs, rp_json);
      }
    } else if (*s_comp) {
      cmd_steer_compute(s_orig, s_en, s_out);
    } else if (*s_apply) {
      if (preset) {
        auto p = *preset == 36 ? techniques::SteeringConfig::preset_36_layers()
                               : techniques::SteeringConfig::preset_28_layers();
        p.steer_images = scfg.steer_images;
        scfg = p;
      }
      if (c_opt) scfg.c = *c_opt;
      cmd_steer_apply(s_dump, s_vec, s_out, scfg);
    } else if (*rs) {
      cmd_review_serve(host, port, store_dir, static_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "forge: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
