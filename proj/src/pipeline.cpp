#include "dtm/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "dtm/error.hpp"
#include "dtm/seed.hpp"

namespace dtm {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration

namespace {

std::size_t parse_size(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    if (!s.empty() && s[0] == '-') throw std::invalid_argument(s);
    const auto v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw InputError("config key '" + key + "': expected a nonnegative integer, got '" + s + "'");
  }
}

double parse_real(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    double v = 0.0;
    // Accept simple fractions such as 1/3.
    if (auto slash = s.find('/'); slash != std::string::npos) {
      const double num = std::stod(s.substr(0, slash), &pos);
      if (pos != slash) throw std::invalid_argument(s);
      const std::string den_s = s.substr(slash + 1);
      const double den = std::stod(den_s, &pos);
      if (pos != den_s.size()) throw std::invalid_argument(s);
      v = num / den;
    } else {
      v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
    }
    if (!std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError("config key '" + key + "': expected a real number, got '" + s + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw InputError("config key '" + key + "': expected true or false, got '" + s + "'");
}

}  // namespace

const std::vector<std::pair<std::string, std::string>>& RunConfig::keys() {
  static const std::vector<std::pair<std::string, std::string>> k{
      {"corpus", "persisted corpus directory"},
      {"output", "output directory"},
      {"c", "number of topics"},
      {"seed", "master random seed"},
      {"jobs", "worker threads (0 = all cores)"},
      {"mbn.V", "k-centroids clusterings per MBN layer"},
      {"mbn.delta", "layer shrink factor in (0,1)"},
      {"mbn.k_top", "explicit top-layer k, or 'none' for ceil(1.5c)"},
      {"spectral.mode", "W mode: hard or embed"},
      {"spectral.restarts", "k-means restarts"},
      {"spectral.max_iters", "k-means iteration cap"},
      {"lasso.lambda", "L1 weight (fractions such as 1/3 accepted)"},
      {"lasso.lambda_mode", "relative (scaled by ||W d||_inf) or absolute"},
      {"lasso.rho", "ADMM penalty"},
      {"lasso.abs_tol", "ADMM absolute tolerance"},
      {"lasso.rel_tol", "ADMM relative tolerance"},
      {"lasso.max_iters", "ADMM iteration cap"},
      {"lasso.nonnegative", "clamp coefficients at zero"},
      {"eval.epsilon", "coherence smoothing constant"},
      {"eval.top_m", "words per topic for coherence and listings"},
  };
  return k;
}

void RunConfig::propagate() {
  mbn.c = c;
  spectral.c = c;
  mbn.seed = derive_seed(seed, {seed_stream::kMbn});
  spectral.seed = derive_seed(seed, {seed_stream::kSpectral});
  mbn.jobs = jobs;
  spectral.jobs = jobs;
  lasso.jobs = jobs;
}

void RunConfig::validate() const {
  if (c < 2) throw InputError("config: c must be >= 2");
  mbn.validate();
  spectral.validate();
  lasso.validate();
  coherence.validate();
}

KeyValues RunConfig::to_key_values() const {
  KeyValues kv;
  kv.set("corpus", corpus_dir.string());
  kv.set("output", output_dir.string());
  kv.set("c", c);
  kv.set("seed", seed);
  kv.set("jobs", jobs);
  kv.set("mbn.V", mbn.V);
  kv.set("mbn.delta", mbn.delta);
  kv.set("mbn.k_top", mbn.k_top_override ? std::to_string(*mbn.k_top_override) : std::string("none"));
  kv.set("spectral.mode", to_string(spectral.mode));
  kv.set("spectral.restarts", spectral.kmeans_restarts);
  kv.set("spectral.max_iters", spectral.kmeans_max_iters);
  kv.set("lasso.lambda", lasso.lambda);
  kv.set("lasso.lambda_mode", to_string(lasso.lambda_mode));
  kv.set("lasso.rho", lasso.rho);
  kv.set("lasso.abs_tol", lasso.abs_tol);
  kv.set("lasso.rel_tol", lasso.rel_tol);
  kv.set("lasso.max_iters", lasso.max_iters);
  kv.set("lasso.nonnegative", lasso.nonnegative);
  kv.set("eval.epsilon", coherence.epsilon);
  kv.set("eval.top_m", coherence.top_m);
  return kv;
}

void RunConfig::apply(const KeyValues& kv) {
  for (const auto& [key, value] : kv.entries()) {
    if (key == "corpus") corpus_dir = value;
    else if (key == "output") output_dir = value;
    else if (key == "c") c = parse_size(key, value);
    else if (key == "seed") seed = parse_size(key, value);
    else if (key == "jobs") jobs = parse_size(key, value);
    else if (key == "mbn.V") mbn.V = parse_size(key, value);
    else if (key == "mbn.delta") mbn.delta = parse_real(key, value);
    else if (key == "mbn.k_top") {
      if (value == "none") mbn.k_top_override.reset();
      else mbn.k_top_override = parse_size(key, value);
    }
    else if (key == "spectral.mode") spectral.mode = wmode_from_string(value);
    else if (key == "spectral.restarts") spectral.kmeans_restarts = parse_size(key, value);
    else if (key == "spectral.max_iters") spectral.kmeans_max_iters = parse_size(key, value);
    else if (key == "lasso.lambda") lasso.lambda = parse_real(key, value);
    else if (key == "lasso.lambda_mode") lasso.lambda_mode = lambda_mode_from_string(value);
    else if (key == "lasso.rho") lasso.rho = parse_real(key, value);
    else if (key == "lasso.abs_tol") lasso.abs_tol = parse_real(key, value);
    else if (key == "lasso.rel_tol") lasso.rel_tol = parse_real(key, value);
    else if (key == "lasso.max_iters") lasso.max_iters = parse_size(key, value);
    else if (key == "lasso.nonnegative") lasso.nonnegative = parse_bool(key, value);
    else if (key == "eval.epsilon") coherence.epsilon = parse_real(key, value);
    else if (key == "eval.top_m") coherence.top_m = parse_size(key, value);
    else throw InputError((kv.source.empty() ? std::string("config") : kv.source) + ": unknown key '" + key + "'");
  }
}

// ---------------------------------------------------------------------------
// Single run

namespace {

using Clock = std::chrono::steady_clock;

class StageRunner {
 public:
  explicit StageRunner(std::vector<StageTiming>& timings) : timings_(timings) {}

  template <class Fn>
  auto operator()(const std::string& stage, Fn&& fn) {
    current_ = stage;
    const auto start = Clock::now();
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        record(stage, start);
      } else {
        auto result = fn();
        record(stage, start);
        return result;
      }
    } catch (const StageError&) {
      throw;
    } catch (const InputError& e) {
      throw StageError(stage, e.what(), true);
    } catch (const std::exception& e) {
      throw StageError(stage, e.what());
    }
  }

  const std::string& current() const { return current_; }

 private:
  void record(const std::string& stage, Clock::time_point start) {
    timings_.push_back({stage, std::chrono::duration<double>(Clock::now() - start).count()});
  }

  std::vector<StageTiming>& timings_;
  std::string current_;
};

const std::vector<std::string> kHashedFiles = {
    "corpus/counts.mtx", "corpus/vocab.txt", "corpus/docs.txt", "corpus/labels.txt", "corpus/manifest.txt",
    "D.mtx",             "mbn/manifest.txt", "mbn/codes.mtx",   "W.mtx",             "C.mtx",
    "topics.txt",        "report.txt",
};

std::string hex64(std::uint64_t h) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

void write_manifest(const fs::path& dir, const RunConfig& config, const std::string& status,
                    const std::string& failed_stage = {}, const std::string& error = {}) {
  KeyValues m;
  m.set("status", status);
  if (!failed_stage.empty()) {
    m.set("failed_stage", failed_stage);
    m.set("error", error);
  }
  const auto kv = config.to_key_values();
  for (const auto& [k, v] : kv.entries()) m.set("config." + k, v);
  m.set("seed.mbn", config.mbn.seed);
  m.set("seed.spectral", config.spectral.seed);
  m.set("seed.derivation", "stream seed = derive_seed(master, {stream}); mbn=2 spectral=3");
  m.set("w_mode", to_string(config.spectral.mode));
  for (const auto& f : kHashedFiles) {
    if (fs::exists(dir / f)) m.set("hash." + f, hex64(fnv1a_file(dir / f)));
  }
  m.write(dir / "manifest.txt");
}

void write_timings(const fs::path& dir, const std::vector<StageTiming>& timings) {
  KeyValues t;
  for (const auto& s : timings) t.set("seconds." + s.stage, s.seconds);
  t.write(dir / "timings.txt");
}

// Stages after the MBN model: spectral W, Lasso C, topics, evaluation.
void finish_run(const RunConfig& config, const Corpus& corpus, const TfidfMatrix& d, const MbnModel& model,
                RunArtifacts& art, StageRunner& stage) {
  const auto w = stage("spectral", [&] {
    const auto k = gram(model.codes, config.jobs);
    auto out = spectral_cluster(k, config.spectral);
    write_matrix_market(art.w_path, out.W);
    return out;
  });
  const auto c = stage("lasso", [&] {
    auto out = solve_topic_words(w, d, config.lasso);
    write_matrix_market(art.c_path, out.C);
    return out;
  });
  art.lasso_rows = c.converged.size();
  art.lasso_rows_converged = c.num_converged();
  stage("eval", [&] {
    const std::size_t m = std::min(corpus.vocab_size(), std::max(config.coherence.top_m, config.c));
    const auto top = top_words(c.C, m);
    {
      std::ofstream out(art.topics_path);
      out << format_topic_words(top, corpus.vocabulary);
    }
    const auto labels = hard_labels(w);
    art.report = evaluate(top.words, corpus, labels, config.coherence);
    art.report.seed = config.seed;
    // Paths and worker count do not affect results; keeping them out of the
    // report keeps it byte-identical across --jobs and output locations.
    const auto all = config.to_key_values();
    for (const auto& [k, v] : all.entries())
      if (k != "jobs" && k != "output" && k != "corpus") art.report.config.set(k, v);
    auto kv = art.report.to_key_values();
    kv.set("w_mode", to_string(w.mode));
    kv.set("lasso.rows_converged", art.lasso_rows_converged);
    kv.set("lasso.rows", art.lasso_rows);
    kv.write(art.report_path);
  });
}

RunArtifacts artifact_paths(const fs::path& dir) {
  RunArtifacts a;
  a.dir = dir;
  a.corpus_dir = dir / "corpus";
  a.d_path = dir / "D.mtx";
  a.mbn_dir = dir / "mbn";
  a.w_path = dir / "W.mtx";
  a.c_path = dir / "C.mtx";
  a.topics_path = dir / "topics.txt";
  a.report_path = dir / "report.txt";
  a.manifest_path = dir / "manifest.txt";
  return a;
}

}  // namespace

RunArtifacts run_dtm(const RunConfig& input_config, const Corpus& corpus) {
  RunConfig config = input_config;
  config.propagate();
  config.validate();
  if (config.output_dir.empty()) throw InputError("run_dtm: no output directory");
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec || !fs::is_directory(config.output_dir)) {
    throw InputError("cannot create output directory " + config.output_dir.string());
  }
  RunArtifacts art = artifact_paths(config.output_dir);
  StageRunner stage(art.timings);
  try {
    stage("corpus", [&] { save_corpus(corpus, art.corpus_dir); });
    const auto d = stage("tfidf", [&] {
      auto out = tfidf(corpus);
      write_matrix_market(art.d_path, out.matrix);
      return out;
    });
    const auto model = stage("mbn", [&] {
      auto out = train_mbn(d, config.mbn);
      save_mbn(out, art.mbn_dir);
      return out;
    });
    finish_run(config, corpus, d, model, art, stage);
  } catch (const StageError& e) {
    write_manifest(art.dir, config, "FAILED", e.stage(), e.what());
    write_timings(art.dir, art.timings);
    throw;
  }
  write_timings(art.dir, art.timings);
  write_manifest(art.dir, config, "OK");
  return art;
}

RunArtifacts run_dtm(const RunConfig& config) {
  if (config.corpus_dir.empty()) throw InputError("run_dtm: no corpus directory");
  return run_dtm(config, load_corpus(config.corpus_dir));
}

RunArtifacts rerun_from_model(const fs::path& run_dir, std::size_t jobs) {
  const auto manifest = KeyValues::read(run_dir / "manifest.txt");
  KeyValues cfg;
  for (const auto& [k, v] : manifest.entries()) {
    if (k.rfind("config.", 0) == 0) cfg.set(k.substr(7), v);
  }
  RunConfig config;
  config.apply(cfg);
  if (jobs != 0) config.jobs = jobs;
  config.output_dir = run_dir;
  config.propagate();
  config.validate();

  RunArtifacts art = artifact_paths(run_dir);
  StageRunner stage(art.timings);
  try {
    const auto corpus = stage("load", [&] { return load_corpus(art.corpus_dir); });
    const auto d = stage("tfidf", [&] { return tfidf(corpus); });
    const auto model = stage("mbn", [&] { return load_mbn(art.mbn_dir, jobs); });
    finish_run(config, corpus, d, model, art, stage);
  } catch (const StageError& e) {
    write_manifest(art.dir, config, "FAILED", e.stage(), e.what());
    throw;
  }
  write_timings(art.dir, art.timings);
  write_manifest(art.dir, config, "OK");
  return art;
}

bool verify_run(const fs::path& run_dir) {
  const auto m = KeyValues::read(run_dir / "manifest.txt");
  if (m.get("status") != "OK") return false;
  for (const auto& f : kHashedFiles) {
    const auto expected = m.get("hash." + f);
    const bool present = fs::exists(run_dir / f);
    if (expected.has_value() != present) return false;
    if (present && *expected != hex64(fnv1a_file(run_dir / f))) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Monte-Carlo protocol and sweeps

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

std::uint64_t monte_carlo_seed(std::uint64_t master, std::size_t run) {
  return derive_seed(master, {seed_stream::kMonteCarloRun, run});
}

MonteCarloReport run_monte_carlo(const RunConfig& config, const Corpus& corpus, std::size_t c, std::size_t runs) {
  if (!corpus.labels) throw InputError("run_monte_carlo: corpus has no gold labels");
  if (c > corpus.num_labels()) {
    throw InputError("run_monte_carlo: c = " + std::to_string(c) + " exceeds the " +
                     std::to_string(corpus.num_labels()) + " gold topics");
  }
  if (runs == 0) throw InputError("run_monte_carlo: runs must be >= 1");
  fs::create_directories(config.output_dir);
  MonteCarloReport report;
  report.csv_path = config.output_dir / "runs.csv";
  std::ofstream csv(report.csv_path, std::ios::trunc);
  if (!csv) throw InputError("cannot write " + report.csv_path.string());
  csv << "run_id,c,seed,acc,coh_mean,simc\n";
  std::vector<double> acc, coh, simc;
  for (std::size_t r = 0; r < runs; ++r) {
    const std::uint64_t run_seed = monte_carlo_seed(config.seed, r);
    const Corpus subset = subsample_topics(corpus, c, derive_seed(run_seed, {seed_stream::kSubsample}));
    RunConfig rc = config;
    rc.c = c;
    rc.seed = run_seed;
    rc.output_dir = config.output_dir / ("run_" + std::to_string(r));
    const auto art = run_dtm(rc, subset);
    report.runs.push_back(art.report);
    report.run_seeds.push_back(run_seed);
    if (art.report.acc) acc.push_back(*art.report.acc);
    coh.push_back(art.report.coherence_mean);
    simc.push_back(art.report.simcount);
    csv << r << ',' << c << ',' << run_seed << ','
        << (art.report.acc ? format_double(*art.report.acc) : std::string("NA")) << ','
        << format_double(art.report.coherence_mean) << ',' << format_double(art.report.simcount) << '\n';
    csv.flush();
  }
  report.has_acc = !acc.empty();
  report.acc = summarize(acc);
  report.coh_mean = summarize(coh);
  report.simc = summarize(simc);
  return report;
}

SweepParameter sweep_parameter_from_string(const std::string& s) {
  if (s == "V" || s == "mbn.V") return SweepParameter::kV;
  if (s == "delta" || s == "mbn.delta") return SweepParameter::kDelta;
  throw InputError("unknown sweep parameter '" + s + "' (expected V or delta)");
}

std::string to_string(SweepParameter p) { return p == SweepParameter::kV ? "V" : "delta"; }

std::vector<SweepRow> sweep(const RunConfig& config, const Corpus& corpus, std::size_t c, std::size_t runs,
                            SweepParameter parameter, const std::vector<double>& values) {
  if (values.empty()) throw InputError("sweep: no values");
  for (double v : values) {
    if (parameter == SweepParameter::kV && (v < 1 || v != std::floor(v))) {
      throw InputError("sweep: V must be a positive integer, got " + format_double(v));
    }
    if (parameter == SweepParameter::kDelta && !(v > 0.0 && v < 1.0)) {
      throw InputError("sweep: delta must lie in (0,1), got " + format_double(v));
    }
  }
  fs::create_directories(config.output_dir);
  std::ofstream csv(config.output_dir / "sweep.csv", std::ios::trunc);
  if (!csv) throw InputError("cannot write " + (config.output_dir / "sweep.csv").string());
  csv << to_string(parameter) << ",acc_mean,acc_std,coh_mean,simc_mean\n";
  std::vector<SweepRow> rows;
  for (double v : values) {
    RunConfig rc = config;
    if (parameter == SweepParameter::kV) rc.mbn.V = static_cast<std::size_t>(v);
    else rc.mbn.delta = v;
    rc.output_dir = config.output_dir / (to_string(parameter) + "_" + format_double(v));
    SweepRow row{v, run_monte_carlo(rc, corpus, c, runs)};
    csv << format_double(v) << ',' << (row.report.has_acc ? format_double(row.report.acc.mean) : "NA") << ','
        << (row.report.has_acc ? format_double(row.report.acc.stddev) : "NA") << ','
        << format_double(row.report.coh_mean.mean) << ',' << format_double(row.report.simc.mean) << '\n';
    csv.flush();
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Synthetic corpora

Corpus synthetic_corpus(const SyntheticConfig& config) {
  if (config.topics < 1 || config.vocabulary < config.topics) {
    throw InputError("synthetic: need 1 <= topics <= vocabulary");
  }
  if (config.min_tokens > config.max_tokens) throw InputError("synthetic: min_tokens > max_tokens");
  if (!(config.exclusive_mass >= 0.0 && config.exclusive_mass <= 1.0)) {
    throw InputError("synthetic: exclusive_mass must lie in [0,1]");
  }
  const std::size_t v = config.vocabulary;
  const std::size_t block = v / config.topics;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> length(config.min_tokens, config.max_tokens);
  std::uniform_int_distribution<std::size_t> any_word(0, v - 1);
  std::uniform_int_distribution<std::size_t> in_block(0, block - 1);

  Corpus corpus;
  corpus.min_df = 1;
  for (std::size_t w = 0; w < v; ++w) {
    std::ostringstream name;
    name << 'w' << std::setw(3) << std::setfill('0') << w;
    corpus.vocabulary.push_back(name.str());
  }
  std::vector<Triplet> triplets;
  std::vector<std::uint32_t> labels;
  std::vector<double> bag(v);
  std::size_t doc = 0;
  for (std::size_t g = 0; g < config.topics; ++g) {
    corpus.label_names.push_back("topic" + std::to_string(g));
    for (std::size_t i = 0; i < config.docs_per_topic; ++i, ++doc) {
      std::fill(bag.begin(), bag.end(), 0.0);
      const std::size_t len = length(rng);
      for (std::size_t t = 0; t < len; ++t) {
        const std::size_t w = unit(rng) < config.exclusive_mass ? g * block + in_block(rng) : any_word(rng);
        bag[w] += 1.0;
      }
      for (std::size_t w = 0; w < v; ++w)
        if (bag[w] > 0.0) triplets.push_back({static_cast<Index>(w), static_cast<Index>(doc), bag[w]});
      labels.push_back(static_cast<std::uint32_t>(g));
      corpus.doc_ids.push_back("topic" + std::to_string(g) + "/" + std::to_string(i));
    }
  }
  corpus.counts = SparseMatrix::from_triplets(v, doc, std::move(triplets));
  corpus.labels = std::move(labels);
  return corpus;
}

}  // namespace dtm
