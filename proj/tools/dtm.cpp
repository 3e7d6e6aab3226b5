// dtm: command-line front end for the topic-modeling pipeline.
//
// Exit codes: 0 success, 1 internal error, 2 usage or input error.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dtm/corpus.hpp"
#include "dtm/error.hpp"
#include "dtm/eval.hpp"
#include "dtm/keyvalue.hpp"
#include "dtm/lasso.hpp"
#include "dtm/pipeline.hpp"
#include "dtm/spectral.hpp"

namespace fs = std::filesystem;
using namespace dtm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;

fs::path output_root() {
  const char* env = std::getenv("DTM_OUTPUT_ROOT");
  return env && *env ? fs::path(env) : fs::path("runs");
}

char separator(const std::string& format) { return format == "csv" ? ',' : '\t'; }

// Every config key becomes a --<key> flag. Values are kept as strings and
// applied through RunConfig::apply so parsing rules live in one place.
struct ConfigFlags {
  std::optional<std::string> config_file;
  std::map<std::string, std::string> values;

  void attach(CLI::App& app, bool with_corpus) {
    app.add_option("--config", config_file, "INI file of config keys ([section] prefixes keys)")
        ->check(CLI::ExistingFile);
    const auto defaults = RunConfig{}.to_key_values();
    for (const auto& [key, help] : RunConfig::keys()) {
      if (key == "output") continue;  // --out
      if (key == "corpus" && !with_corpus) continue;
      std::string text = help;
      if (key != "corpus") text += " [" + defaults.get(key).value_or("") + "]";
      app.add_option_function<std::string>(
             "--" + key, [this, key = key](const std::string& v) { values[key] = v; }, text)
          ->type_name(key == "corpus" ? "DIR" : "VALUE");
    }
  }

  // defaults < config file < flags
  RunConfig resolve() const {
    RunConfig cfg;
    if (config_file) cfg.apply(KeyValues::read(*config_file));
    KeyValues kv;
    kv.source = "command line";
    for (const auto& [k, v] : values) kv.set(k, v);
    cfg.apply(kv);
    return cfg;
  }
};

RunConfig config_from_manifest(const fs::path& run_dir) {
  const auto manifest_path = run_dir / "manifest.txt";
  if (!fs::exists(manifest_path)) throw InputError("not a run directory (no manifest.txt): " + run_dir.string());
  const auto manifest = KeyValues::read(manifest_path);
  KeyValues cfg;
  cfg.source = manifest_path.string();
  for (const auto& [k, v] : manifest.entries())
    if (k.rfind("config.", 0) == 0) cfg.set(k.substr(7), v);
  RunConfig config;
  config.apply(cfg);
  return config;
}

void print_report(const EvalReport& report, const std::string& format) {
  std::cout << report.metrics_table(separator(format));
}

int cmd_ingest(const std::optional<std::string>& text_dir, const std::vector<std::string>& uci, bool synthetic,
               const SyntheticConfig& synth, const TokenizerConfig& tok, const std::optional<std::string>& out_flag) {
  Corpus corpus;
  if (text_dir) {
    corpus = ingest_text_dir(*text_dir, tok);
  } else if (!uci.empty()) {
    corpus = ingest_uci_bow(uci[0], uci[1]);
  } else if (synthetic) {
    corpus = synthetic_corpus(synth);
  } else {
    throw CLI::RequiredError("one of --text-dir, --uci-bow or --synthetic");
  }
  const fs::path out = out_flag ? fs::path(*out_flag) : output_root() / "corpus";
  save_corpus(corpus, out, text_dir ? &tok : nullptr);
  std::cout << "corpus " << out.string() << '\n'
            << "N\t" << corpus.num_docs() << '\n'
            << "v\t" << corpus.vocab_size() << '\n'
            << "labels\t" << corpus.num_labels() << '\n';
  if (!corpus.warnings.empty()) std::cout << "warnings\t" << corpus.warnings.size() << '\n';
  return kExitOk;
}

int cmd_train(const ConfigFlags& flags, const std::optional<std::string>& out_flag, bool resume,
              const std::string& format, bool verbose) {
  RunArtifacts art;
  if (resume) {
    if (!out_flag) throw InputError("--resume needs --out naming an existing run");
    art = rerun_from_model(*out_flag, flags.resolve().jobs);
  } else {
    RunConfig cfg = flags.resolve();
    if (cfg.corpus_dir.empty()) throw InputError("train: --corpus is required");
    cfg.output_dir = out_flag ? fs::path(*out_flag) : output_root() / "model";
    art = run_dtm(cfg);
  }
  if (verbose) {
    for (const auto& t : art.timings) std::cerr << "stage " << t.stage << '\t' << t.seconds << " s\n";
  }
  std::cout << "run " << art.dir.string() << '\n';
  if (art.lasso_rows_converged != art.lasso_rows) {
    std::cerr << "warning: " << art.lasso_rows - art.lasso_rows_converged << " of " << art.lasso_rows
              << " Lasso rows hit the iteration cap\n";
  }
  print_report(art.report, format);
  return kExitOk;
}

int cmd_topics(const fs::path& run_dir, std::size_t m) {
  const auto corpus = load_corpus(run_dir / "corpus");
  const auto c = read_matrix_market_dense(run_dir / "C.mtx");
  if (c.rows() != corpus.vocab_size()) throw InputError("C.mtx does not match the run's vocabulary");
  std::cout << format_topic_words(top_words(c, std::min(m, corpus.vocab_size())), corpus.vocabulary);
  return kExitOk;
}

int cmd_eval(const fs::path& run_dir, bool gold, const std::string& format) {
  const auto config = config_from_manifest(run_dir);
  auto corpus = load_corpus(run_dir / "corpus");
  if (gold && !corpus.labels) throw InputError("--gold: the run's corpus has no gold labels");
  if (!gold) corpus.labels.reset();
  const auto c = read_matrix_market_dense(run_dir / "C.mtx");
  const auto w = read_matrix_market_dense(run_dir / "W.mtx");
  if (c.rows() != corpus.vocab_size() || w.cols() != corpus.num_docs() || c.cols() != w.rows()) {
    throw InputError(run_dir.string() + ": C.mtx, W.mtx and the corpus disagree in shape");
  }
  const std::size_t m = std::min(corpus.vocab_size(), std::max(config.coherence.top_m, c.cols()));
  const auto top = top_words(c, m);
  const auto labels = hard_labels(DocTopicMatrix{w, config.spectral.mode});
  print_report(evaluate(top.words, corpus, labels, config.coherence), format);
  return kExitOk;
}

RunConfig batch_config(const ConfigFlags& flags, const std::optional<std::string>& out_flag,
                       const std::string& default_name) {
  RunConfig cfg = flags.resolve();
  if (cfg.corpus_dir.empty()) throw InputError("--corpus is required");
  cfg.output_dir = out_flag ? fs::path(*out_flag) : output_root() / default_name;
  return cfg;
}

int cmd_run_mc(const ConfigFlags& flags, const std::optional<std::string>& out_flag, std::size_t runs,
               const std::string& format) {
  const RunConfig cfg = batch_config(flags, out_flag, "mc");
  const auto corpus = load_corpus(cfg.corpus_dir);
  const auto rep = run_monte_carlo(cfg, corpus, cfg.c, runs);
  const char sep = separator(format);
  std::cout << "metric" << sep << "mean" << sep << "std\n";
  if (rep.has_acc) std::cout << "acc" << sep << format_double(rep.acc.mean) << sep << format_double(rep.acc.stddev) << '\n';
  std::cout << "coh_mean" << sep << format_double(rep.coh_mean.mean) << sep << format_double(rep.coh_mean.stddev)
            << '\n';
  std::cout << "simc" << sep << format_double(rep.simc.mean) << sep << format_double(rep.simc.stddev) << '\n';
  std::cerr << "per-run rows: " << rep.csv_path.string() << '\n';
  return kExitOk;
}

int cmd_sweep(const ConfigFlags& flags, const std::optional<std::string>& out_flag, std::size_t runs,
              const std::string& param, const std::vector<double>& values, const std::string& format) {
  const RunConfig cfg = batch_config(flags, out_flag, "sweep");
  const auto parameter = sweep_parameter_from_string(param);
  const auto corpus = load_corpus(cfg.corpus_dir);
  const auto rows = sweep(cfg, corpus, cfg.c, runs, parameter, values);
  const char sep = separator(format);
  std::cout << to_string(parameter) << sep << "acc_mean" << sep << "acc_std" << sep << "coh_mean" << sep
            << "simc_mean\n";
  for (const auto& r : rows) {
    const auto& m = r.report;
    std::cout << format_double(r.value) << sep << (m.has_acc ? format_double(m.acc.mean) : "NA") << sep
              << (m.has_acc ? format_double(m.acc.stddev) : "NA") << sep << format_double(m.coh_mean.mean) << sep
              << format_double(m.simc.mean) << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep topic modeling: MBN codes, spectral document clustering, Lasso topic words"};
  app.require_subcommand(1);
  app.footer("Exit codes: 0 success, 1 internal error, 2 usage or input error.\n"
             "DTM_OUTPUT_ROOT sets the directory under which default outputs go (default ./runs).");

  std::optional<std::string> out;
  std::string format = "tsv";
  auto add_format = [&](CLI::App* sub) {
    sub->add_option("--format", format, "metric table format")->check(CLI::IsMember({"tsv", "csv"}))->capture_default_str();
  };

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Build a persisted corpus from text files, UCI bag-of-words or a synthetic generator");
  std::optional<std::string> text_dir;
  std::vector<std::string> uci;
  bool synthetic = false;
  SyntheticConfig synth;
  TokenizerConfig tok;
  std::optional<std::string> stopwords;
  auto* o_text = ingest->add_option("--text-dir", text_dir, "directory of label subdirectories holding text files");
  auto* o_uci = ingest->add_option("--uci-bow", uci, "docword and vocab files")->expected(2)->type_name("DOCWORD VOCAB");
  auto* o_syn = ingest->add_flag("--synthetic", synthetic, "generate a synthetic labelled corpus");
  o_text->excludes(o_uci)->excludes(o_syn);
  o_uci->excludes(o_text)->excludes(o_syn);
  o_syn->excludes(o_text)->excludes(o_uci);
  ingest->add_option("--out", out, "corpus output directory (default $DTM_OUTPUT_ROOT/corpus)");
  ingest->add_option("--min-df", tok.min_df, "minimum document frequency (text)")->capture_default_str();
  ingest->add_option("--min-length", tok.min_length, "minimum token length (text)")->capture_default_str();
  ingest->add_option("--stopwords", stopwords, "stopword list, one word per line (text)")->check(CLI::ExistingFile);
  ingest->add_flag("--strip-headers", tok.strip_headers, "drop everything before the first blank line (text)");
  ingest->add_option("--topics", synth.topics, "synthetic: topic count")->capture_default_str();
  ingest->add_option("--docs-per-topic", synth.docs_per_topic, "synthetic: documents per topic")->capture_default_str();
  ingest->add_option("--vocab-size", synth.vocabulary, "synthetic: vocabulary size")->capture_default_str();
  ingest->add_option("--exclusive-mass", synth.exclusive_mass, "synthetic: probability of a topic's own words")
      ->capture_default_str();
  ingest->add_option("--seed", synth.seed, "synthetic: random seed")->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "Run corpus -> TF-IDF -> MBN -> spectral W -> Lasso C -> evaluation");
  ConfigFlags train_flags;
  train_flags.attach(*train, true);
  bool resume = false;
  bool verbose = false;
  train->add_option("--out", out, "run directory (default $DTM_OUTPUT_ROOT/model)");
  train->add_flag("--resume", resume, "recompute W, C and the report from the persisted model in --out");
  train->add_flag("-v,--verbose", verbose, "print stage timings to standard error");
  add_format(train);

  // topics
  auto* topics = app.add_subcommand("topics", "Print the top words of every topic of a run");
  std::string run_dir;
  std::size_t m = 10;
  topics->add_option("run", run_dir, "run directory")->required()->check(CLI::ExistingDirectory);
  topics->add_option("--m", m, "words per topic")->capture_default_str()->check(CLI::PositiveNumber);

  // eval
  auto* eval = app.add_subcommand("eval", "Recompute evaluation metrics of a run");
  bool gold = false;
  eval->add_option("run", run_dir, "run directory")->required()->check(CLI::ExistingDirectory);
  eval->add_flag("--gold", gold, "report ACC against the corpus gold labels");
  add_format(eval);

  // run-mc
  auto* mc = app.add_subcommand("run-mc", "Monte-Carlo protocol: repeated runs on random c-topic subsets");
  ConfigFlags mc_flags;
  mc_flags.attach(*mc, true);
  std::size_t runs = 10;
  mc->add_option("--out", out, "output directory (default $DTM_OUTPUT_ROOT/mc)");
  mc->add_option("--runs", runs, "number of runs")->capture_default_str()->check(CLI::PositiveNumber);
  add_format(mc);

  // sweep
  auto* sw = app.add_subcommand("sweep", "Monte-Carlo runs for each value of one MBN parameter");
  ConfigFlags sweep_flags;
  sweep_flags.attach(*sw, true);
  std::string param;
  std::vector<double> values;
  std::size_t sweep_runs = 5;
  sw->add_option("--out", out, "output directory (default $DTM_OUTPUT_ROOT/sweep)");
  sw->add_option("--param", param, "V or delta")->required()->check(CLI::IsMember({"V", "delta"}));
  sw->add_option("--values", values, "comma-separated values")->required()->delimiter(',');
  sw->add_option("--runs", sweep_runs, "runs per value")->capture_default_str()->check(CLI::PositiveNumber);
  add_format(sw);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*ingest) {
      if (stopwords) tok.stopwords_path = *stopwords;
      return cmd_ingest(text_dir, uci, synthetic, synth, tok, out);
    }
    if (*train) return cmd_train(train_flags, out, resume, format, verbose);
    if (*topics) return cmd_topics(run_dir, m);
    if (*eval) return cmd_eval(run_dir, gold, format);
    if (*mc) return cmd_run_mc(mc_flags, out, runs, format);
    if (*sw) return cmd_sweep(sweep_flags, out, sweep_runs, param, values, format);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInput;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.input_error() ? kExitInput : kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}
