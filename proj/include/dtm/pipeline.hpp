#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtm/corpus.hpp"
#include "dtm/eval.hpp"
#include "dtm/keyvalue.hpp"
#include "dtm/lasso.hpp"
#include "dtm/mbn.hpp"
#include "dtm/spectral.hpp"

namespace dtm {

struct RunConfig {
  std::filesystem::path corpus_dir;
  std::size_t c = 5;
  MbnConfig mbn;
  SpectralConfig spectral;
  LassoConfig lasso;
  CoherenceConfig coherence;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  std::size_t jobs = 0;

  /// Copies c, seeds and jobs into the module configs (seeds via derive_seed).
  void propagate();
  void validate() const;

  /// Every config key with its current value, in a stable order.
  KeyValues to_key_values() const;
  /// Applies the keys present in `kv` on top of the current values. Unknown
  /// keys are rejected.
  void apply(const KeyValues& kv);

  /// The config keys with a one-line description each.
  static const std::vector<std::pair<std::string, std::string>>& keys();
};

/// Stage failure: names the stage that aborted the run.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& cause, bool input_error = false)
      : std::runtime_error("stage '" + stage + "' failed: " + cause), stage_(std::move(stage)),
        input_error_(input_error) {}
  const std::string& stage() const noexcept { return stage_; }
  /// The cause was an InputError (bad data or configuration).
  bool input_error() const noexcept { return input_error_; }

 private:
  std::string stage_;
  bool input_error_;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct RunArtifacts {
  std::filesystem::path dir;
  std::filesystem::path corpus_dir;
  std::filesystem::path d_path;
  std::filesystem::path mbn_dir;
  std::filesystem::path w_path;
  std::filesystem::path c_path;
  std::filesystem::path topics_path;
  std::filesystem::path report_path;
  std::filesystem::path manifest_path;
  EvalReport report;
  std::vector<StageTiming> timings;
  std::size_t lasso_rows_converged = 0;
  std::size_t lasso_rows = 0;
};

/// corpus → TF-IDF → MBN → spectral W → Lasso C → evaluation, persisting every
/// stage under config.output_dir. The corpus is written to <out>/corpus.
RunArtifacts run_dtm(const RunConfig& config, const Corpus& corpus);
/// Loads config.corpus_dir first.
RunArtifacts run_dtm(const RunConfig& config);

/// Recomputes W, C and the report of an existing run from its persisted
/// corpus and MBN model.
RunArtifacts rerun_from_model(const std::filesystem::path& run_dir, std::size_t jobs = 0);

/// Recomputes file hashes and compares them with the manifest.
bool verify_run(const std::filesystem::path& run_dir);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single run
};

MetricSummary summarize(const std::vector<double>& values);

struct MonteCarloReport {
  std::vector<EvalReport> runs;
  std::vector<std::uint64_t> run_seeds;
  MetricSummary acc;
  MetricSummary coh_mean;
  MetricSummary simc;
  bool has_acc = false;
  std::filesystem::path csv_path;
};

/// Seed of Monte-Carlo run r below the master seed.
std::uint64_t monte_carlo_seed(std::uint64_t master, std::size_t run);

/// For each run: draw c gold topics, run the pipeline on that subset into
/// <out>/run_<r>, and append one row to <out>/runs.csv.
MonteCarloReport run_monte_carlo(const RunConfig& config, const Corpus& corpus, std::size_t c, std::size_t runs);

enum class SweepParameter { kV, kDelta };
SweepParameter sweep_parameter_from_string(const std::string& s);
std::string to_string(SweepParameter p);

struct SweepRow {
  double value = 0.0;
  MonteCarloReport report;
};

/// One run_monte_carlo per value, into <out>/<param>_<value>. Writes
/// <out>/sweep.csv with one row per value.
std::vector<SweepRow> sweep(const RunConfig& config, const Corpus& corpus, std::size_t c, std::size_t runs,
                            SweepParameter parameter, const std::vector<double>& values);

struct SyntheticConfig {
  std::size_t topics = 3;
  std::size_t vocabulary = 500;
  double exclusive_mass = 0.9;
  std::size_t docs_per_topic = 100;
  std::size_t min_tokens = 50;
  std::size_t max_tokens = 150;
  std::uint64_t seed = 0;
};

/// Multinomial topics over a shared vocabulary. Topic g owns a contiguous
/// block of vocabulary/topics words that receives `exclusive_mass` of its
/// probability; the rest is spread uniformly over the whole vocabulary.
Corpus synthetic_corpus(const SyntheticConfig& config);

}  // namespace dtm
