#include <doctest.h>

#include <filesystem>

#include "dtm/error.hpp"
#include "dtm/pipeline.hpp"
#include "dtm/seed.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace dtm;
namespace fs = std::filesystem;

namespace {

Corpus small_synthetic(std::uint64_t seed, std::size_t topics = 3, std::size_t docs = 40) {
  SyntheticConfig s;
  s.topics = topics;
  s.vocabulary = 90;
  s.docs_per_topic = docs;
  s.min_tokens = 30;
  s.max_tokens = 60;
  s.seed = seed;
  return synthetic_corpus(s);
}

RunConfig small_config(const fs::path& out, std::size_t c = 3) {
  RunConfig cfg;
  cfg.c = c;
  cfg.mbn.V = 30;
  cfg.seed = 11;
  cfg.jobs = 1;
  cfg.output_dir = out;
  return cfg;
}

const char* const kArtifacts[] = {"D.mtx", "W.mtx", "C.mtx", "topics.txt", "report.txt", "mbn/codes.mtx"};

}  // namespace

TEST_CASE("seed derivation") {
  CHECK(derive_seed(1, {2}) == derive_seed(1, {2}));
  CHECK(derive_seed(1, {2}) != derive_seed(1, {3}));
  CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
  CHECK(derive_seed(1, {2, 0}) != derive_seed(1, {2}));
  CHECK(monte_carlo_seed(5, 0) != monte_carlo_seed(5, 1));
}

TEST_CASE("synthetic corpus") {
  const auto c = small_synthetic(1);
  c.validate();
  CHECK(c.num_docs() == 120);
  CHECK(c.num_labels() == 3);
  CHECK(c.vocabulary.front() == "w000");
  for (std::size_t d = 0; d < c.num_docs(); ++d) {
    double total = 0.0;
    for (double x : c.counts.col_values(d)) total += x;
    CHECK(total >= 30);
    CHECK(total <= 60);
  }
  CHECK(small_synthetic(1).counts == c.counts);
  CHECK(small_synthetic(2).counts != c.counts);
  SyntheticConfig bad;
  bad.min_tokens = 10;
  bad.max_tokens = 5;
  CHECK_THROWS_AS(synthetic_corpus(bad), InputError);
}

TEST_CASE("config keys round-trip and reject unknown keys") {
  RunConfig cfg;
  cfg.c = 7;
  cfg.mbn.V = 12;
  cfg.mbn.k_top_override = 4;
  cfg.lasso.lambda_mode = LambdaMode::kAbsolute;
  cfg.spectral.mode = WMode::kEmbed;
  RunConfig back;
  back.apply(cfg.to_key_values());
  CHECK(back.to_key_values().to_string() == cfg.to_key_values().to_string());
  CHECK(RunConfig::keys().size() == cfg.to_key_values().entries().size());

  KeyValues frac;
  frac.set("lasso.lambda", "1/3");
  back.apply(frac);
  CHECK(back.lasso.lambda == doctest::Approx(1.0 / 3.0));

  KeyValues unknown;
  unknown.set("mbn.W", "3");
  CHECK_THROWS_AS(back.apply(unknown), InputError);
  KeyValues bad;
  bad.set("c", "-2");
  CHECK_THROWS_AS(back.apply(bad), InputError);

  const auto ini = KeyValues::parse("c = 4\n[mbn]\n; clusterings\nV = 9\n# comment\n[lasso]\nlambda_mode = absolute\n");
  RunConfig fromini;
  fromini.apply(ini);
  CHECK(fromini.c == 4);
  CHECK(fromini.mbn.V == 9);
  CHECK(fromini.lasso.lambda_mode == LambdaMode::kAbsolute);
}

TEST_CASE("end-to-end run persists every stage") {
  test::TempDir dir;
  const auto corpus = small_synthetic(3);
  const auto art = run_dtm(small_config(dir.path() / "run"), corpus);
  for (auto f : kArtifacts) CHECK(fs::exists(art.dir / f));
  CHECK(fs::exists(art.dir / "timings.txt"));
  CHECK(verify_run(art.dir));

  const auto w = read_matrix_market_dense(art.w_path);
  const auto c = read_matrix_market_dense(art.c_path);
  CHECK(w.rows() == 3);
  CHECK(w.cols() == 120);
  CHECK(c.rows() == corpus.vocab_size());
  CHECK(c.cols() == 3);
  CHECK(art.lasso_rows == corpus.vocab_size());
  REQUIRE(art.report.acc);
  CHECK(*art.report.acc >= 0.9);

  const auto manifest = KeyValues::read(art.manifest_path);
  CHECK(manifest.get("status") == "OK");
  CHECK(manifest.get("config.mbn.V") == "30");
  CHECK(manifest.get("w_mode") == "hard");

  const auto topics = test::read_file(art.topics_path);
  CHECK(topics.rfind("topic 0\n", 0) == 0);

  // Tampering is detected.
  test::write_file(art.dir / "topics.txt", topics + "x\n");
  CHECK(!verify_run(art.dir));
}

TEST_CASE("runs are byte-identical across worker counts and output locations") {
  test::TempDir dir;
  const auto corpus = small_synthetic(4);
  auto cfg = small_config(dir.path() / "a");
  run_dtm(cfg, corpus);
  cfg.jobs = 8;
  cfg.output_dir = dir.path() / "b";
  run_dtm(cfg, corpus);
  for (auto f : kArtifacts)
    CHECK_MESSAGE(test::read_file(dir.path() / "a" / f) == test::read_file(dir.path() / "b" / f), f);

  cfg.seed = 12;
  cfg.output_dir = dir.path() / "c";
  run_dtm(cfg, corpus);
  CHECK(test::read_file(dir.path() / "a" / "mbn/codes.mtx") != test::read_file(dir.path() / "c" / "mbn/codes.mtx"));
}

TEST_CASE("rerun from a persisted model reproduces W and C") {
  test::TempDir dir;
  const auto art = run_dtm(small_config(dir.path() / "run"), small_synthetic(5));
  const auto w = test::read_file(art.w_path);
  const auto c = test::read_file(art.c_path);
  const auto report = test::read_file(art.report_path);
  fs::remove(art.w_path);
  fs::remove(art.c_path);
  fs::remove(art.topics_path);
  const auto again = rerun_from_model(art.dir, 3);
  CHECK(test::read_file(again.w_path) == w);
  CHECK(test::read_file(again.c_path) == c);
  CHECK(test::read_file(again.report_path) == report);
  CHECK(verify_run(art.dir));
}

TEST_CASE("stage failures are named and recorded") {
  test::TempDir dir;
  auto cfg = small_config(dir.path() / "run", 3);
  cfg.mbn.k_top_override = 200;  // needs N >= 400
  try {
    run_dtm(cfg, small_synthetic(6));
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == "mbn");
  }
  const auto manifest = KeyValues::read(dir.path() / "run" / "manifest.txt");
  CHECK(manifest.get("status") == "FAILED");
  CHECK(manifest.get("failed_stage") == "mbn");
  CHECK(!verify_run(dir.path() / "run"));

  auto bad = small_config(dir.path() / "x", 1);
  CHECK_THROWS_AS(run_dtm(bad, small_synthetic(6)), InputError);
}

TEST_CASE("monte-carlo protocol and sweeps") {
  test::TempDir dir;
  const auto corpus = small_synthetic(7, 4, 25);
  auto cfg = small_config(dir.path() / "mc", 2);
  cfg.mbn.V = 15;
  const auto mc = run_monte_carlo(cfg, corpus, 2, 3);
  CHECK(mc.runs.size() == 3);
  CHECK(mc.has_acc);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(fs::exists(dir.path() / "mc" / ("run_" + std::to_string(r)) / "report.txt"));
    CHECK(mc.run_seeds[r] == monte_carlo_seed(11, r));
    CHECK(mc.runs[r].n == 50);
  }
  const auto csv = test::read_file(mc.csv_path);
  CHECK(csv.rfind("run_id,c,seed,acc,coh_mean,simc\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);

  const auto summary = summarize({1.0, 2.0, 3.0});
  CHECK(summary.mean == 2.0);
  CHECK(summary.stddev == doctest::Approx(1.0));
  CHECK(summarize({4.0}).stddev == 0.0);

  cfg.output_dir = dir.path() / "sweep";
  const auto rows = sweep(cfg, corpus, 2, 1, SweepParameter::kV, {5, 10});
  CHECK(rows.size() == 2);
  CHECK(fs::exists(dir.path() / "sweep" / "V_5" / "runs.csv"));
  const auto scsv = test::read_file(dir.path() / "sweep" / "sweep.csv");
  CHECK(scsv.rfind("V,acc_mean,acc_std,coh_mean,simc_mean\n", 0) == 0);
  CHECK_THROWS_AS(sweep(cfg, corpus, 2, 1, SweepParameter::kDelta, {1.5}), InputError);
  CHECK_THROWS_AS(run_monte_carlo(cfg, corpus, 5, 1), InputError);
}
