#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "dtm/corpus.hpp"
#include "test_util.hpp"

using namespace dtm;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result run(const std::string& args, const std::string& env = {}) {
  test::TempDir scratch;
  const auto err_path = scratch.path() / "stderr.txt";
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" + std::string(DTM_CLI_PATH) + "' " + args + " 2>'" +
                          err_path.string() + "'";
  Result r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = test::read_file(err_path);
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

// Synthetic corpus shared by the tests below.
fs::path make_corpus(const fs::path& root, std::size_t topics = 5) {
  const auto dir = root / "corpus";
  const auto r = run("ingest --synthetic --topics " + std::to_string(topics) +
                     " --docs-per-topic 30 --vocab-size 150 --seed 3 --out " + q(dir));
  REQUIRE(r.code == 0);
  return dir;
}

}  // namespace

TEST_CASE("cli: ingest uci bag-of-words round-trips counts") {
  test::TempDir dir;
  test::write_file(dir.path() / "docword.txt", "3\n4\n5\n1 1 2\n1 2 1\n2 3 3\n3 1 1\n3 4 2\n");
  test::write_file(dir.path() / "vocab.txt", "a\nb\nc\nd\n");
  const auto r = run("ingest --uci-bow " + q(dir.path() / "docword.txt") + " " + q(dir.path() / "vocab.txt") +
                     " --out " + q(dir.path() / "c"));
  CHECK(r.code == 0);
  CHECK(r.out.find("N\t3\n") != std::string::npos);
  CHECK(r.out.find("v\t4\n") != std::string::npos);
  const auto c = load_corpus(dir.path() / "c");
  const auto expected = ingest_uci_bow(dir.path() / "docword.txt", dir.path() / "vocab.txt");
  CHECK(c.counts == expected.counts);
  CHECK(c.vocabulary == expected.vocabulary);
}

TEST_CASE("cli: ingest a text directory") {
  test::TempDir dir;
  test::write_file(dir.path() / "t" / "x" / "1.txt", "rocket orbit");
  test::write_file(dir.path() / "t" / "x" / "2.txt", "rocket orbit launch");
  test::write_file(dir.path() / "t" / "y" / "3.txt", "goal match");
  test::write_file(dir.path() / "t" / "y" / "4.txt", "goal match keeper");
  const auto r = run("ingest --text-dir " + q(dir.path() / "t") + " --out " + q(dir.path() / "c"));
  CHECK(r.code == 0);
  CHECK(r.out.find("labels\t2\n") != std::string::npos);
  const auto manifest = test::read_file(dir.path() / "c" / "manifest.txt");
  CHECK(manifest.find("N=4") != std::string::npos);
}

TEST_CASE("cli: usage and input errors exit with 2") {
  test::TempDir dir;
  auto r = run("ingest --text-dir " + q(dir.path() / "missing"));
  CHECK(r.code == 2);
  CHECK(r.err.find("missing") != std::string::npos);

  r = run("ingest --text-dir a --uci-bow b c");
  CHECK(r.code == 2);
  CHECK(r.err.find("--text-dir") != std::string::npos);
  CHECK(r.err.find("--uci-bow") != std::string::npos);

  CHECK(run("train --no-such-flag 1").code == 2);
  CHECK(run("").code == 2);
  CHECK(run("train --c 3 --out " + q(dir.path() / "o")).code == 2);  // no corpus

  const auto corpus = make_corpus(dir.path());
  r = run("train --corpus " + q(corpus) + " --c 3 --mbn.delta 1.5 --out " + q(dir.path() / "o"));
  CHECK(r.code == 2);
  CHECK(r.err.find("delta") != std::string::npos);
  r = run("train --corpus " + q(corpus) + " --c 200 --out " + q(dir.path() / "o"));
  CHECK(r.code == 2);
  CHECK(r.err.find("mbn") != std::string::npos);
  test::write_file(dir.path() / "bad.ini", "[mbn]\nVV = 3\n");
  r = run("train --corpus " + q(corpus) + " --config " + q(dir.path() / "bad.ini"));
  CHECK(r.code == 2);
  CHECK(r.err.find("VV") != std::string::npos);
}

TEST_CASE("cli: help lists every config key") {
  for (const char* sub : {"train", "run-mc", "sweep"}) {
    const auto r = run(std::string(sub) + " --help");
    CHECK(r.code == 0);
    for (const char* key : {"--c", "--seed", "--jobs", "--mbn.V", "--mbn.delta", "--mbn.k_top", "--spectral.mode",
                            "--spectral.restarts", "--spectral.max_iters", "--lasso.lambda", "--lasso.lambda_mode",
                            "--lasso.rho", "--lasso.abs_tol", "--lasso.rel_tol", "--lasso.max_iters",
                            "--lasso.nonnegative", "--eval.epsilon", "--eval.top_m", "--config"}) {
      CHECK_MESSAGE(r.out.find(std::string(key) + " ") != std::string::npos, sub << " " << key);
    }
  }
}

TEST_CASE("cli: train, topics and eval") {
  test::TempDir dir;
  const auto corpus = make_corpus(dir.path());
  const auto model = dir.path() / "m1";
  auto r = run("train --corpus " + q(corpus) + " --c 5 --mbn.V 20 --seed 4 --out " + q(model));
  REQUIRE(r.code == 0);

  r = run("topics " + q(model));
  CHECK(r.code == 0);
  std::istringstream in(r.out);
  std::string line;
  std::size_t blocks = 0, words = 0;
  while (std::getline(in, line)) {
    if (line.rfind("topic ", 0) == 0) ++blocks;
    else if (!line.empty()) ++words;
  }
  CHECK(blocks == 5);
  CHECK(words == 50);

  r = run("eval " + q(model) + " --gold");
  CHECK(r.code == 0);
  CHECK(r.out.rfind("acc\tcoh_mean\tsimc\n", 0) == 0);
  CHECK(count_lines(r.out) == 2);
  CHECK(r.out.find("NA") == std::string::npos);
  // eval agrees with the report written during training
  const auto report = test::read_file(model / "report.txt");
  const auto second = r.out.substr(r.out.find('\n') + 1);
  CHECK(report.find("coh_mean=" + second.substr(second.find('\t') + 1, second.rfind('\t') - second.find('\t') - 1)) !=
        std::string::npos);

  r = run("eval " + q(model) + " --format csv");
  CHECK(r.out.rfind("acc,coh_mean,simc\nNA,", 0) == 0);

  CHECK(run("topics " + q(dir.path() / "nothing")).code == 2);
}

TEST_CASE("cli: fixed seed is bytewise reproducible and --resume reproduces W and C") {
  test::TempDir dir;
  const auto corpus = make_corpus(dir.path(), 3);
  const std::string base = "train --corpus " + q(corpus) + " --c 3 --mbn.V 25 --seed 9 ";
  REQUIRE(run(base + "--jobs 1 --out " + q(dir.path() / "a")).code == 0);
  REQUIRE(run(base + "--jobs 4 --out " + q(dir.path() / "b")).code == 0);
  for (const char* f : {"D.mtx", "W.mtx", "C.mtx", "topics.txt", "report.txt", "mbn/codes.mtx", "corpus/counts.mtx"})
    CHECK_MESSAGE(test::read_file(dir.path() / "a" / f) == test::read_file(dir.path() / "b" / f), f);

  const auto w = test::read_file(dir.path() / "a" / "W.mtx");
  const auto c = test::read_file(dir.path() / "a" / "C.mtx");
  fs::remove(dir.path() / "a" / "W.mtx");
  fs::remove(dir.path() / "a" / "C.mtx");
  REQUIRE(run("train --resume --out " + q(dir.path() / "a")).code == 0);
  CHECK(test::read_file(dir.path() / "a" / "W.mtx") == w);
  CHECK(test::read_file(dir.path() / "a" / "C.mtx") == c);
}

TEST_CASE("cli: config file with flag overrides") {
  test::TempDir dir;
  const auto corpus = make_corpus(dir.path(), 3);
  test::write_file(dir.path() / "run.ini", "c = 3\nseed = 2\n[mbn]\nV = 7\ndelta = 0.4\n");
  const auto r = run("train --corpus " + q(corpus) + " --config " + q(dir.path() / "run.ini") +
                     " --mbn.V 11 --out " + q(dir.path() / "m"));
  REQUIRE(r.code == 0);
  const auto manifest = test::read_file(dir.path() / "m" / "manifest.txt");
  CHECK(manifest.find("config.mbn.V=11") != std::string::npos);
  CHECK(manifest.find("config.mbn.delta=0.4") != std::string::npos);
  CHECK(manifest.find("config.seed=2") != std::string::npos);
}

TEST_CASE("cli: run-mc and sweep tables") {
  test::TempDir dir;
  const auto corpus = make_corpus(dir.path());
  auto r = run("run-mc --corpus " + q(corpus) + " --c 2 --runs 2 --mbn.V 10 --out " + q(dir.path() / "mc"));
  CHECK(r.code == 0);
  CHECK(r.out.rfind("metric\tmean\tstd\nacc\t", 0) == 0);
  CHECK(count_lines(test::read_file(dir.path() / "mc" / "runs.csv")) == 3);

  r = run("sweep --corpus " + q(corpus) + " --c 2 --runs 1 --param V --values 10,100,400 --format csv --out " +
          q(dir.path() / "sw"));
  CHECK(r.code == 0);
  CHECK(r.out.rfind("V,acc_mean,acc_std,coh_mean,simc_mean\n", 0) == 0);
  CHECK(count_lines(r.out) == 4);
  CHECK(count_lines(test::read_file(dir.path() / "sw" / "sweep.csv")) == 4);

  CHECK(run("sweep --corpus " + q(corpus) + " --c 2 --param k --values 1").code == 2);
}

TEST_CASE("cli: output root environment variable") {
  test::TempDir dir;
  const auto r = run("ingest --synthetic --docs-per-topic 5", "DTM_OUTPUT_ROOT=" + q(dir.path() / "root"));
  CHECK(r.code == 0);
  CHECK(fs::exists(dir.path() / "root" / "corpus" / "counts.mtx"));
}
