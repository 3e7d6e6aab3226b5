#include <doctest.h>

#include <cmath>
#include <random>

#include "dtm/error.hpp"
#include "dtm/eval.hpp"
#include "oracles.hpp"

using namespace dtm;

namespace {

// Each document is the set of word ids present once.
Corpus presence_corpus(std::size_t vocab, const std::vector<std::vector<Index>>& docs) {
  Corpus c;
  for (std::size_t w = 0; w < vocab; ++w) c.vocabulary.push_back("w" + std::to_string(w));
  std::vector<Triplet> t;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (auto w : docs[d]) t.push_back({w, static_cast<Index>(d), 1.0});
    c.doc_ids.push_back(std::to_string(d));
  }
  c.counts = SparseMatrix::from_triplets(vocab, docs.size(), t);
  return c;
}

}  // namespace

TEST_CASE("clustering accuracy hand case") {
  const std::uint32_t pred[] = {0, 0, 1, 1};
  const std::uint32_t gold[] = {0, 1, 1, 1};
  CHECK(clustering_accuracy(pred, gold) == doctest::Approx(0.75));

  const std::uint32_t swapped[] = {1, 1, 0, 0};
  const std::uint32_t truth[] = {0, 0, 1, 1};
  CHECK(clustering_accuracy(swapped, truth) == 1.0);

  const std::uint32_t short_pred[] = {0};
  CHECK_THROWS_AS(clustering_accuracy(short_pred, gold), DimensionError);
}

TEST_CASE("clustering accuracy matches brute force over permutations") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 300; ++trial) {
    std::uniform_int_distribution<std::uint32_t> kp(1, 6), kg(1, 6);
    const auto a = kp(rng), b = kg(rng);
    std::uniform_int_distribution<std::uint32_t> pa(0, a - 1), pb(0, b - 1);
    std::uniform_int_distribution<std::size_t> len(1, 40);
    const std::size_t n = len(rng);
    std::vector<std::uint32_t> pred(n), gold(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = pa(rng);
      gold[i] = pb(rng);
    }
    REQUIRE(clustering_accuracy(pred, gold) == doctest::Approx(oracle::accuracy_brute_force(pred, gold)));
  }
}

TEST_CASE("hungarian handles rectangular costs") {
  const std::vector<std::vector<double>> wide = {{4, 1, 3}, {2, 0, 5}};
  const auto a = hungarian_min_cost(wide);
  CHECK(wide[0][a[0]] + wide[1][a[1]] == 3.0);
  const std::vector<std::vector<double>> tall = {{4, 2}, {1, 0}, {3, 5}};
  const auto b = hungarian_min_cost(tall);
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < 3; ++i)
    if (b[i] < 2) {
      total += tall[i][b[i]];
      ++used;
    }
  CHECK(used == 2);
  CHECK(total == 3.0);
}

TEST_CASE("coherence hand cases") {
  // x=0 y=1 z=2; docs {x,y,z} {x,y} {x} {y,z}
  const auto c = presence_corpus(3, {{0, 1, 2}, {0, 1}, {0}, {1, 2}});
  const std::size_t ranked[] = {0, 1, 2};
  const auto r = coherence(ranked, c, CoherenceConfig{});
  CHECK(std::abs(r.value - (-1.8896170910091925)) <= 1e-12);
  CHECK(r.skipped_pairs == 0);

  // Never co-occurring; the earlier word appears in ten documents.
  std::vector<std::vector<Index>> docs(12);
  for (std::size_t d = 0; d < 10; ++d) docs[d] = {0};
  docs[10] = {1};
  docs[11] = {1};
  const auto apart = presence_corpus(2, docs);
  const std::size_t pair[] = {0, 1};
  CHECK(std::abs(coherence(pair, apart, CoherenceConfig{}).value - (-6.907755278982137)) <= 1e-12);

  // Four words always together in seven documents: the ε-saturated upper bound.
  const auto together = presence_corpus(4, std::vector<std::vector<Index>>(7, {0, 1, 2, 3}));
  const std::size_t four[] = {0, 1, 2, 3};
  CHECK(std::abs(coherence(four, together, CoherenceConfig{}).value - 0.008565311947111942) <= 1e-12);
}

TEST_CASE("coherence skips pairs whose earlier word never occurs") {
  const auto c = presence_corpus(3, {{0, 1}, {1}});
  const std::size_t ranked[] = {2, 0, 1};
  const auto r = coherence(ranked, c, CoherenceConfig{});
  CHECK(r.skipped_pairs == 2);
  CHECK(std::isfinite(r.value));
  CHECK(r.value == doctest::Approx(std::log(1.01 / 1.0)));
}

TEST_CASE("similarity count") {
  const std::vector<std::vector<std::size_t>> topics = {{1, 2, 3, 9}, {3, 2, 7, 1}, {5, 6, 7, 8}};
  CHECK(similarity_count(topics, 3) == 2.0 + 0.0 + 1.0);
  CHECK(similarity_count(topics, 1) == 0.0);
  CHECK(similarity_count({{1, 2}, {3, 4}}, 2) == 0.0);
  CHECK_THROWS_AS(similarity_count(topics, 5), InputError);
}

TEST_CASE("evaluate assembles the report") {
  auto c = presence_corpus(4, {{0, 1}, {0, 1}, {2, 3}, {2, 3}});
  c.labels = std::vector<std::uint32_t>{0, 0, 1, 1};
  c.label_names = {"p", "q"};
  const std::vector<std::vector<std::size_t>> topics = {{0, 1, 2}, {2, 3, 0}};
  const std::uint32_t pred[] = {1, 1, 0, 0};
  CoherenceConfig cfg;
  cfg.top_m = 2;
  const auto rep = evaluate(topics, c, pred, cfg);
  REQUIRE(rep.acc);
  CHECK(*rep.acc == 1.0);
  CHECK(rep.c == 2);
  CHECK(rep.n == 4);
  REQUIRE(rep.coherence.size() == 2);
  CHECK(rep.coherence[0] == doctest::Approx(std::log(2.01 / 2.0)));
  CHECK(rep.coherence_mean == doctest::Approx(std::log(2.01 / 2.0)));
  // Top-2 of each topic share nothing; top-c with c=2.
  CHECK(rep.simcount == 0.0);
  const auto kv = rep.to_key_values();
  CHECK(kv.get("acc") == "1");
  CHECK(rep.metrics_table('\t').rfind("acc\tcoh_mean\tsimc\n", 0) == 0);

  c.labels.reset();
  CHECK(!evaluate(topics, c, pred, cfg).acc);
  CHECK(evaluate(topics, c, pred, cfg).metrics_table(',').find("NA,") != std::string::npos);
}
