#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "dtm/error.hpp"
#include "dtm/spectral.hpp"
#include "oracles.hpp"

using namespace dtm;

namespace {

// Block-diagonal affinity with `blocks` groups of `size` documents, strong
// within-group weights and a faint uniform background.
DenseMatrix block_affinity(std::size_t blocks, std::size_t size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> strong(5.0, 10.0), faint(0.0, 0.2);
  const std::size_t n = blocks * size;
  DenseMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      const double v = i / size == j / size ? strong(rng) : faint(rng);
      a(i, j) = v;
      a(j, i) = v;
    }
  return a;
}

std::vector<std::uint32_t> block_truth(std::size_t blocks, std::size_t size) {
  std::vector<std::uint32_t> t;
  for (std::size_t b = 0; b < blocks; ++b) t.insert(t.end(), size, static_cast<std::uint32_t>(b));
  return t;
}

SpectralConfig spectral_config(std::size_t c, WMode mode = WMode::kHard) {
  SpectralConfig cfg;
  cfg.c = c;
  cfg.mode = mode;
  cfg.seed = 17;
  cfg.jobs = 1;
  return cfg;
}

}  // namespace

TEST_CASE("gram equals codes transposed times codes") {
  std::mt19937_64 rng(2);
  auto dense = oracle::random_dense(30, 25, 0.3, rng);
  const auto codes = SparseMatrix::from_dense(oracle::from_rows(dense));
  const auto k = gram(codes, 1);
  std::vector<std::vector<double>> t(25, std::vector<double>(30));
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t j = 0; j < 25; ++j) t[j][i] = dense[i][j];
  const auto expected = oracle::triple_loop(t, dense);
  for (std::size_t i = 0; i < 25; ++i)
    for (std::size_t j = 0; j < 25; ++j) REQUIRE(std::abs(k(i, j) - expected[i][j]) <= 1e-12);
  CHECK(gram(codes, 4) == k);
}

TEST_CASE("kmeans separates well-spaced blobs") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> noise(0.0, 0.05);
  DenseMatrix pts(90, 2);
  const double centers[3][2] = {{0, 0}, {5, 5}, {-5, 5}};
  for (std::size_t i = 0; i < 90; ++i) {
    pts(i, 0) = centers[i / 30][0] + noise(rng);
    pts(i, 1) = centers[i / 30][1] + noise(rng);
  }
  const auto r = kmeans(pts, 3, 5, 100, 3, 1);
  CHECK(oracle::same_partition(r.labels, block_truth(3, 30)));
  CHECK(r.inertia < 90 * 0.05);
  const auto again = kmeans(pts, 3, 5, 100, 3, 4);
  CHECK(again.labels == r.labels);
  CHECK(again.inertia == r.inertia);
  CHECK(again.restart == r.restart);
}

TEST_CASE("kmeans edge cases") {
  DenseMatrix same(6, 2, 1.0);
  const auto r = kmeans(same, 3, 2, 10, 1, 1);
  CHECK(r.labels.size() == 6);
  CHECK(r.inertia == 0.0);
  const auto one = kmeans(DenseMatrix(4, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 1, 1}), 1, 1, 10, 1, 1);
  CHECK(one.labels == std::vector<std::uint32_t>(4, 0));
  CHECK_THROWS(kmeans(same, 7, 1, 10, 1, 1));
}

TEST_CASE("spectral clustering recovers block structure") {
  const auto a = block_affinity(3, 20, 5);
  const auto w = spectral_cluster(a, spectral_config(3));
  CHECK(w.topics() == 3);
  CHECK(w.docs() == 60);
  for (std::size_t d = 0; d < 60; ++d) {
    double sum = 0.0;
    for (std::size_t g = 0; g < 3; ++g) {
      CHECK((w.W(g, d) == 0.0 || w.W(g, d) == 1.0));
      sum += w.W(g, d);
    }
    CHECK(sum == 1.0);
  }
  CHECK(oracle::same_partition(hard_labels(w), block_truth(3, 20)));

  const auto e = spectral_cluster(a, spectral_config(3, WMode::kEmbed));
  CHECK(e.mode == WMode::kEmbed);
  for (std::size_t d = 0; d < 60; ++d) {
    double sq = 0.0;
    for (std::size_t g = 0; g < 3; ++g) sq += e.W(g, d) * e.W(g, d);
    CHECK(sq == doctest::Approx(1.0));
  }
}

TEST_CASE("spectral clustering is covariant under document permutation") {
  const auto a = block_affinity(4, 15, 9);
  const std::size_t n = 60;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(12));
  DenseMatrix p(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) p(i, j) = a(perm[i], perm[j]);
  const auto base = hard_labels(spectral_cluster(a, spectral_config(4)));
  const auto shuffled = hard_labels(spectral_cluster(p, spectral_config(4)));
  std::vector<std::uint32_t> pulled(n);
  for (std::size_t i = 0; i < n; ++i) pulled[i] = base[perm[i]];
  CHECK(oracle::same_partition(pulled, shuffled));
}

TEST_CASE("spectral embedding zeroes isolated documents") {
  auto a = block_affinity(2, 5, 1);
  for (std::size_t j = 0; j < 10; ++j) {
    a(9, j) = 0.0;
    a(j, 9) = 0.0;
  }
  a(9, 9) = 3.0;  // the diagonal is ignored
  const auto emb = spectral_embedding(a, 2);
  CHECK(emb.rows() == 10);
  CHECK(emb(9, 0) == 0.0);
  CHECK(emb(9, 1) == 0.0);
  for (std::size_t i = 0; i < 9; ++i) CHECK(std::hypot(emb(i, 0), emb(i, 1)) == doctest::Approx(1.0));
}

TEST_CASE("spectral input validation") {
  CHECK_THROWS(spectral_embedding(DenseMatrix::identity(3), 4));
  DenseMatrix neg(3, 3, 1.0);
  neg(0, 1) = -1.0;
  neg(1, 0) = -1.0;
  CHECK_THROWS(spectral_embedding(neg, 2));
  CHECK_THROWS_AS(wmode_from_string("soft"), InputError);
  CHECK(wmode_from_string(to_string(WMode::kEmbed)) == WMode::kEmbed);
}

TEST_CASE("hard labels break ties toward the lowest topic") {
  DocTopicMatrix w{DenseMatrix(3, 2, {0.5, 0.1, 0.5, 0.7, 0.0, 0.7}), WMode::kEmbed};
  CHECK(hard_labels(w) == std::vector<std::uint32_t>{0, 1});
}
