#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dtm/sparse.hpp"

namespace dtm {

enum class WMode { kHard, kEmbed };

std::string to_string(WMode m);
WMode wmode_from_string(const std::string& s);

struct SpectralConfig {
  std::size_t c = 2;
  WMode mode = WMode::kHard;
  std::size_t kmeans_restarts = 10;
  std::size_t kmeans_max_iters = 300;
  std::uint64_t seed = 0;
  std::size_t jobs = 0;

  void validate() const;
};

/// Document-topic matrix W (c × N). Hard mode: one-hot columns. Embed mode:
/// unit-norm columns (zero for degree-zero documents).
struct DocTopicMatrix {
  DenseMatrix W;
  WMode mode = WMode::kHard;

  std::size_t topics() const noexcept { return W.rows(); }
  std::size_t docs() const noexcept { return W.cols(); }
};

/// Linear kernel K = codesᵀ·codes (N × N).
DenseMatrix gram(const SparseMatrix& codes, std::size_t jobs = 0);

struct KMeansResult {
  std::vector<std::uint32_t> labels;
  DenseMatrix centroids;  // k × dim
  double inertia = 0.0;
  std::size_t restart = 0;  // index of the winning restart
};

/// Lloyd's k-means on the rows of `points`, k-means++ seeding, keeping the
/// lowest-inertia restart (ties to the earliest). A cluster that empties is
/// re-seeded with the point farthest from its own centroid.
KMeansResult kmeans(const DenseMatrix& points, std::size_t k, std::size_t restarts, std::size_t max_iters,
                    std::uint64_t seed, std::size_t jobs = 0);

/// Normalized spectral clustering of a nonnegative symmetric affinity: zero
/// the diagonal, form D^{-1/2} A D^{-1/2}, take the top-c eigenvectors,
/// normalize rows, then k-means.
DocTopicMatrix spectral_cluster(const DenseMatrix& k, const SpectralConfig& config);

/// Row-normalized N × c spectral embedding used by spectral_cluster.
DenseMatrix spectral_embedding(const DenseMatrix& k, std::size_t c);

/// Per-column argmax, ties to the lowest topic index.
std::vector<std::uint32_t> hard_labels(const DocTopicMatrix& w);

}  // namespace dtm
