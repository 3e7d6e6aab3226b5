#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dtm/corpus.hpp"
#include "dtm/sparse.hpp"

namespace dtm {

enum class Similarity { kCosine, kDot };

std::string to_string(Similarity s);
Similarity similarity_from_string(const std::string& s);

struct MbnConfig {
  std::size_t V = 400;      // clusterings per layer
  double delta = 0.5;       // layer shrink factor
  std::size_t c = 2;        // target topic count
  std::optional<std::size_t> k_top_override;
  std::uint64_t seed = 0;
  std::size_t jobs = 0;     // 0 = hardware concurrency

  void validate() const;
};

struct KSchedule {
  std::vector<std::size_t> ks;

  std::size_t layers() const noexcept { return ks.size(); }
  std::size_t top() const { return ks.back(); }
};

/// k_1 = ⌊N/2⌋ and k_{l+1} = ⌊δ·k_l⌋ while that stays >= k_top, where
/// k_top = ⌈1.5c⌉ unless overridden. If the sequence stops above k_top a
/// final layer of exactly k_top is appended.
KSchedule build_schedule(std::size_t n, const MbnConfig& config);

/// Index of the most similar centroid (ties go to the lowest index). Under
/// cosine, zero vectors have similarity 0 to everything.
std::size_t one_nn_assign(std::span<const double> x, const DenseMatrix& centroids, Similarity metric);

/// Same rule for column `column` of `inputs` against the columns of `centroids`.
std::size_t one_nn_assign(const SparseMatrix& inputs, std::size_t column, const SparseMatrix& centroids,
                          Similarity metric);

/// One hidden layer: V independent k-centroids clusterings.
struct MbnLayer {
  std::size_t index = 0;  // 0-based layer number
  std::size_t k = 0;
  Similarity metric = Similarity::kCosine;
  /// centroids[v] lists the k input columns sampled (without replacement) as
  /// the centroids of clustering v, in centroid order.
  std::vector<std::vector<Index>> centroids;
  /// assignments[v][d] is the centroid of clustering v nearest to document d.
  std::vector<std::vector<std::uint32_t>> assignments;

  std::size_t V() const noexcept { return centroids.size(); }
  std::size_t num_docs() const noexcept { return assignments.empty() ? 0 : assignments.front().size(); }

  /// The (V·k) × N block one-hot code matrix [h_1; …; h_V].
  SparseMatrix output() const;
};

struct LayerOptions {
  std::size_t index = 0;
  Similarity metric = Similarity::kCosine;
  std::size_t jobs = 0;
};

/// Trains one layer on the columns of `input`. Clustering v draws its
/// centroids from a stream seeded by derive_seed(layer_seed, {v}), so the
/// result does not depend on the worker count.
MbnLayer train_layer(const SparseMatrix& input, std::size_t k, std::size_t V, std::uint64_t layer_seed,
                     const LayerOptions& options = {});

/// Re-encodes every column of `input` against centroid sets fixed in `layer`.
void assign_layer(const SparseMatrix& input, MbnLayer& layer, std::size_t jobs);

struct MbnModel {
  MbnConfig config;
  KSchedule schedule;
  SparseMatrix input;  // layer-1 input (the TF-IDF matrix)
  std::vector<MbnLayer> layers;
  SparseMatrix codes;  // top-layer output, (V·k_L) × N

  /// Input matrix consumed by layer l.
  SparseMatrix layer_input(std::size_t l) const;
  /// The k stored centroid vectors of clustering v in layer l, as columns.
  SparseMatrix centroid_vectors(std::size_t l, std::size_t v) const;
};

std::uint64_t layer_seed(std::uint64_t master, std::size_t layer);

/// Layer 1 uses cosine similarity on D; higher layers use dot products on the
/// previous layer's binary codes.
MbnModel train_mbn(const TfidfMatrix& d, const MbnConfig& config);
MbnModel train_mbn(const SparseMatrix& d, const MbnConfig& config);

/// Writes manifest.txt, input.mtx, layer_<l>_centroids.mtx and codes.mtx.
void save_mbn(const MbnModel& model, const std::filesystem::path& dir);
/// Restores a saved model. Layer outputs are recomputed from the stored
/// centroids and checked against the saved top-layer codes.
MbnModel load_mbn(const std::filesystem::path& dir, std::size_t jobs = 0);

}  // namespace dtm
