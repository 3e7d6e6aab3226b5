#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dtm/corpus.hpp"
#include "dtm/keyvalue.hpp"

namespace dtm {

struct CoherenceConfig {
  double epsilon = 0.01;
  std::size_t top_m = 10;

  void validate() const;
};

/// Minimum-cost assignment on a rectangular cost matrix (rows ≤ cols after
/// internal transposition). Returns, for each row, the assigned column.
std::vector<std::size_t> hungarian_min_cost(const std::vector<std::vector<double>>& cost);

/// Best one-to-one mapping of predicted clusters onto gold classes, as the
/// fraction of documents it matches.
double clustering_accuracy(std::span<const std::uint32_t> pred, std::span<const std::uint32_t> gold);

/// Document presence lists (sorted) for each vocabulary word.
std::vector<std::vector<Index>> document_sets(const Corpus& corpus);

struct CoherenceResult {
  double value = 0.0;
  std::size_t skipped_pairs = 0;  // pairs whose earlier word occurs in no document
};

/// Σ over 2 ≤ t ≤ m, 1 ≤ l < t of ln((freq(w_t, w_l) + ε) / freq(w_l)).
CoherenceResult coherence(std::span<const std::size_t> words, const std::vector<std::vector<Index>>& doc_sets,
                          const CoherenceConfig& config);
CoherenceResult coherence(std::span<const std::size_t> words, const Corpus& corpus, const CoherenceConfig& config);

/// Σ over topic pairs g < g′ of |top_c(g) ∩ top_c(g′)|.
double similarity_count(const std::vector<std::vector<std::size_t>>& topics, std::size_t c);

struct EvalReport {
  std::optional<double> acc;
  std::vector<double> coherence;
  double coherence_mean = 0.0;
  double simcount = 0.0;
  std::size_t skipped_pairs = 0;
  std::size_t c = 0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  KeyValues config;

  KeyValues to_key_values() const;
  /// Header row and value row for acc, coh_mean, simc.
  std::string metrics_table(char sep) const;
};

/// ACC (when gold is present), per-topic coherence of the top-m words, and
/// similarity count over the leading c words of each topic.
EvalReport evaluate(const std::vector<std::vector<std::size_t>>& topics, const Corpus& corpus,
                    std::span<const std::uint32_t> predicted, const CoherenceConfig& config);

}  // namespace dtm
