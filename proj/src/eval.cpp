#include "dtm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "dtm/error.hpp"

namespace dtm {

void CoherenceConfig::validate() const {
  if (!(epsilon > 0.0)) throw InputError("coherence: epsilon must be > 0");
  if (top_m < 2) throw InputError("coherence: top_m must be >= 2");
}

// Shortest augmenting path with row/column potentials, O(n²·m).
std::vector<std::size_t> hungarian_min_cost(const std::vector<std::vector<double>>& cost) {
  const std::size_t rows = cost.size();
  if (rows == 0) return {};
  const std::size_t cols = cost.front().size();
  for (const auto& r : cost)
    if (r.size() != cols) throw DimensionError("hungarian: ragged cost matrix");
  if (rows > cols) {
    std::vector<std::vector<double>> t(cols, std::vector<double>(rows));
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) t[j][i] = cost[i][j];
    const auto col_to_row = hungarian_min_cost(t);
    constexpr auto kNone = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> out(rows, kNone);
    for (std::size_t j = 0; j < cols; ++j) out[col_to_row[j]] = j;
    return out;
  }

  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t n = rows, m = cols;
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n, 0);
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] != 0) assignment[p[j] - 1] = j - 1;
  return assignment;
}

double clustering_accuracy(std::span<const std::uint32_t> pred, std::span<const std::uint32_t> gold) {
  if (pred.size() != gold.size()) {
    throw DimensionError("clustering_accuracy: " + std::to_string(pred.size()) + " predictions vs " +
                         std::to_string(gold.size()) + " gold labels");
  }
  if (pred.empty()) return 0.0;
  const std::size_t kp = *std::max_element(pred.begin(), pred.end()) + std::size_t{1};
  const std::size_t kg = *std::max_element(gold.begin(), gold.end()) + std::size_t{1};
  const std::size_t size = std::max(kp, kg);  // square, zero-padded
  std::vector<std::vector<double>> counts(size, std::vector<double>(size, 0.0));
  for (std::size_t i = 0; i < pred.size(); ++i) counts[pred[i]][gold[i]] += 1.0;
  std::vector<std::vector<double>> cost(size, std::vector<double>(size));
  for (std::size_t a = 0; a < size; ++a)
    for (std::size_t b = 0; b < size; ++b) cost[a][b] = -counts[a][b];
  const auto match = hungarian_min_cost(cost);
  double hit = 0.0;
  for (std::size_t a = 0; a < size; ++a) hit += counts[a][match[a]];
  return hit / static_cast<double>(pred.size());
}

std::vector<std::vector<Index>> document_sets(const Corpus& corpus) {
  std::vector<std::vector<Index>> sets(corpus.vocab_size());
  const auto& counts = corpus.counts;
  for (std::size_t d = 0; d < counts.cols(); ++d) {
    auto words = counts.col_indices(d);
    auto vals = counts.col_values(d);
    for (std::size_t p = 0; p < words.size(); ++p)
      if (vals[p] > 0.0) sets[words[p]].push_back(static_cast<Index>(d));
  }
  return sets;
}

namespace {

std::size_t intersection_size(const std::vector<Index>& a, const std::vector<Index>& b) {
  std::size_t n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

}  // namespace

CoherenceResult coherence(std::span<const std::size_t> words, const std::vector<std::vector<Index>>& doc_sets,
                          const CoherenceConfig& config) {
  config.validate();
  CoherenceResult res;
  for (std::size_t t = 1; t < words.size(); ++t) {
    for (std::size_t l = 0; l < t; ++l) {
      const auto& later = doc_sets.at(words[t]);
      const auto& earlier = doc_sets.at(words[l]);
      if (earlier.empty()) {
        ++res.skipped_pairs;
        continue;
      }
      const double co = static_cast<double>(intersection_size(later, earlier));
      res.value += std::log((co + config.epsilon) / static_cast<double>(earlier.size()));
    }
  }
  return res;
}

CoherenceResult coherence(std::span<const std::size_t> words, const Corpus& corpus, const CoherenceConfig& config) {
  return coherence(words, document_sets(corpus), config);
}

double similarity_count(const std::vector<std::vector<std::size_t>>& topics, std::size_t c) {
  std::vector<std::vector<std::size_t>> heads;
  heads.reserve(topics.size());
  for (std::size_t g = 0; g < topics.size(); ++g) {
    if (topics[g].size() < c) {
      throw InputError("similarity_count: topic " + std::to_string(g) + " has " + std::to_string(topics[g].size()) +
                       " words, fewer than c = " + std::to_string(c));
    }
    std::vector<std::size_t> head(topics[g].begin(), topics[g].begin() + static_cast<std::ptrdiff_t>(c));
    std::sort(head.begin(), head.end());
    head.erase(std::unique(head.begin(), head.end()), head.end());
    heads.push_back(std::move(head));
  }
  double total = 0.0;
  for (std::size_t a = 0; a < heads.size(); ++a) {
    for (std::size_t b = a + 1; b < heads.size(); ++b) {
      std::vector<std::size_t> common;
      std::set_intersection(heads[a].begin(), heads[a].end(), heads[b].begin(), heads[b].end(),
                            std::back_inserter(common));
      total += static_cast<double>(common.size());
    }
  }
  return total;
}

KeyValues EvalReport::to_key_values() const {
  KeyValues kv;
  if (acc) kv.set("acc", *acc);
  kv.set("coh_mean", coherence_mean);
  for (std::size_t g = 0; g < coherence.size(); ++g) kv.set("coh." + std::to_string(g), coherence[g]);
  kv.set("simc", simcount);
  kv.set("coh_skipped_pairs", skipped_pairs);
  kv.set("c", c);
  kv.set("N", n);
  kv.set("seed", seed);
  for (const auto& [k, v] : config.entries()) kv.set("config." + k, v);
  return kv;
}

std::string EvalReport::metrics_table(char sep) const {
  std::ostringstream out;
  out << "acc" << sep << "coh_mean" << sep << "simc" << '\n';
  out << (acc ? format_double(*acc) : std::string("NA")) << sep << format_double(coherence_mean) << sep
      << format_double(simcount) << '\n';
  return out.str();
}

EvalReport evaluate(const std::vector<std::vector<std::size_t>>& topics, const Corpus& corpus,
                    std::span<const std::uint32_t> predicted, const CoherenceConfig& config) {
  config.validate();
  EvalReport report;
  report.c = topics.size();
  report.n = corpus.num_docs();
  if (corpus.labels) report.acc = clustering_accuracy(predicted, *corpus.labels);
  const auto sets = document_sets(corpus);
  for (const auto& words : topics) {
    const std::size_t m = std::min(config.top_m, words.size());
    const auto coh = coherence(std::span(words.data(), m), sets, config);
    report.coherence.push_back(coh.value);
    report.skipped_pairs += coh.skipped_pairs;
  }
  if (!report.coherence.empty()) {
    report.coherence_mean = std::accumulate(report.coherence.begin(), report.coherence.end(), 0.0) /
                            static_cast<double>(report.coherence.size());
  }
  report.simcount = similarity_count(topics, topics.size());
  return report;
}

}  // namespace dtm
