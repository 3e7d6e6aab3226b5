#pragma once

// Reference implementations used only by tests. They take the slow, obvious
// route and share no code with the library paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "dtm/sparse.hpp"

namespace dtm::oracle {

using Dense = std::vector<std::vector<double>>;

inline Dense to_rows(const DenseMatrix& m) {
  Dense out(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

inline Dense triple_loop(const Dense& a, const Dense& b) {
  const std::size_t n = a.size(), k = b.size(), m = b.empty() ? 0 : b[0].size();
  Dense out(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t p = 0; p < k; ++p) out[i][j] += a[i][p] * b[p][j];
  return out;
}

inline Dense random_dense(std::size_t rows, std::size_t cols, double density, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> value(0.0, 1.0);
  Dense out(rows, std::vector<double>(cols, 0.0));
  for (auto& r : out)
    for (auto& x : r)
      if (unit(rng) < density) x = value(rng);
  return out;
}

inline DenseMatrix from_rows(const Dense& rows) {
  DenseMatrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  return m;
}

/// Cyclic coordinate descent for min ½‖xW − d‖² + λ‖x‖₁ (W is c × N), run
/// until the largest coordinate change falls below tol.
inline std::vector<double> lasso_cd(const Dense& w, const std::vector<double>& d, double lambda, double tol = 1e-13,
                                    std::size_t max_sweeps = 1000000) {
  const std::size_t c = w.size(), n = d.size();
  std::vector<double> x(c, 0.0), r(d);  // r = d − xW
  std::vector<double> col_sq(c, 0.0);
  for (std::size_t g = 0; g < c; ++g)
    for (std::size_t j = 0; j < n; ++j) col_sq[g] += w[g][j] * w[g][j];
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double biggest = 0.0;
    for (std::size_t g = 0; g < c; ++g) {
      if (col_sq[g] == 0.0) continue;
      double rho = 0.0;
      for (std::size_t j = 0; j < n; ++j) rho += w[g][j] * (r[j] + x[g] * w[g][j]);
      double nx = 0.0;
      if (rho > lambda) nx = (rho - lambda) / col_sq[g];
      else if (rho < -lambda) nx = (rho + lambda) / col_sq[g];
      const double delta = nx - x[g];
      if (delta != 0.0) {
        for (std::size_t j = 0; j < n; ++j) r[j] -= delta * w[g][j];
        x[g] = nx;
      }
      biggest = std::max(biggest, std::abs(delta));
    }
    if (biggest < tol) break;
  }
  return x;
}

inline double lasso_objective(const Dense& w, const std::vector<double>& d, const std::vector<double>& x,
                              double lambda) {
  double loss = 0.0, l1 = 0.0;
  for (std::size_t j = 0; j < d.size(); ++j) {
    double pred = 0.0;
    for (std::size_t g = 0; g < w.size(); ++g) pred += x[g] * w[g][j];
    loss += (pred - d[j]) * (pred - d[j]);
  }
  for (double v : x) l1 += std::abs(v);
  return 0.5 * loss + lambda * l1;
}

/// Maximum over all permutations of the cluster→class mapping.
inline double accuracy_brute_force(const std::vector<std::uint32_t>& pred, const std::vector<std::uint32_t>& gold) {
  std::uint32_t k = 0;
  for (auto p : pred) k = std::max(k, p + 1);
  for (auto g : gold) k = std::max(k, g + 1);
  std::vector<std::uint32_t> perm(k);
  std::iota(perm.begin(), perm.end(), 0u);
  std::size_t best = 0;
  do {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hit += perm[pred[i]] == gold[i];
    best = std::max(best, hit);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(pred.size());
}

/// Exhaustive nearest-centroid scan; ties go to the first index.
inline std::size_t nearest_scan(const std::vector<double>& x, const Dense& centroids, bool cosine) {
  std::size_t best = 0;
  double best_sim = -1e300;
  double xn = 0.0;
  for (double v : x) xn += v * v;
  for (std::size_t j = 0; j < centroids.size(); ++j) {
    double dot = 0.0, cn = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      dot += x[i] * centroids[j][i];
      cn += centroids[j][i] * centroids[j][i];
    }
    double s = dot;
    if (cosine) s = (xn == 0.0 || cn == 0.0) ? 0.0 : dot / (std::sqrt(xn) * std::sqrt(cn));
    if (s > best_sim) {
      best_sim = s;
      best = j;
    }
  }
  return best;
}

/// True when two labelings induce the same partition.
inline bool same_partition(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j)
      if ((a[i] == a[j]) != (b[i] == b[j])) return false;
  return true;
}

}  // namespace dtm::oracle
