#include "dtm/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "dtm/error.hpp"
#include "dtm/parallel.hpp"
#include "dtm/seed.hpp"

namespace dtm {

std::string to_string(WMode m) { return m == WMode::kHard ? "hard" : "embed"; }

WMode wmode_from_string(const std::string& s) {
  if (s == "hard") return WMode::kHard;
  if (s == "embed") return WMode::kEmbed;
  throw InputError("unknown W mode '" + s + "' (expected hard or embed)");
}

void SpectralConfig::validate() const {
  if (c < 2) throw InputError("spectral: c must be >= 2");
  if (kmeans_restarts < 1) throw InputError("spectral: kmeans_restarts must be >= 1");
  if (kmeans_max_iters < 1) throw InputError("spectral: kmeans_max_iters must be >= 1");
}

DenseMatrix gram(const SparseMatrix& codes, std::size_t jobs) {
  const std::size_t n = codes.cols();
  if (n == 0) throw DimensionError("gram: codes matrix has no columns");
  const SparseMatrix postings = codes.transpose();
  DenseMatrix k(n, n);
  parallel_for(n, jobs, [&](std::size_t i) {
    auto row = k.row(i);
    auto feats = codes.col_indices(i);
    auto vals = codes.col_values(i);
    for (std::size_t p = 0; p < feats.size(); ++p) {
      auto docs = postings.col_indices(feats[p]);
      auto dvals = postings.col_values(feats[p]);
      for (std::size_t q = 0; q < docs.size(); ++q) row[docs[q]] += vals[p] * dvals[q];
    }
  });
  return k;
}

// ---------------------------------------------------------------------------
// k-means

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

KMeansResult kmeans_once(const DenseMatrix& x, std::size_t k, std::size_t max_iters, std::uint64_t seed) {
  const std::size_t n = x.rows();
  const std::size_t dim = x.cols();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // k-means++ seeding.
  DenseMatrix cent(k, dim);
  std::vector<double> best_d2(n, std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(n, false);
  std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t pick = first;
    if (c > 0) {
      double total = 0.0;
      for (double d : best_d2) total += d;
      if (total > 0.0) {
        double r = unit(rng) * total;
        pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
          r -= best_d2[i];
          if (r < 0.0 && best_d2[i] > 0.0) {
            pick = i;
            break;
          }
        }
      } else {
        // Every point coincides with a chosen centre.
        pick = 0;
        while (pick + 1 < n && chosen[pick]) ++pick;
      }
    }
    chosen[pick] = true;
    std::copy_n(x.row(pick).begin(), dim, cent.row(c).begin());
    for (std::size_t i = 0; i < n; ++i) best_d2[i] = std::min(best_d2[i], sq_dist(x.row(i), cent.row(c)));
  }

  std::vector<std::uint32_t> labels(n, 0);
  std::vector<double> dist(n, 0.0);
  std::vector<std::size_t> sizes(k, 0);
  auto assign = [&] {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = sq_dist(x.row(i), cent.row(c));
        if (d < bd) {
          bd = d;
          best = static_cast<std::uint32_t>(c);
        }
      }
      changed |= labels[i] != best;
      labels[i] = best;
      dist[i] = bd;
    }
    return changed;
  };
  auto update = [&] {
    std::fill(sizes.begin(), sizes.end(), 0);
    DenseMatrix sum(k, dim);
    for (std::size_t i = 0; i < n; ++i) {
      ++sizes[labels[i]];
      auto s = sum.row(labels[i]);
      auto r = x.row(i);
      for (std::size_t j = 0; j < dim; ++j) s[j] += r[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] == 0) continue;
      for (std::size_t j = 0; j < dim; ++j) cent(c, j) = sum(c, j) / static_cast<double>(sizes[c]);
    }
  };
  auto reseed_empty = [&] {
    bool reseeded = false;
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      std::size_t far = 0;
      double fd = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[labels[i]] > 1 && dist[i] > fd) {
          fd = dist[i];
          far = i;
        }
      }
      --sizes[labels[far]];
      labels[far] = static_cast<std::uint32_t>(c);
      sizes[c] = 1;
      dist[far] = 0.0;
      std::copy_n(x.row(far).begin(), dim, cent.row(c).begin());
      reseeded = true;
    }
    return reseeded;
  };

  assign();
  for (std::size_t it = 0; it < max_iters; ++it) {
    update();
    const bool reseeded = reseed_empty();
    if (reseeded) update();
    const bool changed = assign();
    if (!changed && !reseeded) break;
  }
  // Final pass: keep every cluster non-empty when n >= k.
  std::fill(sizes.begin(), sizes.end(), 0);
  for (auto l : labels) ++sizes[l];
  reseed_empty();

  KMeansResult out;
  out.labels = std::move(labels);
  out.centroids = std::move(cent);
  for (std::size_t i = 0; i < n; ++i) out.inertia += sq_dist(x.row(i), out.centroids.row(out.labels[i]));
  return out;
}

}  // namespace

KMeansResult kmeans(const DenseMatrix& points, std::size_t k, std::size_t restarts, std::size_t max_iters,
                    std::uint64_t seed, std::size_t jobs) {
  if (k == 0 || k > points.rows()) {
    throw InputError("kmeans: k = " + std::to_string(k) + " with " + std::to_string(points.rows()) + " points");
  }
  restarts = std::max<std::size_t>(restarts, 1);
  std::vector<KMeansResult> runs(restarts);
  parallel_for(restarts, jobs, [&](std::size_t r) {
    runs[r] = kmeans_once(points, k, max_iters, derive_seed(seed, {r}));
    runs[r].restart = r;
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < restarts; ++r)
    if (runs[r].inertia < runs[best].inertia) best = r;
  return std::move(runs[best]);
}

// ---------------------------------------------------------------------------
// Spectral clustering

DenseMatrix spectral_embedding(const DenseMatrix& kernel, std::size_t c) {
  const std::size_t n = kernel.rows();
  if (kernel.cols() != n) throw DimensionError("spectral: kernel " + shape_string(n, kernel.cols()) + " is not square");
  if (c > n) {
    throw InputError("spectral: c = " + std::to_string(c) + " exceeds the number of documents " + std::to_string(n));
  }
  std::vector<double> inv_sqrt_deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double a = kernel(i, j);
      if (a < 0.0) throw InputError("spectral: kernel has a negative entry at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
      deg += a;
    }
    if (deg > 0.0) inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
  }
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = inv_sqrt_deg[i] * kernel(i, j) * inv_sqrt_deg[j];
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  auto eig = sym_eigs_topk(m, c);
  DenseMatrix emb = std::move(eig.vectors);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = emb.row(i);
    double s = 0.0;
    for (double v : row) s += v * v;
    // Degree-zero documents have exact-zero rows; leave them at zero.
    if (inv_sqrt_deg[i] == 0.0 || s == 0.0) {
      std::fill(row.begin(), row.end(), 0.0);
      continue;
    }
    const double norm = std::sqrt(s);
    for (double& v : row) v /= norm;
  }
  return emb;
}

DocTopicMatrix spectral_cluster(const DenseMatrix& kernel, const SpectralConfig& config) {
  config.validate();
  const std::size_t n = kernel.rows();
  DenseMatrix emb = spectral_embedding(kernel, config.c);
  DocTopicMatrix out;
  out.mode = config.mode;
  if (config.mode == WMode::kEmbed) {
    out.W = emb.transpose();
    return out;
  }
  const auto km = kmeans(emb, config.c, config.kmeans_restarts, config.kmeans_max_iters, config.seed, config.jobs);
  out.W = DenseMatrix(config.c, n);
  for (std::size_t d = 0; d < n; ++d) out.W(km.labels[d], d) = 1.0;
  return out;
}

std::vector<std::uint32_t> hard_labels(const DocTopicMatrix& w) {
  std::vector<std::uint32_t> labels(w.docs(), 0);
  for (std::size_t d = 0; d < w.docs(); ++d) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < w.topics(); ++g) {
      if (w.W(g, d) > best) {
        best = w.W(g, d);
        labels[d] = static_cast<std::uint32_t>(g);
      }
    }
  }
  return labels;
}

}  // namespace dtm
