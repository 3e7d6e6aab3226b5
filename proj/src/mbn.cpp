#include "dtm/mbn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "dtm/error.hpp"
#include "dtm/keyvalue.hpp"
#include "dtm/parallel.hpp"
#include "dtm/seed.hpp"

namespace dtm {

std::string to_string(Similarity s) { return s == Similarity::kCosine ? "cosine" : "dot"; }

Similarity similarity_from_string(const std::string& s) {
  if (s == "cosine") return Similarity::kCosine;
  if (s == "dot") return Similarity::kDot;
  throw InputError("unknown similarity '" + s + "'");
}

void MbnConfig::validate() const {
  if (V < 1) throw InputError("mbn: V must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("mbn: delta must lie in (0, 1)");
  if (c < 2) throw InputError("mbn: c must be >= 2");
  if (k_top_override && *k_top_override < 2) throw InputError("mbn: k_top_override must be >= 2");
}

KSchedule build_schedule(std::size_t n, const MbnConfig& config) {
  config.validate();
  const std::size_t k_top =
      config.k_top_override ? *config.k_top_override : static_cast<std::size_t>(std::ceil(1.5 * config.c));
  if (n < 4) throw InputError("mbn: need at least 4 documents, got " + std::to_string(n));
  if (n < 2 * k_top) {
    throw InputError("mbn: N = " + std::to_string(n) + " is too small for a top layer of k = " +
                     std::to_string(k_top) + "; the first layer has k_1 = floor(N/2) and every layer must keep k >= k_top, so N >= " +
                     std::to_string(2 * k_top) + " is required");
  }
  KSchedule s;
  s.ks.push_back(n / 2);
  for (;;) {
    const auto next = static_cast<std::size_t>(std::floor(config.delta * static_cast<double>(s.ks.back())));
    if (next < k_top) break;
    s.ks.push_back(next);
  }
  if (s.ks.back() > k_top) s.ks.push_back(k_top);
  return s;
}

// ---------------------------------------------------------------------------
// Nearest-centroid rule

namespace {

std::size_t argmax_first(std::span<const double> sims) {
  std::size_t best = 0;
  double best_sim = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < sims.size(); ++j) {
    if (sims[j] > best_sim) {
      best_sim = sims[j];
      best = j;
    }
  }
  return best;
}

double cosine_from_dot(double dot, double norm_a, double norm_b) {
  if (norm_a == 0.0 || norm_b == 0.0) return 0.0;
  return dot / (norm_a * norm_b);
}

}  // namespace

std::size_t one_nn_assign(std::span<const double> x, const DenseMatrix& centroids, Similarity metric) {
  if (centroids.cols() != x.size()) {
    throw DimensionError("one_nn_assign: vector of length " + std::to_string(x.size()) + " vs centroids " +
                         shape_string(centroids.rows(), centroids.cols()));
  }
  if (centroids.rows() == 0) throw DimensionError("one_nn_assign: no centroids");
  double xn = 0.0;
  for (double v : x) xn += v * v;
  xn = std::sqrt(xn);
  std::vector<double> sims(centroids.rows());
  for (std::size_t j = 0; j < centroids.rows(); ++j) {
    auto c = centroids.row(j);
    double dot = 0.0, cn = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      dot += x[i] * c[i];
      cn += c[i] * c[i];
    }
    sims[j] = metric == Similarity::kCosine ? cosine_from_dot(dot, xn, std::sqrt(cn)) : dot;
  }
  return argmax_first(sims);
}

std::size_t one_nn_assign(const SparseMatrix& inputs, std::size_t column, const SparseMatrix& centroids,
                          Similarity metric) {
  if (inputs.rows() != centroids.rows()) {
    throw DimensionError("one_nn_assign: inputs " + shape_string(inputs.rows(), inputs.cols()) +
                         " vs centroids " + shape_string(centroids.rows(), centroids.cols()));
  }
  if (centroids.cols() == 0) throw DimensionError("one_nn_assign: no centroids");
  const double xn = inputs.col_norm(column);
  std::vector<double> sims(centroids.cols());
  for (std::size_t j = 0; j < centroids.cols(); ++j) {
    const double dot = sparse_col_dot(inputs, column, centroids, j);
    sims[j] = metric == Similarity::kCosine ? cosine_from_dot(dot, xn, centroids.col_norm(j)) : dot;
  }
  return argmax_first(sims);
}

// ---------------------------------------------------------------------------
// Layers

SparseMatrix MbnLayer::output() const {
  const std::size_t n = num_docs();
  const std::size_t v_count = V();
  std::vector<std::size_t> ptr(n + 1);
  for (std::size_t d = 0; d <= n; ++d) ptr[d] = d * v_count;
  std::vector<Index> idx(n * v_count);
  for (std::size_t d = 0; d < n; ++d)
    for (std::size_t v = 0; v < v_count; ++v)
      idx[d * v_count + v] = static_cast<Index>(v * k + assignments[v][d]);
  return SparseMatrix::from_csc(v_count * k, n, std::move(ptr), std::move(idx),
                                std::vector<double>(n * v_count, 1.0));
}

void assign_layer(const SparseMatrix& input, MbnLayer& layer, std::size_t jobs) {
  const std::size_t n = input.cols();
  const std::size_t v_count = layer.centroids.size();
  // Row-major view: postings[f] lists the documents carrying feature f.
  const SparseMatrix postings = input.transpose();
  std::vector<double> norms(n);
  for (std::size_t d = 0; d < n; ++d) norms[d] = input.col_norm(d);

  layer.assignments.assign(v_count, std::vector<std::uint32_t>(n, 0));
  // Each document gets its full similarity row (accumulated feature by
  // feature in ascending order, the same summation order as sparse_col_dot),
  // then every clustering picks its best centroid from that row.
  const std::size_t workers = std::min(jobs == 0 ? default_jobs() : jobs, std::max<std::size_t>(n, 1));
  parallel_for(workers, workers, [&](std::size_t w) {
    std::vector<double> sims(n);
    const std::size_t begin = n * w / workers;
    const std::size_t end = n * (w + 1) / workers;
    for (std::size_t d = begin; d < end; ++d) {
      std::fill(sims.begin(), sims.end(), 0.0);
      auto feats = input.col_indices(d);
      auto vals = input.col_values(d);
      for (std::size_t p = 0; p < feats.size(); ++p) {
        auto docs = postings.col_indices(feats[p]);
        auto dvals = postings.col_values(feats[p]);
        for (std::size_t q = 0; q < docs.size(); ++q) sims[docs[q]] += vals[p] * dvals[q];
      }
      for (std::size_t v = 0; v < v_count; ++v) {
        const auto& cent = layer.centroids[v];
        std::uint32_t best = 0;
        double best_sim = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < cent.size(); ++j) {
          const double s = layer.metric == Similarity::kCosine
                               ? cosine_from_dot(sims[cent[j]], norms[d], norms[cent[j]])
                               : sims[cent[j]];
          if (s > best_sim) {
            best_sim = s;
            best = static_cast<std::uint32_t>(j);
          }
        }
        layer.assignments[v][d] = best;
      }
    }
  });
}

MbnLayer train_layer(const SparseMatrix& input, std::size_t k, std::size_t V, std::uint64_t layer_seed,
                     const LayerOptions& options) {
  const std::size_t n = input.cols();
  if (k == 0 || k > n) {
    throw InputError("train_layer: k = " + std::to_string(k) + " must lie in 1.." + std::to_string(n));
  }
  if (V == 0) throw InputError("train_layer: V must be >= 1");
  MbnLayer layer;
  layer.index = options.index;
  layer.k = k;
  layer.metric = options.metric;
  layer.centroids.resize(V);
  parallel_for(V, options.jobs, [&](std::size_t v) {
    std::mt19937_64 rng(derive_seed(layer_seed, {v}));
    std::vector<Index> pool(n);
    std::iota(pool.begin(), pool.end(), Index{0});
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(k);
    layer.centroids[v] = std::move(pool);
  });
  assign_layer(input, layer, options.jobs);
  return layer;
}

std::uint64_t layer_seed(std::uint64_t master, std::size_t layer) { return derive_seed(master, {layer}); }

// ---------------------------------------------------------------------------
// Model

SparseMatrix MbnModel::layer_input(std::size_t l) const {
  if (l >= layers.size()) throw DimensionError("layer index out of range");
  return l == 0 ? input : layers[l - 1].output();
}

SparseMatrix MbnModel::centroid_vectors(std::size_t l, std::size_t v) const {
  if (l >= layers.size() || v >= layers[l].V()) throw DimensionError("centroid set out of range");
  const auto& src = layers[l].centroids[v];
  std::vector<std::size_t> cols(src.begin(), src.end());
  return layer_input(l).select_cols(cols);
}

MbnModel train_mbn(const TfidfMatrix& d, const MbnConfig& config) { return train_mbn(d.matrix, config); }

MbnModel train_mbn(const SparseMatrix& d, const MbnConfig& config) {
  MbnModel model;
  model.config = config;
  model.schedule = build_schedule(d.cols(), config);
  model.input = d;
  const SparseMatrix* current = &model.input;
  SparseMatrix codes;
  for (std::size_t l = 0; l < model.schedule.layers(); ++l) {
    LayerOptions opts{l, l == 0 ? Similarity::kCosine : Similarity::kDot, config.jobs};
    model.layers.push_back(train_layer(*current, model.schedule.ks[l], config.V, layer_seed(config.seed, l), opts));
    codes = model.layers.back().output();
    current = &codes;
  }
  model.codes = std::move(codes);
  return model;
}

void save_mbn(const MbnModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  KeyValues m;
  m.set("V", model.config.V);
  m.set("delta", model.config.delta);
  m.set("c", model.config.c);
  m.set("k_top_override", model.config.k_top_override ? std::to_string(*model.config.k_top_override) : "none");
  m.set("seed", model.config.seed);
  m.set("seed.derivation", "layer_seed = derive_seed(seed, {layer}); clustering_seed = derive_seed(layer_seed, {v})");
  m.set("layers", model.schedule.layers());
  std::string ks;
  for (auto k : model.schedule.ks) ks += (ks.empty() ? "" : ",") + std::to_string(k);
  m.set("schedule", ks);
  write_matrix_market(dir / "input.mtx", model.input);
  for (const auto& layer : model.layers) {
    const std::string prefix = "layer." + std::to_string(layer.index);
    m.set(prefix + ".k", layer.k);
    m.set(prefix + ".metric", to_string(layer.metric));
    // Row v*k + j, column = source index of centroid j in clustering v.
    std::vector<Triplet> sel;
    sel.reserve(layer.V() * layer.k);
    for (std::size_t v = 0; v < layer.V(); ++v)
      for (std::size_t j = 0; j < layer.k; ++j)
        sel.push_back({static_cast<Index>(v * layer.k + j), layer.centroids[v][j], 1.0});
    const std::size_t n_src = layer.index == 0 ? model.input.cols() : layer.num_docs();
    write_matrix_market(dir / ("layer_" + std::to_string(layer.index) + "_centroids.mtx"),
                        SparseMatrix::from_triplets(layer.V() * layer.k, n_src, std::move(sel)));
  }
  write_matrix_market(dir / "codes.mtx", model.codes);
  m.write(dir / "manifest.txt");
}

namespace {

std::size_t to_count(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    auto v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw InputError("mbn manifest: bad value for " + key + ": '" + s + "'");
  }
}

}  // namespace

MbnModel load_mbn(const std::filesystem::path& dir, std::size_t jobs) {
  const auto m = KeyValues::read(dir / "manifest.txt");
  MbnModel model;
  model.config.V = to_count(m.require("V"), "V");
  model.config.delta = std::stod(m.require("delta"));
  model.config.c = to_count(m.require("c"), "c");
  if (auto o = m.require("k_top_override"); o != "none") model.config.k_top_override = to_count(o, "k_top_override");
  model.config.seed = std::stoull(m.require("seed"));
  model.config.jobs = jobs;
  const std::size_t n_layers = to_count(m.require("layers"), "layers");
  model.input = read_matrix_market_sparse(dir / "input.mtx");
  model.schedule = build_schedule(model.input.cols(), model.config);
  if (model.schedule.layers() != n_layers) throw InputError("mbn manifest: layer count disagrees with schedule");

  SparseMatrix current = model.input;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const std::string prefix = "layer." + std::to_string(l);
    MbnLayer layer;
    layer.index = l;
    layer.k = to_count(m.require(prefix + ".k"), prefix + ".k");
    layer.metric = similarity_from_string(m.require(prefix + ".metric"));
    const auto sel = read_matrix_market_sparse(dir / ("layer_" + std::to_string(l) + "_centroids.mtx"));
    if (sel.rows() != model.config.V * layer.k) throw InputError("centroid file shape disagrees with manifest");
    layer.centroids.assign(model.config.V, std::vector<Index>(layer.k, 0));
    const auto t = sel.triplets();
    if (t.size() != sel.rows()) throw InputError("centroid file must select one source per centroid");
    for (const auto& e : t) layer.centroids[e.row / layer.k][e.row % layer.k] = e.col;
    assign_layer(current, layer, jobs);
    current = layer.output();
    model.layers.push_back(std::move(layer));
  }
  model.codes = std::move(current);
  if (!(model.codes == read_matrix_market_sparse(dir / "codes.mtx"))) {
    throw InputError(dir.string() + ": recomputed top-layer codes differ from codes.mtx");
  }
  return model;
}

}  // namespace dtm
