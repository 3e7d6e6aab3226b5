#include "dtm/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dtm/error.hpp"
#include "dtm/parallel.hpp"

namespace dtm {

std::string to_string(LambdaMode m) { return m == LambdaMode::kRelative ? "relative" : "absolute"; }

LambdaMode lambda_mode_from_string(const std::string& s) {
  if (s == "relative") return LambdaMode::kRelative;
  if (s == "absolute") return LambdaMode::kAbsolute;
  throw InputError("unknown lambda mode '" + s + "' (expected relative or absolute)");
}

void LassoConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InputError("lasso: lambda must be >= 0");
  if (!(rho > 0.0)) throw InputError("lasso: rho must be > 0");
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw InputError("lasso: tolerances must be > 0");
  if (max_iters < 1) throw InputError("lasso: max_iters must be >= 1");
}

std::vector<double> soft_threshold(std::span<const double> x, double t) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::abs(x[i]) - t;
    out[i] = a > 0.0 ? std::copysign(a, x[i]) : 0.0;
  }
  return out;
}

namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

DenseMatrix outer_gram(const DenseMatrix& w) {
  const std::size_t c = w.rows();
  DenseMatrix g(c, c);
  for (std::size_t a = 0; a < c; ++a) {
    for (std::size_t b = a; b < c; ++b) {
      double s = 0.0;
      auto ra = w.row(a);
      auto rb = w.row(b);
      for (std::size_t d = 0; d < ra.size(); ++d) s += ra[d] * rb[d];
      g(a, b) = s;
      g(b, a) = s;
    }
  }
  return g;
}

// q = W·d, skipping zero entries of d so that dense and sparse rows sum the
// same terms in the same order.
std::vector<double> design_times(const DenseMatrix& w, std::span<const double> d) {
  std::vector<double> q(w.rows(), 0.0);
  for (std::size_t j = 0; j < d.size(); ++j) {
    if (d[j] == 0.0) continue;
    for (std::size_t g = 0; g < w.rows(); ++g) q[g] += w(g, j) * d[j];
  }
  return q;
}

}  // namespace

LassoSystem::LassoSystem(const DenseMatrix& w, const LassoConfig& config)
    : config_(config), gram_(outer_gram(w)) {
  config_.validate();
  DenseMatrix shifted = gram_;
  for (std::size_t g = 0; g < shifted.rows(); ++g) shifted(g, g) += config_.rho;
  factor_ = cholesky(shifted);
}

LassoRowResult LassoSystem::solve(std::span<const double> q) const {
  const std::size_t c = topics();
  if (q.size() != c) throw DimensionError("lasso: W·d has length " + std::to_string(q.size()) + ", expected " + std::to_string(c));
  LassoRowResult res;
  double q_inf = 0.0;
  double q_max = 0.0;
  for (double v : q) {
    q_inf = std::max(q_inf, std::abs(v));
    q_max = std::max(q_max, v);
  }
  res.lambda_eff = config_.lambda_mode == LambdaMode::kRelative ? config_.lambda * q_inf : config_.lambda;
  res.coef.assign(c, 0.0);

  // x = 0 is optimal exactly when every |W(g,:)·d| <= λ_eff (only the
  // positive side matters under the nonnegativity clamp).
  if ((config_.nonnegative ? q_max : q_inf) <= res.lambda_eff) {
    res.converged = true;
    return res;
  }

  const double rho = config_.rho;
  const double kappa = res.lambda_eff / rho;
  const double sqrt_c = std::sqrt(static_cast<double>(c));
  std::vector<double> x(c, 0.0), z(c, 0.0), u(c, 0.0), z_old(c), rhs(c), diff(c);
  for (std::size_t it = 1; it <= config_.max_iters; ++it) {
    for (std::size_t g = 0; g < c; ++g) rhs[g] = q[g] + rho * (z[g] - u[g]);
    cholesky_solve(factor_, rhs);
    x = rhs;
    z_old = z;
    for (std::size_t g = 0; g < c; ++g) {
      const double v = x[g] + u[g];
      const double a = std::abs(v) - kappa;
      double zg = a > 0.0 ? std::copysign(a, v) : 0.0;
      if (config_.nonnegative && zg < 0.0) zg = 0.0;
      z[g] = zg;
    }
    for (std::size_t g = 0; g < c; ++g) u[g] += x[g] - z[g];

    for (std::size_t g = 0; g < c; ++g) diff[g] = x[g] - z[g];
    res.primal_residual = norm2(diff);
    for (std::size_t g = 0; g < c; ++g) diff[g] = rho * (z[g] - z_old[g]);
    res.dual_residual = norm2(diff);
    res.iterations = it;

    const double eps_pri = sqrt_c * config_.abs_tol + config_.rel_tol * std::max(norm2(x), norm2(z));
    const double eps_dual = sqrt_c * config_.abs_tol + config_.rel_tol * rho * norm2(u);
    if (res.primal_residual <= eps_pri && res.dual_residual <= eps_dual) {
      res.converged = true;
      break;
    }
  }
  res.coef = z;
  return res;
}

LassoRowResult lasso_row(const DenseMatrix& w, std::span<const double> d, const LassoConfig& config) {
  if (w.cols() != d.size()) {
    throw DimensionError("lasso_row: W is " + shape_string(w.rows(), w.cols()) + " but d has length " +
                         std::to_string(d.size()));
  }
  LassoSystem system(w, config);
  return system.solve(design_times(w, d));
}

double lasso_objective(const DenseMatrix& w, std::span<const double> d, std::span<const double> x, double lambda) {
  double loss = 0.0;
  for (std::size_t j = 0; j < w.cols(); ++j) {
    double pred = 0.0;
    for (std::size_t g = 0; g < w.rows(); ++g) pred += x[g] * w(g, j);
    const double r = pred - d[j];
    loss += r * r;
  }
  double l1 = 0.0;
  for (double v : x) l1 += std::abs(v);
  return 0.5 * loss + lambda * l1;
}

double kkt_violation(const DenseMatrix& w, std::span<const double> d, std::span<const double> x, double lambda) {
  std::vector<double> r(w.cols(), 0.0);
  for (std::size_t j = 0; j < w.cols(); ++j) {
    double pred = 0.0;
    for (std::size_t g = 0; g < w.rows(); ++g) pred += x[g] * w(g, j);
    r[j] = pred - d[j];
  }
  double worst = 0.0;
  for (std::size_t g = 0; g < w.rows(); ++g) {
    double grad = 0.0;
    for (std::size_t j = 0; j < w.cols(); ++j) grad += w(g, j) * r[j];
    const double v = x[g] == 0.0 ? std::max(0.0, std::abs(grad) - lambda)
                                 : std::abs(grad + lambda * (x[g] > 0.0 ? 1.0 : -1.0));
    worst = std::max(worst, v);
  }
  return worst;
}

std::size_t TopicWordMatrix::num_converged() const {
  return static_cast<std::size_t>(std::count(converged.begin(), converged.end(), std::uint8_t{1}));
}

TopicWordMatrix solve_topic_words(const DocTopicMatrix& w, const TfidfMatrix& d, const LassoConfig& config) {
  return solve_topic_words(w.W, d.matrix, config);
}

TopicWordMatrix solve_topic_words(const DenseMatrix& w, const SparseMatrix& d, const LassoConfig& config) {
  if (w.cols() != d.cols()) {
    throw DimensionError("solve_topic_words: W is " + shape_string(w.rows(), w.cols()) + " but D is " +
                         shape_string(d.rows(), d.cols()));
  }
  const LassoSystem system(w, config);
  const SparseMatrix rows = d.transpose();  // column i = row i of D
  const std::size_t v = d.rows();
  const std::size_t c = w.rows();
  TopicWordMatrix out;
  out.C = DenseMatrix(v, c);
  out.iterations.assign(v, 0);
  out.primal_residual.assign(v, 0.0);
  out.dual_residual.assign(v, 0.0);
  out.lambda_eff.assign(v, 0.0);
  out.converged.assign(v, 0);
  parallel_for(v, config.jobs, [&](std::size_t i) {
    std::vector<double> q(c, 0.0);
    auto docs = rows.col_indices(i);
    auto vals = rows.col_values(i);
    for (std::size_t p = 0; p < docs.size(); ++p)
      for (std::size_t g = 0; g < c; ++g) q[g] += w(g, docs[p]) * vals[p];
    auto r = system.solve(q);
    std::copy(r.coef.begin(), r.coef.end(), out.C.row(i).begin());
    out.iterations[i] = r.iterations;
    out.primal_residual[i] = r.primal_residual;
    out.dual_residual[i] = r.dual_residual;
    out.lambda_eff[i] = r.lambda_eff;
    out.converged[i] = r.converged ? 1 : 0;
  });
  return out;
}

std::vector<std::string> TopWords::named(std::size_t g, const std::vector<std::string>& vocabulary) const {
  std::vector<std::string> out;
  for (auto i : words.at(g)) out.push_back(vocabulary.at(i));
  return out;
}

TopWords top_words(const DenseMatrix& c, std::size_t m) {
  const std::size_t v = c.rows();
  if (m > v) throw InputError("top_words: m = " + std::to_string(m) + " exceeds vocabulary size " + std::to_string(v));
  TopWords out;
  out.words.resize(c.cols());
  out.degenerate.assign(c.cols(), 0);
  std::vector<std::size_t> order(v);
  for (std::size_t g = 0; g < c.cols(); ++g) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        return c(a, g) != c(b, g) ? c(a, g) > c(b, g) : a < b;
                      });
    out.words[g].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
    bool all_zero = true;
    for (std::size_t i = 0; i < v && all_zero; ++i) all_zero = c(i, g) == 0.0;
    out.degenerate[g] = all_zero ? 1 : 0;
  }
  return out;
}

std::string format_topic_words(const TopWords& top, const std::vector<std::string>& vocabulary) {
  std::string out;
  for (std::size_t g = 0; g < top.words.size(); ++g) {
    out += "topic " + std::to_string(g);
    if (top.degenerate[g]) out += " (all-zero column)";
    out += '\n';
    for (const auto& w : top.named(g, vocabulary)) out += w + '\n';
    out += '\n';
  }
  return out;
}

}  // namespace dtm
