#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dtm/corpus.hpp"
#include "dtm/sparse.hpp"
#include "dtm/spectral.hpp"

namespace dtm {

enum class LambdaMode {
  kRelative,  // λ_eff = λ·‖W·d‖∞
  kAbsolute,  // λ_eff = λ
};

std::string to_string(LambdaMode m);
LambdaMode lambda_mode_from_string(const std::string& s);

struct LassoConfig {
  double lambda = 1.0 / 3.0;
  LambdaMode lambda_mode = LambdaMode::kRelative;
  double rho = 1.0;
  double abs_tol = 1e-4;
  double rel_tol = 1e-2;
  std::size_t max_iters = 1000;
  /// Clamp the z-update at zero (experimental; off by default).
  bool nonnegative = false;
  std::size_t jobs = 0;

  void validate() const;
};

std::vector<double> soft_threshold(std::span<const double> x, double t);

struct LassoRowResult {
  std::vector<double> coef;
  std::size_t iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double lambda_eff = 0.0;
  bool converged = false;
};

/// Factored ADMM system for a fixed design W (c × N): holds W·Wᵀ and the
/// Cholesky factor of W·Wᵀ + ρI so it can be shared by every row.
class LassoSystem {
 public:
  LassoSystem(const DenseMatrix& w, const LassoConfig& config);

  std::size_t topics() const noexcept { return gram_.rows(); }
  const DenseMatrix& gram() const noexcept { return gram_; }
  const LassoConfig& config() const noexcept { return config_; }

  /// Solves one row given q = W·d.
  LassoRowResult solve(std::span<const double> q) const;

 private:
  LassoConfig config_;
  DenseMatrix gram_;    // W·Wᵀ
  DenseMatrix factor_;  // chol(W·Wᵀ + ρI)
};

/// min_x ½‖x·W − d‖² + λ_eff‖x‖₁ by ADMM. A row that reaches max_iters is
/// returned with converged = false.
LassoRowResult lasso_row(const DenseMatrix& w, std::span<const double> d, const LassoConfig& config);

double lasso_objective(const DenseMatrix& w, std::span<const double> d, std::span<const double> x, double lambda);

/// Largest violation of the Lasso subgradient conditions at x: for zero
/// coefficients max(0, |g| − λ), for nonzero ones |g + λ·sign(x)|, where
/// g = W·(x·W − d)ᵀ.
double kkt_violation(const DenseMatrix& w, std::span<const double> d, std::span<const double> x, double lambda);

struct TopicWordMatrix {
  DenseMatrix C;  // v × c
  std::vector<std::size_t> iterations;
  std::vector<double> primal_residual;
  std::vector<double> dual_residual;
  std::vector<double> lambda_eff;
  std::vector<std::uint8_t> converged;

  std::size_t num_converged() const;
};

/// Row i of C solves lasso_row(W, D(i,:)). W·Wᵀ + ρI is factored once.
TopicWordMatrix solve_topic_words(const DocTopicMatrix& w, const TfidfMatrix& d, const LassoConfig& config);
TopicWordMatrix solve_topic_words(const DenseMatrix& w, const SparseMatrix& d, const LassoConfig& config);

struct TopWords {
  std::vector<std::vector<std::size_t>> words;  // per topic, vocabulary indices
  std::vector<std::uint8_t> degenerate;         // column was all zero

  /// The ranked words of topic g as strings.
  std::vector<std::string> named(std::size_t g, const std::vector<std::string>& vocabulary) const;
};

/// Words ranked by signed C(i, g), descending; ties by vocabulary index.
TopWords top_words(const DenseMatrix& c, std::size_t m);

/// One block per topic: a "topic <g>" line, then one word per line, then a blank line.
std::string format_topic_words(const TopWords& top, const std::vector<std::string>& vocabulary);

}  // namespace dtm
