#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "pairrank/common.hpp"
#include "pairrank/kernel.hpp"
#include "pairrank/losses.hpp"

namespace pairrank {

using IndexPair = std::pair<int, int>;

// All unordered pairs (i, j), i < j, in lexicographic order; with max_pairs > 0
// and fewer than all pairs requested, a seeded uniform subset (still sorted).
std::vector<IndexPair> enumerate_pairs(int n, long max_pairs = 0, std::uint64_t seed = 1);

// f(x, x') = sum_k alpha_k K((p_k), (x, x')) with p_k = (points[i_k], points[j_k]).
struct RankingModel {
  double sigma = 1.0;
  double lambda = 1.0;
  LossSpec loss;
  Eigen::MatrixXd points;  // training inputs, one per row
  std::vector<IndexPair> pairs;
  Eigen::VectorXd alpha;
  double rkhs_norm_sq = 0.0;

  double predict(const Point& x, const Point& x_prime) const;
  double predict(const PointPair& p) const { return predict(p.first, p.second); }
  double predict_truncated(const Point& x, const Point& x_prime) const;
  // F(a, b) = f(row a, row b) for every pair of rows of eval_points.
  Eigen::MatrixXd predict_matrix(const Eigen::MatrixXd& eval_points) const;
  std::vector<PointPair> support_pairs() const;
  PairFunction as_function(bool truncated) const;

  // Line-oriented text with 17 significant digits; round trips bit-exactly.
  void save(std::ostream& out) const;
  static RankingModel load(std::istream& in);
  void save(const std::string& path) const;
  static RankingModel load(const std::string& path);
};

struct SolverOptions {
  long max_pairs = 0;
  std::uint64_t pair_seed = 1;
  double tol_gap = 1e-6;
  long max_epochs = 20000;
  std::size_t gram_cap_bytes = kDefaultGramCapBytes;
  // Square loss: dense Cholesky up to this many variables, conjugate gradients beyond.
  int dense_limit = 1500;
  double cg_rel_tol = 1e-12;
};

struct FitReport {
  double objective = 0.0;
  double duality_gap = 0.0;  // hinge
  double residual = 0.0;     // square: relative stationarity residual
  double jitter = 0.0;
  long iterations = 0;
  bool converged = false;
  long num_pairs = 0;        // unordered pairs in the empirical risk
  std::vector<double> dual_history;  // hinge: dual objective after each epoch
};

struct FitResult {
  RankingModel model;
  FitReport report;
};

FitResult fit_square(const Dataset& data, double sigma, double lambda,
                     const SolverOptions& options = {});
FitResult fit_hinge(const Dataset& data, double sigma, double lambda,
                    const SolverOptions& options = {});
FitResult fit(const Dataset& data, const LossSpec& loss, double sigma, double lambda,
              const SolverOptions& options = {});

// Empirical phi-risk over all ordered pairs i != j plus lambda ||f||^2.
double objective(const RankingModel& model, const Dataset& data);

}  // namespace pairrank
