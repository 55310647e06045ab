#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "pairrank/common.hpp"

namespace pairrank {

struct KernelParams {
  double sigma = 1.0;
};

using PointKernel = std::function<double(const Point&, const Point&)>;
using PairKernel = std::function<double(const PointPair&, const PointPair&)>;

// Squared Euclidean distance accumulated in long double.
double squared_distance(const Point& a, const Point& b);

// exp(-||a - b||^2 / sigma^2) on R^d.
double point_gaussian(const Point& a, const Point& b, double sigma);

// Gaussian kernel on R^{2d}, pairs stacked as (first, second).
double gaussian_rbf(const PointPair& a, const PointPair& b, const KernelParams& params);

// Skew-symmetrized Gaussian on pairs: half of rbf(a, b) minus half of rbf(swap(a), b).
double pairwise_gaussian(const PointPair& a, const PointPair& b, const KernelParams& params);

// <G_{a1} - G_{a2}, G_{b1} - G_{b2}> for a symmetric base kernel G on points.
double kronecker_pairwise(const PointKernel& base, const PointPair& a, const PointPair& b);

double skew_part(const PairKernel& base, const PointPair& a, const PointPair& b);
double sym_part(const PairKernel& base, const PointPair& a, const PointPair& b);

inline constexpr std::size_t kDefaultGramCapBytes = std::size_t{1} << 30;

class GramMatrix {
 public:
  GramMatrix(std::vector<PointPair> pairs, Eigen::MatrixXd entries)
      : pairs_(std::move(pairs)), entries_(std::move(entries)) {}

  const std::vector<PointPair>& pairs() const { return pairs_; }
  const Eigen::MatrixXd& entries() const { return entries_; }
  int size() const { return static_cast<int>(entries_.rows()); }
  double trace() const { return entries_.trace(); }
  double min_eigenvalue() const;
  // Smallest eigenvalue at least -1e-8 * trace / N.
  bool is_psd(double rel_tol = 1e-8) const;

 private:
  std::vector<PointPair> pairs_;
  Eigen::MatrixXd entries_;
};

// Dense Gram matrix of pairwise_gaussian. Throws CapacityError when N*N doubles
// exceed cap_bytes; callers then evaluate rows on demand with gram_row.
GramMatrix gram(const std::vector<PointPair>& pairs, const KernelParams& params,
                std::size_t cap_bytes = kDefaultGramCapBytes);

Eigen::VectorXd gram_row(const std::vector<PointPair>& pairs, int row, const KernelParams& params);

// Gaussian Gram matrix on the points of a dataset, g_ab = exp(-||x_a - x_b||^2 / sigma^2).
// For pairs (i, j) and (a, b) of dataset indices the pairwise kernel factors as
// 0.5 * (g_ia g_jb - g_ja g_ib); the solver and predictors build on this.
Eigen::MatrixXd point_gram(const Eigen::MatrixXd& points, double sigma);

// Column of Gaussian values between every row of points and x.
void point_gaussian_column(const Eigen::MatrixXd& points, const Point& x, double sigma,
                           Eigen::VectorXd& out);

}  // namespace pairrank
