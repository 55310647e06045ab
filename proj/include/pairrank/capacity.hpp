#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "pairrank/common.hpp"

namespace pairrank {

enum class Metric { sup, euclidean };

struct Cover {
  std::vector<int> centers;  // row indices of the input points
  double radius = 0.0;       // largest distance from a point to the center covering it
  int size() const { return static_cast<int>(centers.size()); }
};

// Greedy eps-net over the rows of points in input order: a point becomes a
// center unless an earlier center lies within eps. Centers are pairwise more
// than eps apart and every point lies within eps of one of them.
Cover greedy_cover(const Eigen::MatrixXd& points, double eps, Metric metric = Metric::sup);

struct DimensionFit {
  double dim = 0.0;
  double std_error = 0.0;
  std::vector<double> eps;
  std::vector<int> counts;
};

// Least-squares slope of log N(eps) against log(1/eps), N from greedy_cover.
// The grid must span at least one decade.
DimensionFit box_counting_fit(const Eigen::MatrixXd& points, const std::vector<double>& eps_grid,
                              Metric metric = Metric::sup);

// 12 C_X^2 binom(4e + 2d, 2d) (2d + 1)^{2d+1} / (2^{2d+1} e^{4d+1}), the binomial
// through the Gamma function.
double entropy_constant(int d, double C_X);

struct CapacityParams {
  double p = 0.25;
  int d = 1;
  double rho = 1.0;
  double C_X = 1.0;
  double C_star_X = 0.0;

  static CapacityParams make(double p, int d, double rho, double C_X);
  // (C*_X p^{-(2d+1)} sigma^{-2 rho})^{1/(2p)}.
  double a(double sigma) const;
};

// a i^{-1/(2p)}.
double theoretical_entropy_bound(const CapacityParams& params, double sigma, int i);

enum class SeminormKind { mixed, pairs };

// Empirical L2 seminorms on functions of X^2. pairs: mean of f(x_i, x_j)^2 over
// ordered i != j. mixed: mean over i and the fresh sample of f(x_i, x~_l)^2, a
// Monte Carlo stand-in for (1/n) sum_i E_X f(x_i, X)^2.
struct EmpiricalSeminorm {
  SeminormKind kind = SeminormKind::pairs;
  Eigen::MatrixXd x;
  Eigen::MatrixXd fresh;

  static EmpiricalSeminorm pairs(Eigen::MatrixXd x);
  static EmpiricalSeminorm mixed(Eigen::MatrixXd x, Eigen::MatrixXd fresh);
};

// Sampled unit-norm functions of the pairwise Gaussian RKHS (64 random center
// pairs drawn from the seminorm's points, Gaussian coefficients scaled to
// alpha' G alpha = 1) represented by their values under the seminorm, one
// column per function, scaled so the seminorm is the Euclidean norm.
Eigen::MatrixXd sample_unit_ball(double sigma, const EmpiricalSeminorm& seminorm, long count,
                                 std::uint64_t seed, int centers = 64);

// Radius of the farthest-point cover of the sampled ball with 2^{i-1} centers,
// the first one at the zero function. For the sampled set S this lies in
// [e_i(S), 2 e_i(S)] and e_i(S) <= e_i of the unit ball.
double empirical_rkhs_entropy(double sigma, const EmpiricalSeminorm& seminorm, long ball_samples,
                              int i, std::uint64_t seed);

// Same for several indices from one sample and one greedy pass.
std::vector<double> empirical_rkhs_entropies(double sigma, const EmpiricalSeminorm& seminorm,
                                             long ball_samples, const std::vector<int>& indices,
                                             std::uint64_t seed);

}  // namespace pairrank
