#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>

#include "pairrank/common.hpp"
#include "pairrank/synth.hpp"

namespace pairrank {

enum class Quadrature { grid, monte_carlo };

struct ConvolutionConfig {
  double sigma = 0.5;
  Quadrature quadrature = Quadrature::grid;
  double h = 0.0;  // grid step, 0 selects sigma / 10
  long mc_samples = 100000;
  std::uint64_t seed = 1;
  int s = 1;  // fold count of the square-loss construction

  double step() const { return h > 0.0 ? h : sigma / 10.0; }
  // Throws ResolutionError when the grid step exceeds sigma / 8.
  void validate() const;
};

// A function on R^{2d}; the argument is (x, x') stacked.
using JointFunction = std::function<double(const Eigen::VectorXd&)>;

Eigen::VectorXd stack(const PointPair& p);

// (k * f)(p) with the unit-mass kernel k(u) = (2 / (pi sigma^2))^d exp(-2 |u|^2 / sigma^2).
// Grid mode sums over the cell midpoints p + h (Z + 1/2)^{2d} within 4 sigma per coordinate
// with weights normalized to sum to one; Monte Carlo mode averages f(p + u)
// over u ~ N(0, sigma^2 / 4 I).
double convolve(const JointFunction& f, const ConvolutionConfig& cfg, const PointPair& point);

// (1/2)[(k * f)(x, x') - (k * f)(x', x)]: zero for symmetric f, k * f for skew f.
double skew_convolve(const JointFunction& f, const ConvolutionConfig& cfg, const PointPair& point);

// Values of a function of R^2 on the lattice h Z^2 inside [-extent, extent]^2,
// zero outside. Convolutions sum over lattice nodes with Gaussian weights
// normalized over the full window, so constants are reproduced exactly.
class PlaneRaster {
 public:
  PlaneRaster(const std::function<double(double, double)>& f, double h, double extent);

  double convolve(double sigma, double x, double x_prime) const;
  double h() const { return h_; }
  double extent() const { return half_ * h_; }
  // sqrt(h^2 sum of squared node values).
  double l2_norm() const;
  double at(int i, int j) const { return values_(i + half_, j + half_); }
  int half() const { return half_; }

 private:
  double h_;
  int half_;
  Eigen::MatrixXd values_;
};

// Extension of the hinge Bayes rule for 1-D laws on [0, 1] whose decision
// boundary is the diagonal: +1 on the union of the balls B(z, Delta(z)/2) over
// z in {x > x'}, -1 on the mirror image, 0 elsewhere.
double ball_union_sign(double u, double u_prime);

struct Approximator {
  PairFunction f0;
  double sup_bound = 1.0;   // guaranteed bound on |f0|
  double norm_bound = 0.0;  // upper bound on the RKHS norm
  double extension_l2 = 0.0;
  std::shared_ptr<const PlaneRaster> raster;
};

// Unit-mass Gaussian convolution of the extended hinge Bayes rule. Norm bound
// (pi sigma^2)^{-d/2} (2r)^d vol(B_{2d})^{1/2}. r = 0 takes the spec's radius.
Approximator hinge_f0(const DistributionSpec& spec, double sigma, double r = 0.0, double h = 0.0);

// sum_{j=1}^s (-1)^{1-j} binom(s, j) (unit-mass convolution at width j sigma)
// of the square Bayes rule extended to R^2 and cut to 2rB. Norm bound
// 2^s (sigma sqrt(pi))^{-d} ||extension||_{L2}, the L2 norm from the raster.
Approximator square_f0(const DistributionSpec& spec, double sigma, int s, double r = 0.0,
                       double h = 0.0);

// 2^{2d+1} r^{2d} / Gamma(d) lambda sigma^{-2d}
//   + 2^{beta/2+1} C** Gamma(d + beta/2) / Gamma(d) sigma^beta.
double hinge_approx_rhs(int d, double r, double lambda, double sigma, double beta, double C_ss);

struct HingeApproxCheck {
  double sigma = 0.0;
  double lambda = 0.0;
  double norm_bound = 0.0;
  double sup_norm = 0.0;  // max |f0| over the probes
  RiskEstimate excess_phi;
  double lhs = 0.0;  // lambda norm_bound^2 + excess hinge risk
  double rhs = 0.0;
  bool pass = false;
};

// Probes: half on X^2, half uniform on [-2r, 2r]^2. beta and C** from the spec.
HingeApproxCheck hinge_approx_check(const DistributionSpec& spec, double sigma, double lambda,
                                    int probes = 10000, std::uint64_t seed = 1, double tol = 1e-7);

struct SquareApproxCheck {
  double sigma = 0.0;
  int s = 1;
  double sup_norm = 0.0;
  double sup_bound = 0.0;
  double norm_bound = 0.0;
  RiskEstimate excess_phi;
  double l2_dist_sq = 0.0;  // ||f0 - f*||^2 in L2(P_X^2)
  bool pass = false;
};

// Passes when sup_norm <= 2^s and excess <= l2_dist_sq up to quadrature slack.
SquareApproxCheck square_approx_check(const DistributionSpec& spec, double sigma, int s,
                                      int probes = 10000, std::uint64_t seed = 1,
                                      double tol = 1e-7);

}  // namespace pairrank
