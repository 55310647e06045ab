#pragma once

#include <functional>

#include "pairrank/common.hpp"
#include <string>
#include <utility>

namespace pairrank {

enum class LossKind { hinge, square, r_norm_hinge, custom };

// Margin loss psi together with the constants used by the rate theorems:
// L Lipschitz constant and B sup bound on [-M, M], M truncation level,
// B0 sup bound on the approximator.
struct LossSpec {
  LossKind kind = LossKind::hinge;
  double r = 1.0;
  std::function<double(double)> custom_psi;
  double L = 1.0;
  double B = 2.0;
  double M = 1.0;
  double B0 = 2.0;

  static LossSpec hinge();
  // s is the fold count of the square-loss approximator, entering B0 = 2^{2s+2}.
  static LossSpec square(int s = 1);
  static LossSpec r_norm_hinge(double r);
  static LossSpec custom(std::function<double(double)> psi, double L, double B, double M,
                         double B0);

  std::string id() const;
  static LossSpec from_id(const std::string& id);
};

struct PosteriorTriple {
  double eta_plus = 0.0;
  double eta_minus = 0.0;
  double eta_eq = 1.0;

  // Throws DomainError unless entries are in [0, 1] and sum to 1 within 1e-9.
  void validate() const;
};

// sgn with sgn(0) = 0.
inline int sgn(double v) { return (v > 0.0) - (v < 0.0); }

double psi(const LossSpec& loss, double t);

// psi(sgn(y - y') t).
double margin_loss(const LossSpec& loss, double y, double y_prime, double t);

inline double truncate(double t, double M) { return t > M ? M : (t < -M ? -M : t); }

// Conditional risk Psi(t) = eta+ psi(t) + eta- psi(-t) + eta= psi(0).
double conditional_risk(const LossSpec& loss, const PosteriorTriple& post, double t);

// Interval [f-, f+] of minimizers of the conditional risk. Unbounded ends are
// returned as +-infinity. Square loss with eta+ = eta- = 0 returns (0, 0).
std::pair<double, double> pointwise_bayes(const LossSpec& loss, const PosteriorTriple& post);

// A single minimizer, the interval point closest to 0.
double pointwise_bayes_value(const LossSpec& loss, const PosteriorTriple& post);

// Smallest Psi value.
double min_conditional_risk(const LossSpec& loss, const PosteriorTriple& post);

// Golden-section minimizer of a convex function on [lo, hi].
double golden_section_min(const std::function<double(double)>& f, double lo, double hi,
                          double tol);

// Constant C with (eta+ - eta-)^2 <= C (Psi(0) - Psi(f*)); 1 for square loss.
double calibration_constant(const LossSpec& loss);

}  // namespace pairrank
