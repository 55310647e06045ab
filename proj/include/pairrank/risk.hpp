#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "pairrank/common.hpp"
#include "pairrank/losses.hpp"
#include "pairrank/synth.hpp"

namespace pairrank {

// (1 / n(n-1)) sum_{i != j} phi(y_i, y_j, f(x_i, x_j)); exact, std_error 0.
RiskEstimate empirical_phi_risk(const PairFunction& f, const Dataset& data, const LossSpec& loss);

// Fraction of ordered pairs with y_i > y_j and f < 0, or y_i < y_j and f >= 0.
RiskEstimate empirical_ranking_risk(const PairFunction& f, const Dataset& data);

struct LabeledSample {
  Point x;
  double y = 0.0;
};

// Where Q phi_f(z) = E phi_f(z, Z') gets its expectation from: quadrature over
// the spec's latent variable (mc_budget == 0), or mc_budget fresh draws from
// the spec sampler, or the rows of a caller-provided fresh sample.
struct ExpectationSource {
  const DistributionSpec* spec = nullptr;
  const Dataset* fresh = nullptr;
  long mc_budget = 0;
  std::uint64_t seed = 1;
  double tol = 1e-8;
};

RiskEstimate q_phi(const PairFunction& f, const LabeledSample& z, const LossSpec& loss,
                   const ExpectationSource& source);

struct HoeffdingParts {
  double total = 0.0;
  double empirical_term = 0.0;
  double degenerate_term = 0.0;
};

// Q phi values of f and f_ref at a sample point.
using QEvaluator = std::function<std::pair<double, double>(const LabeledSample&)>;

// total = R(f) - R(f_ref) - U_z(phi_f - phi_ref),
// empirical_term = mean_i [R(f) - R(f_ref) - Q_f(z_i) + Q_ref(z_i)],
// degenerate_term = U_z(h_f - h_ref) with h_f = phi_f - Q_f(z) - Q_f(z') + R(f).
HoeffdingParts hoeffding_decompose(const PairFunction& f, const PairFunction& f_ref,
                                   const Dataset& data, const LossSpec& loss,
                                   const QEvaluator& q, double risk_f, double risk_ref);

// E[h_f(z, Z') - h_ref(z, Z')] by Monte Carlo over Z', with Q phi values and
// population risks from quadrature on the spec. Zero in expectation.
RiskEstimate degenerate_conditional_mean(const PairFunction& f, const PairFunction& f_ref,
                                         const LabeledSample& z, const LossSpec& loss,
                                         const DistributionSpec& spec, long budget,
                                         std::uint64_t seed, double tol = 1e-7);

// sqrt(8 zeta^2 t / n) + 150 b t / n.
double bernstein_bound(double zeta_sq, double b, int n, double t);

struct CoverageResult {
  int trials = 0;
  int exceed = 0;
  double frequency = 0.0;
  double allowed = 0.0;  // 2 exp(-t) plus slack
  bool pass = false;
};

// Draws `trials` U-statistics of h(z, z') = z + z' with z ~ U[-1, 1] (b = 2,
// zeta^2 = 1/3) and counts how often U_z(h) exceeds the bound at level t.
CoverageResult bernstein_coverage(int n, double t, int trials, std::uint64_t seed,
                                  double slack = 0.02);

// E_eps sup_f |(1/n) sum_i eps_i f(Z_i)| over the rows of values (one function
// per row). Exact enumeration when mc_reps == 0 and n <= 20.
RiskEstimate empirical_rademacher(const Eigen::MatrixXd& values, long mc_reps, std::uint64_t seed);

enum class CalibrationKind { zhang, sqrt_square, refined };

struct CalibrationResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double lhs_se = 0.0;
  double rhs_se = 0.0;
  double excess_phi = 0.0;
  double margin = 0.0;  // rhs - lhs
  bool pass = false;
  bool noisy = false;   // Monte Carlo error dominates the margin
};

// (q + 1)^{-(q+1)/(q+2)} C*^{1/(q+2)} C^{(q+1)/(q+2)} + (q + 1)^{1/(q+2)} C*^{1/(q+2)} C^{(q+1)/(q+2)}.
double refined_calibration_constant(double q, double C_star, double C_psi = 1.0);

// zhang: excess rank <= excess hinge. sqrt_square: excess rank <= sqrt(excess
// square). refined: excess rank <= c (excess square)^{(q+1)/(q+2)} with q and
// C* from the spec. Passes when lhs <= rhs + 3 combined stderr (+ quadrature slack).
CalibrationResult calibration_check(CalibrationKind kind, const PairFunction& f,
                                    const DistributionSpec& spec,
                                    const PopulationOptions& opts = {});

enum class NoiseCondition { TN, LN, NA };

struct VarianceBound {
  NoiseCondition condition = NoiseCondition::TN;
  double q = 0.0;
  double C = 1.0;
  double V = 0.0;
  double tau = 0.0;
};

// Hinge-loss variance constants under the given noise condition. Square loss
// gives V = 16, tau = 1 for every condition.
VarianceBound variance_constants(NoiseCondition condition, double q, double C,
                                 const LossSpec& loss = LossSpec::hinge());

// Best variance exponent for hinge loss from the global conditions. For NA with
// q in (1/2, 1] only exponents strictly below q are available: attained is false.
struct TauRange {
  double tau = 0.0;
  bool attained = true;
};
TauRange best_tau(NoiseCondition condition, double q);

struct VarianceCheck {
  double lhs = 0.0;      // E (Q_f - Q_*)^2
  double lhs_se = 0.0;
  double mean_gap = 0.0; // E (Q_f - Q_*), the excess phi-risk
  double rhs = 0.0;      // V mean_gap^tau
  bool pass = false;
};

// Monte Carlo over Z ~ P of (Q phi_f(Z) - Q phi_{f*}(Z))^2 with Q by quadrature.
VarianceCheck variance_bound_check(const LossSpec& loss, const DistributionSpec& spec,
                                   const PairFunction& f, const VarianceBound& bound,
                                   long mc_budget, std::uint64_t seed, double tol = 1e-7);

struct CheckRow {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double lhs_se = 0.0;
  double rhs_se = 0.0;
  bool pass = false;
};

void write_check_rows(std::ostream& out, const std::vector<CheckRow>& rows);

}  // namespace pairrank
