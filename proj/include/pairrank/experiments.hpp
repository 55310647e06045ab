#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "pairrank/common.hpp"
#include "pairrank/losses.hpp"
#include "pairrank/solver.hpp"
#include "pairrank/synth.hpp"

namespace pairrank {

// Decay exponent of the excess risk. hinge: beta(q+1) / (beta(q+2) + 2 rho(q+1)).
// square: alpha / (2(alpha + rho)), or with a finite Tsybakov exponent q
// (q+1) alpha / ((q+2)(alpha + rho)). Pass q = +inf for "no noise condition".
double theoretical_exponent(const LossSpec& loss, double q, double beta, double rho, double alpha);

// sigma = n^{-a}, lambda = n^{-b}, p = log 2 / (4 log n).
struct Schedule {
  double a = 0.2;
  double b = 0.8;

  double sigma(int n) const;
  double lambda(int n) const;
  static double p(int n);

  // a = (q+1) / (beta(q+2) + 2 rho(q+1)) and b at its lower bound (2d + beta) a.
  static Schedule hinge(double q, double beta, double rho, int d);
  // a = 1 / (2 alpha + 2 rho) and b at its lower bound (alpha + d) / (alpha + rho).
  static Schedule square(double alpha, double rho, int d);
};

struct ExperimentConfig {
  DistributionSpec spec = DistributionSpec::uniform_shift();
  LossSpec loss = LossSpec::hinge();
  std::vector<int> n_grid{32, 64, 128, 256};
  int repetitions = 10;
  std::uint64_t seed = 1;
  Schedule schedule;
  long mc_budget = 0;    // 0: deterministic latent grid for the excess risks
  int eval_grid = 400;   // latent nodes per axis for the grid evaluation
  long max_pairs = 0;    // 0: all pairs
  double tol_gap = 1e-6;
  long max_epochs = 20000;
  std::string out_path;

  void validate() const;
  // Keys: spec (descriptor), loss, n_grid, repetitions, seed, schedule {a, b}
  // or schedule "theorem", mc_budget, eval_grid, max_pairs, tol_gap,
  // max_epochs, out.
  static ExperimentConfig from_json(const nlohmann::json& j);
};

struct CurvePoint {
  int n = 0;
  int rep = 0;
  double sigma = 0.0;
  double lambda = 0.0;
  RiskEstimate excess_rank;
  RiskEstimate excess_phi;
  double wall_time = 0.0;
  bool converged = false;
  double duality_gap = 0.0;
  long iterations = 0;
};

// Excess ranking and phi risks of the truncated model. With mc_budget == 0 a
// midpoint rule on a G x G latent grid; std_error is then the gap to the
// G/2 grid divided by 3. Otherwise Monte Carlo over latent pairs.
struct ModelExcess {
  RiskEstimate rank;
  RiskEstimate phi;
};
ModelExcess model_excess(const RankingModel& model, const DistributionSpec& spec, int grid,
                         long mc_budget = 0, std::uint64_t seed = 1);

std::vector<CurvePoint> run_learning_curve(const ExperimentConfig& config);

// One row per point. Timing is omitted unless asked for so that the file is a
// pure function of the configuration.
void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve,
                     bool with_timing = false);

enum class CurveMetric { phi, rank };

struct CurveSummaryRow {
  int n = 0;
  double median = 0.0;
  int used = 0;  // converged repetitions
};
std::vector<CurveSummaryRow> summarize_curve(const std::vector<CurvePoint>& curve,
                                             CurveMetric metric = CurveMetric::phi);

struct RateFit {
  double slope = 0.0;      // decay rate: minus the slope of log median vs log n
  double std_error = 0.0;  // bootstrap over repetitions, or regression when single-rep
  double regression_std_error = 0.0;
  std::vector<int> n;
  std::vector<double> medians;
};

// Least-squares fit of log(median excess) on log n over converged points,
// dropping n with nonpositive medians. Needs three usable n.
RateFit fit_rate(const std::vector<CurvePoint>& curve, CurveMetric metric = CurveMetric::phi,
                 int bootstrap = 400, std::uint64_t seed = 7);

enum class ConstantsMode {
  unit,   // unnumbered constants (c6, C*, C**, C_X, norms of f*) set to 1
  shape,  // every constant and the p^{-(2d+1)} log factor set to 1
};

struct OracleTerm {
  std::string name;
  double value = 0.0;
};

struct OracleTermsInput {
  LossSpec loss = LossSpec::hinge();
  int n = 256;
  double lambda = 0.0;
  double sigma = 0.0;
  double p = 0.0;
  double q = 1.0;      // hinge
  double alpha = 1.0;  // square
  double beta = 2.0;
  double rho = 1.0;
  int d = 1;
  double r = 1.0;
  double t = 1.0;
  int s = 2;  // square fold count
};

// Magnitudes of the right-hand-side terms of the hinge and square oracle
// inequalities. Diagnostic only: the constants are placeholders, so this is not
// a bound check.
std::vector<OracleTerm> oracle_terms_report(const OracleTermsInput& in, ConstantsMode mode);

void write_terms_csv(std::ostream& out, const std::vector<OracleTerm>& terms);

}  // namespace pairrank
