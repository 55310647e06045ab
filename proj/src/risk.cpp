#include "pairrank/risk.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "pairrank/numerics.hpp"
#include "pairrank/rng.hpp"

namespace pairrank {

namespace {

void require_pairs(const Dataset& data) {
  if (data.n() < 2) throw ValidationError("risk estimates need at least two samples");
  if (data.y.size() != data.x.rows()) throw ValidationError("dataset labels and inputs disagree");
}

// Bayes rule of a loss, used as the reference function in Q comparisons.
PairFunction bayes_reference(const DistributionSpec& spec, const LossSpec& loss) {
  const BayesRules rules = bayes_rules(spec);
  switch (loss.kind) {
    case LossKind::hinge:
      return rules.f_hinge;
    case LossKind::square:
      return rules.f_square;
    default:
      throw DomainError("no closed-form Bayes rule for loss " + loss.id());
  }
}

double q_phi_quadrature(const PairFunction& f, const LabeledSample& z, const LossSpec& loss,
                        const DistributionSpec& spec, double tol) {
  std::vector<double> breaks = spec.label_breaks(z.y);
  for (double b : spec.latent_breaks()) breaks.push_back(b);
  try {
    breaks.push_back(spec.latent(z.x));
  } catch (const DomainError&) {
    // Off the support: f(x, .) has no kink tied to the diagonal.
  }
  const double psi0 = psi(loss, 0.0);
  auto integrand = [&](double v) {
    const auto [below, equal] = spec.label_law(z.y, v);
    const double above = std::max(0.0, 1.0 - below - equal);
    const double t = f(z.x, spec.embed(v));
    return below * psi(loss, t) + above * psi(loss, -t) + equal * psi0;
  };
  return integrate_piecewise(integrand, 0.0, 1.0, breaks, tol);
}

}  // namespace

RiskEstimate empirical_phi_risk(const PairFunction& f, const Dataset& data, const LossSpec& loss) {
  require_pairs(data);
  const int n = data.n();
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const Point xi = data.point(i);
    for (int j = 0; j < n; ++j)
      if (i != j) total += margin_loss(loss, data.y[i], data.y[j], f(xi, data.point(j)));
  }
  const long terms = static_cast<long>(n) * (n - 1);
  return {total / static_cast<double>(terms), 0.0, terms};
}

RiskEstimate empirical_ranking_risk(const PairFunction& f, const Dataset& data) {
  require_pairs(data);
  const int n = data.n();
  long wrong = 0;
  for (int i = 0; i < n; ++i) {
    const Point xi = data.point(i);
    for (int j = 0; j < n; ++j) {
      if (i == j || data.y[i] == data.y[j]) continue;
      const double t = f(xi, data.point(j));
      if ((data.y[i] > data.y[j] && t < 0.0) || (data.y[i] < data.y[j] && t >= 0.0)) ++wrong;
    }
  }
  const long terms = static_cast<long>(n) * (n - 1);
  return {static_cast<double>(wrong) / static_cast<double>(terms), 0.0, terms};
}

RiskEstimate q_phi(const PairFunction& f, const LabeledSample& z, const LossSpec& loss,
                   const ExpectationSource& source) {
  if (source.fresh != nullptr) {
    const Dataset& d = *source.fresh;
    if (d.n() < 1) throw ValidationError("empty fresh sample");
    MeanAccumulator acc;
    for (int i = 0; i < d.n(); ++i) acc.add(margin_loss(loss, z.y, d.y[i], f(z.x, d.point(i))));
    return {acc.mean, acc.stderr_of_mean(), acc.count};
  }
  if (source.spec == nullptr)
    throw ValidationError("Q phi needs a distribution spec or a fresh sample");
  if (source.mc_budget > 0) {
    const Dataset d = source.spec->sample(static_cast<int>(source.mc_budget), source.seed);
    ExpectationSource s;
    s.fresh = &d;
    return q_phi(f, z, loss, s);
  }
  return {q_phi_quadrature(f, z, loss, *source.spec, source.tol), 0.0, 0};
}

HoeffdingParts hoeffding_decompose(const PairFunction& f, const PairFunction& f_ref,
                                   const Dataset& data, const LossSpec& loss,
                                   const QEvaluator& q, double risk_f, double risk_ref) {
  require_pairs(data);
  const int n = data.n();
  std::vector<double> dq(n);
  for (int i = 0; i < n; ++i) {
    const auto [qf, qr] = q({data.point(i), data.y[i]});
    dq[i] = qf - qr;
  }
  const double dr = risk_f - risk_ref;
  double u_diff = 0.0;
  double u_h = 0.0;
  for (int i = 0; i < n; ++i) {
    const Point xi = data.point(i);
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const Point xj = data.point(j);
      const double dphi = margin_loss(loss, data.y[i], data.y[j], f(xi, xj)) -
                          margin_loss(loss, data.y[i], data.y[j], f_ref(xi, xj));
      u_diff += dphi;
      u_h += dphi - dq[i] - dq[j] + dr;
    }
  }
  const double terms = static_cast<double>(n) * (n - 1);
  double emp = 0.0;
  for (int i = 0; i < n; ++i) emp += dr - dq[i];
  HoeffdingParts parts;
  parts.total = dr - u_diff / terms;
  parts.empirical_term = emp / n;
  parts.degenerate_term = u_h / terms;
  return parts;
}

RiskEstimate degenerate_conditional_mean(const PairFunction& f, const PairFunction& f_ref,
                                         const LabeledSample& z, const LossSpec& loss,
                                         const DistributionSpec& spec, long budget,
                                         std::uint64_t seed, double tol) {
  if (budget < 2) throw ValidationError("conditional mean needs a budget of at least 2");
  const PopulationOptions quad{0, tol, seed};
  const double dr = population_phi_risk(f, spec, loss, quad).value -
                    population_phi_risk(f_ref, spec, loss, quad).value;
  ExpectationSource src;
  src.spec = &spec;
  src.tol = tol;
  const double dq_z = q_phi(f, z, loss, src).value - q_phi(f_ref, z, loss, src).value;
  MeanAccumulator acc;
  for (long k = 0; k < budget; ++k) {
    Stream rng(seed, static_cast<std::uint64_t>(k));
    const double u = rng.uniform();
    const LabeledSample zp{spec.embed(u), spec.draw_label(u, rng)};
    const double dphi = margin_loss(loss, z.y, zp.y, f(z.x, zp.x)) -
                        margin_loss(loss, z.y, zp.y, f_ref(z.x, zp.x));
    const double dq_zp = q_phi(f, zp, loss, src).value - q_phi(f_ref, zp, loss, src).value;
    acc.add(dphi - dq_z - dq_zp + dr);
  }
  return {acc.mean, acc.stderr_of_mean(), acc.count};
}

double bernstein_bound(double zeta_sq, double b, int n, double t) {
  if (n < 2) throw ValidationError("Bernstein bound needs n >= 2");
  if (zeta_sq < 0.0 || b < 0.0 || !(t > 0.0)) throw ValidationError("invalid Bernstein arguments");
  return std::sqrt(8.0 * zeta_sq * t / n) + 150.0 * b * t / n;
}

CoverageResult bernstein_coverage(int n, double t, int trials, std::uint64_t seed, double slack) {
  if (trials < 1) throw ValidationError("coverage needs at least one trial");
  const double bound = bernstein_bound(1.0 / 3.0, 2.0, n, t);
  CoverageResult r;
  r.trials = trials;
  std::vector<double> z(n);
  for (int k = 0; k < trials; ++k) {
    Stream rng(seed, static_cast<std::uint64_t>(k));
    for (double& v : z) v = rng.uniform(-1.0, 1.0);
    double u = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) u += z[i] + z[j];
    u /= static_cast<double>(n) * (n - 1);
    if (u >= bound) ++r.exceed;
  }
  r.frequency = static_cast<double>(r.exceed) / trials;
  r.allowed = 2.0 * std::exp(-t) + slack;
  r.pass = r.frequency <= r.allowed;
  return r;
}

RiskEstimate empirical_rademacher(const Eigen::MatrixXd& values, long mc_reps, std::uint64_t seed) {
  const Eigen::Index m = values.rows();
  const Eigen::Index n = values.cols();
  if (m < 1 || n < 1) throw ValidationError("Rademacher complexity needs at least one function and sample");
  auto sup = [&](const Eigen::VectorXd& s) { return s.cwiseAbs().maxCoeff() / static_cast<double>(n); };

  if (mc_reps <= 0) {
    if (n > 20) throw ValidationError("exact enumeration limited to n <= 20; set mc_reps");
    // Gray-code walk: one sign flips per step.
    Eigen::VectorXd s = values.rowwise().sum();
    std::vector<int> eps(n, 1);
    const std::uint64_t count = std::uint64_t{1} << n;
    double total = sup(s);
    for (std::uint64_t k = 1; k < count; ++k) {
      const int bit = __builtin_ctzll(k);
      s -= 2.0 * eps[bit] * values.col(bit);
      eps[bit] = -eps[bit];
      total += sup(s);
    }
    return {total / static_cast<double>(count), 0.0, static_cast<long>(count)};
  }
  MeanAccumulator acc;
  Eigen::VectorXd e(n);
  for (long r = 0; r < mc_reps; ++r) {
    Stream rng(seed, static_cast<std::uint64_t>(r));
    for (Eigen::Index i = 0; i < n; ++i) e[i] = (rng() >> 63) ? 1.0 : -1.0;
    acc.add(sup(values * e));
  }
  return {acc.mean, acc.stderr_of_mean(), acc.count};
}

double refined_calibration_constant(double q, double C_star, double C_psi) {
  if (!(C_star > 0.0) || !(C_psi > 0.0) || !(q >= 0.0))
    throw DomainError("refined calibration needs q >= 0 and positive constants");
  if (std::isinf(q)) return C_psi;
  const double e1 = 1.0 / (q + 2.0);
  const double e2 = (q + 1.0) / (q + 2.0);
  const double common = std::pow(C_star, e1) * std::pow(C_psi, e2);
  return std::pow(q + 1.0, -e2) * common + std::pow(q + 1.0, e1) * common;
}

CalibrationResult calibration_check(CalibrationKind kind, const PairFunction& f,
                                    const DistributionSpec& spec, const PopulationOptions& opts) {
  const LossSpec loss = kind == CalibrationKind::zhang ? LossSpec::hinge() : LossSpec::square();
  const ExcessRisks ex = excess_risks(f, spec, loss, opts);
  CalibrationResult r;
  r.lhs = ex.rank.value;
  r.lhs_se = ex.rank.std_error;
  r.excess_phi = ex.phi.value;
  const double phi = std::max(ex.phi.value, 0.0);
  switch (kind) {
    case CalibrationKind::zhang:
      r.rhs = ex.phi.value;
      r.rhs_se = ex.phi.std_error;
      break;
    case CalibrationKind::sqrt_square: {
      const double c = std::sqrt(calibration_constant(loss));
      r.rhs = c * std::sqrt(phi);
      r.rhs_se = phi > 0.0 ? c * ex.phi.std_error / (2.0 * std::sqrt(phi)) : 0.0;
      break;
    }
    case CalibrationKind::refined: {
      const KnownExponents e = spec.exponents();
      const double c = refined_calibration_constant(e.q, e.C_star, calibration_constant(loss));
      const double power = std::isinf(e.q) ? 1.0 : (e.q + 1.0) / (e.q + 2.0);
      r.rhs = c * std::pow(phi, power);
      r.rhs_se = phi > 0.0 ? c * power * std::pow(phi, power - 1.0) * ex.phi.std_error : 0.0;
      break;
    }
  }
  r.margin = r.rhs - r.lhs;
  const double se = std::hypot(r.lhs_se, r.rhs_se);
  const double slack = opts.mc_budget > 0 ? 0.0 : 10.0 * opts.tol;
  r.pass = r.lhs <= r.rhs + 3.0 * se + slack;
  r.noisy = opts.mc_budget > 0 && 3.0 * se >= std::abs(r.margin);
  return r;
}

VarianceBound variance_constants(NoiseCondition condition, double q, double C, const LossSpec& loss) {
  if (!(C > 0.0)) throw DomainError("variance constant needs C > 0");
  if (!(q >= 0.0)) throw DomainError("variance constant needs q >= 0");
  VarianceBound vb{condition, q, C, 0.0, 0.0};
  if (loss.kind == LossKind::square) {
    vb.V = 16.0;
    vb.tau = 1.0;
    return vb;
  }
  if (loss.kind != LossKind::hinge) throw DomainError("variance constants known for hinge and square loss");
  switch (condition) {
    case NoiseCondition::TN:
      if (std::isinf(q)) {
        vb.V = 2.0;
        vb.tau = 1.0;
      } else {
        // q^{1/(q+1)} (1 + 1/q) = q^{1/(q+1)} + q^{-q/(q+1)}, which tends to 1 at q = 0.
        const double qq = q == 0.0 ? 1.0 : std::pow(q, 1.0 / (q + 1.0)) + std::pow(q, -q / (q + 1.0));
        vb.V = std::pow(2.0, (q + 2.0) / (q + 1.0)) * std::pow(C, 1.0 / (q + 1.0)) * qq;
        vb.tau = q / (q + 1.0);
      }
      break;
    case NoiseCondition::LN:
      if (q > 1.0) throw DomainError("LN variance constants need q in [0, 1]");
      vb.V = 4.0 * C;
      vb.tau = q;
      break;
    case NoiseCondition::NA:
      if (std::isinf(q)) {
        vb.V = 4.0;
        vb.tau = 1.0;
      } else {
        const double e = 1.0 / (2.0 * q + 1.0);
        // q^{1/(2q+1)} (2 + 1/q) tends to 1 at q = 0.
        const double qq = q == 0.0 ? 1.0 : 2.0 * std::pow(q, e) + std::pow(q, e - 1.0);
        vb.V = std::pow(2.0, (2.0 * q + 3.0) * e) * std::pow(C, 2.0 * e) * qq;
        vb.tau = 2.0 * q * e;
      }
      break;
  }
  return vb;
}

TauRange best_tau(NoiseCondition condition, double q) {
  if (!(q >= 0.0)) throw DomainError("best_tau needs q >= 0");
  if (condition == NoiseCondition::TN) return {std::isinf(q) ? 1.0 : q / (q + 1.0), true};
  if (q <= 0.5) return {2.0 * q / (2.0 * q + 1.0), true};
  if (q <= 1.0) return {q, condition == NoiseCondition::LN};
  return {1.0, true};
}

VarianceCheck variance_bound_check(const LossSpec& loss, const DistributionSpec& spec,
                                   const PairFunction& f, const VarianceBound& bound,
                                   long mc_budget, std::uint64_t seed, double tol) {
  if (mc_budget < 2) throw ValidationError("variance check needs a budget of at least 2");
  const PairFunction ref = bayes_reference(spec, loss);
  ExpectationSource src;
  src.spec = &spec;
  src.tol = tol;
  MeanAccumulator acc;
  for (long k = 0; k < mc_budget; ++k) {
    Stream rng(seed, static_cast<std::uint64_t>(k));
    const double u = rng.uniform();
    const LabeledSample z{spec.embed(u), spec.draw_label(u, rng)};
    const double d = q_phi(f, z, loss, src).value - q_phi(ref, z, loss, src).value;
    acc.add(d * d);
  }
  VarianceCheck c;
  c.lhs = acc.mean;
  c.lhs_se = acc.stderr_of_mean();
  c.mean_gap = excess_risks(f, spec, loss, PopulationOptions{0, tol, seed}).phi.value;
  const double gap = std::max(c.mean_gap, 0.0);
  c.rhs = bound.tau == 0.0 ? bound.V : bound.V * std::pow(gap, bound.tau);
  c.pass = c.lhs <= c.rhs + 3.0 * c.lhs_se + 10.0 * tol;
  return c;
}

void write_check_rows(std::ostream& out, const std::vector<CheckRow>& rows) {
  out << "check,lhs,rhs,lhs_stderr,rhs_stderr,pass\n";
  out << std::setprecision(10);
  for (const CheckRow& r : rows)
    out << r.name << "," << r.lhs << "," << r.rhs << "," << r.lhs_se << "," << r.rhs_se << ","
        << (r.pass ? 1 : 0) << "\n";
}

}  // namespace pairrank
