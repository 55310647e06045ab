#include "pairrank/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <numbers>
#include <ostream>

#include "pairrank/capacity.hpp"
#include "pairrank/numerics.hpp"
#include "pairrank/rng.hpp"

namespace pairrank {

double theoretical_exponent(const LossSpec& loss, double q, double beta, double rho, double alpha) {
  if (!(rho > 0.0)) throw DomainError("rho must be positive");
  if (loss.kind == LossKind::hinge) {
    if (!(q >= 0.0) || !std::isfinite(q)) throw DomainError("hinge rate needs a finite q >= 0");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("hinge rate needs a finite beta > 0");
    return beta * (q + 1.0) / (beta * (q + 2.0) + 2.0 * rho * (q + 1.0));
  }
  if (loss.kind == LossKind::square) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("square rate needs alpha > 0");
    if (std::isinf(q)) return alpha / (2.0 * (alpha + rho));
    if (!(q > 0.0)) throw DomainError("Tsybakov exponent must be positive");
    return (q + 1.0) * alpha / ((q + 2.0) * (alpha + rho));
  }
  throw DomainError("no rate for loss " + loss.id());
}

double Schedule::sigma(int n) const { return std::pow(static_cast<double>(n), -a); }
double Schedule::lambda(int n) const { return std::pow(static_cast<double>(n), -b); }
double Schedule::p(int n) {
  if (n < 2) throw DomainError("schedule needs n >= 2");
  return std::log(2.0) / (4.0 * std::log(static_cast<double>(n)));
}

Schedule Schedule::hinge(double q, double beta, double rho, int d) {
  if (!(q >= 0.0) || !std::isfinite(q) || !(beta > 0.0) || !std::isfinite(beta) || !(rho > 0.0))
    throw DomainError("hinge schedule needs finite q >= 0, beta > 0, rho > 0");
  const double den = beta * (q + 2.0) + 2.0 * rho * (q + 1.0);
  return {(q + 1.0) / den, (2.0 * d + beta) * (q + 1.0) / den};
}

Schedule Schedule::square(double alpha, double rho, int d) {
  if (!(alpha > 0.0) || !(rho > 0.0)) throw DomainError("square schedule needs alpha, rho > 0");
  return {1.0 / (2.0 * alpha + 2.0 * rho), (alpha + d) / (alpha + rho)};
}

void ExperimentConfig::validate() const {
  if (n_grid.empty()) throw ValidationError("n_grid is empty");
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    if (n_grid[k] < 2) throw ValidationError("n_grid entries must be at least 2");
    if (k > 0 && n_grid[k] <= n_grid[k - 1]) throw ValidationError("n_grid must be increasing");
  }
  if (repetitions < 1) throw ValidationError("repetitions must be at least 1");
  if (!(schedule.a > 0.0) || !(schedule.b > 0.0)) throw ValidationError("schedule exponents must be positive");
  if (mc_budget < 0 || eval_grid < 4) throw ValidationError("bad evaluation budget");
  if (loss.kind != LossKind::hinge && loss.kind != LossKind::square)
    throw ValidationError("learning curves support hinge and square loss");
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("spec")) {
      auto [spec, spec_seed] = DistributionSpec::from_descriptor(j.at("spec"));
      c.spec = spec;
      c.seed = spec_seed;
    }
    if (j.contains("loss")) c.loss = LossSpec::from_id(j.at("loss").get<std::string>());
    if (j.contains("n_grid")) c.n_grid = j.at("n_grid").get<std::vector<int>>();
    c.repetitions = j.value("repetitions", c.repetitions);
    c.seed = j.value("seed", c.seed);
    const auto ex = c.spec.exponents();
    const int d = c.spec.dim();
    const bool theorem = !j.contains("schedule") || j.at("schedule").is_string();
    if (theorem) {
      if (j.contains("schedule") && j.at("schedule").get<std::string>() != "theorem")
        throw ValidationError("schedule must be \"theorem\" or {a, b}");
      c.schedule = c.loss.kind == LossKind::square ? Schedule::square(ex.alpha, ex.rho, d)
                                                   : Schedule::hinge(ex.q, ex.beta, ex.rho, d);
    } else {
      c.schedule.a = j.at("schedule").at("a").get<double>();
      c.schedule.b = j.at("schedule").at("b").get<double>();
    }
    c.mc_budget = j.value("mc_budget", c.mc_budget);
    c.eval_grid = j.value("eval_grid", c.eval_grid);
    c.max_pairs = j.value("max_pairs", c.max_pairs);
    c.tol_gap = j.value("tol_gap", c.tol_gap);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.out_path = j.value("out", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

double excess_phi_term(const LossSpec& loss, const PosteriorTriple& p, double t) {
  return conditional_risk(loss, p, t) - min_conditional_risk(loss, p);
}

double excess_rank_term(const PosteriorTriple& p, double t) {
  const double risk = t < 0.0 ? p.eta_plus : p.eta_minus;
  return risk - std::min(p.eta_plus, p.eta_minus);
}

// Midpoint-rule means of both excess integrands on a g x g latent grid.
std::pair<double, double> grid_means(const RankingModel& model, const DistributionSpec& spec,
                                     int g) {
  Eigen::MatrixXd x(g, spec.dim());
  std::vector<double> u(g);
  for (int i = 0; i < g; ++i) {
    u[i] = (i + 0.5) / g;
    x.row(i) = spec.embed(u[i]).transpose();
  }
  const Eigen::MatrixXd F = model.predict_matrix(x);
  double rank = 0.0, phi = 0.0;
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) {
      const auto p = spec.latent_posteriors(u[i], u[j]);
      const double t = truncate(F(i, j), model.loss.M);
      rank += excess_rank_term(p, t);
      phi += excess_phi_term(model.loss, p, t);
    }
  }
  const double cells = static_cast<double>(g) * g;
  return {rank / cells, phi / cells};
}

}  // namespace

ModelExcess model_excess(const RankingModel& model, const DistributionSpec& spec, int grid,
                         long mc_budget, std::uint64_t seed) {
  ModelExcess out;
  if (mc_budget > 0) {
    // Latent pairs in blocks so predictions go through the matrix path.
    Stream rng(seed, 0xe8ce55ULL);
    MeanAccumulator rank, phi;
    const int block = 64;
    std::vector<double> ua(block), ub(block);
    for (long done = 0; done < mc_budget; done += block) {
      const int m = static_cast<int>(std::min<long>(block, mc_budget - done));
      Eigen::MatrixXd both(2 * m, spec.dim());
      for (int k = 0; k < m; ++k) {
        ua[k] = rng.uniform();
        ub[k] = rng.uniform();
        both.row(k) = spec.embed(ua[k]).transpose();
        both.row(m + k) = spec.embed(ub[k]).transpose();
      }
      const Eigen::MatrixXd F = model.predict_matrix(both);
      for (int k = 0; k < m; ++k) {
        const auto p = spec.latent_posteriors(ua[k], ub[k]);
        const double t = truncate(F(k, m + k), model.loss.M);
        rank.add(excess_rank_term(p, t));
        phi.add(excess_phi_term(model.loss, p, t));
      }
    }
    out.rank = {rank.mean, rank.stderr_of_mean(), rank.count};
    out.phi = {phi.mean, phi.stderr_of_mean(), phi.count};
    return out;
  }
  if (grid < 4) throw ValidationError("evaluation grid needs at least 4 nodes per axis");
  const auto fine = grid_means(model, spec, grid);
  const auto coarse = grid_means(model, spec, grid / 2);
  const long terms = static_cast<long>(grid) * grid;
  out.rank = {fine.first, std::abs(fine.first - coarse.first) / 3.0, terms};
  out.phi = {fine.second, std::abs(fine.second - coarse.second) / 3.0, terms};
  return out;
}

std::vector<CurvePoint> run_learning_curve(const ExperimentConfig& config) {
  config.validate();
  std::vector<CurvePoint> curve;
  for (int n : config.n_grid) {
    for (int rep = 0; rep < config.repetitions; ++rep) {
      const std::uint64_t rep_seed = mix64(config.seed ^ mix64(static_cast<std::uint64_t>(n) * 1000003ULL + rep));
      const Dataset data = config.spec.sample(n, rep_seed);
      CurvePoint pt;
      pt.n = n;
      pt.rep = rep;
      pt.sigma = config.schedule.sigma(n);
      pt.lambda = config.schedule.lambda(n);
      SolverOptions opts;
      opts.max_pairs = config.max_pairs;
      opts.pair_seed = rep_seed;
      opts.tol_gap = config.tol_gap;
      opts.max_epochs = config.max_epochs;
      const auto start = std::chrono::steady_clock::now();
      try {
        const FitResult fit_result = fit(data, config.loss, pt.sigma, pt.lambda, opts);
        pt.converged = fit_result.report.converged;
        pt.duality_gap = fit_result.report.duality_gap;
        pt.iterations = fit_result.report.iterations;
        const ModelExcess ex = model_excess(fit_result.model, config.spec, config.eval_grid,
                                            config.mc_budget, rep_seed + 1);
        pt.excess_rank = ex.rank;
        pt.excess_phi = ex.phi;
      } catch (const NumericalError&) {
        pt.converged = false;
      }
      pt.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      curve.push_back(pt);
    }
  }
  return curve;
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve, bool with_timing) {
  out << "n,rep,sigma,lambda,excess_rank,excess_rank_stderr,excess_phi,excess_phi_stderr,"
         "converged,duality_gap,iterations";
  if (with_timing) out << ",wall_time";
  out << "\n" << std::setprecision(17);
  for (const auto& p : curve) {
    out << p.n << "," << p.rep << "," << p.sigma << "," << p.lambda << "," << p.excess_rank.value
        << "," << p.excess_rank.std_error << "," << p.excess_phi.value << ","
        << p.excess_phi.std_error << "," << (p.converged ? 1 : 0) << "," << p.duality_gap << ","
        << p.iterations;
    if (with_timing) out << "," << p.wall_time;
    out << "\n";
  }
}

namespace {

double metric_value(const CurvePoint& p, CurveMetric metric) {
  return metric == CurveMetric::phi ? p.excess_phi.value : p.excess_rank.value;
}

std::map<int, std::vector<double>> group_converged(const std::vector<CurvePoint>& curve,
                                                   CurveMetric metric) {
  std::map<int, std::vector<double>> by_n;
  for (const auto& p : curve)
    if (p.converged) by_n[p.n].push_back(metric_value(p, metric));
  return by_n;
}

// Slope of log m against log n; the decay rate is its negation.
LineFit log_fit(const std::vector<int>& n, const std::vector<double>& m) {
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < n.size(); ++k) {
    lx.push_back(std::log(static_cast<double>(n[k])));
    ly.push_back(std::log(m[k]));
  }
  return fit_line(lx, ly);
}

}  // namespace

std::vector<CurveSummaryRow> summarize_curve(const std::vector<CurvePoint>& curve,
                                             CurveMetric metric) {
  std::vector<CurveSummaryRow> rows;
  for (const auto& [n, values] : group_converged(curve, metric))
    rows.push_back({n, median(values), static_cast<int>(values.size())});
  return rows;
}

RateFit fit_rate(const std::vector<CurvePoint>& curve, CurveMetric metric, int bootstrap,
                 std::uint64_t seed) {
  const auto by_n = group_converged(curve, metric);
  RateFit out;
  std::vector<const std::vector<double>*> groups;
  for (const auto& [n, values] : by_n) {
    const double m = median(values);
    if (!(m > 0.0)) continue;
    out.n.push_back(n);
    out.medians.push_back(m);
    groups.push_back(&values);
  }
  if (out.n.size() < 3) throw ValidationError("rate fit needs at least three n with positive medians");
  const LineFit line = log_fit(out.n, out.medians);
  out.slope = -line.slope;
  out.regression_std_error = line.slope_stderr;

  bool replicated = false;
  for (const auto* g : groups) replicated = replicated || g->size() > 1;
  if (!replicated || bootstrap < 2) {
    out.std_error = out.regression_std_error;
    return out;
  }
  // Resample repetitions within each n and refit the medians.
  Stream rng(seed, 0xb0075ULL);
  MeanAccumulator slopes;
  std::vector<double> resampled;
  for (int b = 0; b < bootstrap; ++b) {
    std::vector<double> meds;
    bool ok = true;
    for (const auto* g : groups) {
      resampled.clear();
      for (std::size_t k = 0; k < g->size(); ++k) resampled.push_back((*g)[rng.below(g->size())]);
      const double m = median(resampled);
      if (!(m > 0.0)) ok = false;
      meds.push_back(m);
    }
    if (ok) slopes.add(-log_fit(out.n, meds).slope);
  }
  out.std_error = std::sqrt(slopes.variance());
  return out;
}

std::vector<OracleTerm> oracle_terms_report(const OracleTermsInput& in, ConstantsMode mode) {
  if (in.n < 2 || !(in.lambda > 0.0) || !(in.sigma > 0.0) || !(in.p > 0.0) || in.d < 1)
    throw DomainError("oracle terms need n >= 2 and positive lambda, sigma, p");
  const bool unit = mode == ConstantsMode::unit;
  const double n = in.n, d = in.d, t = in.t, p = in.p;
  const double lam_sig = in.lambda * std::pow(in.sigma, -2.0 * d);
  // lambda^p p^{2d+1} sigma^{2 rho} n, the denominator of the capacity terms.
  const double cap_den = std::pow(in.lambda, p) * (unit ? std::pow(p, 2.0 * d + 1.0) : 1.0) *
                         std::pow(in.sigma, 2.0 * in.rho) * n;
  const double cx = unit ? entropy_constant(in.d, 1.0) : 1.0;
  std::vector<OracleTerm> out;
  if (in.loss.kind == LossKind::hinge) {
    const double q = in.q, beta = in.beta;
    const double k1 = unit ? std::pow(2.0, 3.0 * d + 4.0) * std::pow(in.r, 2.0 * d) / std::tgamma(d) : 1.0;
    const double k2 = unit ? std::pow(2.0, beta / 2.0 + 4.0) * std::tgamma(d + beta / 2.0) / std::tgamma(d) : 1.0;
    out.push_back({"approx_lambda", k1 * lam_sig});
    out.push_back({"approx_sigma", k2 * std::pow(in.sigma, beta)});
    out.push_back({"capacity", (unit ? 36.0 : 1.0) * std::pow(cx / cap_den, (q + 1.0) / (q - p + 2.0))});
    out.push_back({"capacity_tail", (unit ? 12.0 : 1.0) * cx * (t + 1.0) / cap_den});
    out.push_back({"noise_tail", std::pow((unit ? 11232.0 : 1.0) * t / n, (q + 1.0) / (q + 2.0))});
    out.push_back({"tail", (unit ? 2715.0 : 1.0) * t / n});
  } else if (in.loss.kind == LossKind::square) {
    const double alpha = in.alpha;
    const double k1 = unit ? std::pow(2.0, 2.0 * in.s + 3.0) / std::pow(std::numbers::pi, d) : 1.0;
    const double g = std::tgamma(d + alpha / 2.0) / std::tgamma(d);
    const double k2 = unit ? std::pow(2.0, 3.0 - alpha) * g * g : 1.0;
    out.push_back({"approx_lambda", k1 * lam_sig});
    out.push_back({"approx_sigma", k2 * std::pow(in.sigma, 2.0 * alpha)});
    out.push_back({"capacity", (unit ? 96.0 + 72.0 * t : 1.0) * cx / cap_den});
    out.push_back({"tail", (unit ? 33552.0 + 1824.0 * std::pow(4.0, in.s) + 3.0 : 1.0) * t / n});
  } else {
    throw DomainError("oracle terms exist for hinge and square loss only");
  }
  return out;
}

void write_terms_csv(std::ostream& out, const std::vector<OracleTerm>& terms) {
  out << "term,value\n" << std::setprecision(17);
  for (const auto& t : terms) out << t.name << "," << t.value << "\n";
}

}  // namespace pairrank
