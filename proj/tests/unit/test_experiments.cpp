#include <doctest.h>

#include <cmath>
#include <sstream>

#include "pairrank/experiments.hpp"
#include "pairrank/rng.hpp"

using namespace pairrank;

namespace {

std::vector<CurvePoint> synthetic_curve(double rate, double noise, std::uint64_t seed) {
  Stream rng(seed, 3);
  std::vector<CurvePoint> curve;
  for (int n = 32; n <= 4096; n *= 2) {
    CurvePoint p;
    p.n = n;
    p.converged = true;
    p.excess_phi.value = 0.7 * std::pow(n, -rate) * (1.0 + noise * rng.normal());
    curve.push_back(p);
  }
  return curve;
}

}  // namespace

TEST_CASE("theoretical exponents and schedules") {
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(theoretical_exponent(LossSpec::hinge(), 1.0, 2.0, 1.0, 1.0) == doctest::Approx(0.4));
  CHECK(theoretical_exponent(LossSpec::square(), inf, 2.0, 1.0, 1.0) == doctest::Approx(0.25));
  CHECK(theoretical_exponent(LossSpec::square(), 1.0, 2.0, 1.0, 1.0) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(theoretical_exponent(LossSpec::hinge(), 1.0, 2.0, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(theoretical_exponent(LossSpec::hinge(), inf, 2.0, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(theoretical_exponent(LossSpec::square(), 1.0, 2.0, 1.0, -1.0), DomainError);

  const Schedule h = Schedule::hinge(1.0, 2.0, 1.0, 1);
  CHECK(h.a == doctest::Approx(0.2));
  CHECK(h.b == doctest::Approx(0.8));
  CHECK(Schedule::hinge(1.0, 2.0, 1.0, 3).b == doctest::Approx(1.6));
  CHECK(h.sigma(256) == doctest::Approx(std::pow(256.0, -0.2)));
  CHECK(Schedule::p(256) == doctest::Approx(std::log(2.0) / (4.0 * std::log(256.0))));
  const Schedule s = Schedule::square(1.0, 1.0, 1);
  CHECK(s.a == doctest::Approx(0.25));
  CHECK(s.b == doctest::Approx(1.0));
}

TEST_CASE("rate fits") {
  const RateFit exact = fit_rate(synthetic_curve(0.4, 0.0, 1));
  CHECK(std::abs(exact.slope - 0.4) <= 1e-12);
  // 5% multiplicative noise over 8 doublings: slope stderr ~ 0.05 / (ln2 sqrt(42)) ~ 0.011.
  for (std::uint64_t seed = 2; seed < 12; ++seed)
    CHECK(std::abs(fit_rate(synthetic_curve(0.4, 0.05, seed)).slope - 0.4) <= 0.05);
  CHECK(std::abs(fit_rate(synthetic_curve(0.0, 0.0, 1)).slope) <= 1e-12);

  auto curve = synthetic_curve(0.4, 0.0, 1);
  curve[0].excess_phi.value = 0.0;  // dropped
  curve[1].converged = false;       // excluded
  const RateFit dropped = fit_rate(curve);
  CHECK(dropped.n.size() == 6);
  CHECK(std::abs(dropped.slope - 0.4) <= 1e-12);
  curve.resize(4);
  CHECK_THROWS_AS(fit_rate(curve), ValidationError);

  // Replicated curves get a bootstrap stderr.
  std::vector<CurvePoint> reps;
  for (std::uint64_t r = 0; r < 5; ++r)
    for (auto p : synthetic_curve(0.3, 0.1, 40 + r)) {
      p.rep = static_cast<int>(r);
      reps.push_back(p);
    }
  const RateFit boot = fit_rate(reps);
  CHECK(boot.std_error > 0.0);
  CHECK(std::abs(boot.slope - 0.3) <= 4.0 * boot.std_error + 0.01);
}

TEST_CASE("learning curves are reproducible and evaluated consistently") {
  ExperimentConfig cfg;
  cfg.n_grid = {12, 24};
  cfg.repetitions = 2;
  cfg.seed = 5;
  cfg.eval_grid = 64;
  const auto a = run_learning_curve(cfg);
  const auto b = run_learning_curve(cfg);
  std::ostringstream sa, sb;
  write_curve_csv(sa, a);
  write_curve_csv(sb, b);
  CHECK(sa.str() == sb.str());
  CHECK(a.size() == 4);
  for (const auto& p : a) {
    CHECK(p.converged);
    CHECK(p.excess_phi.value >= 0.0);
    CHECK(p.sigma == doctest::Approx(std::pow(p.n, -0.2)));
  }

  // Grid evaluation against the adaptive quadrature of the synth module.
  const auto spec = DistributionSpec::uniform_shift();
  const FitResult fr = fit(spec.sample(20, 3), LossSpec::hinge(), 0.5, 0.01);
  const ModelExcess grid = model_excess(fr.model, spec, 400);
  PopulationOptions po;
  po.tol = 1e-7;
  const ExcessRisks quad = excess_risks(fr.model.as_function(true), spec, LossSpec::hinge(), po);
  CHECK(grid.phi.value == doctest::Approx(quad.phi.value).epsilon(2e-3));
  CHECK(grid.rank.value == doctest::Approx(quad.rank.value).epsilon(5e-3));
  const ModelExcess mc = model_excess(fr.model, spec, 0, 40000, 9);
  CHECK(std::abs(mc.phi.value - quad.phi.value) <= 4.0 * mc.phi.std_error);

  ExperimentConfig bad = cfg;
  bad.n_grid = {24, 12};
  CHECK_THROWS_AS(run_learning_curve(bad), ValidationError);
  bad = cfg;
  bad.repetitions = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("noise-free law is learned exactly") {
  ExperimentConfig cfg;
  cfg.spec = DistributionSpec::noise_free(0.0);
  cfg.loss = LossSpec::hinge();
  cfg.n_grid = {64};
  cfg.repetitions = 1;
  cfg.schedule = {0.2, 0.8};
  cfg.mc_budget = 20000;
  const auto curve = run_learning_curve(cfg);
  CHECK(curve[0].excess_rank.value <= 3.0 * curve[0].excess_rank.std_error + 1e-12);
}

TEST_CASE("experiment config from json") {
  const auto j = nlohmann::json::parse(R"({"spec": {"kind": "UniformShift"}, "loss": "hinge",
      "n_grid": [16, 32], "repetitions": 3, "seed": 11})");
  const auto c = ExperimentConfig::from_json(j);
  CHECK(c.schedule.a == doctest::Approx(0.2));
  CHECK(c.schedule.b == doctest::Approx(0.8));
  CHECK(c.repetitions == 3);
  CHECK(c.seed == 11);
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::parse(R"({"n_grid": "x"})")), ValidationError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::parse(R"({"schedule": "fast"})")), ValidationError);
}

TEST_CASE("oracle term diagnostics") {
  OracleTermsInput in;
  in.n = 256;
  const Schedule s = Schedule::hinge(1.0, 2.0, 1.0, 1);
  in.sigma = s.sigma(in.n);
  in.lambda = s.lambda(in.n);
  in.p = Schedule::p(in.n);
  in.r = std::sqrt(2.0);
  for (auto mode : {ConstantsMode::unit, ConstantsMode::shape}) {
    const auto base = oracle_terms_report(in, mode);
    OracleTermsInput twice = in;
    twice.lambda *= 2.0;
    CHECK(oracle_terms_report(twice, mode)[0].value == doctest::Approx(2.0 * base[0].value));
  }
  // Pure n-dependence: approximation and estimation terms balance at the schedule.
  const auto shape = oracle_terms_report(in, ConstantsMode::shape);
  const double approx = shape[0].value + shape[1].value;
  const double estimation = shape[2].value;
  CHECK(std::abs(std::log10(approx / estimation)) <= 1.0);

  // lambda sigma^{-2d} = n^{-b + 2a} shrinks along the schedule.
  double prev = 1e300;
  for (int n : {32, 64, 128, 256, 1024}) {
    OracleTermsInput k = in;
    k.n = n;
    k.sigma = s.sigma(n);
    k.lambda = s.lambda(n);
    k.p = Schedule::p(n);
    const double v = oracle_terms_report(k, ConstantsMode::shape)[0].value;
    CHECK(v < prev);
    prev = v;
  }
  OracleTermsInput sq = in;
  sq.loss = LossSpec::square();
  CHECK(oracle_terms_report(sq, ConstantsMode::unit).size() == 4);
  OracleTermsInput bad = in;
  bad.lambda = 0.0;
  CHECK_THROWS_AS(oracle_terms_report(bad, ConstantsMode::unit), DomainError);
}
