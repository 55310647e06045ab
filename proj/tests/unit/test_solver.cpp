#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "pairrank/solver.hpp"
#include "pairrank/synth.hpp"

using namespace pairrank;

namespace {

Dataset two_points(double y1, double y2) {
  Dataset d;
  d.x.resize(2, 1);
  d.x << 0.2, 0.9;
  d.y.resize(2);
  d.y << y1, y2;
  return d;
}

double diagonal_k(const Dataset& d, double sigma) {
  const double dist = (d.x.row(0) - d.x.row(1)).squaredNorm();
  return 0.5 * (1.0 - std::exp(-2.0 * dist / (sigma * sigma)));
}

double empirical_risk(const RankingModel& m, const Dataset& d) {
  double total = 0.0;
  for (int i = 0; i < d.n(); ++i)
    for (int j = 0; j < d.n(); ++j)
      if (i != j) total += margin_loss(m.loss, d.y[i], d.y[j], m.predict(d.point(i), d.point(j)));
  return total / (d.n() * (d.n() - 1.0));
}

}  // namespace

TEST_CASE("enumerate_pairs") {
  const auto all3 = enumerate_pairs(3);
  REQUIRE(all3.size() == 3);
  CHECK(all3[0] == IndexPair{0, 1});
  CHECK(all3[1] == IndexPair{0, 2});
  CHECK(all3[2] == IndexPair{1, 2});
  CHECK(enumerate_pairs(100).size() == 4950);
  const auto a = enumerate_pairs(3, 2, 7);
  CHECK(a.size() == 2);
  CHECK(a == enumerate_pairs(3, 2, 7));
  const auto big = enumerate_pairs(50, 300, 9);
  CHECK(big.size() == 300);
  CHECK(std::is_sorted(big.begin(), big.end()));
  CHECK(std::adjacent_find(big.begin(), big.end()) == big.end());
  CHECK_THROWS_AS(enumerate_pairs(1), ValidationError);
}

TEST_CASE("two-point closed forms") {
  for (double sigma : {0.3, 1.0}) {
    for (double lambda : {1e-3, 0.05, 0.4, 3.0}) {
      for (double s : {1.0, -1.0}) {
        const Dataset d = two_points(s > 0 ? 1.0 : 0.0, s > 0 ? 0.0 : 1.0);
        const double k = diagonal_k(d, sigma);
        const auto sq = fit_square(d, sigma, lambda);
        CHECK(std::abs(sq.model.predict(d.point(0), d.point(1)) - s * k / (k + lambda)) <= 1e-8);
        SolverOptions o;
        o.tol_gap = 1e-10;
        const auto h = fit_hinge(d, sigma, lambda, o);
        CHECK(h.report.converged);
        CHECK(std::abs(h.model.predict(d.point(0), d.point(1)) - s * std::min(1.0, k / (2 * lambda))) <= 1e-6);
      }
    }
  }
}

TEST_CASE("square solver matches the ordered-pair normal equations") {
  for (int n : {4, 9, 12}) {
    const Dataset d = DistributionSpec::uniform_shift().sample(n, 100 + n);
    for (double lambda : {1e-3, 0.1}) {
      const double sigma = 0.4;
      const auto fit = fit_square(d, sigma, lambda);
      const Eigen::MatrixXd want = oracle::square_fit_values(d, sigma, lambda);
      const Eigen::MatrixXd got = fit.model.predict_matrix(d.x);
      CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-8);
      CHECK(fit.report.residual <= 1e-8);
    }
  }
}

TEST_CASE("square solver on ties and CG path") {
  // Binary labels leave many tied pairs; those stay out of the expansion.
  const Dataset d = DistributionSpec::power_noise(0.1).sample(12, 5);
  const auto dense = fit_square(d, 0.5, 0.01);
  const Eigen::MatrixXd want = oracle::square_fit_values(d, 0.5, 0.01);
  CHECK((dense.model.predict_matrix(d.x) - want).cwiseAbs().maxCoeff() <= 1e-8);

  const Dataset big = DistributionSpec::uniform_shift().sample(30, 6);
  SolverOptions cg;
  cg.dense_limit = 10;
  const auto a = fit_square(big, 0.3, 0.01);
  const auto b = fit_square(big, 0.3, 0.01, cg);
  CHECK(b.report.residual <= 1e-8);
  CHECK((a.model.alpha - b.model.alpha).cwiseAbs().maxCoeff() <= 1e-7);

  Dataset tied = big;
  tied.y.setConstant(2.0);
  const auto z = fit_square(tied, 0.3, 0.01);
  CHECK(z.model.alpha.size() == 0);
  CHECK(z.report.objective == 1.0);
}

TEST_CASE("hinge solver matches a projected-subgradient oracle") {
  const Dataset d = DistributionSpec::uniform_shift().sample(10, 3);
  const double sigma = 0.5, lambda = 0.01;
  const auto fit = fit_hinge(d, sigma, lambda);
  CHECK(fit.report.converged);
  CHECK(fit.report.duality_gap <= 1e-6);
  const auto o = oracle::hinge_subgradient(d, sigma, lambda, 200000);
  // The oracle's best iterate is feasible, so it cannot beat the optimum by more than the gap.
  CHECK(o.best_objective >= fit.report.objective - fit.report.duality_gap - 1e-12);
  CHECK(std::abs(o.best_objective - fit.report.objective) <= 1e-4);
}

TEST_CASE("hinge dual objective is nondecreasing") {
  const Dataset d = DistributionSpec::uniform_shift().sample(40, 8);
  const auto fit = fit_hinge(d, 0.3, 1e-3);
  CHECK(fit.report.converged);
  const auto& h = fit.report.dual_history;
  REQUIRE(h.size() >= 2);
  for (std::size_t k = 1; k < h.size(); ++k) CHECK(h[k] >= h[k - 1] - 1e-12 * std::abs(h[k]));
}

TEST_CASE("large regularization drives f to zero") {
  const Dataset d = DistributionSpec::uniform_shift().sample(15, 2);
  for (const LossSpec& loss : {LossSpec::hinge(), LossSpec::square()}) {
    const auto fit = pairrank::fit(d, loss, 0.5, 1e6);
    const Eigen::MatrixXd F = fit.model.predict_matrix(d.x);
    CHECK(F.cwiseAbs().maxCoeff() <= 1e-3);
    CHECK(fit.report.objective == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("fitted model properties") {
  Stream rng(41, 0);
  for (const LossSpec& loss : {LossSpec::hinge(), LossSpec::square()}) {
    const Dataset d = DistributionSpec::uniform_shift().sample(25, 17);
    const double lambda = 0.01;
    const auto fit = pairrank::fit(d, loss, 0.4, lambda);
    const RankingModel& m = fit.model;

    // Skew symmetry and the diagonal.
    for (int k = 0; k < 1000; ++k) {
      const Point x = Point::Constant(1, rng.uniform(-0.5, 1.5));
      const Point y = Point::Constant(1, rng.uniform(-0.5, 1.5));
      CHECK(std::abs(m.predict(x, y) + m.predict(y, x)) <= 1e-9);
      CHECK(m.predict(x, x) == 0.0);
      CHECK(std::abs(m.predict_truncated(x, y)) <= m.loss.M);
    }

    // Objective bookkeeping and the norm bound ||f||^2 <= B / lambda.
    CHECK(std::abs(objective(m, d) - fit.report.objective) <= 1e-12);
    CHECK(std::abs(empirical_risk(m, d) + lambda * m.rkhs_norm_sq - objective(m, d)) <= 1e-12);
    CHECK(m.rkhs_norm_sq <= loss.B / lambda);
    CHECK(objective(m, d) <= 1.0);

    // Truncation never increases the empirical risk.
    double trunc = 0.0;
    for (int i = 0; i < d.n(); ++i)
      for (int j = 0; j < d.n(); ++j)
        if (i != j) trunc += margin_loss(loss, d.y[i], d.y[j], m.predict_truncated(d.point(i), d.point(j)));
    CHECK(trunc / (d.n() * (d.n() - 1.0)) <= empirical_risk(m, d) + 1e-15);

    // Local optimality against coefficient perturbations.
    const Eigen::MatrixXd g = point_gram(d.x, m.sigma);
    for (int t = 0; t < 100; ++t) {
      RankingModel p = m;
      for (Eigen::Index k = 0; k < p.alpha.size(); ++k) p.alpha[k] += 1e-2 * rng.uniform(-1, 1);
      double nsq = 0.0;
      for (Eigen::Index a = 0; a < p.alpha.size(); ++a)
        for (Eigen::Index b = 0; b < p.alpha.size(); ++b) {
          const auto [i, j] = p.pairs[a];
          const auto [u, v] = p.pairs[b];
          nsq += p.alpha[a] * p.alpha[b] * 0.5 * (g(i, u) * g(j, v) - g(j, u) * g(i, v));
        }
      p.rkhs_norm_sq = nsq;
      CHECK(objective(m, d) <= objective(p, d) + 1e-6);
    }
  }
}

TEST_CASE("zero model and reproducibility") {
  const Dataset d = DistributionSpec::uniform_shift().sample(20, 1);
  RankingModel zero;
  zero.sigma = 0.5;
  zero.lambda = 0.1;
  zero.points = d.x;
  CHECK(objective(zero, d) == 1.0);
  zero.loss = LossSpec::square();
  CHECK(objective(zero, d) == 1.0);
  const auto a = fit_hinge(d, 0.4, 0.01);
  const auto b = fit_hinge(d, 0.4, 0.01);
  CHECK(a.model.alpha == b.model.alpha);
  CHECK(a.report.objective == b.report.objective);
}

TEST_CASE("model serialization round trips exactly") {
  const Dataset d = DistributionSpec::manifold_embedding(DistributionSpec::uniform_shift(), 3,
                                                         EmbeddingKind::circle)
                        .sample(15, 2);
  const auto fit = fit_square(d, 0.7, 0.02);
  std::stringstream ss;
  fit.model.save(ss);
  const RankingModel back = RankingModel::load(ss);
  CHECK(back.sigma == fit.model.sigma);
  CHECK(back.lambda == fit.model.lambda);
  CHECK(back.loss.id() == fit.model.loss.id());
  CHECK(back.points == fit.model.points);
  CHECK(back.pairs == fit.model.pairs);
  CHECK(back.alpha == fit.model.alpha);
  CHECK(back.rkhs_norm_sq == fit.model.rkhs_norm_sq);
  std::stringstream bad("pairrank-model 2\n");
  CHECK_THROWS_AS(RankingModel::load(bad), ValidationError);
}

TEST_CASE("input validation") {
  const Dataset d = DistributionSpec::uniform_shift().sample(5, 1);
  CHECK_THROWS_AS(fit_square(d, 0.5, 0.0), ValidationError);
  CHECK_THROWS_AS(fit_hinge(d, -1.0, 0.1), ValidationError);
  CHECK_THROWS_AS(pairrank::fit(d, LossSpec::r_norm_hinge(2.0), 0.5, 0.1), ValidationError);
}
