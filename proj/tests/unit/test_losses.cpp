#include <doctest.h>

#include <cmath>

#include "pairrank/losses.hpp"
#include "pairrank/rng.hpp"

using namespace pairrank;

TEST_CASE("psi and margin loss") {
  CHECK(psi(LossSpec::hinge(), 1.0) == 0.0);
  CHECK(psi(LossSpec::hinge(), -0.5) == 1.5);
  CHECK(psi(LossSpec::square(), 0.0) == 1.0);
  CHECK(psi(LossSpec::r_norm_hinge(2.0), -1.0) == doctest::Approx(4.0));
  for (double t : {-3.0, 0.0, 0.4, 2.0}) {
    CHECK(margin_loss(LossSpec::hinge(), 1.0, 1.0, t) == 1.0);
    CHECK(margin_loss(LossSpec::square(), -2.0, -2.0, t) == 1.0);
  }
  CHECK(margin_loss(LossSpec::hinge(), 2.0, 1.0, 0.5) == 0.5);
  CHECK(margin_loss(LossSpec::square(), 1.0, 2.0, 0.5) == 2.25);
  CHECK(sgn(0.0) == 0);
}

TEST_CASE("truncate") {
  CHECK(truncate(1.5, 1.0) == 1.0);
  CHECK(truncate(-2.0, 1.0) == -1.0);
  CHECK(truncate(0.3, 1.0) == 0.3);
}

TEST_CASE("truncation never increases the loss") {
  Stream rng(21, 0);
  for (const LossSpec& loss : {LossSpec::hinge(), LossSpec::square()}) {
    for (int k = 0; k < 5000; ++k) {
      const double y = std::floor(rng.uniform(0, 3));
      const double yp = std::floor(rng.uniform(0, 3));
      const double t = rng.uniform(-4, 4);
      CHECK(margin_loss(loss, y, yp, truncate(t, 1.0)) <= margin_loss(loss, y, yp, t));
    }
  }
}

TEST_CASE("Lipschitz and sup constants on [-M, M]") {
  for (const LossSpec& loss : {LossSpec::hinge(), LossSpec::square(), LossSpec::r_norm_hinge(1.5)}) {
    double prev = psi(loss, -loss.M);
    const int steps = 4000;
    for (int k = 1; k <= steps; ++k) {
      const double t = -loss.M + 2.0 * loss.M * k / steps;
      const double v = psi(loss, t);
      CHECK(v <= loss.B + 1e-12);
      CHECK(std::abs(v - prev) <= loss.L * 2.0 * loss.M / steps + 1e-12);
      prev = v;
    }
  }
}

TEST_CASE("loss ids round trip") {
  for (const LossSpec& loss : {LossSpec::hinge(), LossSpec::square(), LossSpec::r_norm_hinge(1.25)}) {
    const LossSpec back = LossSpec::from_id(loss.id());
    CHECK(back.kind == loss.kind);
    CHECK(back.r == loss.r);
  }
  CHECK_THROWS_AS(LossSpec::from_id("logistic"), ValidationError);
}

TEST_CASE("pointwise Bayes examples") {
  const PosteriorTriple p{0.875, 0.125, 0.0};
  const auto h = pointwise_bayes(LossSpec::hinge(), p);
  CHECK(h.first <= 1.0);
  CHECK(h.second >= 1.0);
  const auto s = pointwise_bayes(LossSpec::square(), p);
  CHECK(s.first == doctest::Approx(0.75));
  CHECK(s.second == doctest::Approx(0.75));

  const PosteriorTriple even{0.3, 0.3, 0.4};
  for (const LossSpec& loss :
       {LossSpec::hinge(), LossSpec::square(), LossSpec::r_norm_hinge(2.0),
        LossSpec::custom([](double t) { return std::log1p(std::exp(-t)); }, 1, 2, 1, 2)}) {
    const auto iv = pointwise_bayes(loss, even);
    CHECK(iv.first <= 1e-6);
    CHECK(iv.second >= -1e-6);
  }
}

TEST_CASE("pointwise Bayes sign agreement and range") {
  Stream rng(22, 0);
  const LossSpec losses[] = {LossSpec::hinge(), LossSpec::square(), LossSpec::r_norm_hinge(2.0)};
  for (int k = 0; k < 10000; ++k) {
    double a = rng.uniform(), b = rng.uniform(), c = rng.uniform();
    const double tot = a + b + c;
    const PosteriorTriple post{a / tot, b / tot, c / tot};
    for (const LossSpec& loss : losses) {
      const auto [lo, hi] = pointwise_bayes(loss, post);
      CHECK(lo <= 1.0 + 1e-6);
      CHECK(hi >= -1.0 - 1e-6);
      const double diff = post.eta_plus - post.eta_minus;
      const double v = pointwise_bayes_value(loss, post);
      if (diff > 1e-6) CHECK(v >= 0.0);
      if (diff < -1e-6) CHECK(v <= 0.0);
      // The reported minimizer beats a coarse grid.
      const double best = conditional_risk(loss, post, v);
      for (double t = -2.0; t <= 2.0; t += 0.25) CHECK(best <= conditional_risk(loss, post, t) + 1e-8);
    }
    // Square loss: Psi(0) - Psi(f*) = diff^2 / (eta+ + eta-) >= diff^2.
    const LossSpec sq = LossSpec::square();
    const double gain = conditional_risk(sq, post, 0.0) - min_conditional_risk(sq, post);
    const double diff = post.eta_plus - post.eta_minus;
    CHECK(gain == doctest::Approx(diff * diff / (post.eta_plus + post.eta_minus)).epsilon(1e-9));
    CHECK(diff * diff <= calibration_constant(sq) * gain + 1e-15);
  }
  CHECK_THROWS_AS(calibration_constant(LossSpec::hinge()), DomainError);
}

TEST_CASE("posterior validation") {
  CHECK_NOTHROW((PosteriorTriple{0.2, 0.3, 0.5}.validate()));
  CHECK_THROWS_AS((PosteriorTriple{0.2, 0.3, 0.6}.validate()), DomainError);
  CHECK_THROWS_AS((PosteriorTriple{-0.1, 0.6, 0.5}.validate()), DomainError);
}
