#include "pairrank/losses.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "pairrank/common.hpp"

namespace pairrank {

LossSpec LossSpec::hinge() { return LossSpec{}; }

LossSpec LossSpec::square(int s) {
  if (s < 1) throw ValidationError("fold count s must be at least 1");
  LossSpec l;
  l.kind = LossKind::square;
  l.L = 4.0;
  l.B = 4.0;
  l.M = 1.0;
  l.B0 = std::ldexp(1.0, 2 * s + 2);
  return l;
}

LossSpec LossSpec::r_norm_hinge(double r) {
  if (!(r >= 1.0)) throw ValidationError("r-norm hinge needs r >= 1");
  LossSpec l;
  l.kind = LossKind::r_norm_hinge;
  l.r = r;
  l.M = 1.0;
  l.B = std::pow(2.0, r);
  l.L = r * std::pow(2.0, r - 1.0);
  l.B0 = l.B;
  return l;
}

LossSpec LossSpec::custom(std::function<double(double)> psi_fn, double L, double B, double M,
                          double B0) {
  if (!psi_fn) throw ValidationError("custom loss needs an evaluator");
  if (!(L > 0.0 && B > 0.0 && M > 0.0)) throw ValidationError("loss constants must be positive");
  LossSpec l;
  l.kind = LossKind::custom;
  l.custom_psi = std::move(psi_fn);
  l.L = L;
  l.B = B;
  l.M = M;
  l.B0 = B0;
  return l;
}

std::string LossSpec::id() const {
  switch (kind) {
    case LossKind::hinge:
      return "hinge";
    case LossKind::square:
      return "square";
    case LossKind::r_norm_hinge: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "r_norm_hinge:%.17g", r);
      return buf;
    }
    case LossKind::custom:
      return "custom";
  }
  return "custom";
}

LossSpec LossSpec::from_id(const std::string& id) {
  if (id == "hinge") return hinge();
  if (id == "square") return square();
  const std::string prefix = "r_norm_hinge:";
  if (id.rfind(prefix, 0) == 0) return r_norm_hinge(std::stod(id.substr(prefix.size())));
  throw ValidationError("unknown loss id '" + id + "'");
}

void PosteriorTriple::validate() const {
  const double tol = 1e-9;
  for (double v : {eta_plus, eta_minus, eta_eq})
    if (!(v >= -tol && v <= 1.0 + tol)) throw DomainError("posterior outside [0, 1]");
  if (std::abs(eta_plus + eta_minus + eta_eq - 1.0) > tol)
    throw DomainError("posteriors do not sum to 1");
}

double psi(const LossSpec& loss, double t) {
  switch (loss.kind) {
    case LossKind::hinge:
      return t < 1.0 ? 1.0 - t : 0.0;
    case LossKind::square:
      return (1.0 - t) * (1.0 - t);
    case LossKind::r_norm_hinge:
      return t < 1.0 ? std::pow(1.0 - t, loss.r) : 0.0;
    case LossKind::custom:
      return loss.custom_psi(t);
  }
  return 0.0;
}

double margin_loss(const LossSpec& loss, double y, double y_prime, double t) {
  return psi(loss, sgn(y - y_prime) * t);
}

double conditional_risk(const LossSpec& loss, const PosteriorTriple& post, double t) {
  return post.eta_plus * psi(loss, t) + post.eta_minus * psi(loss, -t) +
         post.eta_eq * psi(loss, 0.0);
}

double golden_section_min(const std::function<double(double)>& f, double lo, double hi,
                          double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

std::pair<double, double> pointwise_bayes(const LossSpec& loss, const PosteriorTriple& post) {
  post.validate();
  const double inf = std::numeric_limits<double>::infinity();
  const double ep = post.eta_plus;
  const double em = post.eta_minus;
  switch (loss.kind) {
    case LossKind::hinge:
      // Psi is piecewise linear with kinks at -1 and 1.
      if (ep > em) return {1.0, em > 0.0 ? 1.0 : inf};
      if (ep < em) return {ep > 0.0 ? -1.0 : -inf, -1.0};
      if (ep > 0.0) return {-1.0, 1.0};
      return {-inf, inf};
    case LossKind::square:
      if (ep + em <= 0.0) return {0.0, 0.0};
      return {(ep - em) / (ep + em), (ep - em) / (ep + em)};
    case LossKind::r_norm_hinge:
    case LossKind::custom:
      break;
  }
  if (loss.kind == LossKind::r_norm_hinge && loss.r == 1.0)
    return pointwise_bayes(LossSpec::hinge(), post);
  const double t = golden_section_min([&](double v) { return conditional_risk(loss, post, v); },
                                      -10.0, 10.0, 1e-10);
  return {t, t};
}

double pointwise_bayes_value(const LossSpec& loss, const PosteriorTriple& post) {
  const auto [lo, hi] = pointwise_bayes(loss, post);
  if (lo <= 0.0 && hi >= 0.0) return 0.0;
  return lo > 0.0 ? lo : hi;
}

double min_conditional_risk(const LossSpec& loss, const PosteriorTriple& post) {
  return conditional_risk(loss, post, pointwise_bayes_value(loss, post));
}

double calibration_constant(const LossSpec& loss) {
  if (loss.kind == LossKind::square) return 1.0;
  throw DomainError("calibration constant is only tabulated for the square loss");
}

}  // namespace pairrank
