#include "pairrank/approximation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "pairrank/losses.hpp"
#include "pairrank/rng.hpp"

namespace pairrank {

namespace {

constexpr double kWindow = 4.0;  // half-width of the kernel window in units of sigma
constexpr long kMaxNodes = 20'000'000;

// Unnormalized 1-D weights exp(-2 (x - i h)^2 / sigma^2) over i in [lo, lo + size).
struct Weights {
  long lo = 0;
  std::vector<double> w;
  double sum = 0.0;
};

Weights window_weights(double x, double sigma, double h) {
  Weights out;
  const double reach = kWindow * sigma;
  out.lo = static_cast<long>(std::ceil((x - reach) / h));
  const long hi = static_cast<long>(std::floor((x + reach) / h));
  const double c = 2.0 / (sigma * sigma);
  for (long i = out.lo; i <= hi; ++i) {
    const double t = x - static_cast<double>(i) * h;
    out.w.push_back(std::exp(-c * t * t));
  }
  for (double v : out.w) out.sum += v;
  return out;
}

void check_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("sigma must be positive");
}

}  // namespace

void ConvolutionConfig::validate() const {
  check_sigma(sigma);
  if (s < 1) throw ValidationError("fold count must be at least 1");
  if (quadrature == Quadrature::grid) {
    if (h < 0.0) throw ValidationError("grid step must be positive");
    if (step() > sigma / 8.0) throw ResolutionError("grid step exceeds sigma/8");
  } else if (mc_samples < 2) {
    throw ValidationError("Monte Carlo convolution needs at least two samples");
  }
}

Eigen::VectorXd stack(const PointPair& p) {
  if (p.first.size() != p.second.size()) throw ValidationError("pair dimension mismatch");
  Eigen::VectorXd z(p.first.size() * 2);
  z << p.first, p.second;
  return z;
}

double convolve(const JointFunction& f, const ConvolutionConfig& cfg, const PointPair& point) {
  cfg.validate();
  const Eigen::VectorXd p = stack(point);
  const auto dim = p.size();
  if (cfg.quadrature == Quadrature::monte_carlo) {
    Stream rng(cfg.seed, 0xc0417ULL);
    const double sd = cfg.sigma / 2.0;
    double acc = 0.0;
    Eigen::VectorXd z(dim);
    for (long m = 0; m < cfg.mc_samples; ++m) {
      for (Eigen::Index k = 0; k < dim; ++k) z[k] = p[k] + sd * rng.normal();
      acc += f(z);
    }
    return acc / static_cast<double>(cfg.mc_samples);
  }

  // Cell midpoints p + h (k + 1/2) share one 1-D weight table per coordinate;
  // midpoints keep nodes off discontinuities aligned with p.
  const double h = cfg.step();
  const Weights base = window_weights(0.5 * h, cfg.sigma, h);
  const long width = static_cast<long>(base.w.size());
  long nodes = 1;
  for (Eigen::Index k = 0; k < dim; ++k) {
    if (nodes > kMaxNodes / width) throw CapacityError("convolution grid too large; use Monte Carlo");
    nodes *= width;
  }
  std::vector<long> idx(dim, 0);
  Eigen::VectorXd z(dim);
  double acc = 0.0;
  for (long node = 0; node < nodes; ++node) {
    double w = 1.0;
    for (Eigen::Index k = 0; k < dim; ++k) {
      w *= base.w[idx[k]];
      z[k] = p[k] + (static_cast<double>(base.lo + idx[k]) - 0.5) * h;
    }
    acc += w * f(z);
    for (Eigen::Index k = 0; k < dim; ++k) {
      if (++idx[k] < width) break;
      idx[k] = 0;
    }
  }
  return acc / std::pow(base.sum, static_cast<double>(dim));
}

double skew_convolve(const JointFunction& f, const ConvolutionConfig& cfg, const PointPair& point) {
  return 0.5 * (convolve(f, cfg, point) - convolve(f, cfg, swap(point)));
}

PlaneRaster::PlaneRaster(const std::function<double(double, double)>& f, double h, double extent)
    : h_(h), half_(static_cast<int>(std::ceil(extent / h))) {
  if (!(h > 0.0) || !(extent > 0.0)) throw ValidationError("raster needs positive step and extent");
  const long side = 2L * half_ + 1;
  if (side * side > kMaxNodes) throw CapacityError("raster too large");
  values_.resize(side, side);
  for (int i = -half_; i <= half_; ++i)
    for (int j = -half_; j <= half_; ++j) values_(i + half_, j + half_) = f(i * h_, j * h_);
}

double PlaneRaster::convolve(double sigma, double x, double x_prime) const {
  check_sigma(sigma);
  const Weights wx = window_weights(x, sigma, h_);
  const Weights wy = window_weights(x_prime, sigma, h_);
  double acc = 0.0;
  for (std::size_t a = 0; a < wx.w.size(); ++a) {
    const long i = wx.lo + static_cast<long>(a);
    if (i < -half_ || i > half_) continue;
    double row = 0.0;
    for (std::size_t b = 0; b < wy.w.size(); ++b) {
      const long j = wy.lo + static_cast<long>(b);
      if (j < -half_ || j > half_) continue;
      row += wy.w[b] * values_(i + half_, j + half_);
    }
    acc += wx.w[a] * row;
  }
  return acc / (wx.sum * wy.sum);
}

double PlaneRaster::l2_norm() const { return h_ * values_.norm(); }

double ball_union_sign(double u, double u_prime) {
  // Rotated coordinates: m along the diagonal, a signed distance from it. The
  // unit square is 0 <= m <= sqrt2, |a| <= A(m) = min(m, sqrt2 - m), and the
  // ball around a center (m0, a0) with a0 > 0 has radius a0 / 2.
  const double s2 = std::numbers::sqrt2;
  const double m = (u + u_prime) / s2;
  const double a_signed = (u - u_prime) / s2;
  if (a_signed == 0.0) return 0.0;
  const double a = std::abs(a_signed);
  // Inside the ball of (m0, a0): (m - m0)^2 + (a - a0)^2 - a0^2/4 < 0. For fixed
  // m0 the left side is minimized at a0 = 4a/3, giving (m - m0)^2 - a^2/3.
  const double free_a = 4.0 * a / 3.0;
  bool inside = false;
  if (free_a <= s2 / 2.0) {
    const double lo = free_a;
    const double hi = s2 - free_a;
    const double gap = m < lo ? lo - m : (m > hi ? m - hi : 0.0);
    inside = gap * gap - a * a / 3.0 < 0.0;
  }
  // Centers with A(m0) < 4a/3 sit on the capped edge a0 = A(m0); the left edge
  // (A = m0) gives a convex quadratic in m0 minimized at 4(m + a)/7.
  const auto edge = [&](double mm) {
    const double cap = std::min(free_a, s2 / 2.0);
    const double m0 = std::clamp(4.0 * (mm + a) / 7.0, 0.0, cap);
    return (mm - m0) * (mm - m0) + (a - m0) * (a - m0) - m0 * m0 / 4.0 < 0.0 && m0 > 0.0;
  };
  inside = inside || edge(m) || edge(s2 - m);
  if (!inside) return 0.0;
  return a_signed > 0.0 ? 1.0 : -1.0;
}

Approximator hinge_f0(const DistributionSpec& spec, double sigma, double r, double h) {
  check_sigma(sigma);
  if (spec.dim() != 1 || !spec.diagonal_boundary())
    throw ValidationError("hinge approximator needs a 1-D law with a diagonal decision boundary");
  if (r <= 0.0) r = spec.support_radius();
  if (h <= 0.0) h = sigma / 10.0;
  if (h > sigma / 8.0) throw ResolutionError("grid step exceeds sigma/8");
  // The ball union lies inside 2rB; the window of points in X^2 reaches r + 4 sigma.
  const double extent = std::max(2.0 * r, r + kWindow * sigma) + h;
  auto raster = std::make_shared<const PlaneRaster>(ball_union_sign, h, extent);
  Approximator out;
  out.raster = raster;
  out.f0 = [raster, sigma](const Point& x, const Point& xp) {
    return raster->convolve(sigma, x[0], xp[0]);
  };
  out.sup_bound = 1.0;
  const double d = 1.0;
  const double ball_vol = std::pow(std::numbers::pi, d) / std::tgamma(d + 1.0);
  out.norm_bound = std::pow(std::numbers::pi * sigma * sigma, -d / 2.0) * std::pow(2.0 * r, d) *
                   std::sqrt(ball_vol);
  out.extension_l2 = raster->l2_norm();
  return out;
}

Approximator square_f0(const DistributionSpec& spec, double sigma, int s, double r, double h) {
  check_sigma(sigma);
  if (s < 1) throw ValidationError("fold count must be at least 1");
  if (spec.dim() != 1) throw ValidationError("square approximator needs a 1-D law");
  if (r <= 0.0) r = spec.support_radius();
  if (h <= 0.0) h = sigma / 10.0;
  if (h > sigma / 8.0) throw ResolutionError("grid step exceeds sigma/8");
  const double cut = 4.0 * r * r;
  const auto ext = [&spec, cut](double u, double v) {
    return u * u + v * v <= cut ? extended_f_square(spec, u, v) : 0.0;
  };
  const double extent = std::max(2.0 * r, r + kWindow * s * sigma) + h;
  auto raster = std::make_shared<const PlaneRaster>(ext, h, extent);
  std::vector<double> coef(s);
  for (int j = 1; j <= s; ++j) {
    const double binom = std::round(std::exp(std::lgamma(s + 1.0) - std::lgamma(j + 1.0) -
                                             std::lgamma(s - j + 1.0)));
    coef[j - 1] = (j % 2 == 1 ? 1.0 : -1.0) * binom;
  }
  Approximator out;
  out.raster = raster;
  out.f0 = [raster, sigma, coef](const Point& x, const Point& xp) {
    double v = 0.0;
    for (std::size_t j = 0; j < coef.size(); ++j)
      v += coef[j] * raster->convolve(static_cast<double>(j + 1) * sigma, x[0], xp[0]);
    return v;
  };
  out.sup_bound = std::ldexp(1.0, s);
  out.extension_l2 = raster->l2_norm();
  out.norm_bound = out.sup_bound * std::pow(sigma * std::sqrt(std::numbers::pi), -1.0) * out.extension_l2;
  return out;
}

double hinge_approx_rhs(int d, double r, double lambda, double sigma, double beta, double C_ss) {
  const double dd = d;
  const double first = std::pow(2.0, 2.0 * dd + 1.0) * std::pow(r, 2.0 * dd) / std::tgamma(dd) *
                       lambda * std::pow(sigma, -2.0 * dd);
  const double second = std::pow(2.0, beta / 2.0 + 1.0) * C_ss * std::tgamma(dd + beta / 2.0) /
                        std::tgamma(dd) * std::pow(sigma, beta);
  return first + second;
}

namespace {

double probe_sup(const PairFunction& f, double r, int probes, std::uint64_t seed) {
  Stream rng(seed, 0x9b0be5ULL);
  double sup = 0.0;
  Point a(1), b(1);
  for (int k = 0; k < probes; ++k) {
    if (k % 2 == 0) {
      a[0] = rng.uniform();
      b[0] = rng.uniform();
    } else {
      a[0] = rng.uniform(-2.0 * r, 2.0 * r);
      b[0] = rng.uniform(-2.0 * r, 2.0 * r);
    }
    sup = std::max(sup, std::abs(f(a, b)));
  }
  return sup;
}

}  // namespace

HingeApproxCheck hinge_approx_check(const DistributionSpec& spec, double sigma, double lambda,
                                    int probes, std::uint64_t seed, double tol) {
  if (!(lambda > 0.0) || probes < 1) throw DomainError("need lambda > 0 and probes >= 1");
  const auto ex = spec.exponents();
  if (!std::isfinite(ex.beta) || !std::isfinite(ex.C_star_star))
    throw ValidationError("margin-noise constants of this law are not known");
  const double r = spec.support_radius();
  const Approximator ap = hinge_f0(spec, sigma, r);
  HingeApproxCheck c;
  c.sigma = sigma;
  c.lambda = lambda;
  c.norm_bound = ap.norm_bound;
  c.sup_norm = probe_sup(ap.f0, r, probes, seed);
  PopulationOptions opts;
  opts.tol = tol;
  c.excess_phi = excess_risks(ap.f0, spec, LossSpec::hinge(), opts).phi;
  c.lhs = lambda * ap.norm_bound * ap.norm_bound + c.excess_phi.value;
  c.rhs = hinge_approx_rhs(spec.dim(), r, lambda, sigma, ex.beta, ex.C_star_star);
  c.pass = c.sup_norm <= ap.sup_bound + 1e-12 && c.lhs <= c.rhs;
  return c;
}

SquareApproxCheck square_approx_check(const DistributionSpec& spec, double sigma, int s,
                                      int probes, std::uint64_t seed, double tol) {
  const double r = spec.support_radius();
  const Approximator ap = square_f0(spec, sigma, s, r);
  SquareApproxCheck c;
  c.sigma = sigma;
  c.s = s;
  c.sup_bound = ap.sup_bound;
  c.norm_bound = ap.norm_bound;
  c.sup_norm = probe_sup(ap.f0, r, probes, seed);
  PopulationOptions opts;
  opts.tol = tol;
  c.excess_phi = excess_risks(ap.f0, spec, LossSpec::square(), opts).phi;
  const PairFunction fstar = bayes_rules(spec).f_square;
  c.l2_dist_sq = integrate_latent(
      spec,
      [&](double u, double v) {
        const Point a = spec.embed(u), b = spec.embed(v);
        const double diff = ap.f0(a, b) - fstar(a, b);
        return diff * diff;
      },
      tol);
  c.pass = c.sup_norm <= c.sup_bound && c.excess_phi.value <= c.l2_dist_sq + 10.0 * tol;
  return c;
}

}  // namespace pairrank
