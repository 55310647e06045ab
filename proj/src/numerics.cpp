#include "pairrank/numerics.hpp"

#include <algorithm>
#include <cmath>

#include "pairrank/common.hpp"

namespace pairrank {

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double b, double fa,
                    double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double diff = left + right - whole;
  if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth) {
  if (b <= a) return 0.0;
  // Seed with four panels so a feature hidden between the first three nodes is still seen.
  const int panels = 4;
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double lo = a + k * h;
    const double hi = (k + 1 == panels) ? b : lo + h;
    const double flo = f(lo);
    const double fmid = f(0.5 * (lo + hi));
    const double fhi = f(hi);
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    total += simpson_step(f, lo, hi, flo, fmid, fhi, whole, tol / panels, max_depth);
  }
  return total;
}

double integrate_piecewise(const std::function<double(double)>& f, double lo, double hi,
                           std::vector<double> breaks, double tol) {
  breaks.push_back(lo);
  breaks.push_back(hi);
  std::sort(breaks.begin(), breaks.end());
  double total = 0.0;
  double prev = lo;
  int pieces = 0;
  for (double b : breaks) pieces += (b > lo && b <= hi) ? 1 : 0;
  pieces = std::max(pieces, 1);
  for (double b : breaks) {
    if (b <= prev || b > hi) continue;
    total += adaptive_simpson(f, prev, b, tol / pieces);
    prev = b;
  }
  return total;
}

double integrate_unit_square(const std::function<double(double, double)>& g,
                             const std::function<std::vector<double>(double)>& inner_breaks,
                             const std::vector<double>& outer_breaks, double tol) {
  auto inner = [&](double u) {
    return integrate_piecewise([&](double v) { return g(u, v); }, 0.0, 1.0, inner_breaks(u),
                               0.5 * tol);
  };
  return integrate_piecewise(inner, 0.0, 1.0, outer_breaks, 0.5 * tol);
}

void MeanAccumulator::add(double v) {
  ++count;
  const double delta = v - mean;
  mean += delta / static_cast<double>(count);
  m2 += delta * (v - mean);
}

double MeanAccumulator::stderr_of_mean() const {
  if (count < 2) return 0.0;
  return std::sqrt(variance() / static_cast<double>(count));
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) throw ValidationError("line fit needs at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) throw ValidationError("line fit with a degenerate abscissa grid");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - fit.intercept - fit.slope * x[i];
      rss += r * r;
    }
    fit.slope_stderr = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}

double median(std::vector<double> v) {
  if (v.empty()) throw ValidationError("median of an empty list");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) throw ValidationError("invalid log grid");
  std::vector<double> g(count);
  const double step = std::log(hi / lo) / (count - 1);
  for (int k = 0; k < count; ++k) g[k] = lo * std::exp(step * k);
  g.back() = hi;
  return g;
}

}  // namespace pairrank
