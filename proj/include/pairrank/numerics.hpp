#pragma once

#include <functional>
#include <vector>

namespace pairrank {

// Adaptive Simpson on [a, b] with absolute tolerance tol.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol, int max_depth = 40);

// Integral over [lo, hi] split at the given interior break points.
double integrate_piecewise(const std::function<double(double)>& f, double lo, double hi,
                           std::vector<double> breaks, double tol);

// Integral of g(u, v) over [0,1]^2 by nested adaptive Simpson. The inner
// integral over v is split at inner_breaks(u) and the outer one at outer_breaks.
double integrate_unit_square(const std::function<double(double, double)>& g,
                             const std::function<std::vector<double>(double)>& inner_breaks,
                             const std::vector<double>& outer_breaks, double tol);

struct MeanAccumulator {
  long count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v);
  double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }
  double stderr_of_mean() const;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

// Ordinary least squares y = intercept + slope * x.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

double median(std::vector<double> v);

std::vector<double> log_grid(double lo, double hi, int count);

}  // namespace pairrank
