#include "pairrank/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_map>

#include "pairrank/kernel.hpp"
#include "pairrank/numerics.hpp"
#include "pairrank/rng.hpp"

namespace pairrank {

namespace {

// Folds distances from every column of pts to c into nearest. Euclidean
// distances are kept squared; a column is abandoned once its partial sum
// exceeds its current nearest value.
void relax(const Eigen::MatrixXd& pts, const double* c, Metric metric, Eigen::VectorXd& nearest) {
  const Eigen::Index dim = pts.rows();
  for (Eigen::Index j = 0; j < pts.cols(); ++j) {
    const double* col = pts.data() + j * dim;
    const double bound = nearest[j];
    double acc = 0.0;
    Eigen::Index k = 0;
    if (metric == Metric::sup) {
      for (; k < dim && acc <= bound; ++k) acc = std::max(acc, std::abs(col[k] - c[k]));
    } else {
      for (; k < dim && acc <= bound; ++k) acc += (col[k] - c[k]) * (col[k] - c[k]);
    }
    if (acc < bound) nearest[j] = acc;
  }
}

// Farthest-point traversal over the columns of pts. Returns radii[k] = largest
// nearest-center distance after k + 1 centers; the first center is `start`.
std::vector<double> traverse(const Eigen::MatrixXd& pts, const Eigen::VectorXd& start,
                             Metric metric, long max_centers, double stop_at,
                             std::vector<int>* chosen) {
  const Eigen::Index m = pts.cols();
  Eigen::VectorXd nearest = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::infinity());
  const auto radius = [&](Eigen::Index& far) {
    const double r = nearest.maxCoeff(&far);
    return metric == Metric::sup ? r : std::sqrt(r);
  };
  relax(pts, start.data(), metric, nearest);
  std::vector<double> radii;
  Eigen::Index far = 0;
  double r = radius(far);
  radii.push_back(r);
  while (static_cast<long>(radii.size()) < max_centers && r > stop_at) {
    if (chosen) chosen->push_back(static_cast<int>(far));
    const Eigen::VectorXd c = pts.col(far);
    relax(pts, c.data(), metric, nearest);
    r = radius(far);
    radii.push_back(r);
  }
  return radii;
}

}  // namespace

Cover greedy_cover(const Eigen::MatrixXd& points, double eps, Metric metric) {
  if (!(eps > 0.0)) throw ValidationError("cover radius must be positive");
  Cover c;
  const Eigen::Index n = points.rows();
  const int dim = static_cast<int>(points.cols());
  if (n == 0) return c;
  if (dim > 12) throw ValidationError("greedy cover hashing supports at most 12 dimensions");

  // Centers are bucketed on a grid of side eps, so any center within eps of a
  // point sits in one of the 3^dim neighbouring cells. Hash collisions only
  // cost extra distance checks.
  const auto cell_key = [](const std::vector<long>& cell) {
    std::uint64_t h = 0x51ed27ULL;
    for (long v : cell) h = mix64(h ^ static_cast<std::uint64_t>(v));
    return h;
  };
  const auto dist = [&](Eigen::Index a, Eigen::Index b) {
    const auto diff = points.row(a) - points.row(b);
    return metric == Metric::sup ? diff.cwiseAbs().maxCoeff() : diff.norm();
  };
  std::unordered_map<std::uint64_t, std::vector<int>> grid;
  long neighbours = 1;
  for (int k = 0; k < dim; ++k) neighbours *= 3;
  std::vector<long> cell(dim), probe(dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = 0; k < dim; ++k) cell[k] = static_cast<long>(std::floor(points(i, k) / eps));
    double covered = std::numeric_limits<double>::infinity();
    for (long code = 0; code < neighbours && !(covered <= eps); ++code) {
      long rest = code;
      for (int k = 0; k < dim; ++k, rest /= 3) probe[k] = cell[k] + rest % 3 - 1;
      const auto it = grid.find(cell_key(probe));
      if (it == grid.end()) continue;
      for (int j : it->second) {
        const double dij = dist(i, j);
        if (dij <= eps) {
          covered = dij;
          break;
        }
      }
    }
    if (covered <= eps) {
      c.radius = std::max(c.radius, covered);
    } else {
      c.centers.push_back(static_cast<int>(i));
      grid[cell_key(cell)].push_back(static_cast<int>(i));
    }
  }
  return c;
}

DimensionFit box_counting_fit(const Eigen::MatrixXd& points, const std::vector<double>& eps_grid,
                              Metric metric) {
  if (eps_grid.size() < 2) throw ValidationError("box counting needs at least two scales");
  const auto [lo, hi] = std::minmax_element(eps_grid.begin(), eps_grid.end());
  if (!(*lo > 0.0) || *hi < 10.0 * *lo) throw ValidationError("eps grid must span at least one decade");
  if (points.rows() == 0) throw ValidationError("box counting of an empty set");
  DimensionFit fit;
  std::vector<double> lx, ly;
  for (double eps : eps_grid) {
    const int n = greedy_cover(points, eps, metric).size();
    fit.eps.push_back(eps);
    fit.counts.push_back(n);
    lx.push_back(std::log(1.0 / eps));
    ly.push_back(std::log(static_cast<double>(n)));
  }
  const LineFit line = fit_line(lx, ly);
  fit.dim = line.slope;
  fit.std_error = line.slope_stderr;
  return fit;
}

double entropy_constant(int d, double C_X) {
  if (d < 1) throw DomainError("dimension must be at least 1");
  const double e = std::numbers::e;
  const double twod = 2.0 * d;
  const double log_binom = std::lgamma(4.0 * e + twod + 1.0) - std::lgamma(twod + 1.0) -
                           std::lgamma(4.0 * e + 1.0);
  const double log_rest = (twod + 1.0) * std::log(twod + 1.0) - (twod + 1.0) * std::log(2.0) -
                          (4.0 * d + 1.0);
  return 12.0 * C_X * C_X * std::exp(log_binom + log_rest);
}

CapacityParams CapacityParams::make(double p, int d, double rho, double C_X) {
  if (!(p > 0.0 && p < 0.5)) throw DomainError("p must lie in (0, 1/2)");
  if (!(rho > 0.0)) throw DomainError("rho must be positive");
  if (!(C_X >= 1.0)) throw DomainError("C_X must be at least 1");
  CapacityParams c;
  c.p = p;
  c.d = d;
  c.rho = rho;
  c.C_X = C_X;
  c.C_star_X = entropy_constant(d, C_X);
  return c;
}

double CapacityParams::a(double sigma) const {
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  const double log_inner = std::log(C_star_X) - (2.0 * d + 1.0) * std::log(p) - 2.0 * rho * std::log(sigma);
  return std::exp(log_inner / (2.0 * p));
}

double theoretical_entropy_bound(const CapacityParams& params, double sigma, int i) {
  if (!(params.p > 0.0 && params.p < 0.5)) throw DomainError("p must lie in (0, 1/2)");
  if (i < 1) throw DomainError("entropy index starts at 1");
  return params.a(sigma) * std::pow(static_cast<double>(i), -1.0 / (2.0 * params.p));
}

EmpiricalSeminorm EmpiricalSeminorm::pairs(Eigen::MatrixXd x) {
  if (x.rows() < 2) throw ValidationError("pairs seminorm needs at least two points");
  EmpiricalSeminorm s;
  s.kind = SeminormKind::pairs;
  s.x = std::move(x);
  return s;
}

EmpiricalSeminorm EmpiricalSeminorm::mixed(Eigen::MatrixXd x, Eigen::MatrixXd fresh) {
  if (x.rows() < 1 || fresh.rows() < 1) throw ValidationError("mixed seminorm needs points and a fresh sample");
  if (x.cols() != fresh.cols()) throw ValidationError("fresh sample dimension mismatch");
  EmpiricalSeminorm s;
  s.kind = SeminormKind::mixed;
  s.x = std::move(x);
  s.fresh = std::move(fresh);
  return s;
}

Eigen::MatrixXd sample_unit_ball(double sigma, const EmpiricalSeminorm& seminorm, long count,
                                 std::uint64_t seed, int centers) {
  if (count < 1) throw ValidationError("need at least one sampled function");
  const bool mixed = seminorm.kind == SeminormKind::mixed;
  Eigen::MatrixXd pool(seminorm.x.rows() + (mixed ? seminorm.fresh.rows() : 0), seminorm.x.cols());
  pool.topRows(seminorm.x.rows()) = seminorm.x;
  if (mixed) pool.bottomRows(seminorm.fresh.rows()) = seminorm.fresh;
  const Eigen::Index P = pool.rows();
  if (P < 2) throw ValidationError("need at least two points to place kernel centers");

  // Evaluation pairs (a, b) as rows of pool, with the weight making the seminorm Euclidean.
  std::vector<std::pair<int, int>> eval;
  double weight = 0.0;
  const int n = static_cast<int>(seminorm.x.rows());
  if (mixed) {
    const int m = static_cast<int>(seminorm.fresh.rows());
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < m; ++l) eval.emplace_back(i, n + l);
    weight = std::sqrt(1.0 / (static_cast<double>(n) * m));
  } else {
    // Skew symmetry: both orders give the same square, so keep i < j with double weight.
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) eval.emplace_back(i, j);
    weight = std::sqrt(2.0 / (static_cast<double>(n) * (n - 1)));
  }
  const Eigen::MatrixXd g = point_gram(pool, sigma);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(eval.size()), count);
  Stream rng(seed, 0xba11ULL);
  std::vector<std::pair<int, int>> c(centers);
  Eigen::VectorXd alpha(centers);
  Eigen::MatrixXd G(centers, centers);
  for (long f = 0; f < count; ++f) {
    double norm_sq = 0.0;
    for (int attempt = 0; attempt < 100 && !(norm_sq > 1e-12); ++attempt) {
      for (auto& [a, b] : c) {
        a = static_cast<int>(rng.below(static_cast<std::uint64_t>(P)));
        do b = static_cast<int>(rng.below(static_cast<std::uint64_t>(P)));
        while (b == a);
      }
      for (int k = 0; k < centers; ++k) {
        alpha[k] = rng.normal();
        for (int l = 0; l <= k; ++l) {
          const auto [i, j] = c[k];
          const auto [u, v] = c[l];
          G(k, l) = G(l, k) = 0.5 * (g(i, u) * g(j, v) - g(j, u) * g(i, v));
        }
      }
      norm_sq = alpha.dot(G * alpha);
    }
    if (!(norm_sq > 1e-12)) throw NumericalError("could not sample a function with positive norm");
    alpha /= std::sqrt(norm_sq);
    for (std::size_t e = 0; e < eval.size(); ++e) {
      const auto [a, b] = eval[e];
      double v = 0.0;
      for (int k = 0; k < centers; ++k) {
        const auto [i, j] = c[k];
        v += alpha[k] * (g(i, a) * g(j, b) - g(j, a) * g(i, b));
      }
      out(static_cast<Eigen::Index>(e), f) = 0.5 * v * weight;
    }
  }
  return out;
}

std::vector<double> empirical_rkhs_entropies(double sigma, const EmpiricalSeminorm& seminorm,
                                             long ball_samples, const std::vector<int>& indices,
                                             std::uint64_t seed) {
  if (indices.empty()) return {};
  const int top = *std::max_element(indices.begin(), indices.end());
  if (*std::min_element(indices.begin(), indices.end()) < 1) throw DomainError("entropy index starts at 1");
  if (top > 40) throw DomainError("entropy index too large");
  const long needed = 1L << (top - 1);
  if (ball_samples < needed) throw ValidationError("ball_samples must be at least 2^(i-1)");
  const Eigen::MatrixXd pts = sample_unit_ball(sigma, seminorm, ball_samples, seed);
  const auto radii = traverse(pts, Eigen::VectorXd::Zero(pts.rows()), Metric::euclidean, needed,
                              0.0, nullptr);
  std::vector<double> out;
  for (int i : indices) {
    const std::size_t k = (std::size_t{1} << (i - 1)) - 1;
    out.push_back(k < radii.size() ? radii[k] : 0.0);
  }
  return out;
}

double empirical_rkhs_entropy(double sigma, const EmpiricalSeminorm& seminorm, long ball_samples,
                              int i, std::uint64_t seed) {
  return empirical_rkhs_entropies(sigma, seminorm, ball_samples, {i}, seed).front();
}

}  // namespace pairrank
