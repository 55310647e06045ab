#include "pairrank/kernel.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

namespace pairrank {

namespace {

void check_dims(const PointPair& a, const PointPair& b) {
  const auto d = a.first.size();
  if (d < 1 || a.second.size() != d || b.first.size() != d || b.second.size() != d)
    throw ValidationError("pair dimension mismatch");
}

void check_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("sigma must be positive");
}

}  // namespace

double squared_distance(const Point& a, const Point& b) {
  if (a.size() != b.size()) throw ValidationError("point dimension mismatch");
  long double acc = 0.0L;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const long double diff = static_cast<long double>(a[k]) - static_cast<long double>(b[k]);
    acc += diff * diff;
  }
  return static_cast<double>(acc);
}

double point_gaussian(const Point& a, const Point& b, double sigma) {
  return std::exp(-squared_distance(a, b) / (sigma * sigma));
}

double gaussian_rbf(const PointPair& a, const PointPair& b, const KernelParams& params) {
  check_dims(a, b);
  check_sigma(params.sigma);
  long double acc = 0.0L;
  for (Eigen::Index k = 0; k < a.first.size(); ++k) {
    const long double d1 = static_cast<long double>(a.first[k]) - b.first[k];
    const long double d2 = static_cast<long double>(a.second[k]) - b.second[k];
    acc += d1 * d1 + d2 * d2;
  }
  return std::exp(-static_cast<double>(acc) / (params.sigma * params.sigma));
}

double pairwise_gaussian(const PointPair& a, const PointPair& b, const KernelParams& params) {
  return 0.5 * gaussian_rbf(a, b, params) - 0.5 * gaussian_rbf(swap(a), b, params);
}

double kronecker_pairwise(const PointKernel& base, const PointPair& a, const PointPair& b) {
  check_dims(a, b);
  // Grouped by the a-difference so that a1 = a2 gives exactly 0.
  return (base(a.first, b.first) - base(a.second, b.first)) -
         (base(a.first, b.second) - base(a.second, b.second));
}

double skew_part(const PairKernel& base, const PointPair& a, const PointPair& b) {
  return 0.5 * base(a, b) - 0.5 * base(swap(a), b);
}

double sym_part(const PairKernel& base, const PointPair& a, const PointPair& b) {
  return 0.5 * base(a, b) + 0.5 * base(swap(a), b);
}

double GramMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(entries_, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

bool GramMatrix::is_psd(double rel_tol) const {
  const double n = static_cast<double>(size());
  return min_eigenvalue() >= -rel_tol * trace() / n;
}

GramMatrix gram(const std::vector<PointPair>& pairs, const KernelParams& params,
                std::size_t cap_bytes) {
  if (pairs.empty()) throw ValidationError("gram of an empty pair list");
  const std::size_t n = pairs.size();
  if (n > cap_bytes / sizeof(double) / n)
    throw CapacityError("Gram matrix over " + std::to_string(n) +
                        " pairs exceeds the memory cap; use row-wise evaluation");
  Eigen::MatrixXd entries(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = pairwise_gaussian(pairs[i], pairs[j], params);
      entries(i, j) = v;
      entries(j, i) = v;
    }
  }
  return GramMatrix(pairs, std::move(entries));
}

Eigen::VectorXd gram_row(const std::vector<PointPair>& pairs, int row, const KernelParams& params) {
  Eigen::VectorXd out(pairs.size());
  for (std::size_t j = 0; j < pairs.size(); ++j)
    out[j] = pairwise_gaussian(pairs[row], pairs[j], params);
  return out;
}

Eigen::MatrixXd point_gram(const Eigen::MatrixXd& points, double sigma) {
  check_sigma(sigma);
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    g(a, a) = 1.0;
    for (Eigen::Index b = 0; b < a; ++b) {
      const double v =
          point_gaussian(points.row(a).transpose(), points.row(b).transpose(), sigma);
      g(a, b) = v;
      g(b, a) = v;
    }
  }
  return g;
}

void point_gaussian_column(const Eigen::MatrixXd& points, const Point& x, double sigma,
                           Eigen::VectorXd& out) {
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  if (x.size() != d) throw ValidationError("point dimension mismatch");
  out.resize(n);
  const double inv = 1.0 / (sigma * sigma);
  for (Eigen::Index a = 0; a < n; ++a) {
    long double acc = 0.0L;
    for (Eigen::Index k = 0; k < d; ++k) {
      const long double diff = static_cast<long double>(points(a, k)) - x[k];
      acc += diff * diff;
    }
    out[a] = std::exp(-static_cast<double>(acc) * inv);
  }
}

}  // namespace pairrank
