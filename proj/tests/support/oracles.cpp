#include "oracles.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>

#include "pairrank/kernel.hpp"

namespace oracle {

namespace {

struct Ordered {
  std::vector<std::pair<int, int>> idx;
  Eigen::MatrixXd G;
  Eigen::VectorXd s;
};

Ordered ordered_problem(const pairrank::Dataset& data, double sigma) {
  Ordered o;
  const int n = data.n();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) o.idx.emplace_back(i, j);
  const int M = static_cast<int>(o.idx.size());
  o.G.resize(M, M);
  o.s.resize(M);
  const pairrank::KernelParams kp{sigma};
  for (int a = 0; a < M; ++a) {
    const pairrank::PointPair pa{data.point(o.idx[a].first), data.point(o.idx[a].second)};
    const double dy = data.y[o.idx[a].first] - data.y[o.idx[a].second];
    o.s[a] = dy > 0 ? 1.0 : (dy < 0 ? -1.0 : 0.0);
    for (int b = 0; b < M; ++b) {
      const pairrank::PointPair pb{data.point(o.idx[b].first), data.point(o.idx[b].second)};
      o.G(a, b) = pairrank::pairwise_gaussian(pa, pb, kp);
    }
  }
  return o;
}

Eigen::MatrixXd unpack(const Ordered& o, const Eigen::VectorXd& f, int n) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < o.idx.size(); ++k) out(o.idx[k].first, o.idx[k].second) = f[k];
  return out;
}

}  // namespace

Eigen::MatrixXd square_fit_values(const pairrank::Dataset& data, double sigma, double lambda) {
  const Ordered o = ordered_problem(data, sigma);
  const int M = static_cast<int>(o.idx.size());
  // Stationarity of (1/M) sum (1 - s f)^2 + lambda ||f||^2 for f = sum beta_k K_k.
  Eigen::MatrixXd H(M, M);
  for (int a = 0; a < M; ++a) H.row(a) = (o.s[a] != 0.0 ? 1.0 : 0.0) * o.G.row(a);
  H.diagonal().array() += M * lambda;
  const Eigen::VectorXd beta = H.fullPivLu().solve(o.s);
  return unpack(o, o.G * beta, data.n());
}

SubgradientResult hinge_subgradient(const pairrank::Dataset& data, double sigma, double lambda,
                                    long steps) {
  const Ordered o = ordered_problem(data, sigma);
  const int M = static_cast<int>(o.idx.size());
  const double radius_sq = 1.0 / lambda;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(M);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(M);
  Eigen::VectorXd v(M);
  SubgradientResult best{std::numeric_limits<double>::infinity(), {}};
  Eigen::VectorXd best_f = f;

  auto objective = [&](double& norm_sq) {
    double loss = 0.0;
    for (int k = 0; k < M; ++k) loss += std::max(0.0, 1.0 - o.s[k] * f[k]);
    norm_sq = beta.dot(f);
    return loss / M + lambda * norm_sq;
  };

  for (long t = 1; t <= steps; ++t) {
    double norm_sq = 0.0;
    const double J = objective(norm_sq);
    if (J < best.best_objective) {
      best.best_objective = J;
      best_f = f;
    }
    // Subgradient of the loss: -s_k K_k on pairs with margin below 1; ties
    // contribute a constant and no subgradient.
    for (int k = 0; k < M; ++k) v[k] = (o.s[k] * f[k] < 1.0) ? o.s[k] : 0.0;
    const double eta = 1.0 / (2.0 * lambda * static_cast<double>(t));
    const double shrink = 1.0 - 2.0 * lambda * eta;
    beta = shrink * beta + (eta / M) * v;
    f = shrink * f + (eta / M) * (o.G * v);
    const double nsq = beta.dot(f);
    if (nsq > radius_sq) {
      const double scale = std::sqrt(radius_sq / nsq);
      beta *= scale;
      f *= scale;
    }
  }
  double norm_sq = 0.0;
  const double J = objective(norm_sq);
  if (J < best.best_objective) {
    best.best_objective = J;
    best_f = f;
  }
  best.values = unpack(o, best_f, data.n());
  return best;
}

}  // namespace oracle
