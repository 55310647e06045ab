#include "pairrank/solver.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "pairrank/rng.hpp"

namespace pairrank {

std::vector<IndexPair> enumerate_pairs(int n, long max_pairs, std::uint64_t seed) {
  if (n < 2) throw ValidationError("pair enumeration needs at least two samples");
  const long total = static_cast<long>(n) * (n - 1) / 2;
  std::vector<IndexPair> all;
  all.reserve(total);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) all.emplace_back(i, j);
  if (max_pairs <= 0 || max_pairs >= total) return all;
  // Partial Fisher-Yates over pair indices.
  std::vector<long> idx(total);
  std::iota(idx.begin(), idx.end(), 0L);
  Stream rng(seed, 0x9a125ULL);
  for (long k = 0; k < max_pairs; ++k) {
    const long r = k + static_cast<long>(rng.below(static_cast<std::uint64_t>(total - k)));
    std::swap(idx[k], idx[r]);
  }
  idx.resize(max_pairs);
  std::sort(idx.begin(), idx.end());
  std::vector<IndexPair> out;
  out.reserve(max_pairs);
  for (long k : idx) out.push_back(all[k]);
  return out;
}

// ---------------------------------------------------------------------------
// Prediction

double RankingModel::predict(const Point& x, const Point& x_prime) const {
  thread_local Eigen::VectorXd a, b;
  point_gaussian_column(points, x, sigma, a);
  point_gaussian_column(points, x_prime, sigma, b);
  double f = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const int i = pairs[k].first;
    const int j = pairs[k].second;
    f += alpha[k] * (a[i] * b[j] - a[j] * b[i]);
  }
  return 0.5 * f;
}

double RankingModel::predict_truncated(const Point& x, const Point& x_prime) const {
  return truncate(predict(x, x_prime), loss.M);
}

Eigen::MatrixXd RankingModel::predict_matrix(const Eigen::MatrixXd& eval_points) const {
  const Eigen::Index n = points.rows();
  const Eigen::Index m = eval_points.rows();
  Eigen::MatrixXd cross(n, m);
  Eigen::VectorXd col;
  for (Eigen::Index b = 0; b < m; ++b) {
    point_gaussian_column(points, eval_points.row(b).transpose(), sigma, col);
    cross.col(b) = col;
  }
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    A(pairs[k].first, pairs[k].second) += alpha[k];
    A(pairs[k].second, pairs[k].first) -= alpha[k];
  }
  Eigen::MatrixXd F = 0.5 * (cross.transpose() * (A * cross));
  // Restore exact skew-symmetry lost to rounding in the products.
  return 0.5 * (F - F.transpose());
}

std::vector<PointPair> RankingModel::support_pairs() const {
  std::vector<PointPair> out;
  out.reserve(pairs.size());
  for (const auto& [i, j] : pairs)
    out.push_back({points.row(i).transpose(), points.row(j).transpose()});
  return out;
}

PairFunction RankingModel::as_function(bool truncated) const {
  if (truncated)
    return [m = *this](const Point& x, const Point& xp) { return m.predict_truncated(x, xp); };
  return [m = *this](const Point& x, const Point& xp) { return m.predict(x, xp); };
}

// ---------------------------------------------------------------------------
// Serialization

void RankingModel::save(std::ostream& out) const {
  out << std::setprecision(17);
  out << "pairrank-model 1\n";
  out << "sigma " << sigma << "\n";
  out << "lambda " << lambda << "\n";
  out << "loss " << loss.id() << "\n";
  out << "M " << loss.M << "\n";
  out << "points " << points.rows() << " " << points.cols() << "\n";
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index k = 0; k < points.cols(); ++k) out << (k ? " " : "") << points(i, k);
    out << "\n";
  }
  out << "pairs " << pairs.size() << "\n";
  for (std::size_t k = 0; k < pairs.size(); ++k)
    out << pairs[k].first << " " << pairs[k].second << " " << alpha[k] << "\n";
  out << "rkhs_norm_sq " << rkhs_norm_sq << "\n";
}

namespace {

void expect_token(std::istream& in, const std::string& token) {
  std::string got;
  if (!(in >> got) || got != token)
    throw ValidationError("model file: expected '" + token + "', got '" + got + "'");
}

template <typename T>
T read_value(std::istream& in, const char* what) {
  T v{};
  if (!(in >> v)) throw ValidationError(std::string("model file: cannot read ") + what);
  return v;
}

}  // namespace

RankingModel RankingModel::load(std::istream& in) {
  RankingModel m;
  expect_token(in, "pairrank-model");
  if (read_value<int>(in, "version") != 1) throw ValidationError("unsupported model version");
  expect_token(in, "sigma");
  m.sigma = read_value<double>(in, "sigma");
  expect_token(in, "lambda");
  m.lambda = read_value<double>(in, "lambda");
  expect_token(in, "loss");
  m.loss = LossSpec::from_id(read_value<std::string>(in, "loss"));
  expect_token(in, "M");
  m.loss.M = read_value<double>(in, "M");
  expect_token(in, "points");
  const long n = read_value<long>(in, "point count");
  const long d = read_value<long>(in, "dimension");
  if (n < 0 || d < 1) throw ValidationError("model file: bad point block shape");
  m.points.resize(n, d);
  for (long i = 0; i < n; ++i)
    for (long k = 0; k < d; ++k) m.points(i, k) = read_value<double>(in, "coordinate");
  expect_token(in, "pairs");
  const long N = read_value<long>(in, "pair count");
  if (N < 0) throw ValidationError("model file: bad pair count");
  m.pairs.resize(N);
  m.alpha.resize(N);
  for (long k = 0; k < N; ++k) {
    m.pairs[k].first = read_value<int>(in, "pair index");
    m.pairs[k].second = read_value<int>(in, "pair index");
    m.alpha[k] = read_value<double>(in, "coefficient");
    if (m.pairs[k].first < 0 || m.pairs[k].second < 0 || m.pairs[k].first >= n ||
        m.pairs[k].second >= n)
      throw ValidationError("model file: pair index out of range");
  }
  expect_token(in, "rkhs_norm_sq");
  m.rkhs_norm_sq = read_value<double>(in, "rkhs_norm_sq");
  return m;
}

void RankingModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write model file " + path);
  save(out);
}

RankingModel RankingModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read model file " + path);
  return load(in);
}

// ---------------------------------------------------------------------------
// Fitting

namespace {

struct Problem {
  Eigen::MatrixXd gp;            // point Gram matrix
  std::vector<IndexPair> all;    // pairs in the empirical risk
  std::vector<IndexPair> active; // pairs with distinct labels
  Eigen::VectorXd s;             // sgn(y_i - y_j) on active pairs
};

Problem setup(const Dataset& data, double sigma, double lambda, const SolverOptions& opt) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be positive");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("sigma must be positive");
  if (data.y.size() != data.x.rows()) throw ValidationError("dataset labels and inputs disagree");
  if (!data.x.allFinite() || !data.y.allFinite()) throw ValidationError("non-finite dataset entry");
  Problem p;
  p.all = enumerate_pairs(data.n(), opt.max_pairs, opt.pair_seed);
  std::vector<double> signs;
  for (const auto& [i, j] : p.all) {
    const int s = sgn(data.y[i] - data.y[j]);
    if (s != 0) {
      p.active.emplace_back(i, j);
      signs.push_back(s);
    }
  }
  p.s = Eigen::Map<Eigen::VectorXd>(signs.data(), static_cast<Eigen::Index>(signs.size()));
  p.gp = point_gram(data.x, sigma);
  return p;
}

inline double pair_kernel(const Eigen::MatrixXd& gp, const IndexPair& a, const IndexPair& b) {
  return 0.5 * (gp(a.first, b.first) * gp(a.second, b.second) -
                gp(a.second, b.first) * gp(a.first, b.second));
}

// f on active pairs for coefficients alpha, through F = 0.5 * Gp A Gp.
Eigen::VectorXd expansion_values(const Problem& p, const Eigen::VectorXd& alpha) {
  const Eigen::Index n = p.gp.rows();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < p.active.size(); ++k) {
    A(p.active[k].first, p.active[k].second) += alpha[k];
    A(p.active[k].second, p.active[k].first) -= alpha[k];
  }
  const Eigen::MatrixXd F = p.gp * (A * p.gp);
  Eigen::VectorXd out(p.active.size());
  for (std::size_t k = 0; k < p.active.size(); ++k)
    out[k] = 0.25 * (F(p.active[k].first, p.active[k].second) -
                     F(p.active[k].second, p.active[k].first));
  return out;
}

RankingModel make_model(const Dataset& data, const Problem& p, double sigma, double lambda,
                        const LossSpec& loss, Eigen::VectorXd alpha, double norm_sq) {
  RankingModel m;
  m.sigma = sigma;
  m.lambda = lambda;
  m.loss = loss;
  m.points = data.x;
  m.pairs = p.active;
  m.alpha = std::move(alpha);
  m.rkhs_norm_sq = std::max(norm_sq, 0.0);
  return m;
}

}  // namespace

FitResult fit_square(const Dataset& data, double sigma, double lambda, const SolverOptions& opt) {
  const Problem p = setup(data, sigma, lambda, opt);
  const Eigen::Index m = static_cast<Eigen::Index>(p.active.size());
  const double N = static_cast<double>(p.all.size());
  // Ordered pairs count each unordered pair twice, so the risk is the mean over
  // the N unordered pairs. Stationarity on the distinct-label pairs then reads
  // (G + N lambda I) alpha = s; tied pairs keep alpha = 0.
  const double shift = N * lambda;
  FitReport rep;
  rep.num_pairs = static_cast<long>(p.all.size());
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(m);

  if (m > 0) {
    const bool dense = m <= opt.dense_limit &&
                       static_cast<std::size_t>(m) <= opt.gram_cap_bytes / sizeof(double) /
                                                          static_cast<std::size_t>(m);
    if (dense) {
      Eigen::MatrixXd G(m, m);
      for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b <= a; ++b)
          G(a, b) = G(b, a) = pair_kernel(p.gp, p.active[a], p.active[b]);
      Eigen::MatrixXd H = G;
      H.diagonal().array() += shift;
      Eigen::LLT<Eigen::MatrixXd> llt(H);
      if (llt.info() != Eigen::Success) {
        rep.jitter = 1e-10 * G.trace() / static_cast<double>(m);
        H.diagonal().array() += rep.jitter;
        llt.compute(H);
        if (llt.info() != Eigen::Success) throw NumericalError("square-loss system is singular");
      }
      alpha = llt.solve(p.s);
      f = G * alpha;
      rep.residual = (H * alpha - p.s).norm() / p.s.norm();
      rep.iterations = 1;
    } else {
      // Jacobi-preconditioned conjugate gradients with the factored matvec.
      Eigen::VectorXd diag(m);
      for (Eigen::Index k = 0; k < m; ++k)
        diag[k] = pair_kernel(p.gp, p.active[k], p.active[k]) + shift;
      auto apply = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd out = expansion_values(p, v);
        out += shift * v;
        return out;
      };
      Eigen::VectorXd r = p.s;
      Eigen::VectorXd z = r.cwiseQuotient(diag);
      Eigen::VectorXd dir = z;
      double rz = r.dot(z);
      const double target = opt.cg_rel_tol * p.s.norm();
      long it = 0;
      const long max_it = std::max<long>(10 * m, 1000);
      while (r.norm() > target && it < max_it) {
        const Eigen::VectorXd Ad = apply(dir);
        const double step = rz / dir.dot(Ad);
        alpha += step * dir;
        r -= step * Ad;
        z = r.cwiseQuotient(diag);
        const double rz_new = r.dot(z);
        dir = z + (rz_new / rz) * dir;
        rz = rz_new;
        ++it;
      }
      rep.iterations = it;
      f = expansion_values(p, alpha);
      rep.residual = (f + shift * alpha - p.s).norm() / p.s.norm();
      if (!alpha.allFinite()) throw NumericalError("square-loss solve produced non-finite values");
    }
  }
  rep.converged = rep.residual <= 1e-8;
  const double norm_sq = alpha.dot(f);
  double loss_sum = N - static_cast<double>(m);  // tied pairs pay psi(0) = 1
  for (Eigen::Index k = 0; k < m; ++k) loss_sum += (1.0 - p.s[k] * f[k]) * (1.0 - p.s[k] * f[k]);
  rep.objective = loss_sum / N + lambda * norm_sq;
  return {make_model(data, p, sigma, lambda, LossSpec::square(), std::move(alpha), norm_sq), rep};
}

FitResult fit_hinge(const Dataset& data, double sigma, double lambda, const SolverOptions& opt) {
  const Problem p = setup(data, sigma, lambda, opt);
  const Eigen::Index n = p.gp.rows();
  const Eigen::Index m = static_cast<Eigen::Index>(p.active.size());
  const double N = static_cast<double>(p.all.size());
  // Scaled by 1/(2 lambda) the objective is 0.5||f||^2 + C sum_k hinge(s_k f_k)
  // with C = 1/(2 lambda N); its dual is max sum beta - 0.5||f||^2 over
  // 0 <= beta <= C with f = sum_k beta_k s_k K_k.
  const double C = 1.0 / (2.0 * lambda * N);
  FitReport rep;
  rep.num_pairs = static_cast<long>(p.all.size());

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd qdiag(m);
  for (Eigen::Index k = 0; k < m; ++k) qdiag[k] = pair_kernel(p.gp, p.active[k], p.active[k]);

  // Wt = (A Gp)^T = -Gp A with A the antisymmetric coefficient matrix, so f_k = 0.5 * Gp.col(i) . Wt.row(j) and a change of
  // alpha_k touches two columns of Wt.
  Eigen::MatrixXd Wt = Eigen::MatrixXd::Zero(n, n);
  auto rebuild = [&]() {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index k = 0; k < m; ++k) {
      const double a = p.s[k] * beta[k];
      A(p.active[k].first, p.active[k].second) += a;
      A(p.active[k].second, p.active[k].first) -= a;
    }
    Wt.noalias() = -(p.gp * A);
  };
  auto value_at = [&](Eigen::Index k) {
    return 0.5 * p.gp.col(p.active[k].first).dot(Wt.row(p.active[k].second).transpose());
  };

  Eigen::VectorXd f = Eigen::VectorXd::Zero(m);
  double norm_sq = 0.0;
  auto evaluate_gap = [&]() {
    for (Eigen::Index k = 0; k < m; ++k) f[k] = value_at(k);
    norm_sq = 0.0;
    double hinge_sum = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
      norm_sq += p.s[k] * beta[k] * f[k];
      hinge_sum += std::max(0.0, 1.0 - p.s[k] * f[k]);
    }
    norm_sq = std::max(norm_sq, 0.0);
    const double primal = 0.5 * norm_sq + C * hinge_sum;
    const double dual = beta.sum() - 0.5 * norm_sq;
    rep.dual_history.push_back(dual);
    rep.duality_gap = std::max(0.0, 2.0 * lambda * (primal - dual));
    rep.objective = (hinge_sum + (N - static_cast<double>(m))) / N + lambda * norm_sq;
  };

  evaluate_gap();
  rep.converged = rep.duality_gap <= opt.tol_gap;
  long epoch = 0;
  while (!rep.converged && epoch < opt.max_epochs) {
    for (Eigen::Index k = 0; k < m; ++k) {
      const double grad = p.s[k] * value_at(k) - 1.0;
      double next;
      if (qdiag[k] > 1e-15) {
        next = std::clamp(beta[k] - grad / qdiag[k], 0.0, C);
      } else {
        // Degenerate pair: its kernel section vanishes, the dual is linear in beta_k.
        next = C;
      }
      const double delta = p.s[k] * (next - beta[k]);
      if (delta != 0.0) {
        const int i = p.active[k].first;
        const int j = p.active[k].second;
        Wt.col(i).noalias() += delta * p.gp.col(j);
        Wt.col(j).noalias() -= delta * p.gp.col(i);
        beta[k] = next;
      }
    }
    ++epoch;
    rebuild();
    evaluate_gap();
    rep.converged = rep.duality_gap <= opt.tol_gap;
  }
  rep.iterations = epoch;
  Eigen::VectorXd alpha = beta.cwiseProduct(p.s);
  return {make_model(data, p, sigma, lambda, LossSpec::hinge(), std::move(alpha), norm_sq), rep};
}

FitResult fit(const Dataset& data, const LossSpec& loss, double sigma, double lambda,
              const SolverOptions& options) {
  switch (loss.kind) {
    case LossKind::hinge:
      return fit_hinge(data, sigma, lambda, options);
    case LossKind::square:
      return fit_square(data, sigma, lambda, options);
    default:
      throw ValidationError("the solver supports hinge and square losses");
  }
}

double objective(const RankingModel& model, const Dataset& data) {
  const int n = data.n();
  if (n < 2) throw ValidationError("objective needs at least two samples");
  const Eigen::MatrixXd F = model.predict_matrix(data.x);
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) total += margin_loss(model.loss, data.y[i], data.y[j], F(i, j));
  return total / (static_cast<double>(n) * (n - 1)) + model.lambda * model.rkhs_norm_sq;
}

}  // namespace pairrank
