#include <doctest.h>

#include <cmath>

#include "pairrank/kernel.hpp"
#include "pairrank/rng.hpp"

using namespace pairrank;

namespace {

Point vec(std::initializer_list<double> v) {
  Point p(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) p[k++] = x;
  return p;
}

Point random_point(Stream& rng, int d) {
  Point p(d);
  for (int k = 0; k < d; ++k) p[k] = rng.uniform(-1.5, 1.5);
  return p;
}

PointPair random_pair(Stream& rng, int d) { return {random_point(rng, d), random_point(rng, d)}; }

}  // namespace

TEST_CASE("gaussian_rbf values") {
  const KernelParams p{1.0};
  const PointPair a{vec({0}), vec({0})};
  const PointPair b{vec({1}), vec({0})};
  CHECK(gaussian_rbf(a, a, p) == 1.0);
  CHECK(gaussian_rbf(a, b, p) == doctest::Approx(0.367879441171442321).epsilon(1e-15));

  double prev = 0.0;
  for (double s : {0.5, 1.0, 2.0, 8.0, 64.0, 1e4}) {
    const double v = gaussian_rbf(a, b, KernelParams{s});
    CHECK(v > prev);
    prev = v;
  }
  CHECK(prev == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("pairwise_gaussian values and skew symmetry") {
  const KernelParams p{1.0};
  const PointPair a{vec({0}), vec({1})};
  CHECK(pairwise_gaussian(a, a, p) == doctest::Approx(0.432332358381693654).epsilon(1e-15));
  CHECK(pairwise_gaussian({vec({0.3}), vec({0.3})}, a, p) == 0.0);

  Stream rng(11, 0);
  for (int t = 0; t < 1000; ++t) {
    const int d = 1 + t % 4;
    const KernelParams q{rng.uniform(0.2, 3.0)};
    const PointPair x = random_pair(rng, d);
    const PointPair y = random_pair(rng, d);
    const double v = pairwise_gaussian(x, y, q);
    CHECK(std::abs(pairwise_gaussian(swap(x), y, q) + v) <= 1e-12);
    CHECK(std::abs(pairwise_gaussian(x, swap(y), q) + v) <= 1e-12);
    CHECK(std::abs(v) < 0.5);
    const double diag = 0.5 * (1.0 - std::exp(-2.0 * (x.first - x.second).squaredNorm() /
                                              (q.sigma * q.sigma)));
    CHECK(pairwise_gaussian(x, x, q) == doctest::Approx(diag).epsilon(1e-12));
  }
}

TEST_CASE("kronecker_pairwise") {
  const PointKernel linear = [](const Point& u, const Point& v) { return u.dot(v); };
  const PointPair a{vec({1}), vec({0})};
  CHECK(kronecker_pairwise(linear, a, a) == doctest::Approx(1.0));
  Stream rng(12, 0);
  for (int t = 0; t < 100; ++t) {
    const PointPair x = random_pair(rng, 2);
    const PointPair y = random_pair(rng, 2);
    CHECK(kronecker_pairwise(linear, {x.first, x.first}, y) == 0.0);
    CHECK(kronecker_pairwise(linear, swap(x), y) ==
          doctest::Approx(-kronecker_pairwise(linear, x, y)));
  }
  // Gaussian base: the Kronecker construction is twice the skew-symmetrized rbf.
  const PointKernel g = [](const Point& u, const Point& v) { return point_gaussian(u, v, 0.7); };
  for (int t = 0; t < 100; ++t) {
    const PointPair x = random_pair(rng, 2);
    const PointPair y = random_pair(rng, 2);
    const double direct = g(x.first, y.first) * g(x.second, y.second) -
                          g(x.second, y.first) * g(x.first, y.second);
    CHECK(pairwise_gaussian(x, y, KernelParams{0.7}) == doctest::Approx(0.5 * direct));
  }
}

TEST_CASE("skew and symmetric parts") {
  const KernelParams p{0.8};
  const PairKernel rbf = [&](const PointPair& a, const PointPair& b) { return gaussian_rbf(a, b, p); };
  const PairKernel pg = [&](const PointPair& a, const PointPair& b) {
    return pairwise_gaussian(a, b, p);
  };
  Stream rng(13, 0);
  for (int t = 0; t < 1000; ++t) {
    const PointPair x = random_pair(rng, 2);
    const PointPair y = random_pair(rng, 2);
    CHECK(std::abs(skew_part(rbf, x, y) - pairwise_gaussian(x, y, p)) <= 1e-12);
    CHECK(sym_part(rbf, x, y) == sym_part(rbf, swap(x), y));
    CHECK(std::abs(skew_part(pg, x, y) - pg(x, y)) <= 1e-15);
    CHECK(std::abs(skew_part(rbf, x, y) + sym_part(rbf, x, y) - rbf(x, y)) <= 1e-15);
  }
}

TEST_CASE("gram matrix") {
  const KernelParams p{1.0};
  const PointPair single{vec({0.2}), vec({0.9})};
  const GramMatrix g1 = gram({single}, p);
  REQUIRE(g1.size() == 1);
  CHECK(g1.entries()(0, 0) == doctest::Approx(0.5 * (1.0 - std::exp(-2.0 * 0.49))));

  Stream rng(14, 0);
  std::vector<PointPair> pairs{random_pair(rng, 1), {vec({0.4}), vec({0.4})}, random_pair(rng, 1)};
  const GramMatrix g3 = gram(pairs, p);
  CHECK(g3.entries().row(1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(g3.entries().col(1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(g3.min_eigenvalue() >= -1e-8);

  for (int t = 0; t < 20; ++t) {
    const int N = 1 + static_cast<int>(rng.below(200));
    std::vector<PointPair> ps;
    for (int k = 0; k < N; ++k) ps.push_back(random_pair(rng, 2));
    const GramMatrix g = gram(ps, KernelParams{rng.uniform(0.1, 2.0)});
    CHECK(g.is_psd());
    CHECK(g.entries().isApprox(g.entries().transpose(), 0.0));
    const Eigen::VectorXd row = gram_row(ps, N / 2, KernelParams{0.5});
    CHECK(row.size() == N);
  }
  CHECK_THROWS_AS(gram(pairs, p, 8), CapacityError);
}

TEST_CASE("point gram factorization reproduces the pairwise kernel") {
  Stream rng(15, 0);
  Eigen::MatrixXd pts(6, 2);
  for (int i = 0; i < 6; ++i) pts.row(i) = random_point(rng, 2).transpose();
  const double sigma = 0.6;
  const Eigen::MatrixXd g = point_gram(pts, sigma);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b) {
          const double f = 0.5 * (g(i, a) * g(j, b) - g(j, a) * g(i, b));
          const PointPair x{pts.row(i).transpose(), pts.row(j).transpose()};
          const PointPair y{pts.row(a).transpose(), pts.row(b).transpose()};
          CHECK(std::abs(f - pairwise_gaussian(x, y, KernelParams{sigma})) <= 1e-14);
        }
  Eigen::VectorXd col;
  point_gaussian_column(pts, pts.row(3).transpose(), sigma, col);
  CHECK((col - g.col(3)).cwiseAbs().maxCoeff() <= 1e-15);
}
