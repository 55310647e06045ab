#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pairrank/common.hpp"
#include "pairrank/losses.hpp"
#include "pairrank/rng.hpp"

namespace pairrank {

enum class SpecKind { uniform_shift, power_noise, noise_free, manifold_embedding };
enum class EmbeddingKind { circle, helix };

inline constexpr double kInfiniteExponent = std::numeric_limits<double>::infinity();

// Exponents and constants of the noise and capacity assumptions. NaN marks a
// constant that is not known in closed form for the distribution.
struct KnownExponents {
  double q = 0.0;          // Tsybakov exponent, +inf for the noise-free case
  double C_star = 0.0;     // P(|eta+ - eta-| <= t) <= C_star t^q
  double beta = 0.0;       // margin-noise exponent, +inf when the classes are separated
  double C_star_star = 0.0;
  double rho = 1.0;        // box-counting dimension of the support
  double C_X = 1.0;        // N(X, sup, eps) <= C_X eps^{-rho}
  double alpha = 1.0;      // smoothness of the square-loss Bayes rule
};

// Synthetic law of (X, Y). Every built-in kind draws a latent u ~ U[0,1],
// places X = embed(u) and draws Y from a law depending on u only, so all
// population integrals reduce to integrals over the latent unit square.
class DistributionSpec {
 public:
  // X ~ U[0,1], Y = X + eps with eps ~ U[0,1].
  static DistributionSpec uniform_shift();
  // X ~ U[0,1], Y in {0,1} with P(Y = 1 | x) = F(x), F the quantile function of
  // a density proportional to |v - 1/2|^{-(1/2 + gamma)}. gamma in (0, 1/4).
  static DistributionSpec power_noise(double gamma);
  // Deterministic labels. separation 0: X ~ U[0,1], Y = X. separation m > 0:
  // X uniform on [0, (1-m)/2] u [(1+m)/2, 1] and Y the cluster index.
  static DistributionSpec noise_free(double separation);
  // Base law pushed onto an arc-length curve in R^D (unit circle, or a helix).
  static DistributionSpec manifold_embedding(const DistributionSpec& base, int ambient_dim,
                                             EmbeddingKind embedding);

  SpecKind kind() const { return kind_; }
  std::string name() const;
  int dim() const;
  double gamma() const { return gamma_; }
  double separation() const { return separation_; }
  const DistributionSpec* base() const { return base_.get(); }
  EmbeddingKind embedding() const { return embedding_; }

  Point embed(double u) const;
  // Latent coordinate of a support point; DomainError off the support.
  double latent(const Point& x) const;

  Dataset sample(int n, std::uint64_t seed) const;
  double draw_label(double u, Stream& rng) const;

  PosteriorTriple posteriors(const Point& x, const Point& x_prime) const;
  PosteriorTriple latent_posteriors(double u, double v) const;

  double delta_to_boundary(const Point& x, const Point& x_prime) const;
  double latent_delta(double u, double v) const;

  // P(Y < y | u) and P(Y = y | u).
  std::pair<double, double> label_law(double y, double u) const;
  // Latent points where label_law(y, .) is not smooth.
  std::vector<double> label_breaks(double y) const;
  // Latent points where the posteriors are not smooth for fixed u (besides v = u).
  std::vector<double> latent_breaks() const;

  KnownExponents exponents() const;
  // Radius r of a centred ball in R^{2d} containing X^2.
  double support_radius() const;
  // True when the decision boundary is the diagonal x = x' of a 1-D support.
  bool diagonal_boundary() const;

  nlohmann::json descriptor(std::uint64_t seed) const;
  static std::pair<DistributionSpec, std::uint64_t> from_descriptor(const nlohmann::json& j);

  // The label quantile F for PowerNoise.
  double power_noise_F(double u) const;

 private:
  SpecKind kind_ = SpecKind::uniform_shift;
  double gamma_ = 0.0;
  double separation_ = 0.0;
  std::shared_ptr<const DistributionSpec> base_;
  int ambient_dim_ = 1;
  EmbeddingKind embedding_ = EmbeddingKind::circle;
};

struct BayesRules {
  PairFunction f_rank;
  PairFunction f_hinge;
  PairFunction f_square;
};

BayesRules bayes_rules(const DistributionSpec& spec);

// Bayes rule of the square loss as a function on all of R^2 for 1-D specs:
// on the support it equals (eta+ - eta-)/(eta+ + eta-).
double extended_f_square(const DistributionSpec& spec, double x, double x_prime);

struct PopulationOptions {
  long mc_budget = 0;      // 0 selects quadrature over the latent square
  double tol = 1e-8;       // quadrature tolerance
  std::uint64_t seed = 1;
};

// E min(eta+, eta-). Quadrature by default; with a budget, counts misranked
// labeled pairs under the Bayes rule.
RiskEstimate bayes_ranking_risk(const DistributionSpec& spec, const PopulationOptions& opts = {});

struct ExcessRisks {
  RiskEstimate rank;
  RiskEstimate phi;
};

ExcessRisks excess_risks(const PairFunction& f, const DistributionSpec& spec, const LossSpec& loss,
                         const PopulationOptions& opts = {});

// Population phi-risk E Psi(f) and its Bayes value.
RiskEstimate population_phi_risk(const PairFunction& f, const DistributionSpec& spec,
                                 const LossSpec& loss, const PopulationOptions& opts = {});
double bayes_phi_risk(const DistributionSpec& spec, const LossSpec& loss, double tol = 1e-8);

// Integral of g(u, v) over the latent square, split at the spec's break points.
double integrate_latent(const DistributionSpec& spec,
                        const std::function<double(double, double)>& g, double tol);

struct ExponentFit {
  double value = 0.0;  // +inf sentinel when every estimated mass is zero
  double std_error = 0.0;             // Monte Carlo error of the slope (delta method)
  double regression_std_error = 0.0;  // residual scatter about the fitted line
  std::vector<double> t;
  std::vector<double> mass;
  std::vector<std::string> warnings;
};

// Log-log slope of P(|eta+ - eta-| <= t) over t_grid, from budget latent pairs.
ExponentFit estimate_noise_exponent(const DistributionSpec& spec, const std::vector<double>& t_grid,
                                    long budget, std::uint64_t seed);

// Log-log slope of E[|eta+ - eta-| 1{Delta < t}] over t_grid.
ExponentFit estimate_margin_noise_exponent(const DistributionSpec& spec,
                                           const std::vector<double>& t_grid, long budget,
                                           std::uint64_t seed);

}  // namespace pairrank
