#include "pairrank/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pairrank/numerics.hpp"

namespace pairrank {

namespace {

constexpr double kHelixPitch = 0.5;
constexpr double kSupportTol = 1e-9;

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

// Curve angle per unit of arc length.
double angle_rate(EmbeddingKind e) {
  return e == EmbeddingKind::circle ? 1.0 : 1.0 / std::sqrt(1.0 + kHelixPitch * kHelixPitch);
}

double posterior_gap(const PosteriorTriple& p) { return std::abs(p.eta_plus - p.eta_minus); }

}  // namespace

DistributionSpec DistributionSpec::uniform_shift() { return DistributionSpec{}; }

DistributionSpec DistributionSpec::power_noise(double gamma) {
  if (!(gamma > 0.0 && gamma < 0.25)) throw ValidationError("PowerNoise needs gamma in (0, 1/4)");
  DistributionSpec s;
  s.kind_ = SpecKind::power_noise;
  s.gamma_ = gamma;
  return s;
}

DistributionSpec DistributionSpec::noise_free(double separation) {
  if (!(separation >= 0.0 && separation < 1.0))
    throw ValidationError("NoiseFree separation must lie in [0, 1)");
  DistributionSpec s;
  s.kind_ = SpecKind::noise_free;
  s.separation_ = separation;
  return s;
}

DistributionSpec DistributionSpec::manifold_embedding(const DistributionSpec& base, int ambient_dim,
                                                      EmbeddingKind embedding) {
  if (!base.diagonal_boundary() || base.kind() == SpecKind::manifold_embedding)
    throw ValidationError("embedding needs a 1-D base law with a diagonal decision boundary");
  if (ambient_dim < 2) throw ValidationError("embedding needs ambient dimension >= 2");
  if (embedding == EmbeddingKind::helix && ambient_dim < 3)
    throw ValidationError("helix embedding needs ambient dimension >= 3");
  DistributionSpec s;
  s.kind_ = SpecKind::manifold_embedding;
  s.base_ = std::make_shared<const DistributionSpec>(base);
  s.ambient_dim_ = ambient_dim;
  s.embedding_ = embedding;
  return s;
}

std::string DistributionSpec::name() const {
  switch (kind_) {
    case SpecKind::uniform_shift:
      return "UniformShift";
    case SpecKind::power_noise:
      return "PowerNoise";
    case SpecKind::noise_free:
      return "NoiseFree";
    case SpecKind::manifold_embedding:
      return "ManifoldEmbedding";
  }
  return "";
}

int DistributionSpec::dim() const {
  return kind_ == SpecKind::manifold_embedding ? ambient_dim_ : 1;
}

double DistributionSpec::power_noise_F(double u) const {
  const double w = 2.0 * u - 1.0;
  const double e = 2.0 / (1.0 - 2.0 * gamma_);
  return 0.5 + 0.5 * (w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0)) * std::pow(std::abs(w), e);
}

Point DistributionSpec::embed(double u) const {
  Point x = Point::Zero(dim());
  switch (kind_) {
    case SpecKind::uniform_shift:
    case SpecKind::power_noise:
      x[0] = u;
      break;
    case SpecKind::noise_free:
      x[0] = u * (1.0 - separation_) + (u >= 0.5 ? separation_ : 0.0);
      break;
    case SpecKind::manifold_embedding: {
      const double theta = u * angle_rate(embedding_);
      x[0] = std::cos(theta);
      x[1] = std::sin(theta);
      if (embedding_ == EmbeddingKind::helix) x[2] = kHelixPitch * theta;
      break;
    }
  }
  return x;
}

double DistributionSpec::latent(const Point& x) const {
  if (x.size() != dim()) throw DomainError("point dimension does not match the distribution");
  auto in_unit = [](double u) {
    if (u < -kSupportTol || u > 1.0 + kSupportTol) throw DomainError("point outside the support");
    return clamp01(u);
  };
  switch (kind_) {
    case SpecKind::uniform_shift:
    case SpecKind::power_noise:
      return in_unit(x[0]);
    case SpecKind::noise_free: {
      const double m = separation_;
      const double a1 = 0.5 * (1.0 - m);
      const double b0 = 0.5 * (1.0 + m);
      if (m > 0.0 && x[0] > a1 + kSupportTol && x[0] < b0 - kSupportTol)
        throw DomainError("point inside the gap of a separated NoiseFree law");
      if (x[0] <= a1 + kSupportTol) return in_unit(x[0] / (1.0 - m));
      return in_unit((x[0] - m) / (1.0 - m));
    }
    case SpecKind::manifold_embedding: {
      const double theta = std::atan2(x[1], x[0]);
      const double u = theta / angle_rate(embedding_);
      const Point back = embed(clamp01(u));
      if ((back - x).norm() > 1e-7) throw DomainError("point off the embedded curve");
      return in_unit(u);
    }
  }
  return 0.0;
}

double DistributionSpec::draw_label(double u, Stream& rng) const {
  switch (kind_) {
    case SpecKind::uniform_shift:
      return u + rng.uniform();
    case SpecKind::power_noise:
      return rng.uniform() < power_noise_F(u) ? 1.0 : 0.0;
    case SpecKind::noise_free:
      return separation_ > 0.0 ? (u >= 0.5 ? 1.0 : 0.0) : u;
    case SpecKind::manifold_embedding:
      return base_->draw_label(u, rng);
  }
  return 0.0;
}

Dataset DistributionSpec::sample(int n, std::uint64_t seed) const {
  if (n < 1) throw ValidationError("sample size must be positive");
  Dataset data;
  data.x.resize(n, dim());
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    Stream rng(seed, static_cast<std::uint64_t>(i));
    const double u = rng.uniform();
    data.x.row(i) = embed(u).transpose();
    data.y[i] = draw_label(u, rng);
  }
  return data;
}

PosteriorTriple DistributionSpec::latent_posteriors(double u, double v) const {
  PosteriorTriple p;
  switch (kind_) {
    case SpecKind::uniform_shift: {
      // eps' - eps has the triangular law on [-1, 1].
      const double w = u - v;
      const double tail = 0.5 * (1.0 - std::abs(w)) * (1.0 - std::abs(w));
      if (w > 0.0) {
        p.eta_plus = 1.0 - tail;
        p.eta_minus = tail;
      } else if (w < 0.0) {
        p.eta_plus = tail;
        p.eta_minus = 1.0 - tail;
      } else {
        p.eta_plus = p.eta_minus = 0.5;
      }
      p.eta_eq = 0.0;
      return p;
    }
    case SpecKind::power_noise: {
      const double fu = power_noise_F(u);
      const double fv = power_noise_F(v);
      p.eta_plus = fu * (1.0 - fv);
      p.eta_minus = (1.0 - fu) * fv;
      p.eta_eq = fu * fv + (1.0 - fu) * (1.0 - fv);
      return p;
    }
    case SpecKind::noise_free: {
      const double a = separation_ > 0.0 ? (u >= 0.5 ? 1.0 : 0.0) : u;
      const double b = separation_ > 0.0 ? (v >= 0.5 ? 1.0 : 0.0) : v;
      p.eta_plus = a > b ? 1.0 : 0.0;
      p.eta_minus = a < b ? 1.0 : 0.0;
      p.eta_eq = a == b ? 1.0 : 0.0;
      return p;
    }
    case SpecKind::manifold_embedding:
      return base_->latent_posteriors(u, v);
  }
  return p;
}

PosteriorTriple DistributionSpec::posteriors(const Point& x, const Point& x_prime) const {
  return latent_posteriors(latent(x), latent(x_prime));
}

double DistributionSpec::latent_delta(double u, double v) const {
  switch (kind_) {
    case SpecKind::uniform_shift:
    case SpecKind::power_noise:
      return std::abs(u - v) / std::sqrt(2.0);
    case SpecKind::noise_free: {
      if (separation_ == 0.0) return std::abs(u - v) / std::sqrt(2.0);
      const bool cu = u >= 0.5;
      const bool cv = v >= 0.5;
      if (cu == cv) return 0.0;
      // Nearest tie block is the diagonal block of either cluster.
      const double a1 = 0.5 * (1.0 - separation_);
      const double b0 = 0.5 * (1.0 + separation_);
      const double x = embed(u)[0];
      const double xp = embed(v)[0];
      return cu ? std::min(x - a1, b0 - xp) : std::min(xp - a1, b0 - x);
    }
    case SpecKind::manifold_embedding: {
      // The nearest point of {(c(a), c(b)) : a <= b} is the midpoint (c(m), c(m)).
      const double half = 0.5 * std::abs(u - v) * angle_rate(embedding_);
      double sq = 2.0 * (2.0 - 2.0 * std::cos(half));
      if (embedding_ == EmbeddingKind::helix) sq += 2.0 * kHelixPitch * kHelixPitch * half * half;
      return std::sqrt(sq);
    }
  }
  return 0.0;
}

double DistributionSpec::delta_to_boundary(const Point& x, const Point& x_prime) const {
  return latent_delta(latent(x), latent(x_prime));
}

std::pair<double, double> DistributionSpec::label_law(double y, double u) const {
  switch (kind_) {
    case SpecKind::uniform_shift:
      return {clamp01(y - u), 0.0};
    case SpecKind::power_noise: {
      const double f = power_noise_F(u);
      if (y < 0.0) return {0.0, 0.0};
      if (y == 0.0) return {0.0, 1.0 - f};
      if (y < 1.0) return {1.0 - f, 0.0};
      if (y == 1.0) return {1.0 - f, f};
      return {1.0, 0.0};
    }
    case SpecKind::noise_free: {
      const double label = separation_ > 0.0 ? (u >= 0.5 ? 1.0 : 0.0) : u;
      return {label < y ? 1.0 : 0.0, label == y ? 1.0 : 0.0};
    }
    case SpecKind::manifold_embedding:
      return base_->label_law(y, u);
  }
  return {0.0, 0.0};
}

std::vector<double> DistributionSpec::label_breaks(double y) const {
  switch (kind_) {
    case SpecKind::uniform_shift:
      return {y - 1.0, y};
    case SpecKind::power_noise:
      return {0.5};
    case SpecKind::noise_free:
      return separation_ > 0.0 ? std::vector<double>{0.5} : std::vector<double>{y};
    case SpecKind::manifold_embedding:
      return base_->label_breaks(y);
  }
  return {};
}

std::vector<double> DistributionSpec::latent_breaks() const {
  switch (kind_) {
    case SpecKind::power_noise:
      return {0.5};
    case SpecKind::noise_free:
      return separation_ > 0.0 ? std::vector<double>{0.5} : std::vector<double>{};
    case SpecKind::manifold_embedding:
      return base_->latent_breaks();
    default:
      return {};
  }
}

bool DistributionSpec::diagonal_boundary() const {
  switch (kind_) {
    case SpecKind::uniform_shift:
    case SpecKind::power_noise:
      return true;
    case SpecKind::noise_free:
      return separation_ == 0.0;
    case SpecKind::manifold_embedding:
      return false;
  }
  return false;
}

KnownExponents DistributionSpec::exponents() const {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  KnownExponents e;
  switch (kind_) {
    case SpecKind::uniform_shift:
      // P(2U - U^2 <= t) = t with U = |X - X'|; margin mass 4t^2 - 4 sqrt2 t^3 + 2t^4 <= 4t^2.
      e.q = 1.0;
      e.C_star = 1.0;
      e.beta = 2.0;
      e.C_star_star = 4.0;
      e.alpha = 1.0;
      break;
    case SpecKind::power_noise:
      e.q = 1.0 - 2.0 * gamma_;
      e.C_star = nan;
      e.beta = 2.0;
      e.C_star_star = nan;
      e.alpha = nan;
      break;
    case SpecKind::noise_free:
      if (separation_ == 0.0) {
        // Margin mass 2 sqrt2 t - 2 t^2.
        e.q = kInfiniteExponent;
        e.C_star = 1.0;
        e.beta = 1.0;
        e.C_star_star = 2.0 * std::sqrt(2.0);
      } else {
        // Tied clusters carry mass 1/2 at |eta+ - eta-| = 0; the classes are separated.
        e.q = 0.0;
        e.C_star = 1.0;
        e.beta = kInfiniteExponent;
        e.C_star_star = 0.0;
      }
      e.alpha = nan;
      break;
    case SpecKind::manifold_embedding:
      e = base_->exponents();
      break;
  }
  e.rho = 1.0;
  e.C_X = 1.0;
  return e;
}

double DistributionSpec::support_radius() const { return std::sqrt(2.0); }

nlohmann::json DistributionSpec::descriptor(std::uint64_t seed) const {
  nlohmann::json params = nlohmann::json::object();
  switch (kind_) {
    case SpecKind::uniform_shift:
      break;
    case SpecKind::power_noise:
      params["gamma"] = gamma_;
      break;
    case SpecKind::noise_free:
      params["separation"] = separation_;
      break;
    case SpecKind::manifold_embedding: {
      auto b = base_->descriptor(seed);
      b.erase("seed");
      params["base"] = b;
      params["ambient_dim"] = ambient_dim_;
      params["embedding"] = embedding_ == EmbeddingKind::circle ? "circle" : "helix";
      break;
    }
  }
  return {{"kind", name()}, {"params", params}, {"seed", seed}};
}

std::pair<DistributionSpec, std::uint64_t> DistributionSpec::from_descriptor(
    const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind")) throw ValidationError("spec descriptor needs a kind");
  const std::string kind = j.at("kind").get<std::string>();
  const nlohmann::json params = j.value("params", nlohmann::json::object());
  const std::uint64_t seed = j.value("seed", std::uint64_t{1});
  try {
    if (kind == "UniformShift") return {uniform_shift(), seed};
    if (kind == "PowerNoise") return {power_noise(params.at("gamma").get<double>()), seed};
    if (kind == "NoiseFree") return {noise_free(params.value("separation", 0.0)), seed};
    if (kind == "ManifoldEmbedding") {
      const auto base = from_descriptor(params.at("base")).first;
      const std::string emb = params.value("embedding", std::string("circle"));
      if (emb != "circle" && emb != "helix") throw ValidationError("unknown embedding '" + emb + "'");
      return {manifold_embedding(base, params.value("ambient_dim", 3),
                                 emb == "circle" ? EmbeddingKind::circle : EmbeddingKind::helix),
              seed};
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed spec descriptor: ") + e.what());
  }
  throw ValidationError("unknown distribution kind '" + kind + "'");
}

BayesRules bayes_rules(const DistributionSpec& spec) {
  BayesRules r;
  r.f_rank = [spec](const Point& x, const Point& xp) {
    const auto p = spec.posteriors(x, xp);
    return static_cast<double>(sgn(p.eta_plus - p.eta_minus));
  };
  r.f_hinge = r.f_rank;
  r.f_square = [spec](const Point& x, const Point& xp) {
    const auto p = spec.posteriors(x, xp);
    const double s = p.eta_plus + p.eta_minus;
    return s > 0.0 ? (p.eta_plus - p.eta_minus) / s : 0.0;
  };
  return r;
}

double extended_f_square(const DistributionSpec& spec, double x, double x_prime) {
  if (spec.dim() != 1) throw ValidationError("extended square rule needs a 1-D law");
  if (spec.kind() == SpecKind::uniform_shift) {
    // (eta+ - eta-) = sgn(w)(2|w| - w^2) depends on w = x - x' only; beyond |w| = 1 it stays +-1.
    const double w = x - x_prime;
    const double a = std::min(std::abs(w), 1.0);
    return sgn(w) * (2.0 * a - a * a);
  }
  auto project = [&](double v) {
    Point p(1);
    p[0] = v;
    try {
      return spec.latent(p);
    } catch (const DomainError&) {
      if (spec.kind() == SpecKind::noise_free) return v < 0.5 ? 0.0 : 1.0;
      return clamp01(v);
    }
  };
  const auto p = spec.latent_posteriors(project(x), project(x_prime));
  const double s = p.eta_plus + p.eta_minus;
  return s > 0.0 ? (p.eta_plus - p.eta_minus) / s : 0.0;
}

double integrate_latent(const DistributionSpec& spec,
                        const std::function<double(double, double)>& g, double tol) {
  const std::vector<double> fixed = spec.latent_breaks();
  return integrate_unit_square(
      g,
      [&](double u) {
        std::vector<double> b = fixed;
        b.push_back(u);
        return b;
      },
      fixed, tol);
}

namespace {

// Mean of g over budget uniform latent pairs.
RiskEstimate latent_mc(const std::function<double(double, double)>& g, long budget,
                       std::uint64_t seed) {
  MeanAccumulator acc;
  Stream rng(seed, 0x5eedULL);
  for (long k = 0; k < budget; ++k) {
    const double u = rng.uniform();
    const double v = rng.uniform();
    acc.add(g(u, v));
  }
  return {acc.mean, acc.stderr_of_mean(), acc.count};
}

RiskEstimate latent_expectation(const DistributionSpec& spec,
                                const std::function<double(double, double)>& g,
                                const PopulationOptions& opts) {
  if (opts.mc_budget > 0) return latent_mc(g, opts.mc_budget, opts.seed);
  return {integrate_latent(spec, g, opts.tol), 0.0, 0};
}

}  // namespace

RiskEstimate bayes_ranking_risk(const DistributionSpec& spec, const PopulationOptions& opts) {
  if (opts.mc_budget <= 0) {
    const double v = integrate_latent(
        spec,
        [&](double u, double w) {
          const auto p = spec.latent_posteriors(u, w);
          return std::min(p.eta_plus, p.eta_minus);
        },
        opts.tol);
    return {v, 0.0, 0};
  }
  // Fresh labeled pairs ranked by the Bayes rule, with the tie rule of the ranking risk.
  MeanAccumulator acc;
  for (long k = 0; k < opts.mc_budget; ++k) {
    Stream rng(opts.seed, static_cast<std::uint64_t>(k));
    const double u = rng.uniform();
    const double w = rng.uniform();
    const double y = spec.draw_label(u, rng);
    const double yp = spec.draw_label(w, rng);
    const auto p = spec.latent_posteriors(u, w);
    const int rule = sgn(p.eta_plus - p.eta_minus);
    const bool wrong = (y > yp && rule < 0) || (y < yp && rule >= 0);
    acc.add(wrong ? 1.0 : 0.0);
  }
  return {acc.mean, acc.stderr_of_mean(), acc.count};
}

ExcessRisks excess_risks(const PairFunction& f, const DistributionSpec& spec, const LossSpec& loss,
                         const PopulationOptions& opts) {
  // Both integrands are pointwise nonnegative excesses over the Bayes value.
  auto rank = [&](double u, double v) {
    const auto p = spec.latent_posteriors(u, v);
    const double t = f(spec.embed(u), spec.embed(v));
    const double risk = t < 0.0 ? p.eta_plus : p.eta_minus;
    return risk - std::min(p.eta_plus, p.eta_minus);
  };
  auto phi = [&](double u, double v) {
    const auto p = spec.latent_posteriors(u, v);
    const double t = f(spec.embed(u), spec.embed(v));
    return conditional_risk(loss, p, t) - min_conditional_risk(loss, p);
  };
  PopulationOptions second = opts;
  second.seed = opts.seed + 1;
  return {latent_expectation(spec, rank, opts), latent_expectation(spec, phi, second)};
}

RiskEstimate population_phi_risk(const PairFunction& f, const DistributionSpec& spec,
                                 const LossSpec& loss, const PopulationOptions& opts) {
  return latent_expectation(
      spec,
      [&](double u, double v) {
        return conditional_risk(loss, spec.latent_posteriors(u, v),
                                f(spec.embed(u), spec.embed(v)));
      },
      opts);
}

double bayes_phi_risk(const DistributionSpec& spec, const LossSpec& loss, double tol) {
  return integrate_latent(
      spec,
      [&](double u, double v) { return min_conditional_risk(loss, spec.latent_posteriors(u, v)); },
      tol);
}

namespace {

// Per-cell contributions g_j of one latent draw, accumulated with their cross
// moments so the slope gets a delta-method Monte Carlo standard error.
struct CellMoments {
  explicit CellMoments(std::size_t cells) : sum(cells, 0.0), cross(cells * cells, 0.0) {}
  void add(const std::vector<double>& g) {
    const std::size_t G = sum.size();
    for (std::size_t j = 0; j < G; ++j) {
      if (g[j] == 0.0) continue;
      sum[j] += g[j];
      for (std::size_t k = 0; k < G; ++k) cross[j * G + k] += g[j] * g[k];
    }
  }
  std::vector<double> sum;
  std::vector<double> cross;
};

ExponentFit fit_mass_curve(const std::vector<double>& t_grid, const CellMoments& mom, long budget) {
  const std::size_t G = t_grid.size();
  const double nb = static_cast<double>(budget);
  ExponentFit fit;
  fit.t = t_grid;
  fit.mass.resize(G);
  for (std::size_t k = 0; k < G; ++k) fit.mass[k] = mom.sum[k] / nb;
  std::vector<double> lx, ly;
  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < G; ++k) {
    if (fit.mass[k] > 0.0) {
      lx.push_back(std::log(t_grid[k]));
      ly.push_back(std::log(fit.mass[k]));
      kept.push_back(k);
    } else {
      fit.warnings.push_back("dropped t = " + std::to_string(t_grid[k]) + " with zero mass");
    }
  }
  if (lx.empty()) {
    fit.value = kInfiniteExponent;
    return fit;
  }
  if (lx.size() < 2) throw ValidationError("fewer than two grid cells with positive mass");
  const LineFit line = fit_line(lx, ly);
  fit.value = line.slope;
  fit.regression_std_error = line.slope_stderr;

  // slope = sum_j w_j log m_j; Var ~ sum_jk w_j w_k Cov(m_j, m_k) / (m_j m_k).
  double xbar = 0.0;
  for (double x : lx) xbar += x;
  xbar /= static_cast<double>(lx.size());
  double sxx = 0.0;
  for (double x : lx) sxx += (x - xbar) * (x - xbar);
  double var = 0.0;
  for (std::size_t a = 0; a < kept.size(); ++a) {
    for (std::size_t b = 0; b < kept.size(); ++b) {
      const std::size_t j = kept[a], k = kept[b];
      const double cov = (mom.cross[j * G + k] / nb - fit.mass[j] * fit.mass[k]) / nb;
      var += (lx[a] - xbar) * (lx[b] - xbar) / (sxx * sxx) * cov / (fit.mass[j] * fit.mass[k]);
    }
  }
  fit.std_error = std::sqrt(std::max(var, 0.0));
  return fit;
}

void check_grid(const std::vector<double>& t_grid, long budget) {
  if (t_grid.size() < 2) throw ValidationError("t grid needs at least two values");
  for (double t : t_grid)
    if (!(t > 0.0)) throw ValidationError("t grid values must be positive");
  if (budget < 1) throw ValidationError("MC budget must be positive");
}

}  // namespace

ExponentFit estimate_noise_exponent(const DistributionSpec& spec, const std::vector<double>& t_grid,
                                    long budget, std::uint64_t seed) {
  check_grid(t_grid, budget);
  CellMoments mom(t_grid.size());
  std::vector<double> g(t_grid.size());
  Stream rng(seed, 0x9e57ULL);
  for (long k = 0; k < budget; ++k) {
    const double u = rng.uniform();
    const double v = rng.uniform();
    const double gap = posterior_gap(spec.latent_posteriors(u, v));
    for (std::size_t j = 0; j < t_grid.size(); ++j) g[j] = gap <= t_grid[j] ? 1.0 : 0.0;
    mom.add(g);
  }
  return fit_mass_curve(t_grid, mom, budget);
}

ExponentFit estimate_margin_noise_exponent(const DistributionSpec& spec,
                                           const std::vector<double>& t_grid, long budget,
                                           std::uint64_t seed) {
  check_grid(t_grid, budget);
  CellMoments mom(t_grid.size());
  std::vector<double> g(t_grid.size());
  Stream rng(seed, 0xb37aULL);
  for (long k = 0; k < budget; ++k) {
    const double u = rng.uniform();
    const double v = rng.uniform();
    const double gap = posterior_gap(spec.latent_posteriors(u, v));
    const double delta = spec.latent_delta(u, v);
    for (std::size_t j = 0; j < t_grid.size(); ++j) g[j] = delta < t_grid[j] ? gap : 0.0;
    mom.add(g);
  }
  return fit_mass_curve(t_grid, mom, budget);
}

}  // namespace pairrank
