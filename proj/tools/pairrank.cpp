#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include "pairrank/approximation.hpp"
#include "pairrank/capacity.hpp"
#include "pairrank/experiments.hpp"
#include "pairrank/numerics.hpp"
#include "pairrank/risk.hpp"
#include "pairrank/solver.hpp"
#include "pairrank/synth.hpp"

using namespace pairrank;
using nlohmann::json;

namespace {

struct Globals {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out;
};

json load_config(const Globals& g) {
  if (g.config_path.empty()) return json::object();
  std::ifstream in(g.config_path);
  if (!in) throw ValidationError("cannot read config " + g.config_path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(g.config_path + ": " + e.what());
  }
}

// Spec from the config's "spec" descriptor (UniformShift by default) and the
// seed: --seed, else the config's "seed", else the descriptor's seed.
std::pair<DistributionSpec, std::uint64_t> load_spec(const Globals& g, const json& cfg) {
  DistributionSpec spec = DistributionSpec::uniform_shift();
  std::uint64_t seed = 1;
  if (cfg.contains("spec")) std::tie(spec, seed) = DistributionSpec::from_descriptor(cfg.at("spec"));
  if (cfg.contains("seed")) seed = cfg.at("seed").get<std::uint64_t>();
  if (g.seed_given) seed = g.seed;
  return {spec, seed};
}

template <class F>
void emit(const std::string& path, F&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  write(out);
}

void emit_json(const std::string& path, const json& j) {
  emit(path, [&](std::ostream& o) { o << std::setw(2) << j << "\n"; });
}

json estimate_json(const RiskEstimate& r) {
  return {{"value", r.value}, {"std_error", r.std_error}, {"n_terms", r.n_terms}};
}

json fit_json(const FitReport& r) {
  return {{"objective", r.objective}, {"duality_gap", r.duality_gap}, {"residual", r.residual},
          {"iterations", r.iterations}, {"converged", r.converged}, {"num_pairs", r.num_pairs}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pairwise kernel ranking: fitting, evaluation and experiments"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON configuration file");
  auto* seed_opt = app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--out", g.out, "Output file (stdout when omitted)");
  app.fallthrough();

  // synth sample
  auto* synth = app.add_subcommand("synth", "Synthetic distributions");
  synth->require_subcommand(1);
  auto* sample = synth->add_subcommand("sample", "Draw a labelled sample as CSV");
  int sample_n = 100;
  sample->add_option("--n", sample_n, "Sample size")->check(CLI::PositiveNumber);

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Fit a ranking model; writes the model file to --out");
  std::string data_path, loss_id = "hinge";
  double sigma = 0.5, lambda = 0.01;
  long max_pairs = 0;
  fit_cmd->add_option("--data", data_path, "Training CSV")->required();
  fit_cmd->add_option("--loss", loss_id, "hinge, square, square_s<k> or rnorm_<r>");
  fit_cmd->add_option("--sigma", sigma, "Kernel width");
  fit_cmd->add_option("--lambda", lambda, "Regularization");
  fit_cmd->add_option("--max-pairs", max_pairs, "Subsample this many pairs (0: all)");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Empirical and excess risks of a model");
  std::string model_path, eval_data;
  long mc_budget = 0;
  eval_cmd->add_option("--model", model_path, "Model file from fit")->required();
  eval_cmd->add_option("--data", eval_data, "Optional test CSV for empirical risks");
  eval_cmd->add_option("--mc-budget", mc_budget, "Monte Carlo pairs (0: quadrature)");

  // curve
  auto* curve_cmd = app.add_subcommand("curve", "Learning curve under a parameter schedule");
  bool timing = false, summary = false;
  curve_cmd->add_flag("--timing", timing, "Append wall-time column");
  curve_cmd->add_flag("--summary", summary, "Print medians and fitted decay rate to stderr");

  // terms
  auto* terms_cmd = app.add_subcommand("terms", "Oracle-inequality term magnitudes (diagnostic, not a bound)");
  int terms_n = 256;
  std::string mode_name = "unit";
  terms_cmd->add_option("--n", terms_n, "Sample size")->check(CLI::Range(2, std::numeric_limits<int>::max()));
  terms_cmd->add_option("--mode", mode_name, "unit or shape")->check(CLI::IsMember({"unit", "shape"}));
  terms_cmd->add_option("--loss", loss_id, "hinge or square");

  // capacity
  auto* cap_cmd = app.add_subcommand("capacity", "Box-counting dimension and RKHS entropy estimates");
  std::string cap_mode = "box";
  int cap_n = 20000, cap_eps_count = 8;
  double eps_lo = 0.01, eps_hi = 0.1, p_exp = 0.25;
  long ball_samples = 4096;
  std::vector<int> indices{1, 2, 4, 8};
  cap_cmd->add_option("--mode", cap_mode, "box or entropy")->check(CLI::IsMember({"box", "entropy"}));
  cap_cmd->add_option("--n", cap_n, "Points sampled from the spec")->check(CLI::PositiveNumber);
  cap_cmd->add_option("--eps-min", eps_lo, "Smallest box size");
  cap_cmd->add_option("--eps-max", eps_hi, "Largest box size");
  cap_cmd->add_option("--eps-count", cap_eps_count, "Box sizes on the log grid");
  cap_cmd->add_option("--sigma", sigma, "Kernel width (entropy)");
  cap_cmd->add_option("--p", p_exp, "Entropy exponent p in (0, 1/2)");
  cap_cmd->add_option("--ball-samples", ball_samples, "Unit-ball samples (entropy)");
  cap_cmd->add_option("--indices", indices, "Entropy indices (entropy)");

  // calibrate
  auto* cal_cmd = app.add_subcommand("calibrate", "Calibration inequalities for a model");
  cal_cmd->add_option("--model", model_path, "Model file from fit")->required();
  cal_cmd->add_option("--mc-budget", mc_budget, "Monte Carlo pairs (0: quadrature)");

  // approx
  auto* approx_cmd = app.add_subcommand("approx", "Check the smoothed Bayes-rule approximators");
  int fold = 2, probes = 10000;
  approx_cmd->add_option("--loss", loss_id, "hinge or square");
  approx_cmd->add_option("--sigma", sigma, "Smoothing width");
  approx_cmd->add_option("--lambda", lambda, "Regularization (hinge)");
  approx_cmd->add_option("--s", fold, "Fold count (square)")->check(CLI::Range(1, 8));
  approx_cmd->add_option("--probes", probes, "Sup-norm probe points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  g.seed_given = seed_opt->count() > 0;

  try {
    const json cfg = load_config(g);
    if (sample->parsed()) {
      const auto [spec, seed] = load_spec(g, cfg);
      const Dataset data = spec.sample(sample_n, seed);
      if (g.out.empty()) throw ValidationError("synth sample needs --out");
      write_dataset_csv(data, g.out);
    } else if (fit_cmd->parsed()) {
      if (g.out.empty()) throw ValidationError("fit needs --out for the model file");
      const Dataset data = read_dataset_csv(data_path);
      SolverOptions opts;
      opts.max_pairs = max_pairs;
      opts.pair_seed = g.seed_given ? g.seed : 1;
      const FitResult r = fit(data, LossSpec::from_id(loss_id), sigma, lambda, opts);
      r.model.save(g.out);
      std::cout << std::setw(2) << fit_json(r.report) << "\n";
      if (!r.report.converged) throw NumericalError("solver did not reach the requested tolerance");
    } else if (eval_cmd->parsed()) {
      const RankingModel model = RankingModel::load(model_path);
      const auto [spec, seed] = load_spec(g, cfg);
      if (spec.dim() != model.points.cols()) throw ValidationError("model and spec dimensions differ");
      json j;
      j["loss"] = model.loss.id();
      j["spec"] = spec.descriptor(seed);
      PopulationOptions po;
      po.mc_budget = mc_budget;
      po.seed = seed;
      const ExcessRisks ex = excess_risks(model.as_function(true), spec, model.loss, po);
      j["excess_rank"] = estimate_json(ex.rank);
      j["excess_phi"] = estimate_json(ex.phi);
      if (!eval_data.empty()) {
        const Dataset data = read_dataset_csv(eval_data);
        j["empirical_rank"] = estimate_json(empirical_ranking_risk(model.as_function(false), data));
        j["empirical_phi"] = estimate_json(empirical_phi_risk(model.as_function(true), data, model.loss));
      }
      emit_json(g.out, j);
    } else if (curve_cmd->parsed()) {
      ExperimentConfig ec = ExperimentConfig::from_json(cfg);
      if (g.seed_given) ec.seed = g.seed;
      const std::string out = g.out.empty() ? ec.out_path : g.out;
      const auto curve = run_learning_curve(ec);
      emit(out, [&](std::ostream& o) { write_curve_csv(o, curve, timing); });
      if (summary) {
        for (const auto& row : summarize_curve(curve))
          std::cerr << "n=" << row.n << " median_excess_phi=" << row.median << " used=" << row.used << "\n";
        try {
          const RateFit rf = fit_rate(curve);
          std::cerr << "decay_rate=" << rf.slope << " std_error=" << rf.std_error << "\n";
        } catch (const ValidationError& e) {
          std::cerr << "decay_rate unavailable: " << e.what() << "\n";
        }
      }
    } else if (terms_cmd->parsed()) {
      const auto [spec, seed] = load_spec(g, cfg);
      const auto ex = spec.exponents();
      OracleTermsInput in;
      in.loss = LossSpec::from_id(loss_id);
      in.n = terms_n;
      in.d = spec.dim();
      in.q = ex.q;
      in.beta = ex.beta;
      in.rho = ex.rho;
      in.alpha = ex.alpha;
      in.r = spec.support_radius();
      const Schedule s = in.loss.kind == LossKind::square ? Schedule::square(ex.alpha, ex.rho, in.d)
                                                          : Schedule::hinge(ex.q, ex.beta, ex.rho, in.d);
      in.sigma = s.sigma(in.n);
      in.lambda = s.lambda(in.n);
      in.p = Schedule::p(in.n);
      const auto terms = oracle_terms_report(in, mode_name == "unit" ? ConstantsMode::unit : ConstantsMode::shape);
      emit(g.out, [&](std::ostream& o) { write_terms_csv(o, terms); });
    } else if (cap_cmd->parsed()) {
      const auto [spec, seed] = load_spec(g, cfg);
      json j;
      j["spec"] = spec.descriptor(seed);
      if (cap_mode == "box") {
        const Dataset data = spec.sample(cap_n, seed);
        const DimensionFit fitd = box_counting_fit(data.x, log_grid(eps_lo, eps_hi, cap_eps_count));
        j["dim"] = fitd.dim;
        j["std_error"] = fitd.std_error;
        j["eps"] = fitd.eps;
        j["counts"] = fitd.counts;
      } else {
        const auto ex = spec.exponents();
        const CapacityParams params = CapacityParams::make(p_exp, spec.dim(), ex.rho, ex.C_X);
        const Dataset data = spec.sample(cap_n, seed);
        const auto est = empirical_rkhs_entropies(sigma, EmpiricalSeminorm::pairs(data.x),
                                                  ball_samples, indices, seed);
        json rows = json::array();
        for (std::size_t k = 0; k < indices.size(); ++k) {
          const double bound = theoretical_entropy_bound(params, sigma, indices[k]);
          rows.push_back({{"i", indices[k]}, {"estimate", est[k]}, {"bound", bound},
                          {"within", est[k] <= bound}});
        }
        j["entropy"] = rows;
      }
      emit_json(g.out, j);
    } else if (cal_cmd->parsed()) {
      const RankingModel model = RankingModel::load(model_path);
      const auto [spec, seed] = load_spec(g, cfg);
      PopulationOptions po;
      po.mc_budget = mc_budget;
      po.seed = seed;
      std::vector<CheckRow> rows;
      const PairFunction f = model.as_function(true);
      for (auto [kind, name] : {std::pair{CalibrationKind::zhang, "zhang"},
                                std::pair{CalibrationKind::sqrt_square, "sqrt_square"},
                                std::pair{CalibrationKind::refined, "refined"}}) {
        const CalibrationResult c = calibration_check(kind, f, spec, po);
        rows.push_back({name, c.lhs, c.rhs, c.lhs_se, c.rhs_se, c.pass});
      }
      emit(g.out, [&](std::ostream& o) { write_check_rows(o, rows); });
    } else if (approx_cmd->parsed()) {
      const auto [spec, seed] = load_spec(g, cfg);
      json j;
      if (LossSpec::from_id(loss_id).kind == LossKind::square) {
        const SquareApproxCheck c = square_approx_check(spec, sigma, fold, probes, seed);
        j = {{"loss", "square"}, {"sigma", c.sigma}, {"s", c.s}, {"sup_norm", c.sup_norm},
             {"sup_bound", c.sup_bound}, {"norm_bound", c.norm_bound},
             {"excess_phi", estimate_json(c.excess_phi)}, {"l2_dist_sq", c.l2_dist_sq}, {"pass", c.pass}};
      } else {
        const HingeApproxCheck c = hinge_approx_check(spec, sigma, lambda, probes, seed);
        j = {{"loss", "hinge"}, {"sigma", c.sigma}, {"lambda", c.lambda}, {"sup_norm", c.sup_norm},
             {"norm_bound", c.norm_bound}, {"excess_phi", estimate_json(c.excess_phi)},
             {"lhs", c.lhs}, {"rhs", c.rhs}, {"pass", c.pass}};
      }
      emit_json(g.out, j);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
