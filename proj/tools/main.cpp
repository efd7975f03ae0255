// ridgelim: asymptotic estimation error of ridge regression with linearly
// dependent covariates (X = A Z B), plus a seeded Monte Carlo simulator to
// validate the theory at finite size. Outputs plot-ready CSV.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ridgelim/asymptotics.hpp"
#include "ridgelim/errors.hpp"
#include "ridgelim/grid.hpp"
#include "ridgelim/measures.hpp"
#include "ridgelim/simulator.hpp"

namespace {

using ridgelim::format_double;

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& header) {
    out_.open(path, std::ios::trunc);
    if (!out_) {
      throw ridgelim::SpecParseError("could not open output file '" + path + "'");
    }
    out_ << header << '\n' << std::flush;
  }

  // Rows are flushed immediately so an interrupted run leaves a valid prefix.
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n' << std::flush;
  }

 private:
  std::ofstream out_;
};

struct LambdaSetting {
  bool track_gamma = false;
  double value = 0.0;
};

LambdaSetting parse_lambda_setting(const std::string& text) {
  if (text == "track-gamma") return {true, 0.0};
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return {false, v};
  } catch (const std::exception&) {
    throw ridgelim::SpecParseError("lambda must be a number or 'track-gamma', got '" +
                                   text + "'");
  }
}

std::string trimmed(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = text.find_last_not_of(" \t\r");
  return text.substr(begin, end - begin + 1);
}

// Flat key=value config support: keys become --key=value arguments unless the
// same flag was given explicitly, so command-line flags always win.
std::vector<std::string> with_config_args(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;

  std::ifstream in(path);
  if (!in) throw ridgelim::SpecParseError("could not open config file '" + path + "'");
  std::string line;
  while (std::getline(in, line)) {
    const std::string entry = trimmed(line);
    if (entry.empty() || entry[0] == '#') continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) {
      throw ridgelim::SpecParseError("config lines must look like key=value, got '" +
                                     entry + "'");
    }
    const std::string key = trimmed(entry.substr(0, eq));
    const std::string value = trimmed(entry.substr(eq + 1));
    if (key.empty() || key == "config") continue;
    const std::string flag = "--" + key;
    bool given = false;
    for (const std::string& arg : args) {
      if (arg == flag || arg.rfind(flag + "=", 0) == 0) {
        given = true;
        break;
      }
    }
    if (!given) args.push_back(flag + "=" + value);
  }
  return args;
}

std::vector<double> make_axis_grid(double start, double stop, int steps, bool log_spacing) {
  if (steps < 2) throw ridgelim::SpecParseError("sweeps need at least 2 steps");
  if (!(start < stop)) throw ridgelim::SpecParseError("sweep range needs start < stop");
  if (log_spacing) {
    if (!(start > 0.0)) {
      throw ridgelim::SpecParseError("log-spaced sweeps need a positive start");
    }
    return ridgelim::logspace(std::log10(start), std::log10(stop), steps);
  }
  return ridgelim::linspace(start, stop, steps);
}

// ---------------------------------------------------------------------------
// solve

struct SolveOptions {
  double gamma = 1.0;
  double lambda = 1.0;
  double alpha = 1.0;
  double sigma = 0.0;
  std::string mu_a = "identity";
  std::string mu_b = "identity";
  std::string output;
};

void run_solve(const SolveOptions& o) {
  ridgelim::ProblemSpec spec;
  spec.gamma = o.gamma;
  spec.lambda = o.lambda;
  spec.alpha = o.alpha;
  spec.sigma_eps = o.sigma;
  spec.mu_a = ridgelim::parse_measure(o.mu_a);
  spec.mu_b = ridgelim::parse_measure(o.mu_b);
  ridgelim::validate(spec);

  const auto sol = ridgelim::solve_kappa(spec);
  const auto rb = ridgelim::risk_from_solution(spec, sol);

  std::cout << "mu_a         " << spec.mu_a.spec_string() << '\n'
            << "mu_b         " << spec.mu_b.spec_string() << '\n'
            << "kappa        " << format_double(sol.kappa) << '\n'
            << "kappa1       " << format_double(sol.kappa1) << '\n'
            << "m_bar        " << format_double(sol.m_bar) << '\n'
            << "dm_dlambda   " << format_double(sol.dm_dlambda) << '\n'
            << "bias         " << format_double(rb.bias) << '\n'
            << "variance     " << format_double(rb.variance) << '\n'
            << "risk         " << format_double(rb.risk) << '\n'
            << "residual     " << format_double(sol.residual) << '\n'
            << "iterations   " << sol.iterations << '\n';

  if (!o.output.empty()) {
    CsvWriter csv(o.output,
                  "gamma,lambda,alpha,sigma_eps,kappa,m_bar,dkappa_dlambda,"
                  "dm_dlambda,kappa1,bias,variance,risk,residual,iterations");
    csv.row({format_double(spec.gamma), format_double(spec.lambda),
             format_double(spec.alpha), format_double(spec.sigma_eps),
             format_double(sol.kappa), format_double(sol.m_bar),
             format_double(sol.dkappa_dlambda), format_double(sol.dm_dlambda),
             format_double(sol.kappa1), format_double(rb.bias),
             format_double(rb.variance), format_double(rb.risk),
             format_double(sol.residual), std::to_string(sol.iterations)});
  }
}

// ---------------------------------------------------------------------------
// sweep (theory curves)

struct SweepOptions {
  std::string axis;
  double start = 0.0, stop = 0.0;
  int steps = 0;
  bool log_spacing = false;
  double gamma = 1.0;
  std::string lambda = "1";
  double alpha = 1.0;
  double sigma = 0.0;
  std::string mu_a = "identity";
  std::string mu_b = "identity";
  int ref_n = 2000;
  std::string output;
};

void run_sweep(const SweepOptions& o) {
  const auto grid = make_axis_grid(o.start, o.stop, o.steps, o.log_spacing);
  const auto lambda_setting = parse_lambda_setting(o.lambda);
  const auto mu_b = ridgelim::parse_measure(o.mu_b);
  std::optional<ridgelim::SpectralMeasure> mu_a;
  if (o.axis != "omega") mu_a = ridgelim::parse_measure(o.mu_a);

  std::cout << "axis         " << o.axis << '\n';
  if (mu_a) std::cout << "mu_a         " << mu_a->spec_string() << '\n';
  std::cout << "mu_b         " << mu_b.spec_string() << '\n';

  CsvWriter csv(o.output, "axis,value,kappa,m_bar,dm_dlambda,bias,variance,risk");
  int failures = 0;
  for (double value : grid) {
    ridgelim::ProblemSpec spec;
    spec.alpha = o.alpha;
    spec.sigma_eps = o.sigma;
    spec.mu_b = mu_b;
    if (o.axis == "gamma") {
      spec.gamma = value;
      spec.lambda = lambda_setting.track_gamma ? value : lambda_setting.value;
      spec.mu_a = *mu_a;
    } else if (o.axis == "lambda") {
      spec.gamma = o.gamma;
      spec.lambda = value;
      spec.mu_a = *mu_a;
    } else {  // omega: limiting spectrum of the pairwise-mixing design
      spec.gamma = o.gamma;
      spec.lambda = lambda_setting.track_gamma ? o.gamma : lambda_setting.value;
      const auto eigs =
          ridgelim::empirical_spectrum(ridgelim::AKind{ridgelim::Redundancy{value}}, o.ref_n);
      spec.mu_a = ridgelim::SpectralMeasure::from_eigenvalues(eigs);
    }
    try {
      ridgelim::validate(spec);
      const auto sol = ridgelim::solve_kappa(spec);
      const auto rb = ridgelim::risk_from_solution(spec, sol);
      csv.row({o.axis, format_double(value), format_double(sol.kappa),
               format_double(sol.m_bar), format_double(sol.dm_dlambda),
               format_double(rb.bias), format_double(rb.variance),
               format_double(rb.risk)});
    } catch (const ridgelim::NumericError& e) {
      std::cerr << "warning: " << o.axis << " = " << format_double(value) << ": "
                << e.what() << '\n';
      const std::string nan = "nan";
      csv.row({o.axis, format_double(value), nan, nan, nan, nan, nan, nan});
      ++failures;
    }
  }
  if (failures > 0) {
    throw ridgelim::SolveFailureError(std::to_string(failures) +
                                      " grid point(s) failed; see rows with nan");
  }
}

// ---------------------------------------------------------------------------
// simulate (Monte Carlo sweep)

struct SimulateOptions {
  std::string axis;
  double start = 0.0, stop = 0.0;
  int steps = 0;
  bool log_spacing = false;
  int n = 0;
  int trials = 0;
  std::uint64_t seed = 0;
  double gamma = 1.0;
  std::string lambda = "1";
  double alpha = 1.0;
  double sigma = 0.0;
  std::string a_model = "identity";
  std::string b_model = "identity";
  std::string z_dist = "gaussian";
  std::string output;
};

void run_simulate(const SimulateOptions& o) {
  const auto grid = make_axis_grid(o.start, o.stop, o.steps, o.log_spacing);
  const auto lambda_setting = parse_lambda_setting(o.lambda);
  ridgelim::CovariateModel model;
  model.a = ridgelim::parse_a_model(o.a_model);
  model.b = ridgelim::parse_b_model(o.b_model);
  model.z_dist = ridgelim::parse_z_dist(o.z_dist);
  if (o.trials < 1) throw ridgelim::SpecParseError("trials must be at least 1");
  if (o.trials == 1) {
    std::cerr << "warning: single trial per grid point, standard errors are 0\n";
  }

  std::cout << "a_model      " << ridgelim::model_spec_string(model.a) << '\n'
            << "b_model      " << ridgelim::model_spec_string(model.b) << '\n'
            << "z_dist       " << ridgelim::z_dist_name(model.z_dist) << '\n';

  const int workers = ridgelim::worker_count_from_env();
  CsvWriter csv(o.output,
                "axis,value,mean_risk,se_risk,mean_bias,se_bias,mean_variance,"
                "se_variance,mean_m,se_m,trials,n");
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double value = grid[g];
    ridgelim::GridPointConfig cfg;
    cfg.axis_value = value;
    cfg.model = model;
    cfg.alpha = o.alpha;
    cfg.sigma_eps = o.sigma;
    cfg.n = o.n;
    double gamma = o.gamma;
    if (o.axis == "gamma") {
      gamma = value;
      cfg.lambda = lambda_setting.track_gamma ? value : lambda_setting.value;
    } else if (o.axis == "lambda") {
      cfg.lambda = value;
    } else {  // omega
      cfg.model.a = ridgelim::Redundancy{value};
      cfg.lambda = lambda_setting.track_gamma ? gamma : lambda_setting.value;
    }
    cfg.d = static_cast<int>(std::lround(gamma * o.n));
    if (cfg.d < 2) {
      throw ridgelim::SpecParseError("gamma * n must be at least 2 (axis value " +
                                     format_double(value) + ")");
    }

    const auto results = ridgelim::run_trials(cfg, o.trials, o.seed, g, workers);
    std::vector<double> risk, bias, variance, m;
    for (const auto& r : results) {
      risk.push_back(r.empirical_risk);
      bias.push_back(r.empirical_bias);
      variance.push_back(r.empirical_variance);
      m.push_back(r.empirical_m);
    }
    const auto sr = ridgelim::mean_and_se(risk);
    const auto sb = ridgelim::mean_and_se(bias);
    const auto sv = ridgelim::mean_and_se(variance);
    const auto sm = ridgelim::mean_and_se(m);
    csv.row({o.axis, format_double(value), format_double(sr.mean),
             format_double(sr.se), format_double(sb.mean), format_double(sb.se),
             format_double(sv.mean), format_double(sv.se), format_double(sm.mean),
             format_double(sm.se), std::to_string(o.trials), std::to_string(o.n)});
  }
}

// ---------------------------------------------------------------------------
// universality (entry-law A/B experiment)

struct UniversalityOptions {
  int n = 0;
  int trials = 0;
  std::uint64_t seed = 0;
  double gamma = 1.0;
  double lambda = 0.1;
  double alpha = 1.0;
  double sigma = 0.0;
  std::string a_model = "identity";
  std::string b_model = "identity";
  std::string output;
};

void run_universality(const UniversalityOptions& o) {
  ridgelim::CovariateModel model;
  model.a = ridgelim::parse_a_model(o.a_model);
  model.b = ridgelim::parse_b_model(o.b_model);

  std::cout << "a_model      " << ridgelim::model_spec_string(model.a) << '\n'
            << "b_model      " << ridgelim::model_spec_string(model.b) << '\n';

  const int workers = ridgelim::worker_count_from_env();
  const auto arms = ridgelim::universality_compare(model, o.n, o.gamma, o.lambda,
                                                   o.alpha, o.sigma, o.trials,
                                                   o.seed, workers);
  CsvWriter csv(o.output, "dist,mean_risk,se_risk,gap_vs_gaussian,gap_se");
  for (const auto& arm : arms) {
    csv.row({ridgelim::z_dist_name(arm.dist), format_double(arm.risk.mean),
             format_double(arm.risk.se), format_double(arm.gap_vs_gaussian),
             format_double(arm.gap_se)});
    std::cout << ridgelim::z_dist_name(arm.dist) << ": mean risk "
              << format_double(arm.risk.mean) << ", gap vs gaussian "
              << format_double(arm.gap_vs_gaussian) << " (se "
              << format_double(arm.gap_se) << ", pooled se "
              << format_double(arm.pooled_se) << ")\n";
  }
}

// ---------------------------------------------------------------------------
// optimal-lambda

struct OptimalLambdaOptions {
  double gamma = 1.0;
  double alpha = 1.0;
  double sigma = 0.0;
};

void run_optimal_lambda(const OptimalLambdaOptions& o) {
  std::cout << format_double(ridgelim::optimal_lambda(o.gamma, o.alpha, o.sigma))
            << '\n';
}

// ---------------------------------------------------------------------------
// spectrum

struct SpectrumOptions {
  std::string a_model = "identity";
  int n = 0;
  bool raw = false;
  std::string output;
};

void run_spectrum(const SpectrumOptions& o) {
  const auto kind = ridgelim::parse_a_model(o.a_model);
  const auto eigs = ridgelim::empirical_spectrum(kind, o.n);

  if (o.raw) {
    CsvWriter csv(o.output, "eigenvalue");
    for (double v : eigs) csv.row({format_double(v)});
    return;
  }

  // Comparison mode: the banded-Toeplitz limit as the reference.
  std::vector<double> coeffs;
  if (std::holds_alternative<ridgelim::ToeplitzAR>(kind)) {
    coeffs = std::get<ridgelim::ToeplitzAR>(kind).coeffs;
  } else if (std::holds_alternative<ridgelim::IdentityOp>(kind)) {
    coeffs = {1.0};
  } else {
    throw ridgelim::SpecParseError(
        "spectrum comparison needs an ar: or identity model (use --raw otherwise)");
  }
  const auto limit = ridgelim::SpectralMeasure::szego(coeffs);
  const auto empirical = ridgelim::SpectralMeasure::from_eigenvalues(eigs);

  CsvWriter csv(o.output, "z,m_empirical,m_szego");
  for (double z : ridgelim::logspace(-2.0, 2.0, 50)) {
    csv.row({format_double(z), format_double(empirical.stieltjes(z)),
             format_double(limit.stieltjes(z))});
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asymptotic risk of ridge regression with dependent covariates"};
  app.require_subcommand(1);

  SolveOptions solve_opts;
  auto* solve_cmd = app.add_subcommand(
      "solve", "Solve the fixed point and report asymptotic bias/variance/risk");
  solve_cmd->add_option("--gamma", solve_opts.gamma, "Dimension ratio d/n")->required();
  solve_cmd->add_option("--lambda", solve_opts.lambda, "Ridge penalty")->required();
  solve_cmd->add_option("--alpha", solve_opts.alpha, "Signal scale");
  solve_cmd->add_option("--sigma", solve_opts.sigma, "Noise standard deviation");
  solve_cmd->add_option("--mu-a", solve_opts.mu_a, "Temporal spectrum spec");
  solve_cmd->add_option("--mu-b", solve_opts.mu_b, "Spatial spectrum spec");
  solve_cmd->add_option("-o,--output", solve_opts.output, "Optional CSV row output");
  std::string solve_config;
  solve_cmd->add_option("--config", solve_config, "Flat key=value config file");
  solve_cmd->callback([&] { run_solve(solve_opts); });

  SweepOptions sweep_opts;
  auto* sweep_cmd = app.add_subcommand("sweep", "Theory sweep along gamma, lambda, or omega");
  sweep_cmd->add_option("--axis", sweep_opts.axis, "Sweep axis")
      ->check(CLI::IsMember({"gamma", "lambda", "omega"}))
      ->required();
  sweep_cmd->add_option("--start", sweep_opts.start, "Axis start")->required();
  sweep_cmd->add_option("--stop", sweep_opts.stop, "Axis stop")->required();
  sweep_cmd->add_option("--steps", sweep_opts.steps, "Grid size")->required();
  sweep_cmd->add_flag("--log", sweep_opts.log_spacing, "Log-spaced grid");
  sweep_cmd->add_option("--gamma", sweep_opts.gamma, "Fixed dimension ratio");
  sweep_cmd->add_option("--lambda", sweep_opts.lambda,
                        "Fixed ridge penalty, or 'track-gamma'");
  sweep_cmd->add_option("--alpha", sweep_opts.alpha, "Signal scale");
  sweep_cmd->add_option("--sigma", sweep_opts.sigma, "Noise standard deviation");
  sweep_cmd->add_option("--mu-a", sweep_opts.mu_a, "Temporal spectrum spec");
  sweep_cmd->add_option("--mu-b", sweep_opts.mu_b, "Spatial spectrum spec");
  sweep_cmd->add_option("--ref-n", sweep_opts.ref_n,
                        "Reference size for omega-axis spectra");
  sweep_cmd->add_option("-o,--output", sweep_opts.output, "CSV output path")->required();
  std::string sweep_config;
  sweep_cmd->add_option("--config", sweep_config, "Flat key=value config file");
  sweep_cmd->callback([&] { run_sweep(sweep_opts); });

  SimulateOptions sim_opts;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo sweep on finite-size data");
  sim_cmd->add_option("--axis", sim_opts.axis, "Sweep axis")
      ->check(CLI::IsMember({"gamma", "lambda", "omega"}))
      ->required();
  sim_cmd->add_option("--start", sim_opts.start, "Axis start")->required();
  sim_cmd->add_option("--stop", sim_opts.stop, "Axis stop")->required();
  sim_cmd->add_option("--steps", sim_opts.steps, "Grid size")->required();
  sim_cmd->add_flag("--log", sim_opts.log_spacing, "Log-spaced grid");
  sim_cmd->add_option("--n", sim_opts.n, "Sample size")->required();
  sim_cmd->add_option("--trials", sim_opts.trials, "Trials per grid point")->required();
  sim_cmd->add_option("--seed", sim_opts.seed, "Base seed (required)")->required();
  sim_cmd->add_option("--gamma", sim_opts.gamma, "Fixed dimension ratio");
  sim_cmd->add_option("--lambda", sim_opts.lambda,
                      "Fixed ridge penalty, or 'track-gamma'");
  sim_cmd->add_option("--alpha", sim_opts.alpha, "Signal scale");
  sim_cmd->add_option("--sigma", sim_opts.sigma, "Noise standard deviation");
  sim_cmd->add_option("--a-model", sim_opts.a_model, "Temporal mixer spec");
  sim_cmd->add_option("--b-model", sim_opts.b_model, "Spatial mixer spec");
  sim_cmd->add_option("--z-dist", sim_opts.z_dist, "Entry law of Z")
      ->check(CLI::IsMember({"gaussian", "rademacher", "uniform"}));
  sim_cmd->add_option("-o,--output", sim_opts.output, "CSV output path")->required();
  std::string sim_config;
  sim_cmd->add_option("--config", sim_config, "Flat key=value config file");
  sim_cmd->callback([&] { run_simulate(sim_opts); });

  UniversalityOptions uni_opts;
  auto* uni_cmd = app.add_subcommand(
      "universality", "Compare entry laws with common random numbers");
  uni_cmd->add_option("--n", uni_opts.n, "Sample size")->required();
  uni_cmd->add_option("--trials", uni_opts.trials, "Trials per arm")->required();
  uni_cmd->add_option("--seed", uni_opts.seed, "Base seed (required)")->required();
  uni_cmd->add_option("--gamma", uni_opts.gamma, "Dimension ratio")->required();
  uni_cmd->add_option("--lambda", uni_opts.lambda, "Ridge penalty")->required();
  uni_cmd->add_option("--alpha", uni_opts.alpha, "Signal scale");
  uni_cmd->add_option("--sigma", uni_opts.sigma, "Noise standard deviation");
  uni_cmd->add_option("--a-model", uni_opts.a_model, "Temporal mixer spec");
  uni_cmd->add_option("--b-model", uni_opts.b_model, "Spatial mixer spec");
  uni_cmd->add_option("-o,--output", uni_opts.output, "CSV output path")->required();
  std::string uni_config;
  uni_cmd->add_option("--config", uni_config, "Flat key=value config file");
  uni_cmd->callback([&] { run_universality(uni_opts); });

  OptimalLambdaOptions opt_opts;
  auto* opt_cmd = app.add_subcommand("optimal-lambda",
                                     "Print the optimal ridge penalty sigma^2*gamma/alpha^2");
  opt_cmd->add_option("--gamma", opt_opts.gamma, "Dimension ratio")->required();
  opt_cmd->add_option("--alpha", opt_opts.alpha, "Signal scale")->required();
  opt_cmd->add_option("--sigma", opt_opts.sigma, "Noise standard deviation")->required();
  std::string opt_config;
  opt_cmd->add_option("--config", opt_config, "Flat key=value config file");
  opt_cmd->callback([&] { run_optimal_lambda(opt_opts); });

  SpectrumOptions spec_opts;
  auto* spec_cmd = app.add_subcommand(
      "spectrum", "Eigenvalues of a mixer gram matrix, raw or vs the banded limit");
  spec_cmd->add_option("--a-model", spec_opts.a_model, "Temporal mixer spec")->required();
  spec_cmd->add_option("--n", spec_opts.n, "Matrix size")->required();
  spec_cmd->add_flag("--raw", spec_opts.raw, "Emit raw eigenvalues");
  spec_cmd->add_option("-o,--output", spec_opts.output, "CSV output path")->required();
  std::string spec_config;
  spec_cmd->add_option("--config", spec_config, "Flat key=value config file");
  spec_cmd->callback([&] { run_spectrum(spec_opts); });

  try {
    auto args = with_config_args(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ridgelim::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const ridgelim::NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
