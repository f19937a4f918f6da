#include "laplace/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "laplace/bessel.hpp"
#include "laplace/error.hpp"
#include "laplace/io.hpp"
#include "laplace/matsl.hpp"
#include "laplace/mvsl.hpp"
#include "laplace/simstudy.hpp"

namespace laplace {

namespace {

using nlohmann::json;

constexpr const char* kSeedEnv = "LAPLACE_MLE_SEED";

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::io:
      return kExitIo;
    case Errc::non_finite:
    case Errc::singular_initial:
      return kExitNumerical;
    default:
      return kExitValidation;
  }
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

json matrix_json(const DenseMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json report_json(const EmReport& r) {
  return json{{"iterations", r.iterations},
              {"converged", r.converged},
              {"final_log_likelihood", r.final_log_likelihood},
              {"log_likelihood_trace", r.trace}};
}

// Writes to path, or to out when path is empty or "-".
template <typename Writer>
void emit(const std::string& path, std::ostream& out, Writer&& writer) {
  if (path.empty() || path == "-") {
    writer(out);
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(Errc::io, "cannot open '" + path + "' for writing");
  writer(file);
  file.flush();
  if (!file) throw Error(Errc::io, "write to '" + path + "' failed");
}

SpdMatrix read_spd(const std::string& path) {
  try {
    return cholesky(read_matrix(path));
  } catch (const Error& e) {
    if (e.code() == Errc::io || e.code() == Errc::parse) throw;
    throw Error(e.code(), std::string(e.what()).substr(errc_name(e.code()).size() + 2) + " in '" +
                              path + "'");
  }
}

BesselOrder parse_order(double nu) {
  const double twice = 2.0 * nu;
  if (!std::isfinite(twice) || twice != std::round(twice) || std::abs(twice) > 1e6) {
    throw Error(Errc::invalid_argument,
                "order must be an integer or half-integer, got " + format_double(nu));
  }
  return BesselOrder::from_twice(static_cast<int>(twice));
}

struct Options {
  std::string dist = "mvsl";
  std::string sigma, sigma1, sigma2;
  std::string data, out;
  std::string initial, initial1, initial2;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double epsilon = 1e-11;
  std::size_t max_iters = 5000;
  double step_tol = 0.0;
  double q_floor = kDefaultQFloor;
  bool char_fn = false;
  std::string case_name, plan;
  std::size_t threads = 1;
  std::size_t runs = 200;
  std::vector<std::size_t> sizes;
  bool progress = false;
  double nu = 0.0;
  std::vector<double> xs;
};

EmConfig em_config(const Options& o) {
  EmConfig c;
  c.epsilon = o.epsilon;
  c.max_iterations = o.max_iters;
  c.step_tolerance = o.step_tol;
  c.q_floor = o.q_floor;
  c.validate();
  return c;
}

void add_em_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--epsilon", o.epsilon, "Stop when the log-likelihood gain falls below this")
      ->capture_default_str();
  cmd->add_option("--max-iters", o.max_iters, "Iteration cap")->capture_default_str();
  cmd->add_option("--step-tol", o.step_tol,
                  "Also require the relative scale change to fall below this (0 = off)")
      ->capture_default_str();
  cmd->add_option("--q-floor", o.q_floor, "Floor for quadratic forms")->capture_default_str();
}

void require_dist_params(const Options& o) {
  if (o.dist == "mvsl") {
    if (o.sigma.empty()) throw Error(Errc::invalid_argument, "--dist mvsl needs --sigma");
  } else if (o.sigma1.empty() || o.sigma2.empty()) {
    throw Error(Errc::invalid_argument, "--dist matsl needs --sigma1 and --sigma2");
  }
}

int cmd_sample(const Options& o, std::ostream& out) {
  require_dist_params(o);
  if (o.n < 1) throw Error(Errc::invalid_argument, "--n must be at least 1");
  if (o.dist == "mvsl") {
    const MvslSample data = mvsl_sample(read_spd(o.sigma), o.n, o.seed);
    emit(o.out, out, [&](std::ostream& s) { write_matrix(s, data.observations()); });
    if (!o.out.empty() && o.out != "-") {
      out << "n=" << data.n() << " p=" << data.p() << " q=1 seed=" << o.seed << '\n';
    }
  } else {
    const MatslSample data = matsl_sample(read_spd(o.sigma1), read_spd(o.sigma2), o.n, o.seed);
    emit(o.out, out, [&](std::ostream& s) { write_matsl_dataset(s, data); });
    if (!o.out.empty() && o.out != "-") {
      out << "n=" << data.n() << " p=" << data.p() << " q=" << data.q() << " seed=" << o.seed
          << '\n';
    }
  }
  return kExitOk;
}

int cmd_density(const Options& o, std::ostream& out) {
  require_dist_params(o);
  if (o.data.empty()) throw Error(Errc::invalid_argument, "density needs --data");
  std::vector<double> values;
  if (o.dist == "mvsl") {
    const MvslModel model(read_spd(o.sigma));
    const MvslSample data = read_mvsl_dataset(o.data);
    if (data.p() != model.p()) {
      throw Error(Errc::dimension_mismatch, "data dimension " + std::to_string(data.p()) +
                                                " does not match sigma dimension " +
                                                std::to_string(model.p()));
    }
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      const Vector y = data.observation(i);
      values.push_back(o.char_fn ? matsl_char_fn(MatslModel(model.sigma(), cholesky(
                                                                 DenseMatrix::identity(1))),
                                                 DenseMatrix::column(y))
                                 : mvsl_log_pdf(model, y, o.q_floor));
    }
  } else {
    const MatslModel model(read_spd(o.sigma1), read_spd(o.sigma2));
    const MatslSample data = read_matsl_dataset(o.data);
    for (const DenseMatrix& x : data.observations()) {
      values.push_back(o.char_fn ? matsl_char_fn(model, x) : matsl_log_pdf(model, x, o.q_floor));
    }
  }
  emit(o.out, out, [&](std::ostream& s) {
    for (double v : values) s << format_double(v) << '\n';
  });
  return kExitOk;
}

int cmd_fit_mvsl(const Options& o, std::ostream& out) {
  if (o.data.empty()) throw Error(Errc::invalid_argument, "fit-mvsl needs --data");
  const EmConfig config = em_config(o);
  const MvslSample data = read_mvsl_dataset(o.data);
  std::optional<SpdMatrix> initial;
  if (!o.initial.empty()) initial = read_spd(o.initial);
  const MvslFit fit = mvsl_em_fit(data, config, initial);
  json report{{"distribution", "mvsl"}, {"n", data.n()}, {"p", data.p()},
              {"epsilon", config.epsilon}, {"sigma", matrix_json(fit.sigma.matrix())}};
  report.update(report_json(fit.report));
  emit(o.out, out, [&](std::ostream& s) { s << report.dump(2) << '\n'; });
  if (!o.out.empty() && o.out != "-") {
    out << (fit.report.converged ? "converged" : "not converged") << " after "
        << fit.report.iterations << " iterations, log-likelihood "
        << format_double(fit.report.final_log_likelihood) << '\n';
  }
  return kExitOk;
}

int cmd_fit_matsl(const Options& o, std::ostream& out) {
  if (o.data.empty()) throw Error(Errc::invalid_argument, "fit-matsl needs --data");
  const EmConfig config = em_config(o);
  const MatslSample data = read_matsl_dataset(o.data);
  if (o.initial1.empty() != o.initial2.empty()) {
    throw Error(Errc::invalid_argument, "give both --initial1 and --initial2, or neither");
  }
  std::optional<SpdMatrix> initial1, initial2;
  if (!o.initial1.empty()) {
    initial1 = read_spd(o.initial1);
    initial2 = read_spd(o.initial2);
  }
  const MatslFit fit = matsl_em_fit(data, config, initial1, initial2);
  json report{{"distribution", "matsl"},
              {"n", data.n()},
              {"p", data.p()},
              {"q", data.q()},
              {"epsilon", config.epsilon},
              {"sigma1", matrix_json(fit.estimate.sigma1_hat.matrix())},
              {"sigma2", matrix_json(fit.estimate.sigma2_hat.matrix())},
              {"kronecker", matrix_json(fit.estimate.kron)},
              {"normalization", fit.estimate.normalization}};
  report.update(report_json(fit.report));
  emit(o.out, out, [&](std::ostream& s) { s << report.dump(2) << '\n'; });
  if (!o.out.empty() && o.out != "-") {
    out << (fit.report.converged ? "converged" : "not converged") << " after "
        << fit.report.iterations << " iterations, log-likelihood "
        << format_double(fit.report.final_log_likelihood) << '\n';
  }
  return kExitOk;
}

int cmd_simulate(const Options& o, const CLI::App& cmd, std::ostream& out, std::ostream& err) {
  if (o.plan.empty() == o.case_name.empty()) {
    throw Error(Errc::invalid_argument, "simulate needs exactly one of --plan or --case");
  }
  SimulationPlan plan;
  if (!o.plan.empty()) {
    plan = load_plan(o.plan);
  } else {
    plan = default_plan(find_builtin_case(o.case_name), o.seed);
    plan.em_config = em_config(o);
  }
  // Explicit flags (and the seed variable) override the plan file.
  if (cmd.count("--seed")) plan.master_seed = o.seed;
  if (cmd.count("--runs")) plan.runs = o.runs;
  if (cmd.count("--sizes")) plan.sample_sizes = o.sizes;
  if (!o.plan.empty()) {
    if (cmd.count("--epsilon")) plan.em_config.epsilon = o.epsilon;
    if (cmd.count("--max-iters")) plan.em_config.max_iterations = o.max_iters;
    if (cmd.count("--step-tol")) plan.em_config.step_tolerance = o.step_tol;
    if (cmd.count("--q-floor")) plan.em_config.q_floor = o.q_floor;
  }
  validate_plan(plan);
  ProgressFn progress;
  if (o.progress) {
    progress = [&err](std::size_t done, std::size_t total) {
      if (done % 100 == 0 || done == total) err << "replication " << done << "/" << total << '\n';
    };
  }
  const std::vector<SimulationResult> results = run_plan(plan, o.threads, progress);
  if (o.out.empty() || o.out == "-") {
    out << format_csv(results);
  } else {
    emit_csv(results, o.out);
  }
  return kExitOk;
}

int cmd_bessel(const Options& o, std::ostream& out) {
  const BesselOrder nu = parse_order(o.nu);
  out << "x,K,log_K,ratio_K_nu_minus_1_over_K_nu\n";
  for (double x : o.xs) {
    const BesselLogRatio lr = bessel_k_log_and_ratio(nu, x);
    out << format_double(x) << ',' << format_double(std::exp(lr.log_k)) << ','
        << format_double(lr.log_k) << ',' << format_double(lr.ratio) << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Symmetric Laplace distributions: sampling, densities, EM fitting and "
               "simulation studies",
               "laplace-mle"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "laplace-mle 0.1.0");
  Options o;

  auto add_dist = [&](CLI::App* cmd) {
    cmd->add_option("--dist", o.dist, "mvsl (vector data) or matsl (matrix data)")
        ->check(CLI::IsMember({"mvsl", "matsl"}))
        ->capture_default_str();
    cmd->add_option("--sigma", o.sigma, "Scale matrix file (mvsl)");
    cmd->add_option("--sigma1", o.sigma1, "Row scale matrix file (matsl)");
    cmd->add_option("--sigma2", o.sigma2, "Column scale matrix file (matsl)");
  };
  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", o.seed, "Master seed")->envname(kSeedEnv)->capture_default_str();
  };

  CLI::App* sample = app.add_subcommand("sample", "Draw an exact sample");
  add_dist(sample);
  sample->add_option("--n", o.n, "Number of observations")->required();
  add_seed(sample);
  sample->add_option("--out", o.out, "Output dataset file (default: stdout)");

  CLI::App* density = app.add_subcommand("density", "Log density of each observation");
  add_dist(density);
  density->add_option("--data", o.data, "Dataset file")->required();
  density->add_flag("--char-fn", o.char_fn,
                    "Evaluate the characteristic function at each observation instead");
  density->add_option("--q-floor", o.q_floor, "Quadratic forms below this are poles")
      ->capture_default_str();
  density->add_option("--out", o.out, "Output file, one value per line (default: stdout)");

  CLI::App* fit_mvsl = app.add_subcommand("fit-mvsl", "EM fit of a multivariate scale");
  fit_mvsl->add_option("--data", o.data, "N x p dataset file")->required();
  add_em_flags(fit_mvsl, o);
  fit_mvsl->add_option("--initial", o.initial, "Initial scale (default: (1/N) sum Y Y')");
  fit_mvsl->add_option("--out", o.out, "JSON report file (default: stdout)");

  CLI::App* fit_matsl = app.add_subcommand("fit-matsl", "Flip-flop EM fit of a Kronecker scale");
  fit_matsl->add_option("--data", o.data, "Matrix dataset file")->required();
  add_em_flags(fit_matsl, o);
  fit_matsl->add_option("--initial1", o.initial1, "Initial row scale");
  fit_matsl->add_option("--initial2", o.initial2, "Initial column scale");
  fit_matsl->add_option("--out", o.out, "JSON report file (default: stdout)");

  CLI::App* simulate = app.add_subcommand("simulate", "Run a simulation study");
  simulate->add_option("--case", o.case_name, "Builtin case name");
  simulate->add_option("--plan", o.plan, "JSON plan file");
  add_seed(simulate);
  simulate->add_option("--runs", o.runs, "Replications per sample size (s)")
      ->capture_default_str();
  simulate->add_option("--sizes", o.sizes, "Sample sizes (default: the case's grid)")
      ->delimiter(',');
  add_em_flags(simulate, o);
  simulate->add_option("--threads", o.threads, "Worker threads (0 = all cores)")
      ->capture_default_str();
  simulate->add_flag("--progress", o.progress, "Report finished replications on stderr");
  simulate->add_option("--out", o.out, "CSV file (default: stdout)");

  CLI::App* bessel = app.add_subcommand("bessel-eval", "Evaluate K_nu(x)");
  bessel->add_option("--nu", o.nu, "Integer or half-integer order")->required();
  bessel->add_option("--x", o.xs, "Arguments")->required()->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << one_line(e.what()) << '\n';
    return kExitValidation;
  }

  try {
    if (sample->parsed()) return cmd_sample(o, out);
    if (density->parsed()) return cmd_density(o, out);
    if (fit_mvsl->parsed()) return cmd_fit_mvsl(o, out);
    if (fit_matsl->parsed()) return cmd_fit_matsl(o, out);
    if (simulate->parsed()) return cmd_simulate(o, *simulate, out, err);
    if (bessel->parsed()) return cmd_bessel(o, out);
  } catch (const Error& e) {
    err << "error: " << one_line(e.what()) << '\n';
    return exit_code_for(e.code());
  } catch (const Underflow& e) {
    err << "error: Underflow: " << one_line(e.what()) << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << one_line(e.what()) << '\n';
    return kExitNumerical;
  }
  return kExitValidation;
}

}  // namespace laplace
