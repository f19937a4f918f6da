#include "laplace/simstudy.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "laplace/error.hpp"
#include "laplace/io.hpp"
#include "laplace/matsl.hpp"
#include "laplace/mvsl.hpp"
#include "laplace/random.hpp"

namespace laplace {

namespace {

using nlohmann::json;

constexpr const char* kCsvHeader =
    "case,kind,N,s,estimator,empirical_bias,relative_bias,mean_euclidean_distance,"
    "relative_mean_euclidean_distance,mean_iterations,failure_count";

SpdMatrix spd(std::initializer_list<std::initializer_list<double>> rows) {
  return cholesky(DenseMatrix::from_rows(rows));
}

SpdMatrix spd_diag(std::initializer_list<double> d) { return cholesky(DenseMatrix::diagonal(d)); }

std::vector<CaseSpec> make_builtin_cases() {
  std::vector<CaseSpec> cases;
  cases.push_back(CaseSpec::multivariate("mvsl-case1", spd_diag({5, 4, 3.5, 3, 2, 1})));
  cases.push_back(CaseSpec::multivariate("mvsl-case2", spd({{3, 1.5, 1, 0, 0, 0},
                                                            {1.5, 2, 0.5, 0, 0, 0},
                                                            {1, 0.5, 1, 0, 0, 0},
                                                            {0, 0, 0, 4, 1, 2},
                                                            {0, 0, 0, 1, 5, 3},
                                                            {0, 0, 0, 2, 3, 6}})));
  cases.push_back(CaseSpec::multivariate("mvsl-case3", spd({{20, 3, 2, 1, 4, 5},
                                                            {3, 25, 6, 2, 3, 1},
                                                            {2, 6, 30, 7, 5, 4},
                                                            {1, 2, 7, 35, 6, 3},
                                                            {4, 3, 5, 6, 40, 8},
                                                            {5, 1, 4, 3, 8, 45}})));
  cases.push_back(CaseSpec::multivariate("mvsl-case4",
                                         spd_diag({6, 5.5, 5, 4, 3.5, 3, 2.5, 2, 1.5, 1})));
  cases.push_back(CaseSpec::multivariate("mvsl-case5", spd({{5, 3, 2.5, 2, 1.5, 0, 0, 0, 0, 0},
                                                            {3, 4, 2, 1.5, 1, 0, 0, 0, 0, 0},
                                                            {2.5, 2, 3, 1, 0.5, 0, 0, 0, 0, 0},
                                                            {2, 1.5, 1, 2, 0.2, 0, 0, 0, 0, 0},
                                                            {1.5, 1, 0.5, 0.2, 1, 0, 0, 0, 0, 0},
                                                            {0, 0, 0, 0, 0, 6, 2, 1, 0.5, 1.5},
                                                            {0, 0, 0, 0, 0, 2, 5, 1.2, 0.8, 1},
                                                            {0, 0, 0, 0, 0, 1, 1.2, 4, 1, 0.6},
                                                            {0, 0, 0, 0, 0, 0.5, 0.8, 1, 3.5, 0.9},
                                                            {0, 0, 0, 0, 0, 1.5, 1, 0.6, 0.9, 4}})));
  cases.push_back(CaseSpec::multivariate(
      "mvsl-case6", spd({{10, 2, 1, 0.5, 1, 1.5, 0.8, 1.2, 0.9, 0.7},
                         {2, 9, 1.5, 0.7, 1.1, 1.3, 0.6, 1, 0.8, 0.5},
                         {1, 1.5, 8, 1.2, 0.9, 0.7, 1, 1.1, 0.6, 0.4},
                         {0.5, 0.7, 1.2, 7, 1.3, 0.9, 1.1, 0.5, 0.4, 0.6},
                         {1, 1.1, 0.9, 1.3, 9, 1.2, 1.4, 0.8, 1, 0.7},
                         {1.5, 1.3, 0.7, 0.9, 1.2, 10, 0.9, 1.1, 0.6, 0.8},
                         {0.8, 0.6, 1, 1.1, 1.4, 0.9, 8, 1.3, 1.2, 0.5},
                         {1.2, 1, 1.1, 0.5, 0.8, 1.1, 1.3, 9, 1, 0.6},
                         {0.9, 0.8, 0.6, 0.4, 1, 0.6, 1.2, 1, 8, 0.7},
                         {0.7, 0.5, 0.4, 0.6, 0.7, 0.8, 0.5, 0.6, 0.7, 7}})));

  const SpdMatrix diag1 = spd_diag({1, 0.5, 2, 3, 0.65});
  const SpdMatrix full1 = spd({{5, 3, 2.5, 2, 1.5},
                               {3, 4, 2, 1.5, 1},
                               {2.5, 2, 3, 1, 0.5},
                               {2, 1.5, 1, 2, 0.2},
                               {1.5, 1, 0.5, 0.2, 1}});
  const SpdMatrix diag2 = spd_diag({3, 2, 1});
  cases.push_back(CaseSpec::matrix_variate("matsl-case1", diag1, diag2));
  cases.push_back(CaseSpec::matrix_variate("matsl-case2", diag1,
                                           spd({{3, 1.5, 1}, {1.5, 2, 0}, {1, 0, 1}})));
  cases.push_back(CaseSpec::matrix_variate("matsl-case3", full1, diag2));
  cases.push_back(CaseSpec::matrix_variate("matsl-case4", full1,
                                           spd({{4, 1, 2}, {1, 5, 3}, {2, 3, 6}})));
  return cases;
}

Error plan_error(const std::string& source, const std::string& what) {
  return Error(Errc::invalid_argument, source + ": " + what);
}

template <typename T>
T get_field(const json& j, const char* key, const std::string& source) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw plan_error(source, std::string("key '") + key + "' has the wrong type");
  }
}

SpdMatrix read_spd(const std::filesystem::path& base, const json& j, const char* key,
                   const std::string& source) {
  if (!j.contains(key)) throw plan_error(source, std::string("case needs '") + key + "'");
  const std::filesystem::path rel = get_field<std::string>(j, key, source);
  return cholesky(read_matrix((rel.is_absolute() ? rel : base / rel).string()));
}

// Per-replication output of one estimator.
struct Slot {
  std::optional<DenseMatrix> estimate;
  std::size_t iterations = 0;
};

void check_shapes(const std::vector<DenseMatrix>& estimates, const DenseMatrix& truth) {
  if (estimates.empty()) throw Error(Errc::empty_input, "no estimates");
  for (const DenseMatrix& e : estimates) {
    if (e.rows() != truth.rows() || e.cols() != truth.cols()) {
      throw Error(Errc::dimension_mismatch, "estimate shape differs from the parameter");
    }
  }
}

std::string next_field(std::string_view& line) {
  const auto comma = line.find(',');
  std::string out(line.substr(0, comma));
  line = comma == std::string_view::npos ? std::string_view{} : line.substr(comma + 1);
  return out;
}

}  // namespace

std::string_view to_string(CaseKind kind) noexcept {
  return kind == CaseKind::multivariate ? "multivariate" : "matrix-variate";
}

std::string_view to_string(Estimator estimator) noexcept {
  return estimator == Estimator::em ? "em" : "moment";
}

CaseKind parse_case_kind(std::string_view s) {
  if (s == "multivariate") return CaseKind::multivariate;
  if (s == "matrix-variate") return CaseKind::matrix_variate;
  throw Error(Errc::invalid_argument, "unknown case kind '" + std::string(s) + "'");
}

Estimator parse_estimator(std::string_view s) {
  if (s == "em") return Estimator::em;
  if (s == "moment") return Estimator::moment;
  throw Error(Errc::invalid_argument,
              "unknown estimator '" + std::string(s) + "' (expected em or moment)");
}

CaseSpec CaseSpec::multivariate(std::string name, SpdMatrix sigma, CaseSource source) {
  CaseSpec c;
  c.name = std::move(name);
  c.kind = CaseKind::multivariate;
  c.sigma = std::move(sigma);
  c.source = source;
  return c;
}

CaseSpec CaseSpec::matrix_variate(std::string name, SpdMatrix sigma1, SpdMatrix sigma2,
                                  CaseSource source) {
  CaseSpec c;
  c.name = std::move(name);
  c.kind = CaseKind::matrix_variate;
  c.sigma1 = std::move(sigma1);
  c.sigma2 = std::move(sigma2);
  c.source = source;
  return c;
}

DenseMatrix CaseSpec::truth() const {
  if (kind == CaseKind::multivariate) {
    if (!sigma) throw Error(Errc::invalid_argument, "case '" + name + "' has no sigma");
    return sigma->matrix();
  }
  if (!sigma1 || !sigma2) {
    throw Error(Errc::invalid_argument, "case '" + name + "' needs sigma1 and sigma2");
  }
  return kronecker(sigma2->matrix(), sigma1->matrix());
}

const std::vector<CaseSpec>& builtin_cases() {
  static const std::vector<CaseSpec> cases = make_builtin_cases();
  return cases;
}

std::vector<std::string> builtin_case_names() {
  std::vector<std::string> names;
  for (const CaseSpec& c : builtin_cases()) names.push_back(c.name);
  return names;
}

const CaseSpec& find_builtin_case(std::string_view name) {
  for (const CaseSpec& c : builtin_cases()) {
    if (c.name == name) return c;
  }
  std::string known;
  for (const std::string& n : builtin_case_names()) known += (known.empty() ? "" : ", ") + n;
  throw Error(Errc::invalid_argument,
              "unknown case '" + std::string(name) + "'; builtin cases: " + known);
}

std::vector<std::size_t> default_sample_sizes(CaseKind kind) {
  if (kind == CaseKind::multivariate) return {10, 20, 30, 50, 70, 100, 150, 200};
  return {5, 10, 15, 20, 30, 50, 100};
}

SimulationPlan default_plan(const CaseSpec& case_spec, std::uint64_t master_seed) {
  SimulationPlan plan;
  plan.case_spec = case_spec;
  plan.sample_sizes = default_sample_sizes(case_spec.kind);
  plan.master_seed = master_seed;
  plan.estimators = case_spec.kind == CaseKind::multivariate
                        ? std::vector<Estimator>{Estimator::em, Estimator::moment}
                        : std::vector<Estimator>{Estimator::em};
  return plan;
}

void validate_plan(const SimulationPlan& plan) {
  const CaseSpec& c = plan.case_spec;
  (void)c.truth();
  if (plan.runs < 1) throw Error(Errc::invalid_argument, "runs must be at least 1");
  if (plan.sample_sizes.empty()) throw Error(Errc::invalid_argument, "no sample sizes");
  if (plan.estimators.empty()) throw Error(Errc::invalid_argument, "no estimators");
  for (std::size_t i = 0; i < plan.estimators.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (plan.estimators[i] == plan.estimators[j]) {
        throw Error(Errc::invalid_argument, "estimator listed twice");
      }
    }
  }
  plan.em_config.validate();
  const bool moment = std::find(plan.estimators.begin(), plan.estimators.end(),
                                Estimator::moment) != plan.estimators.end();
  if (moment && c.kind == CaseKind::matrix_variate) {
    throw Error(Errc::invalid_argument,
                "the moment estimator applies to multivariate cases only");
  }
  for (std::size_t n : plan.sample_sizes) {
    if (n < 1) throw Error(Errc::invalid_argument, "sample sizes must be positive");
    if (plan.allow_infeasible) continue;
    const auto ni = static_cast<Eigen::Index>(n);
    if (c.kind == CaseKind::multivariate) {
      check_mvsl_existence(ni, c.sigma->dim());
      if (moment && n < 2) {
        throw Error(Errc::existence_violation, "sample covariance needs N >= 2");
      }
    } else {
      check_matsl_existence(ni, c.sigma1->dim(), c.sigma2->dim());
    }
  }
}

SimulationPlan parse_plan(std::istream& in, const std::string& source) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(Errc::parse, source + ": " + e.what());
  }
  if (!j.is_object()) throw plan_error(source, "plan must be a JSON object");
  static const std::vector<std::string> known = {
      "case", "sizes", "runs", "seed", "epsilon", "max_iterations", "step_tolerance",
      "q_floor", "estimators", "allow_infeasible"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw plan_error(source, "unknown key '" + key + "'");
    }
  }
  if (!j.contains("case")) throw plan_error(source, "plan needs 'case'");

  const std::filesystem::path base = std::filesystem::path(source).parent_path();
  const json& jc = j.at("case");
  CaseSpec case_spec;
  if (jc.is_string()) {
    case_spec = find_builtin_case(jc.get<std::string>());
  } else if (jc.is_object()) {
    const std::string name =
        jc.contains("name") ? get_field<std::string>(jc, "name", source) : std::string("user");
    if (jc.contains("sigma")) {
      case_spec = CaseSpec::multivariate(name, read_spd(base, jc, "sigma", source),
                                         CaseSource::user_file);
    } else {
      case_spec = CaseSpec::matrix_variate(name, read_spd(base, jc, "sigma1", source),
                                           read_spd(base, jc, "sigma2", source),
                                           CaseSource::user_file);
    }
  } else {
    throw plan_error(source, "'case' must be a builtin name or an object");
  }

  SimulationPlan plan = default_plan(case_spec, 0);
  if (j.contains("sizes")) {
    plan.sample_sizes.clear();
    for (const json& v : j.at("sizes")) {
      if (!v.is_number_integer() || v.get<long long>() < 1) {
        throw plan_error(source, "'sizes' must hold positive integers");
      }
      plan.sample_sizes.push_back(v.get<std::size_t>());
    }
  }
  if (j.contains("runs")) {
    if (!j.at("runs").is_number_integer() || j.at("runs").get<long long>() < 1) {
      throw plan_error(source, "'runs' must be a positive integer");
    }
    plan.runs = j.at("runs").get<std::size_t>();
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) {
      throw plan_error(source, "'seed' must be a nonnegative integer");
    }
    plan.master_seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("epsilon")) plan.em_config.epsilon = get_field<double>(j, "epsilon", source);
  if (j.contains("max_iterations")) {
    plan.em_config.max_iterations = get_field<std::size_t>(j, "max_iterations", source);
  }
  if (j.contains("step_tolerance")) {
    plan.em_config.step_tolerance = get_field<double>(j, "step_tolerance", source);
  }
  if (j.contains("q_floor")) plan.em_config.q_floor = get_field<double>(j, "q_floor", source);
  if (j.contains("estimators")) {
    plan.estimators.clear();
    for (const json& v : j.at("estimators")) {
      if (!v.is_string()) throw plan_error(source, "'estimators' must hold strings");
      plan.estimators.push_back(parse_estimator(v.get<std::string>()));
    }
  }
  if (j.contains("allow_infeasible")) {
    plan.allow_infeasible = get_field<bool>(j, "allow_infeasible", source);
  }
  validate_plan(plan);
  return plan;
}

SimulationPlan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open '" + path + "' for reading");
  return parse_plan(in, path);
}

double empirical_bias(const std::vector<DenseMatrix>& estimates, const DenseMatrix& truth) {
  check_shapes(estimates, truth);
  RowMatrix mean = RowMatrix::Zero(truth.rows(), truth.cols());
  for (const DenseMatrix& e : estimates) mean += e.eigen();
  mean /= static_cast<double>(estimates.size());
  return (mean - truth.eigen()).norm();
}

double mean_euclidean_distance(const std::vector<DenseMatrix>& estimates,
                               const DenseMatrix& truth) {
  check_shapes(estimates, truth);
  double sum = 0.0;
  for (const DenseMatrix& e : estimates) sum += (e.eigen() - truth.eigen()).norm();
  return sum / static_cast<double>(estimates.size());
}

std::vector<SimulationResult> run_plan(const SimulationPlan& plan, std::size_t threads,
                                       const ProgressFn& progress) {
  validate_plan(plan);
  const CaseSpec& c = plan.case_spec;
  const DenseMatrix truth = c.truth();
  const std::uint64_t case_key = hash_name(c.name);
  const std::size_t n_sizes = plan.sample_sizes.size();
  const std::size_t n_est = plan.estimators.size();
  const std::size_t total = n_sizes * plan.runs;

  // slots[(size * runs + r) * n_est + e]
  std::vector<Slot> slots(total * n_est);

  auto replicate = [&](std::size_t job) {
    const std::size_t size_index = job / plan.runs;
    const std::size_t r = job % plan.runs;
    const std::size_t n = plan.sample_sizes[size_index];
    const std::uint64_t seed = derive_seed(plan.master_seed, case_key, n, r);
    Slot* out = &slots[job * n_est];
    if (c.kind == CaseKind::multivariate) {
      const MvslSample data = mvsl_sample(*c.sigma, n, seed);
      for (std::size_t e = 0; e < n_est; ++e) {
        try {
          if (plan.estimators[e] == Estimator::em) {
            MvslFit fit = mvsl_em_fit(data, plan.em_config);
            out[e].estimate = fit.sigma.matrix();
            out[e].iterations = fit.report.iterations;
          } else {
            out[e].estimate = mvsl_sample_covariance(data);
          }
        } catch (const Error&) {
        } catch (const Underflow&) {
        }
      }
    } else {
      const MatslSample data = matsl_sample(*c.sigma1, *c.sigma2, n, seed);
      try {
        MatslFit fit = matsl_em_fit(data, plan.em_config);
        out[0].estimate = fit.estimate.kron;
        out[0].iterations = fit.report.iterations;
      } catch (const Error&) {
      } catch (const Underflow&) {
      }
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(total, 1));
  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t job = next.fetch_add(1);
      if (job >= total) return;
      try {
        replicate(job);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
        next.store(total);
        return;
      }
      if (progress) {
        std::lock_guard lock(mutex);
        progress(++done, total);
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  const double norm = frobenius_norm(truth);
  std::vector<SimulationResult> results;
  for (std::size_t s = 0; s < n_sizes; ++s) {
    for (std::size_t e = 0; e < n_est; ++e) {
      SimulationResult res;
      res.case_name = c.name;
      res.kind = c.kind;
      res.n = plan.sample_sizes[s];
      res.runs = plan.runs;
      res.estimator = plan.estimators[e];
      std::vector<DenseMatrix> estimates;
      double iterations = 0.0;
      for (std::size_t r = 0; r < plan.runs; ++r) {
        const Slot& slot = slots[(s * plan.runs + r) * n_est + e];
        if (!slot.estimate) {
          ++res.failure_count;
          continue;
        }
        estimates.push_back(*slot.estimate);
        iterations += static_cast<double>(slot.iterations);
      }
      if (estimates.empty()) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        res.empirical_bias = res.relative_bias = res.mean_euclidean_distance =
            res.relative_mean_euclidean_distance = res.mean_iterations = nan;
      } else {
        res.empirical_bias = empirical_bias(estimates, truth);
        res.mean_euclidean_distance = mean_euclidean_distance(estimates, truth);
        res.relative_bias = res.empirical_bias / norm;
        res.relative_mean_euclidean_distance = res.mean_euclidean_distance / norm;
        res.mean_iterations = iterations / static_cast<double>(estimates.size());
      }
      results.push_back(std::move(res));
    }
  }
  return results;
}

std::string format_csv(const std::vector<SimulationResult>& results) {
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const SimulationResult& r : results) {
    out << r.case_name << ',' << to_string(r.kind) << ',' << r.n << ',' << r.runs << ','
        << to_string(r.estimator) << ',' << format_double(r.empirical_bias) << ','
        << format_double(r.relative_bias) << ',' << format_double(r.mean_euclidean_distance)
        << ',' << format_double(r.relative_mean_euclidean_distance) << ','
        << format_double(r.mean_iterations) << ',' << r.failure_count << '\n';
  }
  return out.str();
}

void emit_csv(const std::vector<SimulationResult>& results, const std::string& path) {
  if (results.empty()) throw Error(Errc::empty_input, "no simulation results to write");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot open '" + path + "' for writing");
  out << format_csv(results);
  out.flush();
  if (!out) throw Error(Errc::io, "write to '" + path + "' failed");
}

std::vector<SimulationResult> parse_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw Error(Errc::parse, source + ":1: missing or unexpected CSV header");
  }
  std::vector<SimulationResult> results;
  std::size_t ln = 1;
  auto to_double = [&](const std::string& s) {
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) {
      throw Error(Errc::parse, source + ":" + std::to_string(ln) + ": bad number '" + s + "'");
    }
    return v;
  };
  auto to_size = [&](const std::string& s) {
    std::size_t v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) {
      throw Error(Errc::parse, source + ":" + std::to_string(ln) + ": bad count '" + s + "'");
    }
    return v;
  };
  while (std::getline(in, line)) {
    ++ln;
    if (line.empty()) continue;
    std::string_view rest = line;
    SimulationResult r;
    r.case_name = next_field(rest);
    r.kind = parse_case_kind(next_field(rest));
    r.n = to_size(next_field(rest));
    r.runs = to_size(next_field(rest));
    r.estimator = parse_estimator(next_field(rest));
    r.empirical_bias = to_double(next_field(rest));
    r.relative_bias = to_double(next_field(rest));
    r.mean_euclidean_distance = to_double(next_field(rest));
    r.relative_mean_euclidean_distance = to_double(next_field(rest));
    r.mean_iterations = to_double(next_field(rest));
    r.failure_count = to_size(next_field(rest));
    if (!rest.empty()) {
      throw Error(Errc::parse, source + ":" + std::to_string(ln) + ": too many fields");
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace laplace
