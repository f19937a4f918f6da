#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "laplace/em.hpp"
#include "laplace/matrix.hpp"

namespace laplace {

enum class CaseKind { multivariate, matrix_variate };
enum class CaseSource { builtin, user_file };
enum class Estimator { em, moment };

std::string_view to_string(CaseKind kind) noexcept;
std::string_view to_string(Estimator estimator) noexcept;
CaseKind parse_case_kind(std::string_view s);
Estimator parse_estimator(std::string_view s);

/// A true parameter to simulate from. Multivariate cases set sigma,
/// matrix-variate cases set sigma1 and sigma2.
struct CaseSpec {
  std::string name;
  CaseKind kind = CaseKind::multivariate;
  std::optional<SpdMatrix> sigma;
  std::optional<SpdMatrix> sigma1;
  std::optional<SpdMatrix> sigma2;
  CaseSource source = CaseSource::builtin;

  static CaseSpec multivariate(std::string name, SpdMatrix sigma,
                               CaseSource source = CaseSource::builtin);
  static CaseSpec matrix_variate(std::string name, SpdMatrix sigma1, SpdMatrix sigma2,
                                 CaseSource source = CaseSource::builtin);

  /// Sigma, or Sigma2 (x) Sigma1.
  DenseMatrix truth() const;
};

/// mvsl-case1 .. mvsl-case6 (p = 6 and p = 10) and matsl-case1 .. matsl-case4
/// (p = 5, q = 3).
const std::vector<CaseSpec>& builtin_cases();
std::vector<std::string> builtin_case_names();
/// Throws InvalidArgument listing the known names.
const CaseSpec& find_builtin_case(std::string_view name);

/// 10, 20, 30, 50, 70, 100, 150, 200 for multivariate cases and
/// 5, 10, 15, 20, 30, 50, 100 for matrix-variate ones.
std::vector<std::size_t> default_sample_sizes(CaseKind kind);

struct SimulationPlan {
  CaseSpec case_spec;
  std::vector<std::size_t> sample_sizes;
  std::size_t runs = 200;
  std::uint64_t master_seed = 0;
  EmConfig em_config;
  std::vector<Estimator> estimators;
  /// Admit sample sizes below the existence bound; their fits land in
  /// failure_count.
  bool allow_infeasible = false;
};

/// Plan with the default grid, s = 200 and the estimators that apply to the
/// case kind (EM and sample covariance for multivariate, EM otherwise).
SimulationPlan default_plan(const CaseSpec& case_spec, std::uint64_t master_seed);

/// Throws InvalidArgument, or ExistenceViolation for an infeasible size.
void validate_plan(const SimulationPlan& plan);

/// JSON plan: {"case": "<builtin>" | {"name", "sigma" | "sigma1"+"sigma2"},
/// "sizes", "runs", "seed", "epsilon", "max_iterations", "step_tolerance",
/// "estimators", "allow_infeasible"}. Matrix paths resolve relative to the
/// plan file. Omitted keys take the default_plan values.
SimulationPlan parse_plan(std::istream& in, const std::string& source);
SimulationPlan load_plan(const std::string& path);

struct SimulationResult {
  std::string case_name;
  CaseKind kind = CaseKind::multivariate;
  std::size_t n = 0;
  std::size_t runs = 0;
  Estimator estimator = Estimator::em;
  double empirical_bias = 0.0;
  double relative_bias = 0.0;
  double mean_euclidean_distance = 0.0;
  double relative_mean_euclidean_distance = 0.0;
  /// Zero for the sample covariance.
  double mean_iterations = 0.0;
  /// Replications whose fit raised; excluded from the metrics. When every
  /// replication fails the metrics are NaN.
  std::size_t failure_count = 0;

  friend bool operator==(const SimulationResult&, const SimulationResult&) = default;
};

/// Called after each finished replication with (done, total). May be called
/// from worker threads, but never concurrently.
using ProgressFn = std::function<void(std::size_t, std::size_t)>;

/// One result per (N, estimator), in plan order. Replication r of size N
/// draws its sample from the stream derived from (master_seed, case name,
/// N, r), and all estimators see the same sample. threads = 0 picks the
/// hardware concurrency. The output does not depend on threads.
std::vector<SimulationResult> run_plan(const SimulationPlan& plan, std::size_t threads = 1,
                                       const ProgressFn& progress = {});

/// |mean(estimates) - truth|_F. Throws EmptyInput or DimensionMismatch.
double empirical_bias(const std::vector<DenseMatrix>& estimates, const DenseMatrix& truth);
/// mean |estimate - truth|_F. Throws EmptyInput or DimensionMismatch.
double mean_euclidean_distance(const std::vector<DenseMatrix>& estimates,
                               const DenseMatrix& truth);

/// Header plus one row per result; doubles in shortest round-trip form.
std::string format_csv(const std::vector<SimulationResult>& results);
/// Throws EmptyInput for no results, Io on write failure.
void emit_csv(const std::vector<SimulationResult>& results, const std::string& path);
std::vector<SimulationResult> parse_csv(std::istream& in, const std::string& source);

}  // namespace laplace
