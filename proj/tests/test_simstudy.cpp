#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "laplace/error.hpp"
#include "laplace/io.hpp"
#include "laplace/simstudy.hpp"

using namespace laplace;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "laplace_sim_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return Errc::invalid_argument;
}

}  // namespace

TEST_CASE("builtin cases") {
  const auto names = builtin_case_names();
  CHECK(names.size() == 10);
  const std::array<double, 4> norms{14.3323, 17.3432, 40.1388, 109.9245};
  for (int i = 0; i < 4; ++i) {
    const CaseSpec& c = find_builtin_case("matsl-case" + std::to_string(i + 1));
    CHECK(c.kind == CaseKind::matrix_variate);
    CHECK(c.sigma1->dim() == 5);
    CHECK(c.sigma2->dim() == 3);
    CHECK(std::abs(frobenius_norm(c.truth()) - norms[i]) <= 5e-5);
  }
  for (int i = 1; i <= 6; ++i) {
    const CaseSpec& c = find_builtin_case("mvsl-case" + std::to_string(i));
    CHECK(c.sigma->dim() == (i <= 3 ? 6 : 10));
  }
  CHECK(find_builtin_case("mvsl-case3").sigma->matrix()(4, 5) == 8.0);
  CHECK(find_builtin_case("mvsl-case6").sigma->matrix()(9, 9) == 7.0);
  CHECK(find_builtin_case("matsl-case4").sigma2->matrix()(1, 2) == 3.0);
  try {
    find_builtin_case("nope");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("matsl-case4") != std::string::npos);
  }
}

TEST_CASE("metrics") {
  const DenseMatrix t = DenseMatrix::from_rows({{1, 2}, {3, 4}});
  const DenseMatrix e = DenseMatrix::from_rows({{0.5, -1}, {0, 2}});
  CHECK(empirical_bias({t, t}, t) == 0.0);
  CHECK(mean_euclidean_distance({t, t}, t) == 0.0);
  CHECK(empirical_bias({t + e, t - e}, t) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(mean_euclidean_distance({t + e, t - e}, t) == doctest::Approx(frobenius_norm(e)));
  CHECK(empirical_bias({t + e}, t) == doctest::Approx(frobenius_norm(e)));
  const DenseMatrix f = DenseMatrix::from_rows({{2, 0}, {1, 1}});
  CHECK(mean_euclidean_distance({t + e, t + f}, t) >= empirical_bias({t + e, t + f}, t));
  CHECK(code_of([&] { empirical_bias({}, t); }) == Errc::empty_input);
  CHECK(code_of([&] { mean_euclidean_distance({}, t); }) == Errc::empty_input);
  CHECK(code_of([&] { empirical_bias({DenseMatrix(3, 3)}, t); }) == Errc::dimension_mismatch);
}

TEST_CASE("plan validation") {
  SimulationPlan plan = default_plan(find_builtin_case("matsl-case1"), 1);
  CHECK(plan.sample_sizes == std::vector<std::size_t>{5, 10, 15, 20, 30, 50, 100});
  CHECK(plan.runs == 200);
  CHECK(plan.em_config.epsilon == 1e-11);
  CHECK_NOTHROW(validate_plan(plan));
  plan.sample_sizes = {1};
  CHECK(code_of([&] { validate_plan(plan); }) == Errc::existence_violation);
  plan.allow_infeasible = true;
  CHECK_NOTHROW(validate_plan(plan));
  plan.estimators = {Estimator::em, Estimator::moment};
  CHECK(code_of([&] { validate_plan(plan); }) == Errc::invalid_argument);
  plan.estimators = {Estimator::em};
  plan.runs = 0;
  CHECK(code_of([&] { validate_plan(plan); }) == Errc::invalid_argument);

  const SimulationPlan mv = default_plan(find_builtin_case("mvsl-case4"), 0);
  CHECK(mv.sample_sizes.front() == 10);
  CHECK(mv.estimators.size() == 2);
}

TEST_CASE("single replication collapses bias and distance") {
  SimulationPlan plan = default_plan(find_builtin_case("matsl-case2"), 9);
  plan.runs = 1;
  plan.sample_sizes = {10};
  const auto results = run_plan(plan);
  REQUIRE(results.size() == 1);
  CHECK(results[0].empirical_bias == doctest::Approx(results[0].mean_euclidean_distance).epsilon(1e-15));
  CHECK(results[0].relative_bias == doctest::Approx(results[0].empirical_bias / 17.3432).epsilon(1e-5));
  CHECK(results[0].failure_count == 0);
  CHECK(results[0].mean_iterations > 0);
}

TEST_CASE("infeasible sizes are counted as failures") {
  SimulationPlan plan = default_plan(find_builtin_case("mvsl-case1"), 3);
  plan.runs = 4;
  plan.sample_sizes = {3, 12};
  plan.allow_infeasible = true;
  const auto results = run_plan(plan);
  REQUIRE(results.size() == 4);
  CHECK(results[0].estimator == Estimator::em);
  CHECK(results[0].failure_count == 4);
  CHECK(std::isnan(results[0].mean_euclidean_distance));
  CHECK(results[1].estimator == Estimator::moment);
  CHECK(results[1].failure_count == 0);
  CHECK(results[2].failure_count == 0);
  CHECK(results[3].mean_iterations == 0.0);
}

TEST_CASE("results do not depend on the thread count") {
  SimulationPlan plan = default_plan(find_builtin_case("mvsl-case2"), 12);
  plan.runs = 7;
  plan.sample_sizes = {10, 25};
  const std::string one = format_csv(run_plan(plan, 1));
  CHECK(format_csv(run_plan(plan, 3)) == one);
  CHECK(format_csv(run_plan(plan, 16)) == one);
  plan.master_seed = 13;
  CHECK(format_csv(run_plan(plan, 1)) != one);
}

TEST_CASE("progress callback") {
  SimulationPlan plan = default_plan(find_builtin_case("matsl-case1"), 1);
  plan.runs = 5;
  plan.sample_sizes = {5, 10};
  std::size_t calls = 0, last = 0;
  run_plan(plan, 2, [&](std::size_t done, std::size_t total) {
    ++calls;
    last = done;
    CHECK(total == 10);
  });
  CHECK(calls == 10);
  CHECK(last == 10);
}

TEST_CASE("CSV round trip") {
  SimulationPlan plan = default_plan(find_builtin_case("matsl-case1"), 4);
  plan.runs = 3;
  const auto results = run_plan(plan);
  CHECK(results.size() == 7);
  const auto path = scratch("r.csv").string();
  emit_csv(results, path);
  std::ifstream in(path);
  CHECK(parse_csv(in, path) == results);
  CHECK(code_of([&] { emit_csv({}, path); }) == Errc::empty_input);
  CHECK(code_of([&] { emit_csv(results, "/nonexistent/dir/r.csv"); }) == Errc::io);
  std::istringstream bad("case,kind\n");
  CHECK(code_of([&] { parse_csv(bad, "bad"); }) == Errc::parse);
}

TEST_CASE("plan files") {
  const auto dir = scratch("plans");
  std::filesystem::create_directories(dir);
  write_matrix((dir / "s1.txt").string(), DenseMatrix::diagonal({1, 2}));
  write_matrix((dir / "s2.txt").string(), DenseMatrix::diagonal({3, 1, 1}));
  {
    std::ofstream f(dir / "user.json");
    f << R"({"case": {"name": "mine", "sigma1": "s1.txt", "sigma2": "s2.txt"},
             "sizes": [2, 4], "runs": 3, "seed": 77, "epsilon": 1e-9})";
  }
  const SimulationPlan p = load_plan((dir / "user.json").string());
  CHECK(p.case_spec.name == "mine");
  CHECK(p.case_spec.source == CaseSource::user_file);
  CHECK(p.case_spec.kind == CaseKind::matrix_variate);
  CHECK(p.sample_sizes == std::vector<std::size_t>{2, 4});
  CHECK(p.master_seed == 77);
  CHECK(p.em_config.epsilon == 1e-9);

  std::istringstream builtin(R"({"case": "mvsl-case1", "estimators": ["moment"]})");
  const SimulationPlan b = parse_plan(builtin, "b.json");
  CHECK(b.runs == 200);
  CHECK(b.estimators == std::vector<Estimator>{Estimator::moment});

  std::istringstream unknown(R"({"case": "mvsl-case1", "bogus": 1})");
  CHECK(code_of([&] { parse_plan(unknown, "u.json"); }) == Errc::invalid_argument);
  std::istringstream broken("{");
  CHECK(code_of([&] { parse_plan(broken, "x.json"); }) == Errc::parse);
  std::istringstream small(R"({"case": "mvsl-case4", "sizes": [5]})");
  CHECK(code_of([&] { parse_plan(small, "s.json"); }) == Errc::existence_violation);
}
