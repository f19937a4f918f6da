#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "laplace/bessel.hpp"
#include "laplace/error.hpp"
#include "laplace/matsl.hpp"
#include "laplace/mvsl.hpp"
#include "laplace/simstudy.hpp"

namespace py = pybind11;
using namespace laplace;

namespace {

using Array3 = py::array_t<double, py::array::c_style | py::array::forcecast>;

BesselOrder order(double nu) {
  const double twice = 2.0 * nu;
  if (twice != static_cast<double>(static_cast<int>(twice))) {
    throw Error(Errc::invalid_argument, "order must be an integer or half-integer");
  }
  return BesselOrder::from_twice(static_cast<int>(twice));
}

SpdMatrix spd(const RowMatrix& m) { return cholesky(DenseMatrix(m)); }

MatslSample to_sample(const Array3& a) {
  if (a.ndim() != 3) throw Error(Errc::dimension_mismatch, "expected an (N, p, q) array");
  const auto n = a.shape(0), p = a.shape(1), q = a.shape(2);
  std::vector<DenseMatrix> obs;
  obs.reserve(static_cast<std::size_t>(n));
  const double* data = a.data();
  for (py::ssize_t i = 0; i < n; ++i) {
    obs.emplace_back(RowMatrix(Eigen::Map<const RowMatrix>(data + i * p * q, p, q)));
  }
  return MatslSample(std::move(obs));
}

Array3 to_array(const MatslSample& s) {
  Array3 out({s.n(), s.p(), s.q()});
  double* data = out.mutable_data();
  for (Eigen::Index i = 0; i < s.n(); ++i) {
    Eigen::Map<RowMatrix>(data + i * s.p() * s.q(), s.p(), s.q()) =
        s[static_cast<std::size_t>(i)].eigen();
  }
  return out;
}

EmConfig config(double epsilon, std::size_t max_iterations, double step_tolerance) {
  EmConfig c;
  c.epsilon = epsilon;
  c.max_iterations = max_iterations;
  c.step_tolerance = step_tolerance;
  return c;
}

py::dict report(const EmReport& r) {
  py::dict d;
  d["iterations"] = r.iterations;
  d["converged"] = r.converged;
  d["log_likelihood"] = r.final_log_likelihood;
  d["trace"] = r.trace;
  return d;
}

py::dict result_dict(const SimulationResult& r) {
  py::dict d;
  d["case"] = r.case_name;
  d["kind"] = std::string(to_string(r.kind));
  d["N"] = r.n;
  d["s"] = r.runs;
  d["estimator"] = std::string(to_string(r.estimator));
  d["empirical_bias"] = r.empirical_bias;
  d["relative_bias"] = r.relative_bias;
  d["mean_euclidean_distance"] = r.mean_euclidean_distance;
  d["relative_mean_euclidean_distance"] = r.relative_mean_euclidean_distance;
  d["mean_iterations"] = r.mean_iterations;
  d["failure_count"] = r.failure_count;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Symmetric Laplace distributions and their EM estimators";

  static py::exception<Error> error(m, "LaplaceError", PyExc_ValueError);
  static py::exception<Underflow> underflow(m, "BesselUnderflow", PyExc_ArithmeticError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = static_cast<const py::handle&>(error)(e.what());
      exc.attr("code") = std::string(errc_name(e.code()));
      PyErr_SetObject(error.ptr(), exc.ptr());
    } catch (const Underflow& e) {
      PyErr_SetString(underflow.ptr(), e.what());
    }
  });

  m.def("bessel_k", [](double nu, double x) { return bessel_k(order(nu), x); }, py::arg("nu"),
        py::arg("x"));
  m.def("bessel_k_log", [](double nu, double x) { return bessel_k_log(order(nu), x); },
        py::arg("nu"), py::arg("x"));
  m.def("bessel_k_ratio", [](double nu, double x) { return bessel_k_ratio(order(nu), x); },
        py::arg("nu"), py::arg("x"), "K_{nu-1}(x) / K_nu(x)");

  m.def(
      "mvsl_log_pdf",
      [](const RowMatrix& sigma, const Vector& y) { return mvsl_log_pdf(MvslModel(spd(sigma)), y); },
      py::arg("sigma"), py::arg("y"));
  m.def(
      "mvsl_weight",
      [](const RowMatrix& sigma, const Vector& y) { return mvsl_weight(MvslModel(spd(sigma)), y); },
      py::arg("sigma"), py::arg("y"));
  m.def(
      "mvsl_sample",
      [](const RowMatrix& sigma, std::size_t n, std::uint64_t seed) {
        return mvsl_sample(spd(sigma), n, seed).observations().eigen();
      },
      py::arg("sigma"), py::arg("n"), py::arg("seed"));
  m.def(
      "mvsl_log_likelihood",
      [](const RowMatrix& sigma, const RowMatrix& data) {
        return mvsl_log_likelihood(spd(sigma), MvslSample(DenseMatrix(data)));
      },
      py::arg("sigma"), py::arg("data"));
  m.def(
      "mvsl_em_fit",
      [](const RowMatrix& data, double epsilon, std::size_t max_iterations, double step_tolerance,
         std::optional<RowMatrix> initial) {
        std::optional<SpdMatrix> init;
        if (initial) init = spd(*initial);
        const MvslFit fit = mvsl_em_fit(MvslSample(DenseMatrix(data)),
                                        config(epsilon, max_iterations, step_tolerance), init);
        py::dict d = report(fit.report);
        d["sigma"] = fit.sigma.matrix().eigen();
        return d;
      },
      py::arg("data"), py::arg("epsilon") = 1e-11, py::arg("max_iterations") = 5000,
      py::arg("step_tolerance") = 0.0, py::arg("initial") = py::none());
  m.def(
      "mvsl_moment_estimator",
      [](const RowMatrix& data) {
        return mvsl_sample_covariance(MvslSample(DenseMatrix(data))).eigen();
      },
      py::arg("data"));

  m.def(
      "matsl_log_pdf",
      [](const RowMatrix& s1, const RowMatrix& s2, const RowMatrix& x) {
        return matsl_log_pdf(MatslModel(spd(s1), spd(s2)), DenseMatrix(x));
      },
      py::arg("sigma1"), py::arg("sigma2"), py::arg("x"));
  m.def(
      "matsl_char_fn",
      [](const RowMatrix& s1, const RowMatrix& s2, const RowMatrix& t) {
        return matsl_char_fn(MatslModel(spd(s1), spd(s2)), DenseMatrix(t));
      },
      py::arg("sigma1"), py::arg("sigma2"), py::arg("t"));
  m.def(
      "matsl_sample",
      [](const RowMatrix& s1, const RowMatrix& s2, std::size_t n, std::uint64_t seed) {
        return to_array(matsl_sample(spd(s1), spd(s2), n, seed));
      },
      py::arg("sigma1"), py::arg("sigma2"), py::arg("n"), py::arg("seed"));
  m.def(
      "matsl_em_fit",
      [](const Array3& data, double epsilon, std::size_t max_iterations, double step_tolerance,
         std::optional<RowMatrix> initial1, std::optional<RowMatrix> initial2) {
        std::optional<SpdMatrix> i1, i2;
        if (initial1) i1 = spd(*initial1);
        if (initial2) i2 = spd(*initial2);
        const MatslFit fit =
            matsl_em_fit(to_sample(data), config(epsilon, max_iterations, step_tolerance), i1, i2);
        py::dict d = report(fit.report);
        d["sigma1"] = fit.estimate.sigma1_hat.matrix().eigen();
        d["sigma2"] = fit.estimate.sigma2_hat.matrix().eigen();
        d["kron"] = fit.estimate.kron.eigen();
        return d;
      },
      py::arg("data"), py::arg("epsilon") = 1e-11, py::arg("max_iterations") = 5000,
      py::arg("step_tolerance") = 0.0, py::arg("initial1") = py::none(),
      py::arg("initial2") = py::none());

  m.def("builtin_case_names", &builtin_case_names);
  m.def(
      "simulate",
      [](const std::string& case_name, std::optional<std::vector<std::size_t>> sizes,
         std::size_t runs, std::uint64_t seed, std::size_t threads) {
        SimulationPlan plan = default_plan(find_builtin_case(case_name), seed);
        if (sizes) plan.sample_sizes = *sizes;
        plan.runs = runs;
        std::vector<SimulationResult> results;
        {
          py::gil_scoped_release release;
          results = run_plan(plan, threads);
        }
        py::list out;
        for (const SimulationResult& r : results) out.append(result_dict(r));
        return out;
      },
      py::arg("case"), py::arg("sizes") = py::none(), py::arg("runs") = 200,
      py::arg("seed") = 0, py::arg("threads") = 1);
}
