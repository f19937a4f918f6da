#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "laplace/cli.hpp"
#include "laplace/io.hpp"
#include "laplace/matsl.hpp"
#include "laplace/mvsl.hpp"

using namespace laplace;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "laplace-mle");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return Run{code, out.str(), err.str()};
}

std::string dir() {
  const auto d = std::filesystem::temp_directory_path() / "laplace_cli_test";
  std::filesystem::create_directories(d);
  return d.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::string write(const std::string& name, const std::string& text) {
  const std::string path = dir() + "/" + name;
  std::ofstream(path) << text;
  return path;
}

bool single_error_line(const std::string& err) {
  return err.rfind("error: ", 0) == 0 && err.find('\n') == err.size() - 1;
}

}  // namespace

TEST_CASE("sample writes a deterministic dataset") {
  const std::string sigma = write("s.txt", "2 0.5 0\n0.5 1 0\n0 0 1.5\n");
  const std::string a = dir() + "/a.txt", b = dir() + "/b.txt";
  Run r = cli({"sample", "--dist", "mvsl", "--sigma", sigma, "--n", "100", "--seed", "42", "--out", a});
  CHECK(r.code == 0);
  CHECK(r.out.find("n=100 p=3") != std::string::npos);
  CHECK(cli({"sample", "--sigma", sigma, "--n", "100", "--seed", "42", "--out", b}).code == 0);
  CHECK(slurp(a) == slurp(b));
  const DenseMatrix d = read_matrix(a);
  CHECK(d.rows() == 100);
  CHECK(d.cols() == 3);
}

TEST_CASE("sample reads the seed from the environment") {
  const std::string sigma = write("s2.txt", "1 0\n0 1\n");
  setenv("LAPLACE_MLE_SEED", "5", 1);
  Run env = cli({"sample", "--sigma", sigma, "--n", "4"});
  unsetenv("LAPLACE_MLE_SEED");
  Run flag = cli({"sample", "--sigma", sigma, "--n", "4", "--seed", "5"});
  Run other = cli({"sample", "--sigma", sigma, "--n", "4", "--seed", "6"});
  CHECK(env.out == flag.out);
  CHECK(env.out != other.out);
}

TEST_CASE("validation errors exit 1 with a single diagnostic line") {
  const std::string bad = write("bad.txt", "1 2\n2 1\n");
  Run r = cli({"sample", "--sigma", bad, "--n", "3"});
  CHECK(r.code == 1);
  CHECK(single_error_line(r.err));
  CHECK(r.err.find("NotPositiveDefinite") != std::string::npos);

  const std::string garbage = write("garbage.txt", "1 2\nx y\n");
  CHECK(cli({"sample", "--sigma", garbage, "--n", "3"}).code == 1);

  Run unknown = cli({"fit-mvsl", "--data", bad, "--frobnicate"});
  CHECK(unknown.code == 1);
  CHECK(single_error_line(unknown.err));

  Run missing = cli({"sample", "--sigma", "/nonexistent/s.txt", "--n", "3"});
  CHECK(missing.code == 3);
  CHECK(single_error_line(missing.err));
}

TEST_CASE("fit-mvsl reports existence violations") {
  const std::string sigma = write("i4.txt", "1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n");
  const std::string data = dir() + "/small.txt";
  REQUIRE(cli({"sample", "--sigma", sigma, "--n", "3", "--out", data}).code == 0);
  Run r = cli({"fit-mvsl", "--data", data});
  CHECK(r.code == 1);
  CHECK(single_error_line(r.err));
  CHECK(r.err.find("N >= p") != std::string::npos);
}

TEST_CASE("fit-mvsl writes a JSON report") {
  const std::string sigma = write("s3.txt", "2 0.5\n0.5 1\n");
  const std::string data = dir() + "/d.txt", report = dir() + "/f.json";
  REQUIRE(cli({"sample", "--sigma", sigma, "--n", "200", "--seed", "1", "--out", data}).code == 0);
  Run r = cli({"fit-mvsl", "--data", data, "--out", report});
  CHECK(r.code == 0);
  CHECK(r.out.find("converged after") != std::string::npos);
  const auto j = nlohmann::json::parse(slurp(report));
  CHECK(j["converged"].get<bool>());
  CHECK(j["epsilon"].get<double>() == 1e-11);
  CHECK(j["sigma"].size() == 2);
  const MvslFit fit = mvsl_em_fit(read_mvsl_dataset(data));
  CHECK(j["sigma"][0][1].get<double>() == fit.sigma.matrix()(0, 1));
  CHECK(j["iterations"].get<std::size_t>() == fit.report.iterations);
}

TEST_CASE("fit-matsl on q = 1 data agrees with fit-mvsl") {
  const std::string sigma = write("s4.txt", "2 0.5 0.1\n0.5 1 0\n0.1 0 0.7\n");
  const std::string vdata = dir() + "/v.txt";
  REQUIRE(cli({"sample", "--sigma", sigma, "--n", "50", "--seed", "3", "--out", vdata}).code == 0);
  const MvslSample v = read_mvsl_dataset(vdata);
  std::vector<DenseMatrix> cols;
  for (Eigen::Index i = 0; i < v.n(); ++i) cols.push_back(DenseMatrix::column(v.observation(i)));
  const std::string mdata = dir() + "/m.txt";
  write_matsl_dataset(mdata, MatslSample(std::move(cols)));

  const std::string ra = dir() + "/ra.json", rb = dir() + "/rb.json";
  REQUIRE(cli({"fit-mvsl", "--data", vdata, "--step-tol", "1e-12", "--out", ra}).code == 0);
  REQUIRE(cli({"fit-matsl", "--data", mdata, "--step-tol", "1e-12", "--out", rb}).code == 0);
  const auto a = nlohmann::json::parse(slurp(ra));
  const auto b = nlohmann::json::parse(slurp(rb));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      CHECK(b["kronecker"][i][j].get<double>() ==
            doctest::Approx(a["sigma"][i][j].get<double>()).epsilon(1e-8));
    }
  }
  CHECK(b["sigma2"][0][0].get<double>() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("fit-matsl requires paired initials") {
  const std::string s1 = write("m1.txt", "1 0\n0 1\n");
  const std::string data = dir() + "/mm.txt";
  REQUIRE(cli({"sample", "--dist", "matsl", "--sigma1", s1, "--sigma2", s1, "--n", "5", "--out", data})
              .code == 0);
  CHECK(cli({"fit-matsl", "--data", data, "--initial1", s1}).code == 1);
  CHECK(cli({"fit-matsl", "--data", data, "--initial1", s1, "--initial2", s1}).code == 0);
}

TEST_CASE("density evaluates each observation") {
  const std::string s = write("s5.txt", "1\n");
  const std::string data = write("y.txt", "0\n1\n");
  Run r = cli({"density", "--sigma", s, "--data", data});
  CHECK(r.code == 0);
  std::istringstream lines(r.out);
  double a = 0, b = 0;
  lines >> a >> b;
  CHECK(a == doctest::Approx(-0.5 * std::log(2.0)).epsilon(1e-15));
  CHECK(b == doctest::Approx(-0.5 * std::log(2.0) - std::sqrt(2.0)).epsilon(1e-15));
  Run phi = cli({"density", "--sigma", s, "--data", data, "--char-fn"});
  CHECK(phi.out == "1\n0.6666666666666666\n");
}

TEST_CASE("simulate: determinism across threads and unknown cases") {
  const std::string one = dir() + "/t1.csv", eight = dir() + "/t8.csv";
  const std::vector<std::string> base{"simulate", "--case", "matsl-case3", "--runs", "6",
                                      "--sizes", "5,10", "--seed", "11"};
  auto with = [&](std::vector<std::string> extra) {
    std::vector<std::string> a = base;
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  };
  CHECK(cli(with({"--threads", "1", "--out", one})).code == 0);
  CHECK(cli(with({"--threads", "8", "--out", eight})).code == 0);
  CHECK(slurp(one) == slurp(eight));
  CHECK(slurp(one).rfind("case,kind,N,s,estimator", 0) == 0);

  Run r = cli({"simulate", "--case", "no-such-case"});
  CHECK(r.code == 1);
  CHECK(single_error_line(r.err));
  CHECK(r.err.find("mvsl-case1") != std::string::npos);
  CHECK(cli({"simulate"}).code == 1);
  const std::string plan = write("bad_plan.json", R"({"case": "mvsl-case1", "runs": 0})");
  CHECK(cli({"simulate", "--plan", plan}).code == 1);
}

TEST_CASE("bessel-eval") {
  Run r = cli({"bessel-eval", "--nu", "0.5", "--x", "1"});
  CHECK(r.code == 0);
  CHECK(r.out.find("0.4610685") != std::string::npos);
  CHECK(cli({"bessel-eval", "--nu", "0.3", "--x", "1"}).code == 1);
  CHECK(cli({"bessel-eval", "--nu", "1", "--x", "-1"}).code == 1);
}

TEST_CASE("help lists every flag with its default") {
  Run r = cli({"fit-matsl", "--help"});
  CHECK(r.code == 0);
  for (const char* flag : {"--data", "--epsilon", "--max-iters", "--initial1", "--initial2", "--out"}) {
    CHECK(r.out.find(flag) != std::string::npos);
  }
  CHECK(r.out.find("1e-11") != std::string::npos);
  CHECK(r.out.find("5000") != std::string::npos);
  Run s = cli({"simulate", "--help"});
  for (const char* flag : {"--case", "--plan", "--seed", "--runs", "--sizes", "--threads", "--out"}) {
    CHECK(s.out.find(flag) != std::string::npos);
  }
  CHECK(s.out.find("LAPLACE_MLE_SEED") != std::string::npos);
}
