#include "laplace/bessel.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <string>

#include "laplace/error.hpp"

namespace laplace {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxTerms = 100000;

// State of the upward walk: log K_mu(x) and r = K_{mu+1}(x) / K_mu(x) at
// order mu = two_mu / 2 >= 0.
struct Walk {
  int two_mu;
  double log_k;
  double ratio;
};

void require_positive(double x) {
  if (!(x > 0.0)) {
    throw Error(Errc::non_positive_argument,
                "Bessel K needs x > 0, got " + std::to_string(x));
  }
}

// K_0 and K_1 by Temme's series (order mu = 0 limit) for 0 < x <= 2.
Walk integer_start_series(double x) {
  const double half_x = 0.5 * x;
  const double d = half_x * half_x;
  double ff = -std::log(half_x) - std::numbers::egamma_v<double>;
  double p = 0.5;
  double c = 1.0;
  double sum = ff;
  double sum1 = p;
  for (int i = 1; i < kMaxTerms; ++i) {
    const double di = i;
    ff = (di * ff + 2.0 * p) / (di * di);
    c *= d / di;
    p /= di;
    const double del = c * ff;
    const double del1 = c * (p - di * ff);
    sum += del;
    sum1 += del1;
    if (std::abs(del) < std::abs(sum) * kEps && std::abs(del1) < std::abs(sum1) * kEps) break;
  }
  const double k0 = sum;
  const double k1 = sum1 * 2.0 / x;
  return Walk{0, std::log(k0), k1 / k0};
}

// Steed's continued fraction for x > 2, on e^x K_0(x).
Walk integer_start_continued_fraction(double x) {
  const double a1 = 0.25;
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d;
  double delh = d;
  double q1 = 0.0;
  double q2 = 1.0;
  double q = a1;
  double c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 1; i < kMaxTerms; ++i) {
    a -= 2 * i;
    c = -a * c / (i + 1.0);
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < kEps) break;
  }
  h *= a1;
  const double log_k0 = 0.5 * std::log(std::numbers::pi / (2.0 * x)) - std::log(s) - x;
  return Walk{0, log_k0, (x + 0.5 - h) / x};
}

Walk start(bool integer_order, double x) {
  if (!integer_order) {
    return Walk{1, 0.5 * std::log(std::numbers::pi / (2.0 * x)) - x, 1.0 + 1.0 / x};
  }
  return x <= 2.0 ? integer_start_series(x) : integer_start_continued_fraction(x);
}

// Advance from the start order to two_target (same parity). The running
// product of ratios is folded into the log whenever it grows large.
Walk walk_to(int two_target, double x) {
  Walk w = start(two_target % 2 == 0, x);
  double product = 1.0;
  while (w.two_mu < two_target) {
    product *= w.ratio;
    if (product > 1e280) {
      w.log_k += std::log(product);
      product = 1.0;
    }
    const double next_mu = 0.5 * (w.two_mu + 2);
    w.ratio = 1.0 / w.ratio + 2.0 * next_mu / x;
    w.two_mu += 2;
  }
  w.log_k += std::log(product);
  return w;
}

}  // namespace

BesselLogRatio bessel_k_log_and_ratio(BesselOrder nu, double x) {
  require_positive(x);
  if (nu.two_nu == 1) {
    // K_{-1/2} = K_{1/2}
    return BesselLogRatio{0.5 * std::log(std::numbers::pi / (2.0 * x)) - x, 1.0};
  }
  if (nu.two_nu >= 2) {
    // K_{nu-1}/K_nu = 1 / r_{nu-1}
    const Walk w = walk_to(nu.two_nu - 2, x);
    return BesselLogRatio{w.log_k + std::log(w.ratio), 1.0 / w.ratio};
  }
  // nu <= 0: K_{nu-1}/K_nu = K_{|nu|+1}/K_{|nu|} = r_{|nu|}
  const Walk w = walk_to(-nu.two_nu, x);
  return BesselLogRatio{w.log_k, w.ratio};
}

double bessel_k_log(BesselOrder nu, double x) {
  require_positive(x);
  return walk_to(std::abs(nu.two_nu), x).log_k;
}

double bessel_k_ratio(BesselOrder nu, double x) {
  return bessel_k_log_and_ratio(nu, x).ratio;
}

double bessel_k(BesselOrder nu, double x) {
  const double lk = bessel_k_log(nu, x);
  if (lk < std::log(std::numeric_limits<double>::min())) {
    throw Underflow("K_" + std::to_string(nu.value()) + "(" + std::to_string(x) +
                    ") underflows double precision");
  }
  if (lk > std::log(std::numeric_limits<double>::max())) {
    throw Error(Errc::non_finite, "K_" + std::to_string(nu.value()) + "(" + std::to_string(x) +
                                      ") overflows double precision");
  }
  return std::exp(lk);
}

}  // namespace laplace
