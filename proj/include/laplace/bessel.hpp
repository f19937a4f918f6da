#pragma once

namespace laplace {

/// Order of K_nu restricted to integers and half-integers, stored as 2*nu so
/// both are exact.
struct BesselOrder {
  int two_nu = 0;

  static constexpr BesselOrder from_twice(int two_nu) { return BesselOrder{two_nu}; }
  constexpr double value() const { return 0.5 * two_nu; }
  constexpr BesselOrder minus_one() const { return BesselOrder{two_nu - 2}; }
  constexpr BesselOrder negated() const { return BesselOrder{-two_nu}; }
  constexpr bool is_integer() const { return two_nu % 2 == 0; }

  friend constexpr bool operator==(BesselOrder, BesselOrder) = default;
};

/// log K_nu(x) and K_{nu-1}(x) / K_nu(x) from one pass over the recurrence.
struct BesselLogRatio {
  double log_k;
  double ratio;
};

// Modified Bessel function of the third kind (Macdonald function).
//
// K_0 and K_1 come from Temme's series for x <= 2 and Steed's continued
// fraction for x > 2, both carried on e^x K(x). Half-integer orders start
// from the closed form K_{1/2}(x) = sqrt(pi / 2x) e^{-x} with
// K_{3/2}/K_{1/2} = 1 + 1/x. Higher orders follow by upward recurrence on the
// ratio r_mu = K_{mu+1}/K_mu, which is stable for K and never forms large or
// tiny intermediate values. Negative orders use K_{-nu} = K_nu.
//
// All functions throw Error(NonPositiveArgument) for x <= 0 or NaN.

/// K_nu(x). Throws Underflow when the value is below the least normal double;
/// use bessel_k_log there.
double bessel_k(BesselOrder nu, double x);

double bessel_k_log(BesselOrder nu, double x);

/// K_{nu-1}(x) / K_nu(x), with the exponential factors cancelled.
double bessel_k_ratio(BesselOrder nu, double x);

BesselLogRatio bessel_k_log_and_ratio(BesselOrder nu, double x);

}  // namespace laplace
