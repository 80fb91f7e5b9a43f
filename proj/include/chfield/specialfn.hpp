#pragma once

namespace chfield::specialfn {

// ln Gamma(z) for z > 0.
double log_gamma(double z);

// ln B(a, b) = ln Gamma(a) + ln Gamma(b) - ln Gamma(a + b).
double log_beta(double a, double b);

struct BesselK {
  double value;
  bool underflow;  // true when the true value is below the double range
};

// Modified Bessel function of the second kind, K_nu(x). K is even in nu.
BesselK bessel_k_checked(double nu, double x);
double bessel_k(double nu, double x);

// Which evaluation path kummer_u takes; exposed so tests can cross-check branches.
enum class KummerBranch { Limit, Series, Asymptotic, Quadrature };

// Tricomi confluent hypergeometric function U(a, b, z), a > 0, z >= 0.
double kummer_u(double a, double b, double z);
double log_kummer_u(double a, double b, double z);

// Forces one branch. Returns NaN if that branch cannot deliver full accuracy
// (series cancellation, divergent asymptotic tail, limit not negligible).
double log_kummer_u_branch(double a, double b, double z, KummerBranch branch);

// Branch that log_kummer_u would pick.
KummerBranch kummer_u_branch(double a, double b, double z);

}  // namespace chfield::specialfn
