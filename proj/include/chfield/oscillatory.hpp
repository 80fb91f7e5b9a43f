#pragma once

#include <functional>
#include <vector>

namespace chfield {

// Kernel K(r x) multiplying the integrand.
enum class OscKernel { None, Cos, Sin, BesselJ0 };

struct OscOptions {
  double rel_tol = 1e-10;
  // Sub-panels per lobe / per geometric panel; raising it refines the base rule.
  int subdivisions = 1;
  int max_lobes = 4000;
  // Width below which the first interval is integrated as one panel, in x units.
  double inner_scale = 1e-3;
};

// int_0^inf K(r x) g(x) dx. g must be integrable at 0 and decay at infinity;
// tail(X) must return int_X^inf g(x) dx for the non-oscillatory (None) kernel.
double oscillatory_integral(OscKernel kernel, double r, const std::function<double(double)>& g,
                            const std::function<double(double)>& tail, double tail_start, const OscOptions& opts);

// Adaptive 15-point Gauss-Kronrod on [a, b].
double adaptive_gk15(const std::function<double(double)>& f, double a, double b, double abs_tol, double rel_tol,
                     int max_intervals = 200);

// Wynn epsilon extrapolation of a sequence of partial sums; returns the best estimate.
class EpsilonExtrapolator {
 public:
  // Adds the next partial sum, returns the current extrapolated limit.
  double push(double partial_sum);
  double error_estimate() const { return error_; }

 private:
  std::vector<double> sums_;
  double last_ = 0.0, prev_ = 0.0, error_ = 1e300;
};

}  // namespace chfield
