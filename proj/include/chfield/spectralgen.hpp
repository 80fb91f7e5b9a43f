#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "chfield/kernels.hpp"
#include "chfield/oscillatory.hpp"

namespace chfield {

struct SpectralMarginal {
  enum class Kind { CH, Matern };
  Kind kind = Kind::CH;
  double nu = 0.5;
  double alpha = 1.0;  // CH only
  double beta = 1.0;   // CH only
  double phi = 1.0;    // Matern only

  static SpectralMarginal ch(double nu, double alpha, double beta) { return {Kind::CH, nu, alpha, beta, 1.0}; }
  static SpectralMarginal matern(double nu, double phi) { return {Kind::Matern, nu, 1.0, 1.0, phi}; }
};

struct SpectralCrossSpec {
  std::vector<SpectralMarginal> marginals;
  Eigen::MatrixXcd sigma;
  int dim = 1;

  int p() const { return static_cast<int>(marginals.size()); }
  // Hermitian PSD sigma with real positive diagonal; complex entries only when allowed.
  void validate(bool allow_complex) const;
};

// ln of the unit-variance marginal spectral density.
double log_marginal_sdf(const SpectralMarginal& m, double x, int dim);
// ln of c with f(x) ~ c x^(-2 nu - d).
double log_marginal_tail_constant(const SpectralMarginal& m, int dim);

struct HankelOptions {
  double rel_tol = 1e-9;
  // Refinement factor applied to every panel; 2 halves all panel widths.
  int resolution = 1;
};

double hankel_cross_cov(double h, const SpectralCrossSpec& spec, int j, int k, const HankelOptions& opts = {});
double asym_cross_cov_1d(double h, const SpectralCrossSpec& spec, int j, int k, const HankelOptions& opts = {});
double matern_ch_cross_cov(double h, const MaternParams& matern, const CHParams& ch, double sigma12, int dim,
                           const HankelOptions& opts = {});

// Cubic interpolant in ln r on a log-spaced radial grid; direct evaluation outside it.
class RadialCache {
 public:
  using Fn = std::function<double(double)>;
  RadialCache(Fn direct, double r_min, double r_max, int count);
  double operator()(double r) const;
  double r_min() const { return r_min_; }
  double r_max() const { return r_max_; }

 private:
  struct Spline;
  Fn direct_;
  double r_min_, r_max_;
  std::shared_ptr<const Spline> spline_;
};

}  // namespace chfield
