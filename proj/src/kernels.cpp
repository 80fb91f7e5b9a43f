#include "chfield/kernels.hpp"

#include <cmath>
#include <string>

#include "chfield/errors.hpp"
#include "chfield/specialfn.hpp"

namespace chfield {

namespace sf = specialfn;

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be positive and finite");
}

void check_dim(int dim) {
  if (dim < 1 || dim > 3) throw DomainError("dimension must be 1, 2 or 3");
}

}  // namespace

void validate(const MaternParams& p) {
  require_positive(p.nu, "matern nu");
  require_positive(p.phi, "matern phi");
  require_positive(p.sigma2, "matern sigma2");
}

void validate(const CHParams& p) {
  require_positive(p.nu, "ch nu");
  require_positive(p.alpha, "ch alpha");
  require_positive(p.beta, "ch beta");
  require_positive(p.sigma2, "ch sigma2");
}

void validate(const GCParams& p) {
  if (!(p.alpha > 0.0 && p.alpha <= 2.0)) throw DomainError("gc alpha must lie in (0, 2]");
  require_positive(p.beta, "gc beta");
  require_positive(p.phi, "gc phi");
  if (!std::isfinite(p.sigma)) throw DomainError("gc sigma must be finite");
}

double matern_cov(double h, const MaternParams& p) {
  if (h < 0.0) throw DomainError("matern_cov: negative distance");
  if (h == 0.0) return p.sigma2;
  const double x = h / p.phi;
  const auto k = sf::bessel_k_checked(p.nu, x);
  if (k.underflow) return 0.0;
  const double log_v = (1.0 - p.nu) * M_LN2 - sf::log_gamma(p.nu) + p.nu * std::log(x) + std::log(k.value);
  return p.sigma2 * std::exp(log_v);
}

double log_matern_sdf_unit(double x, double nu, double phi, int dim) {
  check_dim(dim);
  const double hd = 0.5 * dim;
  return sf::log_gamma(nu + hd) - hd * std::log(M_PI) - sf::log_gamma(nu) - 2.0 * nu * std::log(phi) -
         (nu + hd) * std::log(1.0 / (phi * phi) + x * x);
}

double matern_sdf(double x, const MaternParams& p, int dim) {
  if (x < 0.0) throw DomainError("matern_sdf: negative frequency");
  return p.sigma2 * std::exp(log_matern_sdf_unit(x, p.nu, p.phi, dim));
}

double ch_cov(double h, const CHParams& p) {
  if (h < 0.0) throw DomainError("ch_cov: negative distance");
  if (h == 0.0) return p.sigma2;
  const double z = h * h / (2.0 * p.beta * p.beta);
  const double log_v = sf::log_gamma(p.nu + p.alpha) - sf::log_gamma(p.nu) + sf::log_kummer_u(p.alpha, 1.0 - p.nu, z);
  return p.sigma2 * std::exp(log_v);
}

double log_ch_sdf_unit(double x, double nu, double alpha, double beta, int dim) {
  check_dim(dim);
  const double hd = 0.5 * dim;
  if (!(alpha > hd)) throw InfiniteDensityError("ch_sdf: spectral density is infinite for alpha <= d/2");
  const double z = 0.5 * beta * beta * x * x;
  return sf::log_gamma(nu + hd) + dim * std::log(beta) - hd * std::log(2.0 * M_PI) - sf::log_beta(alpha, nu) +
         sf::log_kummer_u(nu + hd, 1.0 - alpha + hd, z);
}

double ch_sdf(double x, const CHParams& p, int dim) {
  if (x < 0.0) throw DomainError("ch_sdf: negative frequency");
  return p.sigma2 * std::exp(log_ch_sdf_unit(x, p.nu, p.alpha, p.beta, dim));
}

double gc_cov(double h, const GCParams& p) {
  if (h < 0.0) throw DomainError("gc_cov: negative distance");
  if (h == 0.0) return p.sigma;
  return p.sigma * std::pow(1.0 + std::pow(h / p.phi, p.alpha), -p.beta / p.alpha);
}

double ch_cov_tail_constant(const CHParams& p) {
  return p.sigma2 * std::exp(sf::log_gamma(p.nu + p.alpha) + p.alpha * M_LN2 + 2.0 * p.alpha * std::log(p.beta) -
                             sf::log_gamma(p.nu));
}

double ch_sdf_tail_constant(const CHParams& p, int dim) {
  check_dim(dim);
  const double hd = 0.5 * dim;
  return p.sigma2 * std::exp(sf::log_gamma(p.nu + hd) + p.nu * M_LN2 - 2.0 * p.nu * std::log(p.beta) -
                             sf::log_beta(p.alpha, p.nu) - hd * std::log(M_PI));
}

}  // namespace chfield
