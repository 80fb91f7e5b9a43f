#include "chfield/spectralgen.hpp"

#include <cmath>
#include <string>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "chfield/errors.hpp"
#include "chfield/specialfn.hpp"

namespace chfield {

namespace sf = specialfn;

void SpectralCrossSpec::validate(bool allow_complex) const {
  if (dim < 1 || dim > 3) throw DomainError("dimension must be 1, 2 or 3");
  const int n = p();
  if (n < 1) throw ContractError("spectral spec needs at least one marginal");
  if (sigma.rows() != n || sigma.cols() != n) throw ContractError("sigma size does not match marginals");
  const double scale = sigma.cwiseAbs().maxCoeff();
  for (int j = 0; j < n; ++j) {
    const auto& m = marginals[j];
    if (!(m.nu > 0.0)) throw DomainError("marginal nu must be positive");
    if (m.kind == SpectralMarginal::Kind::CH) {
      if (!(m.beta > 0.0)) throw DomainError("marginal beta must be positive");
      if (!(m.alpha > 0.5 * dim)) throw InfiniteDensityError("CH marginal needs alpha > d/2 for a finite spectral density");
    } else if (!(m.phi > 0.0)) {
      throw DomainError("marginal phi must be positive");
    }
    if (!(sigma(j, j).real() > 0.0) || sigma(j, j).imag() != 0.0)
      throw DomainError("sigma diagonal must be real and positive");
    for (int k = 0; k < n; ++k) {
      if (std::abs(sigma(j, k) - std::conj(sigma(k, j))) > 1e-12 * scale) throw ContractError("sigma must be Hermitian");
      if (!allow_complex && sigma(j, k).imag() != 0.0)
        throw UnsupportedCaseError("complex sigma entries need the one-dimensional asymmetric form");
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sigma, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  if (ev.minCoeff() < -1e-10 * ev.cwiseAbs().maxCoeff()) throw ValidityError("sigma is not positive semidefinite");
}

double log_marginal_sdf(const SpectralMarginal& m, double x, int dim) {
  if (m.kind == SpectralMarginal::Kind::CH) return log_ch_sdf_unit(x, m.nu, m.alpha, m.beta, dim);
  return log_matern_sdf_unit(x, m.nu, m.phi, dim);
}

double log_marginal_tail_constant(const SpectralMarginal& m, int dim) {
  const double hd = 0.5 * dim;
  if (m.kind == SpectralMarginal::Kind::CH)
    return sf::log_gamma(m.nu + hd) + m.nu * M_LN2 - 2.0 * m.nu * std::log(m.beta) - sf::log_beta(m.alpha, m.nu) -
           hd * std::log(M_PI);
  return sf::log_gamma(m.nu + hd) - hd * std::log(M_PI) - sf::log_gamma(m.nu) - 2.0 * m.nu * std::log(m.phi);
}

namespace {

double range_of(const SpectralMarginal& m) { return m.kind == SpectralMarginal::Kind::CH ? m.beta : m.phi; }

// Frequency beyond which f(x) matches its power-law tail to ~1e-9 relative.
double tail_start(const SpectralMarginal& m, int dim) {
  const double hd = 0.5 * dim;
  if (m.kind == SpectralMarginal::Kind::CH) {
    // U(a, b, z) ~ z^-a (1 - a (a - b + 1)/z): a = nu + d/2, a - b + 1 = nu + alpha.
    const double z = 1e9 * (m.nu + hd) * (m.nu + m.alpha) + 1.0;
    return std::sqrt(2.0 * z) / m.beta;
  }
  return std::sqrt(1e9 * (m.nu + hd) + 1.0) / m.phi;
}

enum class Part { Even, Odd };

// Integral over x >= 0 of the radial kernel times sqrt(f_j f_k) (unit variances).
double radial_transform(double h, const SpectralMarginal& a, const SpectralMarginal& b, int dim, Part part,
                        const HankelOptions& opts) {
  const double x_tail = std::max(tail_start(a, dim), tail_start(b, dim));
  OscOptions o;
  o.rel_tol = opts.rel_tol;
  o.subdivisions = std::max(1, opts.resolution);
  o.inner_scale = 1e-3 / std::max(range_of(a), range_of(b));

  const double power = (dim - 1);  // x^(d-1) in the h = 0 limit
  auto g = [&](double x) { return 0.5 * (log_marginal_sdf(a, x, dim) + log_marginal_sdf(b, x, dim)); };
  const double log_c = 0.5 * (log_marginal_tail_constant(a, dim) + log_marginal_tail_constant(b, dim));
  const double decay = a.nu + b.nu;  // tail of x^(d-1) sqrt(f_j f_k) is x^(-1 - decay)

  if (h == 0.0) {
    if (part == Part::Odd) return 0.0;
    auto f = [&](double x) { return x == 0.0 ? (dim == 1 ? std::exp(g(0.0)) : 0.0) : std::pow(x, power) * std::exp(g(x)); };
    auto tail = [&](double X) { return std::exp(log_c - decay * std::log(X)) / decay; };
    const double shell = dim == 1 ? 2.0 : (dim == 2 ? 2.0 * M_PI : 4.0 * M_PI);
    return shell * oscillatory_integral(OscKernel::None, 0.0, f, tail, x_tail, o);
  }

  auto none = [](double) { return 0.0; };
  switch (dim) {
    case 1: {
      auto f = [&](double x) { return std::exp(g(x)); };
      const auto kernel = part == Part::Even ? OscKernel::Cos : OscKernel::Sin;
      return 2.0 * oscillatory_integral(kernel, h, f, none, 0.0, o);
    }
    case 2: {
      if (part == Part::Odd) throw UnsupportedCaseError("odd part only exists in one dimension");
      auto f = [&](double x) { return x * std::exp(g(x)); };
      return 2.0 * M_PI * oscillatory_integral(OscKernel::BesselJ0, h, f, none, 0.0, o);
    }
    case 3: {
      if (part == Part::Odd) throw UnsupportedCaseError("odd part only exists in one dimension");
      auto f = [&](double x) { return x * std::exp(g(x)); };
      return 4.0 * M_PI / h * oscillatory_integral(OscKernel::Sin, h, f, none, 0.0, o);
    }
    default:
      break;
  }
  throw DomainError("dimension must be 1, 2 or 3");
}

}  // namespace

double hankel_cross_cov(double h, const SpectralCrossSpec& spec, int j, int k, const HankelOptions& opts) {
  spec.validate(false);
  if (h < 0.0) throw DomainError("hankel_cross_cov: negative distance");
  if (j < 0 || k < 0 || j >= spec.p() || k >= spec.p()) throw ContractError("process index out of range");
  const double s = spec.sigma(j, k).real();
  if (s == 0.0) return 0.0;
  return s * radial_transform(h, spec.marginals[j], spec.marginals[k], spec.dim, Part::Even, opts);
}

double asym_cross_cov_1d(double h, const SpectralCrossSpec& spec, int j, int k, const HankelOptions& opts) {
  if (spec.dim != 1) throw UnsupportedCaseError("asymmetric construction is only defined in one dimension");
  spec.validate(true);
  if (j < 0 || k < 0 || j >= spec.p() || k >= spec.p()) throw ContractError("process index out of range");
  const std::complex<double> s = spec.sigma(j, k);
  const auto& a = spec.marginals[j];
  const auto& b = spec.marginals[k];
  const double r = std::abs(h);
  double even = 0.0, odd = 0.0;
  if (s.real() != 0.0) even = s.real() * radial_transform(r, a, b, 1, Part::Even, opts);
  if (s.imag() != 0.0 && r > 0.0) odd = s.imag() * radial_transform(r, a, b, 1, Part::Odd, opts);
  return h < 0.0 ? even - odd : even + odd;
}

double matern_ch_cross_cov(double h, const MaternParams& matern, const CHParams& ch, double sigma12, int dim,
                           const HankelOptions& opts) {
  validate(matern);
  validate(ch);
  if (h < 0.0) throw DomainError("matern_ch_cross_cov: negative distance");
  if (std::abs(sigma12) > std::sqrt(matern.sigma2 * ch.sigma2) * (1.0 + 1e-12))
    throw ValidityError("|sigma12| exceeds sqrt(sigma11 sigma22)");
  if (!(ch.alpha > 0.5 * dim)) throw InfiniteDensityError("CH marginal needs alpha > d/2");
  if (sigma12 == 0.0) return 0.0;
  const auto a = SpectralMarginal::matern(matern.nu, matern.phi);
  const auto b = SpectralMarginal::ch(ch.nu, ch.alpha, ch.beta);
  return sigma12 * radial_transform(h, a, b, dim, Part::Even, opts);
}

struct RadialCache::Spline {
  boost::math::interpolators::cardinal_cubic_b_spline<double> spline;
  double log_min;
};

RadialCache::RadialCache(Fn direct, double r_min, double r_max, int count)
    : direct_(std::move(direct)), r_min_(r_min), r_max_(r_max) {
  if (!(r_min > 0.0 && r_max > r_min) || count < 4) throw ContractError("radial cache needs 0 < r_min < r_max and >= 4 nodes");
  const double l0 = std::log(r_min), l1 = std::log(r_max);
  const double step = (l1 - l0) / (count - 1);
  std::vector<double> values(count);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) values[i] = direct_(std::exp(l0 + step * i));
  // Endpoint slopes in log r from the direct transform; the spline's own
  // one-sided estimate is poor where the tail curves.
  auto slope = [&](double l) {
    const double d = 1e-4;
    return (direct_(std::exp(l + d)) - direct_(std::exp(l - d))) / (2.0 * d);
  };
  auto sp = std::make_shared<Spline>(Spline{
      boost::math::interpolators::cardinal_cubic_b_spline<double>(values.begin(), values.end(), l0, step, slope(l0), slope(l1)), l0});
  spline_ = sp;
}

double RadialCache::operator()(double r) const {
  if (r < r_min_ || r > r_max_) return direct_(r);
  return spline_->spline(std::log(r));
}

}  // namespace chfield
