#include "chfield/multivariate.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "chfield/errors.hpp"
#include "chfield/kernels.hpp"
#include "chfield/specialfn.hpp"

namespace chfield {

namespace sf = specialfn;

namespace {

constexpr double kPsdTol = 1e-10;
constexpr double kStructTol = 1e-10;

bool close_rel(double a, double b, double tol = kStructTol) {
  return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

void check_matrix(const Matrix& m, int p, const char* name, bool positive_diag) {
  if (m.rows() != p || m.cols() != p) throw ContractError(std::string(name) + " must be " + std::to_string(p) + "x" + std::to_string(p));
  require_symmetric(m, name);
  if (positive_diag)
    for (int j = 0; j < p; ++j)
      if (!(m(j, j) > 0.0) || !std::isfinite(m(j, j))) throw DomainError(std::string(name) + " diagonal must be positive");
}

// Signed entries sign*exp(logabs) scaled to unit diagonal.
Matrix normalize_log(const Matrix& logabs, const Matrix& sign) {
  const Eigen::Index p = logabs.rows();
  Matrix r(p, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index k = 0; k < p; ++k) {
      if (sign(j, k) == 0.0)
        r(j, k) = 0.0;
      else
        r(j, k) = sign(j, k) * std::exp(logabs(j, k) - 0.5 * (logabs(j, j) + logabs(k, k)));
    }
  return r;
}

ValidityReport psd_report(const std::string& name, const Matrix& normalized) {
  ValidityReport rep;
  rep.condition = name;
  const auto er = eigen_range(normalized);
  rep.min_eigenvalue = er.min;
  rep.valid = er.min >= -kPsdTol * er.max_abs;
  if (!rep.valid) {
    rep.witness = 0.0;
    rep.detail = "condition matrix has a negative eigenvalue";
  }
  return rep;
}

ValidityReport failed(const std::string& name, double witness, const std::string& detail) {
  ValidityReport rep;
  rep.condition = name;
  rep.valid = false;
  rep.min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
  rep.witness = witness;
  rep.detail = detail;
  return rep;
}

bool averaged(const Matrix& m) {
  for (Eigen::Index j = 0; j < m.rows(); ++j)
    for (Eigen::Index k = 0; k < m.cols(); ++k)
      if (!close_rel(m(j, k), 0.5 * (m(j, j) + m(k, k)))) return false;
  return true;
}

bool squares_averaged(const Matrix& m) {
  for (Eigen::Index j = 0; j < m.rows(); ++j)
    for (Eigen::Index k = 0; k < m.cols(); ++k)
      if (!close_rel(m(j, k) * m(j, k), 0.5 * (m(j, j) * m(j, j) + m(k, k) * m(k, k)))) return false;
  return true;
}

bool all_equal(const Matrix& m) {
  for (Eigen::Index j = 0; j < m.rows(); ++j)
    for (Eigen::Index k = 0; k < m.cols(); ++k)
      if (!close_rel(m(j, k), m(0, 0))) return false;
  return true;
}

Matrix sign_of(const Matrix& m) {
  return m.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Matrix log_abs(const Matrix& m) {
  return m.unaryExpr([](double v) { return v == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(std::abs(v)); });
}

// ln f_jk(x) without sigma. CH densities at alpha = d/2 are finite for x > 0.
double log_unit_density(const ParamMatrixSet& ps, int j, int k, int dim, double x) {
  switch (ps.family) {
    case Family::CH: {
      const double hd = 0.5 * dim;
      const double a = ps.alpha(j, k);
      if (a < hd || (a == hd && x == 0.0))
        throw InfiniteDensityError("spectral density is infinite for alpha <= d/2");
      const double nu = ps.nu(j, k), be = ps.beta(j, k);
      const double z = 0.5 * be * be * x * x;
      return sf::log_gamma(nu + hd) + dim * std::log(be) - hd * std::log(2.0 * M_PI) - sf::log_beta(a, nu) +
             sf::log_kummer_u(nu + hd, 1.0 - a + hd, z);
    }
    case Family::Matern:
      return log_matern_sdf_unit(x, ps.nu(j, k), ps.phi(j, k), dim);
    case Family::GeneralizedCauchy:
      break;
  }
  throw UnsupportedCaseError("no closed-form spectral density for the generalized Cauchy family");
}

void check_dim(int dim) {
  if (dim < 1 || dim > 3) throw DomainError("dimension must be 1, 2 or 3");
}

}  // namespace

const char* family_name(Family f) {
  switch (f) {
    case Family::CH: return "ch";
    case Family::Matern: return "matern";
    case Family::GeneralizedCauchy: return "gc";
  }
  return "?";
}

Family parse_family(const std::string& s) {
  if (s == "ch") return Family::CH;
  if (s == "matern") return Family::Matern;
  if (s == "gc") return Family::GeneralizedCauchy;
  throw ConfigError("unknown family '" + s + "'");
}

const char* rule_name(ValidityRule r) {
  switch (r) {
    case ValidityRule::Theorem1: return "theorem1";
    case ValidityRule::Theorem2: return "theorem2";
    case ValidityRule::Prop3: return "prop3";
    case ValidityRule::Spectral: return "spectral";
  }
  return "?";
}

ValidityRule parse_rule(const std::string& s) {
  if (s == "theorem1") return ValidityRule::Theorem1;
  if (s == "theorem2") return ValidityRule::Theorem2;
  if (s == "prop3") return ValidityRule::Prop3;
  if (s == "spectral") return ValidityRule::Spectral;
  throw ConfigError("unknown validity rule '" + s + "'");
}

void ParamMatrixSet::validate() const {
  const int n = p();
  if (n < 1) throw ContractError("parameter set needs at least one process");
  check_matrix(sigma, n, "sigma", true);
  switch (family) {
    case Family::CH:
      check_matrix(nu, n, "nu", true);
      check_matrix(alpha, n, "alpha", true);
      check_matrix(beta, n, "beta", true);
      break;
    case Family::Matern:
      check_matrix(nu, n, "nu", true);
      check_matrix(phi, n, "phi", true);
      break;
    case Family::GeneralizedCauchy:
      check_matrix(alpha, n, "alpha", true);
      check_matrix(beta, n, "beta", true);
      check_matrix(phi, n, "phi", true);
      if (alpha.maxCoeff() > 2.0) throw DomainError("gc alpha must lie in (0, 2]");
      break;
  }
  if (tau.size() != n) throw ContractError("tau must have one entry per process");
  for (int j = 0; j < n; ++j)
    if (!(tau(j) >= 0.0)) throw DomainError("tau must be nonnegative");
}

ParamMatrixSet build_pars_like(const std::vector<CHMarginal>& marginals, const Matrix& sigma) {
  const int p = static_cast<int>(marginals.size());
  if (sigma.rows() != p || sigma.cols() != p) throw ContractError("sigma size does not match marginals");
  ParamMatrixSet ps;
  ps.family = Family::CH;
  ps.nu.resize(p, p);
  ps.alpha.resize(p, p);
  ps.beta.resize(p, p);
  for (int j = 0; j < p; ++j) {
    const auto& a = marginals[j];
    if (!(a.nu > 0 && a.alpha > 0 && a.beta > 0)) throw DomainError("marginal parameters must be positive");
    for (int k = 0; k < p; ++k) {
      const auto& b = marginals[k];
      ps.nu(j, k) = 0.5 * (a.nu + b.nu);
      ps.alpha(j, k) = 0.5 * (a.alpha + b.alpha);
      ps.beta(j, k) = j == k ? a.beta : std::sqrt(0.5 * (a.beta * a.beta + b.beta * b.beta));
    }
  }
  ps.sigma = sigma;
  ps.tau = Vector::Zero(p);
  return ps;
}

ParamMatrixSet build_matern_like(const std::vector<double>& nu, const std::vector<double>& phi, const Matrix& sigma) {
  const int p = static_cast<int>(nu.size());
  if (static_cast<int>(phi.size()) != p || sigma.rows() != p || sigma.cols() != p)
    throw ContractError("matern marginal sizes do not match sigma");
  ParamMatrixSet ps;
  ps.family = Family::Matern;
  ps.nu.resize(p, p);
  ps.phi.resize(p, p);
  for (int j = 0; j < p; ++j)
    for (int k = 0; k < p; ++k) {
      ps.nu(j, k) = 0.5 * (nu[j] + nu[k]);
      ps.phi(j, k) = j == k ? phi[j] : std::sqrt(0.5 * (phi[j] * phi[j] + phi[k] * phi[k]));
    }
  ps.sigma = sigma;
  ps.tau = Vector::Zero(p);
  return ps;
}

ParamMatrixSet build_gc_shared(double alpha, double beta, double phi, const Matrix& sigma) {
  const Eigen::Index p = sigma.rows();
  ParamMatrixSet ps;
  ps.family = Family::GeneralizedCauchy;
  ps.alpha = Matrix::Constant(p, p, alpha);
  ps.beta = Matrix::Constant(p, p, beta);
  ps.phi = Matrix::Constant(p, p, phi);
  ps.sigma = sigma;
  ps.tau = Vector::Zero(p);
  return ps;
}

std::vector<double> FrequencyGrid::points() const {
  std::vector<double> pts;
  if (include_zero) pts.push_back(0.0);
  if (count == 1) {
    pts.push_back(lo);
    return pts;
  }
  const double l0 = std::log(lo), l1 = std::log(hi);
  for (int i = 0; i < count; ++i) pts.push_back(std::exp(l0 + (l1 - l0) * i / (count - 1)));
  return pts;
}

namespace {

// Log-magnitude of the condition matrix entries for the algebraic rules.
Matrix condition_log(const ParamMatrixSet& ps, int dim, ValidityRule rule) {
  const int p = ps.p();
  const double hd = 0.5 * dim;
  Matrix l(p, p);
  const Matrix ls = log_abs(ps.sigma);
  for (int j = 0; j < p; ++j)
    for (int k = 0; k < p; ++k) {
      double v = ls(j, k);
      if (ps.family == Family::GeneralizedCauchy) {
        l(j, k) = v;
        continue;
      }
      const double nu = ps.nu(j, k);
      if (ps.family == Family::Matern) {
        // Common-range parsimonious Matern: sigma Gamma(nu + d/2) / Gamma(nu).
        l(j, k) = v + sf::log_gamma(nu + hd) - sf::log_gamma(nu);
        continue;
      }
      const double a = ps.alpha(j, k), be = ps.beta(j, k);
      switch (rule) {
        case ValidityRule::Theorem1:
          v += 2.0 * a * std::log(be) + sf::log_gamma(nu + hd) - sf::log_gamma(nu) - sf::log_gamma(a);
          break;
        case ValidityRule::Theorem2:
          v += -sf::log_gamma(nu) - sf::log_gamma(a) + (nu + hd) * std::log(nu) - nu + 2.0 * a * std::log(be);
          break;
        case ValidityRule::Prop3:
          v -= sf::log_beta(a, nu);
          break;
        case ValidityRule::Spectral:
          throw ContractError("spectral rule has no condition matrix");
      }
      l(j, k) = v;
    }
  return l;
}

}  // namespace

Matrix condition_matrix(const ParamMatrixSet& params, int dim, ValidityRule rule) {
  const Matrix l = condition_log(params, dim, rule);
  const Matrix s = sign_of(params.sigma);
  Matrix out(l.rows(), l.cols());
  for (Eigen::Index j = 0; j < l.rows(); ++j)
    for (Eigen::Index k = 0; k < l.cols(); ++k) out(j, k) = s(j, k) == 0.0 ? 0.0 : s(j, k) * std::exp(l(j, k));
  return out;
}

ValidityReport check_theorem1(const ParamMatrixSet& params, int dim, bool cnsd_beta2) {
  params.validate();
  check_dim(dim);
  if (params.family == Family::GeneralizedCauchy)
    return psd_report("gc sigma psd", normalize_log(log_abs(params.sigma), sign_of(params.sigma)));
  if (!averaged(params.nu)) throw ContractError("theorem1: nu_jk must equal (nu_j + nu_k)/2");
  if (params.family == Family::Matern) {
    if (!all_equal(params.phi)) throw ContractError("theorem1: matern form needs a common phi");
    return psd_report("matern parsimonious", normalize_log(condition_log(params, dim, ValidityRule::Theorem1), sign_of(params.sigma)));
  }
  if (!averaged(params.alpha)) throw ContractError("theorem1: alpha_jk must equal (alpha_j + alpha_k)/2");
  if (cnsd_beta2) {
    const Matrix b2 = params.beta.cwiseProduct(params.beta);
    if (!is_cnsd(b2)) return failed("theorem1 beta^2 cnsd", 0.0, "beta^2 is not conditionally negative semidefinite");
  } else if (!squares_averaged(params.beta)) {
    throw ContractError("theorem1: beta_jk^2 must equal (beta_j^2 + beta_k^2)/2");
  }
  return psd_report("theorem1", normalize_log(condition_log(params, dim, ValidityRule::Theorem1), sign_of(params.sigma)));
}

ValidityReport check_theorem2(const ParamMatrixSet& params, int dim) {
  params.validate();
  check_dim(dim);
  if (params.family != Family::CH) throw UnsupportedCaseError("theorem2 applies to the CH family only");
  if (params.p() == 1) {
    ValidityReport rep;
    rep.condition = "theorem2";
    rep.min_eigenvalue = 1.0;
    return rep;
  }
  if (!averaged(params.alpha)) return failed("theorem2 alpha averaging", 1.0, "alpha_jk != (alpha_jj + alpha_kk)/2");
  if (!is_cnsd(params.nu)) return failed("theorem2 nu cnsd", 2.0, "nu is not conditionally negative semidefinite");
  if (!is_cnsd(params.beta)) return failed("theorem2 beta cnsd", 3.0, "beta is not conditionally negative semidefinite");
  auto rep = psd_report("theorem2", normalize_log(condition_log(params, dim, ValidityRule::Theorem2), sign_of(params.sigma)));
  if (!rep.valid) rep.witness = 4.0;
  return rep;
}

ValidityReport check_prop3(const ParamMatrixSet& params, int dim) {
  params.validate();
  check_dim(dim);
  if (params.family != Family::CH) throw UnsupportedCaseError("prop3 applies to the CH family only");
  const int p = params.p();
  const double hd = 0.5 * dim;
  if (!averaged(params.nu)) throw ContractError("prop3: nu_jk must equal (nu_j + nu_k)/2");
  for (int j = 0; j < p; ++j)
    if (params.alpha(j, j) < hd) throw ContractError("prop3: alpha_j must exceed d/2");
  for (int j = 0; j < p; ++j)
    for (int k = 0; k < p; ++k)
      if (params.alpha(j, k) < 0.5 * (params.alpha(j, j) + params.alpha(k, k)) * (1.0 - kStructTol))
        throw ContractError("prop3: alpha_jk must be at least (alpha_j + alpha_k)/2");
  if (!all_equal(params.beta)) throw ContractError("prop3: beta must be common to all processes");
  return psd_report("prop3", normalize_log(condition_log(params, dim, ValidityRule::Prop3), sign_of(params.sigma)));
}

Matrix normalized_spectral_matrix(const ParamMatrixSet& params, int dim, double x) {
  const int p = params.p();
  Matrix l(p, p);
  const Matrix ls = log_abs(params.sigma);
  for (int j = 0; j < p; ++j)
    for (int k = j; k < p; ++k) l(j, k) = l(k, j) = ls(j, k) + log_unit_density(params, j, k, dim, x);
  return normalize_log(l, sign_of(params.sigma));
}

Matrix spectral_matrix(const ParamMatrixSet& params, int dim, double x) {
  const int p = params.p();
  Matrix f(p, p);
  for (int j = 0; j < p; ++j)
    for (int k = j; k < p; ++k) f(j, k) = f(k, j) = params.sigma(j, k) * std::exp(log_unit_density(params, j, k, dim, x));
  return f;
}

ValidityReport check_spectral_validity(const ParamMatrixSet& params, int dim, const FrequencyGrid& grid) {
  params.validate();
  check_dim(dim);
  const auto pts = grid.points();
  const double hd = 0.5 * dim;
  if (params.family == Family::CH) {
    const bool has_zero = !pts.empty() && pts.front() == 0.0;
    for (int j = 0; j < params.p(); ++j)
      for (int k = 0; k < params.p(); ++k)
        if (params.alpha(j, k) < hd || (has_zero && params.alpha(j, k) <= hd))
          throw InfiniteDensityError("spectral check: alpha_jk <= d/2 gives an infinite density");
  }
  const int n = static_cast<int>(pts.size());
  std::vector<double> mins(n);
  std::vector<int> bad(n, 0);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const auto er = eigen_range(normalized_spectral_matrix(params, dim, pts[i]));
    mins[i] = er.min;
    bad[i] = er.min < -kPsdTol * er.max_abs;
  }
  ValidityReport rep;
  rep.condition = "spectral";
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    if (mins[i] < rep.min_eigenvalue) rep.min_eigenvalue = mins[i];
    if (bad[i] && rep.valid) {
      rep.valid = false;
      rep.witness = pts[i];
      rep.detail = "spectral matrix indefinite at frequency " + std::to_string(pts[i]);
    }
  }
  return rep;
}

ValidityReport check_validity(const ParamMatrixSet& params, int dim, ValidityRule rule, const FrequencyGrid& grid) {
  switch (rule) {
    case ValidityRule::Theorem1: return check_theorem1(params, dim);
    case ValidityRule::Theorem2: return check_theorem2(params, dim);
    case ValidityRule::Prop3: return check_prop3(params, dim);
    case ValidityRule::Spectral:
      if (params.family == Family::GeneralizedCauchy) return check_theorem1(params, dim);
      return check_spectral_validity(params, dim, grid);
  }
  throw ContractError("unknown rule");
}

double max_correlation(const CHMarginal& first, const CHMarginal& second, int dim, ValidityRule rule,
                       const FrequencyGrid& grid) {
  check_dim(dim);
  if (!close_rel(first.beta, second.beta)) throw ContractError("max_correlation expects a common beta");
  Matrix sigma = Matrix::Identity(2, 2);
  sigma(0, 1) = sigma(1, 0) = 1.0;
  const ParamMatrixSet base = build_pars_like({first, second}, sigma);

  // Accept(rho) for a bivariate normalized matrix [[1, rho r],[rho r, 1]]: 1 - rho|r| >= -tol (1 + rho|r|).
  std::vector<double> ratios;
  if (rule == ValidityRule::Spectral) {
    const auto pts = grid.points();
    ratios.resize(pts.size());
    const int n = static_cast<int>(pts.size());
    const double hd = 0.5 * dim;
    if (base.alpha.minCoeff() < hd) throw InfiniteDensityError("spectral frontier: alpha below d/2");
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) ratios[i] = std::abs(normalized_spectral_matrix(base, dim, pts[i])(0, 1));
  } else {
    if (rule == ValidityRule::Prop3) (void)check_prop3(base, dim);
    const Matrix c = normalize_log(condition_log(base, dim, rule), sign_of(base.sigma));
    ratios.push_back(std::abs(c(0, 1)));
  }
  auto accept = [&](double rho) {
    for (double r : ratios)
      if (1.0 - rho * r < -kPsdTol * (1.0 + rho * r)) return false;
    return true;
  };
  if (accept(1.0)) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    (accept(mid) ? lo : hi) = mid;
  }
  return lo;
}

namespace {

double common_nu(const ParamMatrixSet& ps) {
  if (!all_equal(ps.nu)) throw UnsupportedCaseError("equivalence check needs a common nu across all entries");
  return ps.nu(0, 0);
}

EquivalenceResult compare(const Matrix& a, const Matrix& b) {
  EquivalenceResult r;
  r.first = a;
  r.second = b;
  r.identity_satisfied = true;
  for (Eigen::Index j = 0; j < a.rows(); ++j)
    for (Eigen::Index k = 0; k < a.cols(); ++k) {
      const double scale = std::max(std::abs(a(j, k)), std::abs(b(j, k)));
      const double gap = scale == 0.0 ? 0.0 : std::abs(a(j, k) - b(j, k)) / scale;
      r.max_relative_gap = std::max(r.max_relative_gap, gap);
      if (gap > 1e-10) r.identity_satisfied = false;
    }
  return r;
}

Matrix ch_microergodic(const ParamMatrixSet& ps, double nu, int dim) {
  const int p = ps.p();
  Matrix m(p, p);
  for (int j = 0; j < p; ++j)
    for (int k = 0; k < p; ++k) {
      const double a = ps.alpha(j, k);
      if (!(a > 0.5 * dim)) throw ContractError("equivalence check needs alpha_jk > d/2");
      m(j, k) = ps.sigma(j, k) *
                std::exp(sf::log_gamma(nu + a) - 2.0 * nu * std::log(ps.beta(j, k)) - sf::log_gamma(a));
    }
  return m;
}

}  // namespace

EquivalenceResult check_equivalence_ch_ch(const ParamMatrixSet& a, const ParamMatrixSet& b, int dim) {
  check_dim(dim);
  a.validate();
  b.validate();
  if (a.family != Family::CH || b.family != Family::CH) throw ContractError("both parameter sets must be CH");
  if (a.p() != b.p()) throw ContractError("parameter sets differ in process count");
  const double nu = common_nu(a);
  if (!close_rel(nu, common_nu(b))) throw UnsupportedCaseError("equivalence check needs the same nu in both sets");
  return compare(ch_microergodic(a, nu, dim), ch_microergodic(b, nu, dim));
}

EquivalenceResult check_equivalence_ch_matern(const ParamMatrixSet& ch, const ParamMatrixSet& matern, int dim) {
  check_dim(dim);
  ch.validate();
  matern.validate();
  if (ch.family != Family::CH || matern.family != Family::Matern) throw ContractError("expected a CH set and a Matern set");
  if (ch.p() != matern.p()) throw ContractError("parameter sets differ in process count");
  const double nu = common_nu(ch);
  if (!close_rel(nu, common_nu(matern))) throw UnsupportedCaseError("equivalence check needs the same nu in both sets");
  Matrix m1 = ch_microergodic(ch, nu, dim) * std::exp(nu * M_LN2);
  const int p = ch.p();
  Matrix m2(p, p);
  for (int j = 0; j < p; ++j)
    for (int k = 0; k < p; ++k) m2(j, k) = matern.sigma(j, k) * std::exp(-2.0 * nu * std::log(matern.phi(j, k)));
  return compare(m1, m2);
}

double check_assumption1(const ParamMatrixSet& params, int dim, const FrequencyGrid& grid) {
  params.validate();
  check_dim(dim);
  const auto pts = grid.points();
  const double nu_bar = params.nu.diagonal().mean();
  const int n = static_cast<int>(pts.size());
  std::vector<double> mins(n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const double u = pts[i];
    const Matrix f = spectral_matrix(params, dim, u) * std::pow(1.0 + u, 2.0 * nu_bar + dim);
    mins[i] = eigen_range(f).min;
  }
  double m = std::numeric_limits<double>::infinity();
  for (double v : mins) m = std::min(m, v);
  return m;
}

}  // namespace chfield
