#include "chfield/parameterize.hpp"

#include <cmath>

#include "chfield/errors.hpp"

namespace chfield {

namespace {

constexpr double kGCAlphaMax = 2.0;

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::max(std::abs(a), std::abs(b))); }

std::string idx(int j) { return std::to_string(j + 1); }

std::string idx(int j, int k) { return std::to_string(j + 1) + std::to_string(k + 1); }

bool uses_condition_scale(const ModelShape& s) {
  if (s.rule == ValidityRule::Spectral) return false;
  return s.kind == SpecKind::CH || s.kind == SpecKind::Matern;
}

}  // namespace

Parameterization::Parameterization(ModelShape shape) : shape_(shape) {
  const int p = shape_.p;
  if (p < 1) throw ContractError("parameterization needs p >= 1");
  if (shape_.dim < 1 || shape_.dim > 3) throw DomainError("dimension must be 1, 2 or 3");
  auto per = [&](const std::string& base) {
    for (int j = 0; j < p; ++j) names_.push_back(base + idx(j));
  };
  switch (shape_.kind) {
    case SpecKind::CH:
    case SpecKind::SpectralCH:
      per("log_nu");
      per(shape_.kind == SpecKind::CH ? "log_alpha" : "log_alpha_excess");
      if (shape_.shared_scale) names_.push_back("log_beta");
      else per("log_beta");
      break;
    case SpecKind::Matern:
      per("log_nu");
      if (shape_.shared_scale) names_.push_back("log_phi");
      else per("log_phi");
      break;
    case SpecKind::GeneralizedCauchy:
      names_.push_back("logit_alpha");
      names_.push_back("log_beta");
      names_.push_back("log_phi");
      break;
    default:
      throw UnsupportedCaseError(std::string("no fitting parameterization for ") + kind_name(shape_.kind));
  }
  per("log_sigma");
  for (int j = 0; j < p; ++j)
    for (int k = j + 1; k < p; ++k) names_.push_back("atanh_r" + idx(j, k));
  if (shape_.nugget) per("log_tau");
}

Matrix Parameterization::cross_scale(const ParamMatrixSet& ps) const {
  if (!uses_condition_scale(shape_)) return Matrix::Ones(ps.p(), ps.p());
  ParamMatrixSet unit = ps;
  unit.sigma = Matrix::Ones(ps.p(), ps.p());
  return condition_matrix(unit, shape_.dim, shape_.rule);
}

double Parameterization::sigma_from_r(const ParamMatrixSet& ps, int j, int k, double r) const {
  const Matrix c = cross_scale(ps);
  return r * std::sqrt(ps.sigma(j, j) * c(j, j) * ps.sigma(k, k) * c(k, k)) / c(j, k);
}

double Parameterization::r_from_sigma(const ParamMatrixSet& ps, int j, int k) const {
  const Matrix c = cross_scale(ps);
  return ps.sigma(j, k) * c(j, k) / std::sqrt(ps.sigma(j, j) * c(j, j) * ps.sigma(k, k) * c(k, k));
}

CovarianceSpec Parameterization::untransform(const Vector& theta) const {
  if (theta.size() != size()) throw ContractError("parameter vector has the wrong length");
  const int p = shape_.p, d = shape_.dim;
  int at = 0;
  auto take = [&]() { return theta(at++); };
  auto take_per = [&](bool shared) {
    std::vector<double> v(p);
    if (shared) {
      const double x = std::exp(take());
      for (auto& e : v) e = x;
    } else {
      for (auto& e : v) e = std::exp(take());
    }
    return v;
  };

  ParamMatrixSet ps;
  std::vector<SpectralMarginal> marginals;
  switch (shape_.kind) {
    case SpecKind::CH:
    case SpecKind::SpectralCH: {
      const auto nu = take_per(false);
      auto alpha = take_per(false);
      if (shape_.kind == SpecKind::SpectralCH)
        for (auto& a : alpha) a += 0.5 * d;
      const auto beta = take_per(shape_.shared_scale);
      std::vector<CHMarginal> m(p);
      for (int j = 0; j < p; ++j) {
        m[j] = {nu[j], alpha[j], beta[j]};
        marginals.push_back(SpectralMarginal::ch(nu[j], alpha[j], beta[j]));
      }
      ps = build_pars_like(m, Matrix::Identity(p, p));
      break;
    }
    case SpecKind::Matern: {
      const auto nu = take_per(false);
      const auto phi = take_per(shape_.shared_scale);
      ps = build_matern_like(nu, phi, Matrix::Identity(p, p));
      break;
    }
    case SpecKind::GeneralizedCauchy: {
      const double alpha = kGCAlphaMax / (1.0 + std::exp(-take()));
      const double beta = std::exp(take());
      const double phi = std::exp(take());
      ps = build_gc_shared(alpha, beta, phi, Matrix::Identity(p, p));
      break;
    }
    default:
      throw UnsupportedCaseError("unsupported kind");
  }
  for (int j = 0; j < p; ++j) ps.sigma(j, j) = std::exp(take());
  const Matrix c = cross_scale(ps);
  for (int j = 0; j < p; ++j)
    for (int k = j + 1; k < p; ++k) {
      const double r = std::tanh(take());
      const double s = r * std::sqrt(ps.sigma(j, j) * c(j, j) * ps.sigma(k, k) * c(k, k)) / c(j, k);
      ps.sigma(j, k) = s;
      ps.sigma(k, j) = s;
    }
  Vector tau = Vector::Zero(p);
  if (shape_.nugget)
    for (int j = 0; j < p; ++j) tau(j) = std::exp(take());
  ps.tau = tau;

  if (shape_.kind == SpecKind::SpectralCH) {
    SpectralCrossSpec sp;
    sp.dim = d;
    sp.marginals = marginals;
    sp.sigma = ps.sigma.cast<std::complex<double>>();
    return CovarianceSpec::from_spectral(sp, tau);
  }
  return CovarianceSpec::from_params(ps, d);
}

Vector Parameterization::transform(const CovarianceSpec& spec) const {
  const int p = shape_.p, d = shape_.dim;
  if (spec.kind != shape_.kind) throw ContractError("spec kind does not match the parameterization");
  if (spec.p() != p || spec.dim != d) throw ContractError("spec size does not match the parameterization");
  Vector theta(size());
  int at = 0;
  auto put = [&](double v) { theta(at++) = v; };
  auto put_per = [&](const std::vector<double>& v, bool shared, const char* what) {
    if (shared) {
      for (double e : v)
        if (!close(e, v[0])) throw ContractError(std::string("shared ") + what + " differs across processes");
      put(std::log(v[0]));
    } else {
      for (double e : v) put(std::log(e));
    }
  };

  ParamMatrixSet ps;
  if (spec.kind == SpecKind::SpectralCH) {
    const auto& sp = spec.spectral;
    std::vector<double> nu, excess, beta;
    for (const auto& m : sp.marginals) {
      nu.push_back(m.nu);
      excess.push_back(m.alpha - 0.5 * d);
      beta.push_back(m.beta);
    }
    put_per(nu, false, "nu");
    put_per(excess, false, "alpha");
    put_per(beta, shape_.shared_scale, "beta");
    ps.family = Family::CH;
    ps.sigma = sp.sigma.real();
    ps.tau = spec.nugget();
  } else {
    ps = spec.params;
    std::vector<double> diag_nu(p), diag_alpha(p), diag_beta(p), diag_phi(p);
    switch (spec.kind) {
      case SpecKind::CH: {
        std::vector<CHMarginal> m(p);
        for (int j = 0; j < p; ++j) m[j] = {ps.nu(j, j), ps.alpha(j, j), ps.beta(j, j)};
        const ParamMatrixSet want = build_pars_like(m, ps.sigma);
        for (int j = 0; j < p; ++j)
          for (int k = 0; k < p; ++k)
            if (!close(want.nu(j, k), ps.nu(j, k)) || !close(want.alpha(j, k), ps.alpha(j, k)) ||
                !close(want.beta(j, k), ps.beta(j, k)))
              throw ContractError("CH cross parameters are not the averaged form");
        for (int j = 0; j < p; ++j) {
          diag_nu[j] = m[j].nu;
          diag_alpha[j] = m[j].alpha;
          diag_beta[j] = m[j].beta;
        }
        put_per(diag_nu, false, "nu");
        put_per(diag_alpha, false, "alpha");
        put_per(diag_beta, shape_.shared_scale, "beta");
        break;
      }
      case SpecKind::Matern: {
        for (int j = 0; j < p; ++j) {
          diag_nu[j] = ps.nu(j, j);
          diag_phi[j] = ps.phi(j, j);
        }
        const ParamMatrixSet want = build_matern_like(diag_nu, diag_phi, ps.sigma);
        for (int j = 0; j < p; ++j)
          for (int k = 0; k < p; ++k)
            if (!close(want.nu(j, k), ps.nu(j, k)) || !close(want.phi(j, k), ps.phi(j, k)))
              throw ContractError("Matern cross parameters are not the averaged form");
        put_per(diag_nu, false, "nu");
        put_per(diag_phi, shape_.shared_scale, "phi");
        break;
      }
      case SpecKind::GeneralizedCauchy: {
        const double a = ps.alpha(0, 0), b = ps.beta(0, 0), f = ps.phi(0, 0);
        for (int j = 0; j < p; ++j)
          for (int k = 0; k < p; ++k)
            if (!close(ps.alpha(j, k), a) || !close(ps.beta(j, k), b) || !close(ps.phi(j, k), f))
              throw ContractError("GC parameters must be shared");
        if (!(a > 0.0 && a < kGCAlphaMax)) throw DomainError("GC alpha must lie in (0, 2) for fitting");
        put(std::log(a / (kGCAlphaMax - a)));
        put(std::log(b));
        put(std::log(f));
        break;
      }
      default:
        throw UnsupportedCaseError("unsupported kind");
    }
  }
  for (int j = 0; j < p; ++j) put(std::log(ps.sigma(j, j)));
  const Matrix c = cross_scale(ps);
  for (int j = 0; j < p; ++j)
    for (int k = j + 1; k < p; ++k) {
      const double r = ps.sigma(j, k) * c(j, k) / std::sqrt(ps.sigma(j, j) * c(j, j) * ps.sigma(k, k) * c(k, k));
      if (!(std::abs(r) < 1.0)) throw ContractError("normalized cross term must lie strictly inside (-1, 1)");
      put(std::atanh(r));
    }
  if (shape_.nugget) {
    const Vector tau = spec.nugget();
    for (int j = 0; j < p; ++j) {
      if (!(tau(j) > 0.0)) throw ContractError("nugget fit needs positive starting nuggets");
      put(std::log(tau(j)));
    }
  }
  return theta;
}

}  // namespace chfield
