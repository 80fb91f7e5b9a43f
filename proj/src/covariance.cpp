#include "chfield/covariance.hpp"

#include <cmath>
#include <optional>

#include "chfield/errors.hpp"
#include "chfield/kernels.hpp"
#include "chfield/specialfn.hpp"

namespace chfield {

namespace sf = specialfn;

const char* kind_name(SpecKind k) {
  switch (k) {
    case SpecKind::Matern: return "matern";
    case SpecKind::CH: return "ch";
    case SpecKind::GeneralizedCauchy: return "gc";
    case SpecKind::SpectralCH: return "spectral-ch";
    case SpecKind::AsymSpectralCH1D: return "asym-spectral-ch";
    case SpecKind::MaternCHHybrid: return "matern-ch";
  }
  return "?";
}

SpecKind parse_kind(const std::string& s) {
  if (s == "matern") return SpecKind::Matern;
  if (s == "ch") return SpecKind::CH;
  if (s == "gc") return SpecKind::GeneralizedCauchy;
  if (s == "spectral-ch") return SpecKind::SpectralCH;
  if (s == "asym-spectral-ch") return SpecKind::AsymSpectralCH1D;
  if (s == "matern-ch") return SpecKind::MaternCHHybrid;
  throw ConfigError("unknown covariance family '" + s + "'");
}

bool CovarianceSpec::is_spectral() const {
  return kind == SpecKind::SpectralCH || kind == SpecKind::AsymSpectralCH1D || kind == SpecKind::MaternCHHybrid;
}

int CovarianceSpec::p() const { return is_spectral() ? spectral.p() : params.p(); }

Vector CovarianceSpec::nugget() const {
  if (is_spectral()) return spectral_tau.size() == p() ? spectral_tau : Vector::Zero(p());
  return params.tau;
}

void CovarianceSpec::validate() const {
  if (dim < 1 || dim > 3) throw DomainError("dimension must be 1, 2 or 3");
  if (is_spectral()) {
    if (spectral.dim != dim) throw ContractError("spectral spec dimension differs from covariance dimension");
    spectral.validate(kind == SpecKind::AsymSpectralCH1D);
    if (kind == SpecKind::AsymSpectralCH1D && dim != 1) throw UnsupportedCaseError("asymmetric form needs d = 1");
    if (kind == SpecKind::SpectralCH || kind == SpecKind::AsymSpectralCH1D)
      for (const auto& m : spectral.marginals)
        if (m.kind != SpectralMarginal::Kind::CH) throw ContractError("spectral-ch marginals must all be CH");
    const Vector t = nugget();
    for (int j = 0; j < t.size(); ++j)
      if (!(t(j) >= 0.0)) throw DomainError("nuggets must be nonnegative");
    return;
  }
  params.validate();
  const Family want = kind == SpecKind::CH ? Family::CH : (kind == SpecKind::Matern ? Family::Matern : Family::GeneralizedCauchy);
  if (params.family != want) throw ContractError("parameter family does not match covariance kind");
}

CovarianceSpec CovarianceSpec::from_params(const ParamMatrixSet& ps, int dim) {
  CovarianceSpec s;
  s.kind = ps.family == Family::CH ? SpecKind::CH : (ps.family == Family::Matern ? SpecKind::Matern : SpecKind::GeneralizedCauchy);
  s.params = ps;
  s.dim = dim;
  return s;
}

CovarianceSpec CovarianceSpec::from_spectral(const SpectralCrossSpec& sp, const Vector& tau) {
  CovarianceSpec s;
  bool any_matern = false;
  bool complex_sigma = false;
  for (const auto& m : sp.marginals) any_matern |= m.kind == SpectralMarginal::Kind::Matern;
  for (int j = 0; j < sp.sigma.rows(); ++j)
    for (int k = 0; k < sp.sigma.cols(); ++k) complex_sigma |= sp.sigma(j, k).imag() != 0.0;
  s.kind = any_matern ? SpecKind::MaternCHHybrid : (complex_sigma ? SpecKind::AsymSpectralCH1D : SpecKind::SpectralCH);
  s.spectral = sp;
  s.spectral_tau = tau;
  s.dim = sp.dim;
  return s;
}

struct CovarianceModel::Entry {
  enum class Type { Zero, CH, Matern, GC, Spectral, Asym };
  Type type = Type::Zero;
  double sigma = 0.0;
  double sign = 1.0;
  double log_pref = 0.0;
  double a = 0.0, b = 0.0, scale = 0.0;  // CH: U(a, b, r^2 scale); Matern: nu = a, 1/phi = scale
  double gc_alpha = 0.0, gc_ratio = 0.0;
  std::optional<RadialCache> even, odd, table;
  std::function<double(double)> even_direct, odd_direct;

  double radial(double r) const {
    if (table && r > 0.0) return (*table)(r);
    return exact(r);
  }

  double exact(double r) const {
    switch (type) {
      case Type::Zero: return 0.0;
      case Type::CH:
        if (r == 0.0) return sigma;
        return sign * std::exp(log_pref + sf::log_kummer_u(a, b, r * r * scale));
      case Type::Matern: {
        if (r == 0.0) return sigma;
        const double x = r * scale;
        const auto k = sf::bessel_k_checked(a, x);
        if (k.underflow) return 0.0;
        return sign * std::exp(log_pref + a * std::log(x) + std::log(k.value));
      }
      case Type::GC:
        if (r == 0.0) return sigma;
        return sigma * std::pow(1.0 + std::pow(r * scale, gc_alpha), -gc_ratio);
      case Type::Spectral:
      case Type::Asym:
        return even ? (*even)(r) : even_direct(r);
    }
    return 0.0;
  }

  double signed_lag(double h) const {
    if (type != Type::Asym) return radial(std::abs(h));
    const double r = std::abs(h);
    const double e = even ? (*even)(r) : even_direct(r);
    const double o = r == 0.0 ? 0.0 : (odd ? (*odd)(r) : odd_direct(r));
    return h < 0.0 ? e - o : e + o;
  }
};

CovarianceModel::CovarianceModel(CovarianceSpec spec, const ModelOptions& opts) : spec_(std::move(spec)) {
  spec_.validate();
  p_ = spec_.p();
  tau_ = spec_.nugget();
  entries_.resize(static_cast<std::size_t>(p_) * p_);
  const int d = spec_.dim;

  for (int j = 0; j < p_; ++j)
    for (int k = 0; k < p_; ++k) {
      if (k < j && spec_.kind != SpecKind::AsymSpectralCH1D) {
        entries_[j * p_ + k] = entries_[k * p_ + j];
        continue;
      }
      auto e = std::make_shared<Entry>();
      if (!spec_.is_spectral()) {
        const auto& ps = spec_.params;
        const double s = ps.sigma(j, k);
        e->sigma = s;
        e->sign = s < 0.0 ? -1.0 : 1.0;
        if (s == 0.0) {
          e->type = Entry::Type::Zero;
        } else if (spec_.kind == SpecKind::CH) {
          e->type = Entry::Type::CH;
          const double nu = ps.nu(j, k), al = ps.alpha(j, k), be = ps.beta(j, k);
          e->log_pref = std::log(std::abs(s)) + sf::log_gamma(nu + al) - sf::log_gamma(nu);
          e->a = al;
          e->b = 1.0 - nu;
          e->scale = 1.0 / (2.0 * be * be);
        } else if (spec_.kind == SpecKind::Matern) {
          e->type = Entry::Type::Matern;
          const double nu = ps.nu(j, k);
          e->log_pref = std::log(std::abs(s)) + (1.0 - nu) * M_LN2 - sf::log_gamma(nu);
          e->a = nu;
          e->scale = 1.0 / ps.phi(j, k);
        } else {
          e->type = Entry::Type::GC;
          e->gc_alpha = ps.alpha(j, k);
          e->gc_ratio = ps.beta(j, k) / ps.alpha(j, k);
          e->scale = 1.0 / ps.phi(j, k);
        }
      } else {
        const auto& sp = spec_.spectral;
        const auto& mj = sp.marginals[j];
        const std::complex<double> s = sp.sigma(j, k);
        e->sigma = s.real();
        e->sign = s.real() < 0.0 ? -1.0 : 1.0;
        if (j == k) {
          // Diagonal terms reduce to the closed-form marginal covariance.
          if (mj.kind == SpectralMarginal::Kind::CH) {
            e->type = Entry::Type::CH;
            e->log_pref = std::log(s.real()) + sf::log_gamma(mj.nu + mj.alpha) - sf::log_gamma(mj.nu);
            e->a = mj.alpha;
            e->b = 1.0 - mj.nu;
            e->scale = 1.0 / (2.0 * mj.beta * mj.beta);
          } else {
            e->type = Entry::Type::Matern;
            e->log_pref = std::log(s.real()) + (1.0 - mj.nu) * M_LN2 - sf::log_gamma(mj.nu);
            e->a = mj.nu;
            e->scale = 1.0 / mj.phi;
          }
        } else if (s == 0.0) {
          e->type = Entry::Type::Zero;
        } else {
          const bool asym = spec_.kind == SpecKind::AsymSpectralCH1D;
          e->type = asym ? Entry::Type::Asym : Entry::Type::Spectral;
          SpectralCrossSpec pair;
          pair.dim = d;
          pair.marginals = {sp.marginals[j], sp.marginals[k]};
          pair.sigma = Eigen::MatrixXcd::Identity(2, 2);
          const auto hopts = opts.hankel;
          const double re = s.real(), im = s.imag();
          if (asym) {
            pair.sigma(0, 1) = 1.0;
            pair.sigma(1, 0) = 1.0;
            SpectralCrossSpec odd_pair = pair;
            odd_pair.sigma(0, 1) = std::complex<double>(0.0, 1.0);
            odd_pair.sigma(1, 0) = std::complex<double>(0.0, -1.0);
            e->even_direct = [pair, re, hopts](double r) { return re == 0.0 ? 0.0 : re * asym_cross_cov_1d(r, pair, 0, 1, hopts); };
            e->odd_direct = [odd_pair, im, hopts](double r) { return im == 0.0 ? 0.0 : im * asym_cross_cov_1d(r, odd_pair, 0, 1, hopts); };
          } else {
            pair.sigma(0, 1) = 1.0;
            pair.sigma(1, 0) = 1.0;
            e->even_direct = [pair, re, hopts](double r) { return re * hankel_cross_cov(r, pair, 0, 1, hopts); };
          }
          if (opts.use_cache) {
            e->even.emplace(e->even_direct, opts.cache_r_min, opts.cache_r_max, opts.cache_points);
            if (asym) e->odd.emplace(e->odd_direct, opts.cache_r_min, opts.cache_r_max, opts.cache_points);
          }
        }
      }
      if (opts.tabulate && !spec_.is_spectral() && e->type != Entry::Type::Zero) {
        const Entry* raw = e.get();
        e->table.emplace([raw](double r) { return raw->exact(r); }, opts.cache_r_min, opts.cache_r_max,
                         opts.cache_points);
      }
      entries_[j * p_ + k] = e;
    }
}

double CovarianceModel::radial(int j, int k, double r) const {
  if (spec_.kind == SpecKind::AsymSpectralCH1D && j != k)
    throw ContractError("asymmetric cross-covariance needs a signed lag");
  return entries_[j * p_ + k]->radial(r);
}

double CovarianceModel::at_lag(int j, int k, const double* lag) const {
  if (spec_.kind == SpecKind::AsymSpectralCH1D) return entries_[j * p_ + k]->signed_lag(lag[0]);
  double r2 = 0.0;
  for (int i = 0; i < spec_.dim; ++i) r2 += lag[i] * lag[i];
  return entries_[j * p_ + k]->radial(std::sqrt(r2));
}

}  // namespace chfield
