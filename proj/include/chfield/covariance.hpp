#pragma once

#include <memory>
#include <string>
#include <vector>

#include "chfield/multivariate.hpp"
#include "chfield/spectralgen.hpp"

namespace chfield {

enum class SpecKind { Matern, CH, GeneralizedCauchy, SpectralCH, AsymSpectralCH1D, MaternCHHybrid };

const char* kind_name(SpecKind k);
SpecKind parse_kind(const std::string& s);

// Tagged covariance descriptor. Matern/CH/GC read `params`; the spectral kinds read
// `spectral` (cross terms from the square-root construction) and `spectral_tau`.
struct CovarianceSpec {
  SpecKind kind = SpecKind::CH;
  ParamMatrixSet params;
  SpectralCrossSpec spectral;
  Vector spectral_tau;
  int dim = 2;

  int p() const;
  Vector nugget() const;
  bool is_spectral() const;
  void validate() const;

  static CovarianceSpec from_params(const ParamMatrixSet& ps, int dim);
  static CovarianceSpec from_spectral(const SpectralCrossSpec& s, const Vector& tau);
};

struct ModelOptions {
  // Radial range tabulated for spectral cross terms; direct transforms outside it.
  // With `tabulate` the closed-form kinds use the same spline table (fitting speedup).
  double cache_r_min = 1e-3;
  double cache_r_max = 10.0;
  int cache_points = 160;
  bool use_cache = true;
  bool tabulate = false;
  HankelOptions hankel;
};

// Immutable evaluator of C_jk(lag). Safe for concurrent reads.
class CovarianceModel {
 public:
  explicit CovarianceModel(CovarianceSpec spec, const ModelOptions& opts = {});

  const CovarianceSpec& spec() const { return spec_; }
  int p() const { return p_; }
  int dim() const { return spec_.dim; }
  bool isotropic() const { return spec_.kind != SpecKind::AsymSpectralCH1D; }
  double nugget(int j) const { return tau_(j); }

  // Isotropic covariance at distance r >= 0.
  double radial(int j, int k, double r) const;
  // General covariance at lag s_a - s_b (length dim).
  double at_lag(int j, int k, const double* lag) const;

 private:
  struct Entry;
  CovarianceSpec spec_;
  int p_;
  Vector tau_;
  std::vector<std::shared_ptr<const Entry>> entries_;  // row-major p x p
};

}  // namespace chfield
