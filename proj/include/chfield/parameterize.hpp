#pragma once

#include <string>
#include <vector>

#include "chfield/covariance.hpp"

namespace chfield {

// Which marginal and cross parameters a fit estimates.
struct ModelShape {
  SpecKind kind = SpecKind::CH;
  int p = 2;
  int dim = 2;
  bool shared_scale = true;  // one beta (CH) or one phi (Matern); GC always shares alpha/beta/phi
  bool nugget = false;
  ValidityRule rule = ValidityRule::Theorem1;
};

// Unconstrained coordinates for a parsimonious model. Positive parameters are logged,
// GC alpha is logit-mapped onto (0, 2), spectral CH alpha is d/2 + exp(t), and each
// off-diagonal sigma is atanh of its entry in the diagonally normalized condition matrix
// of the active rule (plain correlation for the spectral rule and spectral families).
class Parameterization {
 public:
  explicit Parameterization(ModelShape shape);

  const ModelShape& shape() const { return shape_; }
  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }

  // Throws ContractError when the covariance spec is not of this shape (e.g. cross terms not averaged).
  Vector transform(const CovarianceSpec& spec) const;
  CovarianceSpec untransform(const Vector& theta) const;

  // Off-diagonal sigma_jk for a normalized cross value r given the diagonal/marginal part of `ps`.
  double sigma_from_r(const ParamMatrixSet& ps, int j, int k, double r) const;
  double r_from_sigma(const ParamMatrixSet& ps, int j, int k) const;

 private:
  ModelShape shape_;
  std::vector<std::string> names_;
  Matrix cross_scale(const ParamMatrixSet& ps) const;
};

}  // namespace chfield
