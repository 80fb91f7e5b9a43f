#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chfield/linalg.hpp"

namespace chfield {

enum class Family { CH, Matern, GeneralizedCauchy };

const char* family_name(Family f);
Family parse_family(const std::string& s);

// Symmetric p x p parameter matrices plus nuggets. Which matrices matter depends on
// the family: CH uses nu/alpha/beta, Matern nu/phi, GC alpha/beta/phi.
struct ParamMatrixSet {
  Family family = Family::CH;
  Matrix nu, alpha, beta, phi, sigma;
  Vector tau;

  int p() const { return static_cast<int>(sigma.rows()); }
  // Throws ContractError on shape/symmetry problems, DomainError on bad values.
  void validate() const;
};

struct CHMarginal {
  double nu;
  double alpha;
  double beta;
};

// Averaged cross parameters: nu and alpha arithmetic means, beta^2 mean of squares.
ParamMatrixSet build_pars_like(const std::vector<CHMarginal>& marginals, const Matrix& sigma);

// Matern with averaged nu and phi_jk^2 = (phi_j^2 + phi_k^2)/2.
ParamMatrixSet build_matern_like(const std::vector<double>& nu, const std::vector<double>& phi, const Matrix& sigma);

// GC with shared shape parameters.
ParamMatrixSet build_gc_shared(double alpha, double beta, double phi, const Matrix& sigma);

struct ValidityReport {
  std::string condition;
  bool valid = true;
  double min_eigenvalue = 0.0;  // of the diagonally normalized condition matrix
  std::optional<double> witness;  // frequency (spectral checks) or index of failing condition
  std::string detail;
};

struct FrequencyGrid {
  double lo = 1e-5;
  double hi = 1e5;
  int count = 400;
  bool include_zero = false;
  std::vector<double> points() const;
};

enum class ValidityRule { Theorem1, Theorem2, Prop3, Spectral };

const char* rule_name(ValidityRule r);
ValidityRule parse_rule(const std::string& s);

// Condition matrix for the given rule; Spectral has none (throws).
Matrix condition_matrix(const ParamMatrixSet& params, int dim, ValidityRule rule);

ValidityReport check_theorem1(const ParamMatrixSet& params, int dim, bool cnsd_beta2 = false);
ValidityReport check_theorem2(const ParamMatrixSet& params, int dim);
ValidityReport check_prop3(const ParamMatrixSet& params, int dim);
ValidityReport check_spectral_validity(const ParamMatrixSet& params, int dim, const FrequencyGrid& grid = {});
ValidityReport check_validity(const ParamMatrixSet& params, int dim, ValidityRule rule,
                              const FrequencyGrid& grid = {});

// Matrix of f_jk(x) / sqrt(f_jj(x) f_kk(x)) at one frequency, sigma included.
Matrix normalized_spectral_matrix(const ParamMatrixSet& params, int dim, double x);
// Unnormalized matrix-valued spectral density.
Matrix spectral_matrix(const ParamMatrixSet& params, int dim, double x);

// Bivariate frontier: largest rho = sigma12/sqrt(sigma11 sigma22) accepted by the rule
// for averaged cross parameters and a common beta. Bisection on [0, 1].
double max_correlation(const CHMarginal& first, const CHMarginal& second, int dim, ValidityRule rule,
                       const FrequencyGrid& grid = {});

struct EquivalenceResult {
  bool identity_satisfied = false;
  Matrix first;   // microergodic matrix of the first set
  Matrix second;
  double max_relative_gap = 0.0;
};

EquivalenceResult check_equivalence_ch_ch(const ParamMatrixSet& a, const ParamMatrixSet& b, int dim);
EquivalenceResult check_equivalence_ch_matern(const ParamMatrixSet& ch, const ParamMatrixSet& matern, int dim);

// min over the grid of lambda_min(f(u) (1 + u)^(2 nu + d)), nu the mean marginal smoothness.
double check_assumption1(const ParamMatrixSet& params, int dim, const FrequencyGrid& grid = {});

}  // namespace chfield
