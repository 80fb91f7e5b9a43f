#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "chfield/covariance.hpp"
#include "chfield/dataset.hpp"
#include "chfield/parameterize.hpp"

namespace chfield {

struct FitOptions {
  int max_evaluations = 2000;  // per restart
  double tolerance = 1e-5;     // loglik spread across the simplex
  int restarts = 3;
  double simplex_scale = 0.5;
  std::uint64_t seed = 0;
  // Spline tables for closed-form kernels during the search; the reported loglik is exact.
  bool tabulate = true;
  int table_points = 400;

  void validate() const;
};

struct TraceEntry {
  int restart = 0;
  int evaluation = 0;
  double loglik = 0.0;  // -inf for rejected candidates
};

struct FittedModel {
  CovarianceSpec spec;
  double loglik = 0.0;
  bool converged = false;
  int evaluations = 0;
  int best_restart = 0;
  std::vector<TraceEntry> trace;
  std::vector<double> best_so_far;  // running max of restart optima, in restart order
  std::vector<double> restart_loglik;
  std::vector<std::string> notes;   // initialization record
};

struct NelderMeadResult {
  Vector x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

// Minimizes f from x0 with an axis simplex of size `step`. f may return +inf for
// infeasible points. Stops when the value spread is at most `tol` (after one fresh
// simplex around the incumbent) or the budget runs out.
NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& x0, double step,
                             int max_evaluations, double tol);

// Default starting point: empirical variances, colocated correlations, nu 0.5, alpha 1,
// ranges at the median inter-point distance.
CovarianceSpec initial_spec(const ModelShape& shape, const SpatialDataset& data, std::vector<std::string>* notes = nullptr);

// True when the covariance spec passes the shape's validity rule.
bool passes_rule(const CovarianceSpec& spec, ValidityRule rule);

FittedModel fit(const ModelShape& shape, const SpatialDataset& data, const std::optional<CovarianceSpec>& init,
                const FitOptions& opts = {});

}  // namespace chfield
