#pragma once

#include <cstdint>

#include <Eigen/Cholesky>

#include "chfield/covariance.hpp"
#include "chfield/dataset.hpp"

namespace chfield {

enum class Assembly { Parallel, Serial };

// Entry (i, l) = C_{var_a(i), var_b(l)}(s_a(i) - s_b(l)). When a and b are the same
// object the nugget is added on the diagonal.
Matrix cov_matrix(const CovarianceModel& model, const SpatialDataset& a, const SpatialDataset& b,
                  Assembly mode = Assembly::Parallel);

struct Factorization {
  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;  // added to the diagonal before the factorization succeeded
  double log_det() const;
};

// LLT with a diagonal jitter ladder (0, then 1e-12 ... 1e-6 times the mean diagonal).
// Throws NotPositiveDefiniteError carrying the failing pivot.
Factorization factorize(const Matrix& k);

double loglik(const CovarianceModel& model, const SpatialDataset& data);

struct PredictOptions {
  double level = 0.95;
  bool include_nugget = false;  // false predicts the latent field
};

struct PredictionResult {
  Vector mean;
  Vector variance;
  Vector lower;
  Vector upper;
};

// Targets carry locations, variables and (optionally) block labels; their values are ignored.
PredictionResult predict(const CovarianceModel& model, const SpatialDataset& train, const SpatialDataset& targets,
                         const PredictOptions& opts = {});

// L z with K = L L' over the dataset's locations/variables (values are ignored).
Vector simulate(const CovarianceModel& model, const SpatialDataset& design, std::uint64_t seed);

// Two-sided normal quantile for an interval level, e.g. 1.959964 at 0.95.
double interval_z(double level);

}  // namespace chfield
