#pragma once

#include <limits>

#include "chfield/dataset.hpp"

namespace chfield {

struct DetrendOptions {
  double bandwidth = 1000.0;  // distance units; +inf gives a global linear fit
  int widen_attempts = 4;     // bandwidth doubles on each rank-deficient retry
};

struct DetrendResult {
  SpatialDataset residuals;
  Vector mean;                // fitted mean surface at each observation
  int widened = 0;            // evaluation points that needed a wider bandwidth
};

// Per-variable local linear smoother: Gaussian-weighted least squares on [1, coordinates]
// around each observation. Geographic data are fitted in local tangent-plane km.
DetrendResult local_linear_detrend(const SpatialDataset& data, const DetrendOptions& opts = {});

constexpr double kInfiniteBandwidth = std::numeric_limits<double>::infinity();

}  // namespace chfield
