#pragma once

#include <string>
#include <vector>

#include "chfield/linalg.hpp"

namespace chfield {

enum class DistanceMetric { Euclidean, GreatCircleKm };

const char* metric_name(DistanceMetric m);

// Long-format multivariate observations. var_index is 0-based here; files use 1..p.
struct SpatialDataset {
  Matrix locations;              // n x d; (lon, lat) in degrees for GreatCircleKm
  std::vector<int> var_index;
  Vector values;
  std::vector<std::string> block;  // independence blocks (e.g. year); empty means one block
  std::vector<std::string> unit;   // CV grouping label (e.g. float id); may be empty
  DistanceMetric metric = DistanceMetric::Euclidean;

  int n() const { return static_cast<int>(values.size()); }
  int dim() const { return static_cast<int>(locations.cols()); }
  bool has_blocks() const { return !block.empty(); }
  bool has_units() const { return !unit.empty(); }

  // Throws ContractError when shapes disagree, var_index is out of [0, p) or values are NaN.
  void validate(int p) const;
  SpatialDataset subset(const std::vector<int>& rows) const;
  // Rows grouped by block label in first-appearance order.
  std::vector<std::vector<int>> block_rows() const;
};

constexpr double kEarthRadiusKm = 6371.0088;

double haversine_km(double lon1, double lat1, double lon2, double lat2);

SpatialDataset concat(const SpatialDataset& a, const SpatialDataset& b);

}  // namespace chfield
