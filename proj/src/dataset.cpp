#include "chfield/dataset.hpp"

#include <cmath>
#include <map>

#include "chfield/errors.hpp"

namespace chfield {

const char* metric_name(DistanceMetric m) {
  return m == DistanceMetric::Euclidean ? "euclidean" : "great-circle-km";
}

void SpatialDataset::validate(int p) const {
  const int rows = n();
  if (rows < 1) throw ContractError("dataset is empty");
  if (locations.rows() != rows) throw ContractError("location rows do not match values");
  if (static_cast<int>(var_index.size()) != rows) throw ContractError("var_index length does not match values");
  if (!block.empty() && static_cast<int>(block.size()) != rows) throw ContractError("block labels do not match values");
  if (!unit.empty() && static_cast<int>(unit.size()) != rows) throw ContractError("unit labels do not match values");
  if (metric == DistanceMetric::GreatCircleKm && dim() != 2) throw ContractError("great-circle distance needs (lon, lat)");
  for (int i = 0; i < rows; ++i) {
    if (var_index[i] < 0 || var_index[i] >= p)
      throw ContractError("variable index out of range at row " + std::to_string(i + 1));
    if (!std::isfinite(values(i))) throw ContractError("non-finite value at row " + std::to_string(i + 1));
    for (int c = 0; c < dim(); ++c)
      if (!std::isfinite(locations(i, c))) throw ContractError("non-finite location at row " + std::to_string(i + 1));
  }
}

SpatialDataset SpatialDataset::subset(const std::vector<int>& rows) const {
  SpatialDataset out;
  out.metric = metric;
  out.locations.resize(static_cast<Eigen::Index>(rows.size()), locations.cols());
  out.values.resize(static_cast<Eigen::Index>(rows.size()));
  out.var_index.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int r = rows[i];
    out.locations.row(static_cast<Eigen::Index>(i)) = locations.row(r);
    out.values(static_cast<Eigen::Index>(i)) = values(r);
    out.var_index.push_back(var_index[r]);
    if (!block.empty()) out.block.push_back(block[r]);
    if (!unit.empty()) out.unit.push_back(unit[r]);
  }
  return out;
}

std::vector<std::vector<int>> SpatialDataset::block_rows() const {
  std::vector<std::vector<int>> groups;
  if (block.empty()) {
    groups.emplace_back();
    for (int i = 0; i < n(); ++i) groups.back().push_back(i);
    return groups;
  }
  std::map<std::string, std::size_t> index;
  for (int i = 0; i < n(); ++i) {
    auto [it, fresh] = index.try_emplace(block[i], groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  return groups;
}

double haversine_km(double lon1, double lat1, double lon2, double lat2) {
  const double rad = M_PI / 180.0;
  const double dlat = (lat2 - lat1) * rad, dlon = (lon2 - lon1) * rad;
  const double s = std::sin(0.5 * dlat), t = std::sin(0.5 * dlon);
  const double a = s * s + std::cos(lat1 * rad) * std::cos(lat2 * rad) * t * t;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

SpatialDataset concat(const SpatialDataset& a, const SpatialDataset& b) {
  if (a.dim() != b.dim() || a.metric != b.metric) throw ContractError("cannot concatenate datasets of different shape");
  if (a.block.empty() != b.block.empty() || a.unit.empty() != b.unit.empty())
    throw ContractError("cannot concatenate datasets with different label columns");
  SpatialDataset out;
  out.metric = a.metric;
  out.locations.resize(a.n() + b.n(), a.dim());
  out.locations << a.locations, b.locations;
  out.values.resize(a.n() + b.n());
  out.values << a.values, b.values;
  out.var_index = a.var_index;
  out.var_index.insert(out.var_index.end(), b.var_index.begin(), b.var_index.end());
  out.block = a.block;
  out.block.insert(out.block.end(), b.block.begin(), b.block.end());
  out.unit = a.unit;
  out.unit.insert(out.unit.end(), b.unit.begin(), b.unit.end());
  return out;
}

}  // namespace chfield
