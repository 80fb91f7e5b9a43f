#include "chfield/detrend.hpp"

#include <cmath>

#include <Eigen/QR>

#include "chfield/errors.hpp"

namespace chfield {

namespace {

// Offsets of row l from row i: tangent-plane km for geographic data.
void offsets(const SpatialDataset& d, int i, int l, double* out) {
  if (d.metric == DistanceMetric::GreatCircleKm) {
    const double k = kEarthRadiusKm * M_PI / 180.0;
    double dlon = d.locations(l, 0) - d.locations(i, 0);
    if (dlon > 180.0) dlon -= 360.0;
    if (dlon < -180.0) dlon += 360.0;
    out[0] = k * std::cos(d.locations(i, 1) * M_PI / 180.0) * dlon;
    out[1] = k * (d.locations(l, 1) - d.locations(i, 1));
    return;
  }
  for (int c = 0; c < d.dim(); ++c) out[c] = d.locations(l, c) - d.locations(i, c);
}

double distance(const SpatialDataset& d, int i, int l) {
  if (d.metric == DistanceMetric::GreatCircleKm)
    return haversine_km(d.locations(i, 0), d.locations(i, 1), d.locations(l, 0), d.locations(l, 1));
  return (d.locations.row(i) - d.locations.row(l)).norm();
}

// Intercept of the weighted local fit at row i, or NaN when the local design is rank deficient.
double local_fit(const SpatialDataset& d, const std::vector<int>& rows, int i, double bw) {
  const int m = static_cast<int>(rows.size());
  const int q = d.dim() + 1;
  Matrix x(m, q);
  Vector y(m);
  int used = 0;
  for (int a = 0; a < m; ++a) {
    const int l = rows[a];
    double w = 1.0;
    if (std::isfinite(bw)) {
      const double r = distance(d, i, l) / bw;
      w = std::exp(-0.5 * r * r);
    }
    if (!(w > 1e-150)) continue;
    const double sw = std::sqrt(w);
    double off[3];
    offsets(d, i, l, off);
    x(used, 0) = sw;
    for (int c = 0; c + 1 < q; ++c) x(used, c + 1) = sw * off[c];
    y(used) = sw * d.values(l);
    ++used;
  }
  if (used < q) return std::nan("");
  Eigen::ColPivHouseholderQR<Matrix> qr(x.topRows(used));
  qr.setThreshold(1e-10);
  if (qr.rank() < q) return std::nan("");
  return qr.solve(y.head(used))(0);
}

}  // namespace

DetrendResult local_linear_detrend(const SpatialDataset& data, const DetrendOptions& opts) {
  if (!(opts.bandwidth > 0.0)) throw DomainError("bandwidth must be positive");
  if (data.n() < 1) throw ContractError("dataset is empty");
  int p = 0;
  for (int v : data.var_index) p = std::max(p, v + 1);
  data.validate(p);

  std::vector<std::vector<int>> by_var(p);
  for (int i = 0; i < data.n(); ++i) by_var[data.var_index[i]].push_back(i);

  DetrendResult res;
  res.mean = Vector::Zero(data.n());
  std::vector<int> widened(data.n(), 0);
  std::vector<int> failed(data.n(), 0);
  const int n = data.n();
#pragma omp parallel for schedule(dynamic, 16)
  for (int i = 0; i < n; ++i) {
    const auto& rows = by_var[data.var_index[i]];
    double bw = opts.bandwidth;
    double fit = local_fit(data, rows, i, bw);
    for (int attempt = 0; std::isnan(fit) && std::isfinite(bw) && attempt < opts.widen_attempts; ++attempt) {
      bw *= 2.0;
      fit = local_fit(data, rows, i, bw);
      widened[i] = 1;
    }
    if (std::isnan(fit)) failed[i] = 1;
    res.mean(i) = fit;
  }
  for (int i = 0; i < n; ++i) {
    if (failed[i])
      throw NotPositiveDefiniteError("local linear design is rank deficient even after widening the bandwidth", i);
    res.widened += widened[i];
  }
  res.residuals = data;
  res.residuals.values = data.values - res.mean;
  return res;
}

}  // namespace chfield
