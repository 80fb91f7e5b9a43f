#include "chfield/gp.hpp"

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>
#include <tuple>

#include <boost/math/distributions/normal.hpp>

#include "chfield/errors.hpp"

namespace chfield {

namespace {

double entry(const CovarianceModel& model, const SpatialDataset& a, int i, const SpatialDataset& b, int l) {
  const int ja = a.var_index[i], kb = b.var_index[l];
  if (a.metric == DistanceMetric::GreatCircleKm) {
    const double r = haversine_km(a.locations(i, 0), a.locations(i, 1), b.locations(l, 0), b.locations(l, 1));
    return model.radial(ja, kb, r);
  }
  double lag[3];
  for (int c = 0; c < a.dim(); ++c) lag[c] = a.locations(i, c) - b.locations(l, c);
  return model.at_lag(ja, kb, lag);
}

void check_compatible(const CovarianceModel& model, const SpatialDataset& a, const SpatialDataset& b) {
  a.validate(model.p());
  b.validate(model.p());
  if (a.metric != b.metric) throw ContractError("datasets use different distance metrics");
  if (a.metric == DistanceMetric::Euclidean && (a.dim() != model.dim() || b.dim() != model.dim()))
    throw ContractError("dataset dimension does not match the covariance dimension");
  if (a.metric == DistanceMetric::GreatCircleKm && !model.isotropic())
    throw ContractError("great-circle distances need an isotropic family");
}

// Rows with identical location and variable make K singular when the nugget is zero.
void reject_exact_duplicates(const CovarianceModel& model, const SpatialDataset& d) {
  std::map<std::tuple<int, std::string, std::vector<double>>, int> seen;
  for (int i = 0; i < d.n(); ++i) {
    const int v = d.var_index[i];
    if (model.nugget(v) > 0.0) continue;
    std::vector<double> loc(d.dim());
    for (int c = 0; c < d.dim(); ++c) loc[c] = d.locations(i, c);
    auto key = std::make_tuple(v, d.has_blocks() ? d.block[i] : std::string(), loc);
    auto [it, fresh] = seen.emplace(key, i);
    if (!fresh)
      throw NotPositiveDefiniteError("duplicate location for variable " + std::to_string(v + 1) + " without a nugget", i);
  }
}

}  // namespace

Matrix cov_matrix(const CovarianceModel& model, const SpatialDataset& a, const SpatialDataset& b, Assembly mode) {
  check_compatible(model, a, b);
  const bool same = &a == &b;
  const int n = a.n(), m = b.n();
  Matrix k(n, m);
  const bool mirror = same && model.isotropic();
  if (mode == Assembly::Serial) {
    for (int i = 0; i < n; ++i)
      for (int l = mirror ? i : 0; l < m; ++l) {
        const double v = entry(model, a, i, b, l);
        k(i, l) = v;
        if (mirror) k(l, i) = v;
      }
  } else {
#pragma omp parallel for schedule(dynamic, 8)
    for (int i = 0; i < n; ++i)
      for (int l = mirror ? i : 0; l < m; ++l) {
        const double v = entry(model, a, i, b, l);
        k(i, l) = v;
        if (mirror) k(l, i) = v;
      }
  }
  if (same)
    for (int i = 0; i < n; ++i) k(i, i) += model.nugget(a.var_index[i]);
  return k;
}

double Factorization::log_det() const {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

Factorization factorize(const Matrix& k) {
  const Eigen::Index n = k.rows();
  if (n == 0) throw ContractError("cannot factorize an empty matrix");
  if (!k.allFinite()) throw NotPositiveDefiniteError("covariance matrix has non-finite entries", 0);
  const double mean_diag = k.diagonal().mean();
  Factorization f;
  double jitter = 0.0;
  double step = 1e-12 * mean_diag;
  while (true) {
    Matrix kj = k;
    kj.diagonal().array() += jitter;
    f.llt.compute(kj);
    if (f.llt.info() == Eigen::Success && f.llt.matrixLLT().diagonal().minCoeff() > 0.0) {
      f.jitter = jitter;
      return f;
    }
    if (step > 1e-6 * mean_diag * (1.0 + 1e-9)) break;
    jitter = step;
    step *= 10.0;
  }
  // Locate the failing pivot with an unblocked factorization.
  Matrix l = k;
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = l(j, j);
    for (Eigen::Index c = 0; c < j; ++c) d -= l(j, c) * l(j, c);
    if (!(d > 0.0)) throw NotPositiveDefiniteError("covariance matrix is not positive definite", j);
    d = std::sqrt(d);
    l(j, j) = d;
    for (Eigen::Index r = j + 1; r < n; ++r) {
      double s = l(r, j);
      for (Eigen::Index c = 0; c < j; ++c) s -= l(r, c) * l(j, c);
      l(r, j) = s / d;
    }
  }
  throw NotPositiveDefiniteError("covariance matrix is numerically not positive definite", n - 1);
}

double loglik(const CovarianceModel& model, const SpatialDataset& data) {
  data.validate(model.p());
  reject_exact_duplicates(model, data);
  double total = 0.0;
  for (const auto& rows : data.block_rows()) {
    const SpatialDataset part = data.block.empty() ? data : data.subset(rows);
    const Matrix k = cov_matrix(model, part, part);
    const Factorization f = factorize(k);
    const Vector alpha = f.llt.matrixL().solve(part.values);
    total += -0.5 * part.n() * std::log(2.0 * M_PI) - 0.5 * f.log_det() - 0.5 * alpha.squaredNorm();
  }
  return total;
}

double interval_z(double level) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("interval level must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + 0.5 * level);
}

PredictionResult predict(const CovarianceModel& model, const SpatialDataset& train, const SpatialDataset& targets,
                         const PredictOptions& opts) {
  train.validate(model.p());
  targets.validate(model.p());
  reject_exact_duplicates(model, train);
  const int m = targets.n();
  PredictionResult out;
  out.mean = Vector::Zero(m);
  out.variance = Vector::Zero(m);

  // Targets go with the training rows of the same block; blocks are independent.
  std::map<std::string, std::vector<int>> train_by_block, target_by_block;
  for (int i = 0; i < train.n(); ++i) train_by_block[train.has_blocks() ? train.block[i] : ""].push_back(i);
  for (int i = 0; i < m; ++i)
    target_by_block[train.has_blocks() && targets.has_blocks() ? targets.block[i] : ""].push_back(i);

  for (const auto& [label, trows] : target_by_block) {
    const SpatialDataset tg = targets.subset(trows);
    Vector prior(tg.n());
    for (int i = 0; i < tg.n(); ++i) {
      const int v = tg.var_index[i];
      double zero[3] = {0.0, 0.0, 0.0};
      prior(i) = model.at_lag(v, v, zero) + (opts.include_nugget ? model.nugget(v) : 0.0);
    }
    auto it = train_by_block.find(label);
    if (it == train_by_block.end()) {
      for (int i = 0; i < tg.n(); ++i) out.variance(trows[i]) = prior(i);
      continue;
    }
    const SpatialDataset tr = train.has_blocks() ? train.subset(it->second) : train;
    const Matrix k = cov_matrix(model, tr, tr);
    const Matrix ks = cov_matrix(model, tr, tg);
    const Factorization f = factorize(k);
    const Matrix w = f.llt.matrixL().solve(ks);
    const Vector a = f.llt.matrixL().solve(tr.values);
    const Vector mean = w.transpose() * a;
    const Vector reduce = w.colwise().squaredNorm().transpose();
    for (int i = 0; i < tg.n(); ++i) {
      out.mean(trows[i]) = mean(i);
      out.variance(trows[i]) = std::max(0.0, prior(i) - reduce(i));
    }
  }
  const double z = interval_z(opts.level);
  out.lower = out.mean - z * out.variance.cwiseSqrt();
  out.upper = out.mean + z * out.variance.cwiseSqrt();
  return out;
}

Vector simulate(const CovarianceModel& model, const SpatialDataset& design, std::uint64_t seed) {
  design.validate(model.p());
  const Matrix k = cov_matrix(model, design, design);
  Factorization f;
  try {
    f = factorize(k);
  } catch (const NotPositiveDefiniteError& e) {
    throw ValidityError(std::string("simulation covariance is indefinite: ") + e.what());
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(design.n());
  for (int i = 0; i < design.n(); ++i) z(i) = normal(rng);
  return f.llt.matrixL() * z;
}

}  // namespace chfield
