#include "chfield/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "chfield/errors.hpp"
#include "chfield/gp.hpp"

namespace chfield {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double pair_distance(const SpatialDataset& d, int i, int l) {
  if (d.metric == DistanceMetric::GreatCircleKm)
    return haversine_km(d.locations(i, 0), d.locations(i, 1), d.locations(l, 0), d.locations(l, 1));
  return (d.locations.row(i) - d.locations.row(l)).norm();
}

// Rows used for distance summaries; a deterministic stride keeps this O(1500^2).
std::vector<int> summary_rows(const SpatialDataset& d) {
  const int n = d.n();
  const int stride = std::max(1, n / 1500);
  std::vector<int> rows;
  for (int i = 0; i < n; i += stride) rows.push_back(i);
  return rows;
}

struct DistanceSummary {
  double min_positive = 0.0;
  double max = 0.0;
  double median = 1.0;
};

DistanceSummary summarize_distances(const SpatialDataset& d) {
  DistanceSummary s;
  const auto rows = summary_rows(d);
  std::vector<double> all;
  double lo = kInf, hi = 0.0;
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (std::size_t b = a + 1; b < rows.size(); ++b) {
      const double r = pair_distance(d, rows[a], rows[b]);
      all.push_back(r);
      if (r > 0.0) lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
  if (all.empty() || hi == 0.0) return s;
  auto mid = all.begin() + all.size() / 2;
  std::nth_element(all.begin(), mid, all.end());
  s.median = *mid > 0.0 ? *mid : hi;
  s.min_positive = lo;
  s.max = hi;
  return s;
}

// Smallest positive and largest distances over all rows (exact, for table ranges).
std::pair<double, double> distance_range(const SpatialDataset& d) {
  double lo = kInf, hi = 0.0;
  const int n = d.n();
  for (int i = 0; i < n; ++i)
    for (int l = i + 1; l < n; ++l) {
      const double r = pair_distance(d, i, l);
      if (r > 0.0) lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
  return {lo, hi};
}

double colocated_correlation(const SpatialDataset& d, int j, int k) {
  std::map<std::pair<std::string, std::vector<double>>, std::pair<std::vector<double>, std::vector<double>>> at;
  for (int i = 0; i < d.n(); ++i) {
    const int v = d.var_index[i];
    if (v != j && v != k) continue;
    std::vector<double> loc(d.dim());
    for (int c = 0; c < d.dim(); ++c) loc[c] = d.locations(i, c);
    auto& slot = at[{d.has_blocks() ? d.block[i] : std::string(), loc}];
    (v == j ? slot.first : slot.second).push_back(d.values(i));
  }
  std::vector<double> x, y;
  for (const auto& [key, vals] : at)
    if (vals.first.size() == 1 && vals.second.size() == 1) {
      x.push_back(vals.first[0]);
      y.push_back(vals.second[0]);
    }
  if (x.size() < 3) return 0.0;
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n, my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

void FitOptions::validate() const {
  if (max_evaluations < 1 || restarts < 1 || table_points < 4) throw ConfigError("fit counts must be positive");
  if (!(tolerance > 0.0) || !(simplex_scale > 0.0)) throw ConfigError("fit tolerance and simplex scale must be positive");
}

NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& x0, double step,
                             int max_evaluations, double tol) {
  const int n = static_cast<int>(x0.size());
  NelderMeadResult res;
  int evals = 0;
  auto eval = [&](const Vector& x) {
    ++evals;
    const double v = f(x);
    return std::isnan(v) ? kInf : v;
  };

  std::vector<Vector> xs(n + 1);
  std::vector<double> fs(n + 1);
  auto build = [&](const Vector& center, double center_value) {
    xs[0] = center;
    fs[0] = center_value;
    for (int i = 0; i < n; ++i) {
      xs[i + 1] = center;
      xs[i + 1](i) += step;
      fs[i + 1] = eval(xs[i + 1]);
    }
  };

  res.x = x0;
  res.value = eval(x0);
  if (!std::isfinite(res.value) || n == 0) {
    res.evaluations = evals;
    res.converged = n == 0 && std::isfinite(res.value);
    return res;
  }
  build(x0, res.value);
  bool refreshed = false;
  double before_refresh = kInf;
  std::vector<int> order(n + 1);

  while (evals < max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fs[a] < fs[b]; });
    const int best = order[0], worst = order[n], second = order[n - 1];
    if (fs[worst] - fs[best] <= tol) {
      if (refreshed && before_refresh - fs[best] <= tol) {
        res.converged = true;
        break;
      }
      // Restart the simplex once around the incumbent to guard against collapse.
      refreshed = true;
      before_refresh = fs[best];
      const Vector c = xs[best];
      const double cv = fs[best];
      build(c, cv);
      continue;
    }
    Vector centroid = Vector::Zero(n);
    for (int i = 0; i <= n; ++i)
      if (i != worst) centroid += xs[i];
    centroid /= n;
    const Vector xr = centroid + (centroid - xs[worst]);
    const double fr = eval(xr);
    if (fr < fs[best]) {
      const Vector xe = centroid + 2.0 * (centroid - xs[worst]);
      const double fe = eval(xe);
      if (fe < fr) {
        xs[worst] = xe;
        fs[worst] = fe;
      } else {
        xs[worst] = xr;
        fs[worst] = fr;
      }
      continue;
    }
    if (fr < fs[second]) {
      xs[worst] = xr;
      fs[worst] = fr;
      continue;
    }
    const bool outside = fr < fs[worst];
    const Vector xc = outside ? Vector(centroid + 0.5 * (xr - centroid)) : Vector(centroid + 0.5 * (xs[worst] - centroid));
    const double fc = eval(xc);
    if (fc < (outside ? fr : fs[worst])) {
      xs[worst] = xc;
      fs[worst] = fc;
      continue;
    }
    for (int i = 0; i <= n; ++i) {
      if (i == best) continue;
      xs[i] = xs[best] + 0.5 * (xs[i] - xs[best]);
      fs[i] = eval(xs[i]);
    }
  }
  const int best = static_cast<int>(std::min_element(fs.begin(), fs.end()) - fs.begin());
  res.x = xs[best];
  res.value = fs[best];
  res.evaluations = evals;
  return res;
}

bool passes_rule(const CovarianceSpec& spec, ValidityRule rule) {
  try {
    spec.validate();
    if (spec.p() == 1) return true;
    if (spec.is_spectral()) return is_psd(spec.spectral.sigma.real());
    return check_validity(spec.params, spec.dim, rule).valid;
  } catch (const Error&) {
    return false;
  }
}

CovarianceSpec initial_spec(const ModelShape& shape, const SpatialDataset& data, std::vector<std::string>* notes) {
  const int p = shape.p, d = shape.dim;
  data.validate(p);
  std::vector<double> var(p, 1.0);
  for (int j = 0; j < p; ++j) {
    std::vector<double> v;
    for (int i = 0; i < data.n(); ++i)
      if (data.var_index[i] == j) v.push_back(data.values(i));
    if (v.size() >= 2) {
      const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
      double s = 0.0;
      for (double x : v) s += (x - m) * (x - m);
      var[j] = std::max(s / (v.size() - 1), 1e-8);
    }
  }
  const double range = summarize_distances(data).median;
  std::ostringstream rec;
  rec.precision(17);
  rec << "init: nu 0.5, alpha " << (shape.kind == SpecKind::SpectralCH ? 0.5 * d + 0.5 : 1.0) << ", range " << range
      << ", variances";
  for (double v : var) rec << ' ' << v;

  Matrix corr = Matrix::Identity(p, p);
  for (int j = 0; j < p; ++j)
    for (int k = j + 1; k < p; ++k) corr(j, k) = corr(k, j) = std::clamp(colocated_correlation(data, j, k), -0.9, 0.9);
  rec << ", colocated correlations";
  for (int j = 0; j < p; ++j)
    for (int k = j + 1; k < p; ++k) rec << ' ' << corr(j, k);

  // Start from the transformed form so the cross terms respect the rule's normalization.
  ModelShape s = shape;
  Parameterization par(s);
  Vector theta(par.size());
  int at = 0;
  auto put_per = [&](double v, bool shared) {
    if (shared) theta(at++) = v;
    else
      for (int j = 0; j < p; ++j) theta(at++) = v;
  };
  switch (shape.kind) {
    case SpecKind::CH:
      put_per(std::log(0.5), false);
      put_per(0.0, false);
      put_per(std::log(range), shape.shared_scale);
      break;
    case SpecKind::SpectralCH:
      put_per(std::log(0.5), false);
      put_per(std::log(0.5), false);
      put_per(std::log(range), shape.shared_scale);
      break;
    case SpecKind::Matern:
      put_per(std::log(0.5), false);
      put_per(std::log(range), shape.shared_scale);
      break;
    case SpecKind::GeneralizedCauchy:
      theta(at++) = 0.0;  // alpha = 1
      theta(at++) = 0.0;  // beta = 1
      theta(at++) = std::log(range);
      break;
    default:
      throw UnsupportedCaseError("unsupported kind");
  }
  for (int j = 0; j < p; ++j) theta(at++) = std::log(var[j]);
  const int cross_at = at;
  for (int j = 0; j < p; ++j)
    for (int k = j + 1; k < p; ++k) theta(at++) = 0.0;
  if (shape.nugget)
    for (int j = 0; j < p; ++j) theta(at++) = std::log(0.1 * var[j]);

  // Convert colocated correlations to the normalized cross coordinate.
  CovarianceSpec base = par.untransform(theta);
  ParamMatrixSet ps = base.is_spectral() ? ParamMatrixSet{} : base.params;
  if (base.is_spectral()) {
    ps.family = Family::CH;
    ps.sigma = base.spectral.sigma.real();
    ps.tau = base.nugget();
  }
  at = cross_at;
  for (int j = 0; j < p; ++j)
    for (int k = j + 1; k < p; ++k) {
      ps.sigma(j, k) = ps.sigma(k, j) = corr(j, k) * std::sqrt(var[j] * var[k]);
      const double r = std::clamp(par.r_from_sigma(ps, j, k), -0.95, 0.95);
      theta(at++) = std::atanh(r);
    }
  if (notes) notes->push_back(rec.str());
  return par.untransform(theta);
}

FittedModel fit(const ModelShape& shape, const SpatialDataset& data, const std::optional<CovarianceSpec>& init,
                const FitOptions& opts) {
  opts.validate();
  data.validate(shape.p);
  if (data.n() < 1) throw ContractError("fit needs data");
  if (shape.kind == SpecKind::Matern && !shape.shared_scale && shape.rule != ValidityRule::Spectral)
    throw ContractError("Matern fits with separate ranges need the spectral validity rule");

  const Parameterization par(shape);
  FittedModel out;
  const CovarianceSpec start = init ? *init : initial_spec(shape, data, &out.notes);
  const Vector x0 = par.transform(start);
  if (!x0.allFinite()) throw ContractError("initial parameters must be finite");

  ModelOptions mopts;
  mopts.tabulate = opts.tabulate;
  {
    const auto [lo, hi] = distance_range(data);
    if (std::isfinite(lo) && hi > lo) {
      mopts.cache_r_min = 0.5 * lo;
      mopts.cache_r_max = 1.01 * hi;
      mopts.cache_points = opts.table_points;
    } else {
      mopts.tabulate = false;
    }
  }

  const int restarts = opts.restarts;
  std::vector<NelderMeadResult> results(restarts);
  std::vector<std::vector<TraceEntry>> traces(restarts);

#pragma omp parallel for schedule(dynamic, 1)
  for (int r = 0; r < restarts; ++r) {
    Vector xs = x0;
    if (r > 0) {
      std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                        static_cast<std::uint32_t>(r)};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> normal(0.0, opts.simplex_scale);
      for (Eigen::Index i = 0; i < xs.size(); ++i) xs(i) += normal(rng);
    }
    int count = 0;
    auto objective = [&](const Vector& theta) {
      double ll = -kInf;
      try {
        const CovarianceSpec spec = par.untransform(theta);
        if (passes_rule(spec, shape.rule)) ll = loglik(CovarianceModel(spec, mopts), data);
      } catch (const Error&) {
        ll = -kInf;
      }
      if (!std::isfinite(ll)) ll = -kInf;
      traces[r].push_back({r, ++count, ll});
      return -ll;
    };
    results[r] = nelder_mead(objective, xs, opts.simplex_scale, opts.max_evaluations, opts.tolerance);
  }

  // Exact loglik at each restart optimum; pick the max with lowest-index ties.
  int best = -1;
  double best_ll = -kInf;
  for (int r = 0; r < restarts; ++r) {
    double ll = -kInf;
    if (std::isfinite(results[r].value)) {
      try {
        const CovarianceSpec spec = par.untransform(results[r].x);
        if (passes_rule(spec, shape.rule)) ll = loglik(CovarianceModel(spec), data);
      } catch (const Error&) {
        ll = -kInf;
      }
    }
    out.restart_loglik.push_back(ll);
    if (ll > best_ll) {
      best_ll = ll;
      best = r;
    }
    out.best_so_far.push_back(best_ll);
    out.evaluations += results[r].evaluations;
    out.trace.insert(out.trace.end(), traces[r].begin(), traces[r].end());
  }
  if (best < 0) throw FitError("no restart produced a positive definite covariance");
  out.spec = par.untransform(results[best].x);
  out.loglik = best_ll;
  out.converged = results[best].converged;
  out.best_restart = best;
  return out;
}

}  // namespace chfield
