#include "chfield/cv.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <random>
#include <set>

#include "chfield/errors.hpp"
#include "chfield/gp.hpp"
#include "chfield/ingest.hpp"

namespace chfield {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  const std::size_t m = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + m, v.end());
  const double hi = v[m];
  if (v.size() % 2 == 1) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + m));
}

struct Pooled {
  std::vector<double> err, len;
  int hit = 0;
};

CVScore finish(const Pooled& p) {
  CVScore s;
  s.n = static_cast<int>(p.err.size());
  double ss = 0.0;
  std::vector<double> abs_err;
  for (double e : p.err) {
    ss += e * e;
    abs_err.push_back(std::abs(e));
  }
  s.rmse = std::sqrt(ss / s.n);
  s.mae = median(abs_err);
  s.coverage = 100.0 * p.hit / s.n;
  s.interval_length = median(p.len);
  return s;
}

}  // namespace

const char* scheme_name(CVScheme s) { return s == CVScheme::KFold ? "k-fold" : "leave-one-group-out"; }

CVScheme parse_scheme(const std::string& s) {
  if (s == "k-fold") return CVScheme::KFold;
  if (s == "leave-one-group-out") return CVScheme::LeaveOneGroupOut;
  throw ConfigError("unknown cross-validation scheme '" + s + "'");
}

void CVConfig::validate() const {
  if (scheme == CVScheme::KFold && k < 2) throw ConfigError("k-fold needs k >= 2");
  if (models.empty()) throw ConfigError("cross-validation needs at least one model");
  if (variants.empty()) throw ConfigError("cross-validation needs at least one predictor variant");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("interval level must lie in (0, 1)");
  fit.validate();
}

CVResult run_cv(const SpatialDataset& data, int p, const CVConfig& cfg, const SpatialDataset* auxiliary) {
  cfg.validate();
  data.validate(p);
  if (!data.has_units()) throw ConfigError("cross-validation needs group labels");
  for (const auto& v : cfg.variants)
    if (v.use_auxiliary && !auxiliary) throw ConfigError("variant '" + v.name + "' needs auxiliary data");
  SpatialDataset aux;
  if (auxiliary) {
    auxiliary->validate(p);
    aux = *auxiliary;
    if (aux.has_blocks() != data.has_blocks()) throw ConfigError("auxiliary data must carry the same block labels");
    if (!aux.has_units()) aux.unit.assign(aux.n(), "auxiliary");
  }

  std::set<std::string> unique(data.unit.begin(), data.unit.end());
  std::vector<std::string> units(unique.begin(), unique.end());
  CVResult res;
  if (cfg.scheme == CVScheme::LeaveOneGroupOut) {
    for (const auto& u : units) res.folds.push_back({u});
  } else {
    std::mt19937_64 rng(cfg.seed);
    std::shuffle(units.begin(), units.end(), rng);
    res.folds.resize(cfg.k);
    for (std::size_t i = 0; i < units.size(); ++i) res.folds[i % cfg.k].push_back(units[i]);
    for (auto& f : res.folds) std::sort(f.begin(), f.end());
  }
  const int nf = static_cast<int>(res.folds.size());

  std::vector<std::vector<int>> train_rows(nf), test_rows(nf);
  for (int f = 0; f < nf; ++f) {
    const std::set<std::string> held(res.folds[f].begin(), res.folds[f].end());
    for (int i = 0; i < data.n(); ++i) (held.count(data.unit[i]) ? test_rows : train_rows)[f].push_back(i);
    if (test_rows[f].empty()) throw ConfigError("fold " + std::to_string(f + 1) + " has no test observations");
    if (train_rows[f].empty()) throw ConfigError("fold " + std::to_string(f + 1) + " leaves no training data");
  }

  // One task per (fold, model); each owns its fit.
  const int nm = static_cast<int>(cfg.models.size());
  const int nv = static_cast<int>(cfg.variants.size());
  struct Task {
    std::vector<Pooled> by_variant_response;  // nv * p
    std::string error;
  };
  std::vector<Task> tasks(static_cast<std::size_t>(nf) * nm);

#pragma omp parallel for schedule(dynamic, 1)
  for (int t = 0; t < nf * nm; ++t) {
    const int f = t / nm, m = t % nm;
    Task& task = tasks[t];
    task.by_variant_response.resize(static_cast<std::size_t>(nv) * p);
    try {
      const SpatialDataset train = data.subset(train_rows[f]);
      const SpatialDataset test = data.subset(test_rows[f]);
      CovarianceSpec spec;
      if (cfg.models[m].fixed) {
        spec = *cfg.models[m].fixed;
      } else {
        FitOptions fo = cfg.fit;
        fo.seed = cfg.seed + 1000003ULL * static_cast<std::uint64_t>(f + 1);
        spec = fit(cfg.models[m].shape, train, std::nullopt, fo).spec;
      }
      const CovarianceModel model(spec);
      PredictOptions po;
      po.level = cfg.level;
      po.include_nugget = cfg.intervals_with_nugget;
      for (int v = 0; v < nv; ++v) {
        const SpatialDataset predictors = cfg.variants[v].use_auxiliary ? concat(train, aux) : train;
        const PredictionResult pr = predict(model, predictors, test, po);
        for (int i = 0; i < test.n(); ++i) {
          Pooled& pool = task.by_variant_response[v * p + test.var_index[i]];
          pool.err.push_back(pr.mean(i) - test.values(i));
          pool.len.push_back(pr.upper(i) - pr.lower(i));
          pool.hit += test.values(i) >= pr.lower(i) && test.values(i) <= pr.upper(i);
        }
      }
    } catch (const Error& e) {
      task.error = e.what();
    }
  }
  for (const auto& t : tasks)
    if (!t.error.empty()) throw FitError("cross-validation fold failed: " + t.error);

  for (int m = 0; m < nm; ++m)
    for (int v = 0; v < nv; ++v)
      for (int j = 0; j < p; ++j) {
        Pooled all;
        for (int f = 0; f < nf; ++f) {
          const Pooled& pool = tasks[f * nm + m].by_variant_response[v * p + j];
          if (pool.err.empty()) continue;
          CVScore s = finish(pool);
          s.model = cfg.models[m].name;
          s.variant = cfg.variants[v].name;
          s.fold = std::to_string(f + 1);
          s.response = j;
          res.scores.push_back(s);
          all.err.insert(all.err.end(), pool.err.begin(), pool.err.end());
          all.len.insert(all.len.end(), pool.len.begin(), pool.len.end());
          all.hit += pool.hit;
        }
        if (all.err.empty()) continue;
        CVScore s = finish(all);
        s.model = cfg.models[m].name;
        s.variant = cfg.variants[v].name;
        s.fold = "all";
        s.response = j;
        res.scores.push_back(s);
      }
  return res;
}

void write_cv_scores(std::ostream& out, const CVResult& res) {
  out << "model,variant,fold,response,n,rmse,mae,coverage,interval_length\n";
  for (const auto& s : res.scores)
    out << s.model << ',' << s.variant << ',' << s.fold << ",Y" << s.response + 1 << ',' << s.n << ','
        << format_double(s.rmse) << ',' << format_double(s.mae) << ',' << format_double(s.coverage) << ','
        << format_double(s.interval_length) << '\n';
}

}  // namespace chfield
