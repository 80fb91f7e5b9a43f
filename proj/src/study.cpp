#include "chfield/study.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <tuple>

#include "chfield/errors.hpp"
#include "chfield/gp.hpp"
#include "chfield/ingest.hpp"

namespace chfield {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::seed_seq replicate_seq(std::uint64_t seed, int replicate, int stream) {
  return std::seed_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                       static_cast<std::uint32_t>(replicate), static_cast<std::uint32_t>(stream)};
}

struct Replicate {
  SpatialDataset all;  // rows: Y1 sites, Y2 sites, Y1 held-out, Y2 held-out
  std::vector<int> first, second, first_out, second_out;
};

Replicate draw_replicate(const StudyConfig& cfg, int r) {
  const int d = static_cast<int>(cfg.lower.size());
  auto seq = replicate_seq(cfg.seed, r, 0);
  std::mt19937_64 rng(seq);
  auto draw_sites = [&](int m) {
    Matrix s(m, d);
    for (int i = 0; i < m; ++i)
      for (int c = 0; c < d; ++c) s(i, c) = std::uniform_real_distribution<double>(cfg.lower[c], cfg.upper[c])(rng);
    return s;
  };
  const Matrix s1 = draw_sites(cfg.n1);
  const Matrix s2 = cfg.colocated ? s1 : draw_sites(cfg.n2);
  const Matrix so = draw_sites(cfg.n_out);
  const int n2 = static_cast<int>(s2.rows());

  Replicate rep;
  SpatialDataset& a = rep.all;
  const int total = cfg.n1 + n2 + 2 * cfg.n_out;
  a.locations.resize(total, d);
  a.locations << s1, s2, so, so;
  a.values = Vector::Zero(total);
  int at = 0;
  auto tag = [&](std::vector<int>& rows, int count, int var) {
    for (int i = 0; i < count; ++i) {
      rows.push_back(at++);
      a.var_index.push_back(var);
    }
  };
  tag(rep.first, cfg.n1, 0);
  tag(rep.second, n2, 1);
  tag(rep.first_out, cfg.n_out, 0);
  tag(rep.second_out, cfg.n_out, 1);

  CovarianceModel truth(cfg.truth);
  const std::uint64_t value_seed = rng();
  a.values = simulate(truth, a, value_seed);
  return rep;
}

std::vector<int> training_rows(const Replicate& rep, const PredictorSet& ps) {
  std::vector<int> rows;
  auto add = [&](bool on, const std::vector<int>& r) {
    if (on) rows.insert(rows.end(), r.begin(), r.end());
  };
  add(ps.first, rep.first);
  add(ps.second, rep.second);
  add(ps.first_out, rep.first_out);
  add(ps.second_out, rep.second_out);
  return rows;
}

void score(const CovarianceModel& model, const Replicate& rep, const PredictorSet& ps, double level, bool nugget,
           StudyRow& row) {
  const SpatialDataset train = rep.all.subset(training_rows(rep, ps));
  const SpatialDataset target = rep.all.subset(ps.response == 0 ? rep.first_out : rep.second_out);
  PredictOptions po;
  po.level = level;
  po.include_nugget = nugget;
  const PredictionResult pr = predict(model, train, target, po);
  const Vector err = pr.mean - target.values;
  row.rmse = std::sqrt(err.squaredNorm() / err.size());
  int hit = 0;
  for (int i = 0; i < target.n(); ++i) hit += target.values(i) >= pr.lower(i) && target.values(i) <= pr.upper(i);
  row.coverage = 100.0 * hit / target.n();
  row.length = (pr.upper - pr.lower).mean();
}

std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::vector<PredictorSet> main_predictor_sets() {
  std::vector<PredictorSet> v;
  for (int resp = 0; resp < 2; ++resp) {
    v.push_back({"Y1", true, false, false, false, resp});
    v.push_back({"Y2", false, true, false, false, resp});
    v.push_back({"Y1+Y2", true, true, false, false, resp});
  }
  return v;
}

std::vector<PredictorSet> other_at_target_sets() {
  return {{"Y2+Y2out", false, true, false, true, 0},
          {"Y1+Y2+Y2out", true, true, false, true, 0},
          {"Y1+Y1out", true, false, true, false, 1},
          {"Y1+Y2+Y1out", true, true, true, false, 1}};
}

void StudyConfig::validate() const {
  if (replicates < 1 || n1 < 1 || n_out < 1 || (!colocated && n2 < 1)) throw ConfigError("study counts must be positive");
  if (lower.empty() || lower.size() != upper.size() || lower.size() > 3) throw ConfigError("domain bounds are malformed");
  for (std::size_t c = 0; c < lower.size(); ++c)
    if (!(upper[c] > lower[c])) throw ConfigError("domain upper bound must exceed the lower bound");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("interval level must lie in (0, 1)");
  if (truth.p() != 2) throw ConfigError("the study is bivariate; truth must have p = 2");
  if (truth.dim != static_cast<int>(lower.size())) throw ConfigError("truth dimension does not match the domain");
  truth.validate();
  if (!truth.is_spectral()) {
    const auto rule = truth.kind == SpecKind::GeneralizedCauchy ? ValidityRule::Theorem1 : ValidityRule::Spectral;
    if (!passes_rule(truth, rule)) throw ConfigError("truth parameters fail the validity check");
  }
  for (const auto& f : families) {
    if (f.shape.p != 2 || f.shape.dim != truth.dim) throw ConfigError("fitted family '" + f.name + "' has the wrong shape");
    if (f.name == "oracle" || f.name == "null") throw ConfigError("family labels 'oracle' and 'null' are reserved");
  }
  for (const auto& ps : predictor_sets) {
    if (ps.response < 0 || ps.response > 1) throw ConfigError("predictor set response must be 1 or 2");
    if (!(ps.first || ps.second || ps.first_out || ps.second_out)) throw ConfigError("predictor set is empty");
    if ((ps.response == 0 && ps.first_out) || (ps.response == 1 && ps.second_out))
      throw ConfigError("predictor set observes its own target");
  }
  fit.validate();
}

StudyResult run_simulation_study(const StudyConfig& cfg) {
  cfg.validate();
  StudyResult res;
  res.truth_name = cfg.truth_name;
  std::vector<std::vector<StudyRow>> per(cfg.replicates);
  std::vector<int> failures(cfg.replicates, 0);

#pragma omp parallel for schedule(dynamic, 1)
  for (int r = 0; r < cfg.replicates; ++r) {
    auto& out = per[r];
    const Replicate rep = draw_replicate(cfg, r);
    SpatialDataset train = rep.all.subset([&] {
      std::vector<int> rows = rep.first;
      rows.insert(rows.end(), rep.second.begin(), rep.second.end());
      return rows;
    }());

    auto emit_sets = [&](const std::string& family, const CovarianceModel* model, double ll, bool conv,
                         const std::string& status) {
      for (const auto& ps : cfg.predictor_sets) {
        StudyRow row;
        row.replicate = r;
        row.family = family;
        row.predictors = ps.label;
        row.response = ps.response;
        row.loglik = ll;
        row.converged = conv;
        row.status = status;
        row.rmse = row.coverage = row.length = kNaN;
        if (model) {
          try {
            score(*model, rep, ps, cfg.level, cfg.intervals_with_nugget, row);
          } catch (const Error& e) {
            row.status = std::string("predict-failed: ") + e.what();
          }
        }
        out.push_back(row);
      }
    };

    for (int resp = 0; resp < 2; ++resp) {
      const auto& rows = resp == 0 ? rep.first_out : rep.second_out;
      double ss = 0.0;
      for (int i : rows) ss += rep.all.values(i) * rep.all.values(i);
      StudyRow row;
      row.replicate = r;
      row.family = "null";
      row.predictors = "none";
      row.response = resp;
      row.rmse = std::sqrt(ss / rows.size());
      row.coverage = row.length = row.loglik = kNaN;
      out.push_back(row);
    }
    if (cfg.oracle) {
      const CovarianceModel truth(cfg.truth);
      double ll = kNaN;
      try {
        ll = loglik(truth, train);
      } catch (const Error&) {
      }
      emit_sets("oracle", &truth, ll, true, "ok");
    }
    for (std::size_t f = 0; f < cfg.families.size(); ++f) {
      const auto& fam = cfg.families[f];
      FitOptions fo = cfg.fit;
      {
        auto seq = replicate_seq(cfg.seed, r, static_cast<int>(f) + 1);
        std::mt19937_64 rng(seq);
        fo.seed = rng();
      }
      try {
        const FittedModel fm = fit(fam.shape, train, std::nullopt, fo);
        const CovarianceModel model(fm.spec);
        emit_sets(fam.name, &model, fm.loglik, fm.converged, "ok");
      } catch (const Error& e) {
        ++failures[r];
        emit_sets(fam.name, nullptr, kNaN, false, std::string("fit-failed: ") + e.what());
      }
    }
  }
  for (int r = 0; r < cfg.replicates; ++r) {
    res.rows.insert(res.rows.end(), per[r].begin(), per[r].end());
    res.failed_fits += failures[r];
  }
  res.summary = summarize(res.rows);
  return res;
}

std::vector<StudySummaryRow> summarize(const std::vector<StudyRow>& rows) {
  std::map<std::tuple<std::string, std::string, int>, StudySummaryRow> acc;
  for (const auto& r : rows) {
    auto& s = acc[{r.family, r.predictors, r.response}];
    s.family = r.family;
    s.predictors = r.predictors;
    s.response = r.response;
    if (r.status != "ok" || !std::isfinite(r.rmse)) {
      ++s.failed;
      continue;
    }
    ++s.ok;
    s.mean_rmse += r.rmse;
    s.mean_coverage += r.coverage;
    s.mean_length += r.length;
  }
  std::vector<StudySummaryRow> out;
  for (auto& [key, s] : acc) {
    if (s.ok > 0) {
      s.mean_rmse /= s.ok;
      s.mean_coverage /= s.ok;
      s.mean_length /= s.ok;
    } else {
      s.mean_rmse = s.mean_coverage = s.mean_length = kNaN;
    }
    out.push_back(s);
  }
  return out;
}

void write_study_long(std::ostream& out, const StudyResult& res) {
  out << "truth,replicate,family,predictors,response,rmse,coverage,interval_length,loglik,converged,status\n";
  for (const auto& r : res.rows) {
    out << csv_text(res.truth_name) << ',' << r.replicate + 1 << ',' << csv_text(r.family) << ',' << csv_text(r.predictors)
        << ",Y" << r.response + 1 << ',' << format_double(r.rmse) << ',' << format_double(r.coverage) << ','
        << format_double(r.length) << ',' << format_double(r.loglik) << ',' << (r.converged ? 1 : 0) << ','
        << csv_text(r.status) << '\n';
  }
}

void write_study_summary(std::ostream& out, const StudyResult& res) {
  out << "truth,family,predictors,response,replicates_ok,replicates_failed,mean_rmse,mean_coverage,mean_interval_length\n";
  for (const auto& s : res.summary) {
    out << csv_text(res.truth_name) << ',' << csv_text(s.family) << ',' << csv_text(s.predictors) << ",Y" << s.response + 1
        << ',' << s.ok << ',' << s.failed << ',' << format_double(s.mean_rmse) << ',' << format_double(s.mean_coverage)
        << ',' << format_double(s.mean_length) << '\n';
  }
}

}  // namespace chfield
