#include <omp.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chfield/config.hpp"
#include "chfield/errors.hpp"
#include "chfield/kernels.hpp"
#include "chfield/multivariate.hpp"

namespace fs = std::filesystem;
using namespace chfield;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kConfig = 2;
constexpr int kNumeric = 3;

struct Common {
  std::string config;
  std::string out = ".";
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 0;
};

std::ofstream open_out(const Common& c, const std::string& name) {
  fs::create_directories(c.out);
  const auto path = (fs::path(c.out) / name).string();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  return f;
}

void require_config(const Common& c) {
  if (c.config.empty()) throw ConfigError("--config is required");
}

void write_manifest(const Common& c, const std::string& command, std::uint64_t seed,
                    const std::vector<std::string>& outputs) {
  auto f = open_out(c, "manifest.yaml");
  f << "command: " << command << '\n'
    << "config: " << fs::path(c.config).filename().string() << '\n'
    << "config_digest: " << file_digest(c.config) << '\n'
    << "seed: " << seed << '\n'
    << "threads: " << omp_get_max_threads() << '\n'
    << "library: " << library_version() << '\n'
    << "outputs:\n";
  for (const auto& o : outputs) f << "  - " << o << '\n';
}

int expected_p(const IngestResult& r, int configured) { return configured > 0 ? configured : r.p; }

void write_points(std::ostream& out, const SpatialDataset& d, const PredictionResult& pr) {
  const CsvSchema s = default_schema_for(d);
  for (const auto& c : s.coord_columns) out << c << ',';
  out << "variable,mean,variance,lower,upper\n";
  for (int i = 0; i < d.n(); ++i) {
    for (int c = 0; c < d.dim(); ++c) out << format_double(d.locations(i, c)) << ',';
    out << d.var_index[i] + 1 << ',' << format_double(pr.mean(i)) << ',' << format_double(pr.variance(i)) << ','
        << format_double(pr.lower(i)) << ',' << format_double(pr.upper(i)) << '\n';
  }
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multivariate confluent hypergeometric covariance toolkit"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "YAML (or JSON) config file");
    sub->add_option("--out", common.out, "output directory");
    sub->add_option("--seed", common.seed, "random seed (overrides the config)")->each([&](const std::string&) {
      common.seed_given = true;
    });
    sub->add_option("--threads", common.threads, "OpenMP threads (0 keeps the default)");
  };

  // kernel-eval / sdf-eval
  std::string family = "ch";
  double nu = 0.5, alpha = 1.0, beta = 1.0, phi = 1.0, sigma = 1.0;
  int dim = 2;
  std::vector<double> points;
  auto add_kernel_params = [&](CLI::App* sub) {
    sub->add_option("--family", family, "ch | matern | gc");
    sub->add_option("--nu", nu);
    sub->add_option("--alpha", alpha);
    sub->add_option("--beta", beta);
    sub->add_option("--phi", phi);
    sub->add_option("--sigma", sigma, "variance (sigma for gc)");
  };
  auto* kernel = app.add_subcommand("kernel-eval", "covariance at distances");
  add_common(kernel);
  add_kernel_params(kernel);
  kernel->add_option("--lag", points, "distances")->delimiter(',')->required();
  auto* sdf = app.add_subcommand("sdf-eval", "spectral density at frequencies");
  add_common(sdf);
  add_kernel_params(sdf);
  sdf->add_option("--dim", dim);
  sdf->add_option("--freq", points, "frequencies")->delimiter(',')->required();

  // validate
  std::string rule = "all";
  double grid_lo = 1e-5, grid_hi = 1e5;
  int grid_count = 400;
  auto* validate = app.add_subcommand("validate", "validity checks for a covariance spec");
  add_common(validate);
  validate->add_option("--rule", rule, "theorem1 | theorem2 | prop3 | spectral | all");
  validate->add_option("--grid-lo", grid_lo);
  validate->add_option("--grid-hi", grid_hi);
  validate->add_option("--grid-count", grid_count);

  // max-correlation
  double nu1 = 1.5, alpha1 = 1.5, nu2 = 1.5, alpha2 = 1.5;
  bool frontier_grid = false;
  int grid_side = 9;
  auto* maxcor = app.add_subcommand("max-correlation", "largest admissible cross-correlation (bivariate)");
  add_common(maxcor);
  maxcor->add_option("--nu1", nu1);
  maxcor->add_option("--alpha1", alpha1);
  maxcor->add_option("--nu2", nu2);
  maxcor->add_option("--alpha2", alpha2);
  maxcor->add_option("--beta", beta);
  maxcor->add_option("--dim", dim);
  maxcor->add_flag("--grid", frontier_grid, "sweep nu2, alpha2 over [0.5, 2.5]");
  maxcor->add_option("--grid-side", grid_side);

  auto* simulate_cmd = app.add_subcommand("simulate", "draw a Gaussian field");
  add_common(simulate_cmd);
  auto* fit_cmd = app.add_subcommand("fit", "maximum likelihood fit");
  add_common(fit_cmd);
  auto* predict_cmd = app.add_subcommand("predict", "conditional mean and variance");
  add_common(predict_cmd);
  auto* study_cmd = app.add_subcommand("study", "simulation study");
  add_common(study_cmd);
  auto* cv_cmd = app.add_subcommand("cv", "grouped cross-validation");
  add_common(cv_cmd);
  auto* detrend_cmd = app.add_subcommand("detrend", "local linear detrending");
  add_common(detrend_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  if (common.threads > 0) omp_set_num_threads(common.threads);
  std::cout.precision(17);

  try {
    if (kernel->parsed() || sdf->parsed()) {
      std::ostringstream out;
      const bool cov = kernel->parsed();
      out << (cov ? "h,value\n" : "x,value\n");
      for (double t : points) {
        double v = 0.0;
        if (family == "ch") {
          const CHParams pr{nu, alpha, beta, sigma};
          v = cov ? ch_cov(t, pr) : ch_sdf(t, pr, dim);
        } else if (family == "matern") {
          const MaternParams pr{nu, phi, sigma};
          v = cov ? matern_cov(t, pr) : matern_sdf(t, pr, dim);
        } else if (family == "gc" && cov) {
          v = gc_cov(t, GCParams{alpha, beta, phi, sigma});
        } else {
          throw ConfigError("unsupported family '" + family + "' for this command");
        }
        out << format_double(t) << ',' << format_double(v) << '\n';
      }
      if (common.out == ".") std::cout << out.str();
      else open_out(common, cov ? "kernel_eval.csv" : "sdf_eval.csv") << out.str();
      return kOk;
    }

    if (validate->parsed()) {
      require_config(common);
      const CovarianceSpec spec = load_spec_file(common.config);
      FrequencyGrid grid;
      grid.lo = grid_lo;
      grid.hi = grid_hi;
      grid.count = grid_count;
      std::vector<ValidityRule> rules;
      if (rule == "all") rules = {ValidityRule::Theorem1, ValidityRule::Theorem2, ValidityRule::Prop3, ValidityRule::Spectral};
      else rules = {parse_rule(rule)};
      std::cout << "rule,valid,min_eigenvalue,witness,detail\n";
      bool any_valid = false, any_checked = false;
      if (spec.is_spectral()) {
        const bool ok = is_psd(spec.spectral.sigma.real()) && spec.spectral.sigma.isApprox(spec.spectral.sigma.adjoint());
        std::cout << "spectral-construction," << (ok ? 1 : 0) << ",,,hermitian psd sigma\n";
        return ok ? kOk : kInvalid;
      }
      for (auto r : rules) {
        try {
          const auto rep = check_validity(spec.params, spec.dim, r, grid);
          any_checked = true;
          any_valid |= rep.valid;
          std::cout << rep.condition << ',' << (rep.valid ? 1 : 0) << ',' << format_double(rep.min_eigenvalue) << ','
                    << (rep.witness ? format_double(*rep.witness) : "") << ',' << rep.detail << '\n';
        } catch (const Error& e) {
          if (rules.size() == 1) throw;
          std::cout << rule_name(r) << ",,,,not applicable: " << e.what() << '\n';
        }
      }
      if (!any_checked) return kInvalid;
      return any_valid ? kOk : kInvalid;
    }

    if (maxcor->parsed()) {
      std::ostringstream out;
      const std::vector<ValidityRule> rules = {ValidityRule::Theorem1, ValidityRule::Prop3, ValidityRule::Spectral};
      auto row = [&](double n2, double a2) {
        const CHMarginal first{nu1, alpha1, beta}, second{n2, a2, beta};
        out << format_double(n2) << ',' << format_double(a2);
        for (auto r : rules) {
          std::string cell;
          try {
            cell = format_double(max_correlation(first, second, dim, r));
          } catch (const Error&) {
            cell = "nan";
          }
          out << ',' << cell;
        }
        out << '\n';
      };
      out << "nu2,alpha2,theorem1,prop3,spectral\n";
      if (frontier_grid) {
        for (double n2 : linspace(0.5, 2.5, grid_side))
          for (double a2 : linspace(0.5, 2.5, grid_side)) row(n2, a2);
      } else {
        row(nu2, alpha2);
      }
      if (common.out == ".") std::cout << out.str();
      else open_out(common, "max_correlation.csv") << out.str();
      return kOk;
    }

    if (simulate_cmd->parsed()) {
      require_config(common);
      SimulateConfig cfg = load_simulate_config(common.config);
      if (common.seed_given) cfg.seed = common.seed;
      SpatialDataset design;
      if (cfg.design) {
        design = ingest_csv_file(cfg.design->path, cfg.design->schema).data;
      } else {
        std::mt19937_64 rng(cfg.seed);
        const int d = cfg.spec.dim;
        int total = 0;
        for (int c : cfg.counts) total += c;
        design.locations.resize(total, d);
        design.values = Vector::Zero(total);
        int at = 0;
        for (std::size_t j = 0; j < cfg.counts.size(); ++j)
          for (int i = 0; i < cfg.counts[j]; ++i, ++at) {
            for (int c = 0; c < d; ++c)
              design.locations(at, c) = std::uniform_real_distribution<double>(cfg.lower[c], cfg.upper[c])(rng);
            design.var_index.push_back(static_cast<int>(j));
          }
      }
      const CovarianceModel model(cfg.spec);
      design.values = simulate(model, design, cfg.seed);
      auto f = open_out(common, "simulated.csv");
      export_csv(f, design);
      return kOk;
    }

    if (fit_cmd->parsed()) {
      require_config(common);
      FitConfig cfg = load_fit_config(common.config);
      if (common.seed_given) cfg.options.seed = common.seed;
      const IngestResult data = ingest_csv_file(cfg.data.path, cfg.data.schema);
      cfg.shape.p = expected_p(data, cfg.p);
      const FittedModel fm = fit(cfg.shape, data.data, cfg.init, cfg.options);
      open_out(common, "fit.yaml") << fit_result_to_yaml(fm, Parameterization(cfg.shape));
      auto trace = open_out(common, "fit_trace.csv");
      trace << "restart,evaluation,loglik\n";
      for (const auto& t : fm.trace)
        trace << t.restart + 1 << ',' << t.evaluation << ',' << format_double(t.loglik) << '\n';
      std::cout << "loglik " << format_double(fm.loglik) << (fm.converged ? " converged" : " not converged") << '\n';
      return kOk;
    }

    if (predict_cmd->parsed()) {
      require_config(common);
      const PredictConfig cfg = load_predict_config(common.config);
      const SpatialDataset train = ingest_csv_file(cfg.train.path, cfg.train.schema).data;
      const SpatialDataset targets = ingest_csv_file(cfg.targets.path, cfg.targets.schema).data;
      const PredictionResult pr = predict(CovarianceModel(cfg.spec), train, targets, cfg.options);
      auto f = open_out(common, "predictions.csv");
      write_points(f, targets, pr);
      return kOk;
    }

    if (study_cmd->parsed()) {
      require_config(common);
      StudyConfig cfg = load_study_config(common.config);
      if (common.seed_given) {
        cfg.seed = common.seed;
        cfg.fit.seed = common.seed;
      }
      const StudyResult res = run_simulation_study(cfg);
      {
        auto f = open_out(common, "study_long.csv");
        write_study_long(f, res);
      }
      {
        auto f = open_out(common, "study_summary.csv");
        write_study_summary(f, res);
      }
      write_manifest(common, "study", cfg.seed, {"study_long.csv", "study_summary.csv"});
      if (res.failed_fits > 0) std::cerr << res.failed_fits << " fits failed; see the status column\n";
      return kOk;
    }

    if (cv_cmd->parsed()) {
      require_config(common);
      CVRunConfig cfg = load_cv_config(common.config);
      if (common.seed_given) {
        cfg.cv.seed = common.seed;
        cfg.cv.fit.seed = common.seed;
      }
      const IngestResult data = ingest_csv_file(cfg.data.path, cfg.data.schema);
      std::optional<IngestResult> aux;
      if (cfg.auxiliary) aux = ingest_csv_file(cfg.auxiliary->path, cfg.auxiliary->schema);
      const int p = std::max(expected_p(data, cfg.p), aux ? aux->p : 0);
      for (auto& m : cfg.cv.models) m.shape.p = p;
      const CVResult res = run_cv(data.data, p, cfg.cv, aux ? &aux->data : nullptr);
      {
        auto f = open_out(common, "cv_scores.csv");
        write_cv_scores(f, res);
      }
      {
        auto f = open_out(common, "cv_folds.csv");
        f << "fold,unit\n";
        for (std::size_t i = 0; i < res.folds.size(); ++i)
          for (const auto& u : res.folds[i]) f << i + 1 << ',' << u << '\n';
      }
      write_manifest(common, "cv", cfg.cv.seed, {"cv_scores.csv", "cv_folds.csv"});
      return kOk;
    }

    if (detrend_cmd->parsed()) {
      require_config(common);
      const DetrendConfig cfg = load_detrend_config(common.config);
      const IngestResult data = ingest_csv_file(cfg.data.path, cfg.data.schema);
      const DetrendResult res = local_linear_detrend(data.data, cfg.options);
      {
        auto f = open_out(common, "detrended.csv");
        export_csv(f, res.residuals);
      }
      auto f = open_out(common, "mean_surface.csv");
      const CsvSchema s = default_schema_for(data.data);
      for (const auto& c : s.coord_columns) f << c << ',';
      f << "variable,observed,mean,residual\n";
      for (int i = 0; i < data.data.n(); ++i) {
        for (int c = 0; c < data.data.dim(); ++c) f << format_double(data.data.locations(i, c)) << ',';
        f << data.data.var_index[i] + 1 << ',' << format_double(data.data.values(i)) << ',' << format_double(res.mean(i))
          << ',' << format_double(res.residuals.values(i)) << '\n';
      }
      if (res.widened > 0) std::cerr << res.widened << " points needed a wider bandwidth\n";
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const ContractError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kConfig;
  } catch (const DomainError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumeric;
  }
  return kOk;
}
