#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "chfield/config.hpp"
#include "chfield/cv.hpp"
#include "chfield/detrend.hpp"
#include "chfield/errors.hpp"
#include "chfield/gp.hpp"
#include "chfield/ingest.hpp"
#include "chfield/study.hpp"
#include "generators.hpp"

using namespace chfield;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("chfield_test_" + name);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

SpatialDataset grid_data(int side, int p) {
  SpatialDataset d;
  d.locations.resize(side * side * p, 2);
  d.values = Vector::Zero(side * side * p);
  int row = 0;
  for (int v = 0; v < p; ++v)
    for (int i = 0; i < side; ++i)
      for (int j = 0; j < side; ++j) {
        d.locations(row, 0) = i * 10.0;
        d.locations(row, 1) = j * 7.0;
        d.var_index.push_back(v);
        ++row;
      }
  return d;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("ingest a handcrafted long-format file") {
    std::istringstream in("x,y,variable,value,year\n0.5,1.5,1,2.25,2019\n3,4,2,-1,2019\n\"5\",6,1,1e-3,2020\n");
    CsvSchema schema;
    schema.block_column = "year";
    const auto res = ingest_csv(in, schema);
    CHECK(res.p == 2);
    const auto& d = res.data;
    REQUIRE(d.n() == 3);
    CHECK(d.locations(0, 0) == 0.5);
    CHECK(d.locations(2, 0) == 5.0);
    CHECK(d.locations(1, 1) == 4.0);
    CHECK(d.var_index == std::vector<int>{0, 1, 0});
    CHECK(d.values(0) == 2.25);
    CHECK(d.values(2) == 1e-3);
    CHECK(d.block == std::vector<std::string>{"2019", "2019", "2020"});
  }

  TEST_CASE("ingest errors name the row") {
    CsvSchema schema;
    std::istringstream nan_in("x,y,variable,value\n0,0,1,1\n1,1,1,nan\n");
    try {
      ingest_csv(nan_in, schema);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.row() == 2);
    }
    std::istringstream bad("x,y,variable,value\n0,0,1,abc\n");
    CHECK_THROWS_AS(ingest_csv(bad, schema), ParseError);
    std::istringstream missing("x,variable,value\n0,1,1\n");
    try {
      ingest_csv(missing, schema);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.row() == 0);
    }
    std::istringstream badvar("x,y,variable,value\n0,0,0,1\n");
    CHECK_THROWS_AS(ingest_csv(badvar, schema), ParseError);
  }

  TEST_CASE("wide format skips blank cells") {
    std::istringstream in("x,y,temp,oxy\n0,0,1.5,\n1,1,,2.5\n2,2,3,4\n");
    CsvSchema schema;
    schema.value_columns = {"temp", "oxy"};
    const auto res = ingest_csv(in, schema);
    CHECK(res.data.n() == 4);
    CHECK(res.p == 2);
    CHECK(res.data.var_index == std::vector<int>{0, 1, 0, 1});
  }

  TEST_CASE("export then ingest is the identity") {
    gen::Rng r(50);
    SpatialDataset d = gen::design(r, 25, 3, 2, 1000.0);
    for (int i = 0; i < d.n(); ++i) {
      d.values(i) = r.normal() * 1e-7 + r.normal();
      d.block.push_back(i % 2 ? "2019" : "2020");
      d.unit.push_back("float" + std::to_string(i % 4));
    }
    std::stringstream buf;
    export_csv(buf, d);
    const auto back = ingest_csv(buf, default_schema_for(d)).data;
    CHECK(back.locations == d.locations);
    CHECK(back.values == d.values);
    CHECK(back.var_index == d.var_index);
    CHECK(back.block == d.block);
    CHECK(back.unit == d.unit);
  }

  TEST_CASE("geographic projections") {
    std::istringstream in("lon,lat,variable,value\n0,0,1,1\n1,0,1,1\n");
    CsvSchema schema;
    schema.coord_columns = {"lon", "lat"};
    schema.projection = Projection::GreatCircle;
    const auto gc = ingest_csv(in, schema);
    CHECK(gc.data.metric == DistanceMetric::GreatCircleKm);
    CHECK(haversine_km(0, 0, 1, 0) == doctest::Approx(kEarthRadiusKm * M_PI / 180.0).epsilon(1e-12));
    std::istringstream in2("lon,lat,variable,value\n0,0,1,1\n1,0,1,1\n");
    schema.projection = Projection::Equirectangular;
    schema.origin_lon = 0.0;
    schema.origin_lat = 0.0;
    const auto eq = ingest_csv(in2, schema);
    CHECK(eq.data.metric == DistanceMetric::Euclidean);
    CHECK(eq.data.locations(1, 0) - eq.data.locations(0, 0) == doctest::Approx(kEarthRadiusKm * M_PI / 180.0).epsilon(1e-12));
    CHECK(eq.metadata.find("equirectangular") != std::string::npos);
  }

  TEST_CASE("detrending a constant field leaves zero residuals") {
    SpatialDataset d = grid_data(6, 2);
    for (int i = 0; i < d.n(); ++i) d.values(i) = d.var_index[i] == 0 ? 3.5 : -2.0;
    const auto res = local_linear_detrend(d, {25.0, 4});
    CHECK(res.residuals.values.cwiseAbs().maxCoeff() < 1e-10);
  }

  TEST_CASE("global linear detrending reproduces linear fields and is idempotent") {
    SpatialDataset d = grid_data(7, 2);
    for (int i = 0; i < d.n(); ++i)
      d.values(i) = d.var_index[i] == 0 ? 1.0 + 0.3 * d.locations(i, 0) - 0.2 * d.locations(i, 1)
                                        : -4.0 + 0.01 * d.locations(i, 0) + 0.5 * d.locations(i, 1);
    DetrendOptions opts;
    opts.bandwidth = kInfiniteBandwidth;
    const auto once = local_linear_detrend(d, opts);
    CHECK(once.residuals.values.cwiseAbs().maxCoeff() < 1e-8);
    gen::Rng r(51);
    for (int i = 0; i < d.n(); ++i) d.values(i) += r.normal();
    const auto a = local_linear_detrend(d, opts);
    const auto b = local_linear_detrend(a.residuals, opts);
    CHECK((a.residuals.values - b.residuals.values).cwiseAbs().maxCoeff() < 1e-10);
  }

  TEST_CASE("detrended residuals of trend plus noise centre on zero") {
    SpatialDataset d = grid_data(15, 1);
    gen::Rng r(52);
    for (int i = 0; i < d.n(); ++i)
      d.values(i) = std::sin(d.locations(i, 0) / 40.0) + 0.02 * d.locations(i, 1) + r.normal();
    const auto res = local_linear_detrend(d, {30.0, 4});
    const double mean = res.residuals.values.mean();
    const double se = std::sqrt((res.residuals.values.array() - mean).square().sum() / (d.n() - 1) / d.n());
    CHECK(std::abs(mean) < 2.0 * se);
  }

  TEST_CASE("rank-deficient local design widens then fails") {
    SpatialDataset d;
    d.locations.resize(4, 2);
    d.locations << 0, 0, 1, 0, 2, 0, 3, 0;  // collinear
    d.var_index = {0, 0, 0, 0};
    d.values = Vector::Ones(4);
    CHECK_THROWS_AS(local_linear_detrend(d, {1.0, 2}), NotPositiveDefiniteError);
  }

  TEST_CASE("cross-validation configuration errors") {
    gen::Rng r(53);
    SpatialDataset d = gen::design(r, 20, 1, 2);
    CVConfig cfg;
    CVModel m;
    m.name = "CH";
    m.shape.p = 1;
    m.fixed = CovarianceSpec::from_params(build_pars_like({{1.0, 1.5, 0.3}}, Matrix::Ones(1, 1)), 2);
    cfg.models = {m};
    CHECK_THROWS_AS(run_cv(d, 1, cfg), ConfigError);  // no unit labels
    d.unit.assign(20, "only");
    cfg.scheme = CVScheme::LeaveOneGroupOut;
    CHECK_THROWS_AS(run_cv(d, 1, cfg), ConfigError);
    cfg.scheme = CVScheme::KFold;
    cfg.k = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }

  TEST_CASE("cross-validation of a duplicated noise-free layout is exact") {
    gen::Rng r(54);
    const SpatialDataset base = gen::design(r, 15, 1, 2);
    const CovarianceSpec spec = CovarianceSpec::from_params(build_pars_like({{1.0, 1.5, 0.3}}, Matrix::Ones(1, 1)), 2);
    const Vector y = simulate(CovarianceModel(spec), base, 4);
    SpatialDataset d = concat(base, base);
    d.values << y, y;
    for (int i = 0; i < 30; ++i) d.unit.push_back(i < 15 ? "A" : "B");
    CVConfig cfg;
    CVModel m;
    m.name = "CH";
    m.shape.p = 1;
    m.fixed = spec;
    cfg.models = {m};
    const auto res = run_cv(d, 1, cfg);
    for (const auto& s : res.scores) CHECK(s.rmse < 1e-6);
  }

  TEST_CASE("cross-validated RMSE tracks the oracle predictive RMSE") {
    gen::Rng r(55);
    const CovarianceSpec spec = [] {
      ParamMatrixSet ps = build_pars_like({{1.0, 1.5, 0.2}}, Matrix::Ones(1, 1));
      ps.tau(0) = 0.05;
      return CovarianceSpec::from_params(ps, 2);
    }();
    SpatialDataset d = gen::design(r, 120, 1, 2);
    d.values = simulate(CovarianceModel(spec), d, 8);
    for (int i = 0; i < d.n(); ++i) d.unit.push_back("u" + std::to_string(i % 12));
    CVConfig cfg;
    CVModel fitted;
    fitted.name = "CH";
    fitted.shape.p = 1;
    fitted.shape.nugget = true;
    CVModel oracle_model = fitted;
    oracle_model.name = "oracle";
    oracle_model.fixed = spec;
    cfg.models = {fitted, oracle_model};
    cfg.fit.restarts = 1;
    cfg.fit.max_evaluations = 600;
    const auto res = run_cv(d, 1, cfg);
    double fit_rmse = 0.0, oracle_rmse = 0.0;
    for (const auto& s : res.scores)
      if (s.fold == "all") (s.model == "oracle" ? oracle_rmse : fit_rmse) = s.rmse;
    REQUIRE(oracle_rmse > 0.0);
    CHECK(fit_rmse <= 1.1 * oracle_rmse);
  }

  TEST_CASE("spec YAML round trip") {
    Matrix s(2, 2);
    s << 1.0, 0.6, 0.6, 2.0;
    ParamMatrixSet ps = build_pars_like({{1.75, 1.1, 0.015}, {1.25, 1.9, 0.02}}, s);
    ps.tau << 0.1, 0.0;
    const CovarianceSpec spec = CovarianceSpec::from_params(ps, 2);
    const CovarianceSpec back = parse_spec_text(spec_to_yaml(spec));
    CHECK(back.kind == SpecKind::CH);
    CHECK(back.params.nu == ps.nu);
    CHECK(back.params.alpha == ps.alpha);
    CHECK(back.params.beta == ps.beta);
    CHECK(back.params.sigma == ps.sigma);
    CHECK(back.params.tau == ps.tau);
  }

  TEST_CASE("spec text from marginals and JSON") {
    const auto a = parse_spec_text("family: ch\ndim: 2\nmarginals:\n  - {nu: 1.0, alpha: 2.0, beta: 1.0}\n  - {nu: 2.0, alpha: 3.0, beta: 1.0}\nsigma: [[1, 0.3], [0.3, 1]]\n");
    CHECK(a.params.nu(0, 1) == 1.5);
    CHECK(a.params.alpha(0, 1) == 2.5);
    const auto b = parse_spec_text(R"({"family": "matern", "dim": 1, "nu": 0.5, "phi": 2.0, "sigma": 1.5})");
    CHECK(b.kind == SpecKind::Matern);
    CHECK(b.params.phi(0, 0) == 2.0);
    CHECK_THROWS_AS(parse_spec_text("family: ch\ndim: 2\nbogus: 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_spec_text("family: nope\n"), ConfigError);
  }

  TEST_CASE("config loaders") {
    const fs::path dir = scratch_dir("configs");
    write_file(dir / "data.csv", "x,y,variable,value\n0,0,1,1\n1,0,1,2\n0,1,2,3\n");
    write_file(dir / "fit.yaml",
               "data: {path: data.csv}\nmodel: {family: ch, shared_scale: true, rule: theorem1}\nfit: {restarts: 2}\nseed: 9\n");
    const FitConfig fc = load_fit_config((dir / "fit.yaml").string());
    CHECK(fc.data.path == (dir / "data.csv").string());
    CHECK(fc.options.restarts == 2);
    CHECK(fc.options.seed == 9);
    CHECK(fc.shape.kind == SpecKind::CH);
    write_file(dir / "bad.yaml", "data: {path: data.csv}\nmodel: {family: ch}\nunknown_key: 1\n");
    CHECK_THROWS_AS(load_fit_config((dir / "bad.yaml").string()), ConfigError);
    CHECK_THROWS_AS(load_fit_config((dir / "missing.yaml").string()), ConfigError);
    write_file(dir / "detrend.yaml", "data: {path: data.csv}\nbandwidth: inf\n");
    CHECK(std::isinf(load_detrend_config((dir / "detrend.yaml").string()).options.bandwidth));
    CHECK(file_digest((dir / "data.csv").string()).size() == 16);
  }

  TEST_CASE("study runs are deterministic and flag every row") {
    StudyConfig cfg;
    cfg.replicates = 2;
    cfg.n1 = 15;
    cfg.n2 = 20;
    cfg.n_out = 10;
    Matrix s(2, 2);
    s << 1.0, 0.6, 0.6, 1.0;
    cfg.truth = CovarianceSpec::from_params(build_pars_like({{1.0, 1.5, 0.2}, {0.8, 2.0, 0.2}}, s), 2);
    FamilyChoice ch;
    ch.name = "CH";
    cfg.families = {ch};
    cfg.fit.restarts = 1;
    cfg.fit.max_evaluations = 80;
    const auto a = run_simulation_study(cfg), b = run_simulation_study(cfg);
    std::ostringstream oa, ob;
    write_study_long(oa, a);
    write_study_long(ob, b);
    CHECK(oa.str() == ob.str());
    CHECK(!a.rows.empty());
    int null_rows = 0;
    for (const auto& row : a.rows) {
      if (row.family == "null") ++null_rows;
      if (row.status == "ok") CHECK(std::isfinite(row.rmse));
    }
    CHECK(null_rows == 2 * 2);
    for (const auto& row : a.summary) CHECK(row.ok + row.failed == 2);
  }
}
