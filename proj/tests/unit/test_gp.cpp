#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "chfield/errors.hpp"
#include "chfield/gp.hpp"
#include "chfield/kernels.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace chfield;

namespace {

CovarianceModel ch_model(const ParamMatrixSet& ps, int dim) { return CovarianceModel(CovarianceSpec::from_params(ps, dim)); }

ParamMatrixSet univariate_ch(double sigma2, double tau) {
  ParamMatrixSet ps = build_pars_like({{0.8, 1.5, 0.4}}, Matrix::Constant(1, 1, sigma2));
  ps.tau(0) = tau;
  return ps;
}

SpatialDataset points(const std::vector<std::vector<double>>& xy, const std::vector<int>& var) {
  SpatialDataset d;
  d.locations.resize(static_cast<Eigen::Index>(xy.size()), static_cast<Eigen::Index>(xy[0].size()));
  for (std::size_t i = 0; i < xy.size(); ++i)
    for (std::size_t c = 0; c < xy[i].size(); ++c) d.locations(i, c) = xy[i][c];
  d.var_index = var;
  d.values = Vector::Zero(static_cast<Eigen::Index>(xy.size()));
  return d;
}

}  // namespace

TEST_SUITE("gp") {
  TEST_CASE("single point covariance and likelihood") {
    const auto model = ch_model(univariate_ch(1.7, 0.3), 2);
    SpatialDataset d = points({{0.2, 0.4}}, {0});
    const Matrix k = cov_matrix(model, d, d);
    CHECK(k(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    d.values(0) = 0.9;
    const double want = -0.5 * std::log(2.0 * M_PI * 2.0) - 0.9 * 0.9 / (2.0 * 2.0);
    CHECK(loglik(model, d) == doctest::Approx(want).epsilon(1e-13));
  }

  TEST_CASE("self covariance matrix is symmetric and nugget only on the diagonal") {
    gen::Rng r(20);
    const ParamMatrixSet ps = gen::theorem1_valid(r, 3, 2);
    const auto model = ch_model(ps, 2);
    const SpatialDataset d = gen::design(r, 30, 3, 2);
    const Matrix k = cov_matrix(model, d, d);
    CHECK((k - k.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    const SpatialDataset copy = d;
    const Matrix cross = cov_matrix(model, d, copy);
    CHECK((cross - k).cwiseAbs().maxCoeff() < 1e-15);  // zero nugget
    ParamMatrixSet noisy = ps;
    noisy.tau = Vector::Constant(3, 0.25);
    const auto nm = ch_model(noisy, 2);
    const Matrix kn = cov_matrix(nm, d, d), cn = cov_matrix(nm, d, copy);
    CHECK(((kn - cn).diagonal().array() - 0.25).abs().maxCoeff() < 1e-14);
    Matrix off = kn - cn;
    off.diagonal().setZero();
    CHECK(off.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("serial and parallel assembly agree") {
    gen::Rng r(21);
    const auto model = ch_model(gen::theorem1_valid(r, 2, 2), 2);
    const SpatialDataset d = gen::design(r, 50, 2, 2);
    CHECK((cov_matrix(model, d, d, Assembly::Serial) - cov_matrix(model, d, d, Assembly::Parallel)).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("asymmetric cross covariance block relation") {
    SpectralCrossSpec s;
    s.marginals = {SpectralMarginal::ch(1.0, 1.5, 0.8), SpectralMarginal::ch(2.0, 2.5, 1.3)};
    s.sigma = Eigen::MatrixXcd::Identity(2, 2);
    s.sigma(0, 1) = {0.3, 0.4};
    s.sigma(1, 0) = {0.3, -0.4};
    s.dim = 1;
    const CovarianceModel model(CovarianceSpec::from_spectral(s, Vector::Zero(2)));
    const SpatialDataset a = points({{0.1}, {0.9}, {1.7}}, {0, 0, 0});
    const SpatialDataset b = points({{0.4}, {1.2}}, {1, 1});
    const Matrix kab = cov_matrix(model, a, b), kba = cov_matrix(model, b, a);
    CHECK((kab - kba.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    const double lag = 0.1 - 0.4;
    CHECK(kab(0, 0) == doctest::Approx(asym_cross_cov_1d(lag, s, 0, 1)).epsilon(1e-6));
  }

  TEST_CASE("incompatible dimensions are rejected") {
    const auto model = ch_model(univariate_ch(1.0, 0.0), 2);
    const SpatialDataset d = points({{0.1, 0.2, 0.3}}, {0});
    CHECK_THROWS_AS(cov_matrix(model, d, d), ContractError);
  }

  TEST_CASE("exact duplicates need a nugget") {
    SpatialDataset d = points({{0.3, 0.3}, {0.3, 0.3}, {0.8, 0.1}}, {0, 0, 0});
    d.values << 0.5, 0.4, -0.2;
    CHECK(std::isfinite(loglik(ch_model(univariate_ch(1.0, 0.1), 2), d)));
    CHECK_THROWS_AS(loglik(ch_model(univariate_ch(1.0, 0.0), 2), d), NotPositiveDefiniteError);
  }

  TEST_CASE("factorize reports the failing pivot") {
    Matrix k = Matrix::Identity(3, 3);
    k(2, 2) = -1.0;
    try {
      factorize(k);
      FAIL("expected an exception");
    } catch (const NotPositiveDefiniteError& e) {
      CHECK(e.pivot() == 2);
    }
  }

  TEST_CASE("loglik matches the dense-inverse formula") {
    gen::Rng r(22);
    for (int i = 0; i < 10; ++i) {
      ParamMatrixSet ps = gen::theorem1_valid(r, 2, 2);
      ps.tau = Vector::Constant(2, 0.05);
      const auto model = ch_model(ps, 2);
      SpatialDataset d = gen::design(r, 6, 2, 2);
      for (int j = 0; j < 6; ++j) d.values(j) = r.normal();
      const double want = oracle::gaussian_loglik(cov_matrix(model, d, d), d.values);
      CHECK(std::abs(loglik(model, d) - want) < 1e-10 * std::max(1.0, std::abs(want)));
    }
  }

  TEST_CASE("independent blocks add up") {
    gen::Rng r(23);
    const auto model = ch_model(gen::theorem1_valid(r, 2, 2), 2);
    SpatialDataset d = gen::design(r, 12, 2, 2);
    for (int j = 0; j < 12; ++j) d.values(j) = r.normal();
    std::vector<int> first, second;
    for (int j = 0; j < 12; ++j) {
      d.block.push_back(j % 3 == 0 ? "a" : "b");
      (j % 3 == 0 ? first : second).push_back(j);
    }
    SpatialDataset fa = d.subset(first), fb = d.subset(second);
    fa.block.clear();
    fb.block.clear();
    CHECK(loglik(model, d) == doctest::Approx(loglik(model, fa) + loglik(model, fb)).epsilon(1e-12));
  }

  TEST_CASE("loglik is invariant under permutation") {
    gen::Rng r(24);
    const auto model = ch_model(gen::theorem1_valid(r, 3, 2), 2);
    SpatialDataset d = gen::design(r, 25, 3, 2);
    for (int j = 0; j < 25; ++j) d.values(j) = r.normal();
    std::vector<int> perm(25);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), r.eng);
    CHECK(loglik(model, d.subset(perm)) == doctest::Approx(loglik(model, d)).epsilon(1e-11));
  }

  TEST_CASE("prediction interpolates without a nugget") {
    gen::Rng r(25);
    const auto model = ch_model(gen::theorem1_valid(r, 2, 2), 2);
    SpatialDataset train = gen::design(r, 15, 2, 2);
    for (int j = 0; j < 15; ++j) train.values(j) = r.normal();
    const SpatialDataset targets = train.subset({3, 7});
    const auto pred = predict(model, train, targets);
    CHECK(std::abs(pred.mean(0) - train.values(3)) < 1e-8);
    CHECK(std::abs(pred.mean(1) - train.values(7)) < 1e-8);
    CHECK(pred.variance.cwiseAbs().maxCoeff() < 1e-8);
  }

  TEST_CASE("independent variable carries no information") {
    Matrix s(2, 2);
    s << 1.4, 0.0, 0.0, 0.8;
    const auto model = ch_model(build_pars_like({{1.0, 1.5, 0.3}, {0.6, 2.0, 0.3}}, s), 2);
    gen::Rng r(26);
    SpatialDataset train = gen::design(r, 10, 1, 2);
    std::fill(train.var_index.begin(), train.var_index.end(), 1);
    for (int j = 0; j < 10; ++j) train.values(j) = r.normal();
    SpatialDataset target = gen::design(r, 3, 1, 2);
    const auto pred = predict(model, train, target);
    for (int j = 0; j < 3; ++j) {
      CHECK(std::abs(pred.mean(j)) < 1e-14);
      CHECK(pred.variance(j) == doctest::Approx(1.4).epsilon(1e-12));
    }
  }

  TEST_CASE("prediction intervals") {
    gen::Rng r(27);
    const auto model = ch_model(gen::theorem1_valid(r, 2, 2), 2);
    SpatialDataset train = gen::design(r, 10, 2, 2);
    for (int j = 0; j < 10; ++j) train.values(j) = r.normal();
    const auto pred = predict(model, train, gen::design(r, 5, 2, 2));
    CHECK(interval_z(0.95) == doctest::Approx(1.959964).epsilon(1e-6));
    for (int j = 0; j < 5; ++j) {
      CHECK(pred.variance(j) >= 0.0);
      CHECK(pred.upper(j) - pred.mean(j) == doctest::Approx(1.959963984540054 * std::sqrt(pred.variance(j))).epsilon(1e-12));
      CHECK(pred.upper(j) >= pred.lower(j));
    }
  }

  TEST_CASE("nugget option widens the variance by tau") {
    gen::Rng r(28);
    ParamMatrixSet ps = gen::theorem1_valid(r, 2, 2);
    ps.tau << 0.2, 0.3;
    const auto model = ch_model(ps, 2);
    SpatialDataset train = gen::design(r, 10, 2, 2);
    for (int j = 0; j < 10; ++j) train.values(j) = r.normal();
    const SpatialDataset targets = gen::design(r, 4, 2, 2);
    PredictOptions with;
    with.include_nugget = true;
    const auto a = predict(model, train, targets), b = predict(model, train, targets, with);
    for (int j = 0; j < 4; ++j) CHECK(b.variance(j) - a.variance(j) == doctest::Approx(ps.tau(targets.var_index[j])).epsilon(1e-12));
  }

  TEST_CASE("prediction matches the block-inversion conditional") {
    gen::Rng r(29);
    for (int i = 0; i < 20; ++i) {
      const int p = r.integer(1, 3);
      ParamMatrixSet ps = gen::theorem1_valid(r, p, 2);
      ps.tau = Vector::Constant(p, 0.1);
      const auto model = ch_model(ps, 2);
      SpatialDataset train = gen::design(r, r.integer(5, 30), p, 2);
      for (int j = 0; j < train.n(); ++j) train.values(j) = r.normal();
      const SpatialDataset targets = gen::design(r, 6, p, 2);
      const auto pred = predict(model, train, targets);
      const ParamMatrixSet clean = [&] {
        ParamMatrixSet c = ps;
        c.tau.setZero();
        return c;
      }();
      const auto latent = ch_model(clean, 2);
      const auto want = oracle::gaussian_conditional(cov_matrix(model, train, train), cov_matrix(model, train, targets),
                                                     cov_matrix(latent, targets, targets), train.values);
      CHECK((pred.mean - want.mean).cwiseAbs().maxCoeff() < 1e-10);
      CHECK((pred.variance - want.variance).cwiseAbs().maxCoeff() < 1e-10);
    }
  }

  TEST_CASE("more training data never increases the predictive variance") {
    gen::Rng r(30);
    for (int i = 0; i < 10; ++i) {
      ParamMatrixSet ps = gen::theorem1_valid(r, 2, 2);
      ps.tau = Vector::Constant(2, 0.05);
      const auto model = ch_model(ps, 2);
      SpatialDataset full = gen::design(r, 30, 2, 2);
      const SpatialDataset targets = gen::design(r, 5, 2, 2);
      std::vector<int> rows;
      Vector prev = Vector::Constant(5, 1e300);
      for (int m = 0; m < 30; ++m) {
        rows.push_back(m);
        if (m % 6 != 5) continue;
        const auto pred = predict(model, full.subset(rows), targets);
        CHECK((pred.variance.array() <= prev.array() + 1e-12).all());
        prev = pred.variance;
      }
    }
  }

  TEST_CASE("theorem1-valid parameters give PSD covariance matrices") {
    gen::Rng r(31);
    for (int i = 0; i < 50; ++i) {
      const int p = r.integer(2, 4);
      const auto model = ch_model(gen::theorem1_valid(r, p, 2), 2);
      const SpatialDataset d = gen::design(r, r.integer(5, 60), p, 2);
      CHECK(is_psd(cov_matrix(model, d, d), 1e-9));
    }
  }

  TEST_CASE("simulation is reproducible and scales with sigma") {
    gen::Rng r(32);
    const ParamMatrixSet ps = gen::theorem1_valid(r, 2, 2);
    const SpatialDataset d = gen::design(r, 20, 2, 2);
    const Vector a = simulate(ch_model(ps, 2), d, 99), b = simulate(ch_model(ps, 2), d, 99);
    CHECK(a == b);
    CHECK(simulate(ch_model(ps, 2), d, 100) != a);
    ParamMatrixSet tiny = ps;
    tiny.sigma *= 1e-12;
    CHECK(simulate(ch_model(tiny, 2), d, 99).cwiseAbs().maxCoeff() < 1e-4);
  }

  TEST_CASE("simulated sample covariance matches the model") {
    gen::Rng r(33);
    const auto model = ch_model(gen::theorem1_valid(r, 2, 2), 2);
    const SpatialDataset d = gen::design(r, 5, 2, 2);
    const Matrix k = cov_matrix(model, d, d);
    const int reps = 2000;
    Matrix acc = Matrix::Zero(5, 5);
    for (int s = 0; s < reps; ++s) {
      const Vector v = simulate(model, d, 1000 + s);
      acc += v * v.transpose();
    }
    acc /= reps;
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        const double se = std::sqrt((k(i, j) * k(i, j) + k(i, i) * k(j, j)) / reps);
        CHECK(std::abs(acc(i, j) - k(i, j)) < 3.0 * se);
      }
  }

  TEST_CASE("simulation rejects indefinite covariance") {
    Matrix s(2, 2);
    s << 1.0, 3.0, 3.0, 1.0;
    const auto model = ch_model(build_pars_like({{1.0, 1.5, 0.5}, {1.0, 1.5, 0.5}}, s), 2);
    gen::Rng r(34);
    CHECK_THROWS_AS(simulate(model, gen::design(r, 10, 2, 2), 1), ValidityError);
  }

  TEST_CASE("bivariate prediction beats single-variable prediction on average") {
    Matrix s(2, 2);
    s << 1.0, 0.8, 0.8, 1.0;
    const auto model = ch_model(build_pars_like({{1.0, 1.5, 0.1}, {1.0, 1.5, 0.1}}, s), 2);
    gen::Rng r(35);
    double mse_both = 0.0, mse_single = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      SpatialDataset all = gen::design(r, 80, 2, 2);
      for (int j = 0; j < 20; ++j) all.var_index[j] = 0;
      all.values = simulate(model, all, 500 + rep);
      std::vector<int> tgt, y1, both;
      for (int j = 0; j < 80; ++j) {
        if (j < 10) tgt.push_back(j);
        else {
          both.push_back(j);
          if (all.var_index[j] == 0) y1.push_back(j);
        }
      }
      const SpatialDataset t = all.subset(tgt);
      const auto pb = predict(model, all.subset(both), t), p1 = predict(model, all.subset(y1), t);
      mse_both += (pb.mean - t.values).squaredNorm();
      mse_single += (p1.mean - t.values).squaredNorm();
    }
    CHECK(mse_both <= mse_single);
  }
}
