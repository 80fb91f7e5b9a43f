#include <doctest.h>

#include <cmath>

#include "chfield/errors.hpp"
#include "chfield/kernels.hpp"
#include "chfield/spectralgen.hpp"
#include "generators.hpp"

using namespace chfield;

namespace {

SpectralCrossSpec pair_spec(const SpectralMarginal& a, const SpectralMarginal& b, std::complex<double> s12, int dim) {
  SpectralCrossSpec s;
  s.marginals = {a, b};
  s.sigma = Eigen::MatrixXcd::Identity(2, 2);
  s.sigma(0, 1) = s12;
  s.sigma(1, 0) = std::conj(s12);
  s.dim = dim;
  return s;
}

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

}  // namespace

TEST_SUITE("spectralgen") {
  TEST_CASE("diagonal transform reproduces the CH covariance") {
    const auto m = SpectralMarginal::ch(1.2, 1.8, 0.7);
    for (int d = 1; d <= 3; ++d) {
      const auto s = pair_spec(m, SpectralMarginal::ch(0.8, 2.5, 1.0), 0.3, d);
      for (double h : {0.05, 0.3, 1.0, 5.0}) CHECK(rel(hankel_cross_cov(h, s, 0, 0), ch_cov(h, {1.2, 1.8, 0.7, 1.0})) < 1e-4);
    }
  }

  TEST_CASE("zero cross coefficient gives zero") {
    const auto s = pair_spec(SpectralMarginal::ch(1.0, 2.0, 1.0), SpectralMarginal::ch(0.5, 1.5, 1.0), 0.0, 2);
    for (double h : {0.0, 0.5, 3.0}) CHECK(hankel_cross_cov(h, s, 0, 1) == 0.0);
  }

  TEST_CASE("cross covariance at the origin obeys Cauchy-Schwarz") {
    gen::Rng r(12);
    for (int i = 0; i < 5; ++i) {
      const auto a = SpectralMarginal::ch(r.uniform(0.3, 2.5), r.uniform(1.2, 3.0), r.log_uniform(0.3, 3.0));
      const auto b = SpectralMarginal::ch(r.uniform(0.3, 2.5), r.uniform(1.2, 3.0), r.log_uniform(0.3, 3.0));
      const auto s = pair_spec(a, b, 1.0, 2);
      const double c0 = hankel_cross_cov(0.0, s, 0, 1);
      CHECK(c0 > 0.0);
      CHECK(c0 <= 1.0 + 1e-9);
    }
  }

  TEST_CASE("asymmetric form parity") {
    const auto a = SpectralMarginal::ch(1.0, 1.5, 0.8), b = SpectralMarginal::ch(2.0, 2.5, 1.3);
    const auto even = pair_spec(a, b, {0.6, 0.0}, 1);
    const auto odd = pair_spec(a, b, {0.0, 0.6}, 1);
    for (double h : {0.1, 0.7, 2.0, 4.5}) {
      CHECK(std::abs(asym_cross_cov_1d(h, even, 0, 1) - asym_cross_cov_1d(-h, even, 0, 1)) < 1e-8);
      CHECK(std::abs(asym_cross_cov_1d(h, odd, 0, 1) + asym_cross_cov_1d(-h, odd, 0, 1)) < 1e-8);
      CHECK(std::abs(asym_cross_cov_1d(h, odd, 0, 1)) > 1e-4);
    }
    CHECK(std::abs(asym_cross_cov_1d(0.0, odd, 0, 1)) < 1e-12);
    const auto same = pair_spec(a, a, {1.0, 0.0}, 1);
    for (double h : {0.1, 1.0, 3.0}) CHECK(rel(asym_cross_cov_1d(h, same, 0, 1), ch_cov(h, {1.0, 1.5, 0.8, 1.0})) < 1e-4);
    auto two_d = pair_spec(a, b, {0.6, 0.0}, 2);
    CHECK_THROWS(asym_cross_cov_1d(0.5, two_d, 0, 1));
  }

  TEST_CASE("cross term with swapped indices mirrors the lag") {
    const auto a = SpectralMarginal::ch(1.0, 1.5, 0.8), b = SpectralMarginal::ch(2.0, 2.5, 1.3);
    const auto s = pair_spec(a, b, {0.3, 0.4}, 1);
    for (double h : {0.2, 1.1, 3.0}) CHECK(std::abs(asym_cross_cov_1d(h, s, 0, 1) - asym_cross_cov_1d(-h, s, 1, 0)) < 1e-8);
  }

  TEST_CASE("Matern-CH hybrid") {
    const MaternParams m{1.2, 0.5, 1.0};
    const CHParams c{1.2, 2.0, 0.9, 1.0};
    CHECK(matern_ch_cross_cov(0.7, m, c, 0.0, 2) == 0.0);
    const double c0 = matern_ch_cross_cov(0.0, m, c, 0.8, 2);
    CHECK(c0 > 0.0);
    CHECK(c0 <= 0.8 + 1e-9);
    CHECK_THROWS_AS(matern_ch_cross_cov(0.7, m, c, 1.5, 2), ValidityError);
    // Huge alpha with beta = phi sqrt(2 alpha) makes the CH marginal Matern-like.
    const double alpha = 400.0;
    const CHParams near{1.2, alpha, 0.5 * std::sqrt(2.0 * alpha), 1.0};
    const auto pure = pair_spec(SpectralMarginal::ch(1.2, alpha, near.beta), SpectralMarginal::ch(0.6, 2.0, 0.9), 0.8, 2);
    const CHParams other{0.6, 2.0, 0.9, 1.0};
    for (double h : {0.1, 0.5, 1.5}) {
      const double hybrid = matern_ch_cross_cov(h, m, other, 0.8, 2);
      CHECK(rel(hybrid, hankel_cross_cov(h, pure, 0, 1)) < 1e-2);
    }
  }

  TEST_CASE("doubling the resolution changes little") {
    const auto s = pair_spec(SpectralMarginal::ch(0.7, 1.6, 0.8), SpectralMarginal::ch(1.9, 2.6, 1.4), 0.5, 2);
    HankelOptions fine;
    fine.resolution = 2;
    for (double h : {0.05, 0.5, 2.0, 5.0})
      CHECK(rel(hankel_cross_cov(h, s, 0, 1, fine), hankel_cross_cov(h, s, 0, 1)) < 1e-4);
  }

  TEST_CASE("radial cache matches direct evaluation") {
    const auto s = pair_spec(SpectralMarginal::ch(0.7, 1.6, 0.8), SpectralMarginal::ch(1.9, 2.6, 1.4), 0.5, 2);
    auto direct = [s](double r) { return hankel_cross_cov(r, s, 0, 1); };
    const RadialCache cache(direct, 1e-3, 10.0, 160);
    gen::Rng r(13);
    for (int i = 0; i < 20; ++i) {
      const double h = r.log_uniform(1e-3, 10.0);
      CHECK(rel(cache(h), direct(h)) < 1e-5);
    }
    CHECK(cache(20.0) == direct(20.0));
  }

  TEST_CASE("larger tail parameter gives faster decay") {
    // The cross tail follows the smaller alpha, so both move together.
    double prev = 0.0;
    for (double a : {0.75, 1.25, 2.2}) {
      const auto s = pair_spec(SpectralMarginal::ch(1.0, a, 1.0), SpectralMarginal::ch(1.6, a, 1.0), 0.8, 1);
      const double ratio = hankel_cross_cov(40.0, s, 0, 1) / hankel_cross_cov(20.0, s, 0, 1);
      if (prev > 0.0) CHECK(ratio < prev);
      prev = ratio;
    }
  }

  TEST_CASE("spectral density matrix stays PSD for any PSD sigma") {
    gen::Rng r(14);
    for (int i = 0; i < 20; ++i) {
      const int p = r.integer(2, 4);
      std::vector<SpectralMarginal> ms;
      for (int j = 0; j < p; ++j) ms.push_back(SpectralMarginal::ch(r.uniform(0.3, 3.0), r.uniform(0.6, 4.0), r.log_uniform(0.2, 5.0)));
      const Matrix rho = gen::correlation(r, p);
      for (double x : {1e-3, 0.1, 1.0, 10.0, 1e3}) {
        Matrix f(p, p);
        for (int j = 0; j < p; ++j)
          for (int k = 0; k < p; ++k)
            f(j, k) = rho(j, k) * std::exp(0.5 * (log_marginal_sdf(ms[j], x, 1) + log_marginal_sdf(ms[k], x, 1)));
        CHECK(is_psd(f));
      }
    }
  }

  TEST_CASE("spec validation") {
    auto s = pair_spec(SpectralMarginal::ch(1.0, 0.9, 1.0), SpectralMarginal::ch(1.0, 2.0, 1.0), 0.2, 2);
    CHECK_THROWS_AS(s.validate(false), InfiniteDensityError);
    s = pair_spec(SpectralMarginal::ch(1.0, 1.9, 1.0), SpectralMarginal::ch(1.0, 2.0, 1.0), 1.2, 2);
    CHECK_THROWS_AS(s.validate(false), ValidityError);
    s = pair_spec(SpectralMarginal::ch(1.0, 1.9, 1.0), SpectralMarginal::ch(1.0, 2.0, 1.0), {0.2, 0.1}, 2);
    CHECK_THROWS_AS(s.validate(false), UnsupportedCaseError);
    CHECK_NOTHROW(s.validate(true));
  }
}
