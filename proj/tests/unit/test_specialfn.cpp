#include <doctest.h>

#include <cmath>
#include <vector>

#include "chfield/errors.hpp"
#include "chfield/specialfn.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace chfield;
namespace sf = chfield::specialfn;

namespace {

struct KummerRow {
  double a, b, z, u;
};

const KummerRow kKummerReference[] = {
#include "kummer_reference.inc"
};

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return g;
}

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

}  // namespace

TEST_SUITE("specialfn") {
  TEST_CASE("log_gamma at integer and half-integer points") {
    CHECK(sf::log_gamma(5.0) == doctest::Approx(std::log(24.0)).epsilon(1e-14));
    CHECK(std::abs(sf::log_gamma(1.0)) < 1e-15);
    CHECK(sf::log_gamma(0.5) == doctest::Approx(0.5 * std::log(M_PI)).epsilon(1e-14));
    CHECK(sf::log_beta(2.0, 3.0) == doctest::Approx(std::log(1.0 / 12.0)).epsilon(1e-14));
    CHECK_THROWS_AS(sf::log_gamma(0.0), DomainError);
    CHECK_THROWS_AS(sf::log_gamma(-1.0), DomainError);
  }

  TEST_CASE("bessel_k closed form and symmetry in order") {
    CHECK(sf::bessel_k(0.5, 1.0) == doctest::Approx(std::sqrt(M_PI / 2.0) * std::exp(-1.0)).epsilon(1e-14));
    for (double nu : {0.3, 1.7, 4.2}) CHECK(sf::bessel_k(-nu, 2.5) == sf::bessel_k(nu, 2.5));
    CHECK_THROWS_AS(sf::bessel_k(1.0, 0.0), DomainError);
    CHECK_THROWS_AS(sf::bessel_k(1.0, -2.0), DomainError);
  }

  TEST_CASE("bessel_k underflow is flagged, not thrown") {
    const auto k = sf::bessel_k_checked(1.0, 800.0);
    CHECK(k.underflow);
    CHECK(k.value == 0.0);
    CHECK_FALSE(sf::bessel_k_checked(1.0, 600.0).underflow);
  }

  TEST_CASE("bessel_k matches the cosh integral on log grids") {
    double worst = 0.0;
    for (double nu : {0.0, 0.5, 1.0, 2.3, 7.5, 15.0, 30.0})
      for (double x : log_grid(1e-8, 700.0, 100)) {
        const double want = oracle::bessel_k(nu, x);
        if (!(want > 1e-300) || !std::isfinite(want)) continue;
        worst = std::max(worst, rel(sf::bessel_k(nu, x), want));
      }
    CHECK(worst < 1e-9);
  }

  TEST_CASE("kummer_u closed forms") {
    CHECK(sf::kummer_u(1.0, 2.0, 2.0) == doctest::Approx(0.5).epsilon(1e-10));
    for (double a : {0.3, 1.5, 6.0})
      for (double z : {0.01, 1.0, 50.0}) CHECK(rel(sf::kummer_u(a, a + 1.0, z), std::pow(z, -a)) < 1e-12);
    for (double z : {0.01, 0.5, 3.0, 20.0})
      CHECK(rel(sf::kummer_u(0.5, 0.5, z), std::sqrt(M_PI) * std::exp(z) * std::erfc(std::sqrt(z))) < 1e-10);
    for (double b : {-3.0, -0.5, 0.5}) {
      const double a = 1.3;
      CHECK(rel(sf::kummer_u(a, b, 0.0), std::tgamma(1.0 - b) / std::tgamma(a - b + 1.0)) < 1e-13);
    }
    // e E1(1)
    CHECK(rel(sf::kummer_u(1.0, 1.0, 1.0), std::exp(1.0) * 0.21938393439552027368) < 1e-12);
  }

  TEST_CASE("kummer_u domain and divergence errors") {
    CHECK_THROWS_AS(sf::kummer_u(0.0, 0.5, 1.0), DomainError);
    CHECK_THROWS_AS(sf::kummer_u(-1.0, 0.5, 1.0), DomainError);
    CHECK_THROWS_AS(sf::kummer_u(1.0, 0.5, -1.0), DomainError);
    CHECK_THROWS_AS(sf::kummer_u(1.0, 1.0, 0.0), DivergenceError);
    CHECK_THROWS_AS(sf::kummer_u(1.0, 2.5, 0.0), DivergenceError);
  }

  TEST_CASE("kummer_u matches the Laplace integral on log grids") {
    double worst = 0.0;
    for (double a : {0.1, 0.5, 1.0, 2.5, 8.0})
      for (double b : {-3.0, -0.4, 0.5, 1.0, 2.7})
        for (double z : log_grid(1e-4, 1e4, 100)) worst = std::max(worst, rel(sf::kummer_u(a, b, z), oracle::kummer_u(a, b, z)));
    CHECK(worst < 1e-8);
  }

  TEST_CASE("kummer_u matches the high-precision reference table") {
    double worst = 0.0;
    for (const auto& row : kKummerReference) {
      const double got = sf::log_kummer_u(row.a, row.b, row.z);
      const double err = std::abs(got - std::log(row.u));
      worst = std::max(worst, err);
      if (err >= 1e-8) MESSAGE("a=" << row.a << " b=" << row.b << " z=" << row.z);
    }
    CHECK(worst < 1e-8);
  }

  TEST_CASE("kummer_u evaluation branches agree where they overlap") {
    using B = sf::KummerBranch;
    gen::Rng r(11);
    int compared = 0;
    for (int i = 0; i < 400; ++i) {
      const double a = r.log_uniform(0.05, 20.0), b = r.uniform(-10.0, 10.0), z = r.log_uniform(1e-3, 1e3);
      const double ref = sf::log_kummer_u_branch(a, b, z, B::Quadrature);
      for (B other : {B::Series, B::Asymptotic}) {
        const double v = sf::log_kummer_u_branch(a, b, z, other);
        if (std::isnan(v)) continue;
        ++compared;
        CHECK(std::abs(v - ref) < 1e-9 * std::max(1.0, std::abs(ref)));
      }
    }
    CHECK(compared > 100);
  }

  TEST_CASE("kummer_u is decreasing in z and increasing in b") {
    gen::Rng r(3);
    for (int i = 0; i < 1000; ++i) {
      const double a = r.log_uniform(0.1, 20.0), z = r.log_uniform(1e-3, 1e3);
      const double b1 = r.uniform(-10.0, 10.0), b2 = b1 + r.log_uniform(1e-3, 5.0);
      CHECK(sf::log_kummer_u(a, b1, z) <= sf::log_kummer_u(a, b2, z) + 1e-12);
      const double z2 = z * (1.0 + r.log_uniform(1e-3, 1.0));
      CHECK(sf::log_kummer_u(a, b1, z2) < sf::log_kummer_u(a, b1, z));
    }
  }

  TEST_CASE("Gamma(a) U(a, c, z) is log-convex in (a, c)") {
    gen::Rng r(5);
    for (int i = 0; i < 1000; ++i) {
      const double a1 = r.log_uniform(0.1, 10.0), a2 = r.log_uniform(0.1, 10.0);
      const double c1 = r.uniform(-8.0, 8.0), c2 = r.uniform(-8.0, 8.0);
      const double z = r.log_uniform(1e-3, 1e3);
      auto g = [&](double a, double c) { return sf::log_gamma(a) + sf::log_kummer_u(a, c, z); };
      const double mid = g(0.5 * (a1 + a2), 0.5 * (c1 + c2));
      CHECK(mid <= 0.5 * (g(a1, c1) + g(a2, c2)) + 1e-10 * std::max(1.0, std::abs(mid)));
    }
  }

  TEST_CASE("bessel_k is strictly decreasing in x") {
    for (double nu : {0.0, 0.7, 3.0, 12.0}) {
      const auto g = log_grid(1e-6, 500.0, 200);
      for (std::size_t i = 1; i < g.size(); ++i) CHECK(sf::bessel_k(nu, g[i]) < sf::bessel_k(nu, g[i - 1]));
    }
  }
}
