#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "regensim/rates.hpp"

using namespace regensim::rates;

namespace {

double h_phi_oracle(double c, double phi, double u) {
  return oracles::romberg([&](double s) { return 1.0 / (c * std::pow(s, phi)); }, 1.0, u);
}

}  // namespace

TEST_SUITE_BEGIN("rates");

TEST_CASE("h_phi against quadrature oracle") {
  PhiSpec half{1.0, 0.5};
  CHECK(h_phi(half, 1.0) == 0.0);
  // int_1^4 s^{-1/2} ds = 2
  CHECK(oracles::rel_err(h_phi(half, 4.0), h_phi_oracle(1.0, 0.5, 4.0)) < 1e-12);
  CHECK(h_phi(half, 4.0) == doctest::Approx(2.0).epsilon(1e-12));
  // phi = 0: int_1^5 (1/2) ds = 2
  PhiSpec flat{2.0, 0.0};
  CHECK(h_phi(flat, 5.0) == doctest::Approx(h_phi_oracle(2.0, 0.0, 5.0)).epsilon(1e-12));
  CHECK(h_phi(flat, 5.0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("h_phi rejects u below 1 and bad specs") {
  PhiSpec spec{1.0, 0.5};
  CHECK_THROWS_AS(h_phi(spec, 0.999), std::domain_error);
  CHECK_THROWS_AS((PhiSpec{1.0, 1.0}).validate(), regensim::validation_error);
  CHECK_THROWS_AS((PhiSpec{0.0, 0.5}).validate(), regensim::validation_error);
}

TEST_CASE("h_phi_inv matches bisection of the oracle") {
  PhiSpec half{1.0, 0.5};
  CHECK(h_phi_inv(half, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  double inv = oracles::bisect([&](double u) { return h_phi_oracle(1.0, 0.5, u); }, 2.0, 1.0, 100.0);
  CHECK(oracles::rel_err(h_phi_inv(half, 2.0), inv) < 1e-10);
  CHECK(h_phi_inv(half, 2.0) == doctest::Approx(4.0).epsilon(1e-12));
  PhiSpec lin{1.0, 0.0};
  double inv0 = oracles::bisect([&](double u) { return h_phi_oracle(1.0, 0.0, u); }, 3.0, 1.0, 100.0);
  CHECK(oracles::rel_err(h_phi_inv(lin, 3.0), inv0) < 1e-10);
  CHECK(h_phi_inv(lin, 3.0) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("rate composes Phi with the inverse") {
  RatePoly rp = RatePoly::from(PhiSpec{1.0, 0.5});
  CHECK(rate(rp, 0.0) == doctest::Approx(1.0));
  // r(2) = Phi(H^{-1}(2)) via both oracles
  double u = oracles::bisect([&](double v) { return h_phi_oracle(1.0, 0.5, v); }, 2.0, 1.0, 100.0);
  CHECK(oracles::rel_err(rate(rp, 2.0), std::sqrt(u)) < 1e-10);
  CHECK(rate(rp, 2.0) == doctest::Approx(2.0).epsilon(1e-12));
  RatePoly flat = RatePoly::from(PhiSpec{3.0, 0.0});
  CHECK(rate(flat, 17.0) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("rate_integral equals quadrature of rate") {
  RatePoly rp = RatePoly::from(PhiSpec{1.0, 0.5});
  CHECK(rate_integral(rp, 0.0) == 0.0);
  double q = oracles::romberg([&](double s) { return rate(rp, s); }, 0.0, 2.0);
  CHECK(oracles::rel_err(rate_integral(rp, 2.0), q) < 1e-10);
  CHECK(rate_integral(rp, 2.0) == doctest::Approx(3.0).epsilon(1e-12));
  RatePoly flat = RatePoly::from(PhiSpec{2.0, 0.0});
  double q0 = oracles::romberg([&](double s) { return rate(flat, s); }, 0.0, 5.0);
  CHECK(oracles::rel_err(rate_integral(flat, 5.0), q0) < 1e-10);
  CHECK(rate_integral(flat, 5.0) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("round trip h_phi_inv(h_phi(u)) = u on a log grid") {
  for (double c : {0.5, 1.0, 3.0}) {
    for (double phi : {0.0, 0.3, 0.5, 0.8}) {
      PhiSpec spec{c, phi};
      for (int k = 0; k <= 24; ++k) {
        double u = std::pow(10.0, 6.0 * k / 24.0);
        double back = h_phi_inv(spec, h_phi(spec, u));
        CHECK(std::abs(back - u) <= 1e-10 * u);
      }
    }
  }
}

TEST_CASE("sub-additivity with constant 2^kappa + 1 on a grid") {
  for (double c : {0.5, 1.0, 3.0}) {
    for (double phi : {0.0, 0.3, 0.5, 0.8}) {
      RatePoly rp = RatePoly::from(PhiSpec{c, phi});
      double cprime = std::pow(2.0, rp.kappa) + 1.0;
      for (int i = 0; i <= 20; ++i) {
        for (int j = 0; j <= 20; ++j) {
          double t = 100.0 * i / 20.0, s = 100.0 * j / 20.0;
          CHECK(rate(rp, t + s) <= cprime * (rate(rp, t) + rate(rp, s)) * (1.0 + 1e-12));
        }
      }
    }
  }
}

TEST_CASE("sub-multiplicativity holds when c >= 1") {
  // r(0) = c, so r(t+s) <= r(t) r(s) needs c >= 1; the property is gated.
  for (double c : {1.0, 3.0}) {
    for (double phi : {0.0, 0.3, 0.5, 0.8}) {
      RatePoly rp = RatePoly::from(PhiSpec{c, phi});
      for (int i = 0; i <= 20; ++i) {
        for (int j = 0; j <= 20; ++j) {
          double t = 100.0 * i / 20.0, s = 100.0 * j / 20.0;
          CHECK(rate(rp, t + s) <= rate(rp, t) * rate(rp, s) * (1.0 + 1e-12));
        }
      }
    }
  }
  // and genuinely fails for c < 1 at t = s = 0
  RatePoly small = RatePoly::from(PhiSpec{0.5, 0.5});
  CHECK(rate(small, 0.0) > rate(small, 0.0) * rate(small, 0.0));
}

TEST_CASE("lower-order bound rate(s) >= c min(1, (c(1-phi))^kappa) s^kappa for s >= 1") {
  for (double c : {0.5, 1.0, 3.0}) {
    for (double phi : {0.0, 0.3, 0.5, 0.8}) {
      RatePoly rp = RatePoly::from(PhiSpec{c, phi});
      double coeff = c * std::min(1.0, std::pow(c * (1.0 - phi), rp.kappa));
      for (int k = 0; k <= 30; ++k) {
        double s = 1.0 + 99.0 * k / 30.0;
        CHECK(rate(rp, s) >= coeff * std::pow(s, rp.kappa) * (1.0 - 1e-12));
      }
    }
  }
}

TEST_CASE("rate is nondecreasing and r(0) = Phi(1) = c") {
  for (double c : {0.5, 2.0}) {
    for (double phi : {0.0, 0.4, 0.9}) {
      RatePoly rp = RatePoly::from(PhiSpec{c, phi});
      CHECK(rate(rp, 0.0) == doctest::Approx(c).epsilon(1e-14));
      double prev = 0.0;
      for (int k = 0; k <= 50; ++k) {
        double v = rate(rp, k * 2.0);
        CHECK(v >= prev);
        prev = v;
      }
    }
  }
}

TEST_SUITE_END();
