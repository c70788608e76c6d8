#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "regensim/models.hpp"
#include "regensim/stats.hpp"

using namespace regensim;
using models::JumpSdeModel;
using models::LyapunovV;
using models::Model;
using models::OuModel;
using models::WeakDriftDiffusionModel;

namespace {

const Model kOu = OuModel{1.0, std::sqrt(2.0)};

double ou_density(double t, double x, double y) {
  double mean = x * std::exp(-t);
  double var = 1.0 - std::exp(-2.0 * t);
  return std::exp(-0.5 * (y - mean) * (y - mean) / var) / std::sqrt(2.0 * M_PI * var);
}

}  // namespace

TEST_SUITE_BEGIN("models");

TEST_CASE("ou transition density closed form and preconditions") {
  // long horizon: stationary N(0,1), peak 1/sqrt(2 pi)
  CHECK(models::transition_density(kOu, 50.0, 0.0, 0.0) ==
        doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-10));
  // peak at the transition mean
  double peak = models::transition_density(kOu, 1.0, 2.0, 2.0 * std::exp(-1.0));
  CHECK(peak == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI * (1.0 - std::exp(-2.0)))).epsilon(1e-12));
  CHECK_THROWS_AS(models::transition_density(kOu, 0.0, 0.0, 0.0), std::domain_error);
  Model wd = WeakDriftDiffusionModel{};
  CHECK_THROWS_AS(models::transition_density(wd, 1.0, 0.0, 0.0), regensim::unsupported_model);
  CHECK_THROWS_AS(models::resolvent_density(wd, 0.0, 0.0), regensim::unsupported_model);
}

TEST_CASE("ou transition density integrates to one") {
  for (double t : {0.1, 1.0, 10.0}) {
    double sd = std::sqrt(1.0 - std::exp(-2.0 * t));
    double x = 0.7;
    double mean = x * std::exp(-t);
    double mass = oracles::romberg(
        [&](double y) { return models::transition_density(kOu, t, x, y); }, mean - 8.0 * sd,
        mean + 8.0 * sd);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("chapman-kolmogorov for the ou semigroup") {
  for (auto [s, t] : {std::pair{0.5, 0.5}, std::pair{1.0, 2.0}}) {
    double x = 0.4, y = -0.9;
    double conv = oracles::romberg(
        [&](double z) {
          return models::transition_density(kOu, s, x, z) * models::transition_density(kOu, t, z, y);
        },
        -10.0, 10.0);
    CHECK(conv == doctest::Approx(models::transition_density(kOu, s + t, x, y)).epsilon(1e-6));
  }
}

TEST_CASE("resolvent density: golden value, symmetry, window mass") {
  // nested quadrature oracle for u1(0,0) = int e^{-t} (2 pi (1-e^{-2t}))^{-1/2} dt,
  // integrated in tau = sqrt(t) to handle the spike; frozen golden value below
  double oracle = oracles::romberg(
      [&](double tau) {
        double t = tau * tau;
        if (t == 0.0) return 2.0 / (std::sqrt(2.0) * std::sqrt(2.0 * M_PI));
        return 2.0 * tau * std::exp(-t) * ou_density(t, 0.0, 0.0);
      },
      0.0, std::sqrt(46.0));
  double g0 = models::resolvent_density(kOu, 0.0, 0.0);
  CHECK(oracles::rel_err(g0, oracle) < 1e-9);
  // frozen from the oracle; this instance also has the closed form sqrt(2 pi)/4
  CHECK(g0 == doctest::Approx(0.62665706865774770).epsilon(1e-9));

  for (double y : {0.3, 1.1, 2.5}) {
    CHECK(models::resolvent_density(kOu, 0.0, y) ==
          doctest::Approx(models::resolvent_density(kOu, 0.0, -y)).epsilon(1e-10));
  }

  double mass = oracles::romberg(
      [&](double y) { return models::resolvent_density(kOu, 0.0, y); }, -8.0, 8.0, 16, 1e-10);
  CHECK(mass > 0.999);
  CHECK(mass <= 1.0 + 1e-7);
}

TEST_CASE("sample_path determinism and ou moments") {
  RngStream a(42, 0), b(42, 0);
  models::Path p1 = models::sample_path(kOu, 0.3, 2.0, 1e-2, a);
  models::Path p2 = models::sample_path(kOu, 0.3, 2.0, 1e-2, b);
  REQUIRE(p1.states.size() == p2.states.size());
  for (std::size_t i = 0; i < p1.states.size(); ++i) CHECK(p1.states[i] == p2.states[i]);

  // OU sampling is exact on the grid: mean 0, variance 1 - e^{-10} at t = 5
  int n = 20000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    RngStream rng(9, static_cast<std::uint64_t>(i));
    models::Path p = models::sample_path(kOu, 0.0, 5.0, 0.05, rng);
    double x = p.states.back();
    sum += x;
    sum2 += x * x;
  }
  double mean = sum / n;
  double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 3.0 * std::sqrt(1.0 / n));
  CHECK(var == doctest::Approx(1.0 - std::exp(-10.0)).epsilon(0.02));
}

TEST_CASE("sample_path rejects bad steps and flags divergence") {
  RngStream rng(1, 0);
  CHECK_THROWS_AS(models::sample_path(kOu, 0.0, 1.0, 0.0, rng), regensim::validation_error);
  // an unstable Euler configuration blows up: huge drift with a large step
  Model stiff = WeakDriftDiffusionModel{1e8, 1.9, 0.0, 1};
  RngStream rng2(2, 0);
  CHECK_THROWS_AS(models::sample_path(stiff, 5.0, 50.0, 0.5, rng2),
                  regensim::simulation_diverged);
}

TEST_CASE("skeleton gaps are exp(1) and independent of states") {
  RngStream rng(5, 0);
  models::Skeleton skel = models::sample_skeleton(kOu, 0.0, 12000.0, 1e-2, rng);
  REQUIRE(skel.jump_times.size() > 10000);
  CHECK(skel.jump_times.front() == 0.0);
  std::vector<double> gaps, states_at_gap;
  for (std::size_t i = 1; i < skel.jump_times.size(); ++i) {
    gaps.push_back(skel.jump_times[i] - skel.jump_times[i - 1]);
    states_at_gap.push_back(skel.states[i - 1]);
  }
  std::size_t n = 10000;
  gaps.resize(n);
  states_at_gap.resize(n);
  double mean_gap = stats::mean(gaps);
  CHECK(std::abs(mean_gap - 1.0) < 0.03);
  auto exp_cdf = [](double t) { return t <= 0.0 ? 0.0 : 1.0 - std::exp(-t); };
  CHECK(stats::ks_test_p(gaps, exp_cdf) > 0.01);
  CHECK(std::abs(stats::pearson_correlation(gaps, states_at_gap)) < 0.03);

  // horizon 0: only T_0
  RngStream rng2(5, 1);
  models::Skeleton empty = models::sample_skeleton(kOu, 0.7, 0.0, 1e-2, rng2);
  REQUIRE(empty.jump_times.size() == 1);
  CHECK(empty.jump_times[0] == 0.0);
  CHECK(empty.states[0] == 0.7);
}

TEST_CASE("skeleton states for ou are exact-time evaluations") {
  // conditional on the gap, X_{T_1} | X_{T_0} = x has the exact transition law;
  // check the marginal second moment over many draws started at stationarity
  int n = 40000;
  double sum2 = 0.0;
  long count = 0;
  for (int i = 0; i < n; ++i) {
    RngStream rng(17, static_cast<std::uint64_t>(i));
    models::Skeleton s = models::sample_skeleton(kOu, 0.0, 3.0, 0.25, rng);
    if (s.states.size() > 1) {
      double gap = s.jump_times[1];
      double mean = 0.0 * std::exp(-gap);
      double var = 1.0 - std::exp(-2.0 * gap);
      double z = (s.states[1] - mean) / std::sqrt(var);
      sum2 += z * z;
      ++count;
    }
  }
  CHECK(sum2 / count == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("generator closed forms") {
  LyapunovV v2{2.0, 1.0};
  // sign drift with eps = 0, unit diffusion: A V = -2|x| + 1
  Model sign_drift = WeakDriftDiffusionModel{1.0, 0.0, 0.0, 1};
  CHECK(models::generator_value(sign_drift, v2, 3.0) == doctest::Approx(-5.0).epsilon(1e-14));
  CHECK(models::generator_value(sign_drift, v2, -2.0) == doctest::Approx(-3.0).epsilon(1e-14));
  // OU with sigma^2 = 2 at 0: A V = sigma^2 = 2
  CHECK(models::generator_value(kOu, v2, 0.0) == doctest::Approx(2.0).epsilon(1e-14));
  // jump model with c == 0 reduces to the pure drift part
  JumpSdeModel j;
  j.jump_gamma = 0.0;
  j.contract = 0.0;
  j.r_drift = 1.0;
  j.drift_l = 0.5;
  j.smoothing = 0.0;
  Model jm = j;
  double x = 2.0;
  double expect = -1.0 * 2.0 * std::pow(x, 1.0 + 0.5) + 0.0;  // drift part only, no diffusion
  CHECK(models::generator_value(jm, v2, x) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("jump generator matches a brute-force one-step estimate") {
  JumpSdeModel j;
  j.r_drift = 1.0;
  j.drift_l = 0.5;
  j.smoothing = 1e-3;
  j.jump_gamma = 0.3;
  j.jump_l = 0.5;
  j.contract = 0.2;
  j.levy = models::LevySpec{1.0, 1.0, 0.05, 4.0};
  Model jm = j;
  LyapunovV v2{2.0, 1.0};
  double x = 3.0;
  double quad = models::generator_value(jm, v2, x);

  double h = 1e-3;
  long n = 2000000;
  models::OneStepSampler sampler(jm);
  double sum = 0.0, sum2 = 0.0;
  RngStream rng(123, 0);
  for (long i = 0; i < n; ++i) {
    double xn = sampler.advance(x, h, rng);
    double inc = (v2.value_at(xn) - v2.value_at(x)) / h;
    sum += inc;
    sum2 += inc * inc;
  }
  double mc = sum / static_cast<double>(n);
  double se = std::sqrt((sum2 / n - mc * mc) / static_cast<double>(n));
  CHECK(std::abs(quad - mc) <= 5.0 * h + 3.0 * se);
}

TEST_CASE("verify_drift margins and b_hat") {
  LyapunovV v2{2.0, 1.0};
  rates::PhiSpec sqrt_phi{1.0, 0.5};
  // analytic instance: margin(x) = |x| - 1 exactly
  Model sign_drift = WeakDriftDiffusionModel{1.0, 0.0, 0.0, 1};
  models::DriftReport rep = models::verify_drift(sign_drift, sqrt_phi, v2, 1.0, 100.0, 199);
  for (std::size_t i = 0; i < rep.radii.size(); ++i) {
    CHECK(std::abs(rep.margin[i] - (rep.radii[i] - 1.0)) < 1e-12 * std::max(1.0, rep.radii[i]));
  }
  CHECK(rep.m0 == doctest::Approx(1.0));

  // OU margins positive on [2, 50]
  models::DriftReport ou_rep = models::verify_drift(kOu, sqrt_phi, v2, 2.0, 50.0, 97);
  CHECK(ou_rep.worst_margin > 0.0);
  CHECK(std::isfinite(ou_rep.m0));
  CHECK(ou_rep.b_hat > 0.0);

  // an undersized drift yields negative margins but never throws
  Model weak = WeakDriftDiffusionModel{0.05, 0.1, 1e-3, 1};
  models::DriftReport bad = models::verify_drift(weak, sqrt_phi, v2, 2.0, 50.0, 50);
  CHECK(bad.worst_margin < 0.0);
  CHECK(!std::isfinite(bad.m0));
}

TEST_CASE("recurrence parameter derivations") {
  // diffusion: l = 0.5, r = 1, M = 4, d = 1, kappa = 1.5 -> m = 3, p = m/(2-l) = 2
  auto p = models::RecurrenceParams::diffusion(4.0, 0.5, 1.0, 1, 1.5);
  CHECK(p.beta == doctest::Approx(std::pow(4.0, -0.5)));
  CHECK(p.gamma == doctest::Approx(std::pow(4.0, -0.5)));
  CHECK(p.m_power == doctest::Approx(3.0));
  CHECK(p.r_tilde == doctest::Approx(1.0 - 0.5 * (0.5 + 0.5)));
  CHECK(p.phi.phi_exponent == doctest::Approx(0.5));
  CHECK(p.phi.c == doctest::Approx(3.0 * 0.5));
  CHECK(p.moment_order() == doctest::Approx(2.0));
  CHECK_THROWS_AS(models::RecurrenceParams::diffusion(4.0, 0.5, 1.0, 1, 99.0),
                  regensim::validation_error);

  // jump: m = 2, l = 0.5 -> exponent 1 - (1-l)/m = 0.75
  auto pj = models::RecurrenceParams::jump_sde(4.0, 0.5, 1.0, 0.1, 0.5, 2.0);
  CHECK(pj.phi.phi_exponent == doctest::Approx(1.0 - 0.25));
  CHECK(pj.r_tilde == doctest::Approx(1.0 - 2.0 * 0.1 * 0.5));
}

TEST_CASE("lyapunov floor is continuous, monotone and >= 1") {
  LyapunovV v{2.0, 1.0};
  v.validate();
  CHECK(v.value(0.0) == 1.0);
  CHECK(v.value(0.7) == 1.0);
  CHECK(v.value(1.0) == 1.0);
  CHECK(v.value(1.4) == doctest::Approx(1.96).epsilon(1e-12));
  CHECK(v.value(3.0) == doctest::Approx(9.0).epsilon(1e-12));
  double prev = 0.0;
  for (int i = 0; i <= 200; ++i) {
    double r = 3.0 * i / 200.0;
    double val = v.value(r);
    CHECK(val >= 1.0 - 1e-12);
    CHECK(val >= prev - 1e-12);
    prev = val;
  }
  CHECK_THROWS_AS((LyapunovV{2.0, 1.5}).validate(), regensim::validation_error);
  CHECK_THROWS_AS((LyapunovV{0.5, 1.0}).validate(), regensim::validation_error);
}

TEST_CASE("levy helpers") {
  models::LevySpec levy{1.0, 1.0, 0.05, 4.0};
  levy.validate();
  double mass_quad = oracles::romberg([&](double u) { return levy.density(u); }, 0.05, 4.0) +
                     oracles::romberg([&](double u) { return levy.density(u); }, -4.0, -0.05);
  CHECK(levy.total_mass() == doctest::Approx(mass_quad).epsilon(1e-10));
  // moment condition int_{|u|>=1} |u|^m nu(du) finite and matches quadrature
  double m2 = levy.abs_moment(2.0, 1.0, 4.0);
  double m2_quad = 2.0 * oracles::romberg([&](double u) { return u * u * levy.density(u); }, 1.0, 4.0);
  CHECK(m2 == doctest::Approx(m2_quad).epsilon(1e-9));
  // samples live on the truncated support
  RngStream rng(8, 0);
  for (int i = 0; i < 1000; ++i) {
    double u = levy.sample(rng);
    CHECK(std::abs(u) >= 0.05);
    CHECK(std::abs(u) <= 4.0);
  }
}

TEST_CASE("jump sde invariants on a sample grid") {
  JumpSdeModel j;
  j.jump_gamma = 0.3;
  j.jump_l = 0.5;
  j.contract = 0.2;
  Model jm = j;
  (void)jm;
  for (double x : {2.0, 5.0, 17.0}) {
    for (double u : {-3.0, -0.5, 0.2, 1.5}) {
      CHECK(std::abs(j.c1(x, u)) <= 0.3 * std::pow(std::abs(x), 0.5) * std::abs(u) * (1.0 + 1e-12));
      double moved = x + j.c2(x, u);
      if (std::abs(u) > 1.0) {
        CHECK(std::abs(moved) <= std::abs(x));
      } else {
        CHECK(j.c2(x, u) == 0.0);
      }
    }
  }
}

TEST_CASE("multidimensional euler path shape and determinism") {
  Model wd = WeakDriftDiffusionModel{1.0, 0.5, 1e-3, 2};
  RngStream a(21, 0), b(21, 0);
  auto p1 = models::sample_path_nd(wd, {1.0, -1.0}, 1.0, 1e-2, a);
  auto p2 = models::sample_path_nd(wd, {1.0, -1.0}, 1.0, 1e-2, b);
  REQUIRE(p1.states.size() == p2.states.size());
  CHECK(p1.states == p2.states);
  CHECK(p1.dim == 2);
  CHECK(p1.states.size() == 2 * 101);
}

TEST_SUITE_END();
