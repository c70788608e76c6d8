// Acceptance suite: every criterion runs at full scale and prints one
// [PASS]/[FAIL] line with the measured quantities. Exit code is the number
// of failed criteria. `--only N` restricts to one criterion; criterion 13
// shells out to the CLI binary given via --cli / --configs.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "regensim/concentration.hpp"
#include "regensim/estimators.hpp"
#include "regensim/models.hpp"
#include "regensim/parallel.hpp"
#include "regensim/rates.hpp"
#include "regensim/splitting.hpp"
#include "regensim/stats.hpp"

using namespace regensim;
using estimators::BoundedFn;
using models::Model;
using models::OuModel;
using models::WeakDriftDiffusionModel;

namespace {

unsigned hw_threads() {
  unsigned t = std::thread::hardware_concurrency();
  return t == 0 ? 1 : t;
}

const Model kOu = OuModel{1.0, std::sqrt(2.0)};

// shared across criteria; construction costs a few seconds at the 64x4096 grid
const splitting::Minorization& reference_mz() {
  static splitting::Minorization mz =
      splitting::compute_minorization(kOu, 1.0, 8.0, 64, 4096, 0.99);
  return mz;
}

std::string g_cli_path;
std::string g_configs_dir;

// ---------------------------------------------------------------------------
// oracles local to the acceptance run
// ---------------------------------------------------------------------------

// H(u) = int_1^u ds/Phi(s), integrated in w = log s so huge u stay cheap
double h_oracle(double c, double phi, double u) {
  if (u <= 1.0) return 0.0;
  return oracles::romberg(
      [&](double w) { return std::exp((1.0 - phi) * w) / c; }, 0.0, std::log(u), 22, 1e-13);
}

double h_inv_oracle(double c, double phi, double s, double hi_hint) {
  return oracles::bisect([&](double u) { return h_oracle(c, phi, u); }, s, 1.0,
                         std::max(4.0 * hi_hint, 16.0), 200);
}

// ---------------------------------------------------------------------------

struct Criterion {
  int id;
  std::string label;
  std::function<bool(std::string&)> run;
};

bool criterion_rate_algebra(std::string& detail) {
  double worst = 0.0;
  for (double c : {0.5, 1.0, 3.0}) {
    for (double phi : {0.0, 0.3, 0.5, 0.8}) {
      rates::PhiSpec spec{c, phi};
      rates::RatePoly rp = rates::RatePoly::from(spec);
      for (int k = 0; k <= 10; ++k) {
        double s = 100.0 * k / 10.0;
        double u_impl = rates::h_phi_inv(spec, s);
        // forward map against quadrature
        double h_impl = rates::h_phi(spec, u_impl);
        worst = std::max(worst, oracles::rel_err(h_impl, h_oracle(c, phi, u_impl)));
        // inverse against bisection of the quadrature oracle
        double u_orc = h_inv_oracle(c, phi, s, u_impl);
        worst = std::max(worst, std::abs(u_impl - u_orc) / u_orc);
        // rate = Phi o H^{-1} against the composed oracles
        double r_orc = spec(u_orc);
        worst = std::max(worst, oracles::rel_err(rates::rate(rp, s), r_orc));
        // closed-form integral against quadrature of the rate
        if (s > 0.0) {
          double q = oracles::romberg([&](double t) { return rates::rate(rp, t); }, 0.0, s, 22,
                                      1e-13);
          worst = std::max(worst, oracles::rel_err(rates::rate_integral(rp, s), q));
        }
      }
    }
  }
  detail = "worst relative error " + std::to_string(worst);
  return worst < 1e-8;
}

bool criterion_subadditivity(std::string& detail) {
  double worst_ratio = 0.0;
  bool ok = true;
  for (double c : {0.5, 1.0, 3.0}) {
    for (double phi : {0.0, 0.3, 0.5, 0.8}) {
      rates::RatePoly rp = rates::RatePoly::from(rates::PhiSpec{c, phi});
      double cprime = std::pow(2.0, rp.kappa) + 1.0;
      for (int i = 0; i < 50; ++i) {
        for (int j = 0; j < 50; ++j) {
          double t = 100.0 * i / 49.0, s = 100.0 * j / 49.0;
          double lhs = rates::rate(rp, t + s);
          double rhs = cprime * (rates::rate(rp, t) + rates::rate(rp, s));
          ok = ok && lhs <= rhs * (1.0 + 1e-12);
          worst_ratio = std::max(worst_ratio, lhs / rhs);
          if (c >= 1.0) {
            ok = ok && lhs <= rates::rate(rp, t) * rates::rate(rp, s) * (1.0 + 1e-12);
          }
        }
      }
    }
  }
  detail = "worst lhs/bound ratio " + std::to_string(worst_ratio);
  return ok;
}

bool criterion_minorization(std::string& detail) {
  const splitting::Minorization& mz = reference_mz();
  detail = "alpha " + std::to_string(mz.alpha_min) + ", worst violation " +
           std::to_string(mz.worst_violation) + " on the 64x4096 grid";
  return mz.worst_violation >= -1e-10 && mz.alpha_min > 0.0 && mz.alpha_min < 1.0;
}

bool criterion_split_kernel(std::string& detail) {
  const splitting::Minorization& mz = reference_mz();
  const OuModel& ou = std::get<OuModel>(kOu);
  std::size_t n = 100000;
  double worst = 0.0;
  for (double x : {0.0, 0.7, 2.5}) {  // 2.5 is outside C
    RngStream rng(1001, static_cast<std::uint64_t>(std::abs(x) * 100));
    std::vector<double> via_q(n), direct(n);
    for (auto& v : via_q) v = splitting::split_kernel_sample(x, rng.uniform(), mz, kOu, rng);
    for (auto& v : direct) {
      double tau = rng.exponential();
      v = ou.transition_mean(x, tau) + std::sqrt(ou.transition_var(tau)) * rng.normal();
    }
    worst = std::max(worst, stats::ks_two_sample_statistic(via_q, direct));
  }
  detail = "worst two-sample KS " + std::to_string(worst) + " at N=1e5";
  return worst < 0.02;
}

bool criterion_regeneration_structure(std::string& detail) {
  // (a) skeleton gaps against exp(1)
  RngStream rng(1100, 0);
  models::Skeleton skel = models::sample_skeleton(kOu, 0.0, 10050.0, 1e-2, rng);
  std::vector<double> gaps;
  for (std::size_t i = 1; i < skel.jump_times.size() && gaps.size() < 10000; ++i)
    gaps.push_back(skel.jump_times[i] - skel.jump_times[i - 1]);
  double p_gaps =
      stats::ks_test_p(gaps, [](double t) { return t <= 0.0 ? 0.0 : 1.0 - std::exp(-t); });

  // (b) + (c): pooled cycles
  const splitting::Minorization& mz = reference_mz();
  estimators::HarvestOptions opt;
  opt.horizon = 5600.0;
  opt.replicas = 8;
  opt.seed = 1101;
  opt.step = 1e-2;
  opt.threads = hw_threads();
  estimators::CycleSample cs =
      estimators::harvest_cycles(kOu, mz, BoundedFn{BoundedFn::Kind::zero},
                                 rates::RatePoly::from(rates::PhiSpec{1.0, 0.5}), opt);
  std::vector<double> regen_states(cs.regen_states.begin(),
                                   cs.regen_states.begin() +
                                       std::min<std::size_t>(cs.regen_states.size(), 10000));
  double ks_nu = stats::ks_statistic(regen_states, [&](double y) { return mz.nu_cdf(y); });

  std::vector<long> counts(256, 0);
  std::size_t n_segments = 0;
  for (long v : cs.visits_before_bell) {
    if (v < 256) ++counts[static_cast<std::size_t>(v)];
    ++n_segments;
  }
  double p_geom = stats::geometric_chi_square_p(counts, mz.alpha_min);

  std::ostringstream os;
  os << "gap KS p " << p_gaps << ", X_R vs nu KS distance " << ks_nu << " (" << regen_states.size()
     << " cycles), geometric chi2 p " << p_geom << " (" << n_segments << " segments)";
  detail = os.str();
  return p_gaps > 0.01 && ks_nu < 0.03 && regen_states.size() >= 10000 && p_geom > 0.01;
}

bool criterion_occupation(std::string& detail) {
  const splitting::Minorization& mz = reference_mz();
  rates::RatePoly rate = rates::RatePoly::from(rates::PhiSpec{1.0, 0.5});
  estimators::HarvestOptions opt;
  opt.horizon = 9000.0;
  opt.replicas = 48;
  opt.seed = 1201;
  opt.step = 1e-3;
  opt.threads = hw_threads();

  estimators::CycleSample cs_ind =
      estimators::harvest_cycles(kOu, mz, BoundedFn::parse("indicator_neg"), rate, opt);
  estimators::MuEstimate mu_ind = estimators::estimate_mu(cs_ind);

  opt.seed = 1202;
  estimators::CycleSample cs_sq =
      estimators::harvest_cycles(kOu, mz, BoundedFn::parse("square_capped", 25.0), rate, opt);
  estimators::MuEstimate mu_sq = estimators::estimate_mu(cs_sq);

  // time-average cross-check on independent replicas totalling horizon 1e4
  std::size_t n_rep = 16;
  std::vector<double> averages(n_rep, 0.0);
  BoundedFn f = BoundedFn::parse("indicator_neg");
  parallel_for_index(n_rep, hw_threads(), [&](std::size_t i) {
    RngStream r(1203, i);
    models::OneStepSampler sampler(kOu);
    double x = 0.0, cum = 0.0, fx = f(x);
    double horizon = 625.0, step = 1e-3;
    std::size_t steps = static_cast<std::size_t>(horizon / step);
    for (std::size_t k = 0; k < steps; ++k) {
      double xn = sampler.advance(x, step, r);
      double f2 = f(xn);
      cum += 0.5 * (fx + f2) * step;
      x = xn;
      fx = f2;
    }
    averages[i] = cum / horizon;
  });
  double ta_mean = stats::mean(averages);
  double ta_se = stats::std_error_of_mean(averages);
  double combined_se = std::sqrt(ta_se * ta_se + mu_ind.mu_f_se * mu_ind.mu_f_se);

  std::ostringstream os;
  os << "mu(1_{x<=0}) " << mu_ind.mu_f << " +- " << mu_ind.mu_f_se << " (" << mu_ind.n_cycles
     << " cycles), mu(min(x^2,25)) " << mu_sq.mu_f << " +- " << mu_sq.mu_f_se
     << ", time-average " << ta_mean << " +- " << ta_se;
  detail = os.str();
  return mu_ind.n_cycles >= 100000 && std::abs(mu_ind.mu_f - 0.5) < 0.01 &&
         std::abs(mu_sq.mu_f - 1.0) < 0.02 &&
         std::abs(mu_ind.mu_f - ta_mean) <= 3.0 * combined_se;
}

bool criterion_envelope(std::string& detail) {
  // weak pull (theta 1/(2 theta) variance scale 200) keeps the whole start
  // grid in the diffusive core, so first-regeneration costs genuinely grow
  // with x^2 rather than log x; C = [-4, 4] keeps the hitting target at the
  // grid scale and the resolvent overlap (alpha ~ 0.25) workable
  Model ou_slow = OuModel{0.04, 4.0};
  splitting::Minorization mz = splitting::compute_minorization(ou_slow, 4.0, 14.0, 64, 2048, 0.99);
  rates::RatePoly rate = rates::RatePoly::from(rates::PhiSpec{0.25, 0.5});
  models::LyapunovV v2{2.0, 1.0};
  estimators::EnvelopeOptions opt;
  opt.replicas = 20000;
  opt.seed = 1301;
  opt.step = 1e-2;
  opt.base_horizon = 2048.0;
  opt.threads = hw_threads();
  auto rep = estimators::regen_moment_envelope(ou_slow, mz, rate, {0.0, 2.0, 4.0, 6.0, 8.0}, v2,
                                               opt);
  std::ostringstream os;
  os << "R^2 " << rep.fit.r_squared << ", slope " << rep.fit.slope << ", estimates";
  for (const auto& pt : rep.points) os << " " << pt.estimate;
  detail = os.str();
  return rep.fit.r_squared > 0.9 && rep.fit.slope > 0.0;
}

bool criterion_hitting_bound(std::string& detail) {
  rates::PhiSpec phi{1.0, 0.5};
  rates::RatePoly rate = rates::RatePoly::from(phi);
  models::LyapunovV v2{2.0, 1.0};
  models::DriftReport drift = models::verify_drift(kOu, phi, v2, 1.0, 60.0, 1200);
  if (!std::isfinite(drift.m0)) {
    detail = "no nonnegative-margin radius found";
    return false;
  }
  estimators::HittingOptions opt;
  opt.replicas = 10000;
  opt.seed = 1401;
  opt.step = 1e-3;
  opt.threads = hw_threads();
  auto checks = estimators::hitting_moment_check(kOu, rate, drift.m0, 0.5, {3.0, 4.0, 6.0}, v2,
                                                 phi, drift.b_hat, opt);
  bool main_pass = true;
  std::ostringstream os;
  os << "M0 " << drift.m0 << ", b_hat " << drift.b_hat << ";";
  for (const auto& c : checks) {
    os << " x=" << c.x << ": " << c.estimate << " vs " << c.bound;
    main_pass = main_pass && c.pass;
  }
  opt.v_scale = 0.5;
  opt.b_scale = 0.5;
  auto control = estimators::hitting_moment_check(kOu, rate, drift.m0, 0.5, {0.0, 3.0, 4.0, 6.0},
                                                  v2, phi, drift.b_hat, opt);
  bool control_failed = false;
  for (const auto& c : control) control_failed = control_failed || !c.pass;
  os << "; halved-bound control " << (control_failed ? "fails as required" : "did not fail");
  detail = os.str();
  return main_pass && control_failed;
}

bool criterion_drift_margins(std::string& detail) {
  // analytic instance: margin(x) = |x| - 1 to 1e-12 on [1, 100]
  Model sign_drift = WeakDriftDiffusionModel{1.0, 0.0, 0.0, 1};
  rates::PhiSpec phi{1.0, 0.5};
  models::LyapunovV v2{2.0, 1.0};
  models::DriftReport rep = models::verify_drift(sign_drift, phi, v2, 1.0, 100.0, 397);
  double worst = 0.0;
  for (std::size_t i = 0; i < rep.radii.size(); ++i)
    worst = std::max(worst, std::abs(rep.margin[i] - (rep.radii[i] - 1.0)) /
                                std::max(1.0, rep.radii[i]));

  // jump generator quadrature vs a brute-force one-step Monte-Carlo estimate
  models::JumpSdeModel j;
  j.r_drift = 1.0;
  j.drift_l = 0.5;
  j.smoothing = 1e-3;
  j.jump_gamma = 0.3;
  j.jump_l = 0.5;
  j.contract = 0.2;
  j.levy = models::LevySpec{1.0, 1.0, 0.05, 4.0};
  Model jm = j;
  double x = 3.0;
  double quad = models::generator_value(jm, v2, x);
  double h = 1e-3;
  unsigned workers = hw_threads();
  std::size_t per = 4000000 / workers + 1;
  std::vector<double> sums(workers, 0.0), sums2(workers, 0.0);
  parallel_for_index(workers, workers, [&](std::size_t w) {
    RngStream r(1501, w);
    models::OneStepSampler sampler(jm);
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < per; ++i) {
      double inc = (v2.value_at(sampler.advance(x, h, r)) - v2.value_at(x)) / h;
      s += inc;
      s2 += inc * inc;
    }
    sums[w] = s;
    sums2[w] = s2;
  });
  double total = 0.0, total2 = 0.0;
  double nn = static_cast<double>(per * workers);
  for (unsigned w = 0; w < workers; ++w) {
    total += sums[w];
    total2 += sums2[w];
  }
  double mc = total / nn;
  double se = std::sqrt((total2 / nn - mc * mc) / nn);

  std::ostringstream os;
  os << "worst margin deviation " << worst << "; jump generator " << quad << " vs MC " << mc
     << " +- " << se;
  detail = os.str();
  return worst < 1e-12 && std::abs(quad - mc) <= 5.0 * h + 3.0 * se;
}

estimators::DeviationReport run_deviation(const Model& m, double epsilon, double step,
                                          std::uint64_t seed, std::optional<double> center) {
  estimators::DeviationOptions opt;
  opt.replicas = 20000;
  opt.seed = seed;
  opt.step = step;
  opt.threads = hw_threads();
  opt.p_order = 2.0;
  opt.center_truth = center;
  return estimators::deviation_probability(m, BoundedFn::parse("indicator_neg"), epsilon,
                                           {16, 32, 64, 128, 256, 512, 1024}, opt);
}

bool criterion_deviation_rate(std::string& detail) {
  auto ou_rep = run_deviation(kOu, 0.1, 1e-2, 1601, 0.5);
  Model wd = WeakDriftDiffusionModel{1.0, 0.5, 1e-3, 1};
  auto wd_rep = run_deviation(wd, 0.15, 1e-2, 1602, 0.5);
  std::ostringstream os;
  os << "OU slope " << ou_rep.fitted_slope << " (" << ou_rep.reliable_points
     << " reliable points), weak-drift slope " << wd_rep.fitted_slope << " ("
     << wd_rep.reliable_points << ")";
  detail = os.str();
  return ou_rep.reliable_points >= 2 && ou_rep.fitted_slope <= -0.6 &&
         wd_rep.reliable_points >= 2 && wd_rep.fitted_slope <= -0.6;
}

bool criterion_nt_rate(std::string& detail) {
  const splitting::Minorization& mz_ou = reference_mz();
  estimators::DeviationOptions opt;
  opt.replicas = 20000;
  opt.seed = 1701;
  opt.step = 1e-2;
  opt.threads = hw_threads();
  opt.p_order = 2.0;
  opt.center_truth = estimators::analytic_ell(kOu, mz_ou);
  auto ou_rep =
      estimators::nt_deviation(kOu, mz_ou, 0.3, {16, 32, 64, 128, 256, 512, 1024}, opt);

  Model wd = WeakDriftDiffusionModel{1.0, 0.5, 1e-3, 1};
  splitting::Minorization mz_wd = splitting::compute_minorization(wd, 1.0, 8.0, 64, 2048, 0.99);
  estimators::DeviationOptions wopt;
  wopt.replicas = 20000;
  wopt.seed = 1702;
  wopt.step = 1e-2;
  wopt.threads = hw_threads();
  wopt.p_order = 2.0;  // designed via the diffusion recipe: m = 3, p = m/(2-l) = 2
  wopt.calib_replicas = 64;
  auto wd_rep = estimators::nt_deviation(wd, mz_wd, 0.3, {16, 32, 64, 128, 256, 512, 1024}, wopt);

  double target = -(2.0 - 1.0) + 0.4;  // -(p-1)+0.4 with p = 2
  std::ostringstream os;
  os << "OU slope " << ou_rep.fitted_slope << " (ell " << ou_rep.center << "), weak-drift slope "
     << wd_rep.fitted_slope << " (ell " << wd_rep.center << ", calibrated), target " << target;
  detail = os.str();
  return ou_rep.reliable_points >= 2 && ou_rep.fitted_slope <= target &&
         wd_rep.reliable_points >= 2 && wd_rep.fitted_slope <= target;
}

bool criterion_fuk_nagaev(std::string& detail) {
  concentration::TwoDepSpec spec;  // student-t(5), weights (1, 0.5, 0.25)
  std::vector<double> lambdas = {20, 50, 100, 200, 400, 800};
  auto emp = concentration::fn_empirical(spec, 1000, lambdas, 10000, 1801, 2.0, hw_threads());
  bool ok = true;
  double worst_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    double gap = emp.bound_explicit[i] - (emp.exceedance[i].p_hat + 3.0 * emp.exceedance[i].se);
    worst_gap = std::min(worst_gap, gap);
    ok = ok && gap >= 0.0;
  }
  std::ostringstream os;
  os << "worst (bound - empirical - 3se) gap " << worst_gap << " over " << lambdas.size()
     << " lambda points";
  detail = os.str();
  return ok;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool criterion_reproducibility(std::string& detail) {
  if (g_cli_path.empty() || g_configs_dir.empty()) {
    detail = "needs --cli and --configs";
    return false;
  }
  namespace fs = std::filesystem;
  fs::path tmp = fs::temp_directory_path() / "regensim_acceptance_repro";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  auto run = [&](const std::string& sub, const std::string& conf, const std::string& out,
                 const std::string& extra) {
    std::string cmd = g_cli_path + " " + sub + " --config " + g_configs_dir + "/" + conf +
                      " --out " + (tmp / out).string() + " " + extra + " >/dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
  };
  bool ok = true;
  ok = ok && run("simulate", "ou_repro.conf", "a", "");
  ok = ok && run("simulate", "ou_repro.conf", "b", "");
  ok = ok && run("regen-stats", "ou_repro.conf", "r1", "--threads 1");
  ok = ok && run("regen-stats", "ou_repro.conf", "r4", "--threads 4");
  ok = ok && run("regen-stats", "ou_repro.conf", "r1b", "--threads 1");
  if (!ok) {
    detail = "cli invocation failed";
    return false;
  }
  bool sim_same = slurp(tmp / "a/simulate.csv") == slurp(tmp / "b/simulate.csv");
  bool threads_same = slurp(tmp / "r1/regen-stats.csv") == slurp(tmp / "r4/regen-stats.csv");
  bool rerun_same = slurp(tmp / "r1/regen-stats.csv") == slurp(tmp / "r1b/regen-stats.csv");
  bool nonempty = !slurp(tmp / "a/simulate.csv").empty();
  detail = std::string("simulate rerun ") + (sim_same ? "identical" : "DIFFERS") +
           ", regen-stats across thread counts " + (threads_same ? "identical" : "DIFFERS") +
           ", rerun " + (rerun_same ? "identical" : "DIFFERS");
  return sim_same && threads_same && rerun_same && nonempty;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) only = std::atoi(argv[++i]);
    if (a == "--cli" && i + 1 < argc) g_cli_path = argv[++i];
    if (a == "--configs" && i + 1 < argc) g_configs_dir = argv[++i];
  }

  std::vector<Criterion> criteria = {
      {1, "rate algebra matches quadrature+bisection oracles at 1e-8", criterion_rate_algebra},
      {2, "sub-additivity with 2^kappa + 1 and gated sub-multiplicativity",
       criterion_subadditivity},
      {3, "minorization inequality on the 64x4096 grid", criterion_minorization},
      {4, "split kernel mixes back to the resolvent (KS < 0.02)", criterion_split_kernel},
      {5, "regeneration structure: gaps, post-regeneration law, geometric bells",
       criterion_regeneration_structure},
      {6, "occupation identity at 1e5 cycles", criterion_occupation},
      {7, "first-regeneration moment envelope fits V with R^2 > 0.9", criterion_envelope},
      {8, "delayed-hitting moment bound with falsification control", criterion_hitting_bound},
      {9, "drift margins exact; jump generator matches MC", criterion_drift_margins},
      {10, "time-average deviation slope <= -0.6 (OU and weak-drift)", criterion_deviation_rate},
      {11, "counting-process deviation slope <= -(p-1)+0.4", criterion_nt_rate},
      {12, "Fuk-Nagaev explicit bound dominates the MA(2) empirics", criterion_fuk_nagaev},
      {13, "byte-identical CSV across runs and thread counts", criterion_reproducibility},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    std::string detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] criterion %2d: %s -- %s\n", ok ? "PASS" : "FAIL", c.id, c.label.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  std::printf("%d criterion failure(s)\n", failures);
  return failures;
}
