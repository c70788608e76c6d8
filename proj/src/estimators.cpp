#include "regensim/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "regensim/parallel.hpp"

namespace regensim::estimators {

using models::Model;
using models::OuModel;
using models::WeakDriftDiffusionModel;
using splitting::Minorization;

std::string BoundedFn::name() const {
  switch (kind) {
    case Kind::one: return "one";
    case Kind::zero: return "zero";
    case Kind::indicator_neg: return "indicator_neg";
    case Kind::identity: return "identity";
    case Kind::square_capped: return "square_capped";
  }
  return "?";
}

BoundedFn BoundedFn::parse(const std::string& name, double cap) {
  if (name == "one") return {Kind::one, cap};
  if (name == "zero") return {Kind::zero, cap};
  if (name == "indicator_neg") return {Kind::indicator_neg, cap};
  if (name == "identity") return {Kind::identity, cap};
  if (name == "square_capped") return {Kind::square_capped, cap};
  throw validation_error("unknown test function '" + name + "'");
}

std::optional<double> analytic_mu(const Model& m, const BoundedFn& f) {
  if (f.kind == BoundedFn::Kind::one) return 1.0;
  if (f.kind == BoundedFn::Kind::zero) return 0.0;
  if (const auto* ou = std::get_if<OuModel>(&m)) {
    double s2 = ou->stationary_var();
    switch (f.kind) {
      case BoundedFn::Kind::indicator_neg: return 0.5;
      case BoundedFn::Kind::identity: return 0.0;
      case BoundedFn::Kind::square_capped: {
        // E min(X^2, cap) for X ~ N(0, s2)
        double b = std::sqrt(f.cap / s2);
        double tail = stats::normal_cdf(-b);
        double core = 1.0 - 2.0 * b * stats::normal_pdf(b) - 2.0 * tail;
        return s2 * core + f.cap * 2.0 * tail;
      }
      default: break;
    }
  }
  // the weak-drift and jump models here have odd drift and symmetric jumps,
  // so the invariant law is symmetric
  if (f.kind == BoundedFn::Kind::indicator_neg) return 0.5;
  if (f.kind == BoundedFn::Kind::identity) return 0.0;
  return std::nullopt;
}

std::optional<double> analytic_ell(const Model& m, const Minorization& mz) {
  const auto* ou = std::get_if<OuModel>(&m);
  if (!ou) return std::nullopt;
  // jump-time states are stationary in the long run and every eligible
  // C-visit rings with probability alpha; the visit at R_n itself is not
  // eligible (S_{n+1} requires T_m > R_n) and carries law nu, so the R rate
  // solves ell = alpha (mu(C) - ell nu(C))
  double sd = std::sqrt(ou->stationary_var());
  double mu_c = stats::normal_cdf(mz.c_radius / sd) - stats::normal_cdf(-mz.c_radius / sd);
  double nu_c = mz.nu_cdf(mz.c_radius) - mz.nu_cdf(-mz.c_radius);
  return mz.alpha_min * mu_c / (1.0 + mz.alpha_min * nu_c);
}

// ---------------------------------------------------------------------------
// Regeneration bookkeeping over a streamed skeleton. Feed jumps in order;
// bells for visit n are decided at jump n+1 (retrospective colouring), R's
// close immediately after their bell.
// ---------------------------------------------------------------------------
namespace {

class RegenTracker {
 public:
  RegenTracker(const Minorization& mz, RngStream& rng) : mz_(mz), rng_(rng) {}

  std::function<void(double r_time, double x_r)> on_regen;                  // every R_n
  std::function<void(double dur, double df, double x_start)> on_cycle;      // complete cycles
  std::function<void(long)> on_segment;  // C-visits before each bell

  void feed(double t, double x, double cum) {
    if (!has_prev_) {
      has_prev_ = true;
      prev_t_ = t;
      prev_x_ = x;
      return;
    }
    if (mz_.in_c(prev_x_) && prev_t_ > r_last_) {
      double p = splitting::bell_probability(prev_x_, x, mz_);
      if (rng_.uniform() < p) {
        // S = prev_t_, R = t
        if (have_r_ && on_cycle) on_cycle(t - r_last_, cum - cum_at_r_, x_at_r_);
        if (on_segment) on_segment(visits_since_r_);
        visits_since_r_ = 0;
        r_last_ = t;
        cum_at_r_ = cum;
        x_at_r_ = x;
        if (!have_r_) first_r_ = t;
        have_r_ = true;
        ++n_regens_;
        if (on_regen) on_regen(t, x);
      } else {
        ++visits_since_r_;
      }
    }
    prev_t_ = t;
    prev_x_ = x;
  }

  bool has_regen() const { return have_r_; }
  double first_r() const { return first_r_; }
  std::size_t n_regens() const { return n_regens_; }

 private:
  const Minorization& mz_;
  RngStream& rng_;
  bool has_prev_ = false;
  double prev_t_ = 0.0, prev_x_ = 0.0;
  double r_last_ = 0.0;
  double cum_at_r_ = 0.0;
  double x_at_r_ = 0.0;
  bool have_r_ = false;
  double first_r_ = std::numeric_limits<double>::quiet_NaN();
  long visits_since_r_ = 0;
  std::size_t n_regens_ = 0;
};

void check_divergence_budget(std::size_t diverged, std::size_t replicas) {
  if (diverged == 0) return;
  if (static_cast<double>(diverged) > 1e-4 * static_cast<double>(replicas))
    throw numerical_error(std::to_string(diverged) + " of " + std::to_string(replicas) +
                          " replicas diverged (budget 0.01%)");
}

}  // namespace

CycleSample harvest_cycles(const Model& m, const Minorization& mz, const BoundedFn& f,
                           const rates::RatePoly& rate, const HarvestOptions& opt) {
  if (opt.replicas < 1) throw validation_error("replicas must be >= 1");
  struct ReplicaOut {
    std::vector<double> durations, f_integrals, start_states, regen_states;
    std::vector<long> visits;
    double first_r = std::numeric_limits<double>::quiet_NaN();
    bool diverged = false;
  };
  std::vector<ReplicaOut> outs(opt.replicas);
  std::function<double(double)> fn = [&f](double x) { return f(x); };
  bool need_f = f.kind != BoundedFn::Kind::zero;

  parallel_for_index(opt.replicas, opt.threads, [&](std::size_t i) {
    RngStream rng(opt.seed, i);
    ReplicaOut& out = outs[i];
    RegenTracker tracker(mz, rng);
    tracker.on_cycle = [&](double dur, double df, double xs) {
      out.durations.push_back(dur);
      out.f_integrals.push_back(df);
      out.start_states.push_back(xs);
    };
    tracker.on_regen = [&](double, double x) { out.regen_states.push_back(x); };
    tracker.on_segment = [&](long v) { out.visits.push_back(v); };
    try {
      models::stream_skeleton(m, opt.x0, opt.horizon, opt.step, rng, need_f ? &fn : nullptr,
                              [&](std::size_t, double t, double x, double cum) {
                                tracker.feed(t, x, cum);
                                return true;
                              });
      out.first_r = tracker.first_r();
    } catch (const simulation_diverged&) {
      out.diverged = true;
    }
  });

  CycleSample cs;
  cs.replicas = opt.replicas;
  for (auto& out : outs) {
    if (out.diverged) {
      ++cs.diverged;
      continue;
    }
    cs.durations.insert(cs.durations.end(), out.durations.begin(), out.durations.end());
    cs.f_integrals.insert(cs.f_integrals.end(), out.f_integrals.begin(), out.f_integrals.end());
    cs.start_states.insert(cs.start_states.end(), out.start_states.begin(),
                           out.start_states.end());
    cs.regen_states.insert(cs.regen_states.end(), out.regen_states.begin(),
                           out.regen_states.end());
    cs.visits_before_bell.insert(cs.visits_before_bell.end(), out.visits.begin(),
                                 out.visits.end());
    if (std::isfinite(out.first_r)) cs.r_integrals_first.push_back(rates::rate_integral(rate, out.first_r));
  }
  check_divergence_budget(cs.diverged, cs.replicas);
  if (cs.durations.empty()) throw no_cycles("harvest_cycles: no complete cycle in any replica");
  return cs;
}

MuEstimate estimate_mu(const CycleSample& cs) {
  if (cs.durations.size() < 2) throw no_cycles("estimate_mu needs at least 2 complete cycles");
  MuEstimate e;
  e.n_cycles = cs.durations.size();
  double n = static_cast<double>(e.n_cycles);
  double dbar = stats::mean(cs.durations);
  double fbar = stats::mean(cs.f_integrals);
  e.ell = 1.0 / dbar;
  e.mu_f = fbar / dbar;
  double sdd = stats::variance(cs.durations);
  e.ell_se = std::sqrt(sdd / n) / (dbar * dbar);
  // delta method for the ratio estimator
  double sff = stats::variance(cs.f_integrals);
  double sfd = 0.0;
  for (std::size_t i = 0; i < cs.durations.size(); ++i)
    sfd += (cs.f_integrals[i] - fbar) * (cs.durations[i] - dbar);
  sfd /= (n - 1.0);
  double r = e.mu_f;
  double var = (sff - 2.0 * r * sfd + r * r * sdd) / (n * dbar * dbar);
  e.mu_f_se = std::sqrt(std::max(var, 0.0));
  return e;
}

double cycle_moment(const CycleSample& cs, double p, double* se_out) {
  if (!(p >= 1.0)) throw validation_error("cycle_moment: p must be >= 1");
  if (cs.durations.empty()) throw no_cycles("cycle_moment: no cycles");
  std::vector<double> powered(cs.durations.size());
  for (std::size_t i = 0; i < powered.size(); ++i) powered[i] = std::pow(cs.durations[i], p);
  if (se_out) *se_out = stats::jackknife_se_of_mean(powered);
  return stats::mean(powered);
}

// ---------------------------------------------------------------------------

EnvelopeReport regen_moment_envelope(const Model& m, const Minorization& mz,
                                     const rates::RatePoly& rate, const std::vector<double>& x_grid,
                                     const models::LyapunovV& V, const EnvelopeOptions& opt) {
  if (x_grid.empty()) throw validation_error("envelope x_grid must be nonempty");
  EnvelopeReport report;
  std::vector<std::vector<double>> samples(x_grid.size());
  std::size_t total = x_grid.size() * opt.replicas;
  std::vector<double> flat(total, std::numeric_limits<double>::quiet_NaN());
  std::atomic<std::size_t> exhausted{0};

  parallel_for_index(total, opt.threads, [&](std::size_t idx) {
    std::size_t xi = idx / opt.replicas;
    double first_r = std::numeric_limits<double>::quiet_NaN();
    // rerunning the same stream with a doubled horizon reproduces the same
    // path prefix, so retries only extend the simulation
    for (int attempt = 0; attempt < 8; ++attempt) {
      double horizon = opt.base_horizon * std::pow(2.0, attempt);
      RngStream retry_rng(opt.seed, idx);
      RegenTracker tracker(mz, retry_rng);
      models::stream_skeleton(m, x_grid[xi], horizon, opt.step, retry_rng, nullptr,
                              [&](std::size_t, double t, double x, double) {
                                tracker.feed(t, x, 0.0);
                                return !tracker.has_regen();
                              });
      if (tracker.has_regen()) {
        first_r = tracker.first_r();
        break;
      }
    }
    if (std::isfinite(first_r))
      flat[idx] = rates::rate_integral(rate, first_r);
    else
      exhausted.fetch_add(1);
  });
  if (static_cast<double>(exhausted.load()) > 1e-3 * static_cast<double>(total))
    throw horizon_exhausted("envelope: too many replicas without a first regeneration");

  std::vector<double> vs, es;
  for (std::size_t xi = 0; xi < x_grid.size(); ++xi) {
    std::vector<double> vals;
    vals.reserve(opt.replicas);
    for (std::size_t r = 0; r < opt.replicas; ++r) {
      double v = flat[xi * opt.replicas + r];
      if (std::isfinite(v)) vals.push_back(v);
    }
    EnvelopePoint pt;
    pt.x = x_grid[xi];
    pt.v_of_x = V.value_at(x_grid[xi]);
    pt.estimate = stats::mean(vals);
    pt.se = stats::std_error_of_mean(vals);
    pt.replicas = vals.size();
    report.points.push_back(pt);
    vs.push_back(pt.v_of_x);
    es.push_back(pt.estimate);
  }
  report.fit = stats::least_squares(vs, es);
  return report;
}

std::vector<HittingCheckPoint> hitting_moment_check(const Model& m, const rates::RatePoly& rate,
                                                    double b_radius, double delta,
                                                    const std::vector<double>& x_grid,
                                                    const models::LyapunovV& V,
                                                    const rates::PhiSpec& phi, double b_hat,
                                                    const HittingOptions& opt) {
  if (!(delta > 0.0)) throw validation_error("hitting delta must be > 0");
  if (x_grid.empty()) throw validation_error("hitting x_grid must be nonempty");
  phi.validate();
  std::size_t total = x_grid.size() * opt.replicas;
  std::vector<double> flat(total, std::numeric_limits<double>::quiet_NaN());
  std::atomic<std::size_t> exhausted{0};

  parallel_for_index(total, opt.threads, [&](std::size_t idx) {
    std::size_t xi = idx / opt.replicas;
    RngStream rng(opt.seed, idx);
    models::OneStepSampler sampler(m);
    double x = x_grid[xi];
    double t = 0.0;
    // hit detection on the discrete grid at times >= delta
    while (t < opt.max_horizon) {
      if (t >= delta && std::abs(x) <= b_radius) {
        flat[idx] = rates::rate_integral(rate, t);
        return;
      }
      x = sampler.advance(x, opt.step, rng);
      t += opt.step;
      if (!std::isfinite(x)) return;  // counted as exhausted below
    }
    exhausted.fetch_add(1);
  });
  if (static_cast<double>(exhausted.load()) > 1e-3 * static_cast<double>(total))
    throw horizon_exhausted("hitting_moment_check: tau_B(delta) unreached in > 0.1% of replicas");

  std::vector<HittingCheckPoint> checks;
  double delta_term = rates::rate_integral(rate, delta) * opt.b_scale * b_hat / phi(1.0);
  for (std::size_t xi = 0; xi < x_grid.size(); ++xi) {
    std::vector<double> vals;
    vals.reserve(opt.replicas);
    for (std::size_t r = 0; r < opt.replicas; ++r) {
      double v = flat[xi * opt.replicas + r];
      if (std::isfinite(v)) vals.push_back(v);
    }
    HittingCheckPoint pt;
    pt.x = x_grid[xi];
    pt.estimate = stats::mean(vals);
    pt.se = stats::std_error_of_mean(vals);
    pt.bound = opt.v_scale * V.value_at(pt.x) - 1.0 + delta_term;
    pt.pass = pt.estimate - 3.0 * pt.se <= pt.bound;
    checks.push_back(pt);
  }
  return checks;
}

// ---------------------------------------------------------------------------

namespace {

void fit_slope(DeviationReport& report) {
  std::vector<double> lx, ly;
  double floor_p = 20.0 / static_cast<double>(report.replicas);
  for (std::size_t i = 0; i < report.t_grid.size(); ++i) {
    double p = report.probabilities[i].p_hat;
    if (p > floor_p) {
      lx.push_back(std::log(report.t_grid[i]));
      ly.push_back(std::log(p));
    }
  }
  report.reliable_points = lx.size();
  if (lx.size() >= 2) report.fitted_slope = stats::least_squares(lx, ly).slope;
}

}  // namespace

DeviationReport deviation_probability(const Model& m, const BoundedFn& f, double epsilon,
                                      const std::vector<double>& t_grid,
                                      const DeviationOptions& opt) {
  double norm = f.sup_norm();
  if (!std::isfinite(norm) || norm <= 0.0)
    throw validation_error("deviation requires a bounded nonzero f");
  if (!(epsilon > 0.0 && epsilon < norm))
    throw validation_error("deviation epsilon must lie in (0, ||f||_inf)");
  if (t_grid.empty()) throw validation_error("deviation t_grid must be nonempty");
  std::vector<double> ts = t_grid;
  std::sort(ts.begin(), ts.end());

  DeviationReport report;
  report.t_grid = ts;
  report.epsilon = epsilon;
  report.replicas = opt.replicas;
  report.p_order = opt.p_order;

  double mu;
  if (opt.center_truth) {
    mu = *opt.center_truth;
  } else {
    // calibration: pooled time average over a 10x longer horizon
    report.center_calibrated = true;
    double horizon = opt.calib_horizon_factor * ts.back();
    std::vector<double> sums(opt.calib_replicas, 0.0);
    parallel_for_index(opt.calib_replicas, opt.threads, [&](std::size_t i) {
      RngStream rng(opt.seed, (1ull << 32) + i);
      models::OneStepSampler sampler(m);
      double x = opt.x0;
      double fx = f(x);
      double cum = 0.0;
      std::size_t n_steps = static_cast<std::size_t>(std::llround(horizon / opt.step));
      for (std::size_t k = 0; k < n_steps; ++k) {
        double xn = sampler.advance(x, opt.step, rng);
        double fn2 = f(xn);
        cum += 0.5 * (fx + fn2) * opt.step;
        x = xn;
        fx = fn2;
      }
      sums[i] = cum / horizon;
    });
    mu = stats::mean(sums);
  }
  report.center = mu;

  // exceedance counts per grid time
  std::vector<std::size_t> counts(ts.size(), 0);
  std::mutex merge_mutex;
  std::vector<std::vector<std::size_t>> partials;
  parallel_for_index(opt.replicas, opt.threads, [&](std::size_t i) {
    RngStream rng(opt.seed, i);
    models::OneStepSampler sampler(m);
    double x = opt.x0;
    double fx = f(x);
    double cum = 0.0;
    double t = 0.0;
    std::vector<std::size_t> local(ts.size(), 0);
    std::size_t gi = 0;
    std::size_t n_steps = static_cast<std::size_t>(std::llround(ts.back() / opt.step));
    for (std::size_t k = 1; k <= n_steps && gi < ts.size(); ++k) {
      double xn = sampler.advance(x, opt.step, rng);
      double fn2 = f(xn);
      cum += 0.5 * (fx + fn2) * opt.step;
      x = xn;
      fx = fn2;
      t = static_cast<double>(k) * opt.step;
      while (gi < ts.size() && t >= ts[gi] - 0.5 * opt.step) {
        double avg = cum / ts[gi];
        if (std::abs(avg - mu) > epsilon) ++local[gi];
        ++gi;
      }
    }
    std::lock_guard<std::mutex> lock(merge_mutex);
    partials.push_back(std::move(local));
  });
  for (const auto& local : partials)
    for (std::size_t gi = 0; gi < ts.size(); ++gi) counts[gi] += local[gi];

  for (std::size_t gi = 0; gi < ts.size(); ++gi)
    report.probabilities.push_back(stats::binomial_estimate(counts[gi], opt.replicas));
  fit_slope(report);
  return report;
}

DeviationReport nt_deviation(const Model& m, const Minorization& mz, double epsilon,
                             const std::vector<double>& t_grid, const DeviationOptions& opt) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw validation_error("nt deviation epsilon must lie in (0, 1)");
  if (t_grid.empty()) throw validation_error("nt t_grid must be nonempty");
  std::vector<double> ts = t_grid;
  std::sort(ts.begin(), ts.end());

  DeviationReport report;
  report.t_grid = ts;
  report.epsilon = epsilon;
  report.replicas = opt.replicas;
  report.p_order = opt.p_order;

  double ell;
  if (opt.center_truth) {
    ell = *opt.center_truth;
  } else {
    report.center_calibrated = true;
    double horizon = opt.calib_horizon_factor * ts.back();
    std::vector<double> dur_sum(opt.calib_replicas, 0.0);
    std::vector<std::size_t> dur_n(opt.calib_replicas, 0);
    parallel_for_index(opt.calib_replicas, opt.threads, [&](std::size_t i) {
      RngStream rng(opt.seed, (1ull << 33) + i);
      RegenTracker tracker(mz, rng);
      tracker.on_cycle = [&](double dur, double, double) {
        dur_sum[i] += dur;
        ++dur_n[i];
      };
      models::stream_skeleton(m, opt.x0, horizon, opt.step, rng, nullptr,
                              [&](std::size_t, double t, double x, double) {
                                tracker.feed(t, x, 0.0);
                                return true;
                              });
    });
    double total_dur = 0.0;
    std::size_t total_n = 0;
    for (std::size_t i = 0; i < opt.calib_replicas; ++i) {
      total_dur += dur_sum[i];
      total_n += dur_n[i];
    }
    if (total_n == 0) throw no_cycles("nt_deviation calibration found no cycles");
    ell = static_cast<double>(total_n) / total_dur;
  }
  report.center = ell;

  std::vector<std::size_t> counts(ts.size(), 0);
  std::mutex merge_mutex;
  std::vector<std::vector<std::size_t>> partials;
  parallel_for_index(opt.replicas, opt.threads, [&](std::size_t i) {
    RngStream rng(opt.seed, i);
    RegenTracker tracker(mz, rng);
    std::vector<std::size_t> n_at(ts.size(), 0);
    std::size_t gi = 0;
    std::size_t regens = 0;
    tracker.on_regen = [&](double tr, double) {
      while (gi < ts.size() && ts[gi] < tr) {
        n_at[gi] = regens;
        ++gi;
      }
      ++regens;
    };
    models::stream_skeleton(m, opt.x0, ts.back() + 1.0, opt.step, rng, nullptr,
                            [&](std::size_t, double t, double x, double) {
                              tracker.feed(t, x, 0.0);
                              return gi < ts.size();
                            });
    while (gi < ts.size()) {
      n_at[gi] = regens;
      ++gi;
    }
    std::vector<std::size_t> local(ts.size(), 0);
    for (std::size_t g = 0; g < ts.size(); ++g) {
      double nt_over_t = static_cast<double>(n_at[g]) / ts[g];
      if (std::abs(nt_over_t - ell) > ell * epsilon) ++local[g];
    }
    std::lock_guard<std::mutex> lock(merge_mutex);
    partials.push_back(std::move(local));
  });
  for (const auto& local : partials)
    for (std::size_t gi = 0; gi < ts.size(); ++gi) counts[gi] += local[gi];

  for (std::size_t gi = 0; gi < ts.size(); ++gi)
    report.probabilities.push_back(stats::binomial_estimate(counts[gi], opt.replicas));
  fit_slope(report);
  return report;
}

}  // namespace regensim::estimators
