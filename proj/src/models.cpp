#include "regensim/models.hpp"

#include <algorithm>
#include <cmath>

#include "regensim/quadrature.hpp"

namespace regensim::models {

namespace {

double gauss_density(double y, double mean, double var) {
  if (!(var > 0.0)) return 0.0;
  double z = y - mean;
  return std::exp(-0.5 * z * z / var) / std::sqrt(2.0 * M_PI * var);
}

void check_finite(double x, double t) {
  if (!std::isfinite(x)) throw simulation_diverged(t, "simulation diverged to non-finite state");
}

}  // namespace

const char* model_kind(const Model& m) {
  switch (m.index()) {
    case 0: return "ou";
    case 1: return "weakdrift";
    default: return "jumpsde";
  }
}

// --- LevySpec -----------------------------------------------------------

double LevySpec::total_mass() const {
  // 2 * scale * int_{delta}^{umax} exp(-u^2/2s^2) du
  double s = shape;
  auto cdf_part = [&](double a, double b) {
    return s * std::sqrt(M_PI / 2.0) * (std::erf(b / (s * std::sqrt(2.0))) - std::erf(a / (s * std::sqrt(2.0))));
  };
  return 2.0 * scale * cdf_part(delta_min, u_max);
}

double LevySpec::abs_moment(double m, double lo, double hi) const {
  lo = std::max(lo, delta_min);
  hi = std::min(hi, u_max);
  if (!(hi > lo)) return 0.0;
  auto f = [&](double u) { return std::pow(u, m) * scale * std::exp(-0.5 * u * u / (shape * shape)); };
  return 2.0 * adaptive_simpson(f, lo, hi, 1e-12);
}

double LevySpec::sample(RngStream& rng) const {
  // rejection against the untruncated Gaussian; support is a pair of bands
  for (int i = 0; i < 100000; ++i) {
    double u = shape * rng.normal();
    double au = std::abs(u);
    if (au >= delta_min && au <= u_max) return u;
  }
  throw rejection_stall("levy sample: truncated support has negligible Gaussian mass");
}

// --- JumpSdeModel -------------------------------------------------------

void JumpSdeModel::validate() const {
  if (!(r_drift > 0.0)) throw validation_error("model.r must be > 0");
  if (!(drift_l >= 0.0 && drift_l < 1.0)) throw validation_error("model.l must lie in [0, 1) for the jump model");
  if (!(smoothing >= 0.0)) throw validation_error("model.smoothing must be >= 0");
  if (!(jump_gamma >= 0.0)) throw validation_error("model.jump_gamma must be >= 0");
  if (!(jump_l >= 0.0 && jump_l < 1.0)) throw validation_error("model.jump_l must lie in [0, 1)");
  if (!(contract >= 0.0 && contract <= 1.0)) throw validation_error("model.contract must lie in [0, 1]");
  if (dim_x != 1 || dim_u != 1) throw validation_error("jump model supports dim_x = dim_u = 1");
  levy.validate();
}

double JumpSdeModel::small_jump_u_moment() const {
  // int_{delta <= |u| <= 1} u nu(du); zero for the symmetric density but
  // computed explicitly so asymmetric measures slot in later.
  auto f = [&](double u) { return u * levy.density(u); };
  double lo = levy.delta_min, hi = std::min(1.0, levy.u_max);
  if (!(hi > lo)) return 0.0;
  double pos = adaptive_simpson(f, lo, hi, 1e-13);
  double neg = adaptive_simpson(f, -hi, -lo, 1e-13);
  return pos + neg;
}

double JumpSdeModel::small_jump_compensator(double x) const {
  // c1(x, u) = coeff(x) * u, so the compensator factors
  double ax = std::abs(x);
  if (ax == 0.0) return 0.0;
  double coeff = jump_gamma * std::pow(ax, jump_l) * ax / (ax + smoothing);
  return coeff * small_jump_u_moment();
}

// --- LyapunovV ----------------------------------------------------------

void LyapunovV::validate() const {
  if (!(m_power >= 1.0)) throw validation_error("lyapunov m_power must be >= 1");
  if (!(rho0 > 0.0 && rho0 <= 1.0)) throw validation_error("lyapunov rho0 must lie in (0, 1]");
}

double LyapunovV::value(double r) const {
  if (r <= rho0) return 1.0;
  return std::max(std::pow(r, m_power), 1.0);
}

// --- RecurrenceParams ---------------------------------------------------

RecurrenceParams RecurrenceParams::diffusion(double M, double l, double r, int dim, double kappa) {
  if (!(M > 0.0)) throw validation_error("recurrence M must be > 0");
  if (!(l > 0.0 && l < 2.0)) throw validation_error("recurrence l must lie in (0, 2)");
  RecurrenceParams p;
  p.M = M;
  p.l_exp = l;
  p.r_drift = r;
  p.beta = std::pow(M, -l);
  p.gamma = dim * std::pow(M, -l);
  double kappa_max = l + (2.0 * r - p.gamma) / p.beta;
  if (!(kappa > 0.0 && kappa < kappa_max))
    throw validation_error("recurrence kappa must lie in (0, l + (2r - gamma)/beta)");
  p.kappa = kappa;
  p.m_power = 2.0 - l + kappa;
  p.r_tilde = r - 0.5 * (p.gamma + (p.m_power - 2.0) * p.beta);
  if (!(p.r_tilde > 0.0)) throw validation_error("recurrence r_tilde must be > 0");
  double alpha61 = (2.0 - l) / p.m_power;
  if (!(alpha61 > 0.0 && alpha61 < 1.0)) throw validation_error("recurrence exponent out of range");
  p.phi = rates::PhiSpec{p.m_power * p.r_tilde, 1.0 - alpha61};
  p.phi.validate();
  return p;
}

RecurrenceParams RecurrenceParams::jump_sde(double M, double l, double r, double gamma_jump,
                                            double big_jump_moment, double m_power) {
  if (!(M > 0.0)) throw validation_error("recurrence M must be > 0");
  if (!(l > 0.0 && l < 1.0)) throw validation_error("recurrence l must lie in (0, 1)");
  if (!(m_power >= 1.0)) throw validation_error("recurrence m_power must be >= 1");
  RecurrenceParams p;
  p.M = M;
  p.l_exp = l;
  p.r_drift = r;
  p.beta = std::numeric_limits<double>::quiet_NaN();
  p.gamma = gamma_jump;
  p.kappa = std::numeric_limits<double>::quiet_NaN();
  p.m_power = m_power;
  p.r_tilde = r - 2.0 * gamma_jump * big_jump_moment;
  if (!(p.r_tilde > 0.0))
    throw validation_error("jump recurrence needs r > 2 gamma int_{|u|>1} |u|^m nu(du)");
  double alpha62 = (1.0 - l) / m_power;
  if (!(alpha62 > 0.0 && alpha62 < 1.0)) throw validation_error("recurrence exponent out of range");
  p.phi = rates::PhiSpec{m_power * p.r_tilde, 1.0 - alpha62};
  p.phi.validate();
  return p;
}

// --- densities ----------------------------------------------------------

double transition_density(const Model& m, double t, double x, double y) {
  if (!(t > 0.0)) throw std::domain_error("transition_density: t must be > 0");
  if (const auto* ou = std::get_if<OuModel>(&m)) {
    return gauss_density(y, ou->transition_mean(x, t), ou->transition_var(t));
  }
  throw unsupported_model(std::string("transition_density unavailable for model kind ") +
                          model_kind(m));
}

double resolvent_density(const Model& m, double x, double y, double tol) {
  const auto* ou = std::get_if<OuModel>(&m);
  if (!ou)
    throw unsupported_model(std::string("resolvent_density unavailable for model kind ") +
                            model_kind(m));
  // substitute t = tau^2 to tame the 1/sqrt(t) spike at y == x. Below tau_s
  // the kernel is the short-time heat kernel (e^{-t} ~ 1, mean ~ x, var ~
  // sigma^2 t), whose integral has a closed form; this also absorbs the
  // unresolvably thin transition when y - x is tiny but nonzero.
  double t_cut = 46.0;  // e^{-46} * bounded density is below 1e-19
  double sigma2 = ou->sigma * ou->sigma;
  const double tau_s = 1e-4;
  double t_s = tau_s * tau_s;
  double a = (y - x) * (y - x) / (2.0 * sigma2);
  // int_0^{t_s} exp(-a/t)/sqrt(2 pi sigma^2 t) dt
  double spike = (2.0 * std::sqrt(t_s) * std::exp(-a / t_s) -
                  2.0 * std::sqrt(M_PI * a) * std::erfc(std::sqrt(a / t_s))) /
                 std::sqrt(2.0 * M_PI * sigma2);
  auto integrand = [&](double tau) {
    double t = tau * tau;
    return 2.0 * tau * std::exp(-t) *
           gauss_density(y, ou->transition_mean(x, t), ou->transition_var(t));
  };
  return spike + adaptive_simpson(integrand, tau_s, std::sqrt(t_cut), tol);
}

// --- one-step sampler ------------------------------------------------------

OneStepSampler::OneStepSampler(const Model& m) : model_(m) {
  exact_ = std::holds_alternative<OuModel>(m);
  if (const auto* j = std::get_if<JumpSdeModel>(&m)) {
    levy_mass_ = j->levy.total_mass();
    levy_u_moment_ = j->small_jump_u_moment();
  }
}

double OneStepSampler::advance(double x, double dt, RngStream& rng) {
  if (const auto* ou = std::get_if<OuModel>(&model_)) {
    if (dt != cached_dt_) {
      cached_dt_ = dt;
      cached_decay_ = std::exp(-ou->theta * dt);
      cached_sd_ = std::sqrt(ou->transition_var(dt));
    }
    return x * cached_decay_ + cached_sd_ * rng.normal();
  }
  if (const auto* wd = std::get_if<WeakDriftDiffusionModel>(&model_)) {
    return x + wd->drift1d(x) * dt + std::sqrt(dt) * rng.normal();
  }
  const auto& j = std::get<JumpSdeModel>(model_);
  double ax = std::abs(x);
  double comp = 0.0;
  if (ax > 0.0 && levy_u_moment_ != 0.0)
    comp = j.jump_gamma * std::pow(ax, j.jump_l) * ax / (ax + j.smoothing) * levy_u_moment_;
  double next = x + (j.drift1d(x) - comp) * dt;
  int n_jumps = rng.poisson(levy_mass_ * dt);
  for (int k = 0; k < n_jumps; ++k) {
    double u = j.levy.sample(rng);
    next += j.c1(x, u) + j.c2(x, u);
  }
  return next;
}

// --- path / skeleton sampling -------------------------------------------

Path sample_path(const Model& m, double x0, double horizon, double step, RngStream& rng) {
  if (!(step > 0.0)) throw validation_error("euler.step must be > 0");
  if (!(horizon >= 0.0)) throw validation_error("horizon must be >= 0");
  Path path;
  path.step = step;
  std::size_t n = static_cast<std::size_t>(std::floor(horizon / step + 1e-9));
  path.states.reserve(n + 1);
  path.states.push_back(x0);
  OneStepSampler stepper(m);
  double x = x0;
  for (std::size_t k = 1; k <= n; ++k) {
    x = stepper.advance(x, step, rng);
    check_finite(x, static_cast<double>(k) * step);
    path.states.push_back(x);
  }
  return path;
}

PathNd sample_path_nd(const Model& m, const std::vector<double>& x0, double horizon, double step,
                      RngStream& rng) {
  const auto* wd = std::get_if<WeakDriftDiffusionModel>(&m);
  if (!wd) throw unsupported_model("sample_path_nd supports the weak-drift diffusion only");
  if (static_cast<int>(x0.size()) != wd->dim)
    throw validation_error("x0 dimension does not match model.dim");
  if (!(step > 0.0)) throw validation_error("euler.step must be > 0");
  PathNd path;
  path.dim = wd->dim;
  path.step = step;
  std::size_t n = static_cast<std::size_t>(std::floor(horizon / step + 1e-9));
  std::vector<double> x = x0;
  path.states.reserve((n + 1) * x.size());
  path.states.insert(path.states.end(), x.begin(), x.end());
  double sq = std::sqrt(step);
  for (std::size_t k = 1; k <= n; ++k) {
    double norm = 0.0;
    for (double c : x) norm += c * c;
    norm = std::sqrt(norm);
    double coeff = 0.0;
    if (norm > 0.0) coeff = -wd->r_drift * std::pow(norm, wd->l_exp) / (norm + wd->smoothing);
    for (auto& c : x) {
      c += coeff * c * step + sq * rng.normal();
      check_finite(c, static_cast<double>(k) * step);
    }
    path.states.insert(path.states.end(), x.begin(), x.end());
  }
  return path;
}

void stream_skeleton(const Model& m, double x0, double horizon, double step, RngStream& rng,
                     const std::function<double(double)>* f, const JumpSink& on_jump) {
  if (!(step > 0.0)) throw validation_error("euler.step must be > 0");
  if (!(horizon >= 0.0)) throw validation_error("horizon must be >= 0");
  OneStepSampler stepper(m);
  const bool exact = stepper.exact();
  double x = x0;
  double cum = 0.0;
  double f_prev = f ? (*f)(x0) : 0.0;
  std::size_t jump_index = 0;
  if (!on_jump(jump_index++, 0.0, x0, 0.0)) return;

  if (exact && f == nullptr) {
    // jump-to-jump exact transitions; no grid needed
    double t = 0.0;
    for (;;) {
      double gap = rng.exponential();
      double tn = t + gap;
      if (tn > horizon) return;
      x = stepper.advance(x, gap, rng);
      check_finite(x, tn);
      t = tn;
      if (!on_jump(jump_index++, t, x, 0.0)) return;
    }
  }

  double t = 0.0;
  std::size_t grid_k = 0;
  double next_jump = rng.exponential();
  for (;;) {
    double next_grid = static_cast<double>(grid_k + 1) * step;
    bool jump_next = next_jump < next_grid;
    double tn = jump_next ? next_jump : next_grid;
    if (tn > horizon) return;
    if (exact) {
      // advance exactly to the event time
      x = stepper.advance(x, tn - t, rng);
      check_finite(x, tn);
      if (f) {
        double fx = (*f)(x);
        cum += 0.5 * (f_prev + fx) * (tn - t);
        f_prev = fx;
      }
      t = tn;
      if (jump_next) {
        if (!on_jump(jump_index++, t, x, cum)) return;
        next_jump = t + rng.exponential();
      } else {
        ++grid_k;
      }
    } else if (jump_next) {
      // Euler state is held between grid points; the jump reads the latest
      // grid state (nearest left grid point) and f is flat over [t, tn]
      if (f) cum += f_prev * (tn - t);
      if (!on_jump(jump_index++, tn, x, cum)) return;
      next_jump = tn + rng.exponential();
      t = tn;
    } else {
      double x_new = stepper.advance(x, step, rng);
      check_finite(x_new, next_grid);
      if (f) {
        double fx = (*f)(x_new);
        // rectangle over any jump-split remainder, trapezoid across the cell end
        cum += f_prev * (next_grid - t) + 0.5 * (fx - f_prev) * step;
        f_prev = fx;
      }
      x = x_new;
      t = next_grid;
      ++grid_k;
    }
  }
}

Skeleton sample_skeleton(const Model& m, double x0, double horizon, double step, RngStream& rng) {
  Skeleton skel;
  stream_skeleton(m, x0, horizon, step, rng, nullptr,
                  [&](std::size_t, double t, double x, double) {
                    skel.jump_times.push_back(t);
                    skel.states.push_back(x);
                    return true;
                  });
  return skel;
}

// --- generator / drift --------------------------------------------------

namespace {

double generator_diffusion_part(double drift_dot_gradV, double diffusion_coeff, const LyapunovV& V,
                                double x, int dim) {
  double ax = std::abs(x);
  double m = V.m_power;
  double tr_term = 0.0;
  if (m == 2.0) {
    tr_term = m * (dim + m - 2.0);
  } else if (ax > 0.0) {
    tr_term = m * (dim + m - 2.0) * std::pow(ax, m - 2.0);
  }
  return drift_dot_gradV + 0.5 * diffusion_coeff * tr_term;
}

}  // namespace

double generator_value(const Model& m, const LyapunovV& V, double x) {
  double ax = std::abs(x);
  if (const auto* ou = std::get_if<OuModel>(&m)) {
    double drift_term = (ax == 0.0 && V.m_power != 2.0)
                            ? 0.0
                            : -ou->theta * V.m_power * std::pow(ax, V.m_power);
    return generator_diffusion_part(drift_term, ou->sigma * ou->sigma, V, x, 1);
  }
  if (const auto* wd = std::get_if<WeakDriftDiffusionModel>(&m)) {
    double drift_term = 0.0;
    if (ax > 0.0)
      drift_term = -wd->r_drift * V.m_power * std::pow(ax, V.m_power - 1.0 + wd->l_exp) * ax /
                   (ax + wd->smoothing);
    return generator_diffusion_part(drift_term, 1.0, V, x, wd->dim);
  }
  const auto& j = std::get<JumpSdeModel>(m);
  double drift_term = 0.0;
  if (ax > 0.0)
    drift_term = -j.r_drift * V.m_power * std::pow(ax, V.m_power - 1.0 + j.drift_l) * ax /
                 (ax + j.smoothing);
  // jump quadrature, split at the |u| = 1 kink of c2 and at the u where the
  // post-jump state crosses the V floor (c is piecewise linear in u, so the
  // crossings are explicit); each piece is then smooth
  double vx = V.value_at(x);
  double gx = V.grad_raw(x);
  // the |u| <= 1 branch is fixed per segment so endpoint samples stay on the
  // same branch as the interior (c2 and the compensator switch together)
  auto integrand_for = [&](bool big) {
    return [&, big](double u) {
      double c = j.c1(x, u) + (big ? -j.contract * x : 0.0);
      double comp = big ? 0.0 : gx * j.c1(x, u);
      return (V.value_at(x + c) - vx - comp) * j.levy.density(u);
    };
  };
  double c1_coeff = ax > 0.0 ? j.jump_gamma * std::pow(ax, j.jump_l) * ax / (ax + j.smoothing) : 0.0;
  auto floor_crossings = [&](double a, double b, bool big_u, std::vector<double>& cuts) {
    if (c1_coeff == 0.0) return;
    double base = big_u ? x * (1.0 - j.contract) : x;
    for (double target : {-1.0, 1.0}) {
      double u_star = (target - base) / c1_coeff;
      if (u_star > a && u_star < b) cuts.push_back(u_star);
    }
  };
  double jump_term = 0.0;
  double dm = j.levy.delta_min, um = j.levy.u_max;
  struct Seg {
    double a, b;
    bool big;
  };
  std::vector<Seg> segs;
  if (dm < 1.0) {
    segs.push_back({dm, std::min(1.0, um), false});
    if (um > 1.0) segs.push_back({1.0, um, true});
  } else {
    segs.push_back({dm, um, true});
  }
  for (const Seg& seg : segs) {
    if (!(seg.b > seg.a)) continue;
    auto f = integrand_for(seg.big);
    for (auto [lo, hi] : {std::pair{seg.a, seg.b}, std::pair{-seg.b, -seg.a}}) {
      std::vector<double> cuts = {lo, hi};
      floor_crossings(lo, hi, seg.big, cuts);
      std::sort(cuts.begin(), cuts.end());
      for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
        jump_term += adaptive_simpson(f, cuts[k], cuts[k + 1], 1e-11);
    }
  }
  return drift_term + jump_term;
}

DriftReport verify_drift(const Model& m, const rates::PhiSpec& phi, const LyapunovV& V,
                         double r_min, double r_max, int n_grid) {
  phi.validate();
  V.validate();
  if (!(r_max > r_min) || n_grid < 2) throw validation_error("drift region must have r_max > r_min and grid >= 2");
  DriftReport report;
  report.radii.reserve(n_grid);
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_grid; ++i) {
    double r = r_min + (r_max - r_min) * i / (n_grid - 1);
    double av = generator_value(m, V, r);
    double pv = phi(V.value(r));
    double margin = -av - pv;
    report.radii.push_back(r);
    report.av.push_back(av);
    report.phiv.push_back(pv);
    report.margin.push_back(margin);
    worst = std::min(worst, margin);
  }
  report.worst_margin = worst;
  // smallest grid radius with nonnegative margin from there on
  int first_ok = -1;
  for (int i = n_grid - 1; i >= 0; --i) {
    if (report.margin[i] >= 0.0)
      first_ok = i;
    else
      break;
  }
  if (first_ok >= 0) {
    report.m0 = report.radii[first_ok];
    int nb = std::max(64, n_grid);
    double sup = 0.0;
    for (int i = 0; i <= nb; ++i) {
      double r = report.m0 * i / nb;
      sup = std::max(sup, generator_value(m, V, r) + phi(V.value(r)));
    }
    report.b_hat = std::max(0.0, sup);
  } else {
    int nb = std::max(64, n_grid);
    double sup = 0.0;
    for (int i = 0; i <= nb; ++i) {
      double r = r_max * i / nb;
      sup = std::max(sup, generator_value(m, V, r) + phi(V.value(r)));
    }
    report.b_hat = std::max(0.0, sup);
  }
  return report;
}

}  // namespace regensim::models
