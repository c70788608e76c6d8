#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "regensim/errors.hpp"
#include "regensim/rates.hpp"
#include "regensim/rng.hpp"

namespace regensim::models {

// ---------------------------------------------------------------------------
// Model records. All are immutable value types, shareable across threads.
// ---------------------------------------------------------------------------

// dX = -theta X dt + sigma dW. Transition over t from x is Gaussian with
// mean x e^{-theta t} and variance sigma^2 (1 - e^{-2 theta t}) / (2 theta),
// so sampling on any time grid is exact.
struct OuModel {
  double theta = 1.0;
  double sigma = std::sqrt(2.0);

  void validate() const {
    if (!(theta > 0.0)) throw validation_error("model.theta must be > 0");
    if (!(sigma > 0.0)) throw validation_error("model.sigma must be > 0");
  }
  double transition_mean(double x, double t) const { return x * std::exp(-theta * t); }
  double transition_var(double t) const {
    return sigma * sigma * (-std::expm1(-2.0 * theta * t)) / (2.0 * theta);
  }
  double stationary_var() const { return sigma * sigma / (2.0 * theta); }
};

// Unit-diffusion process with drift b(x) = -r x ||x||^{l-1} / (1 + eps/||x||),
// so <b(x), x> = -r ||x||^{1+l} / (1 + eps/||x||). The smoothing eps
// regularizes the drift near the origin; eps = 0 recovers the raw power
// (including the pure sign drift at l = 0). No closed-form transition density.
struct WeakDriftDiffusionModel {
  double r_drift = 1.0;
  double l_exp = 0.5;
  double smoothing = 1e-3;
  int dim = 1;

  void validate() const {
    if (!(r_drift > 0.0)) throw validation_error("model.r must be > 0");
    if (!(l_exp >= 0.0 && l_exp < 2.0)) throw validation_error("model.l must lie in [0, 2)");
    if (!(smoothing >= 0.0)) throw validation_error("model.smoothing must be >= 0");
    if (dim < 1 || dim > 3) throw validation_error("model.dim must be 1, 2 or 3");
  }
  // <b(x), x> / ||x||^2 along a radius (isotropic); returns b(x) for scalar x.
  double drift1d(double x) const {
    double ax = std::abs(x);
    if (ax == 0.0) return 0.0;
    return -r_drift * x * std::pow(ax, l_exp) / (ax + smoothing);
  }
};

// Levy measure on R with density scale * exp(-u^2 / (2 shape^2)) restricted to
// delta_min <= |u| <= u_max. Jumps below delta_min are dropped, above u_max
// truncated; both cutoffs keep the total mass finite and simulable.
struct LevySpec {
  double scale = 1.0;
  double shape = 1.0;
  double delta_min = 0.05;
  double u_max = 4.0;

  void validate() const {
    if (!(scale > 0.0)) throw validation_error("levy.scale must be > 0");
    if (!(shape > 0.0)) throw validation_error("levy.shape must be > 0");
    if (!(delta_min > 0.0)) throw validation_error("levy.delta_min must be > 0");
    if (!(u_max > delta_min)) throw validation_error("levy.u_max must exceed levy.delta_min");
  }
  double density(double u) const {
    double au = std::abs(u);
    if (au < delta_min || au > u_max) return 0.0;
    return scale * std::exp(-0.5 * u * u / (shape * shape));
  }
  // total mass of the truncated measure (closed form via erf)
  double total_mass() const;
  // int_{lo <= |u| <= hi} |u|^m nu(du), clipped to the support
  double abs_moment(double m, double lo, double hi) const;
  // draw from the normalized truncated density
  double sample(RngStream& rng) const;
};

// dX = b(X)dt + int_{|u|<=1} c(X-,u) mu~(dt,du) + int_{|u|>1} c(X-,u) mu(dt,du)
// with c = c1 + c2, c1(x,u) = jump_gamma * x |x|^{jump_l - 1}/(1+eps/|x|) * u
// (linear in u), and c2(x,u) = -contract * x for |u| > 1 (0 otherwise), which
// satisfies ||x + c2|| <= ||x||. Scalar state and scalar marks.
struct JumpSdeModel {
  double r_drift = 1.0;
  double drift_l = 0.5;
  double smoothing = 1e-3;
  double jump_gamma = 0.2;
  double jump_l = 0.5;
  double contract = 0.1;
  LevySpec levy;
  int dim_x = 1;
  int dim_u = 1;

  void validate() const;
  double drift1d(double x) const {
    double ax = std::abs(x);
    if (ax == 0.0) return 0.0;
    return -r_drift * x * std::pow(ax, drift_l) / (ax + smoothing);
  }
  double c1(double x, double u) const {
    double ax = std::abs(x);
    if (ax == 0.0) return 0.0;
    return jump_gamma * std::pow(ax, jump_l) * ax / (ax + smoothing) * u;
  }
  double c2(double x, double u) const { return std::abs(u) > 1.0 ? -contract * x : 0.0; }
  // int_{delta <= |u| <= 1} u nu(du), the u-factor of the small-jump compensator
  double small_jump_u_moment() const;
  // compensator of the small-jump integral: int_{|u|<=1} c1(x,u) nu(du)
  double small_jump_compensator(double x) const;
};

using Model = std::variant<OuModel, WeakDriftDiffusionModel, JumpSdeModel>;

const char* model_kind(const Model& m);

// ---------------------------------------------------------------------------
// Lyapunov function V(x) = max(||x||^m, 1): continuous, V >= 1, equal to
// ||x||^m outside the unit ball (drift margins there are exact). rho0 <= 1 is
// the floor radius inside which V is capped at 1; generator closed forms use
// the raw-power derivatives, whose exactness claim holds for ||x|| >= rho0.
// ---------------------------------------------------------------------------
struct LyapunovV {
  double m_power = 2.0;
  double rho0 = 1.0;

  void validate() const;
  double value(double r_abs) const;     // argument is ||x||
  double value_at(double x) const { return value(std::abs(x)); }
  // raw-power derivatives of ||x||^m used by the generator closed forms
  double grad_raw(double x) const {
    double ax = std::abs(x);
    if (ax == 0.0) return 0.0;
    return m_power * std::pow(ax, m_power - 1.0) * (x < 0.0 ? -1.0 : 1.0);
  }
};

// ---------------------------------------------------------------------------
// Recurrence parameter bookkeeping for the drift examples. The diffusion recipe
// takes (M, l, r, dim, kappa), derives beta = M^{-l}, gamma = dim M^{-l},
// m = 2 - l + kappa, r~ = r - (gamma + (m-2) beta)/2 and the induced
// Phi(v) = m r~ v^{1 - (2-l)/m}, whose rate order gives p = m / (2-l) moments.
// ---------------------------------------------------------------------------
struct RecurrenceParams {
  double M = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double l_exp = 0.5;
  double r_drift = 1.0;
  double kappa = 1.0;
  double m_power = 2.0;
  double r_tilde = 0.5;
  rates::PhiSpec phi;

  static RecurrenceParams diffusion(double M, double l, double r, int dim, double kappa);
  // Jump-SDE recipe: V = ||x||^m with m the Levy moment order, and
  // Phi(v) = m r~ v^{1-(1-l)/m}, r~ = r - 2 gamma_jump int_{|u|>1}|u|^m nu.
  static RecurrenceParams jump_sde(double M, double l, double r, double gamma_jump,
                                   double big_jump_moment, double m_power);
  double moment_order() const { return 1.0 / (1.0 - phi.phi_exponent); }
};

// ---------------------------------------------------------------------------
// Densities
// ---------------------------------------------------------------------------

// p_t(x, y); closed form for OU only, throws unsupported_model otherwise.
double transition_density(const Model& m, double t, double x, double y);

// u1(x, y) = int_0^inf e^{-t} p_t(x, y) dt by adaptive quadrature (OU only).
double resolvent_density(const Model& m, double x, double y, double tol = 5e-12);

// ---------------------------------------------------------------------------
// Path / skeleton simulation (scalar state)
// ---------------------------------------------------------------------------

struct Path {
  double step = 1e-3;
  std::vector<double> states;  // states[k] is X at time k * step
  double time_at(std::size_t k) const { return static_cast<double>(k) * step; }
};

struct Skeleton {
  std::vector<double> jump_times;  // T_0 = 0 first
  std::vector<double> states;      // X_{T_n}
};

Path sample_path(const Model& m, double x0, double horizon, double step, RngStream& rng);

Skeleton sample_skeleton(const Model& m, double x0, double horizon, double step, RngStream& rng);

// Multi-dimensional Euler path for the diffusion-style models; states are
// flattened frames of length dim. Used for dim > 1 smoke checks only; the
// regeneration pipeline is one-dimensional.
struct PathNd {
  int dim = 1;
  double step = 1e-3;
  std::vector<double> states;
};
PathNd sample_path_nd(const Model& m, const std::vector<double>& x0, double horizon, double step,
                      RngStream& rng);

// Single-transition sampler over an arbitrary dt: exact for OU, Euler for the
// diffusion, Euler-with-jumps for the jump SDE (callers keep dt <= step for
// the approximate models). Thread-confined; caches per-dt constants.
class OneStepSampler {
 public:
  explicit OneStepSampler(const Model& m);
  double advance(double x, double dt, RngStream& rng);
  bool exact() const { return exact_; }

 private:
  const Model& model_;
  bool exact_ = false;
  double cached_dt_ = -1.0;
  double cached_decay_ = 0.0;
  double cached_sd_ = 0.0;
  double levy_mass_ = 0.0;
  double levy_u_moment_ = 0.0;
};

// Streaming walk over the merged grid (uniform step points plus rate-1 Poisson
// jump times). Calls on_jump(n, T_n, X_{T_n}, cum_f(T_n)) for every skeleton
// jump, starting with (0, 0, x0, 0); cum_f is the trapezoid accumulation of
// f along the path (0 throughout when f is null). For OU the state advances
// exactly to every event time; for the Euler models the state moves on the
// uniform grid and jumps read the latest grid state. The sink returns false
// to stop the stream early.
using JumpSink = std::function<bool(std::size_t, double, double, double)>;
void stream_skeleton(const Model& m, double x0, double horizon, double step, RngStream& rng,
                     const std::function<double(double)>* f, const JumpSink& on_jump);

// ---------------------------------------------------------------------------
// Generator and drift verification
// ---------------------------------------------------------------------------

// A V(x) with V = ||x||^m, using analytic raw-power derivatives (the claim is
// exact outside the blend ball of V). x is the signed coordinate along the
// first axis; all models here are isotropic. The jump model adds the
// quadrature of int (V(x + c(x,u)) - V(x) - 1_{|u|<=1} V'(x) c1(x,u)) nu(du)
// over the truncated support, split at the |u| = 1 kink.
double generator_value(const Model& m, const LyapunovV& V, double x);

struct DriftReport {
  std::vector<double> radii;
  std::vector<double> av;      // A V at each radius
  std::vector<double> phiv;    // Phi(V) at each radius
  std::vector<double> margin;  // -A V - Phi(V)
  double worst_margin = 0.0;
  double m0 = std::numeric_limits<double>::quiet_NaN();  // smallest radius with
                                                         // nonnegative margin beyond it
  double b_hat = 0.0;  // max(0, sup_{|x| <= m0} (A V + Phi(V)))
};

DriftReport verify_drift(const Model& m, const rates::PhiSpec& phi, const LyapunovV& V,
                         double r_min, double r_max, int n_grid);

}  // namespace regensim::models
