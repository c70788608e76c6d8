#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "regensim/models.hpp"
#include "regensim/rates.hpp"
#include "regensim/splitting.hpp"
#include "regensim/stats.hpp"

namespace regensim::estimators {

// The bounded test functions used throughout; `identity` is unbounded and
// admitted only where boundedness is not required (occupation estimates).
struct BoundedFn {
  enum class Kind { one, zero, indicator_neg, identity, square_capped };
  Kind kind = Kind::indicator_neg;
  double cap = 25.0;

  double operator()(double x) const {
    switch (kind) {
      case Kind::one: return 1.0;
      case Kind::zero: return 0.0;
      case Kind::indicator_neg: return x <= 0.0 ? 1.0 : 0.0;
      case Kind::identity: return x;
      case Kind::square_capped: return std::min(x * x, cap);
    }
    return 0.0;
  }
  double sup_norm() const {
    switch (kind) {
      case Kind::one: return 1.0;
      case Kind::zero: return 0.0;
      case Kind::indicator_neg: return 1.0;
      case Kind::identity: return std::numeric_limits<double>::infinity();
      case Kind::square_capped: return cap;
    }
    return 0.0;
  }
  std::string name() const;
  static BoundedFn parse(const std::string& name, double cap = 25.0);
};

// Stationary mean of f under the model, when a closed form exists: any f for
// the OU (Gaussian stationary law), odd/indicator f for the symmetric models.
std::optional<double> analytic_mu(const models::Model& m, const BoundedFn& f);

// Long-run regeneration rate ell = alpha * mu(C) when mu(C) has a closed form
// (OU only: jump-time states are stationary and jumps ring bells at rate
// alpha on C-visits).
std::optional<double> analytic_ell(const models::Model& m, const splitting::Minorization& mz);

// ---------------------------------------------------------------------------
// Cycle harvesting
// ---------------------------------------------------------------------------

struct CycleSample {
  std::vector<double> durations;      // R_{k+1} - R_k, pooled over replicas
  std::vector<double> f_integrals;    // int_{R_k}^{R_{k+1}} f(X_s) ds
  std::vector<double> start_states;   // X at R_k (cycle opener)
  std::vector<double> r_integrals_first;  // int_0^{R_1} r(s) ds, one per replica
  std::vector<double> regen_states;   // X at every R_n, n >= 1 (law nu check)
  std::vector<long> visits_before_bell;  // per segment, for the geometric law
  std::size_t replicas = 0;
  std::size_t diverged = 0;
};

struct HarvestOptions {
  double horizon = 1000.0;
  std::size_t replicas = 8;
  std::uint64_t seed = 0;
  double step = 1e-3;
  double x0 = 0.0;
  unsigned threads = 1;
};

CycleSample harvest_cycles(const models::Model& m, const splitting::Minorization& mz,
                           const BoundedFn& f, const rates::RatePoly& rate,
                           const HarvestOptions& opt);

struct MuEstimate {
  double ell = 0.0;
  double ell_se = 0.0;
  double mu_f = 0.0;
  double mu_f_se = 0.0;
  std::size_t n_cycles = 0;
};

// ell = 1/mean(durations); mu_f = mean(f integrals)/mean(durations) with the
// delta-method standard error of the ratio estimator.
MuEstimate estimate_mu(const CycleSample& cs);

// mean of durations^p with a leave-one-out jackknife SE
double cycle_moment(const CycleSample& cs, double p, double* se_out = nullptr);

// ---------------------------------------------------------------------------
// Moment-bound checks
// ---------------------------------------------------------------------------

struct EnvelopePoint {
  double x = 0.0;
  double v_of_x = 0.0;
  double estimate = 0.0;  // E_x int_0^{R_1} r(s) ds
  double se = 0.0;
  std::size_t replicas = 0;
};

struct EnvelopeReport {
  std::vector<EnvelopePoint> points;
  stats::LinearFit fit;  // estimate against V(x)
};

struct EnvelopeOptions {
  std::size_t replicas = 2000;
  std::uint64_t seed = 0;
  double step = 1e-3;
  double base_horizon = 256.0;  // doubled until R_1 is found (8 retries max)
  unsigned threads = 1;
};

EnvelopeReport regen_moment_envelope(const models::Model& m, const splitting::Minorization& mz,
                                     const rates::RatePoly& rate, const std::vector<double>& x_grid,
                                     const models::LyapunovV& V, const EnvelopeOptions& opt);

struct HittingCheckPoint {
  double x = 0.0;
  double estimate = 0.0;  // E_x int_0^{tau_B(delta)} r(s) ds
  double se = 0.0;
  double bound = 0.0;     // v_scale V(x) - 1 + (b_scale b_hat / Phi(1)) int_0^delta r
  bool pass = false;      // estimate - 3 se <= bound
};

struct HittingOptions {
  std::size_t replicas = 10000;
  std::uint64_t seed = 0;
  double step = 1e-3;
  double max_horizon = 2000.0;
  unsigned threads = 1;
  double v_scale = 1.0;  // deliberate bound-breaking controls scale these down
  double b_scale = 1.0;
};

std::vector<HittingCheckPoint> hitting_moment_check(const models::Model& m,
                                                    const rates::RatePoly& rate, double b_radius,
                                                    double delta, const std::vector<double>& x_grid,
                                                    const models::LyapunovV& V,
                                                    const rates::PhiSpec& phi, double b_hat,
                                                    const HittingOptions& opt);

// ---------------------------------------------------------------------------
// Deviation curves
// ---------------------------------------------------------------------------

struct DeviationReport {
  std::vector<double> t_grid;
  double epsilon = 0.0;
  std::vector<stats::BinomialEstimate> probabilities;
  double fitted_slope = std::numeric_limits<double>::quiet_NaN();
  std::size_t reliable_points = 0;  // points with p_hat > 20/replicas enter the fit
  std::size_t replicas = 0;
  double p_order = 0.0;  // 1 / (1 - phi)
  double center = 0.0;   // mu(f) or ell used as ground truth
  bool center_calibrated = false;
};

struct DeviationOptions {
  std::size_t replicas = 20000;
  std::uint64_t seed = 0;
  double step = 1e-2;
  double x0 = 0.0;
  unsigned threads = 1;
  double p_order = 2.0;
  std::optional<double> center_truth;  // analytic/known center; calibrated when absent
  // calibration run when no truth supplied: replicas/horizon multipliers
  std::size_t calib_replicas = 64;
  double calib_horizon_factor = 10.0;
};

// P_x(|t^{-1} int_0^t f(X_s) ds - mu(f)| > eps) on the t grid; requires
// 0 < eps < ||f||_inf.
DeviationReport deviation_probability(const models::Model& m, const BoundedFn& f, double epsilon,
                                      const std::vector<double>& t_grid,
                                      const DeviationOptions& opt);

// P_x(|N_t/t - ell| > ell eps) on the t grid; requires eps in (0, 1).
DeviationReport nt_deviation(const models::Model& m, const splitting::Minorization& mz,
                             double epsilon, const std::vector<double>& t_grid,
                             const DeviationOptions& opt);

}  // namespace regensim::estimators
