#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <vector>

#include "regensim/models.hpp"
#include "regensim/rng.hpp"

namespace regensim::splitting {

// Tabulated resolvent values u1(x, y) on (x in C-grid) x (y in window-grid),
// with bilinear interpolation. For the OU model the table is filled by
// quadrature of the closed-form transition density; for the weak-drift
// diffusion it is filled by solving the one-dimensional resolvent equation
//   (1/2) u'' - (b u)' - u = -delta_x
// on an extended grid (tridiagonal solve per source point).
struct ResolventGrid {
  std::vector<double> xs;  // C-grid (increasing)
  double y_lo = 0.0;
  double y_hi = 0.0;
  std::size_t ny = 0;
  std::vector<double> vals;  // row-major: vals[ix * ny + iy]

  double dy() const { return (y_hi - y_lo) / static_cast<double>(ny - 1); }
  double at(std::size_t ix, std::size_t iy) const { return vals[ix * ny + iy]; }
  double interp(double x, double y) const;
};

// Minorization pair (alpha, nu) for the resolvent kernel on the petite set
// C = [-c_radius, c_radius]: u1(x, .) >= alpha nu(.) for all x in C, with nu
// a probability density supported on the window. nu is tabulated on the
// window grid with linear interpolation; sampling from the interpolated
// density is exact (per-cell inverse CDF).
struct Minorization {
  double c_radius = 1.0;
  double window_lo = -8.0;
  double window_hi = 8.0;
  double alpha_raw = 0.0;  // integral of the pointwise infimum
  double alpha_min = 0.0;  // deflated, capped minorization constant
  std::vector<double> nu;  // density values on the window grid
  std::vector<double> nu_cell_cum;  // cumulative cell masses for sampling
  ResolventGrid u1_grid;
  double worst_violation = 0.0;  // min over the grid of u1 - alpha nu
  std::shared_ptr<std::atomic<long>> clamp_violations =
      std::make_shared<std::atomic<long>>(0);

  bool in_c(double x) const { return std::abs(x) <= c_radius; }
  double nu_at(double y) const;           // linear interpolation, 0 off-window
  double nu_cdf(double y) const;          // CDF of the interpolated density
  double sample_nu(RngStream& rng) const;
  double u1(double x, double y) const { return u1_grid.interp(x, y); }
};

// Builds (alpha, nu) from the pointwise infimum of the resolvent over the
// C-grid: alpha0 = int_window inf_x u1(x, y) dy, nu = inf / alpha0 and
// alpha_min = min(alpha_cap, 0.99 alpha0). Throws degenerate_minorization
// when alpha0 < 1e-3. euler_step is used by the weak-drift table only.
Minorization compute_minorization(const models::Model& m, double c_radius, double window_halfwidth,
                                  std::size_t nx = 64, std::size_t ny = 4096,
                                  double alpha_cap = 0.99);

// Retrospective bell probability: P(colour <= alpha | X_{T_n} = x, X_{T_{n+1}} = y)
// = alpha nu(y) / u1(x, y) for x in C, 0 otherwise. Clamped to [0, 1]; the
// clamp never binds when the minorization inequality holds and increments
// mz.clamp_violations when it does.
double bell_probability(double x, double y, const Minorization& mz);

// One draw from the split kernel Q((x, u), .): nu on the bell branch,
// the residual (u1 - alpha nu)/(1 - alpha) by rejection on the non-bell
// branch, and plain u1(x, .) off C. Sampling from u1(x, .) draws an exp(1)
// time and advances the model exactly (OU) or by Euler steps (euler_step).
double split_kernel_sample(double x, double colour, const Minorization& mz,
                           const models::Model& model, RngStream& rng,
                           double euler_step = 1e-3);

struct SplitSkeleton {
  std::vector<double> jump_times;
  std::vector<double> states;
  std::vector<double> colours;  // realized Z^2 at each jump
  std::vector<bool> bells;      // colour <= alpha and state in C
  std::vector<std::size_t> c_visit_indices;
};

// Retrospective Nummelin colouring of a sampled skeleton: for every C-visit
// with a successor, the bell fires with probability bell_probability(x, x');
// the trailing C-visit (no successor) uses the marginal alpha. Colours are
// realized consistently with the bells: U[0, alpha] on bells, U(alpha, 1]
// on silent C-visits, plain U[0, 1] elsewhere.
SplitSkeleton colour_skeleton(const models::Skeleton& skel, const Minorization& mz,
                              RngStream& rng);

struct RegenerationSchedule {
  std::vector<double> s_times;  // S_n: bell jump times
  std::vector<double> r_times;  // R_n: the jump immediately after S_n
  std::size_t complete_cycles = 0;
};

// S_{n+1} = first bell time strictly after R_n (R_0 = 0), R_{n+1} = first
// jump time strictly after S_{n+1}. A trailing bell without a following jump
// yields no R and the incomplete cycle is discarded.
RegenerationSchedule regeneration_schedule(const SplitSkeleton& ss);

// N_t = #{n >= 1 : R_n <= t}
std::size_t counting_process(const RegenerationSchedule& rs, double t);

}  // namespace regensim::splitting
