#include "regensim/splitting.hpp"

#include <algorithm>
#include <cmath>

#include "regensim/quadrature.hpp"

namespace regensim::splitting {

using models::Model;
using models::OuModel;
using models::WeakDriftDiffusionModel;

// --- ResolventGrid --------------------------------------------------------

double ResolventGrid::interp(double x, double y) const {
  if (y < y_lo || y > y_hi || xs.empty()) return 0.0;
  // clamp x into the tabulated C range; callers only ask for x in C
  double xc = std::clamp(x, xs.front(), xs.back());
  std::size_t ix = 0;
  double tx = 0.0;
  if (xs.size() > 1) {
    double hx = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
    double pos = (xc - xs.front()) / hx;
    ix = std::min(static_cast<std::size_t>(pos), xs.size() - 2);
    tx = pos - static_cast<double>(ix);
  }
  double hy = dy();
  double posy = (y - y_lo) / hy;
  std::size_t iy = std::min(static_cast<std::size_t>(posy), ny - 2);
  double ty = posy - static_cast<double>(iy);
  double v00 = at(ix, iy), v01 = at(ix, iy + 1);
  double v10 = xs.size() > 1 ? at(ix + 1, iy) : v00;
  double v11 = xs.size() > 1 ? at(ix + 1, iy + 1) : v01;
  double v0 = v00 + ty * (v01 - v00);
  double v1 = v10 + ty * (v11 - v10);
  return v0 + tx * (v1 - v0);
}

// --- weak-drift resolvent table (1-D resolvent ODE) -----------------------

namespace {

// Solves (1/2) u'' - (b u)' - u = -delta_{x0} on [lo, hi] with u(lo)=u(hi)=0
// by central finite differences and the Thomas algorithm. Returns u at nodes.
std::vector<double> resolvent_ode_solve(const WeakDriftDiffusionModel& wd, double lo, double hi,
                                        std::size_t n_nodes, std::size_t source_index) {
  double h = (hi - lo) / static_cast<double>(n_nodes - 1);
  std::size_t n = n_nodes - 2;  // interior unknowns
  std::vector<double> sub(n), diag(n), sup(n), rhs(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double y_prev = lo + h * static_cast<double>(k);
    double y_next = lo + h * static_cast<double>(k + 2);
    double b_prev = wd.drift1d(y_prev);
    double b_next = wd.drift1d(y_next);
    sub[k] = 0.5 / (h * h) + b_prev / (2.0 * h);
    diag[k] = -1.0 / (h * h) - 1.0;
    sup[k] = 0.5 / (h * h) - b_next / (2.0 * h);
  }
  if (source_index == 0 || source_index >= n_nodes - 1)
    throw validation_error("resolvent source must be interior");
  rhs[source_index - 1] = -1.0 / h;  // -delta as a unit point mass
  // Thomas sweep
  for (std::size_t k = 1; k < n; ++k) {
    double w = sub[k] / diag[k - 1];
    diag[k] -= w * sup[k - 1];
    rhs[k] -= w * rhs[k - 1];
  }
  std::vector<double> u(n_nodes, 0.0);
  u[n] = rhs[n - 1] / diag[n - 1];
  for (std::size_t k = n - 1; k >= 1; --k) {
    u[k] = (rhs[k - 1] - sup[k - 1] * u[k + 1]) / diag[k - 1];
  }
  // tiny negative undershoots from the advection discretization are clipped
  for (auto& v : u) v = std::max(v, 0.0);
  return u;
}

ResolventGrid build_grid_ou(const OuModel& ou, double c_radius, double window, std::size_t nx,
                            std::size_t ny) {
  ResolventGrid g;
  g.y_lo = -window;
  g.y_hi = window;
  g.ny = ny;
  g.xs.resize(nx);
  for (std::size_t i = 0; i < nx; ++i)
    g.xs[i] = nx == 1 ? 0.0 : -c_radius + 2.0 * c_radius * i / static_cast<double>(nx - 1);
  g.vals.resize(nx * ny);
  Model m = ou;
  double hy = (g.y_hi - g.y_lo) / static_cast<double>(ny - 1);
  for (std::size_t ix = 0; ix < nx; ++ix) {
    for (std::size_t iy = 0; iy < ny; ++iy) {
      double y = g.y_lo + hy * static_cast<double>(iy);
      g.vals[ix * ny + iy] = models::resolvent_density(m, g.xs[ix], y);
    }
  }
  return g;
}

ResolventGrid build_grid_weakdrift(const WeakDriftDiffusionModel& wd, double c_radius,
                                   double window, std::size_t nx, std::size_t ny) {
  if (wd.dim != 1)
    throw unsupported_model("weak-drift minorization supports dim = 1 only");
  ResolventGrid g;
  g.y_lo = -window;
  g.y_hi = window;
  g.ny = ny;
  // extend the solve domain so the absorbing boundary is far from the window
  double pad = std::max(6.0, 0.5 * window);
  double hy = 2.0 * window / static_cast<double>(ny - 1);
  std::size_t pad_nodes = static_cast<std::size_t>(std::ceil(pad / hy));
  std::size_t n_nodes = ny + 2 * pad_nodes;
  double lo = g.y_lo - hy * static_cast<double>(pad_nodes);
  double hi = g.y_hi + hy * static_cast<double>(pad_nodes);
  g.xs.resize(nx);
  g.vals.resize(nx * ny);
  for (std::size_t ix = 0; ix < nx; ++ix) {
    double x = nx == 1 ? 0.0 : -c_radius + 2.0 * c_radius * ix / static_cast<double>(nx - 1);
    // snap the source onto the solve grid so the delta lands on a node
    std::size_t src = static_cast<std::size_t>(std::llround((x - lo) / hy));
    src = std::clamp<std::size_t>(src, 1, n_nodes - 2);
    g.xs[ix] = lo + hy * static_cast<double>(src);
    std::vector<double> u = resolvent_ode_solve(wd, lo, hi, n_nodes, src);
    for (std::size_t iy = 0; iy < ny; ++iy) g.vals[ix * ny + iy] = u[pad_nodes + iy];
  }
  return g;
}

double trapezoid_mass(const std::vector<double>& f, double h) {
  if (f.size() < 2) return 0.0;
  double s = 0.5 * (f.front() + f.back());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
  return s * h;
}

}  // namespace

// --- Minorization ---------------------------------------------------------

double Minorization::nu_at(double y) const {
  if (y < window_lo || y > window_hi || nu.size() < 2) return 0.0;
  double h = (window_hi - window_lo) / static_cast<double>(nu.size() - 1);
  double pos = (y - window_lo) / h;
  std::size_t i = std::min(static_cast<std::size_t>(pos), nu.size() - 2);
  double t = pos - static_cast<double>(i);
  return nu[i] + t * (nu[i + 1] - nu[i]);
}

double Minorization::nu_cdf(double y) const {
  if (y <= window_lo) return 0.0;
  if (y >= window_hi) return 1.0;
  double h = (window_hi - window_lo) / static_cast<double>(nu.size() - 1);
  double pos = (y - window_lo) / h;
  std::size_t i = std::min(static_cast<std::size_t>(pos), nu.size() - 2);
  double before = i == 0 ? 0.0 : nu_cell_cum[i - 1];
  double s = y - (window_lo + h * static_cast<double>(i));
  double a = nu[i], b = nu[i + 1];
  double partial = a * s + 0.5 * (b - a) * s * s / h;
  return std::clamp(before + partial, 0.0, 1.0);
}

double Minorization::sample_nu(RngStream& rng) const {
  double xi = rng.uniform() * nu_cell_cum.back();
  auto it = std::upper_bound(nu_cell_cum.begin(), nu_cell_cum.end(), xi);
  std::size_t cell = static_cast<std::size_t>(it - nu_cell_cum.begin());
  cell = std::min(cell, nu_cell_cum.size() - 1);
  double before = cell == 0 ? 0.0 : nu_cell_cum[cell - 1];
  double q = xi - before;  // mass to place inside the cell
  double h = (window_hi - window_lo) / static_cast<double>(nu.size() - 1);
  double a = nu[cell], b = nu[cell + 1];
  double y0 = window_lo + h * static_cast<double>(cell);
  if (std::abs(b - a) < 1e-300) {
    return a > 0.0 ? y0 + q / a : y0 + 0.5 * h;
  }
  // solve a s + (b-a) s^2 / (2h) = q for s in [0, h]
  double disc = a * a + 2.0 * q * (b - a) / h;
  double s = (std::sqrt(std::max(disc, 0.0)) - a) * h / (b - a);
  return y0 + std::clamp(s, 0.0, h);
}

Minorization compute_minorization(const Model& m, double c_radius, double window_halfwidth,
                                  std::size_t nx, std::size_t ny, double alpha_cap) {
  if (!(c_radius > 0.0)) throw validation_error("split.c_radius must be > 0");
  if (!(window_halfwidth > 0.0)) throw validation_error("split.window must be > 0");
  if (nx < 1 || ny < 8) throw validation_error("split.grid too small");
  if (!(alpha_cap > 0.0 && alpha_cap < 1.0))
    throw validation_error("split.alpha_cap must lie in (0, 1)");

  Minorization mz;
  mz.c_radius = c_radius;
  mz.window_lo = -window_halfwidth;
  mz.window_hi = window_halfwidth;
  if (const auto* ou = std::get_if<OuModel>(&m)) {
    mz.u1_grid = build_grid_ou(*ou, c_radius, window_halfwidth, nx, ny);
  } else if (const auto* wd = std::get_if<WeakDriftDiffusionModel>(&m)) {
    mz.u1_grid = build_grid_weakdrift(*wd, c_radius, window_halfwidth, nx, ny);
  } else {
    throw unsupported_model("minorization requires a model with an accessible resolvent");
  }

  // pointwise infimum over the C-grid
  std::vector<double> inf_vals(ny, std::numeric_limits<double>::infinity());
  for (std::size_t ix = 0; ix < mz.u1_grid.xs.size(); ++ix)
    for (std::size_t iy = 0; iy < ny; ++iy)
      inf_vals[iy] = std::min(inf_vals[iy], mz.u1_grid.at(ix, iy));

  double hy = mz.u1_grid.dy();
  double alpha0 = trapezoid_mass(inf_vals, hy);
  mz.alpha_raw = alpha0;
  if (alpha0 < 1e-3)
    throw degenerate_minorization("minorization mass " + std::to_string(alpha0) +
                                  " below 1e-3; C too large or window too small");
  mz.alpha_min = std::min(alpha_cap, 0.99 * alpha0);
  mz.nu.resize(ny);
  for (std::size_t iy = 0; iy < ny; ++iy) mz.nu[iy] = inf_vals[iy] / alpha0;

  // cell masses for exact sampling of the interpolated density
  mz.nu_cell_cum.resize(ny - 1);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < ny; ++i) {
    acc += 0.5 * (mz.nu[i] + mz.nu[i + 1]) * hy;
    mz.nu_cell_cum[i] = acc;
  }

  // re-verify the inequality pointwise on the construction grid
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t ix = 0; ix < mz.u1_grid.xs.size(); ++ix)
    for (std::size_t iy = 0; iy < ny; ++iy)
      worst = std::min(worst, mz.u1_grid.at(ix, iy) - mz.alpha_min * mz.nu[iy]);
  mz.worst_violation = worst;
  return mz;
}

// --- bell probability / split kernel --------------------------------------

double bell_probability(double x, double y, const Minorization& mz) {
  if (!mz.in_c(x)) return 0.0;
  double nu_y = mz.nu_at(y);
  if (nu_y <= 0.0) return 0.0;
  double u1 = mz.u1(x, y);
  if (!(u1 > 0.0)) {
    throw numerical_error("bell_probability: resolvent density vanished where nu > 0");
  }
  double p = mz.alpha_min * nu_y / u1;
  if (p > 1.0) {
    mz.clamp_violations->fetch_add(1, std::memory_order_relaxed);
    return 1.0;
  }
  return p;
}

namespace {

// one draw from u1(x, .): exponential time, then the model transition
double sample_resolvent(const Model& model, double x, RngStream& rng, double euler_step) {
  double tau = rng.exponential();
  if (const auto* ou = std::get_if<OuModel>(&model)) {
    return ou->transition_mean(x, tau) + std::sqrt(ou->transition_var(tau)) * rng.normal();
  }
  models::Path p = models::sample_path(model, x, tau, euler_step, rng);
  return p.states.back();
}

}  // namespace

double split_kernel_sample(double x, double colour, const Minorization& mz, const Model& model,
                           RngStream& rng, double euler_step) {
  if (!(colour >= 0.0 && colour <= 1.0))
    throw validation_error("split kernel colour must lie in [0, 1]");
  if (!mz.in_c(x)) return sample_resolvent(model, x, rng, euler_step);
  if (colour <= mz.alpha_min) return mz.sample_nu(rng);
  // residual branch: propose from u1(x, .), accept with 1 - alpha nu(y)/u1(x, y);
  // mean acceptance is 1 - alpha, so exhausting the budget means a stall
  const long max_proposals = 100000;
  for (long i = 0; i < max_proposals; ++i) {
    double y = sample_resolvent(model, x, rng, euler_step);
    double accept = 1.0 - bell_probability(x, y, mz);
    if (rng.uniform() < accept) return y;
  }
  throw rejection_stall("split kernel residual branch: acceptance rate below 1e-5");
}

// --- colouring / schedule ---------------------------------------------------

SplitSkeleton colour_skeleton(const models::Skeleton& skel, const Minorization& mz,
                              RngStream& rng) {
  if (skel.jump_times.size() < 2)
    throw validation_error("colour_skeleton needs a skeleton with at least 2 jump times");
  SplitSkeleton ss;
  ss.jump_times = skel.jump_times;
  ss.states = skel.states;
  std::size_t n = skel.states.size();
  ss.colours.resize(n);
  ss.bells.assign(n, false);
  double alpha = mz.alpha_min;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mz.in_c(skel.states[i])) {
      ss.colours[i] = rng.uniform();
      continue;
    }
    ss.c_visit_indices.push_back(i);
    double p = (i + 1 < n) ? bell_probability(skel.states[i], skel.states[i + 1], mz)
                           : alpha;  // trailing visit: marginal bell rate
    bool bell = rng.uniform() < p;
    ss.bells[i] = bell;
    // realize the colour consistently with the bell indicator
    ss.colours[i] = bell ? alpha * rng.uniform() : alpha + (1.0 - alpha) * rng.uniform_pos();
  }
  return ss;
}

RegenerationSchedule regeneration_schedule(const SplitSkeleton& ss) {
  RegenerationSchedule rs;
  double r_last = 0.0;
  std::size_t n = ss.jump_times.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!ss.bells[i]) continue;
    double s = ss.jump_times[i];
    if (!(s > r_last)) continue;
    if (i + 1 >= n) break;  // trailing bell: no following jump, cycle discarded
    rs.s_times.push_back(s);
    rs.r_times.push_back(ss.jump_times[i + 1]);
    r_last = ss.jump_times[i + 1];
  }
  rs.complete_cycles = rs.r_times.size() >= 2 ? rs.r_times.size() - 1 : 0;
  return rs;
}

std::size_t counting_process(const RegenerationSchedule& rs, double t) {
  if (!(t >= 0.0)) throw std::domain_error("counting_process: t must be >= 0");
  return static_cast<std::size_t>(
      std::upper_bound(rs.r_times.begin(), rs.r_times.end(), t) - rs.r_times.begin());
}

}  // namespace regensim::splitting
