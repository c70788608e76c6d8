#include "regensim/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "regensim/parallel.hpp"

namespace regensim::concentration {

double fn_bound_explicit_raw(const FnParams& fp) {
  fp.validate();
  double r = fp.r();
  double n = static_cast<double>(fp.n);
  // first term: 4 (1 + lambda^2 / (3 n r sigma^2))^{-r/2}
  double log_t1 = std::log(4.0) - 0.5 * r * std::log1p(fp.lambda * fp.lambda / (3.0 * n * r * fp.sigma2));
  // second term: (4n/lambda) m^{1/p} (2^p m (lambda/r)^{-p})^{1-1/p} / (1-1/p)
  double om = 1.0 - 1.0 / fp.p;
  double log_h = fp.p * std::log(2.0) + std::log(fp.m_p) - fp.p * std::log(fp.lambda / r);
  double log_t2 = std::log(4.0 * n) - std::log(fp.lambda) + std::log(fp.m_p) / fp.p + om * log_h -
                  std::log(om);
  // add in log space without overflow
  double lo = std::min(log_t1, log_t2), hi = std::max(log_t1, log_t2);
  double log_sum = hi + std::log1p(std::exp(lo - hi));
  return std::exp(log_sum);
}

double fn_bound_explicit(const FnParams& fp) { return std::min(1.0, fn_bound_explicit_raw(fp)); }

double fn_statement_bound(const FnParams& fp, double c_p) {
  fp.validate();
  if (!(c_p >= 0.0)) throw validation_error("fn statement constant must be >= 0");
  double n = static_cast<double>(fp.n);
  double r = fp.r();
  double gaussian_term = std::pow(fp.sigma2, 0.5 * r) * std::pow(fp.lambda, -r) * std::pow(n, fp.p - 1.0);
  double tail_term = fp.m_p * n * std::pow(fp.lambda, -fp.p);
  return c_p * (gaussian_term + tail_term);
}

double TwoDepSpec::variance() const {
  double v1 = innovation == Innovation::student_t
                  ? static_cast<double>(dof) / (static_cast<double>(dof) - 2.0)
                  : 1.0 / 3.0;
  return weight_sq_sum() * v1;
}

void TwoDepSpec::simulate(std::size_t n, RngStream& rng, std::vector<double>& out) const {
  out.resize(n);
  // innovations z_1 .. z_{n+2}; both laws are already centred
  double z0, z1, z2;
  auto draw = [&]() {
    return innovation == Innovation::student_t ? rng.student_t(dof) : 2.0 * rng.uniform() - 1.0;
  };
  z0 = draw();
  z1 = draw();
  for (std::size_t k = 0; k < n; ++k) {
    z2 = draw();
    out[k] = w0 * z0 + w1 * z1 + w2 * z2;
    z0 = z1;
    z1 = z2;
  }
}

FnEmpirical fn_empirical(const TwoDepSpec& spec, std::size_t n,
                         const std::vector<double>& lambda_grid, std::size_t replicas,
                         std::uint64_t seed, double p, unsigned threads) {
  spec.validate(p);
  if (lambda_grid.empty()) throw validation_error("fn.lambda grid must be nonempty");
  if (replicas < 1) throw validation_error("fn replicas must be >= 1");
  std::vector<double> lambdas = lambda_grid;
  std::sort(lambdas.begin(), lambdas.end());

  std::vector<std::size_t> counts(lambdas.size(), 0);
  std::mutex merge_mutex;
  parallel_for_index(replicas, threads, [&](std::size_t i) {
    RngStream rng(seed, i);
    std::vector<double> xs;
    spec.simulate(n, rng, xs);
    double s = 0.0;
    double max_abs = 0.0;
    for (double x : xs) {
      s += x;
      max_abs = std::max(max_abs, std::abs(s));
    }
    std::vector<std::size_t> local(lambdas.size(), 0);
    for (std::size_t li = 0; li < lambdas.size(); ++li)
      if (max_abs >= 4.0 * lambdas[li]) ++local[li];
    std::lock_guard<std::mutex> lock(merge_mutex);
    for (std::size_t li = 0; li < lambdas.size(); ++li) counts[li] += local[li];
  });

  FnEmpirical result;
  result.lambdas = lambdas;
  result.replicas = replicas;
  double sigma2 = spec.variance();
  // for p = 2 the p-th absolute moment is the variance; other orders would
  // need a moment table for the innovation law
  double m_p = p == 2.0 ? sigma2 : std::numeric_limits<double>::quiet_NaN();
  for (std::size_t li = 0; li < lambdas.size(); ++li) {
    result.exceedance.push_back(stats::binomial_estimate(counts[li], replicas));
    if (std::isfinite(m_p)) {
      FnParams fp{n, lambdas[li], p, sigma2, m_p};
      result.bound_explicit.push_back(fn_bound_explicit(fp));
    } else {
      result.bound_explicit.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return result;
}

}  // namespace regensim::concentration
