#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace regensim::stats {

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

inline double variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

inline double std_error_of_mean(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  return std::sqrt(variance(xs) / static_cast<double>(xs.size()));
}

inline double pearson_correlation(std::span<const double> xs, std::span<const double> ys) {
  std::size_t n = std::min(xs.size(), ys.size());
  if (n < 2) return 0.0;
  double mx = mean(xs.first(n)), my = mean(ys.first(n));
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t n_points = 0;
};

inline LinearFit least_squares(std::span<const double> xs, std::span<const double> ys) {
  LinearFit fit;
  std::size_t n = std::min(xs.size(), ys.size());
  fit.n_points = n;
  if (n < 2) return fit;
  double mx = mean(xs.first(n)), my = mean(ys.first(n));
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

// --- binomial ---

struct BinomialEstimate {
  double p_hat = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;  // 95% normal-approximation interval, clipped to [0,1]
  double ci_hi = 0.0;
};

inline BinomialEstimate binomial_estimate(std::size_t successes, std::size_t trials) {
  BinomialEstimate e;
  if (trials == 0) return e;
  double n = static_cast<double>(trials);
  e.p_hat = static_cast<double>(successes) / n;
  e.se = std::sqrt(std::max(e.p_hat * (1.0 - e.p_hat), 1.0 / n) / n);
  e.ci_lo = std::max(0.0, e.p_hat - 1.96 * e.se);
  e.ci_hi = std::min(1.0, e.p_hat + 1.96 * e.se);
  return e;
}

// --- Kolmogorov-Smirnov ---

// Asymptotic survival function of the KS statistic. The alternating series
// 2 sum (-1)^{k-1} exp(-2 k^2 l^2) converges fast for large lambda; for small
// lambda the Jacobi-transformed series for the CDF is used instead.
inline double ks_asymptotic_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    double y = std::exp(-M_PI * M_PI / (8.0 * lambda * lambda));
    double p = std::sqrt(2.0 * M_PI) / lambda * (y + std::pow(y, 9) + std::pow(y, 25));
    return std::clamp(1.0 - p, 0.0, 1.0);
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

// One-sample KS statistic of `samples` against a CDF callable.
inline double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double c = cdf(samples[i]);
    double lo = static_cast<double>(i) / n;
    double hi = static_cast<double>(i + 1) / n;
    d = std::max(d, std::max(c - lo, hi - c));
  }
  return d;
}

// p-value via Stephens' small-sample correction of the asymptotic law.
inline double ks_p_value(double d, std::size_t n) {
  double sn = std::sqrt(static_cast<double>(n));
  return ks_asymptotic_q(d * (sn + 0.12 + 0.11 / sn));
}

inline double ks_test_p(std::vector<double> samples, const std::function<double(double)>& cdf) {
  std::size_t n = samples.size();
  return ks_p_value(ks_statistic(std::move(samples), cdf), n);
}

// Two-sample KS statistic.
inline double ks_two_sample_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

// --- chi-square ---

// Regularized upper incomplete gamma Q(a, x) by series / continued fraction.
inline double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) return 1.0;
  if (x == 0.0) return 1.0;
  double gln = std::lgamma(a);
  if (x < a + 1.0) {
    // lower series, Q = 1 - P
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    double p = sum * std::exp(-x + a * std::log(x) - gln);
    return std::clamp(1.0 - p, 0.0, 1.0);
  }
  // Lentz continued fraction for Q
  double b = x + 1.0 - a;
  double c = 1.0 / 1e-300;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return std::clamp(std::exp(-x + a * std::log(x) - gln) * h, 0.0, 1.0);
}

inline double chi_square_p_value(double chi2, int dof) {
  if (dof <= 0) return 1.0;
  return gamma_q(0.5 * dof, 0.5 * chi2);
}

// Chi-square goodness of fit of nonnegative-integer counts against Geometric(alpha)
// on {0,1,2,...}; bins with expected count below `min_expected` are pooled into the tail.
inline double geometric_chi_square_p(const std::vector<long>& counts_by_value, double alpha,
                                     double min_expected = 5.0) {
  long total = 0;
  for (long c : counts_by_value) total += c;
  if (total == 0 || alpha <= 0.0 || alpha >= 1.0) return 1.0;
  double n = static_cast<double>(total);
  std::vector<double> expected;
  std::vector<double> observed;
  double tail_prob = 1.0;
  for (std::size_t k = 0; k < counts_by_value.size(); ++k) {
    double pk = alpha * std::pow(1.0 - alpha, static_cast<double>(k));
    if (pk * n < min_expected) break;
    expected.push_back(pk * n);
    observed.push_back(static_cast<double>(counts_by_value[k]));
    tail_prob -= pk;
  }
  if (expected.empty()) return 1.0;
  // pool the remainder
  double tail_obs = n;
  for (double o : observed) tail_obs -= o;
  if (tail_prob * n >= 1.0) {
    expected.push_back(std::max(tail_prob, 0.0) * n);
    observed.push_back(tail_obs);
  }
  double chi2 = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    double e = std::max(expected[i], 1e-12);
    double diff = observed[i] - e;
    chi2 += diff * diff / e;
  }
  return chi_square_p_value(chi2, static_cast<int>(expected.size()) - 1);
}

// Leave-one-out jackknife standard error of the sample mean of xs.
inline double jackknife_se_of_mean(std::span<const double> xs) {
  std::size_t n = xs.size();
  if (n < 2) return 0.0;
  double total = 0.0;
  for (double x : xs) total += x;
  double nn = static_cast<double>(n);
  double jbar = 0.0;
  std::vector<double> loo(n);
  for (std::size_t i = 0; i < n; ++i) {
    loo[i] = (total - xs[i]) / (nn - 1.0);
    jbar += loo[i];
  }
  jbar /= nn;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += (loo[i] - jbar) * (loo[i] - jbar);
  return std::sqrt((nn - 1.0) / nn * s);
}

}  // namespace regensim::stats
