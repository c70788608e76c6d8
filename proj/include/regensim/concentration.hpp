#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "regensim/errors.hpp"
#include "regensim/rng.hpp"
#include "regensim/stats.hpp"

namespace regensim::concentration {

// Inputs of the two-dependent Fuk-Nagaev bound for P(sup_{k<=n} |S_k| >= 4 lambda).
struct FnParams {
  std::size_t n = 100;
  double lambda = 10.0;
  double p = 2.0;        // moment order, >= 2
  double sigma2 = 1.0;   // Var(X_1)
  double m_p = 1.0;      // E |X_1|^p

  void validate() const {
    if (n < 1) throw validation_error("fn.n must be >= 1");
    if (!(lambda > 0.0)) throw validation_error("fn.lambda must be > 0");
    if (!(p >= 2.0)) throw validation_error("fn.p must be >= 2");
    if (!(sigma2 > 0.0)) throw validation_error("fn.sigma2 must be > 0");
    if (!(m_p > 0.0)) throw validation_error("fn.m_p must be > 0");
  }
  double r() const { return 2.0 * (p - 1.0); }
};

// Fully explicit two-term bound assembled from the proof chain: the mixing
// bound alpha^{-1}(u) <= 2 on [0, 1/2), the quantile bound Q(u) <= m_p^{1/p}
// u^{-1/p}, H(u) <= 2^p m_p u^{-p}, s_n^2 <= 3 n sigma^2 and r = 2(p-1):
//
//   B = 4 (1 + lambda^2 / (3 n r sigma^2))^{-r/2}
//     + (4 n / lambda) m_p^{1/p} (2^p m_p (lambda/r)^{-p})^{1-1/p} / (1 - 1/p)
//
// clipped to 1. No abstract C(p) appears. Evaluated in log space so extreme
// inputs neither overflow nor lose the monotonicity in lambda.
double fn_bound_explicit(const FnParams& fp);

// Same bound before clipping (golden-value tests pin this number).
double fn_bound_explicit_raw(const FnParams& fp);

// The two-term statement-level bound C(p) (sigma^{2(p-1)} lambda^{-2(p-1)}
// n^{p-1} + m_p n lambda^{-p}) with a caller-supplied constant; used only
// for rate-shape comparisons.
double fn_statement_bound(const FnParams& fp, double c_p);

// Two-dependent moving average X_k = w0 z_k + w1 z_{k+1} + w2 z_{k+2} with
// centred i.i.d. innovations, Student-t(dof) or uniform on [-1, 1].
struct TwoDepSpec {
  enum class Innovation { student_t, uniform };
  Innovation innovation = Innovation::student_t;
  int dof = 5;
  double w0 = 1.0, w1 = 0.5, w2 = 0.25;

  void validate(double p) const {
    if (innovation == Innovation::student_t && !(static_cast<double>(dof) > p))
      throw validation_error("two-dependent innovations need dof > p for E|X|^p < inf");
    if (dof < 1) throw validation_error("fn.dof must be >= 1");
  }
  double weight_sq_sum() const { return w0 * w0 + w1 * w1 + w2 * w2; }
  // Var(X_1); Var(t_dof) = dof/(dof-2), Var(U[-1,1]) = 1/3
  double variance() const;
  // one replica of (X_1..X_n); out must have size n
  void simulate(std::size_t n, RngStream& rng, std::vector<double>& out) const;
};

struct FnEmpirical {
  std::vector<double> lambdas;
  std::vector<stats::BinomialEstimate> exceedance;  // P(sup_k |S_k| >= 4 lambda)
  std::vector<double> bound_explicit;               // fn_bound_explicit at each lambda
  std::size_t replicas = 0;
};

FnEmpirical fn_empirical(const TwoDepSpec& spec, std::size_t n,
                         const std::vector<double>& lambda_grid, std::size_t replicas,
                         std::uint64_t seed, double p, unsigned threads = 1);

}  // namespace regensim::concentration
