#include "regensim/rates.hpp"

#include <cmath>

namespace regensim::rates {

double h_phi(const PhiSpec& spec, double u) {
  spec.validate();
  if (!(u >= 1.0)) throw std::domain_error("h_phi: u must be >= 1");
  double q = 1.0 - spec.phi_exponent;
  // expm1/log1p form keeps full precision for u near 1.
  return std::expm1(q * std::log(u)) / (spec.c * q);
}

double h_phi_inv(const PhiSpec& spec, double s) {
  spec.validate();
  if (!(s >= 0.0)) throw std::domain_error("h_phi_inv: s must be >= 0");
  double q = 1.0 - spec.phi_exponent;
  return std::exp(std::log1p(spec.c * q * s) / q);
}

double rate(const RatePoly& rp, double s) {
  if (!(s >= 0.0)) throw std::domain_error("rate: s must be >= 0");
  if (rp.kappa == 0.0) return rp.c;
  double q = 1.0 - rp.phi_exponent;
  return rp.c * std::exp(rp.kappa * std::log1p(rp.c * q * s));
}

double rate_integral(const RatePoly& rp, double t) {
  if (!(t >= 0.0)) throw std::domain_error("rate_integral: t must be >= 0");
  // Antiderivative of c (1 + c q s)^kappa is (1 + c q s)^{kappa+1} / (q (kappa+1))
  // and q (kappa+1) = 1, so the integral telescopes to H^{-1}(t) - 1.
  double q = 1.0 - rp.phi_exponent;
  return std::expm1(std::log1p(rp.c * q * t) / q);
}

}  // namespace regensim::rates
