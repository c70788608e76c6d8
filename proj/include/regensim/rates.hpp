#pragma once

#include <cmath>

#include "regensim/errors.hpp"

namespace regensim::rates {

// Concave drift function Phi(v) = c * v^phi on [1, inf), with c > 0 and
// 0 <= phi < 1. This is the power family whose induced rate function is
// polynomial of order kappa = phi / (1 - phi).
struct PhiSpec {
  double c = 1.0;
  double phi_exponent = 0.5;

  void validate() const {
    if (!(c > 0.0)) throw validation_error("phi.c must be > 0");
    if (!(phi_exponent >= 0.0 && phi_exponent < 1.0))
      throw validation_error("phi.exponent must lie in [0, 1)");
  }

  double operator()(double v) const { return c * std::pow(v, phi_exponent); }
  double derivative(double v) const {
    if (phi_exponent == 0.0) return 0.0;
    return c * phi_exponent * std::pow(v, phi_exponent - 1.0);
  }
};

// H(u) = int_1^u ds / Phi(s) = (u^{1-phi} - 1) / (c (1-phi)), increasing,
// H(1) = 0. The phi = 0 case reduces to (u - 1) / c with no special handling.
double h_phi(const PhiSpec& spec, double u);

// Inverse of h_phi: (1 + c (1-phi) s)^{1/(1-phi)} >= 1 for s >= 0.
double h_phi_inv(const PhiSpec& spec, double s);

// Rate function r = Phi o H^{-1} and its closed-form integral int_0^t r.
// r(s) = c (1 + c (1-phi) s)^kappa; int_0^t r(s) ds = H^{-1}(t) - 1.
struct RatePoly {
  double c = 1.0;
  double phi_exponent = 0.5;
  double kappa = 1.0;  // polynomial order phi / (1 - phi)

  static RatePoly from(const PhiSpec& spec) {
    spec.validate();
    return RatePoly{spec.c, spec.phi_exponent,
                    spec.phi_exponent / (1.0 - spec.phi_exponent)};
  }
  PhiSpec phi() const { return PhiSpec{c, phi_exponent}; }
};

double rate(const RatePoly& rp, double s);
double rate_integral(const RatePoly& rp, double t);

}  // namespace regensim::rates
