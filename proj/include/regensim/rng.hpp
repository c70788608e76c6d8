#pragma once

#include <cmath>
#include <cstdint>

namespace regensim {

// Deterministic random stream. Every replica owns one, derived from
// (base seed, stream index), so results are reproducible regardless of
// the number of worker threads. Distributions are hand-rolled: the standard
// library's are implementation-defined, which would break byte-identical
// output across toolchains.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    // splitmix64 warm-up decorrelates nearby (seed, stream) pairs.
    state_ = splitmix(s);
    state_ ^= splitmix(state_ + stream);
    inc_ = splitmix(state_ ^ seed) | 1ULL;
    for (int i = 0; i < 4; ++i) next_u64();
  }

  std::uint64_t next_u64() {
    // xorshift128-ish over (state_, inc_): simple, fast, full 64-bit output.
    std::uint64_t x = state_;
    x ^= x << 13;
    x ^= x >> 7;
    x ^= x << 17;
    state_ = x + (inc_ += 0x9e3779b97f4a7c15ULL);
    return splitmix(state_);
  }

  // U[0,1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // U(0,1]
  double uniform_pos() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

  // exp(1)
  double exponential() { return -std::log(uniform_pos()); }

  // N(0,1) by Marsaglia's polar method (no trig in the hot loop).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

  // Poisson(mean) by Knuth's product method; intended for small means
  // (per-step jump counts), where it is exact and cheap.
  int poisson(double mean) {
    double limit = std::exp(-mean);
    double prod = uniform();
    int k = 0;
    while (prod > limit) {
      prod *= uniform();
      ++k;
    }
    return k;
  }

  // Student-t with integer dof: Z0 * sqrt(dof / sum_{i<dof} Z_i^2).
  double student_t(int dof) {
    double z = normal();
    double chi2 = 0.0;
    for (int i = 0; i < dof; ++i) {
      double g = normal();
      chi2 += g * g;
    }
    return z * std::sqrt(static_cast<double>(dof) / chi2);
  }

 private:
  static std::uint64_t splitmix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 1;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace regensim
