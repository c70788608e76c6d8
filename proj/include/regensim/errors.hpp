#pragma once

#include <stdexcept>
#include <string>

namespace regensim {

// Bad user input: malformed config, out-of-range parameter. CLI exit code 2.
class validation_error : public std::runtime_error {
 public:
  explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

class parse_error : public validation_error {
 public:
  parse_error(int line, const std::string& what)
      : validation_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Numerical failure at runtime: divergence, degenerate minorization,
// non-convergent quadrature, stalled rejection sampler. CLI exit code 3.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

class simulation_diverged : public numerical_error {
 public:
  simulation_diverged(double t, const std::string& what)
      : numerical_error(what + " (t=" + std::to_string(t) + ")"), time_(t) {}
  double time() const { return time_; }

 private:
  double time_;
};

class unsupported_model : public numerical_error {
 public:
  explicit unsupported_model(const std::string& what) : numerical_error(what) {}
};

class degenerate_minorization : public numerical_error {
 public:
  explicit degenerate_minorization(const std::string& what) : numerical_error(what) {}
};

class quadrature_nonconvergence : public numerical_error {
 public:
  explicit quadrature_nonconvergence(const std::string& what) : numerical_error(what) {}
};

class rejection_stall : public numerical_error {
 public:
  explicit rejection_stall(const std::string& what) : numerical_error(what) {}
};

class no_cycles : public numerical_error {
 public:
  explicit no_cycles(const std::string& what) : numerical_error(what) {}
};

class horizon_exhausted : public numerical_error {
 public:
  explicit horizon_exhausted(const std::string& what) : numerical_error(what) {}
};

}  // namespace regensim
