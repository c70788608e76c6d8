#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "regensim/models.hpp"
#include "regensim/rates.hpp"

namespace regensim::cli {

// Configuration is a flat `key = value` document ('#' starts a comment,
// values may be comma-separated lists). Keys are grouped in dotted blocks;
// unknown keys are rejected at parse time with the offending line.

struct SplitConfig {
  double c_radius = 1.0;
  double window = 8.0;
  std::size_t grid = 4096;  // window grid size; the C grid is fixed at 64
  double alpha_cap = 0.99;
  bool present = false;
};

struct LyapunovConfig {
  double m_power = 2.0;
  double rho0 = 1.0;
};

struct DriftConfig {
  double r_min = 1.0;
  double r_max = 100.0;
  std::size_t grid = 200;
  bool present = false;
};

struct SimulateConfig {
  double horizon = 10.0;
  std::size_t stride = 1;  // emit every stride-th grid point
  bool present = false;
};

struct RegenConfig {
  double horizon = 1000.0;
  std::string f = "indicator_neg";
  double f_cap = 25.0;
  double moment_p = 2.0;
  std::optional<double> expect_mu;
  double expect_mu_tol = 0.01;
  // optional first-regeneration moment envelope section
  std::vector<double> envelope_x;
  std::size_t envelope_replicas = 2000;
  double envelope_horizon = 256.0;
  double envelope_assert_r2 = 0.9;
  // optional delayed-hitting bound section (needs the drift block for b_hat)
  std::vector<double> hitting_x;
  double hitting_delta = 0.5;
  std::size_t hitting_replicas = 10000;
  double hitting_v_scale = 1.0;
  double hitting_b_scale = 1.0;
  std::string hitting_expect = "pass";  // "fail" for falsification controls
  bool present = false;
};

struct DeviationConfig {
  std::string statistic = "time_average";  // or "counting"
  double epsilon = 0.1;
  std::vector<double> t_grid;
  std::string f = "indicator_neg";
  double f_cap = 25.0;
  std::string center = "analytic";  // "analytic" | "calibrate" | numeric literal
  double center_value = 0.0;
  std::size_t calib_replicas = 64;
  double calib_factor = 10.0;
  double assert_slope_max = -0.6;
  bool present = false;
};

struct FnConfig {
  double p = 2.0;
  std::size_t n = 1000;
  int dof = 5;
  std::string innovation = "student_t";
  double w0 = 1.0, w1 = 0.5, w2 = 0.25;
  std::vector<double> lambda;
  bool present = false;
};

struct RunConfig {
  std::optional<models::Model> model;
  std::optional<rates::PhiSpec> phi;
  LyapunovConfig lyapunov;
  SplitConfig split;
  DriftConfig drift;
  SimulateConfig simulate;
  RegenConfig regen;
  DeviationConfig deviation;
  FnConfig fn;
  double euler_step = 1e-3;
  double x0 = 0.0;
  std::uint64_t seed = 0;
  std::size_t replicas = 1000;
};

// Parses and validates; throws parse_error (with line) on malformed input and
// validation_error naming the offending key otherwise.
RunConfig parse_config(const std::string& text);
RunConfig load_config_file(const std::string& path);

}  // namespace regensim::cli
