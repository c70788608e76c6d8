#include "regensim/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "regensim/concentration.hpp"
#include "regensim/estimators.hpp"
#include "regensim/json_schema.hpp"
#include "regensim/models.hpp"
#include "regensim/reports.hpp"
#include "regensim/splitting.hpp"

namespace regensim::cli {

namespace {

using nlohmann::json;

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void emit_summary(const std::string& out_dir, const std::string& subcommand, json summary) {
  summary["subcommand"] = subcommand;
  auto violations = jsonschema::validate(jsonschema::summary_schema(subcommand), summary);
  if (!violations.empty()) {
    std::string msg = "summary schema violation:";
    for (const auto& v : violations) msg += " " + v;
    throw numerical_error(msg);
  }
  reports::write_json_file(out_dir + "/" + subcommand + "_summary.json", summary);
}

// The tabular report: CSV by default, a JSON array of rows when --format json.
class Table {
 public:
  Table(const RunOptions& opt, const std::string& out_dir, const std::string& name,
        std::vector<std::string> columns)
      : columns_(std::move(columns)), json_mode_(opt.format == "json") {
    path_ = out_dir + "/" + name + (json_mode_ ? ".json" : ".csv");
    if (!json_mode_) csv_.emplace(path_, columns_);
  }
  void row(std::initializer_list<double> values) {
    if (json_mode_) {
      json r;
      std::size_t i = 0;
      for (double v : values) r[columns_[i++]] = nullable(v);
      rows_.push_back(std::move(r));
    } else {
      csv_->row(std::vector<double>(values));
    }
  }
  void close() {
    if (json_mode_)
      reports::write_json_file(path_, rows_);
    else
      csv_->close();
  }

 private:
  std::vector<std::string> columns_;
  bool json_mode_ = false;
  std::string path_;
  std::optional<reports::CsvWriter> csv_;
  json rows_ = json::array();
};

const models::Model& require_model(const RunConfig& cfg) {
  if (!cfg.model) throw validation_error("missing model block (model.kind = ...)");
  return *cfg.model;
}

rates::PhiSpec require_phi(const RunConfig& cfg) {
  if (!cfg.phi) throw validation_error("missing phi block (phi.c, phi.exponent)");
  return *cfg.phi;
}

splitting::Minorization build_minorization(const RunConfig& cfg) {
  if (!cfg.split.present)
    throw validation_error("missing split block (split.c_radius, split.window)");
  return splitting::compute_minorization(require_model(cfg), cfg.split.c_radius,
                                         cfg.split.window, 64, cfg.split.grid,
                                         cfg.split.alpha_cap);
}

// --- subcommands ----------------------------------------------------------

int run_drift_check(const RunConfig& cfg, const RunOptions& opt) {
  const auto& model = require_model(cfg);
  rates::PhiSpec phi = require_phi(cfg);
  if (!cfg.drift.present) throw validation_error("missing drift block (drift.r_min, drift.r_max)");
  models::LyapunovV V{cfg.lyapunov.m_power, cfg.lyapunov.rho0};
  models::DriftReport report = models::verify_drift(model, phi, V, cfg.drift.r_min,
                                                    cfg.drift.r_max,
                                                    static_cast<int>(cfg.drift.grid));
  Table table(opt, opt.out_dir, "drift-check", {"x", "AV", "phiV", "margin"});
  for (std::size_t i = 0; i < report.radii.size(); ++i)
    table.row({report.radii[i], report.av[i], report.phiv[i], report.margin[i]});
  table.close();
  json summary = {{"seed", cfg.seed},
                  {"model", models::model_kind(model)},
                  {"m0", nullable(report.m0)},
                  {"b_hat", report.b_hat},
                  {"worst_margin", report.worst_margin},
                  {"n_grid", report.radii.size()}};
  emit_summary(opt.out_dir, "drift-check", summary);
  if (opt.assert_mode && !std::isfinite(report.m0)) return kExitAssertFailed;
  return kExitOk;
}

int run_minorize(const RunConfig& cfg, const RunOptions& opt) {
  splitting::Minorization mz = build_minorization(cfg);
  Table table(opt, opt.out_dir, "minorize", {"y", "nu", "inf_u1"});
  double hy = (mz.window_hi - mz.window_lo) / static_cast<double>(mz.nu.size() - 1);
  for (std::size_t i = 0; i < mz.nu.size(); ++i) {
    double y = mz.window_lo + hy * static_cast<double>(i);
    table.row({y, mz.nu[i], mz.nu[i] * mz.alpha_raw});
  }
  table.close();
  json summary = {{"seed", cfg.seed},
                  {"alpha", mz.alpha_min},
                  {"alpha_raw", mz.alpha_raw},
                  {"c_radius", mz.c_radius},
                  {"window", json::array({mz.window_lo, mz.window_hi})},
                  {"nu_grid", mz.nu},
                  {"worst_violation", mz.worst_violation},
                  {"clamp_violations", mz.clamp_violations->load()}};
  emit_summary(opt.out_dir, "minorize", summary);
  if (opt.assert_mode && mz.worst_violation < -1e-10) return kExitAssertFailed;
  return kExitOk;
}

int run_simulate(const RunConfig& cfg, const RunOptions& opt) {
  const auto& model = require_model(cfg);
  if (!cfg.simulate.present) throw validation_error("missing simulate block (simulate.horizon)");
  RngStream rng(cfg.seed, 0);
  models::Path path = models::sample_path(model, cfg.x0, cfg.simulate.horizon, cfg.euler_step, rng);
  Table table(opt, opt.out_dir, "simulate", {"t", "x"});
  for (std::size_t k = 0; k < path.states.size(); k += cfg.simulate.stride)
    table.row({path.time_at(k), path.states[k]});
  table.close();
  json summary = {{"seed", cfg.seed},
                  {"model", models::model_kind(model)},
                  {"horizon", cfg.simulate.horizon},
                  {"step", cfg.euler_step},
                  {"n_steps", path.states.size() - 1},
                  {"final_state", path.states.back()}};
  emit_summary(opt.out_dir, "simulate", summary);
  return kExitOk;
}

int run_regen_stats(const RunConfig& cfg, const RunOptions& opt) {
  const auto& model = require_model(cfg);
  rates::PhiSpec phi = require_phi(cfg);
  if (!cfg.regen.present) throw validation_error("missing regen block (regen.horizon, regen.f)");
  splitting::Minorization mz = build_minorization(cfg);
  rates::RatePoly rate = rates::RatePoly::from(phi);
  estimators::BoundedFn f = estimators::BoundedFn::parse(cfg.regen.f, cfg.regen.f_cap);

  estimators::HarvestOptions hopt;
  hopt.horizon = cfg.regen.horizon;
  hopt.replicas = cfg.replicas;
  hopt.seed = cfg.seed;
  hopt.step = cfg.euler_step;
  hopt.x0 = cfg.x0;
  hopt.threads = opt.threads;
  estimators::CycleSample cs = estimators::harvest_cycles(model, mz, f, rate, hopt);
  estimators::MuEstimate mu = estimators::estimate_mu(cs);
  double moment_se = 0.0;
  double moment = estimators::cycle_moment(cs, cfg.regen.moment_p, &moment_se);

  bool ok = true;
  Table table(opt, opt.out_dir, "regen-stats", {"stat", "value", "se"});
  // stat ids: 0 ell, 1 mu_f, 2 cycle moment, 3.. envelope points, 4.. hitting points
  table.row({0.0, mu.ell, mu.ell_se});
  table.row({1.0, mu.mu_f, mu.mu_f_se});
  table.row({2.0, moment, moment_se});

  json summary = {{"seed", cfg.seed},
                  {"ell", mu.ell},
                  {"ell_se", mu.ell_se},
                  {"mu_f", mu.mu_f},
                  {"mu_f_se", mu.mu_f_se},
                  {"p_order", rate.kappa + 1.0},
                  {"replicas", cfg.replicas},
                  {"n_cycles", mu.n_cycles},
                  {"f", f.name()},
                  {"cycle_moment_p", cfg.regen.moment_p},
                  {"cycle_moment", moment},
                  {"cycle_moment_se", moment_se},
                  {"slope", nullptr},
                  {"envelope_slope", nullptr},
                  {"envelope_r2", nullptr},
                  {"hitting_all_pass", nullptr}};

  if (!cfg.regen.envelope_x.empty()) {
    models::LyapunovV V{cfg.lyapunov.m_power, cfg.lyapunov.rho0};
    estimators::EnvelopeOptions eopt;
    eopt.replicas = cfg.regen.envelope_replicas;
    eopt.seed = cfg.seed;
    eopt.step = cfg.euler_step;
    eopt.base_horizon = cfg.regen.envelope_horizon;
    eopt.threads = opt.threads;
    estimators::EnvelopeReport env =
        estimators::regen_moment_envelope(model, mz, rate, cfg.regen.envelope_x, V, eopt);
    for (const auto& pt : env.points) table.row({3.0, pt.estimate, pt.se});
    summary["slope"] = env.fit.slope;
    summary["envelope_slope"] = env.fit.slope;
    summary["envelope_r2"] = env.fit.r_squared;
    if (opt.assert_mode &&
        !(env.fit.r_squared > cfg.regen.envelope_assert_r2 && env.fit.slope > 0.0))
      ok = false;
  }

  if (!cfg.regen.hitting_x.empty()) {
    if (!cfg.drift.present)
      throw validation_error("hitting check needs the drift block for b_hat");
    models::LyapunovV V{cfg.lyapunov.m_power, cfg.lyapunov.rho0};
    models::DriftReport drift = models::verify_drift(model, phi, V, cfg.drift.r_min,
                                                     cfg.drift.r_max,
                                                     static_cast<int>(cfg.drift.grid));
    if (!std::isfinite(drift.m0))
      throw numerical_error("hitting check: no radius with nonnegative drift margin");
    estimators::HittingOptions hit;
    hit.replicas = cfg.regen.hitting_replicas;
    hit.seed = cfg.seed;
    hit.step = cfg.euler_step;
    hit.threads = opt.threads;
    hit.v_scale = cfg.regen.hitting_v_scale;
    hit.b_scale = cfg.regen.hitting_b_scale;
    auto checks = estimators::hitting_moment_check(model, rate, drift.m0, cfg.regen.hitting_delta,
                                                   cfg.regen.hitting_x, V, phi, drift.b_hat, hit);
    bool all_pass = true;
    for (const auto& c : checks) {
      table.row({4.0, c.estimate, c.se});
      all_pass = all_pass && c.pass;
    }
    summary["hitting_all_pass"] = all_pass;
    bool expect_pass = cfg.regen.hitting_expect == "pass";
    if (opt.assert_mode && all_pass != expect_pass) ok = false;
  }
  table.close();

  if (opt.assert_mode && cfg.regen.expect_mu &&
      std::abs(mu.mu_f - *cfg.regen.expect_mu) > cfg.regen.expect_mu_tol)
    ok = false;
  emit_summary(opt.out_dir, "regen-stats", summary);
  return ok ? kExitOk : kExitAssertFailed;
}

int run_deviation(const RunConfig& cfg, const RunOptions& opt) {
  const auto& model = require_model(cfg);
  if (!cfg.deviation.present)
    throw validation_error("missing deviation block (deviation.epsilon, deviation.t_grid)");
  if (cfg.deviation.t_grid.empty()) throw validation_error("deviation.t_grid must be nonempty");

  estimators::DeviationOptions dopt;
  dopt.replicas = cfg.replicas;
  dopt.seed = cfg.seed;
  dopt.step = cfg.euler_step;
  dopt.x0 = cfg.x0;
  dopt.threads = opt.threads;
  dopt.calib_replicas = cfg.deviation.calib_replicas;
  dopt.calib_horizon_factor = cfg.deviation.calib_factor;
  if (cfg.phi) dopt.p_order = 1.0 / (1.0 - cfg.phi->phi_exponent);

  estimators::DeviationReport report;
  bool counting = cfg.deviation.statistic == "counting";
  if (counting) {
    splitting::Minorization mz = build_minorization(cfg);
    if (cfg.deviation.center == "value") {
      dopt.center_truth = cfg.deviation.center_value;
    } else if (cfg.deviation.center == "analytic") {
      dopt.center_truth = estimators::analytic_ell(model, mz);  // calibrates when null
    }
    report = estimators::nt_deviation(model, mz, cfg.deviation.epsilon, cfg.deviation.t_grid, dopt);
  } else {
    estimators::BoundedFn f = estimators::BoundedFn::parse(cfg.deviation.f, cfg.deviation.f_cap);
    if (cfg.deviation.center == "value") {
      dopt.center_truth = cfg.deviation.center_value;
    } else if (cfg.deviation.center == "analytic") {
      dopt.center_truth = estimators::analytic_mu(model, f);
    }
    report =
        estimators::deviation_probability(model, f, cfg.deviation.epsilon, cfg.deviation.t_grid, dopt);
  }

  Table table(opt, opt.out_dir, "deviation", {"t", "epsilon", "p_hat", "ci_lo", "ci_hi"});
  for (std::size_t i = 0; i < report.t_grid.size(); ++i) {
    const auto& pe = report.probabilities[i];
    table.row({report.t_grid[i], report.epsilon, pe.p_hat, pe.ci_lo, pe.ci_hi});
  }
  table.close();

  json summary = {{"seed", cfg.seed},
                  {"ell", counting ? nullable(report.center) : json(nullptr)},
                  {"mu_f", counting ? json(nullptr) : nullable(report.center)},
                  {"slope", nullable(report.fitted_slope)},
                  {"p_order", report.p_order},
                  {"replicas", report.replicas},
                  {"epsilon", report.epsilon},
                  {"statistic", cfg.deviation.statistic},
                  {"center_calibrated", report.center_calibrated},
                  {"reliable_points", report.reliable_points}};
  emit_summary(opt.out_dir, "deviation", summary);

  if (opt.assert_mode) {
    if (!(report.reliable_points >= 2) || !(report.fitted_slope <= cfg.deviation.assert_slope_max))
      return kExitAssertFailed;
  }
  return kExitOk;
}

int run_fuknagaev(const RunConfig& cfg, const RunOptions& opt) {
  if (!cfg.fn.present) throw validation_error("missing fn block (fn.p, fn.n, fn.lambda)");
  if (cfg.fn.lambda.empty()) throw validation_error("fn.lambda must be nonempty");
  concentration::TwoDepSpec spec;
  spec.innovation = cfg.fn.innovation == "uniform"
                        ? concentration::TwoDepSpec::Innovation::uniform
                        : concentration::TwoDepSpec::Innovation::student_t;
  spec.dof = cfg.fn.dof;
  spec.w0 = cfg.fn.w0;
  spec.w1 = cfg.fn.w1;
  spec.w2 = cfg.fn.w2;
  concentration::FnEmpirical emp = concentration::fn_empirical(
      spec, cfg.fn.n, cfg.fn.lambda, cfg.replicas, cfg.seed, cfg.fn.p, opt.threads);

  Table table(opt, opt.out_dir, "fuknagaev", {"lambda", "empirical", "ci_hi", "bound_explicit"});
  bool dominated = true;
  double worst_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < emp.lambdas.size(); ++i) {
    const auto& pe = emp.exceedance[i];
    double bound = emp.bound_explicit[i];
    table.row({emp.lambdas[i], pe.p_hat, pe.ci_hi, bound});
    if (std::isfinite(bound)) {
      double gap = bound - (pe.p_hat + 3.0 * pe.se);
      worst_gap = std::min(worst_gap, gap);
      if (gap < 0.0) dominated = false;
    }
  }
  table.close();
  json summary = {{"seed", cfg.seed},        {"p", cfg.fn.p},
                  {"n", cfg.fn.n},           {"replicas", cfg.replicas},
                  {"domination_pass", dominated}, {"worst_gap", worst_gap}};
  emit_summary(opt.out_dir, "fuknagaev", summary);
  return (opt.assert_mode && !dominated) ? kExitAssertFailed : kExitOk;
}

}  // namespace

int run(const std::string& subcommand, RunConfig cfg, const RunOptions& opt) {
  // precedence: flag > environment > config
  if (opt.seed_env) cfg.seed = *opt.seed_env;
  if (opt.seed_override) cfg.seed = *opt.seed_override;
  if (opt.replicas_override) cfg.replicas = *opt.replicas_override;
  if (opt.format != "csv" && opt.format != "json")
    throw validation_error("--format must be csv or json");
  std::filesystem::create_directories(opt.out_dir);

  if (subcommand == "drift-check") return run_drift_check(cfg, opt);
  if (subcommand == "minorize") return run_minorize(cfg, opt);
  if (subcommand == "simulate") return run_simulate(cfg, opt);
  if (subcommand == "regen-stats") return run_regen_stats(cfg, opt);
  if (subcommand == "deviation") return run_deviation(cfg, opt);
  if (subcommand == "fuknagaev") return run_fuknagaev(cfg, opt);
  throw validation_error("unknown subcommand '" + subcommand + "'");
}

int run_main(int argc, char** argv) {
  CLI::App app{"regenerative simulation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  RunOptions opt;
  std::uint64_t seed_flag = 0;
  std::size_t replicas_flag = 0;
  bool seed_given = false, replicas_given = false;

  for (const char* name :
       {"drift-check", "minorize", "simulate", "regen-stats", "deviation", "fuknagaev"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "config file (key = value lines)")->required();
    sub->add_option("--seed", seed_flag, "override the config seed")
        ->each([&](const std::string&) { seed_given = true; });
    sub->add_option("--replicas", replicas_flag, "override the config replica count")
        ->each([&](const std::string&) { replicas_given = true; });
    sub->add_option("--threads", opt.threads, "worker thread cap (default 1)");
    sub->add_option("--out", opt.out_dir, "output directory (default ./out)");
    sub->add_option("--format", opt.format, "table format: csv | json");
    sub->add_flag("--assert", opt.assert_mode, "exit 4 if the run's acceptance check fails");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitValidation;
  }

  try {
    RunConfig cfg = load_config_file(config_path);
    if (const char* env = std::getenv("REGENSIM_SEED")) {
      try {
        opt.seed_env = std::stoull(env);
      } catch (const std::exception&) {
        throw validation_error("REGENSIM_SEED must be an unsigned integer");
      }
    }
    if (seed_given) opt.seed_override = seed_flag;
    if (replicas_given) opt.replicas_override = replicas_flag;
    std::string sub = app.get_subcommands().front()->get_name();
    int code = run(sub, std::move(cfg), opt);
    if (code == kExitAssertFailed) std::cerr << sub << ": acceptance check failed\n";
    return code;
  } catch (const validation_error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::domain_error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace regensim::cli
