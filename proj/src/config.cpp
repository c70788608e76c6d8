#include "regensim/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace regensim::cli {

namespace {

struct RawEntry {
  std::string value;
  int line = 0;
  bool used = false;
};

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

class KeyStore {
 public:
  explicit KeyStore(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      std::string t = trim(line);
      if (t.empty()) continue;
      std::size_t eq = t.find('=');
      if (eq == std::string::npos) throw parse_error(lineno, "expected `key = value`");
      std::string key = trim(t.substr(0, eq));
      std::string value = trim(t.substr(eq + 1));
      if (key.empty()) throw parse_error(lineno, "empty key");
      if (value.empty()) throw parse_error(lineno, "empty value for key '" + key + "'");
      if (entries_.count(key)) throw parse_error(lineno, "duplicate key '" + key + "'");
      entries_[key] = RawEntry{value, lineno, false};
    }
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  std::optional<std::string> take(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    it->second.used = true;
    return it->second.value;
  }

  double take_double(const std::string& key, double fallback) {
    auto v = take(key);
    return v ? parse_double(key, *v) : fallback;
  }
  std::uint64_t take_u64(const std::string& key, std::uint64_t fallback) {
    auto v = take(key);
    if (!v) return fallback;
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || p != v->data() + v->size())
      throw validation_error("key '" + key + "': expected an unsigned integer, got '" + *v + "'");
    return out;
  }
  std::size_t take_size(const std::string& key, std::size_t fallback) {
    return static_cast<std::size_t>(take_u64(key, fallback));
  }
  int take_int(const std::string& key, int fallback) {
    return static_cast<int>(take_u64(key, static_cast<std::uint64_t>(fallback)));
  }
  std::string take_string(const std::string& key, const std::string& fallback) {
    auto v = take(key);
    return v ? *v : fallback;
  }
  std::vector<double> take_list(const std::string& key) {
    auto v = take(key);
    std::vector<double> out;
    if (!v) return out;
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      out.push_back(parse_double(key, item));
    }
    if (out.empty()) throw validation_error("key '" + key + "': empty list");
    return out;
  }

  void reject_unused() const {
    for (const auto& [key, entry] : entries_) {
      if (!entry.used)
        throw validation_error("unknown key '" + key + "' (line " + std::to_string(entry.line) +
                               ")");
    }
  }

 private:
  static double parse_double(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw validation_error("key '" + key + "': expected a number, got '" + v + "'");
    }
  }

  std::map<std::string, RawEntry> entries_;
};

models::Model build_model(KeyStore& ks, const std::string& kind) {
  if (kind == "ou") {
    models::OuModel m;
    m.theta = ks.take_double("model.theta", m.theta);
    m.sigma = ks.take_double("model.sigma", m.sigma);
    m.validate();
    return m;
  }
  if (kind == "weakdrift") {
    models::WeakDriftDiffusionModel m;
    m.r_drift = ks.take_double("model.r", m.r_drift);
    m.l_exp = ks.take_double("model.l", m.l_exp);
    m.smoothing = ks.take_double("model.smoothing", m.smoothing);
    m.dim = ks.take_int("model.dim", m.dim);
    m.validate();
    return m;
  }
  if (kind == "jumpsde") {
    models::JumpSdeModel m;
    m.r_drift = ks.take_double("model.r", m.r_drift);
    m.drift_l = ks.take_double("model.l", m.drift_l);
    m.smoothing = ks.take_double("model.smoothing", m.smoothing);
    m.jump_gamma = ks.take_double("model.jump_gamma", m.jump_gamma);
    m.jump_l = ks.take_double("model.jump_l", m.jump_l);
    m.contract = ks.take_double("model.contract", m.contract);
    m.dim_x = ks.take_int("model.dim", m.dim_x);
    m.levy.scale = ks.take_double("levy.scale", m.levy.scale);
    m.levy.shape = ks.take_double("levy.shape", m.levy.shape);
    m.levy.delta_min = ks.take_double("levy.delta_min", m.levy.delta_min);
    m.levy.u_max = ks.take_double("levy.u_max", m.levy.u_max);
    m.validate();
    return m;
  }
  throw validation_error("key 'model.kind': must be one of ou, weakdrift, jumpsde");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  KeyStore ks(text);
  RunConfig cfg;

  if (auto kind = ks.take("model.kind")) cfg.model = build_model(ks, *kind);

  if (ks.has("phi.c") || ks.has("phi.exponent")) {
    rates::PhiSpec phi;
    phi.c = ks.take_double("phi.c", phi.c);
    phi.phi_exponent = ks.take_double("phi.exponent", phi.phi_exponent);
    phi.validate();
    cfg.phi = phi;
  }

  cfg.lyapunov.m_power = ks.take_double("v.m_power", cfg.lyapunov.m_power);
  cfg.lyapunov.rho0 = ks.take_double("v.rho0", cfg.lyapunov.rho0);

  cfg.split.present = ks.has("split.c_radius") || ks.has("split.window") ||
                      ks.has("split.grid") || ks.has("split.alpha_cap");
  cfg.split.c_radius = ks.take_double("split.c_radius", cfg.split.c_radius);
  cfg.split.window = ks.take_double("split.window", cfg.split.window);
  cfg.split.grid = ks.take_size("split.grid", cfg.split.grid);
  cfg.split.alpha_cap = ks.take_double("split.alpha_cap", cfg.split.alpha_cap);

  cfg.drift.present = ks.has("drift.r_min") || ks.has("drift.r_max") || ks.has("drift.grid");
  cfg.drift.r_min = ks.take_double("drift.r_min", cfg.drift.r_min);
  cfg.drift.r_max = ks.take_double("drift.r_max", cfg.drift.r_max);
  cfg.drift.grid = ks.take_size("drift.grid", cfg.drift.grid);

  cfg.simulate.present = ks.has("simulate.horizon") || ks.has("simulate.stride");
  cfg.simulate.horizon = ks.take_double("simulate.horizon", cfg.simulate.horizon);
  cfg.simulate.stride = ks.take_size("simulate.stride", cfg.simulate.stride);

  auto& rg = cfg.regen;
  rg.present = ks.has("regen.horizon") || ks.has("regen.f");
  rg.horizon = ks.take_double("regen.horizon", rg.horizon);
  rg.f = ks.take_string("regen.f", rg.f);
  rg.f_cap = ks.take_double("regen.f_cap", rg.f_cap);
  rg.moment_p = ks.take_double("regen.moment_p", rg.moment_p);
  if (auto v = ks.take("regen.expect_mu")) rg.expect_mu = std::stod(*v);
  rg.expect_mu_tol = ks.take_double("regen.expect_mu_tol", rg.expect_mu_tol);
  rg.envelope_x = ks.take_list("regen.envelope_x");
  rg.envelope_replicas = ks.take_size("regen.envelope_replicas", rg.envelope_replicas);
  rg.envelope_horizon = ks.take_double("regen.envelope_horizon", rg.envelope_horizon);
  rg.envelope_assert_r2 = ks.take_double("regen.envelope_assert_r2", rg.envelope_assert_r2);
  rg.hitting_x = ks.take_list("regen.hitting_x");
  rg.hitting_delta = ks.take_double("regen.hitting_delta", rg.hitting_delta);
  rg.hitting_replicas = ks.take_size("regen.hitting_replicas", rg.hitting_replicas);
  rg.hitting_v_scale = ks.take_double("regen.hitting_v_scale", rg.hitting_v_scale);
  rg.hitting_b_scale = ks.take_double("regen.hitting_b_scale", rg.hitting_b_scale);
  rg.hitting_expect = ks.take_string("regen.hitting_expect", rg.hitting_expect);
  if (rg.hitting_expect != "pass" && rg.hitting_expect != "fail")
    throw validation_error("key 'regen.hitting_expect': must be pass or fail");

  auto& dv = cfg.deviation;
  dv.present = ks.has("deviation.epsilon") || ks.has("deviation.t_grid");
  dv.statistic = ks.take_string("deviation.statistic", dv.statistic);
  if (dv.statistic != "time_average" && dv.statistic != "counting")
    throw validation_error("key 'deviation.statistic': must be time_average or counting");
  dv.epsilon = ks.take_double("deviation.epsilon", dv.epsilon);
  dv.t_grid = ks.take_list("deviation.t_grid");
  dv.f = ks.take_string("deviation.f", dv.f);
  dv.f_cap = ks.take_double("deviation.f_cap", dv.f_cap);
  dv.center = ks.take_string("deviation.center", dv.center);
  if (dv.center != "analytic" && dv.center != "calibrate") {
    try {
      std::size_t pos = 0;
      dv.center_value = std::stod(dv.center, &pos);
      if (pos != dv.center.size()) throw std::invalid_argument(dv.center);
      dv.center = "value";
    } catch (const std::exception&) {
      throw validation_error("key 'deviation.center': must be analytic, calibrate or a number");
    }
  }
  dv.calib_replicas = ks.take_size("deviation.calib_replicas", dv.calib_replicas);
  dv.calib_factor = ks.take_double("deviation.calib_factor", dv.calib_factor);
  dv.assert_slope_max = ks.take_double("deviation.assert_slope_max", dv.assert_slope_max);

  auto& fn = cfg.fn;
  fn.present = ks.has("fn.p") || ks.has("fn.n") || ks.has("fn.lambda");
  fn.p = ks.take_double("fn.p", fn.p);
  fn.n = ks.take_size("fn.n", fn.n);
  fn.dof = ks.take_int("fn.dof", fn.dof);
  fn.innovation = ks.take_string("fn.innovation", fn.innovation);
  if (fn.innovation != "student_t" && fn.innovation != "uniform")
    throw validation_error("key 'fn.innovation': must be student_t or uniform");
  fn.w0 = ks.take_double("fn.w0", fn.w0);
  fn.w1 = ks.take_double("fn.w1", fn.w1);
  fn.w2 = ks.take_double("fn.w2", fn.w2);
  fn.lambda = ks.take_list("fn.lambda");

  cfg.euler_step = ks.take_double("euler.step", cfg.euler_step);
  if (!(cfg.euler_step > 0.0)) throw validation_error("key 'euler.step': must be > 0");
  cfg.x0 = ks.take_double("model.x0", cfg.x0);
  cfg.seed = ks.take_u64("seed", cfg.seed);
  cfg.replicas = ks.take_size("replicas", cfg.replicas);
  if (cfg.replicas < 1) throw validation_error("key 'replicas': must be >= 1");

  ks.reject_unused();
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace regensim::cli
