#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <variant>

#include "regensim/concentration.hpp"
#include "regensim/estimators.hpp"
#include "regensim/models.hpp"
#include "regensim/rates.hpp"
#include "regensim/splitting.hpp"

namespace py = pybind11;
using namespace regensim;

namespace {

// std::variant would be unpacked by pybind11's automatic caster, so the
// python-facing model is a plain holder
struct PyModel {
  models::Model m;
};

models::Model make_model_impl(const std::string& kind, const py::kwargs& kw) {
  auto get = [&](const char* key, double fallback) {
    return kw.contains(key) ? kw[key].cast<double>() : fallback;
  };
  if (kind == "ou") {
    models::OuModel m;
    m.theta = get("theta", m.theta);
    m.sigma = get("sigma", m.sigma);
    m.validate();
    return m;
  }
  if (kind == "weakdrift") {
    models::WeakDriftDiffusionModel m;
    m.r_drift = get("r", m.r_drift);
    m.l_exp = get("l", m.l_exp);
    m.smoothing = get("smoothing", m.smoothing);
    m.validate();
    return m;
  }
  if (kind == "jumpsde") {
    models::JumpSdeModel m;
    m.r_drift = get("r", m.r_drift);
    m.drift_l = get("l", m.drift_l);
    m.smoothing = get("smoothing", m.smoothing);
    m.jump_gamma = get("jump_gamma", m.jump_gamma);
    m.jump_l = get("jump_l", m.jump_l);
    m.contract = get("contract", m.contract);
    m.levy.scale = get("levy_scale", m.levy.scale);
    m.levy.shape = get("levy_shape", m.levy.shape);
    m.levy.delta_min = get("levy_delta_min", m.levy.delta_min);
    m.levy.u_max = get("levy_u_max", m.levy.u_max);
    m.validate();
    return m;
  }
  throw validation_error("model kind must be ou, weakdrift or jumpsde");
}

}  // namespace

PYBIND11_MODULE(_regensim, m) {
  m.doc() = "regenerative simulation for Harris-recurrent Markov processes";

  py::register_exception<validation_error>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<numerical_error>(m, "NumericalError", PyExc_RuntimeError);

  py::class_<rates::PhiSpec>(m, "PhiSpec")
      .def(py::init([](double c, double exponent) {
             rates::PhiSpec s{c, exponent};
             s.validate();
             return s;
           }),
           py::arg("c"), py::arg("exponent"))
      .def_readonly("c", &rates::PhiSpec::c)
      .def_readonly("exponent", &rates::PhiSpec::phi_exponent)
      .def("__call__", [](const rates::PhiSpec& s, double v) { return s(v); });

  m.def("h_phi", &rates::h_phi, py::arg("phi"), py::arg("u"));
  m.def("h_phi_inv", &rates::h_phi_inv, py::arg("phi"), py::arg("s"));
  m.def(
      "rate", [](const rates::PhiSpec& s, double t) { return rates::rate(rates::RatePoly::from(s), t); },
      py::arg("phi"), py::arg("s"));
  m.def(
      "rate_integral",
      [](const rates::PhiSpec& s, double t) { return rates::rate_integral(rates::RatePoly::from(s), t); },
      py::arg("phi"), py::arg("t"));

  py::class_<PyModel>(m, "Model").def("__repr__", [](const PyModel& mm) {
    return std::string("<regensim.Model kind=") + models::model_kind(mm.m) + ">";
  });
  m.def(
      "make_model",
      [](const std::string& kind, const py::kwargs& kw) { return PyModel{make_model_impl(kind, kw)}; },
      py::arg("kind"));

  m.def(
      "transition_density",
      [](const PyModel& mm, double t, double x, double y) {
        return models::transition_density(mm.m, t, x, y);
      },
      py::arg("model"), py::arg("t"), py::arg("x"), py::arg("y"));
  m.def(
      "resolvent_density",
      [](const PyModel& mm, double x, double y) { return models::resolvent_density(mm.m, x, y); },
      py::arg("model"), py::arg("x"), py::arg("y"));

  m.def(
      "sample_path",
      [](const PyModel& mm, double x0, double horizon, double step, std::uint64_t seed) {
        RngStream rng(seed, 0);
        models::Path p = models::sample_path(mm.m, x0, horizon, step, rng);
        return p.states;
      },
      py::arg("model"), py::arg("x0"), py::arg("horizon"), py::arg("step") = 1e-3,
      py::arg("seed") = 0);

  m.def(
      "sample_skeleton",
      [](const PyModel& mm, double x0, double horizon, double step, std::uint64_t seed) {
        RngStream rng(seed, 0);
        models::Skeleton s = models::sample_skeleton(mm.m, x0, horizon, step, rng);
        return py::make_tuple(s.jump_times, s.states);
      },
      py::arg("model"), py::arg("x0"), py::arg("horizon"), py::arg("step") = 1e-3,
      py::arg("seed") = 0);

  py::class_<models::LyapunovV>(m, "LyapunovV")
      .def(py::init([](double m_power, double rho0) {
             models::LyapunovV v{m_power, rho0};
             v.validate();
             return v;
           }),
           py::arg("m_power") = 2.0, py::arg("rho0") = 1.0)
      .def("value", &models::LyapunovV::value_at);

  m.def(
      "generator_value",
      [](const PyModel& mm, const models::LyapunovV& v, double x) {
        return models::generator_value(mm.m, v, x);
      },
      py::arg("model"), py::arg("V"), py::arg("x"));

  m.def(
      "verify_drift",
      [](const PyModel& mm, const rates::PhiSpec& phi, const models::LyapunovV& v,
         double r_min, double r_max, int grid) {
        models::DriftReport rep = models::verify_drift(mm.m, phi, v, r_min, r_max, grid);
        py::dict out;
        out["radii"] = rep.radii;
        out["margin"] = rep.margin;
        out["worst_margin"] = rep.worst_margin;
        out["m0"] = rep.m0;
        out["b_hat"] = rep.b_hat;
        return out;
      },
      py::arg("model"), py::arg("phi"), py::arg("V"), py::arg("r_min"), py::arg("r_max"),
      py::arg("grid") = 200);

  py::class_<splitting::Minorization>(m, "Minorization")
      .def_readonly("alpha", &splitting::Minorization::alpha_min)
      .def_readonly("alpha_raw", &splitting::Minorization::alpha_raw)
      .def_readonly("c_radius", &splitting::Minorization::c_radius)
      .def_readonly("worst_violation", &splitting::Minorization::worst_violation)
      .def_readonly("nu", &splitting::Minorization::nu)
      .def("nu_at", &splitting::Minorization::nu_at)
      .def("u1", &splitting::Minorization::u1)
      .def("bell_probability", [](const splitting::Minorization& mz, double x, double y) {
        return splitting::bell_probability(x, y, mz);
      });

  m.def(
      "compute_minorization",
      [](const PyModel& mm, double c_radius, double window, std::size_t nx, std::size_t ny,
         double alpha_cap) {
        return splitting::compute_minorization(mm.m, c_radius, window, nx, ny, alpha_cap);
      },
      py::arg("model"), py::arg("c_radius"), py::arg("window"), py::arg("nx") = 64,
      py::arg("ny") = 4096, py::arg("alpha_cap") = 0.99);

  m.def(
      "regen_stats",
      [](const PyModel& mm, const splitting::Minorization& mz, const std::string& f,
         const rates::PhiSpec& phi, double horizon, std::size_t replicas, std::uint64_t seed,
         double step, unsigned threads) {
        estimators::HarvestOptions opt;
        opt.horizon = horizon;
        opt.replicas = replicas;
        opt.seed = seed;
        opt.step = step;
        opt.threads = threads;
        auto cs = estimators::harvest_cycles(mm.m, mz, estimators::BoundedFn::parse(f),
                                             rates::RatePoly::from(phi), opt);
        auto mu = estimators::estimate_mu(cs);
        py::dict out;
        out["ell"] = mu.ell;
        out["ell_se"] = mu.ell_se;
        out["mu_f"] = mu.mu_f;
        out["mu_f_se"] = mu.mu_f_se;
        out["n_cycles"] = mu.n_cycles;
        return out;
      },
      py::arg("model"), py::arg("minorization"), py::arg("f"), py::arg("phi"),
      py::arg("horizon") = 1000.0, py::arg("replicas") = 8, py::arg("seed") = 0,
      py::arg("step") = 1e-3, py::arg("threads") = 1);

  py::class_<concentration::FnParams>(m, "FnParams")
      .def(py::init([](std::size_t n, double lam, double p, double sigma2, double m_p) {
             concentration::FnParams fp{n, lam, p, sigma2, m_p};
             fp.validate();
             return fp;
           }),
           py::arg("n"), py::arg("lam"), py::arg("p"), py::arg("sigma2"), py::arg("m_p"));
  m.def("fn_bound_explicit", &concentration::fn_bound_explicit, py::arg("params"));
  m.def("fn_bound_explicit_raw", &concentration::fn_bound_explicit_raw, py::arg("params"));
  m.def("fn_statement_bound", &concentration::fn_statement_bound, py::arg("params"),
        py::arg("c_p"));

  m.attr("__version__") = "0.1.0";
}
