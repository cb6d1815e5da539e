#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <string>

#include "twip/certification.hpp"
#include "twip/config.hpp"
#include "twip/controllers.hpp"
#include "twip/errors.hpp"
#include "twip/mc_estimator.hpp"
#include "twip/model.hpp"
#include "twip/pipeline.hpp"

namespace py = pybind11;
using namespace twip;

namespace {

PipelineConfig parse_config(const std::string& text) {
  return text.empty() ? PipelineConfig{} : config_from_json(nlohmann::json::parse(text));
}

// Synthesized controllers plus the certified set for one configuration.
class System {
 public:
  explicit System(const std::string& config_json) : cfg_(parse_config(config_json)), bundle_(synthesize(cfg_)) {}

  Eigen::RowVector4d lqr_gain() const { return bundle_.lqr.K; }
  Matrix4 A() const { return bundle_.model.A; }
  Vector4 B() const { return bundle_.model.B; }
  int terminal_rows() const { return static_cast<int>(bundle_.mpc->terminal_set().rows()); }
  std::vector<double> tube_offsets() const { return bundle_.ctmpc->offsets(); }

  py::tuple compute(const std::string& controller, const State& x) const {
    std::unique_ptr<ControllerPolicy> p = policy(controller);
    const PolicyOutput o = p->compute(x);
    return py::make_tuple(o.u, to_string(o.status));
  }

  py::dict certify() {
    const CertifiedInvariantSet& s = set();
    py::dict d;
    d["P"] = s.P.matrix();
    d["gamma"] = s.gamma;
    d["gamma_bound"] = s.gamma_bound;
    d["rho"] = s.rho;
    d["level"] = s.level;
    d["alpha_mpc"] = check_admissibility(s, *bundle_.mpc).alpha_star;
    d["alpha_ctmpc"] = check_admissibility(s, *bundle_.ctmpc).alpha_star;
    return d;
  }

  bool in_certified_set(const State& x) { return set().contains(x); }

  py::dict monte_carlo(const std::string& controller, int n_samples, std::uint64_t seed) {
    McConfig mc = cfg_.mc_config();
    mc.n_samples = n_samples;
    mc.seed = seed;
    mc.validate();
    std::unique_ptr<ControllerPolicy> p = policy(controller);
    McSummary s;
    {
      py::gil_scoped_release release;
      s = run_campaign({p.get()}, set(), cfg_.model, mc);
    }
    const CampaignResult& c = s.campaigns[0];
    py::dict d;
    d["controller"] = c.controller;
    d["samples"] = c.samples.size();
    d["stable_fraction"] = c.stable_fraction();
    d["standard_error"] = c.standard_error();
    d["sample_hash"] = s.sample_hash;
    py::list verdicts;
    for (const SampleResult& r : c.samples) verdicts.append(r.verdict == Verdict::kCertifiedStable);
    d["stable"] = verdicts;
    return d;
  }

 private:
  std::unique_ptr<ControllerPolicy> policy(const std::string& name) const {
    if (name == "lqr") return std::make_unique<LqrPolicy>(bundle_.lqr.K, cfg_.mpc.u_max);
    if (name == "mpc") return bundle_.mpc->clone();
    if (name == "ctmpc") return bundle_.ctmpc->clone();
    throw ConfigError("unknown controller '" + name + "'");
  }

  const CertifiedInvariantSet& set() {
    if (!set_) {
      set_ = build_invariant_set(cfg_.model, bundle_.model, bundle_.lqr, cfg_.mpc.u_max,
                                 cfg_.certification_options());
    }
    return *set_;
  }

  PipelineConfig cfg_;
  SynthesisBundle bundle_;
  std::optional<CertifiedInvariantSet> set_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Two-wheeled inverted pendulum controllers, certified invariant set and Monte Carlo RoA";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<SynthesisError>(m, "SynthesisError", PyExc_RuntimeError);
  py::register_exception<CertificationError>(m, "CertificationError", PyExc_RuntimeError);

  m.def("default_config", [] { return to_json(PipelineConfig{}).dump(); },
        "Default configuration as a JSON string.");
  m.def(
      "continuous_dynamics",
      [](const State& x, double u, const std::string& config) { return continuous_dynamics(x, u, parse_config(config).model); },
      py::arg("x"), py::arg("u"), py::arg("config") = "");
  m.def(
      "step",
      [](const State& x, double u, const std::string& config) {
        const PipelineConfig c = parse_config(config);
        return step_nonlinear(x, u, c.model, c.Ts, c.substeps);
      },
      py::arg("x"), py::arg("u"), py::arg("config") = "");

  py::class_<System>(m, "System")
      .def(py::init<const std::string&>(), py::arg("config") = "")
      .def_property_readonly("K", &System::lqr_gain)
      .def_property_readonly("A", &System::A)
      .def_property_readonly("B", &System::B)
      .def_property_readonly("terminal_rows", &System::terminal_rows)
      .def_property_readonly("tube_offsets", &System::tube_offsets)
      .def("compute", &System::compute, py::arg("controller"), py::arg("x"))
      .def("certify", &System::certify)
      .def("in_certified_set", &System::in_certified_set, py::arg("x"))
      .def("monte_carlo", &System::monte_carlo, py::arg("controller") = "lqr", py::arg("n_samples") = 100,
           py::arg("seed") = 1);
}
