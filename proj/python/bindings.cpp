#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lzs/fbm.hpp"
#include "lzs/sweep.hpp"

namespace py = pybind11;
using namespace lzs;

namespace {

HarmonicHamiltonian model_hamiltonian(const SystemParams& p, const std::string& model, int djc_n) {
  if (model == "rabi") return rabi_hamiltonian(p);
  if (model == "qubit") return qubit_hamiltonian(p);
  if (model == "djc") {
    DjcParams d = DjcParams::from_system(p, djc_n);
    d.delta0 = p.eps0 - p.omega_r;
    return djc_hamiltonian(d);
  }
  throw InputError("model must be rabi, qubit or djc");
}

// Sweep result as (values[a_steps, eps0_steps], A axis, eps0 axis).
py::tuple sweep_arrays(const SweepResult& r) {
  Eigen::MatrixXd v(r.grid.a_steps, r.grid.eps0_steps);
  Eigen::VectorXd a(r.grid.a_steps), e(r.grid.eps0_steps);
  for (int i = 0; i < r.grid.a_steps; ++i) {
    a[i] = r.grid.a(i);
    for (int j = 0; j < r.grid.eps0_steps; ++j) v(i, j) = r.at(i, j);
  }
  for (int j = 0; j < r.grid.eps0_steps; ++j) e[j] = r.grid.eps0(j);
  return py::make_tuple(v, a, e);
}

}  // namespace

PYBIND11_MODULE(_lzs, m) {
  m.doc() = "Driven qubit-resonator LZS interferometry: spectra, Floquet, FBM steady states, sweeps.";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<SystemParams>(m, "SystemParams")
      .def(py::init<>())
      .def_readwrite("delta", &SystemParams::delta)
      .def_readwrite("eps0", &SystemParams::eps0)
      .def_readwrite("amp", &SystemParams::amp)
      .def_readwrite("omega", &SystemParams::omega)
      .def_readwrite("omega_r", &SystemParams::omega_r)
      .def_readwrite("g", &SystemParams::g)
      .def_readwrite("n_max", &SystemParams::n_max)
      .def_property_readonly("dim", &SystemParams::dim)
      .def("validate", &SystemParams::validate)
      .def("__repr__", [](const SystemParams& p) {
        return "SystemParams(delta=" + std::to_string(p.delta) + ", eps0=" + std::to_string(p.eps0) +
               ", amp=" + std::to_string(p.amp) + ", omega=" + std::to_string(p.omega) +
               ", g=" + std::to_string(p.g) + ", n_max=" + std::to_string(p.n_max) + ")";
      });

  m.def("rabi_hamiltonian", [](const SystemParams& p, double t) { return build_rabi_hamiltonian(p, t).entries(); },
        py::arg("params"), py::arg("t") = 0.0, "Dense H(t) in the product basis s*(n_max+1)+n.");
  m.def("static_energies", [](const SystemParams& p, double eps) { return static_spectrum(p, eps).energies; },
        py::arg("params"), py::arg("eps"));
  m.def(
      "gap_scan",
      [](const SystemParams& p, int i, int j, double lo, double hi, double resolution) {
        const auto r = gap_scan(p, {i, j}, {lo, hi}, resolution);
        return py::dict(py::arg("eps_min") = r.eps_min, py::arg("gap") = r.gap,
                        py::arg("boundary_minimum") = r.boundary_minimum);
      },
      py::arg("params"), py::arg("i"), py::arg("j"), py::arg("eps_lo"), py::arg("eps_hi"),
      py::arg("resolution") = 1e-3);

  m.def(
      "quasienergies",
      [](const SystemParams& p, const std::string& model, int n_t, double tol, int djc_n) {
        return solve_floquet(model_hamiltonian(p, model, djc_n), {n_t, tol, Integrator::kMagnus}).quasienergies;
      },
      py::arg("params"), py::arg("model") = "rabi", py::arg("n_t") = 256, py::arg("tol") = 1e-10,
      py::arg("djc_n") = 3, "Folded quasienergies in (-omega/2, omega/2], ascending.");

  m.def(
      "time_averaged_p_up",
      [](const SystemParams& p, const std::string& initial, int n_t, double tol) {
        const auto sol = solve_floquet(rabi_hamiltonian(p), {n_t, tol, Integrator::kMagnus});
        const Vector psi0 = basis_state(p.dim(), parse_basis_label(initial, p.n_max));
        return time_averaged_probability(sol, psi0, up_projector(p.n_max).entries());
      },
      py::arg("params"), py::arg("initial") = "down,0", py::arg("n_t") = 256, py::arg("tol") = 1e-10);

  m.def("rate_kernel",
        [](double eps, double kappa, double omega_d, double temperature) {
          return rate_kernel(BathSpec::ohmic(kappa, omega_d, temperature), eps);
        },
        py::arg("eps"), py::arg("kappa") = 0.001, py::arg("omega_d") = 12.5, py::arg("temperature") = 0.0175);

  m.def(
      "steady_p_up",
      [](const SystemParams& p, double kappa, double omega_d, double temperature, int n_t, int k_max) {
        const Operator a = annihilation_op(p.n_max);
        DissipativeOptions opts;
        opts.numerics = {n_t, 1e-10, Integrator::kMagnus};
        opts.k_max = k_max;
        const Vector psi0 = basis_state(p.dim(), product_index(false, 0, p.n_max));
        return dissipative_run(rabi_hamiltonian(p), tensor(identity(2), a + a.adjoint()).entries(),
                               up_projector(p.n_max).entries(), BathSpec::ohmic(kappa, omega_d, temperature),
                               psi0, opts)
            .steady_p_up;
      },
      py::arg("params"), py::arg("kappa") = 0.001, py::arg("omega_d") = 12.5, py::arg("temperature") = 0.0175,
      py::arg("n_t") = 512, py::arg("k_max") = 200, "Period-averaged p_up of the FBM steady state.");

  m.def("region", [](double amp, double eps0, double omega_r) { return to_string(classify_region(amp, eps0, omega_r)); },
        py::arg("amp"), py::arg("eps0"), py::arg("omega_r") = 1.0);

  // Config-level entry points take the JSON text of a sweep config.
  m.def("config_hash", [](const std::string& text) { return validate_config(nlohmann::json::parse(text)).hash(); });
  m.def(
      "evaluate_point",
      [](const std::string& text, double a, double eps0) {
        return evaluate_point(validate_config(nlohmann::json::parse(text)), a, eps0);
      },
      py::arg("config"), py::arg("A_over_omega"), py::arg("eps0_over_omega"));
  m.def(
      "run_sweep",
      [](const std::string& text, int workers) {
        const SweepConfig cfg = validate_config(nlohmann::json::parse(text));
        SweepRunOptions opts;
        opts.workers = workers;
        SweepResult r;
        {
          py::gil_scoped_release release;
          r = run_sweep(cfg, opts);
        }
        return sweep_arrays(r);
      },
      py::arg("config"), py::arg("workers") = 0, "Returns (values[A, eps0], A axis, eps0 axis).");
}
