#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <string>
#include <vector>

#include "fecoh/coupling.hpp"
#include "fecoh/eels.hpp"
#include "fecoh/emitter.hpp"
#include "fecoh/errors.hpp"
#include "fecoh/scenario.hpp"
#include "fecoh/units.hpp"

namespace py = pybind11;
using namespace fecoh;

namespace {

using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const RealArray& a) {
  if (a.ndim() != 1) throw DomainError("expected a one-dimensional array");
  return {a.data(), a.data() + a.size()};
}

template <class T>
py::array_t<T> to_array(const std::vector<T>& v) {
  py::array_t<T> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::dict spectrum_dict(const Spectrum& s) {
  py::dict d;
  d["t"] = s.t;
  d["energy"] = to_array(s.energy);
  d["dPdE"] = to_array(s.dPdE);
  d["loss"] = to_array(s.loss);
  d["gain"] = to_array(s.gain);
  return d;
}

py::dict manifest_dict(const RunManifest& m) {
  py::list files;
  for (const auto& f : m.files) {
    py::dict e;
    e["path"] = f.path;
    e["product"] = f.product;
    e["tag"] = f.tag;
    e["sha256"] = f.sha256;
    e["bytes"] = f.bytes;
    e["rows"] = f.rows;
    files.append(e);
  }
  py::dict d;
  d["scenario"] = m.scenario;
  d["version"] = m.version;
  d["files"] = files;
  d["stage_seconds"] = m.stage_seconds;
  d["json"] = m.json;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Free-electron / two-level-emitter coherent interaction";
  m.attr("__version__") = FECOH_VERSION;

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception<ResolutionError>(m, "ResolutionError", PyExc_RuntimeError);
  py::register_exception<RunError>(m, "RunError", PyExc_RuntimeError);

  auto c = m.def_submodule("constants", "Physical constants in eV, nm, fs, e");
  c.attr("pi") = constants::kPi;
  c.attr("hbar_c") = constants::kHbarC;
  c.attr("speed_of_light") = constants::kSpeedOfLight;
  c.attr("hbar") = constants::kHbar;
  c.attr("fine_structure") = constants::kFineStructure;
  c.attr("electron_rest_energy_kev") = constants::kElectronRestEnergyKeV;
  c.attr("debye") = constants::kDebyeInENm;

  m.def("velocity_from_kinetic_energy", &velocity_from_kinetic_energy, py::arg("kinetic_energy_kev"),
        "Speed in units of c");
  m.def("lorentz_gamma", &lorentz_gamma, py::arg("beta"));
  m.def(
      "omega_from_wavelength",
      [](double wl) {
        const auto f = omega_from_wavelength(wl);
        return py::make_tuple(f.omega0, f.hbar_omega0);
      },
      py::arg("wavelength_nm"), "(omega0 [rad/fs], hbar*omega0 [eV])");
  m.def("dipole_debye_to_internal", &dipole_debye_to_internal, py::arg("debye"));

  py::class_<BeamParams>(m, "BeamParams")
      .def_static("from_sigma_z", &BeamParams::from_sigma_z, py::arg("kinetic_energy_kev"),
                  py::arg("sigma_z_nm"), py::arg("r_perp_nm"))
      .def_static("from_sigma_t", &BeamParams::from_sigma_t, py::arg("kinetic_energy_kev"),
                  py::arg("sigma_t_fs"), py::arg("r_perp_nm"))
      .def_readonly("kinetic_energy", &BeamParams::kinetic_energy)
      .def_readonly("beta", &BeamParams::beta)
      .def_readonly("gamma", &BeamParams::gamma)
      .def_readonly("sigma_z", &BeamParams::sigma_z)
      .def_readonly("sigma_t", &BeamParams::sigma_t)
      .def_readonly("r_perp", &BeamParams::r_perp)
      .def_readonly("k0", &BeamParams::k0)
      .def_property_readonly("velocity", &BeamParams::velocity)
      .def("__repr__", [](const BeamParams& b) {
        return "BeamParams(kinetic_energy=" + std::to_string(b.kinetic_energy) +
               " keV, beta=" + std::to_string(b.beta) + ", sigma_t=" + std::to_string(b.sigma_t) +
               " fs, r_perp=" + std::to_string(b.r_perp) + " nm)";
      });

  py::class_<EmitterParams>(m, "EmitterParams")
      .def_static("from_wavelength", &EmitterParams::from_wavelength, py::arg("d_x_debye"),
                  py::arg("d_y_debye"), py::arg("d_z_debye"), py::arg("wavelength_nm"),
                  py::arg("a") = 1.0, py::arg("b") = 0.0, py::arg("phi_r") = 0.0)
      .def_readonly("d_x", &EmitterParams::d_x)
      .def_readonly("d_y", &EmitterParams::d_y)
      .def_readonly("d_z", &EmitterParams::d_z)
      .def_readonly("omega0", &EmitterParams::omega0)
      .def_readonly("hbar_omega0", &EmitterParams::hbar_omega0)
      .def_readonly("a", &EmitterParams::a)
      .def_readonly("b", &EmitterParams::b)
      .def_readonly("phi_r", &EmitterParams::phi_r);

  py::class_<QuadratureConfig>(m, "QuadratureConfig")
      .def(py::init<>())
      .def_readwrite("rel_tol", &QuadratureConfig::rel_tol)
      .def_readwrite("abs_tol", &QuadratureConfig::abs_tol)
      .def_readwrite("max_subdivisions", &QuadratureConfig::max_subdivisions)
      .def_readwrite("tail_decay_threshold", &QuadratureConfig::tail_decay_threshold)
      .def_readwrite("oscillation_panel_fraction", &QuadratureConfig::oscillation_panel_fraction);

  py::class_<ZGridSpec>(m, "ZGridSpec")
      .def(py::init<>())
      .def_readwrite("span_sigmas", &ZGridSpec::span_sigmas)
      .def_readwrite("max_panel_width", &ZGridSpec::max_panel_width);

  py::class_<CouplingValue>(m, "CouplingValue")
      .def_readonly("g", &CouplingValue::g)
      .def_readonly("magnitude", &CouplingValue::magnitude)
      .def_readonly("phase", &CouplingValue::phase)
      .def_readonly("error_estimate", &CouplingValue::error_estimate);

  m.def("g_infinity", &g_infinity, py::arg("beam"), py::arg("emitter"));
  m.def("default_cutoff_length", &default_cutoff_length, py::arg("beam"), py::arg("emitter"));
  m.def("g_direct", &g_direct, py::arg("z"), py::arg("t"), py::arg("beam"), py::arg("emitter"),
        py::arg("cutoff") = 0.0, py::arg("config") = QuadratureConfig{});
  m.def("g_semianalytic", &g_semianalytic, py::arg("z"), py::arg("t"), py::arg("beam"),
        py::arg("emitter"), py::arg("config") = QuadratureConfig{});
  m.def(
      "g_direct_many",
      [](const RealArray& z, const RealArray& t, const BeamParams& beam,
         const EmitterParams& emitter, double cutoff, const QuadratureConfig& cfg) {
        const auto zv = to_vector(z), tv = to_vector(t);
        std::vector<CouplingValue> r;
        {
          py::gil_scoped_release release;
          r = g_direct_many(zv, tv, beam, emitter, cutoff, cfg);
        }
        py::array_t<std::complex<double>> out(static_cast<py::ssize_t>(r.size()));
        for (std::size_t i = 0; i < r.size(); ++i) out.mutable_data()[i] = r[i].g;
        return out;
      },
      py::arg("z"), py::arg("t"), py::arg("beam"), py::arg("emitter"), py::arg("cutoff") = 0.0,
      py::arg("config") = QuadratureConfig{}, "Coupling g at paired (z, t) points");

  py::class_<SpectralCoupling>(m, "SpectralCoupling")
      .def(py::init<const BeamParams&, const EmitterParams&, const QuadratureConfig&>(),
           py::arg("beam"), py::arg("emitter"), py::arg("config") = QuadratureConfig{})
      .def("g_c", &SpectralCoupling::g_c, py::arg("omega"))
      .def_property_readonly("g_inf", &SpectralCoupling::g_inf)
      .def_property_readonly("g_q", &SpectralCoupling::g_q)
      .def_property_readonly("g_K", &SpectralCoupling::g_K)
      .def_property_readonly("g_I", &SpectralCoupling::g_I)
      .def_property_readonly("exclusion_halfwidth", &SpectralCoupling::exclusion_halfwidth);

  m.def(
      "density_matrix_series",
      [](const RealArray& times, const BeamParams& beam, const EmitterParams& emitter,
         const ZGridSpec& spec, const QuadratureConfig& cfg) {
        const auto tv = to_vector(times);
        std::vector<DensityMatrix2> rho;
        {
          py::gil_scoped_release release;
          rho = density_matrix_series(tv, beam, emitter, spec, cfg);
        }
        std::vector<double> gg, ee;
        std::vector<std::complex<double>> ge;
        for (const auto& r : rho) {
          gg.push_back(r.rho_gg);
          ee.push_back(r.rho_ee);
          ge.push_back(r.rho_ge);
        }
        py::dict d;
        d["t"] = to_array(tv);
        d["rho_gg"] = to_array(gg);
        d["rho_ee"] = to_array(ee);
        d["rho_ge"] = to_array(ge);
        return d;
      },
      py::arg("times"), py::arg("beam"), py::arg("emitter"), py::arg("z_grid") = ZGridSpec{},
      py::arg("config") = QuadratureConfig{},
      "Reduced emitter density matrix over a time series (dict of arrays)");

  m.def(
      "populations_firstorder",
      [](const RealArray& times, const BeamParams& beam, const EmitterParams& emitter,
         const QuadratureConfig& cfg) {
        const auto tv = to_vector(times);
        double tmax = 0.0;
        for (double t : tv) tmax = std::max(tmax, std::abs(t));
        std::vector<double> ee, gg, err;
        {
          py::gil_scoped_release release;
          FirstOrderDynamics dyn(beam, emitter, cfg, tmax);
          for (double t : tv) {
            const auto p = dyn.populations(t);
            ee.push_back(p.rho_ee);
            gg.push_back(p.rho_gg);
            err.push_back(p.error_estimate);
          }
        }
        py::dict d;
        d["t"] = to_array(tv);
        d["rho_ee"] = to_array(ee);
        d["rho_gg"] = to_array(gg);
        d["error_estimate"] = to_array(err);
        return d;
      },
      py::arg("times"), py::arg("beam"), py::arg("emitter"),
      py::arg("config") = QuadratureConfig{}, "First-order populations over a time series");

  m.def("zlp_scale", &zlp_scale, py::arg("beam"));
  m.def(
      "eels_probability",
      [](const RealArray& energies, double t, const BeamParams& beam,
         const EmitterParams& emitter, const ZGridSpec& spec, const QuadratureConfig& cfg) {
        const auto ev = to_vector(energies);
        Spectrum s;
        {
          py::gil_scoped_release release;
          s = eels_probability(ev, t, beam, emitter, spec, cfg);
        }
        return spectrum_dict(s);
      },
      py::arg("energies"), py::arg("t"), py::arg("beam"), py::arg("emitter"),
      py::arg("z_grid") = ZGridSpec{}, py::arg("config") = QuadratureConfig{},
      "Energy-loss spectrum at time t (dict with energy, dPdE, loss, gain)");
  m.def(
      "gamma_net",
      [](const RealArray& energies, double t, const BeamParams& beam,
         const EmitterParams& emitter, const ZGridSpec& spec, const QuadratureConfig& cfg) {
        const auto ev = to_vector(energies);
        GammaNetTrace g;
        {
          py::gil_scoped_release release;
          g = gamma_net(ev, t, beam, emitter, spec, cfg);
        }
        return to_array(g.gamma_net);
      },
      py::arg("energies"), py::arg("t"), py::arg("beam"), py::arg("emitter"),
      py::arg("z_grid") = ZGridSpec{}, py::arg("config") = QuadratureConfig{});
  m.def(
      "zlp_gamma_net_series",
      [](const RealArray& times, const BeamParams& beam, const EmitterParams& emitter,
         const ZGridSpec& spec, const QuadratureConfig& cfg) {
        const auto tv = to_vector(times);
        std::vector<double> r;
        {
          py::gil_scoped_release release;
          r = zlp_gamma_net_series(tv, beam, emitter, spec, cfg);
        }
        return to_array(r);
      },
      py::arg("times"), py::arg("beam"), py::arg("emitter"), py::arg("z_grid") = ZGridSpec{},
      py::arg("config") = QuadratureConfig{});
  m.def("zlp_oscillation_firstorder",
        py::overload_cast<double, const BeamParams&, const EmitterParams&,
                          const QuadratureConfig&>(&zlp_oscillation_firstorder),
        py::arg("t"), py::arg("beam"), py::arg("emitter"), py::arg("config") = QuadratureConfig{});

  py::class_<Scenario>(m, "Scenario")
      .def_readwrite("name", &Scenario::name)
      .def(
          "set", [](Scenario& s, const std::string& k, const std::string& v) { s.set(k, v); },
          py::arg("key"), py::arg("value"))
      .def("validate", &Scenario::validate)
      .def("resolved", &Scenario::resolved)
      .def("beam", &Scenario::beam)
      .def("emitter", &Scenario::emitter)
      .def("times", [](const Scenario& s) { return to_array(s.times()); })
      .def("energies", [](const Scenario& s) { return to_array(s.energy_grid().values()); })
      .def("to_text", &Scenario::to_text)
      .def_readonly("defaults_applied", &Scenario::defaults_applied);

  m.def("parse_scenario", &parse_scenario, py::arg("text"), py::arg("name") = "scenario");
  m.def("load_scenario", &load_scenario, py::arg("path"));
  m.def("builtin_names", &builtin_names);
  m.def("builtin_scenario", [](const std::string& n) { return builtin_scenario(n); },
        py::arg("name"));
  m.def(
      "run",
      [](const Scenario& s, const std::filesystem::path& out) {
        RunManifest r;
        {
          py::gil_scoped_release release;
          r = fecoh::run(s, out);
        }
        return manifest_dict(r);
      },
      py::arg("scenario"), py::arg("out_dir"));
  m.def(
      "sweep",
      [](const Scenario& s, const std::string& axis, const std::vector<double>& values,
         const std::filesystem::path& out) {
        RunManifest r;
        {
          py::gil_scoped_release release;
          r = fecoh::sweep(s, axis, values, out);
        }
        return manifest_dict(r);
      },
      py::arg("scenario"), py::arg("axis"), py::arg("values"), py::arg("out_dir"));
}
