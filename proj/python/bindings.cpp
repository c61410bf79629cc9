// Python bindings: grids and densities as NumPy arrays, solver runs, diagnostics, rate fits.
#include "aggdiff/checks.hpp"
#include "aggdiff/convolve.hpp"
#include "aggdiff/experiment.hpp"
#include "aggdiff/fractional.hpp"
#include "aggdiff/functionals.hpp"
#include "aggdiff/rates.hpp"
#include "aggdiff/solver.hpp"

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace aggdiff;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Field to_field(const Grid& g, const Array& a)
{
    if (static_cast<std::size_t>(a.size()) != g.size()) {
        throw std::invalid_argument("array has " + std::to_string(a.size()) + " values, grid has " +
                                    std::to_string(g.size()));
    }
    return Field(a.data(), a.data() + a.size());
}

// Shaped (N,) * dim copy of a grid field.
Array to_array(const Grid& g, const Field& f)
{
    std::vector<py::ssize_t> shape(static_cast<std::size_t>(g.dim()), static_cast<py::ssize_t>(g.cells_per_axis()));
    Array out(shape);
    std::copy(f.begin(), f.end(), out.mutable_data());
    return out;
}

Point to_point(const std::vector<double>& v)
{
    if (v.size() > 3) throw std::invalid_argument("points have at most 3 components");
    Point p{};
    std::copy(v.begin(), v.end(), p.begin());
    return p;
}

Array vector_array(std::size_t n) { return Array(std::vector<py::ssize_t>{static_cast<py::ssize_t>(n)}); }

DensityField density(const Grid& g, const Array& a) { return DensityField(g, to_field(g, a)); }

py::dict fit_to_dict(const RateFit& f)
{
    py::dict d;
    d["slope"] = f.slope;
    d["intercept"] = f.intercept;
    d["r_squared"] = f.r_squared;
    d["window"] = py::make_tuple(f.window_begin, f.window_end);
    d["modifier"] = to_string(f.modifier);
    d["n_points"] = f.n_points;
    d["floor"] = f.floor;
    return d;
}

py::dict record_to_dict(const DiagnosticsRecord& r, const std::vector<double>& alphas)
{
    py::dict d;
    const auto cols = record_columns(alphas);
    const auto vals = record_values(r);
    for (std::size_t i = 0; i < cols.size(); ++i) d[py::str(cols[i])] = vals[i];
    return d;
}

// Column name -> NumPy array over all records.
py::dict records_to_columns(const std::vector<DiagnosticsRecord>& recs, const std::vector<double>& alphas)
{
    const auto cols = record_columns(alphas);
    std::vector<Array> arrays;
    for (std::size_t c = 0; c < cols.size(); ++c) arrays.push_back(vector_array(recs.size()));
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto vals = record_values(recs[i]);
        for (std::size_t c = 0; c < cols.size(); ++c) arrays[c].mutable_data()[i] = vals[c];
    }
    py::dict d;
    for (std::size_t c = 0; c < cols.size(); ++c) d[py::str(cols[c])] = arrays[c];
    return d;
}

PotentialSpec potential_from(const std::string& kind, const py::kwargs& params)
{
    std::vector<std::pair<std::string, double>> p;
    for (const auto& [k, v] : params) p.emplace_back(py::cast<std::string>(k), py::cast<double>(v));
    return make_potential(kind, p);
}

SolverConfig solver_config(const std::string& frame, const std::string& scheme, double end_time, double output_every,
                           double cfl, int kernel_refresh, int subsamples, const std::string& drift)
{
    SolverConfig c;
    c.frame = frame_from_string(frame);
    c.scheme = scheme_from_string(scheme);
    c.end_time = end_time;
    c.output_every = output_every;
    c.cfl_safety = cfl;
    c.kernel_refresh = kernel_refresh;
    c.kernel_subsamples = subsamples;
    c.drift = drift_mode_from_string(drift);
    c.validate();
    return c;
}

ConfigMap config_from(const py::dict& d)
{
    ConfigMap m;
    for (const auto& [k, v] : d) m[py::cast<std::string>(k)] = py::cast<std::string>(py::str(v));
    return m;
}

}  // namespace

PYBIND11_MODULE(_aggdiff, m)
{
    m.doc() = "Aggregation-diffusion solver with entropy and decay-rate diagnostics";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

    py::class_<Grid>(m, "Grid")
        .def(py::init<int, double, std::size_t>(), py::arg("dim"), py::arg("half_width"), py::arg("cells_per_axis"))
        .def_property_readonly("dim", &Grid::dim)
        .def_property_readonly("half_width", &Grid::half_width)
        .def_property_readonly("cells_per_axis", &Grid::cells_per_axis)
        .def_property_readonly("spacing", &Grid::spacing)
        .def_property_readonly("size", &Grid::size)
        .def_property_readonly("shape",
                               [](const Grid& g) {
                                   return std::vector<std::size_t>(static_cast<std::size_t>(g.dim()), g.cells_per_axis());
                               })
        .def("centers",
             [](const Grid& g) {
                 Array out = vector_array(g.cells_per_axis());
                 for (std::size_t i = 0; i < g.cells_per_axis(); ++i) out.mutable_data()[i] = g.center(i);
                 return out;
             },
             "Cell centres along one axis.")
        .def("integrate", [](const Grid& g, const Array& f) { return integrate(g, to_field(g, f)); })
        .def("__repr__", [](const Grid& g) {
            return "Grid(dim=" + std::to_string(g.dim()) + ", half_width=" + std::to_string(g.half_width()) +
                   ", cells_per_axis=" + std::to_string(g.cells_per_axis()) + ")";
        });

    py::class_<PotentialSpec>(m, "Potential")
        .def(py::init(&potential_from), py::arg("kind") = "zero",
             "Potential by kind: zero, gaussian_bump(A, sigma), smoothed_power_tail(eps, delta), "
             "smoothed_log(chi, delta), morse(ca, la, cr, lr).")
        .def_property_readonly("name", &PotentialSpec::name)
        .def("W", [](const PotentialSpec& p, const std::vector<double>& x) { return eval_W(p, to_point(x)); })
        .def("grad_W",
             [](const PotentialSpec& p, const std::vector<double>& x) {
                 const Point g = eval_gradW(p, to_point(x));
                 return std::vector<double>(g.begin(), g.begin() + static_cast<long>(x.size()));
             })
        .def("norms",
             [](const PotentialSpec& p, int dim) {
                 const auto n = potential_norms(p, dim, default_p_list());
                 auto val = [](const NormValue& v) { return v.divergent ? py::object(py::none()) : py::cast(v.value); };
                 py::dict d, grad, lap;
                 d["sup_W"] = val(n.sup_W);
                 d["L1_W"] = val(n.L1_W);
                 for (const auto& [q, v] : n.Lp_gradW) grad[py::float_(q)] = val(v);
                 for (const auto& [q, v] : n.Lp_lapW) lap[py::float_(q)] = val(v);
                 d["grad_W"] = grad;
                 d["lap_W"] = lap;
                 return d;
             },
             py::arg("dim"), "Norms of W, grad W and Lap W; None marks a divergent norm.")
        .def("__repr__", [](const PotentialSpec& p) { return "Potential('" + p.name() + "')"; });

    // Densities
    m.def("gaussian_profile",
          [](const Grid& g, const std::vector<double>& mean, double variance) {
              return to_array(g, gaussian_profile(g, to_point(mean), variance).values());
          },
          py::arg("grid"), py::arg("mean"), py::arg("variance"));
    m.def("heat_kernel", [](const Grid& g, double t) { return to_array(g, heat_kernel_field(g, t).values()); },
          py::arg("grid"), py::arg("t"));
    m.def("box_profile",
          [](const Grid& g, const std::vector<double>& lo, const std::vector<double>& hi) {
              return to_array(g, box_profile(g, to_point(lo), to_point(hi)).values());
          },
          py::arg("grid"), py::arg("lo"), py::arg("hi"));
    m.def("tau_from_t", &tau_from_t);
    m.def("t_from_tau", &t_from_tau);

    // Functionals
    m.def("entropy", [](const Grid& g, const Array& r) { return entropy(density(g, r)); });
    m.def("second_moment", [](const Grid& g, const Array& r) { return second_moment(density(g, r)); });
    m.def("relative_entropy_L1", [](const Grid& g, const Array& r) { return relative_entropy_L1(density(g, r)); });
    m.def("relative_entropy_L2", [](const Grid& g, const Array& r) { return relative_entropy_L2(density(g, r)).E2; });
    m.def("fisher_info", [](const Grid& g, const Array& r) { return fisher_info(density(g, r)); });
    m.def("lsi_gap", [](const Grid& g, const Array& r) { return lsi_gap(density(g, r)); });
    m.def("l1_distance", [](const Grid& g, const Array& a, const Array& b) {
        return l1_distance(g, to_field(g, a), to_field(g, b));
    });
    m.def("diagnostics",
          [](const Grid& g, const Array& r, double tau, const PotentialSpec& W, const std::vector<double>& holder) {
              InteractionOperator op(g, W, 8, DriftMode::potential_difference);
              DiagnosticsOptions o;
              o.holder_alphas = holder;
              return record_to_dict(compute_diagnostics(density(g, r), tau, op, o), holder);
          },
          py::arg("grid"), py::arg("rho"), py::arg("tau") = 0.0, py::arg("potential") = PotentialSpec{},
          py::arg("holder_alphas") = std::vector<double>{}, "Every monitored functional of a rescaled density.");
    m.def("gaussian_closed_forms",
          [](int dim, double mean_sq, double s) {
              const auto c = gaussian_closed_forms(dim, mean_sq, s);
              return py::dict(py::arg("entropy") = c.entropy, py::arg("E1") = c.E1, py::arg("I1") = c.I1,
                              py::arg("E2") = c.E2, py::arg("N2") = c.N2);
          },
          py::arg("dim"), py::arg("mean_sq"), py::arg("variance"));

    // Convolution and fractional calculus
    m.def("conv_fields", [](const Grid& g, const Array& f, const Array& h) {
        return to_array(g, conv_fields(g, to_field(g, f), to_field(g, h)));
    });
    m.def("frac_laplacian",
          [](const Grid& g, const Array& f, double s) { return to_array(g, frac_laplacian(g, to_field(g, f), s).values); },
          py::arg("grid"), py::arg("f"), py::arg("s"));
    m.def("frac_seminorm",
          [](const Grid& g, const Array& f, double s, double p) { return frac_seminorm(g, to_field(g, f), s, p); },
          py::arg("grid"), py::arg("f"), py::arg("s"), py::arg("p"));
    m.def("scaling_check", &scaling_check, py::arg("grid"), py::arg("f"), py::arg("s"), py::arg("p"), py::arg("lam"));

    // Rates
    m.def("f_alpha", &f_alpha, py::arg("tau"), py::arg("alpha"));
    m.def("fit_decay",
          [](const std::vector<double>& tau, const std::vector<double>& values, std::pair<double, double> window,
             const std::string& modifier, std::optional<double> floor) {
              return fit_to_dict(fit_decay(tau, values, window, modifier_from_string(modifier), floor));
          },
          py::arg("tau"), py::arg("values"), py::arg("window"), py::arg("modifier") = "none",
          py::arg("floor") = py::none());
    m.def("predict_e1",
          [](int dim, const PotentialSpec& W) {
              const auto p = predict_e1(dim, W, potential_norms(W, dim, default_p_list()));
              return py::dict(py::arg("exponent") = p.exponent, py::arg("modifier") = to_string(p.modifier),
                              py::arg("hypothesis") = p.hypothesis);
          },
          py::arg("dim"), py::arg("potential"));

    // Solver
    m.def("simulate",
          [](const Grid& g, const Array& rho0, const PotentialSpec& W, double end_time, double output_every,
             const std::string& frame, const std::string& scheme, double cfl, int kernel_refresh, int subsamples,
             const std::string& drift, const std::vector<double>& holder) {
              const auto cfg = solver_config(frame, scheme, end_time, output_every, cfl, kernel_refresh, subsamples, drift);
              RunOptions o;
              o.diagnostics.holder_alphas = holder;
              RunResult r;
              {
                  py::gil_scoped_release release;
                  r = run(density(g, rho0), W, cfg, o);
              }
              py::dict d;
              d["completed"] = r.completed;
              d["error"] = r.error;
              d["steps"] = r.steps;
              d["max_mass_drift"] = r.max_mass_drift;
              d["records"] = records_to_columns(r.records, holder);
              return d;
          },
          py::arg("grid"), py::arg("rho0"), py::arg("potential") = PotentialSpec{}, py::arg("end_time") = 1.0,
          py::arg("output_every") = 0.1, py::arg("frame") = "rescaled", py::arg("scheme") = "fv_ssprk2",
          py::arg("cfl") = 0.4, py::arg("kernel_refresh") = 1, py::arg("subsamples") = 8,
          py::arg("drift") = "potential_difference", py::arg("holder_alphas") = std::vector<double>{},
          "Runs the solver and returns diagnostics columns as arrays.");

    py::class_<Simulation>(m, "Simulation")
        .def(py::init([](const Grid& g, const Array& rho0, const PotentialSpec& W, const std::string& frame,
                         const std::string& scheme, double cfl, const std::string& drift) {
                 auto cfg = solver_config(frame, scheme, 1.0, 1.0, cfl, 1, 8, drift);
                 return std::make_unique<Simulation>(density(g, rho0), W, cfg);
             }),
             py::arg("grid"), py::arg("rho0"), py::arg("potential") = PotentialSpec{}, py::arg("frame") = "rescaled",
             py::arg("scheme") = "fv_ssprk2", py::arg("cfl") = 0.4, py::arg("drift") = "potential_difference")
        .def_property_readonly("time", &Simulation::time)
        .def_property_readonly("steps", &Simulation::steps)
        .def_property_readonly("density",
                               [](const Simulation& s) { return to_array(s.density().grid(), s.density().values()); })
        .def("step", &Simulation::step, py::arg("max_step"), "Advances by at most max_step; returns the accepted dt.")
        .def("advance",
             [](Simulation& s, double until) {
                 py::gil_scoped_release release;
                 while (s.time() < until - 1e-12) s.step(until - s.time());
                 return s.time();
             },
             py::arg("until"));

    // Experiments
    m.def("preset_names", &preset_names);
    m.def("preset_config", &preset_config, py::arg("name"));
    m.def("run_experiment",
          [](const py::dict& config, bool write_outputs) {
              const auto cfg = build_config(config_from(config));
              ExperimentOptions o;
              o.write_outputs = write_outputs;
              ExperimentResult r;
              {
                  py::gil_scoped_release release;
                  r = run_experiment(cfg, o);
              }
              py::dict fits;
              for (const auto& [k, v] : r.fits) fits[py::str(k)] = v ? py::object(fit_to_dict(*v)) : py::object(py::none());
              py::list report;
              for (const auto& row : r.report.rows) {
                  report.append(py::dict(py::arg("quantity") = row.quantity,
                                         py::arg("predicted") = row.predicted_exponent,
                                         py::arg("fitted") = row.fitted_slope, py::arg("pass") = row.pass,
                                         py::arg("profile_swap_flag") = row.profile_swap_flag,
                                         py::arg("note") = row.note));
              }
              py::list inv;
              for (const auto& i : r.invariants) {
                  inv.append(py::dict(py::arg("name") = i.name, py::arg("pass") = i.pass, py::arg("worst") = i.worst,
                                      py::arg("tolerance") = i.tolerance, py::arg("detail") = i.detail));
              }
              py::dict d;
              d["ok"] = r.ok();
              d["completed"] = r.run.completed;
              d["hypothesis"] = r.report.hypothesis;
              d["fits"] = fits;
              d["theorem_report"] = report;
              d["invariants"] = inv;
              d["records"] = records_to_columns(r.run.records, cfg.holder_alphas);
              d["out_dir"] = cfg.out_dir;
              return d;
          },
          py::arg("config"), py::arg("write_outputs") = false,
          "Runs a flat 'section.key' config (e.g. from preset_config) and returns fits, report and invariants.");

    m.def("check_suite_names", &check_suite_names);
    m.def("run_check_suite",
          [](const std::string& name, std::uint64_t seed) {
              std::vector<py::tuple> out;
              for (const auto& l : run_check_suite(name, seed)) out.push_back(py::make_tuple(l.name, l.pass, l.detail));
              return out;
          },
          py::arg("name"), py::arg("seed") = 0, "List of (name, pass, detail).");
}
