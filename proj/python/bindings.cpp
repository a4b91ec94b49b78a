#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <numbers>

#include "dugks/benchmarks.hpp"
#include "dugks/checkpoint.hpp"
#include "dugks/error.hpp"
#include "dugks/harness.hpp"
#include "dugks/scheme.hpp"

namespace py = pybind11;
using namespace dugks;

namespace {

py::array_t<double> to_array(std::span<const double> v)
{
    py::array_t<double> out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

// A Taylor vortex (or 1-D) field together with the stepper that advances it.
class Simulation {
public:
    Simulation(int n, double epsilon, const std::string& scheme, double eta, double tau)
        : model_(epsilon, tau),
          field_(UniformPeriodicGrid(2, n), build_d2q9(0.5)),
          config_(model_, eta, parse_reconstruction(scheme), field_.grid(), field_.set()),
          stepper_(config_)
    {
        const double k = 2.0 * std::numbers::pi;
        spec_ = make_taylor_vortex(k, k, 0.01, 1.0, 0.5, model_);
        init_ce(field_, taylor_initial_condition(spec_), model_);
    }

    void advance(std::size_t steps)
    {
        for (std::size_t i = 0; i < steps; ++i) {
            stepper_.advance(field_);
        }
    }

    double dt() const { return config_.dt(); }
    double time() const { return field_.time(); }
    std::size_t steps() const { return field_.step_count(); }
    double t_c() const { return t_half(spec_); }
    double l2_error() const { return relative_l2_error(field_, spec_, field_.time()); }
    double max_u() const { return max_velocity(field_); }

    // (n, n, 2) array of cell velocities, indexed [k][i].
    py::array_t<double> velocity() const
    {
        const int n = field_.grid().n();
        py::array_t<double> out({n, n, 2});
        auto v = out.mutable_unchecked<3>();
        for (int k = 0; k < n; ++k) {
            for (int i = 0; i < n; ++i) {
                const Vec2 u = cell_velocity(field_, field_.grid().index(i, k));
                v(k, i, 0) = u[0];
                v(k, i, 1) = u[1];
            }
        }
        return out;
    }

    py::array_t<double> values() const { return to_array(field_.values()); }

    void save(const std::filesystem::path& path) const { checkpoint_write(field_, model_, path); }

    void load(const std::filesystem::path& path)
    {
        auto cp = checkpoint_read(path);
        if (cp.field.grid().n() != field_.grid().n() || cp.field.set().kind != field_.set().kind) {
            throw ConfigError("checkpoint does not match this simulation's grid");
        }
        std::copy(cp.field.values().begin(), cp.field.values().end(), field_.values().begin());
        field_.set_time(cp.field.time());
        field_.set_step_count(cp.field.step_count());
    }

private:
    RelaxationModel model_;
    DistributionField field_;
    SchemeConfig config_;
    Stepper stepper_;
    TaylorVortexSpec spec_{};
};

py::dict report_dict(const CaseReport& r)
{
    py::dict d;
    d["id"] = r.id;
    d["scheme"] = std::string(to_string(r.scheme));
    d["epsilon"] = r.epsilon;
    d["n"] = r.n;
    d["eta"] = r.eta;
    d["dx"] = r.dx;
    d["dt"] = r.dt;
    d["delta_x"] = r.delta_x;
    d["delta_t"] = r.delta_t;
    d["steps"] = r.steps;
    d["final_time"] = r.final_time;
    d["error_time"] = r.error_time;
    d["l2_error"] = r.l2_error;
    d["nu_fit"] = r.nu_fit;
    d["nu_expected"] = r.nu_expected;
    d["mass_drift"] = r.mass_drift;
    d["momentum_drift"] = r.momentum_drift;
    d["conservation_ok"] = r.conservation_ok;
    d["max_velocity"] = r.max_velocity;
    d["wall_time"] = r.wall_time;
    d["completed"] = r.completed;
    d["status"] = r.status;
    return d;
}

}  // namespace

PYBIND11_MODULE(_dugks, m)
{
    m.doc() = "DUGKS solver for the BGK equation with a Taylor vortex verification harness.";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<NonPhysicalFieldError>(m, "NonPhysicalFieldError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());
    py::register_exception<DegenerateError>(m, "DegenerateError", base.ptr());
    py::register_exception<CheckpointError>(m, "CheckpointError", base.ptr());

    py::class_<DiscreteVelocitySet>(m, "VelocitySet")
        .def_property_readonly("name", [](const DiscreteVelocitySet& s) { return std::string(s.name()); })
        .def_readonly("dim", &DiscreteVelocitySet::dim)
        .def_readonly("rt0", &DiscreteVelocitySet::rt0)
        .def_readonly("xi_max", &DiscreteVelocitySet::xi_max)
        .def_property_readonly("weights", [](const DiscreteVelocitySet& s) { return to_array(s.weights); })
        .def_property_readonly("velocities", [](const DiscreteVelocitySet& s) {
            py::array_t<double> out({static_cast<py::ssize_t>(s.size()), py::ssize_t{2}});
            auto v = out.mutable_unchecked<2>();
            for (std::size_t q = 0; q < s.size(); ++q) {
                v(q, 0) = s.velocities[q][0];
                v(q, 1) = s.velocities[q][1];
            }
            return out;
        })
        .def("__len__", &DiscreteVelocitySet::size);

    m.def("d2q9", &build_d2q9, py::arg("rt0") = 0.5);
    m.def("d1q3", &build_d1q3, py::arg("rt0") = 0.5);

    m.def(
        "equilibrium",
        [](const DiscreteVelocitySet& s, double rho, double ux, double uy) {
            return to_array(equilibrium(s, MacroState{rho, {ux, uy}}));
        },
        py::arg("set"), py::arg("rho"), py::arg("ux"), py::arg("uy") = 0.0,
        "Low-Mach equilibrium populations.");

    m.def(
        "compute_dt",
        [](int n, double eta, double rt0) { return compute_dt(UniformPeriodicGrid(2, n), build_d2q9(rt0), eta); },
        py::arg("n"), py::arg("eta") = 0.5, py::arg("rt0") = 0.5, "dt = eta * dx / xi_max on an n x n grid.");

    m.def(
        "fit_decay_viscosity",
        [](const std::vector<double>& t, const std::vector<double>& max_u, double alpha) {
            if (t.size() != max_u.size()) {
                throw ConfigError("t and max_u must have the same length");
            }
            std::vector<DecaySample> s;
            for (std::size_t i = 0; i < t.size(); ++i) {
                s.push_back({t[i], max_u[i]});
            }
            return fit_decay_viscosity(s, alpha);
        },
        py::arg("t"), py::arg("max_u"), py::arg("alpha"));

    m.def(
        "observed_order",
        [](const std::vector<double>& dx, const std::vector<double>& err) {
            if (dx.size() != err.size()) {
                throw ConfigError("dx and errors must have the same length");
            }
            std::vector<ConvergenceRow> rows;
            for (std::size_t i = 0; i < dx.size(); ++i) {
                rows.push_back({0, dx[i], err[i]});
            }
            return observed_order(rows);
        },
        py::arg("dx"), py::arg("errors"));

    py::class_<Simulation>(m, "Simulation")
        .def(py::init<int, double, const std::string&, double, double>(), py::arg("n"), py::arg("epsilon"),
             py::arg("scheme") = "dugks", py::arg("eta") = 0.5, py::arg("tau") = 1.0)
        .def("advance", &Simulation::advance, py::arg("steps") = 1, py::call_guard<py::gil_scoped_release>())
        .def_property_readonly("dt", &Simulation::dt)
        .def_property_readonly("time", &Simulation::time)
        .def_property_readonly("steps", &Simulation::steps)
        .def_property_readonly("t_c", &Simulation::t_c)
        .def("l2_error", &Simulation::l2_error)
        .def("max_velocity", &Simulation::max_u)
        .def("velocity", &Simulation::velocity)
        .def("values", &Simulation::values)
        .def("save", &Simulation::save, py::arg("path"))
        .def("load", &Simulation::load, py::arg("path"));

    py::class_<RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def_static("from_json", &parse_run_config, py::arg("text"))
        .def_static("load", &load_run_config, py::arg("path"))
        .def_readwrite("id", &RunConfig::id)
        .def_property(
            "scheme", [](const RunConfig& c) { return std::string(to_string(c.scheme)); },
            [](RunConfig& c, const std::string& s) { c.scheme = parse_reconstruction(s); })
        .def_readwrite("epsilon", &RunConfig::epsilon)
        .def_readwrite("tau", &RunConfig::tau)
        .def_property(
            "mesh", [](const RunConfig& c) { return c.mesh; },
            [](RunConfig& c, std::optional<int> n) {
                c.mesh = n;
                c.mesh_exponent = n ? std::nullopt : std::optional<double>(0.5);
            })
        .def_readwrite("eta", &RunConfig::eta)
        .def_readwrite("end_time_tc", &RunConfig::end_time_tc)
        .def_readwrite("steps", &RunConfig::steps)
        .def_readwrite("output_dir", &RunConfig::output_dir)
        .def_readwrite("write_outputs", &RunConfig::write_outputs)
        .def_readwrite("plot", &RunConfig::plot)
        .def("resolved_mesh", &RunConfig::resolved_mesh)
        .def("resolved_id", &RunConfig::resolved_id)
        .def("validate", &RunConfig::validate);

    m.def(
        "run_case",
        [](const RunConfig& c) {
            CaseReport r;
            {
                py::gil_scoped_release release;
                r = run_case(c);
            }
            return report_dict(r);
        },
        py::arg("config"));

    m.def(
        "run_sweep",
        [](const std::vector<RunConfig>& configs, const std::filesystem::path& out, int jobs) {
            SweepResult r;
            {
                py::gil_scoped_release release;
                r = run_sweep(configs, out, jobs);
            }
            py::list rows;
            for (const auto& rep : r.reports) {
                rows.append(report_dict(rep));
            }
            return py::make_tuple(rows, r.summary_path);
        },
        py::arg("configs"), py::arg("output_dir"), py::arg("jobs") = 1);

    m.def("load_sweep_config", &load_sweep_config, py::arg("path"));

    m.def(
        "run_convergence",
        [](const RunConfig& base, const std::vector<int>& levels, const std::filesystem::path& out) {
            ConvergenceResult r;
            {
                py::gil_scoped_release release;
                r = run_convergence(base, levels, out);
            }
            py::list errors;
            for (const auto& row : r.rows) {
                errors.append(py::make_tuple(row.n, row.dx, row.l2_error));
            }
            py::dict d;
            d["rows"] = errors;
            d["order"] = r.order;
            d["monotone"] = r.monotone;
            return d;
        },
        py::arg("base"), py::arg("levels"), py::arg("output_dir") = std::filesystem::path{});
}
