#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "photonq/fock.hpp"
#include "photonq/lqg.hpp"
#include "photonq/netlist.hpp"
#include "photonq/nonlin.hpp"
#include "photonq/runner.hpp"

namespace py = pybind11;
using namespace photonq;

namespace {

Drive drive_from_list(int n_ports, const std::vector<std::tuple<int, cxd, double>>& terms) {
    Drive d = Drive::none(n_ports);
    for (const auto& [port, amp, omega] : terms) d.add(port, amp, omega);
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "photonq: doubled-up linear quantum circuits and truncated-Wigner simulation";

    py::class_<LinearSlhModel>(m, "LinearSlhModel")
        .def_readonly("n_modes", &LinearSlhModel::n_modes)
        .def_readonly("n_ports", &LinearSlhModel::n_ports)
        .def_readonly("S", &LinearSlhModel::S)
        .def_readonly("Lambda_minus", &LinearSlhModel::Lambda_minus)
        .def_readonly("Lambda_plus", &LinearSlhModel::Lambda_plus)
        .def_readonly("R_minus", &LinearSlhModel::R_minus)
        .def_readonly("R_plus", &LinearSlhModel::R_plus)
        .def_readonly("kind", &LinearSlhModel::kind);

    py::class_<AbcdModel>(m, "AbcdModel")
        .def_readonly("n_modes", &AbcdModel::n_modes)
        .def_readonly("n_ports", &AbcdModel::n_ports)
        .def_readonly("n_aux", &AbcdModel::n_aux)
        .def_readonly("A", &AbcdModel::A)
        .def_readonly("B", &AbcdModel::B)
        .def_readonly("C", &AbcdModel::C)
        .def_readonly("D", &AbcdModel::D)
        .def_readonly("a", &AbcdModel::a)
        .def_readonly("c", &AbcdModel::c)
        .def_readonly("F", &AbcdModel::F)
        .def("structure_residual", &AbcdModel::structure_residual);

    py::class_<RealizabilityReport>(m, "RealizabilityReport")
        .def_readonly("residual_commutator", &RealizabilityReport::residual_commutator)
        .def_readonly("residual_io", &RealizabilityReport::residual_io)
        .def_readonly("residual_scatter", &RealizabilityReport::residual_scatter)
        .def_readonly("passed", &RealizabilityReport::passed);

    py::class_<StaticScatter>(m, "StaticScatter")
        .def_readonly("T0", &StaticScatter::T0)
        .def_readonly("noise_map", &StaticScatter::noise_map)
        .def_readonly("offset", &StaticScatter::offset);

    m.def("make_component", &make_component, py::arg("kind"), py::arg("params"));
    m.def("to_abcd", &to_abcd);
    m.def("check_realizable", &check_realizable, py::arg("model"), py::arg("tol") = 1e-8);
    m.def("concatenate", &concatenate);
    m.def("series", &series);
    m.def("feedback", &feedback, py::arg("model"), py::arg("out_port"), py::arg("in_port"));
    m.def("adiabatic_eliminate", &adiabatic_eliminate);
    m.def("component_presets", [] { return component_presets(); });

    py::class_<GaussianState>(m, "GaussianState")
        .def_readonly("mu", &GaussianState::mu)
        .def_readonly("sigma", &GaussianState::sigma);

    py::class_<InputCovariance>(m, "InputCovariance")
        .def_static("vacuum", &InputCovariance::vacuum)
        .def_static("thermal", &InputCovariance::thermal, py::arg("n_ports"),
                    py::arg("port_index"), py::arg("kn"));

    py::class_<SqueezingPoint>(m, "SqueezingPoint")
        .def_readonly("omega", &SqueezingPoint::omega)
        .def_readonly("N", &SqueezingPoint::N)
        .def_readonly("M", &SqueezingPoint::M)
        .def_readonly("S_plus", &SqueezingPoint::S_plus)
        .def_readonly("S_minus", &SqueezingPoint::S_minus);

    m.def(
        "steady_covariance",
        [](const AbcdModel& g, const InputCovariance& in) { return steady_covariance(g, in); },
        py::arg("model"), py::arg("input_cov") = InputCovariance::vacuum());
    m.def(
        "transfer_function",
        [](const AbcdModel& g, double w) {
            auto tf = transfer_function(g, w);
            return py::make_tuple(tf.T, tf.N);
        },
        py::arg("model"), py::arg("omega"));
    m.def(
        "amplitude_gain",
        [](const AbcdModel& g, double w) {
            auto p = amplitude_gain(g, w);
            return py::make_tuple(p.g_max, p.g_min);
        },
        py::arg("model"), py::arg("omega"));
    m.def(
        "squeezing_spectrum",
        [](const AbcdModel& g, double w, int port) { return squeezing_spectrum(g, w, port); },
        py::arg("model"), py::arg("omega"), py::arg("port") = 1);
    m.def("photon_number", &photon_number, py::arg("state"), py::arg("mode") = 0);

    py::class_<WignerComponent>(m, "WignerComponent")
        .def_readonly("kind", &WignerComponent::kind)
        .def_readonly("n_fields", &WignerComponent::n_fields)
        .def_readonly("n_real", &WignerComponent::n_real)
        .def_readonly("n_ports", &WignerComponent::n_ports)
        .def_property_readonly("noise_channels", [](const WignerComponent& c) {
            std::vector<std::string> names;
            for (const auto& ch : c.channels) names.push_back(ch.name);
            return names;
        });

    m.def("make_sde", &make_sde, py::arg("kind"), py::arg("params"));
    m.def("latch_build", &latch_build, py::arg("inner_kind"), py::arg("inner_params"),
          py::arg("kappa_plus"), py::arg("kappa_minus"));

    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("dt", &Trajectory::dt)
        .def_readonly("n_steps", &Trajectory::n_steps)
        .def_readonly("n_fields", &Trajectory::n_fields)
        .def("n_saved", &Trajectory::n_saved)
        .def("field", &Trajectory::field)
        .def("real_var", &Trajectory::real_var)
        .def_readonly("outputs", &Trajectory::outputs);

    m.def(
        "integrate_trajectory",
        [](const WignerComponent& c,
           const std::vector<std::tuple<int, cxd, double>>& drive, double dt, double T,
           std::uint64_t seed, int save_stride) {
            TrajectoryOptions opts;
            opts.save_stride = save_stride;
            return integrate_trajectory(c, drive_from_list(c.n_ports, drive), dt, T, seed,
                                        opts);
        },
        py::arg("component"), py::arg("drive"), py::arg("dt"), py::arg("T"),
        py::arg("seed"), py::arg("save_stride") = 1);

    m.def("homodyne_record", &homodyne_record, py::arg("trajectory"), py::arg("port") = 1,
          py::arg("theta") = 0.0);
    m.def("heterodyne_record", &heterodyne_record, py::arg("trajectory"),
          py::arg("port") = 1);
    m.def(
        "power_spectrum",
        [](const std::vector<double>& x, double dt, int segment) {
            auto p = power_spectrum(x, dt, segment);
            return py::make_tuple(p.omega, p.power);
        },
        py::arg("signal"), py::arg("dt"), py::arg("segment") = 0);

    py::class_<WignerState>(m, "WignerState")
        .def(py::init([](const cvec& f, const rvec& r) {
                 return WignerState{f, r};
             }),
             py::arg("fields"), py::arg("reals"))
        .def_readonly("f", &WignerState::f)
        .def_readonly("r", &WignerState::r);

    m.def(
        "linearize",
        [](const WignerComponent& c, const WignerState& fp,
           const std::vector<std::tuple<int, cxd, double>>& drive) {
            return linearize(c, fp, drive_from_list(c.n_ports, drive));
        },
        py::arg("component"), py::arg("fixed_point"), py::arg("drive"));

    py::enum_<Stability>(m, "Stability")
        .value("stable_node", Stability::stable_node)
        .value("stable_spiral", Stability::stable_spiral)
        .value("saddle", Stability::saddle)
        .value("unstable", Stability::unstable)
        .value("hopf_unstable", Stability::hopf_unstable);

    py::class_<FixedPoint>(m, "FixedPoint")
        .def_readonly("state", &FixedPoint::state)
        .def_readonly("classification", &FixedPoint::classification)
        .def_readonly("eigenvalues", &FixedPoint::eigenvalues)
        .def_readonly("drift_residual", &FixedPoint::drift_residual);

    m.def(
        "fixed_points",
        [](const WignerComponent& c,
           const std::vector<std::tuple<int, cxd, double>>& drive) {
            return fixed_points(c, drive_from_list(c.n_ports, drive)).points;
        },
        py::arg("component"), py::arg("drive"));

    m.def("hopf_indicator", [](const cmat& A) {
        auto rep = hopf_indicator(A);
        return py::make_tuple(rep.det, rep.L, rep.classification);
    });

    py::class_<LimitCycle>(m, "LimitCycle")
        .def_readonly("omega_c", &LimitCycle::omega_c)
        .def_readonly("amplitude", &LimitCycle::amplitude)
        .def_readonly("mu_xi", &LimitCycle::mu_xi)
        .def_readonly("D_xi", &LimitCycle::D_xi);

    m.def(
        "limit_cycle",
        [](const WignerComponent& c,
           const std::vector<std::tuple<int, cxd, double>>& drive, double dt,
           double settle_T, int ensemble, int threads) {
            LimitCycleOptions opts;
            opts.dt = dt;
            opts.settle_T = settle_T;
            opts.ensemble = ensemble;
            opts.threads = threads;
            return limit_cycle(c, drive_from_list(c.n_ports, drive), opts);
        },
        py::arg("component"), py::arg("drive"), py::arg("dt") = 2e-4,
        py::arg("settle_T") = 250.0, py::arg("ensemble") = 128, py::arg("threads") = 1);

    m.def(
        "switching_lifetime",
        [](const std::vector<double>& record, double dt) {
            auto fit = switching_lifetime(record, dt);
            return py::make_tuple(fit.tau_sw, fit.r_squared, fit.n_flips);
        },
        py::arg("record"), py::arg("dt"));

    py::class_<LqgProblem>(m, "LqgProblem")
        .def_readonly("sense_port", &LqgProblem::sense_port)
        .def_readonly("feed_port", &LqgProblem::feed_port);
    py::class_<BuiltController>(m, "BuiltController")
        .def_readonly("model", &BuiltController::model);
    py::class_<OptimizeResult>(m, "OptimizeResult")
        .def_readonly("params", &OptimizeResult::params)
        .def_readonly("cost", &OptimizeResult::cost)
        .def_readonly("converged", &OptimizeResult::converged);

    m.def("make_cavity_problem", &make_cavity_problem, py::arg("k1"), py::arg("k2"),
          py::arg("k3"), py::arg("Delta"), py::arg("kn"));
    m.def("make_mems_problem", &make_mems_problem, py::arg("Omega"), py::arg("Q"),
          py::arg("km"), py::arg("kn"));
    m.def(
        "lqg_cost",
        [](const LqgProblem& p, const std::string& family, const rvec& params) {
            ControllerSpec spec;
            spec.family = family;
            return lqg_cost(p, build_controller(spec, params));
        },
        py::arg("problem"), py::arg("family"), py::arg("params"));
    m.def("open_loop_cost", &open_loop_cost);
    m.def(
        "optimize_coherent",
        [](const LqgProblem& p, const std::string& family, bool with_coupling,
           const std::vector<rvec>& seeds, int threads) {
            ControllerSpec spec;
            spec.family = family;
            spec.optimize_plant_coupling = with_coupling;
            return optimize_coherent_multistart(p, spec, seeds, {}, threads);
        },
        py::arg("problem"), py::arg("family"), py::arg("optimize_plant_coupling"),
        py::arg("seeds"), py::arg("threads") = 1);
    m.def("analytic_cavity_benchmarks",
          [](double k1_, double k2_, double k3_, double kn, double eta, double Delta) {
              auto b = analytic_cavity_benchmarks(k1_, k2_, k3_, kn, eta, Delta);
              py::dict d;
              d["no_control"] = b.no_control;
              d["trivial"] = b.trivial;
              d["heterodyne"] = b.heterodyne;
              d["linear_amplifier"] = b.linear_amplifier;
              d["squeezer"] = b.squeezer;
              d["kn_min"] = b.kn_min;
              return d;
          },
          py::arg("k1"), py::arg("k2"), py::arg("k3"), py::arg("kn"), py::arg("eta"),
          py::arg("Delta") = 0.0);

    py::class_<fock::DensityMatrix>(m, "DensityMatrix")
        .def_static("vacuum", &fock::DensityMatrix::vacuum)
        .def_static("coherent", &fock::DensityMatrix::coherent)
        .def_static("fock_state", &fock::DensityMatrix::fock_state)
        .def_readonly("dim", &fock::DensityMatrix::dim)
        .def_readonly("rho", &fock::DensityMatrix::rho)
        .def("expect", &fock::DensityMatrix::expect);
    py::class_<fock::Lindblad>(m, "Lindblad")
        .def_readonly("dim", &fock::Lindblad::dim)
        .def("superoperator", &fock::Lindblad::superoperator);
    m.def("fock_word", &fock::word, py::arg("dim"), py::arg("word"));
    m.def("build_lindblad", &fock::build_lindblad, py::arg("h_terms"), py::arg("l_terms"),
          py::arg("dim"));
    m.def("evolve_rho", &fock::evolve_rho);
    m.def("fock_steady_state", [](const fock::Lindblad& gen) {
        auto out = fock::steady_state(gen);
        return py::make_tuple(out.rho, out.residual, out.null_rank);
    });
    m.def("wigner_point", &fock::wigner_point);
    m.def(
        "compare_wigner_oracle",
        [](const WignerComponent& c, cxd drive, double dt, double T, int n_traj, int dim,
           cxd alpha0) {
            fock::CompareOptions opts;
            opts.dt = dt;
            opts.T = T;
            opts.n_traj = n_traj;
            opts.dim = dim;
            opts.alpha0 = alpha0;
            auto rep = fock::compare_wigner_oracle(c, drive, opts);
            return py::make_tuple(rep.passed, rep.max_abs_z, rep.max_rel_err);
        },
        py::arg("component"), py::arg("drive"), py::arg("dt") = 1e-3, py::arg("T") = 3.0,
        py::arg("n_traj") = 4000, py::arg("dim") = 40, py::arg("alpha0") = cxd(0, 0));

    m.def("parse_expression_canonical", [](const std::string& text) {
        return print_expression(*parse_expression(text));
    });
    m.def(
        "run_netlist",
        [](const std::string& netlist_json, const std::string& out_dir, std::uint64_t seed,
           int threads) {
            auto nl = parse_netlist(netlist_json);
            RunnerOptions opts;
            opts.out_dir = out_dir;
            opts.seed = seed;
            opts.seed_given = true;
            opts.threads = threads;
            auto outcome = run_netlist(nl, opts);
            return py::make_tuple(outcome.exit_code, outcome.message, outcome.artifacts);
        },
        py::arg("netlist_json"), py::arg("out_dir"), py::arg("seed") = 0,
        py::arg("threads") = 1);
}
