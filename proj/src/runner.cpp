#include "photonq/runner.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "photonq/fock.hpp"
#include "photonq/gaussian.hpp"
#include "photonq/lqg.hpp"
#include "photonq/nonlin.hpp"
#include "photonq/rng.hpp"

namespace photonq {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

double jget(const json& j, const std::string& key, double dflt) {
    return j.contains(key) ? j[key].get<double>() : dflt;
}

InputCovariance cov_from_json(const json& cfg, int n_ports) {
    InputCovariance in;
    in.ports.resize(n_ports);
    if (cfg.contains("thermal"))
        for (const auto& t : cfg["thermal"]) {
            const int port = t.at("port").get<int>();
            if (port < 1 || port > n_ports)
                throw std::invalid_argument("thermal port out of range");
            in.ports[port - 1].thermal_kn = t.at("kn").get<double>();
        }
    if (cfg.contains("squeezed"))
        for (const auto& t : cfg["squeezed"]) {
            const int port = t.at("port").get<int>();
            in.ports.at(port - 1).squeeze_m =
                cxd(jget(t, "m_re", 0.0), jget(t, "m_im", 0.0));
        }
    return in;
}

Drive drive_from_json(const json& cfg, int n_ports) {
    Drive d = Drive::none(n_ports);
    if (cfg.contains("drive"))
        for (const auto& t : cfg["drive"]) {
            const int port = t.at("port").get<int>() - 1;
            d.add(port, cxd(jget(t, "re", 0.0), jget(t, "im", 0.0)), jget(t, "omega", 0.0));
        }
    return d;
}

std::string csv_cell(double v) { return format_g17(v); }

struct RunContext {
    const Netlist& nl;
    const RunnerOptions& opts;
    json manifest_outputs = json::array();
    int index = 0;

    std::string path_for(const std::string& stem, const std::string& ext) const {
        return (fs::path(opts.out_dir) /
                ("run" + std::to_string(index) + "_" + stem + "." + ext))
            .string();
    }
};

void emit(RunContext& ctx, RunOutcome& out, const std::string& stem, const std::string& ext,
          const std::string& content) {
    const std::string path = ctx.path_for(stem, ext);
    write_atomic(path, content);
    out.artifacts.push_back(path);
    ctx.manifest_outputs.push_back(path);
}

// ---------------------------------------------------------------- run modes

void run_steady(RunContext& ctx, const json& cfg, RunOutcome& out) {
    AbcdModel g = build_linear_circuit(ctx.nl);
    auto st = steady_covariance(g, cov_from_json(cfg, g.n_ports));
    json j;
    j["n_modes"] = g.n_modes;
    double total = 0;
    json per = json::array();
    for (int i = 0; i < g.n_modes; ++i) {
        const double n = photon_number(st, i);
        per.push_back(n);
        total += n;
    }
    j["photon_number"] = g.n_modes == 1 ? json(total) : json(per);
    j["photon_number_total"] = total;
    emit(ctx, out, "steady", "json", j.dump(2) + "\n");
    std::string csv = "i,j,re_sigma,im_sigma\n";
    for (int i = 0; i < st.sigma.rows(); ++i)
        for (int jj = 0; jj < st.sigma.cols(); ++jj)
            csv += std::to_string(i) + "," + std::to_string(jj) + "," +
                   csv_cell(st.sigma(i, jj).real()) + "," +
                   csv_cell(st.sigma(i, jj).imag()) + "\n";
    emit(ctx, out, "sigma", "csv", csv);
}

std::vector<double> omega_grid(const json& cfg) {
    const double w0 = jget(cfg, "omega_min", -2.0), w1 = jget(cfg, "omega_max", 2.0);
    const int n = int(jget(cfg, "n_omega", 101));
    std::vector<double> grid(n);
    for (int i = 0; i < n; ++i) grid[i] = w0 + (w1 - w0) * i / std::max(1, n - 1);
    return grid;
}

void run_spectrum(RunContext& ctx, const json& cfg, RunOutcome& out) {
    AbcdModel g = build_linear_circuit(ctx.nl);
    const int port = int(jget(cfg, "port", 1));
    std::string csv = "omega,S_plus,S_minus,N,M_re,M_im\n";
    for (double w : omega_grid(cfg)) {
        auto p = squeezing_spectrum(g, w, port);
        csv += csv_cell(w) + "," + csv_cell(p.S_plus) + "," + csv_cell(p.S_minus) + "," +
               csv_cell(p.N) + "," + csv_cell(p.M.real()) + "," + csv_cell(p.M.imag()) +
               "\n";
    }
    emit(ctx, out, "spectrum", "csv", csv);
}

void run_gain(RunContext& ctx, const json& cfg, RunOutcome& out) {
    AbcdModel g = build_linear_circuit(ctx.nl);
    std::string csv = "omega,g_max,g_min\n";
    for (double w : omega_grid(cfg)) {
        auto p = amplitude_gain(g, w);
        csv += csv_cell(w) + "," + csv_cell(p.g_max) + "," + csv_cell(p.g_min) + "\n";
    }
    emit(ctx, out, "gain", "csv", csv);
}

void run_trajectory(RunContext& ctx, const json& cfg, RunOutcome& out,
                    std::uint64_t seed) {
    auto c = build_nonlinear_component(ctx.nl);
    const double dt = jget(cfg, "dt", 1e-3), T = jget(cfg, "T", 100.0);
    TrajectoryOptions topt;
    topt.save_stride = int(jget(cfg, "save_stride", 1));
    auto tr = integrate_trajectory(c, drive_from_json(cfg, c.n_ports), dt, T, seed, topt);
    std::string csv = "t";
    for (int i = 0; i < c.n_fields; ++i)
        csv += ",re_a" + std::to_string(i + 1) + ",im_a" + std::to_string(i + 1);
    for (int i = 0; i < c.n_real; ++i) csv += ",n" + std::to_string(i + 1);
    for (int p = 0; p < c.n_ports; ++p)
        csv += ",re_dout" + std::to_string(p + 1) + ",im_dout" + std::to_string(p + 1);
    csv += "\n";
    for (int s = 0; s < tr.n_saved(); ++s) {
        csv += csv_cell(s * topt.save_stride * dt);
        for (int i = 0; i < c.n_fields; ++i) {
            csv += "," + csv_cell(tr.field(s, i).real());
            csv += "," + csv_cell(tr.field(s, i).imag());
        }
        for (int i = 0; i < c.n_real; ++i) csv += "," + csv_cell(tr.real_var(s, i));
        const int step = std::min(tr.n_steps - 1, s * topt.save_stride);
        for (int p = 0; p < c.n_ports; ++p) {
            const cxd o = tr.outputs.empty() ? cxd(0) : tr.outputs[size_t(step) * c.n_ports + p];
            csv += "," + csv_cell(o.real()) + "," + csv_cell(o.imag());
        }
        csv += "\n";
    }
    emit(ctx, out, "trajectory", "csv", csv);
}

void run_ensemble(RunContext& ctx, const json& cfg, RunOutcome& out, std::uint64_t seed) {
    auto c = build_nonlinear_component(ctx.nl);
    const double dt = jget(cfg, "dt", 1e-3), T = jget(cfg, "T", 50.0);
    const int n_traj = int(jget(cfg, "n_traj", 1000));
    EnsembleOptions eo;
    eo.threads = ctx.opts.threads;
    eo.save_stride = int(jget(cfg, "save_stride", 16));
    auto st = ensemble_stats(c, drive_from_json(cfg, c.n_ports), dt, T, n_traj, seed, eo);
    std::string csv = "t";
    for (int i = 0; i < c.n_fields; ++i) {
        const std::string k = std::to_string(i + 1);
        csv += ",re_mean_a" + k + ",im_mean_a" + k + ",se_a" + k + ",cov_aa" + k;
    }
    for (int i = 0; i < c.n_real; ++i) csv += ",mean_n" + std::to_string(i + 1);
    csv += "\n";
    for (size_t s = 0; s < st.times.size(); ++s) {
        csv += csv_cell(st.times[s]);
        for (int i = 0; i < c.n_fields; ++i) {
            csv += "," + csv_cell(st.mean(s, i).real()) + "," +
                   csv_cell(st.mean(s, i).imag()) + "," +
                   csv_cell(st.mean_se(s, i).real()) + "," +
                   csv_cell(st.cov[s](i, i).real());
        }
        for (int i = 0; i < c.n_real; ++i) csv += "," + csv_cell(st.real_mean(s, i));
        csv += "\n";
    }
    emit(ctx, out, "ensemble", "csv", csv);
}

void run_lqg_classical(RunContext& ctx, const json& cfg, RunOutcome& out) {
    (void)ctx.nl;
    const double Omega = jget(cfg, "Omega", 100.0), Q = jget(cfg, "Q", 1e4);
    const double km = jget(cfg, "km", Omega / Q), kn = jget(cfg, "kn", 1e6);
    double bestK = 0, best = 1e300;
    const double k0 = jget(cfg, "K_min", 1.0), k1 = jget(cfg, "K_max", 60.0);
    const int nK = int(jget(cfg, "n_K", 40));
    for (int i = 0; i < nK; ++i) {
        const double K = k0 * std::pow(k1 / k0, double(i) / (nK - 1));
        auto cp = make_mems_classical_plant(K, Omega, Q, km, kn);
        auto g = classical_lqg(cp);
        const double cost = classical_closed_loop_cost(cp, g);
        if (cost < best) {
            best = cost;
            bestK = K;
        }
    }
    json j;
    j["cost"] = best;
    j["K"] = bestK;
    j["phonon_reduction"] = kn / best;
    emit(ctx, out, "lqg_classical", "json", j.dump(2) + "\n");
}

void run_lqg_coherent(RunContext& ctx, const json& cfg, RunOutcome& out) {
    (void)ctx.nl;
    const std::string plant = cfg.value("plant", "ch11-cavity");
    ControllerSpec spec;
    spec.family = cfg.value("family", "static-squeezer");
    LqgProblem prob;
    if (plant == "ch11-cavity") {
        prob = make_cavity_problem(jget(cfg, "k1", 0.01), jget(cfg, "k2", 0.01),
                                   jget(cfg, "k3", 0.01), jget(cfg, "Delta", 0.1),
                                   jget(cfg, "kn", 5.0));
    } else if (plant == "ch11-mems") {
        prob = make_mems_problem(jget(cfg, "Omega", 100.0), jget(cfg, "Q", 1e4),
                                 jget(cfg, "km", 0.01), jget(cfg, "kn", 1e6));
        spec.optimize_plant_coupling = true;
    } else {
        throw std::invalid_argument("lqg-coherent: unknown plant " + plant);
    }
    std::vector<rvec> seeds;
    if (cfg.contains("seeds")) {
        for (const auto& s : cfg["seeds"]) {
            rvec v(s.size());
            for (size_t i = 0; i < s.size(); ++i) v(int(i)) = s[i].get<double>();
            seeds.push_back(v);
        }
    } else {
        seeds.push_back(rvec::Zero(spec.parameter_count()));
    }
    auto res = optimize_coherent_multistart(prob, spec, seeds, {}, ctx.opts.threads);
    json j;
    j["family"] = spec.family;
    j["cost"] = res.cost;
    j["params"] = json::array();
    for (int i = 0; i < res.params.size(); ++i) j["params"].push_back(res.params(i));
    j["converged"] = res.converged;
    emit(ctx, out, "lqg_coherent", "json", j.dump(2) + "\n");
    std::string csv = "iter,cost\n";
    for (size_t i = 0; i < res.trace.size(); ++i)
        csv += std::to_string(i) + "," + csv_cell(res.trace[i].second) + "\n";
    emit(ctx, out, "lqg_trace", "csv", csv);
}

const char* stability_code(Stability s) {
    switch (s) {
        case Stability::stable_node: return "0";
        case Stability::stable_spiral: return "1";
        case Stability::saddle: return "2";
        case Stability::unstable: return "3";
        case Stability::hopf_unstable: return "4";
    }
    return "?";
}

void run_fixed_points(RunContext& ctx, const json& cfg, RunOutcome& out) {
    auto c = build_nonlinear_component(ctx.nl);
    const double re = jget(cfg, "drive_re", 1.0), im = jget(cfg, "drive_im", 0.0);
    auto fps = fixed_points(c, Drive::constant(c.n_ports, 0, cxd(re, im)));
    std::string csv = "index,re_alpha,im_alpha,n_carrier,classification,residual\n";
    int idx = 0;
    for (const auto& p : fps.points) {
        csv += std::to_string(idx++) + "," + csv_cell(p.state.f(0).real()) + "," +
               csv_cell(p.state.f(0).imag()) + "," +
               csv_cell(p.state.r.size() ? p.state.r(0) : 0.0) + "," +
               stability_code(p.classification) + "," + csv_cell(p.drift_residual) + "\n";
    }
    emit(ctx, out, "fixed_points", "csv", csv);
}

void run_phase_diagram(RunContext& ctx, const json& cfg, RunOutcome& out) {
    auto decl = *ctx.nl.find(ctx.nl.expression->name);
    const double d0 = jget(cfg, "Delta_min", -1.5), d1 = jget(cfg, "Delta_max", -0.3);
    const int nd = int(jget(cfg, "n_Delta", 13));
    const double b0 = jget(cfg, "drive_min", 5.0), b1 = jget(cfg, "drive_max", 150.0);
    const int nb = int(jget(cfg, "n_drive", 13));
    std::string csv = "Delta,drive,classification,omega,amplitude\n";
    for (int i = 0; i < nd; ++i) {
        const double Delta = d0 + (d1 - d0) * i / std::max(1, nd - 1);
        ParamMap p = resolve_params(decl);
        p["Delta"] = Delta;
        auto c = make_sde(decl.kind, p);
        for (int j = 0; j < nb; ++j) {
            const double b = b0 + (b1 - b0) * j / std::max(1, nb - 1);
            std::string cls = "?";
            double omega = 0, amp = 0;
            try {
                auto fps = fixed_points(c, Drive::constant(c.n_ports, 0, b));
                const FixedPoint* worst = &fps.points[0];
                for (const auto& q : fps.points)
                    if (q.eigenvalues.real().maxCoeff() >
                        worst->eigenvalues.real().maxCoeff())
                        worst = &q;
                cls = stability_code(worst->classification);
                Eigen::Index which;
                worst->eigenvalues.real().maxCoeff(&which);
                omega = std::abs(worst->eigenvalues(which).imag());
                amp = std::abs(worst->state.f(0));
            } catch (const std::exception&) {
            }
            csv += csv_cell(Delta) + "," + csv_cell(b) + "," + cls + "," + csv_cell(omega) +
                   "," + csv_cell(amp) + "\n";
        }
    }
    emit(ctx, out, "phase_diagram", "csv", csv);
}

void run_limit_cycle(RunContext& ctx, const json& cfg, RunOutcome& out,
                     std::uint64_t seed) {
    auto c = build_nonlinear_component(ctx.nl);
    LimitCycleOptions opts;
    opts.dt = jget(cfg, "dt", 2e-4);
    opts.settle_T = jget(cfg, "settle_T", 250.0);
    opts.measure_T = jget(cfg, "measure_T", 40.0);
    opts.ensemble = int(jget(cfg, "ensemble", 128));
    opts.diffusion_T = jget(cfg, "diffusion_T", 40.0);
    opts.threads = ctx.opts.threads;
    opts.seed = seed;
    auto lc = limit_cycle(c, drive_from_json(cfg, c.n_ports), opts);
    json j;
    j["omega_c"] = lc.omega_c;
    j["amplitude"] = lc.amplitude;
    j["D_xi"] = lc.D_xi;
    j["D_xi_se"] = lc.D_xi_se;
    j["mu_xi"] = json::array();
    double bound = 0;
    for (auto mu : lc.mu_xi) {
        j["mu_xi"].push_back({{"re", mu.real()}, {"im", mu.imag()}});
        bound += 0.25 * std::norm(mu);
    }
    j["drift_diffusion_bound"] = bound;
    emit(ctx, out, "limit_cycle", "json", j.dump(2) + "\n");
    std::string csv = "sample";
    for (int i = 0; i < c.n_fields; ++i)
        csv += ",re_a" + std::to_string(i + 1) + ",im_a" + std::to_string(i + 1);
    csv += "\n";
    for (size_t s = 0; s < lc.samples.size(); ++s) {
        csv += std::to_string(s);
        for (int i = 0; i < c.n_fields; ++i)
            csv += "," + csv_cell(lc.samples[s](i).real()) + "," +
                   csv_cell(lc.samples[s](i).imag());
        csv += "\n";
    }
    emit(ctx, out, "cycle_samples", "csv", csv);
}

void run_oracle_compare(RunContext& ctx, const json& cfg, RunOutcome& out,
                        std::uint64_t seed) {
    auto c = build_nonlinear_component(ctx.nl);
    fock::CompareOptions opts;
    opts.dt = jget(cfg, "dt", 1e-3);
    opts.T = jget(cfg, "T", 3.0);
    opts.n_traj = int(jget(cfg, "n_traj", 4000));
    opts.dim = int(jget(cfg, "dim", 40));
    opts.alpha0 = cxd(jget(cfg, "alpha0_re", 0.0), jget(cfg, "alpha0_im", 0.0));
    opts.seed = seed;
    opts.threads = ctx.opts.threads;
    const cxd amp(jget(cfg, "drive_re", 0.0), jget(cfg, "drive_im", 0.0));
    auto rep = fock::compare_wigner_oracle(c, amp, opts);
    json j;
    j["passed"] = rep.passed;
    j["max_abs_z"] = rep.max_abs_z;
    j["max_rel_err"] = rep.max_rel_err;
    emit(ctx, out, "oracle_compare", "json", j.dump(2) + "\n");
    std::string csv = "t,name,mc,mc_se,oracle,z,rel_err\n";
    for (const auto& r : rep.rows)
        csv += csv_cell(r.time) + "," + r.name + "," + csv_cell(r.mc) + "," +
               csv_cell(r.mc_se) + "," + csv_cell(r.oracle) + "," + csv_cell(r.z) + "," +
               csv_cell(r.rel_err) + "\n";
    emit(ctx, out, "oracle_rows", "csv", csv);
}

}  // namespace

std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open " + tmp);
        f << content;
        if (!f.good()) throw std::runtime_error("write failed for " + tmp);
    }
    fs::rename(tmp, path);
}

RunOutcome run_netlist(const Netlist& nl, const RunnerOptions& opts) {
    RunOutcome out;
    RunContext ctx{nl, opts};
    const auto t0 = std::chrono::steady_clock::now();
    std::uint64_t seed = opts.seed;
    if (!opts.seed_given)
        seed = std::chrono::duration_cast<std::chrono::nanoseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
                   .count();
    try {
        fs::create_directories(opts.out_dir);
    } catch (const std::exception& e) {
        out.exit_code = exit_io;
        out.message = e.what();
        return out;
    }
    for (const auto& run_text : nl.runs_json) {
        ++ctx.index;
        json cfg;
        std::string mode;
        try {
            cfg = json::parse(run_text);
            mode = cfg.at("mode").get<std::string>();
        } catch (const std::exception& e) {
            out.exit_code = exit_parse;
            out.message = std::string("run config: ") + e.what();
            return out;
        }
        try {
            if (mode == "steady") run_steady(ctx, cfg, out);
            else if (mode == "spectrum") run_spectrum(ctx, cfg, out);
            else if (mode == "gain") run_gain(ctx, cfg, out);
            else if (mode == "trajectory") run_trajectory(ctx, cfg, out, seed);
            else if (mode == "ensemble") run_ensemble(ctx, cfg, out, seed);
            else if (mode == "lqg-classical") run_lqg_classical(ctx, cfg, out);
            else if (mode == "lqg-coherent") run_lqg_coherent(ctx, cfg, out);
            else if (mode == "fixed-points") run_fixed_points(ctx, cfg, out);
            else if (mode == "phase-diagram") run_phase_diagram(ctx, cfg, out);
            else if (mode == "limit-cycle") run_limit_cycle(ctx, cfg, out, seed);
            else if (mode == "oracle-compare") run_oracle_compare(ctx, cfg, out, seed);
            else {
                out.exit_code = exit_parse;
                out.message = "unknown mode " + mode;
                return out;
            }
        } catch (const ParseError& e) {
            out.exit_code = exit_parse;
            out.message = e.what();
            return out;
        } catch (const std::invalid_argument& e) {
            out.exit_code = exit_model;
            out.message = e.what();
            return out;
        } catch (const std::runtime_error& e) {
            out.exit_code = exit_numerics;
            out.message = e.what();
            return out;
        }
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json manifest;
    manifest["tool"] = "photonq";
    manifest["version"] = "0.1.0";
    manifest["seed"] = seed;
    manifest["threads"] = opts.threads;
    manifest["wall_time_s"] = wall;
    manifest["expression"] = nl.expression_text;
    manifest["components"] = json::array();
    for (const auto& c : nl.components) {
        json jc;
        jc["name"] = c.name;
        jc["kind"] = c.kind;
        if (!c.preset.empty()) jc["preset"] = c.preset;
        jc["params"] = c.params;
        manifest["components"].push_back(jc);
    }
    manifest["runs"] = json::array();
    for (const auto& r : nl.runs_json) manifest["runs"].push_back(json::parse(r));
    manifest["outputs"] = ctx.manifest_outputs;
    try {
        const std::string path = (fs::path(opts.out_dir) / "manifest.json").string();
        write_atomic(path, manifest.dump(2) + "\n");
        out.artifacts.push_back(path);
    } catch (const std::exception& e) {
        out.exit_code = exit_io;
        out.message = e.what();
    }
    return out;
}

}  // namespace photonq
