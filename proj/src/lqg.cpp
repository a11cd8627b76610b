#include "photonq/lqg.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>

namespace photonq {

namespace {

int plant_ports(const LqgProblem& p) { return p.plant.n_ports; }

// --- symplectic completion in quadrature ordering (x1,p1,x2,p2,...) -----------
rmat quad_J(int m) {
    rmat J = rmat::Zero(2 * m, 2 * m);
    for (int i = 0; i < m; ++i) {
        J(2 * i, 2 * i + 1) = 1;
        J(2 * i + 1, 2 * i) = -1;
    }
    return J;
}

// Complete `rows` (canonical pairs) to a full 2m x 2m symplectic matrix.
rmat complete_symplectic(std::vector<rvec> rows, int m) {
    const rmat J = quad_J(m);
    auto project = [&](rvec v) {
        for (size_t a = 0; a + 1 < rows.size(); a += 2) {
            const rvec &x = rows[a], &p = rows[a + 1];
            const double cx = v.dot(J * p), cp = v.dot(J * x);
            v -= cx * x - cp * p;
        }
        return v;
    };
    while (int(rows.size()) < 2 * m) {
        rvec xbest;
        double best = -1;
        for (int i = 0; i < 2 * m; ++i) {
            rvec v = project(rvec::Unit(2 * m, i));
            if (v.norm() > best) {
                best = v.norm();
                xbest = v;
            }
        }
        xbest /= xbest.norm();
        rvec pbest;
        double sbest = 0;
        for (int i = 0; i < 2 * m; ++i) {
            rvec v = project(rvec::Unit(2 * m, i));
            const double s = xbest.dot(J * v);
            if (std::abs(s) > std::abs(sbest)) {
                sbest = s;
                pbest = v;
            }
        }
        if (std::abs(sbest) < 1e-12)
            throw std::runtime_error("complete_symplectic: degenerate completion");
        pbest /= sbest;
        rows.push_back(xbest);
        rows.push_back(pbest);
    }
    rmat S(2 * m, 2 * m);
    for (int i = 0; i < 2 * m; ++i) S.row(i) = rows[i];
    const double resid = (S * J * S.transpose() - J).norm();
    if (resid > 1e-9) throw std::runtime_error("complete_symplectic: residual too large");
    return S;
}

// Quadrature-ordered (x1,p1,..) static map -> doubled (a1..am, a1'..am') map.
cmat quad_to_doubled(const rmat& Sq) {
    const int m = int(Sq.rows()) / 2;
    const cmat T = quadrature_transform(m);
    return T.inverse() * Sq.cast<cxd>() * T;
}

AbcdModel static_from_quad_rows(const std::vector<rvec>& rows, int m) {
    const rmat Sq = complete_symplectic(rows, m);
    return static_model(quad_to_doubled(Sq), m);
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

AbcdModel static_squeezer(double eta, double phi) {
    cmat Dm = cmat::Constant(1, 1, std::cosh(eta));
    cmat Dp = cmat::Constant(1, 1, std::exp(I_UNIT * phi) * std::sinh(eta));
    return static_model(dbl(Dm, Dp), 1);
}

AbcdModel static_linear_amplifier(double eta) {
    cmat Dm = std::cosh(eta) * cmat::Identity(2, 2);
    cmat Dp = cmat::Zero(2, 2);
    Dp(0, 1) = Dp(1, 0) = std::sinh(eta);
    return static_model(dbl(Dm, Dp), 2);
}

AbcdModel static_homodyne_controller(double xi1, double xi2) {
    // out1_x = xi1 x1 + x2 ; out1_p = xi2 x1 + p2  (basis x1,p1,x2,p2)
    rvec x1 = rvec::Zero(4), p1 = rvec::Zero(4);
    x1(0) = xi1;
    x1(2) = 1;
    p1(0) = xi2;
    p1(3) = 1;
    return static_from_quad_rows({x1, p1}, 2);
}

AbcdModel static_heterodyne_controller(double xi) {
    // dB~ = xi (dB1 + dB2^dag) + dB3 : x~ = xi(x1+x2)+x3, p~ = xi(p1-p2)+p3
    rvec x1 = rvec::Zero(6), p1 = rvec::Zero(6);
    x1(0) = xi;
    x1(2) = xi;
    x1(4) = 1;
    p1(1) = xi;
    p1(3) = -xi;
    p1(5) = 1;
    return static_from_quad_rows({x1, p1}, 3);
}

int ControllerSpec::parameter_count() const {
    int n = 0;
    if (family == "trivial-phase") n = 1;
    else if (family == "static-squeezer") n = 2;
    else if (family == "static-linear-amplifier") n = 1;
    else if (family == "classical-homodyne") n = 2;
    else if (family == "classical-heterodyne") n = 1;
    else if (family == "cavity") n = 3;  // kappa1, kappa2, Delta
    else if (family == "opo") n = 7;     // kappa1, kappa2, Delta, eps_re, eps_im, phi1, phi2
    else if (family == "general-coherent") n = n_internal_modes * 11;
    else throw std::invalid_argument("ControllerSpec: unknown family " + family);
    return n + (optimize_plant_coupling ? 1 : 0);
}

BuiltController build_controller(const ControllerSpec& spec, const rvec& params) {
    const std::string& f = spec.family;
    BuiltController bc;
    auto bad_rate = [](double k) { return k < 0 || !std::isfinite(k); };
    if (f == "trivial-phase") {
        bc.model = to_abcd(make_component("phase", {{"phi", params(0)}}));
    } else if (f == "static-squeezer") {
        bc.model = static_squeezer(params(0), params(1));
    } else if (f == "static-linear-amplifier") {
        bc.model = static_linear_amplifier(params(0));
    } else if (f == "classical-homodyne") {
        bc.model = static_homodyne_controller(params(0), params(1));
    } else if (f == "classical-heterodyne") {
        bc.model = static_heterodyne_controller(params(0));
    } else if (f == "cavity" || f == "opo") {
        const double k1 = params(0), k2 = params(1);
        if (bad_rate(k1) || bad_rate(k2))
            throw std::invalid_argument("build_controller: negative controller rate");
        ParamMap pm{{"Delta", params(2)}, {"kappa1", k1}, {"kappa2", k2}};
        if (f == "opo") {
            pm["eps_re"] = params(3);
            pm["eps_im"] = params(4);
        } else {
            pm["eps_re"] = pm["eps_im"] = 0.0;
        }
        AbcdModel core = to_abcd(make_component("opo2", pm));
        if (f == "opo") {
            auto ph1 = to_abcd(make_component("phase", {{"phi", params(5)}, {"n", 2.0}}));
            auto ph2 = to_abcd(make_component("phase", {{"phi", params(6)}, {"n", 2.0}}));
            core = series(ph2, series(core, ph1));
        }
        bc.model = core;
        bc.in_port = 1;
        bc.out_port = 1;  // reflection off the input mirror
    } else if (f == "general-coherent") {
        // SLH-parameterized n-mode two-port controller: realizable by construction.
        const int n = spec.n_internal_modes;
        LinearSlhModel m;
        m.n_modes = n;
        m.n_ports = 2;
        m.S = cmat::Identity(2, 2);
        int ix = 0;
        m.R_minus = cmat::Zero(n, n);
        m.R_plus = cmat::Zero(n, n);
        for (int i = 0; i < n; ++i) m.R_minus(i, i) = params(ix++);
        for (int i = 0; i < n; ++i) {
            m.R_plus(i, i) = cxd(params(ix), params(ix + 1));
            ix += 2;
        }
        m.Lambda_minus = cmat::Zero(2, n);
        m.Lambda_plus = cmat::Zero(2, n);
        for (int pt = 0; pt < 2; ++pt)
            for (int i = 0; i < n; ++i) {
                m.Lambda_minus(pt, i) = cxd(params(ix), params(ix + 1));
                ix += 2;
                m.Lambda_plus(pt, i) = cxd(params(ix), params(ix + 1));
                ix += 2;
            }
        m.r = cvec::Zero(n);
        m.lambda = cvec::Zero(2);
        bc.model = to_abcd(m);
        bc.in_port = 1;
        bc.out_port = 2;
    } else {
        throw std::invalid_argument("build_controller: unknown family " + f);
    }
    return bc;
}

AbcdModel closed_loop(const LqgProblem& p, const BuiltController& ctl) {
    const int mp = plant_ports(p);
    AbcdModel circ = concatenate(p.plant, ctl.model);
    circ = feedback(circ, p.sense_port, mp + ctl.in_port);
    // controller output indices shift down by one after removing output sense_port
    circ = feedback(circ, mp + ctl.out_port - 1, p.feed_port);
    return circ;
}

InputCovariance closed_loop_cov(const LqgProblem& p, const BuiltController& ctl) {
    // remaining inputs: plant ports except feed_port, then controller ports except in_port
    const int mp = plant_ports(p);
    InputCovariance out;
    out.ports.resize(mp - 1 + ctl.model.n_ports - 1);
    for (int i = 0; i < int(p.input_cov.ports.size()) && i < mp; ++i) {
        const int port = i + 1;
        if (port == p.feed_port) continue;
        const int pos = port < p.feed_port ? i : i - 1;
        out.ports.at(pos) = p.input_cov.ports[i];
    }
    return out;
}

double lqg_cost(const LqgProblem& p, const BuiltController& ctl) {
    AbcdModel circ;
    try {
        circ = closed_loop(p, ctl);
    } catch (const std::exception&) {
        return kInf;
    }
    Eigen::ComplexEigenSolver<cmat> es(circ.A, false);
    if (circ.n_modes > 0 && es.eigenvalues().real().maxCoeff() >= 0) return kInf;
    auto st = steady_covariance(circ, closed_loop_cov(p, ctl));
    double cost = 0;
    for (int mode : p.cost_modes) cost += photon_number(st, mode);
    return cost;
}

double lqg_cost(const LqgProblem& p, const AbcdModel& controller) {
    BuiltController bc;
    bc.model = controller;
    return lqg_cost(p, bc);
}

double open_loop_cost(const LqgProblem& p) {
    auto st = steady_covariance(p.plant, p.input_cov);
    double cost = 0;
    for (int mode : p.cost_modes) cost += photon_number(st, mode);
    return cost;
}

// ---------------------------------------------------------------------------

ClassicalGains classical_lqg(const ClassicalPlant& p, double q_weight, double r_weight) {
    ClassicalGains g;
    const rmat Fvi = p.Fv.inverse();
    const rmat M = p.M.size() ? p.M : rmat::Zero(p.A.rows(), p.Cy.rows());
    // filter Riccati with the correlated-noise change of variables
    const rmat Abar = p.A - M * Fvi * p.Cy;
    const rmat Fwbar = p.Fw - M * Fvi * M.transpose();
    g.sigma_f = care_solve(Abar.transpose(), p.Cy.transpose(), Fwbar, p.Fv);
    g.K = (g.sigma_f * p.Cy.transpose() + M) * Fvi;
    // control Riccati (Q >> R regime set by the weight ratio)
    const rmat Q = q_weight * p.P;
    const rmat R = r_weight * rmat::Identity(p.Bu.cols(), p.Bu.cols());
    g.lambda_c = care_solve(p.A, p.Bu, Q, R);
    g.L = R.inverse() * p.Bu.transpose() * g.lambda_c;
    return g;
}

double classical_closed_loop_cost(const ClassicalPlant& p, const ClassicalGains& g) {
    const long n = p.A.rows();
    rmat Acl(2 * n, 2 * n);
    Acl.topLeftCorner(n, n) = p.A;
    Acl.topRightCorner(n, n) = -p.Bu * g.L;
    Acl.bottomLeftCorner(n, n) = g.K * p.Cy;
    Acl.bottomRightCorner(n, n) = p.A - p.Bu * g.L - g.K * p.Cy;
    const rmat M = p.M.size() ? p.M : rmat::Zero(n, p.Cy.rows());
    rmat N(2 * n, 2 * n);
    N.topLeftCorner(n, n) = p.Fw;
    N.topRightCorner(n, n) = M * g.K.transpose();
    N.bottomLeftCorner(n, n) = g.K * M.transpose();
    N.bottomRightCorner(n, n) = g.K * p.Fv * g.K.transpose();
    Eigen::EigenSolver<rmat> es(Acl, false);
    if (es.eigenvalues().real().maxCoeff() >= 0) return kInf;
    const cmat sig = lyapunov_solve(Acl.cast<cxd>(), N.cast<cxd>());
    return (p.P.cast<cxd>() * sig.topLeftCorner(n, n)).trace().real();
}

// ---------------------------------------------------------------------------

namespace {

struct Objective {
    const LqgProblem* prob;
    const ControllerSpec* spec;

    double operator()(const rvec& x) const {
        if (spec->lower.size() == x.size())
            for (int i = 0; i < x.size(); ++i)
                if (x(i) < spec->lower(i) || x(i) > spec->upper(i)) return 1e12;
        LqgProblem local = *prob;
        rvec cpar = x;
        if (spec->optimize_plant_coupling) {
            if (!prob->plant_builder) throw std::logic_error("plant_builder required");
            local.plant = prob->plant_builder(x(x.size() - 1));
            cpar = x.head(x.size() - 1);
        }
        BuiltController bc;
        try {
            bc = build_controller(*spec, cpar);
        } catch (const std::exception&) {
            return 1e12;
        }
        AbcdModel circ;
        try {
            circ = closed_loop(local, bc);
        } catch (const std::exception&) {
            return 1e12;
        }
        if (circ.n_modes > 0) {
            Eigen::ComplexEigenSolver<cmat> es(circ.A, false);
            const double absc = es.eigenvalues().real().maxCoeff();
            if (absc >= -1e-12) return 1e9 + absc;  // finite penalty keeps the search continuous
        }
        auto st = steady_covariance(circ, closed_loop_cov(local, bc));
        double cost = 0;
        for (int mode : local.cost_modes) cost += photon_number(st, mode);
        return cost;
    }
};

rvec fd_gradient(const Objective& f, const rvec& x, double rel) {
    rvec g(x.size());
    for (int i = 0; i < x.size(); ++i) {
        const double h = rel * std::max(1.0, std::abs(x(i)));
        rvec xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        g(i) = (f(xp) - f(xm)) / (2 * h);
    }
    return g;
}

std::pair<rvec, double> nelder_mead(const Objective& f, rvec x0, double scale, int iters) {
    const int n = int(x0.size());
    std::vector<std::pair<double, rvec>> sx;
    sx.reserve(n + 1);
    sx.push_back({f(x0), x0});
    for (int i = 0; i < n; ++i) {
        rvec x = x0;
        x(i) += scale * std::max(0.1, std::abs(x(i)));
        sx.push_back({f(x), x});
    }
    auto by_cost = [](const auto& a, const auto& b) { return a.first < b.first; };
    for (int it = 0; it < iters; ++it) {
        std::sort(sx.begin(), sx.end(), by_cost);
        if (std::abs(sx.front().first - sx.back().first) <
            1e-13 * (1 + std::abs(sx.front().first)))
            break;
        rvec centroid = rvec::Zero(n);
        for (int i = 0; i < n; ++i) centroid += sx[i].second;
        centroid /= n;
        const rvec worst = sx[n].second;
        rvec xr = centroid + (centroid - worst);
        const double fr = f(xr);
        if (fr < sx[0].first) {
            rvec xe = centroid + 2.0 * (centroid - worst);
            const double fe = f(xe);
            sx[n] = fe < fr ? std::make_pair(fe, xe) : std::make_pair(fr, xr);
        } else if (fr < sx[n - 1].first) {
            sx[n] = {fr, xr};
        } else {
            rvec xc = centroid + 0.5 * (worst - centroid);
            const double fc = f(xc);
            if (fc < sx[n].first) {
                sx[n] = {fc, xc};
            } else {
                for (int i = 1; i <= n; ++i) {
                    sx[i].second = sx[0].second + 0.5 * (sx[i].second - sx[0].second);
                    sx[i].first = f(sx[i].second);
                }
            }
        }
    }
    std::sort(sx.begin(), sx.end(), by_cost);
    return {sx[0].second, sx[0].first};
}

}  // namespace

OptimizeResult optimize_coherent(const LqgProblem& p, const ControllerSpec& spec,
                                 const rvec& init, const OptimizeOptions& opts) {
    if (init.size() != spec.parameter_count())
        throw std::invalid_argument("optimize_coherent: init has wrong length");
    Objective f{&p, &spec};
    OptimizeResult res;
    rvec x = init;
    double fx = f(x);
    res.trace.push_back({x, fx});
    const int n = int(x.size());
    rmat Hinv = rmat::Identity(n, n);
    rvec g = fd_gradient(f, x, opts.fd_step);
    for (int it = 0; it < opts.max_iter; ++it) {
        rvec d;
        if (opts.newton) {
            rmat H(n, n);
            const double h = 1e-4;
            for (int i = 0; i < n; ++i) {
                rvec xp = x;
                const double hi = h * std::max(1.0, std::abs(x(i)));
                xp(i) += hi;
                H.col(i) = (fd_gradient(f, xp, opts.fd_step) - g) / hi;
            }
            H = 0.5 * (H + H.transpose()).eval();
            Eigen::SelfAdjointEigenSolver<rmat> es(H);
            const double floor_ev = 1e-8 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
            rvec ev = es.eigenvalues().cwiseMax(floor_ev);
            d = -es.eigenvectors() * (es.eigenvectors().transpose() * g).cwiseQuotient(ev);
        } else {
            d = -Hinv * g;
        }
        if (!d.allFinite() || d.dot(g) >= 0) d = -g;
        double step = 1.0, fnew = kInf;
        rvec xnew;
        for (int ls = 0; ls < 40; ++ls) {
            xnew = x + step * d;
            fnew = f(xnew);
            if (fnew < fx - 1e-4 * step * std::abs(d.dot(g))) break;
            step *= 0.5;
        }
        if (!(fnew < fx)) break;
        const rvec gnew = fd_gradient(f, xnew, opts.fd_step);
        const rvec s = xnew - x, y = gnew - g;
        const double sy = s.dot(y);
        if (sy > 1e-14) {
            const rmat Id = rmat::Identity(n, n);
            Hinv = (Id - s * y.transpose() / sy) * Hinv * (Id - y * s.transpose() / sy) +
                   s * s.transpose() / sy;
        }
        const double improve = fx - fnew;
        x = xnew;
        fx = fnew;
        g = gnew;
        res.trace.push_back({x, fx});
        if (improve < opts.tol * (1 + std::abs(fx))) break;
    }
    if (opts.polish_iters > 0) {
        auto [xp, fp] = nelder_mead(f, x, 0.05, opts.polish_iters);
        if (fp < fx) {
            x = xp;
            fx = fp;
            res.trace.push_back({x, fx});
        }
    }
    res.params = x;
    res.cost = fx;
    res.converged = std::isfinite(fx) && fx < 1e9;
    const rvec cpar = spec.optimize_plant_coupling ? rvec(x.head(n - 1)) : x;
    res.controller = build_controller(spec, cpar);
    return res;
}

OptimizeResult optimize_coherent_multistart(const LqgProblem& p, const ControllerSpec& spec,
                                            const std::vector<rvec>& inits,
                                            const OptimizeOptions& opts, int threads) {
    if (inits.empty()) throw std::invalid_argument("multistart: no seeds");
    std::vector<OptimizeResult> results(inits.size());
    if (threads <= 1) {
        for (size_t i = 0; i < inits.size(); ++i)
            results[i] = optimize_coherent(p, spec, inits[i], opts);
    } else {
        std::vector<std::future<OptimizeResult>> futs;
        futs.reserve(inits.size());
        for (const auto& x0 : inits)
            futs.push_back(std::async(std::launch::async,
                                      [&, x0] { return optimize_coherent(p, spec, x0, opts); }));
        for (size_t i = 0; i < futs.size(); ++i) results[i] = futs[i].get();
    }
    size_t best = 0;
    for (size_t i = 1; i < results.size(); ++i)
        if (results[i].cost < results[best].cost) best = i;
    return results[best];
}

// ---------------------------------------------------------------------------

LqgProblem make_cavity_problem(double k1, double k2, double k3, double Delta, double kn) {
    LqgProblem p;
    p.plant = to_abcd(make_component(
        "cavity", {{"Delta", Delta}, {"kappa1", k1}, {"kappa2", k2}, {"kappa3", k3}}));
    p.sense_port = 1;
    p.feed_port = 2;
    p.input_cov = InputCovariance::thermal(3, 2, kn);
    p.cost_modes = {0};
    return p;
}

LqgProblem make_mems_problem(double Omega, double Q, double km, double kn) {
    (void)Q;
    LqgProblem p;
    auto build = [Omega, km](double K) {
        return to_abcd(
            make_component("mems", {{"K1", K}, {"K2", -K}, {"Omega", Omega}, {"km", km}}));
    };
    p.plant = build(1.0);
    p.plant_builder = build;
    p.sense_port = 1;
    p.feed_port = 2;
    p.input_cov = InputCovariance::thermal(3, 2, kn);
    p.cost_modes = {0};
    return p;
}

ClassicalPlant make_mems_classical_plant(double K, double Omega, double Q, double km,
                                         double kn) {
    (void)Q;
    ClassicalPlant p;
    p.A = rmat(2, 2);
    p.A << -km / 2, Omega, -Omega, -km / 2;
    p.Bu = rmat(2, 1);
    p.Bu << 0, -2 * K;
    p.Cy = rmat(1, 2);
    p.Cy << 2 * K, 0;
    p.Fw = rmat::Zero(2, 2);
    p.Fw(0, 0) = km * (1 + 2 * kn);
    p.Fw(1, 1) = 8 * K * K + km * (1 + 2 * kn);
    p.Fv = rmat::Identity(1, 1);
    p.M = rmat::Zero(2, 1);
    p.P = 0.25 * rmat::Identity(2, 2);  // <b'b> = <x^2 + p^2>/4 - 1/2
    return p;
}

CavityBenchmarks analytic_cavity_benchmarks(double k1, double k2, double k3, double kn,
                                            double eta, double Delta) {
    CavityBenchmarks b{};
    const double ksum = k1 + k2 + k3;
    const double root = 2 * std::sqrt(k1 * k2);
    const double s = std::sinh(eta), c = std::cosh(eta);
    b.no_control = k3 * kn / ksum;
    b.trivial = k3 * kn / (ksum + root);
    b.heterodyne = (k2 * s * s + k3 * kn) / (ksum + root * s);
    b.linear_amplifier = (k2 * s * s + k3 * kn) / (ksum + root * c);
    const double G0 = ksum + root * c;
    const double den = G0 * G0 + 4 * Delta * Delta;
    b.squeezer = (k2 * s * s + k3 * kn - 2 * k2 * std::sqrt(k1 * k2) * c * s * s * G0 / den) /
                 (G0 - 4 * k1 * k2 * s * s * G0 / den);
    b.kn_min = k1 * (ksum + root) / (std::sqrt(k1 * k2) * k3);
    return b;
}

}  // namespace photonq
