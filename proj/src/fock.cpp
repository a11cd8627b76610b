#include "photonq/fock.hpp"

#include <Eigen/LU>
#include <cmath>
#include <stdexcept>

#include "photonq/rng.hpp"

namespace photonq {
namespace fock {

cmat annihilate(int dim) {
    cmat a = cmat::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(double(n));
    return a;
}

cmat create(int dim) { return annihilate(dim).adjoint(); }

cmat number(int dim) {
    cmat n = cmat::Zero(dim, dim);
    for (int k = 0; k < dim; ++k) n(k, k) = double(k);
    return n;
}

cmat word(int dim, const std::string& w) {
    cmat op = cmat::Identity(dim, dim);
    const cmat a = annihilate(dim), ad = create(dim);
    for (char ch : w) {
        if (ch == 'a')
            op = op * a;
        else if (ch == 'A')
            op = op * ad;
        else
            throw std::invalid_argument("fock::word: tokens are 'a' and 'A'");
    }
    return op;
}

cmat embed2(const cmat& op, int which, int d1, int d2) {
    const cmat i1 = cmat::Identity(d1, d1), i2 = cmat::Identity(d2, d2);
    const cmat& left = which == 0 ? op : i1;
    const cmat& right = which == 0 ? i2 : op;
    cmat out = cmat::Zero(d1 * d2, d1 * d2);
    for (int i = 0; i < d1; ++i)
        for (int j = 0; j < d1; ++j)
            if (left(i, j) != 0.0)
                out.block(i * d2, j * d2, d2, d2) = left(i, j) * right;
    return out;
}

DensityMatrix DensityMatrix::vacuum(int dim) { return fock_state(dim, 0); }

DensityMatrix DensityMatrix::fock_state(int dim, int n) {
    DensityMatrix d;
    d.dim = dim;
    d.rho = cmat::Zero(dim, dim);
    d.rho(n, n) = 1.0;
    return d;
}

DensityMatrix DensityMatrix::coherent(int dim, cxd alpha) {
    cvec psi(dim);
    cxd amp = std::exp(-0.5 * std::norm(alpha));
    for (int n = 0; n < dim; ++n) {
        psi(n) = amp;
        amp *= alpha / std::sqrt(double(n + 1));
    }
    psi /= psi.norm();
    DensityMatrix d;
    d.dim = dim;
    d.rho = psi * psi.adjoint();
    return d;
}

void DensityMatrix::validate(double tol) const {
    if ((rho - rho.adjoint()).norm() > tol * (1 + rho.norm()))
        throw std::runtime_error("DensityMatrix: not Hermitian");
    if (std::abs(rho.trace() - cxd(1.0)) > 1e-8)
        throw std::runtime_error("DensityMatrix: trace != 1");
    Eigen::SelfAdjointEigenSolver<cmat> es(rho, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-8)
        throw std::runtime_error("DensityMatrix: negative eigenvalue");
}

cmat Lindblad::apply(const cmat& rho) const {
    cmat out = -I_UNIT * (H * rho - rho * H);
    for (size_t k = 0; k < Ls.size(); ++k) {
        const cmat& L = Ls[k];
        const cmat& LdL = ldl_cache_[k];
        out += L * rho * L.adjoint() - 0.5 * (LdL * rho + rho * LdL);
    }
    return out;
}

double Lindblad::spectral_scale() const {
    auto two_norm = [](const cmat& M) {
        // power iteration on M^dag M
        cvec v = cvec::Ones(M.cols());
        v /= v.norm();
        double s = 0;
        for (int it = 0; it < 25; ++it) {
            v = M.adjoint() * (M * v);
            s = std::sqrt(v.norm());
            if (v.norm() < 1e-300) return 0.0;
            v /= v.norm();
        }
        return s;
    };
    double scale = two_norm(H);
    for (const auto& L : Ls) {
        const double n = two_norm(L);
        scale += n * n;
    }
    return scale;
}

cmat Lindblad::superoperator() const {
    const int d = dim;
    const cmat Id = cmat::Identity(d, d);
    auto kron = [d](const cmat& X, const cmat& Y) {
        cmat out = cmat::Zero(d * d, d * d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                if (X(i, j) != 0.0) out.block(i * d, j * d, d, d) = X(i, j) * Y;
        return out;
    };
    // vec(A rho B) = (B^T kron A) vec(rho), column-major vec
    cmat S = -I_UNIT * (kron(Id, H) - kron(H.transpose(), Id));
    for (const auto& L : Ls) {
        const cmat Ld = L.adjoint();
        const cmat LdL = Ld * L;
        S += kron(L.conjugate(), L) -
             0.5 * (kron(Id, LdL) + kron(LdL.transpose(), Id));
    }
    return S;
}

Lindblad build_lindblad(const std::vector<std::pair<cxd, cmat>>& h_terms,
                        const std::vector<cmat>& l_terms, int dim) {
    if (dim < 2) throw std::invalid_argument("build_lindblad: dim must be >= 2");
    if (double(dim) * dim > 4096.0)
        throw std::invalid_argument("build_lindblad: dim^2 > 4096 guard");
    Lindblad gen;
    gen.dim = dim;
    gen.H = cmat::Zero(dim, dim);
    for (const auto& [coef, op] : h_terms) gen.H += coef * op;
    if ((gen.H - gen.H.adjoint()).norm() > 1e-9 * (1 + gen.H.norm()))
        throw std::invalid_argument("build_lindblad: H not Hermitian");
    gen.Ls = l_terms;
    for (const auto& L : gen.Ls) gen.ldl_cache_.push_back(L.adjoint() * L);
    return gen;
}

DensityMatrix evolve_rho(const Lindblad& gen, const DensityMatrix& rho0, double t) {
    if (rho0.dim != gen.dim) throw std::invalid_argument("evolve_rho: dim mismatch");
    const double scale = gen.spectral_scale();
    const int steps = std::max(1, int(std::ceil(t * std::max(scale, 1.0) / 0.08)));
    const double dt = t / steps;
    cmat rho = rho0.rho;
    for (int s = 0; s < steps; ++s) {
        const cmat k1 = gen.apply(rho);
        const cmat k2 = gen.apply(rho + 0.5 * dt * k1);
        const cmat k3 = gen.apply(rho + 0.5 * dt * k2);
        const cmat k4 = gen.apply(rho + dt * k3);
        rho += (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    DensityMatrix out;
    out.dim = gen.dim;
    out.rho = 0.5 * (rho + rho.adjoint().eval());
    const double tr = out.rho.trace().real();
    if (std::abs(tr - 1.0) > 1e-6)
        throw std::runtime_error("evolve_rho: trace drifted to " + std::to_string(tr));
    out.rho /= tr;
    return out;
}

SteadyStateResult steady_state(const Lindblad& gen) {
    const int d = gen.dim;
    const cmat S = gen.superoperator();
    const int N = d * d;
    // shifted inverse iteration toward the null space
    Eigen::PartialPivLU<cmat> lu(S - 1e-10 * cmat::Identity(N, N));
    cvec x = cvec::Zero(N);
    for (int i = 0; i < d; ++i) x(i * d + i) = 1.0 / d;  // vec of I/d
    double resid = 1e300;
    for (int it = 0; it < 50; ++it) {
        x = lu.solve(x);
        // renormalize by trace
        cxd tr = 0;
        for (int i = 0; i < d; ++i) tr += x(i * d + i);
        if (std::abs(tr) < 1e-300) throw std::runtime_error("steady_state: lost trace");
        x /= tr;
        resid = (S * x).norm();
        if (resid < 1e-11) break;
    }
    if (!(resid < 1e-9))
        throw std::runtime_error("steady_state: did not converge, residual " +
                                 std::to_string(resid));
    SteadyStateResult out;
    out.rho.dim = d;
    out.rho.rho = cmat(d, d);
    for (int j = 0; j < d; ++j) out.rho.rho.col(j) = x.segment(j * d, d);
    out.rho.rho = 0.5 * (out.rho.rho + out.rho.rho.adjoint().eval());
    out.rho.rho /= out.rho.rho.trace().real();
    out.residual = resid;
    // probe the null-space rank with a second, orthogonalized start
    {
        cvec y = cvec::Zero(N);
        y(0) = 1.0;
        const cvec xs = x / x.norm();
        for (int it = 0; it < 8; ++it) {
            y = lu.solve(y);
            y -= (xs.adjoint() * y)(0, 0) * xs;
            if (y.norm() < 1e-300) break;
            y /= y.norm();
        }
        out.null_rank = y.norm() > 0 && (S * y).norm() < 1e-6 ? 2 : 1;
    }
    return out;
}

double wigner_point(const DensityMatrix& rho, cxd alpha) {
    const int d = rho.dim;
    const cmat a = annihilate(d), ad = create(d);
    const cmat D = expm(alpha * ad - std::conj(alpha) * a);
    cmat P = cmat::Zero(d, d);
    for (int n = 0; n < d; ++n) P(n, n) = (n % 2 == 0) ? 1.0 : -1.0;
    return (2.0 / M_PI) * (rho.rho * D * P * D.adjoint()).trace().real();
}

WignerGrid wigner_of_rho(const DensityMatrix& rho, const std::vector<double>& re_axis,
                         const std::vector<double>& im_axis) {
    // truncation audit: the state tail must be negligible and the grid must leave
    // room for the displacement (the displaced state has to fit below dim too)
    const double tail = rho.rho(rho.dim - 1, rho.dim - 1).real();
    if (tail > 1e-6)
        throw std::runtime_error("wigner_of_rho: truncation inadequate, tail " +
                                 std::to_string(tail));
    double rmax = 0;
    for (double x : re_axis)
        for (double y : im_axis) rmax = std::max(rmax, std::abs(cxd(x, y)));
    const double nbar = std::max(0.0, (number(rho.dim) * rho.rho).trace().real());
    const double neff = std::pow(rmax + std::sqrt(nbar), 2);
    if (neff + 5 * std::sqrt(neff) > rho.dim)
        throw std::runtime_error("wigner_of_rho: grid too wide for the truncation");
    WignerGrid g;
    g.re = re_axis;
    g.im = im_axis;
    g.values = rmat(long(im_axis.size()), long(re_axis.size()));
    const int d = rho.dim;
    const cmat a = annihilate(d), ad = create(d);
    cmat P = cmat::Zero(d, d);
    for (int n = 0; n < d; ++n) P(n, n) = (n % 2 == 0) ? 1.0 : -1.0;
    for (size_t iy = 0; iy < im_axis.size(); ++iy)
        for (size_t ix = 0; ix < re_axis.size(); ++ix) {
            const cxd alpha(re_axis[ix], im_axis[iy]);
            const cmat D = expm(alpha * ad - std::conj(alpha) * a);
            g.values(long(iy), long(ix)) =
                (2.0 / M_PI) * (rho.rho * D * P * D.adjoint()).trace().real();
        }
    return g;
}

Lindblad lindblad_for_component(const WignerComponent& c, cxd drive_amp, int dim) {
    const auto& q = c.par;
    std::vector<std::pair<cxd, cmat>> h;
    std::vector<cmat> ls;
    if (c.kind == "cavity" || c.kind == "kerr" || c.kind == "dopo") {
        const cmat a = annihilate(dim), ad = create(dim);
        h.push_back({q.Delta, word(dim, "Aa")});
        if (c.kind == "kerr" && q.chi != 0.0) h.push_back({0.5 * q.chi, word(dim, "AAaa")});
        if (c.kind == "dopo") {
            const cxd eps = q.eps;
            h.push_back({std::conj(eps) / (2.0 * I_UNIT), word(dim, "aa")});
            h.push_back({-eps / (2.0 * I_UNIT), word(dim, "AA")});
        }
        // drive on port 1: matches d alpha += -sqrt(kappa_1) beta_in dt
        const cxd E = std::sqrt(q.kappa[0]) * drive_amp;
        h.push_back({I_UNIT * std::conj(E), a});
        h.push_back({-I_UNIT * E, ad});
        double ksum = 0;
        for (int p = 0; p < c.n_ports; ++p) ksum += q.kappa[p];
        ls.push_back(std::sqrt(ksum) * a);
        if (c.kind == "kerr" && q.beta > 0) ls.push_back(std::sqrt(q.beta) * word(dim, "aa"));
        return build_lindblad(h, ls, dim);
    }
    if (c.kind == "dopo2") {
        const int d1 = dim, d2 = dim;
        if (double(d1 * d2) * double(d1 * d2) > 4096.0 * 4096.0)
            throw std::invalid_argument("lindblad_for_component: two-mode dim too large");
        const cmat a = embed2(annihilate(d1), 0, d1, d2);
        const cmat b = embed2(annihilate(d2), 1, d1, d2);
        const cmat ad = a.adjoint(), bd = b.adjoint();
        h.push_back({q.Delta, ad * a});
        h.push_back({q.Delta_b, bd * b});
        const cxd eps = q.eps;
        h.push_back({std::conj(eps) / (2.0 * I_UNIT), a * a * bd});
        h.push_back({-eps / (2.0 * I_UNIT), ad * ad * b});
        const cxd E = std::sqrt(q.kappa[0]) * drive_amp;
        h.push_back({I_UNIT * std::conj(E), a});
        h.push_back({-I_UNIT * E, ad});
        ls.push_back(std::sqrt(q.kappa[0]) * a);
        ls.push_back(std::sqrt(q.kappa[1]) * b);
        return build_lindblad(h, ls, d1 * d2);
    }
    throw std::invalid_argument("lindblad_for_component: unsupported kind " + c.kind);
}

CompareReport compare_wigner_oracle(const WignerComponent& c, cxd drive_amp,
                                    const CompareOptions& opts) {
    if (c.n_fields != 1)
        throw std::invalid_argument("compare_wigner_oracle: single-mode kinds only");
    // oracle side
    Lindblad gen = lindblad_for_component(c, drive_amp, opts.dim);
    DensityMatrix rho = DensityMatrix::coherent(opts.dim, opts.alpha0);
    const cmat a = annihilate(opts.dim);
    const cmat n_op = number(opts.dim);
    const cmat aa = word(opts.dim, "aa");

    // ensemble side
    EnsembleOptions eo;
    eo.threads = opts.threads;
    eo.sample_initial_vacuum = true;  // vacuum fluctuations about alpha0 handled below
    const double t_snap = opts.T / opts.n_times;
    const int stride = std::max(1, int(std::llround(t_snap / opts.dt)));
    eo.save_stride = stride;
    // trajectories run manually so the initial coherent state is alpha0 + vacuum sample
    const int n_steps = int(std::llround(opts.T / opts.dt));
    const int n_saved = n_steps / stride + 1;
    std::vector<cxd> sum1(n_saved, 0.0);
    std::vector<double> sum_nn(n_saved, 0.0), sq_nn(n_saved, 0.0);
    std::vector<cxd> sum_aa(n_saved, 0.0);
    std::vector<double> sq1(n_saved, 0.0), sq_aa(n_saved, 0.0);
    Drive drive = Drive::constant(c.n_ports, 0, drive_amp);
    for (int k = 0; k < opts.n_traj; ++k) {
        TrajectoryOptions topt;
        topt.traj_index = std::uint64_t(k);
        topt.record_io = false;
        topt.save_stride = stride;
        topt.sample_initial_vacuum = false;
        const cxd vac =
            0.5 * cxd(rng::normal(opts.seed, k, ~std::uint64_t(0), 0),
                      rng::normal(opts.seed, k, ~std::uint64_t(0), 1));
        topt.f0 = {opts.alpha0 + vac};
        auto tr = integrate_trajectory(c, drive, opts.dt, opts.T, opts.seed, topt);
        for (int s = 0; s < n_saved; ++s) {
            const cxd z = tr.field(s, 0);
            sum1[s] += z;
            sq1[s] += std::norm(z);
            const double nn = std::norm(z);
            sum_nn[s] += nn;
            sq_nn[s] += nn * nn;
            const cxd zz = z * z;
            sum_aa[s] += zz;
            sq_aa[s] += std::norm(zz);
        }
    }

    CompareReport rep;
    rep.passed = true;
    for (int snap = 1; snap <= opts.n_times; ++snap) {
        const int s = snap * int(std::llround(t_snap / opts.dt)) / stride;
        if (s >= n_saved) break;
        const double t = s * stride * opts.dt;
        rho = snap == 1 ? evolve_rho(gen, DensityMatrix::coherent(opts.dim, opts.alpha0), t)
                        : evolve_rho(gen, rho, t_snap);
        const double M = opts.n_traj;
        const double power_scale = rho.expect(n_op) + 0.5;
        auto add_row = [&](const std::string& name, cxd mc_mean, double mc_var,
                           cxd oracle, double scale) {
            MomentRow row;
            row.time = t;
            row.name = name;
            row.mc = std::abs(mc_mean);
            row.mc_se = std::sqrt(std::max(mc_var, 0.0) / M);
            row.oracle = std::abs(oracle);
            row.z = std::abs(mc_mean - oracle) / std::max(row.mc_se, 1e-12);
            // moments that pass through zero are judged at their natural scale
            row.rel_err = std::abs(mc_mean - oracle) / std::max(std::abs(oracle), scale);
            rep.rows.push_back(row);
            rep.max_abs_z = std::max(rep.max_abs_z, row.z);
            rep.max_rel_err = std::max(rep.max_rel_err, row.rel_err);
            if (row.z >= 3.0 || row.rel_err >= 0.05) rep.passed = false;
        };
        const cxd m1 = sum1[s] / M;
        add_row("alpha", m1, sq1[s] / M - std::norm(m1), rho.expect_c(a),
                std::sqrt(power_scale));
        const double mn = sum_nn[s] / M;
        add_row("alpha*alpha", mn, sq_nn[s] / M - mn * mn, rho.expect(n_op) + 0.5,
                power_scale);
        const cxd m2 = sum_aa[s] / M;
        add_row("alpha^2", m2, sq_aa[s] / M - std::norm(m2), rho.expect_c(aa),
                power_scale);
    }
    return rep;
}

}  // namespace fock
}  // namespace photonq
