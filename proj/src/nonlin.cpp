#include "photonq/nonlin.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <stdexcept>

#include "photonq/gaussian.hpp"
#include "photonq/rng.hpp"

namespace photonq {

namespace {

using Poly = std::vector<double>;  // ascending coefficients

Poly pmul(const Poly& a, const Poly& b) {
    Poly c(a.size() + b.size() - 1, 0.0);
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
    return c;
}
Poly padd(Poly a, const Poly& b) {
    if (b.size() > a.size()) a.resize(b.size(), 0.0);
    for (size_t i = 0; i < b.size(); ++i) a[i] += b[i];
    return a;
}

struct DetIntegrator {
    const WignerComponent& c;
    Drive drive;
    std::array<cxd, WignerComponent::kMaxFields> f{};
    std::array<double, WignerComponent::kMaxReal> r{};

    void step(double t, double dt) {
        std::array<cxd, WignerComponent::kMaxFields> df{};
        std::array<double, WignerComponent::kMaxReal> dr{};
        c.drift(f.data(), r.data(), df.data(), dr.data());
        const cmat U = c.input_coupling(f.data(), r.data());
        for (int i = 0; i < c.n_fields; ++i) {
            for (int p = 0; p < c.n_ports; ++p) df[i] += U(i, p) * drive.eval(p, t);
            f[i] += df[i] * dt;
        }
        for (int i = 0; i < c.n_real; ++i) r[i] += dr[i] * dt;
    }
    void run(double t0, double T, double dt) {
        const int n = int(std::llround(T / dt));
        for (int i = 0; i < n; ++i) step(t0 + i * dt, dt);
    }
};

rvec effective_drift(const WignerComponent& c, const Drive& drive, const rvec& x) {
    std::array<cxd, WignerComponent::kMaxFields> f{};
    std::array<double, WignerComponent::kMaxReal> r{};
    std::array<cxd, WignerComponent::kMaxFields> df{};
    std::array<double, WignerComponent::kMaxReal> dr{};
    for (int i = 0; i < c.n_fields; ++i) f[i] = cxd(x(2 * i), x(2 * i + 1));
    for (int i = 0; i < c.n_real; ++i) r[i] = x(2 * c.n_fields + i);
    c.drift(f.data(), r.data(), df.data(), dr.data());
    const cmat U = c.input_coupling(f.data(), r.data());
    for (int i = 0; i < c.n_fields; ++i)
        for (int p = 0; p < c.n_ports; ++p) df[i] += U(i, p) * drive.eval(p, 0.0);
    rvec g(2 * c.n_fields + c.n_real);
    for (int i = 0; i < c.n_fields; ++i) {
        g(2 * i) = df[i].real();
        g(2 * i + 1) = df[i].imag();
    }
    for (int i = 0; i < c.n_real; ++i) g(2 * c.n_fields + i) = dr[i];
    return g;
}

bool newton_polish(const WignerComponent& c, const Drive& drive, rvec& x, double tol,
                   int iters = 80) {
    const int n = int(x.size());
    for (int it = 0; it < iters; ++it) {
        const rvec g = effective_drift(c, drive, x);
        if (g.norm() < tol) return true;
        rmat J(n, n);
        const double h = 1e-6 * (1.0 + x.norm());
        for (int j = 0; j < n; ++j) {
            rvec xp = x, xm = x;
            xp(j) += h;
            xm(j) -= h;
            J.col(j) =
                (effective_drift(c, drive, xp) - effective_drift(c, drive, xm)) / (2 * h);
        }
        rvec dx = J.fullPivLu().solve(-g);
        bool advanced = false;
        double lam = 1.0;
        for (int ls = 0; ls < 30; ++ls) {
            rvec xn = x + lam * dx;
            if (effective_drift(c, drive, xn).norm() < g.norm()) {
                x = xn;
                advanced = true;
                break;
            }
            lam *= 0.5;
        }
        if (!advanced) break;
    }
    return effective_drift(c, drive, x).norm() < tol;
}

WignerState unpack(const WignerComponent& c, const rvec& x) {
    WignerState s;
    s.f = cvec(c.n_fields);
    s.r = rvec(c.n_real);
    for (int i = 0; i < c.n_fields; ++i) s.f(i) = cxd(x(2 * i), x(2 * i + 1));
    for (int i = 0; i < c.n_real; ++i) s.r(i) = x(2 * c.n_fields + i);
    return s;
}

Stability classify(const cvec& ev) {
    double max_re = -1e300;
    bool crossing_complex = false;
    int n_pos = 0;
    bool any_complex = false;
    for (int i = 0; i < ev.size(); ++i) {
        const bool cplx = std::abs(ev(i).imag()) > 1e-9 * (1 + std::abs(ev(i)));
        if (cplx) any_complex = true;
        if (ev(i).real() > 0) ++n_pos;
        if (ev(i).real() > max_re) {
            max_re = ev(i).real();
            crossing_complex = cplx;
        }
    }
    if (max_re < 0) return any_complex ? Stability::stable_spiral : Stability::stable_node;
    if (crossing_complex) return Stability::hopf_unstable;
    if (n_pos == 1) return Stability::saddle;
    return Stability::unstable;
}

// Photon-number polynomial n [loss(n)^2 + det(n)^2] - kappa P for the
// single-field kinds; empty when the kind does not reduce to one.
Poly intensity_polynomial(const WignerComponent& c, double drive_pow) {
    const auto& q = c.par;
    if (c.kind == "kerr") {
        const Poly loss = {0.5 * q.ktot, q.beta};
        const Poly det = {q.Delta, q.chi};
        Poly poly = pmul({0.0, 1.0}, padd(pmul(loss, loss), pmul(det, det)));
        poly[0] -= q.kappa[0] * drive_pow;
        return poly;
    }
    if (c.kind == "fc" && q.gamma_rc == 0.0) {
        const double d1 = q.delta_c.real(), d2 = -q.delta_c.imag();
        const Poly N = {0.0, q.eta / q.gamma, q.beta / q.gamma};
        Poly loss = padd(Poly{0.5 * (q.ktot + q.eta), q.beta}, [&] {
            Poly t = N;
            for (auto& v : t) v *= d2;
            return t;
        }());
        Poly det = padd(Poly{q.Delta, q.chi}, [&] {
            Poly t = N;
            for (auto& v : t) v *= d1;
            return t;
        }());
        Poly poly = pmul({0.0, 1.0}, padd(pmul(loss, loss), pmul(det, det)));
        poly[0] -= q.kappa[0] * drive_pow;
        return poly;
    }
    return {};
}

}  // namespace

int count_intensity_roots(const WignerComponent& c, double drive_amp) {
    Poly poly = intensity_polynomial(c, drive_amp * drive_amp);
    if (poly.empty()) throw std::invalid_argument("count_intensity_roots: unsupported kind");
    int n = 0;
    for (double rt : poly_real_roots(poly))
        if (rt > 1e-12) ++n;
    return n;
}

FixedPointSet fixed_points(const WignerComponent& c, const Drive& drive) {
    for (const auto& terms : drive.per_port)
        for (const auto& t : terms)
            if (t.omega != 0.0)
                throw std::invalid_argument("fixed_points: drive must be constant");
    const int dim = 2 * c.n_fields + c.n_real;
    std::vector<rvec> candidates;

    const cxd b0 = drive.eval(0, 0.0);
    Poly poly = intensity_polynomial(c, std::norm(b0));
    if (!poly.empty()) {
        const auto& q = c.par;
        for (double nph : poly_real_roots(poly)) {
            if (nph < -1e-9) continue;
            nph = std::max(nph, 0.0);
            double N = 0;
            if (c.kind == "fc") N = (q.eta * nph + q.beta * nph * nph) / q.gamma;
            const double d1 = q.delta_c.real(), d2 = -q.delta_c.imag();
            double loss, det;
            if (c.kind == "kerr") {
                loss = 0.5 * q.ktot + q.beta * nph;
                det = q.Delta + q.chi * nph;
            } else {
                loss = 0.5 * (q.ktot + q.eta) + q.beta * nph + d2 * N;
                det = q.Delta + q.chi * nph + d1 * N;
            }
            const cxd alpha = std::sqrt(q.kappa[0]) * b0 / (-cxd(loss, det));
            rvec x = rvec::Zero(dim);
            x(0) = alpha.real();
            x(1) = alpha.imag();
            if (c.n_real) x(2) = N;
            candidates.push_back(x);
        }
    } else {
        std::vector<double> scales = {0.0, 0.3, 1.0, 3.0};
        const cxd alin = b0 == 0.0 ? cxd(1.0, 0.0) : -b0 / (0.5 + std::abs(c.par.Delta));
        for (double s : scales)
            for (double ph : {0.0, M_PI / 2, M_PI, -M_PI / 2}) {
                rvec x = rvec::Zero(dim);
                const cxd a0 = s * alin * std::exp(cxd(0, ph));
                for (int i = 0; i < c.n_fields; ++i) {
                    x(2 * i) = a0.real();
                    x(2 * i + 1) = a0.imag();
                }
                for (int i = 0; i < c.n_real; ++i) x(2 * c.n_fields + i) = s * std::norm(a0);
                candidates.push_back(x);
            }
    }

    FixedPointSet out;
    double best_resid = 1e300;
    for (auto& x : candidates) {
        const bool ok = newton_polish(c, drive, x, 1e-10);
        const double resid = effective_drift(c, drive, x).norm();
        best_resid = std::min(best_resid, resid);
        if (!ok || resid > 1e-9) continue;
        bool dup = false;
        for (const auto& fpt : out.points) {
            rvec y(dim);
            for (int i = 0; i < c.n_fields; ++i) {
                y(2 * i) = fpt.state.f(i).real();
                y(2 * i + 1) = fpt.state.f(i).imag();
            }
            for (int i = 0; i < c.n_real; ++i) y(2 * c.n_fields + i) = fpt.state.r(i);
            if ((y - x).norm() < 1e-6 * (1 + x.norm())) dup = true;
        }
        if (dup) continue;
        FixedPoint fp;
        fp.state = unpack(c, x);
        fp.drift_residual = resid;
        auto g = linearize(c, fp.state, drive, 1e-6);
        Eigen::ComplexEigenSolver<cmat> es(g.A, false);
        fp.eigenvalues = es.eigenvalues();
        fp.classification = classify(fp.eigenvalues);
        out.points.push_back(fp);
    }
    if (out.points.empty())
        throw std::runtime_error("fixed_points: no root converged; best residual " +
                                 std::to_string(best_resid));
    return out;
}

HopfReport hopf_indicator(const cmat& A) {
    HopfReport rep;
    rep.det = A.determinant().real();
    const cxd tr = A.trace();
    const cxd tr2 = (A * A).trace();
    rep.L = ((tr * tr - tr2) * tr).real() - 2 * rep.det;
    if (A.rows() == 3) {
        if (rep.det > 0)
            rep.classification = Stability::unstable;  // pitchfork branch
        else if (rep.L > 0)
            rep.classification = Stability::hopf_unstable;
        else
            rep.classification = Stability::stable_spiral;
    } else {
        Eigen::ComplexEigenSolver<cmat> es(A, false);
        rep.classification = classify(es.eigenvalues());
    }
    return rep;
}

namespace {

double zero_crossing_omega(const std::vector<cxd>& alpha, double dt, cxd center) {
    std::vector<double> crossings;
    double prev = (alpha[0] - center).real();
    for (size_t i = 1; i < alpha.size(); ++i) {
        const double cur = (alpha[i] - center).real();
        if (prev < 0 && cur >= 0) {
            const double frac = prev / (prev - cur);
            crossings.push_back((double(i) - 1 + frac) * dt);
        }
        prev = cur;
    }
    if (crossings.size() < 4) throw std::runtime_error("limit_cycle: no oscillation detected");
    std::vector<double> periods(crossings.size() - 1);
    for (size_t i = 0; i + 1 < crossings.size(); ++i)
        periods[i] = crossings[i + 1] - crossings[i];
    std::nth_element(periods.begin(), periods.begin() + periods.size() / 2, periods.end());
    const double med = periods[periods.size() / 2];
    for (double p : periods)
        if (std::abs(p - med) > 0.2 * med)
            throw std::runtime_error("limit_cycle: period detection ambiguous");
    return 2 * M_PI / med;
}

}  // namespace

LimitCycle limit_cycle(const WignerComponent& c, const Drive& drive,
                       const LimitCycleOptions& opts) {
    LimitCycle lc;
    const int fi = opts.field_index;
    DetIntegrator det{c, drive};
    det.f[0] = 1.0;
    det.run(0.0, opts.settle_T, opts.dt);
    const int n = int(std::llround(opts.measure_T / opts.dt));
    std::vector<cxd> trace(n);
    std::vector<std::array<cxd, WignerComponent::kMaxFields>> fields(n);
    std::vector<std::array<double, WignerComponent::kMaxReal>> reals(n);
    for (int i = 0; i < n; ++i) {
        det.step(opts.settle_T + i * opts.dt, opts.dt);
        trace[i] = det.f[fi];
        fields[i] = det.f;
        reals[i] = det.r;
    }
    cxd center = 0;
    for (auto z : trace) center += z;
    center /= double(n);
    lc.center = center;
    lc.omega_c = zero_crossing_omega(trace, opts.dt, center);
    double amp = 0;
    for (auto z : trace) amp += std::abs(z - center);
    lc.amplitude = amp / n;

    const double Tper = 2 * M_PI / lc.omega_c;
    const int steps_per = std::max(4, int(std::llround(Tper / opts.dt)));
    for (int i = 0; i < std::min(n, steps_per); ++i) {
        cvec s(c.n_fields + c.n_real);
        for (int j = 0; j < c.n_fields; ++j) s(j) = fields[i][j];
        for (int j = 0; j < c.n_real; ++j) s(c.n_fields + j) = reals[i][j];
        lc.samples.push_back(s);
    }

    const auto f_start = det.f;
    const auto r_start = det.r;
    auto phase_of = [&](cxd z) { return std::arg(z - center); };

    if (opts.measure_mu) {
        const double pr = opts.probe_frac * lc.amplitude;
        const int nper = std::max(3, int(opts.probe_T / Tper));
        auto probe_response = [&](int port, int sign, double phase, double amp_probe) {
            Drive probed = drive;
            probed.add(port, amp_probe * std::exp(cxd(0, -phase)), sign * lc.omega_c);
            DetIntegrator run{c, probed};
            DetIntegrator ref{c, drive};
            run.f = f_start;
            run.r = r_start;
            ref.f = f_start;
            ref.r = r_start;
            double acc_run = 0, acc_ref = 0;
            double prev_run = phase_of(run.f[fi]), prev_ref = phase_of(ref.f[fi]);
            std::vector<double> diffs = {0.0};
            for (int k = 0; k < nper; ++k) {
                for (int i = 0; i < steps_per; ++i) {
                    const double t = (k * steps_per + i) * opts.dt;
                    run.step(t, opts.dt);
                    ref.step(t, opts.dt);
                    double cur = phase_of(run.f[fi]);
                    acc_run += std::remainder(cur - prev_run, 2 * M_PI);
                    prev_run = cur;
                    cur = phase_of(ref.f[fi]);
                    acc_ref += std::remainder(cur - prev_ref, 2 * M_PI);
                    prev_ref = cur;
                }
                diffs.push_back(acc_run - acc_ref);
            }
            double sxx = 0, sxy = 0, sx = 0, sy = 0;
            const int m = int(diffs.size());
            for (int k = 0; k < m; ++k) {
                const double tk = k * Tper;
                sx += tk;
                sy += diffs[k];
                sxx += tk * tk;
                sxy += tk * diffs[k];
            }
            return (m * sxy - sx * sy) / (m * sxx - sx * sx) / amp_probe;
        };
        for (int port = 0; port < c.n_ports; ++port) {
            cxd best = 0;
            for (int sign : {+1, -1}) {
                const double m0 = probe_response(port, sign, 0.0, pr);
                const double m90 = probe_response(port, sign, M_PI / 2, pr);
                const cxd mu(m0, -m90);
                if (std::abs(mu) > std::abs(best)) best = mu;
            }
            lc.mu_xi.push_back(best);
        }
    }

    if (opts.measure_diffusion) {
        const int M = opts.ensemble;
        const double dt = opts.dt;
        const int burn = int(std::llround(opts.burn_in_T / dt));
        const int nper = std::max(4, int(opts.diffusion_T / Tper));
        auto run_range = [&](int mbegin, int mend, std::vector<std::vector<double>>& out) {
            out.assign(nper, std::vector<double>());
            for (int mm = mbegin; mm < mend; ++mm) {
                std::array<cxd, WignerComponent::kMaxFields> f = f_start;
                std::array<double, WignerComponent::kMaxReal> r = r_start;
                double accp = 0, prev = phase_of(f[fi]);
                const std::uint64_t traj = std::uint64_t(mm);
                int step = 0;
                std::array<cxd, WignerComponent::kMaxPorts> dbeta{};
                std::array<cxd, WignerComponent::kMaxChannels> cdraw{};
                std::array<double, WignerComponent::kMaxChannels> rdraw{};
                auto advance = [&](int nsteps, bool accumulate) {
                    for (int i = 0; i < nsteps; ++i, ++step) {
                        const double t = step * dt;
                        for (int p = 0; p < c.n_ports; ++p)
                            dbeta[p] = drive.eval(p, t) * dt +
                                       rng::vacuum(opts.seed, traj, step, p, dt);
                        int ci = 0, ri = 0;
                        for (size_t ch = 0; ch < c.channels.size(); ++ch) {
                            if (c.channels[ch].is_complex)
                                cdraw[ci++] = rng::vacuum(opts.seed, traj, step,
                                                          c.n_ports + int(ch), dt);
                            else
                                rdraw[ri++] = rng::wiener(opts.seed, traj, step,
                                                          c.n_ports + int(ch), dt);
                        }
                        std::array<cxd, WignerComponent::kMaxFields> df{};
                        std::array<double, WignerComponent::kMaxReal> dr{};
                        c.drift(f.data(), r.data(), df.data(), dr.data());
                        for (int j = 0; j < c.n_fields; ++j) df[j] *= dt;
                        for (int j = 0; j < c.n_real; ++j) dr[j] *= dt;
                        const cmat U = c.input_coupling(f.data(), r.data());
                        for (int j = 0; j < c.n_fields; ++j)
                            for (int p = 0; p < c.n_ports; ++p) df[j] += U(j, p) * dbeta[p];
                        c.apply_noise(f.data(), r.data(), cdraw.data(), rdraw.data(),
                                      df.data(), dr.data());
                        for (int j = 0; j < c.n_fields; ++j) f[j] += df[j];
                        for (int j = 0; j < c.n_real; ++j) r[j] += dr[j];
                        const double cur = phase_of(f[fi]);
                        if (accumulate) accp += std::remainder(cur - prev, 2 * M_PI);
                        prev = cur;
                    }
                };
                advance(burn, false);
                accp = 0;
                for (int k = 0; k < nper; ++k) {
                    advance(steps_per, true);
                    out[k].push_back(accp);
                }
            }
        };
        const int threads = std::max(1, opts.threads);
        std::vector<std::vector<std::vector<double>>> parts(threads);
        if (threads == 1) {
            run_range(0, M, parts[0]);
        } else {
            std::vector<std::future<void>> futs;
            const int chunk = (M + threads - 1) / threads;
            for (int t = 0; t < threads; ++t) {
                const int b = t * chunk, e = std::min(M, (t + 1) * chunk);
                if (b >= e) break;
                futs.push_back(std::async(std::launch::async,
                                          [&, t, b, e] { run_range(b, e, parts[t]); }));
            }
            for (auto& fu : futs) fu.get();
        }
        std::vector<double> var(nper, 0.0);
        for (int k = 0; k < nper; ++k) {
            double s = 0, s2 = 0;
            int count = 0;
            for (const auto& part : parts)
                if (!part.empty())
                    for (double v : part[k]) {
                        s += v;
                        s2 += v * v;
                        ++count;
                    }
            var[k] = s2 / count - (s / count) * (s / count);
        }
        double sxx = 0, sxy = 0, sx = 0, sy = 0;
        for (int k = 0; k < nper; ++k) {
            const double tk = (k + 1) * Tper;
            sx += tk;
            sy += var[k];
            sxx += tk * tk;
            sxy += tk * var[k];
        }
        lc.D_xi = (nper * sxy - sx * sy) / (nper * sxx - sx * sx);
        const double icept = (sy - lc.D_xi * sx) / nper;
        double ss = 0;
        for (int k = 0; k < nper; ++k) {
            const double tk = (k + 1) * Tper;
            const double e = var[k] - (icept + lc.D_xi * tk);
            ss += e * e;
        }
        lc.D_xi_se = std::sqrt(ss / std::max(1, nper - 2) / (sxx - sx * sx / nper));
    }
    return lc;
}

std::vector<double> latch_asymmetry(const Trajectory& t) {
    std::vector<double> x(t.n_saved());
    for (int s = 0; s < t.n_saved(); ++s) x[s] = (t.field(s, 0) - t.field(s, 1)).real();
    return x;
}

SwitchingFit switching_lifetime(const std::vector<double>& record, double dt) {
    const int n = int(record.size());
    if (n < 64) throw std::invalid_argument("switching_lifetime: record too short");
    const double mean = std::accumulate(record.begin(), record.end(), 0.0) / n;
    int nfft = 1;
    while (nfft < 2 * n) nfft *= 2;
    std::vector<cxd> buf(nfft, 0.0);
    for (int i = 0; i < n; ++i) buf[i] = record[i] - mean;
    fft_pow2(buf);
    for (auto& z : buf) z = cxd(std::norm(z), 0.0);
    fft_pow2(buf);  // forward transform of a real-even spectrum: scaled autocorrelation
    std::vector<double> ac(n);
    for (int i = 0; i < n; ++i) ac[i] = buf[i == 0 ? 0 : nfft - i].real();
    const double ac0 = ac[0];
    if (!(ac0 > 0)) throw std::runtime_error("switching_lifetime: flat record");
    for (auto& v : ac) v /= ac0;

    int stop = n / 4;
    for (int i = 1; i < n / 2; ++i)
        if (ac[i] < 0.1) {
            stop = i;
            break;
        }
    SwitchingFit fit;
    // flips of the smoothed record
    {
        const int w = std::max(1, n / 400);
        double acc = 0;
        int sign = 0;
        for (int i = 0; i < n; ++i) {
            acc += record[i] - mean;
            if (i >= w) acc -= record[i - w] - mean;
            if (i >= w) {
                const int s = acc > 0 ? 1 : -1;
                if (sign != 0 && s != sign) ++fit.n_flips;
                sign = s;
            }
        }
    }
    if (stop < 4) {
        fit.tau_sw = dt;
        fit.r_squared = 0.0;
        return fit;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (int i = 1; i < stop; ++i) {
        if (ac[i] <= 0) break;
        const double x = i * dt, y = std::log(ac[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    if (m < 3) {
        fit.tau_sw = dt;
        fit.r_squared = 0.0;
        return fit;
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const double icept = (sy - slope * sx) / m;
    double ss_res = 0, ss_tot = 0;
    const double ybar = sy / m;
    for (int i = 1; i <= m; ++i) {
        const double x = i * dt, y = std::log(ac[i]);
        const double e = y - (icept + slope * x);
        ss_res += e * e;
        ss_tot += (y - ybar) * (y - ybar);
    }
    if (slope >= 0)
        throw std::runtime_error("switching_lifetime: non-decaying autocorrelation");
    fit.tau_sw = -1.0 / slope;
    fit.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 0.0;
    return fit;
}

AmpPoint amplifier_gain_noise(const AbcdModel& m, double omega) {
    const auto tf = transfer_function(m, omega);
    AmpPoint p;
    p.gain = std::abs(tf.T(0, 0));
    cmat G = 0.5 * tf.T * tf.T.adjoint();
    if (tf.N.cols() > 0) G += tf.N * tf.N.adjoint();
    p.noise = std::sqrt(2.0 * G(0, 0).real());
    return p;
}

}  // namespace photonq
