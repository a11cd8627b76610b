#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "photonq/nonlin.hpp"
#include "photonq/rng.hpp"

using namespace photonq;

namespace {
ParamMap gaas7b(double Delta) {
    return {{"Delta", Delta},      {"kappa", 0.5},  {"eta", 0.5},
            {"delta_re", 2.7e-3},  {"gamma", 1.2},  {"beta", 7.9e-5},
            {"gamma_rc", 0.0},     {"chi", 0.0}};
}
}  // namespace

TEST_CASE("linear-cavity limit of the intensity cubic") {
    auto c = make_sde("fc", {{"Delta", 0.0}, {"kappa", 0.8}, {"eta", 0.2},
                             {"delta_re", 0.0}, {"gamma", 1.2}});
    auto fps = fixed_points(c, Drive::constant(1, 0, 1.0));
    REQUIRE(fps.points.size() == 1);
    const double nph = std::norm(fps.points[0].state.f(0));
    CHECK(nph == doctest::Approx(0.8 / 0.25).epsilon(1e-9));
    CHECK(fps.points[0].drift_residual < 1e-9);
    CHECK(fps.points[0].classification == Stability::stable_node);
}

TEST_CASE("bistable band has three roots with a saddle in the middle") {
    const double k = 1.0;
    auto c = make_sde("fc", {{"Delta", -1.2 * k}, {"kappa", 0.8}, {"eta", 0.2},
                             {"delta_re", 0.014}, {"gamma", 1.2}});
    // chi_eff = eta delta / gamma = 2.333e-3; scan for a three-root drive
    double bin_bistable = -1;
    for (double b = 2.0; b < 40.0; b += 0.25) {
        if (count_intensity_roots(c, b) == 3) {
            bin_bistable = b;
            break;
        }
    }
    REQUIRE(bin_bistable > 0);
    auto fps = fixed_points(c, Drive::constant(1, 0, bin_bistable));
    REQUIRE(fps.points.size() == 3);
    std::sort(fps.points.begin(), fps.points.end(), [](const auto& a, const auto& b) {
        return std::norm(a.state.f(0)) < std::norm(b.state.f(0));
    });
    CHECK(fps.points[1].classification == Stability::saddle);
    CHECK(fps.points[0].classification != Stability::saddle);
    for (const auto& p : fps.points) CHECK(p.drift_residual < 1e-9);
}

TEST_CASE("bistability onset sits at -sqrt(3/4)(kappa+eta)") {
    // turning points of P(n) = n(l^2 + (Delta + chi n)^2) exist iff Delta^2 > 3 l^2
    const double chi = 0.2 * 0.014 / 1.2, l = 0.5;
    auto has_three = [&](double Delta) {
        auto c = make_sde("fc", {{"Delta", Delta}, {"kappa", 0.8}, {"eta", 0.2},
                                 {"delta_re", 0.014}, {"gamma", 1.2}});
        const double disc = 4 * Delta * Delta - 3 * (l * l + Delta * Delta);
        if (disc <= 0) {
            for (double b = 0.5; b < 60.0; b += 0.5)
                if (count_intensity_roots(c, b) != 1) return true;
            return false;
        }
        const double np = (-2 * Delta + std::sqrt(disc)) / (3 * chi);
        const double nm = (-2 * Delta - std::sqrt(disc)) / (3 * chi);
        auto P = [&](double n) {
            return n * (l * l + std::pow(Delta + chi * n, 2));
        };
        const double Pmid = 0.5 * (P(np) + P(nm));
        return count_intensity_roots(c, std::sqrt(Pmid / 0.8)) == 3;
    };
    const double onset = -std::sqrt(3.0 / 4.0);  // kappa + eta = 1
    CHECK(!has_three(onset + 0.02));
    CHECK(has_three(onset - 0.02));
}

TEST_CASE("cubic discriminant matches brute-force root counting on a grid") {
    // kerr cavity: the intensity polynomial is an exact cubic
    auto poly_roots = [](double Delta, double bin, int* count) {
        auto c = make_sde("kerr", {{"Delta", Delta}, {"kappa", 1.0},
                                   {"chi", 2.333e-3}, {"beta", 0.0}});
        *count = count_intensity_roots(c, bin);
    };
    int mismatches = 0;
    for (int i = 0; i < 50; ++i) {
        for (int j = 0; j < 50; ++j) {
            const double Delta = -1.5 + 1.2 * i / 49.0;
            const double bin = 1.0 + 24.0 * j / 49.0;
            // cubic n(( 1/2)^2 + (Delta + chi n)^2) = kappa bin^2:
            // c3 n^3 + c2 n^2 + c1 n + c0 = 0
            const double chi = 2.333e-3, kap = 1.0;
            const double c3 = chi * chi, c2 = 2 * Delta * chi,
                         c1 = 0.25 + Delta * Delta, c0 = -kap * bin * bin;
            const double disc = 18 * c3 * c2 * c1 * c0 - 4 * c2 * c2 * c2 * c0 +
                                c2 * c2 * c1 * c1 - 4 * c3 * c1 * c1 * c1 -
                                27 * c3 * c3 * c0 * c0;
            int count = 0;
            poly_roots(Delta, bin, &count);
            const int want = disc > 0 ? 3 : 1;
            if (count != want) ++mismatches;
        }
    }
    CHECK(mismatches == 0);
}

TEST_CASE("hopf indicator on the worked eigenvalue examples") {
    auto from_eigs = [](cxd l1, cxd mu) {
        cmat D = cmat::Zero(3, 3);
        D(0, 0) = l1;
        D(1, 1) = mu;
        D(2, 2) = std::conj(mu);
        return D;
    };
    {
        auto rep = hopf_indicator(from_eigs(-1.0, cxd(-0.1, 2.0)));
        const double want = 4 * std::norm(cxd(-1.1, 2.0)) * (-0.1);
        CHECK(rep.L == doctest::Approx(want).epsilon(1e-9));
        CHECK(rep.L < 0);
        CHECK(rep.det < 0);
        CHECK(rep.classification == Stability::stable_spiral);
    }
    {
        auto rep = hopf_indicator(from_eigs(-1.0, cxd(0.1, 2.0)));
        CHECK(rep.L > 0);
        CHECK(rep.classification == Stability::hopf_unstable);
    }
}

TEST_CASE("hopf indicator sign equals the complex-pair real part, 1000 draws") {
    std::mt19937_64 gen(4242);
    std::normal_distribution<double> nd;
    int agreements = 0, trials = 0;
    while (trials < 1000) {
        // random doubled-up 3x3 (fc-like structure)
        cmat A(3, 3);
        const cxd z1(nd(gen), nd(gen)), z2(nd(gen), nd(gen)), z3(nd(gen), nd(gen));
        const cxd w(nd(gen), nd(gen));
        A << z1, z2, z3, std::conj(z2), std::conj(z1), std::conj(z3), w, std::conj(w),
            cxd(nd(gen), 0);
        Eigen::ComplexEigenSolver<cmat> es(A, false);
        // find the complex pair
        int pair = -1;
        for (int i = 0; i < 3; ++i)
            if (std::abs(es.eigenvalues()(i).imag()) > 1e-6) pair = i;
        if (pair < 0) continue;  // three real eigenvalues: L sign not diagnostic
        ++trials;
        auto rep = hopf_indicator(A);
        if ((rep.L > 0) == (es.eigenvalues()(pair).real() > 0)) ++agreements;
    }
    CHECK(agreements == 1000);
}

TEST_CASE("ndopo limit cycle: amplitude, frequency, diffusion, and the bound") {
    const double kappa = 1.0, beta = 2e-4, eps = 0.52, Delta = 1.0;
    auto c = make_sde("ndopo", {{"Delta", Delta}, {"kappa", kappa}, {"eps_re", eps},
                                {"beta", beta}});
    LimitCycleOptions opts;
    opts.dt = 5e-4;
    opts.settle_T = 800.0;
    opts.measure_T = 60.0;
    opts.probe_T = 60.0;
    opts.ensemble = 256;
    opts.diffusion_T = 50.0;
    opts.threads = 4;
    auto lc = limit_cycle(c, Drive::none(3), opts);
    const double amp_want = std::sqrt((2 * eps - kappa) / beta);
    CHECK(lc.omega_c == doctest::Approx(Delta).epsilon(0.01));
    CHECK(lc.amplitude == doctest::Approx(amp_want).epsilon(0.02));
    // analytic |mu| per port and diffusion
    const double mu_want = std::sqrt(kappa) / (2 * amp_want);
    REQUIRE(lc.mu_xi.size() == 3);
    CHECK(std::abs(lc.mu_xi[0]) == doctest::Approx(mu_want).epsilon(0.15));
    CHECK(std::abs(lc.mu_xi[1]) == doctest::Approx(mu_want).epsilon(0.15));
    const double D_want = (beta / 8) * (kappa / 2) / (eps - kappa / 2);
    CHECK(D_want == doctest::Approx(6.25e-4).epsilon(1e-10));
    CHECK(lc.D_xi == doctest::Approx(D_want).epsilon(0.2));
    // drift-diffusion inequality, saturated within 25 percent
    double bound = 0;
    for (auto mu : lc.mu_xi) bound += 0.25 * std::norm(mu);
    CHECK(lc.D_xi >= bound - 2 * lc.D_xi_se);
    CHECK(lc.D_xi / bound == doctest::Approx(1.0).epsilon(0.25));
}

TEST_CASE("free-carrier cycle frequency and excess diffusion") {
    auto c = make_sde("fc", gaas7b(-1.0));
    LimitCycleOptions opts;
    opts.dt = 2e-4;
    opts.settle_T = 250.0;
    opts.measure_T = 40.0;
    opts.probe_T = 40.0;
    opts.ensemble = 128;
    opts.diffusion_T = 40.0;
    opts.threads = 4;
    auto lc = limit_cycle(c, Drive::constant(1, 0, 100.0), opts);
    CHECK(lc.omega_c == doctest::Approx(2.28).epsilon(0.02));
    double bound = 0;
    for (auto mu : lc.mu_xi) bound += 0.25 * std::norm(mu);
    CHECK(lc.D_xi > bound);  // never quantum-limited
}

TEST_CASE("hopf indicator flags the free-carrier instability at the right pump") {
    auto stable_at = [&](double bin) {
        auto c = make_sde("fc", gaas7b(-0.8));
        auto fps = fixed_points(c, Drive::constant(1, 0, bin));
        double maxL = -1e300;
        for (auto& p : fps.points) {
            auto g = linearize(c, p.state, Drive::constant(1, 0, bin), 1e-6);
            maxL = std::max(maxL, hopf_indicator(g.A).L);
        }
        return maxL < 0;
    };
    CHECK(stable_at(70.0));
    CHECK(!stable_at(90.0));
}

TEST_CASE("synthetic telegraph autocorrelation recovers the Markov lifetime") {
    const double gamma_sw = 0.02, dt = 0.1, T = 40000.0;
    const int n = int(T / dt);
    std::vector<double> sig(n);
    double state = 1.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng::to_unit(rng::derive(99, 0, i, 0));
        if (u < gamma_sw * dt) state = -state;
        sig[i] = state;
    }
    auto fit = switching_lifetime(sig, dt);
    CHECK(fit.tau_sw == doctest::Approx(1.0 / (2 * gamma_sw)).epsilon(0.1));
    CHECK(fit.r_squared > 0.95);
    CHECK(fit.n_flips > 100);
}

TEST_CASE("white noise is rejected by the switching fit") {
    std::vector<double> sig(1 << 14);
    for (size_t i = 0; i < sig.size(); ++i)
        sig[i] = rng::normal(7, 0, i, 0);
    bool rejected = false;
    try {
        auto fit = switching_lifetime(sig, 0.1);
        rejected = fit.r_squared < 0.9;
    } catch (const std::exception&) {
        rejected = true;
    }
    CHECK(rejected);
}

TEST_CASE("latch lifetimes: free carrier switches faster than equal-chi kerr") {
    // single spot check here; the acceptance suite sweeps three detunings
    const double kp = 0.6, km = 0.2, pump = 10.2, Delta = -0.514;
    auto mk = [&](const std::string& kind) {
        ParamMap inner{{"Delta", Delta}, {"eta", 0.2}, {"beta", 0.0}, {"chi", 0.0}};
        if (kind == "fc") {
            inner["delta_re"] = 0.014;
            inner["gamma"] = 1.2;
        } else {
            inner["chi"] = 0.2 * 0.014 / 1.2;
            inner["eta"] = 0.2;
        }
        return latch_build(kind, inner, kp, km);
    };
    auto run = [&](const std::string& kind) {
        auto latch = mk(kind);
        TrajectoryOptions o;
        o.sample_initial_vacuum = false;
        o.f0 = {cxd(9.3, 0.0), cxd(16.1, 0.0)};
        o.r0 = {0.2 * 9.3 * 9.3 / 1.2, 0.2 * 16.1 * 16.1 / 1.2};
        o.save_stride = 20;
        o.record_io = false;
        auto tr = integrate_trajectory(latch, Drive::constant(2, 0, pump), 0.01, 250000.0, 11, o);
        auto x = latch_asymmetry(tr);
        x.erase(x.begin(), x.begin() + int(x.size()) / 20);
        return switching_lifetime(x, 20 * 0.01);
    };
    auto fc = run("fc");
    auto kerr = run("kerr");
    CHECK(fc.n_flips > 60);
    CHECK(kerr.n_flips > 20);
    CHECK(fc.tau_sw < kerr.tau_sw);
    CHECK(fc.r_squared > 0.9);
    CHECK(kerr.r_squared > 0.9);
}

TEST_CASE("ndopo linear amplifier saturates the Caves bound") {
    const double kappa = 1.0, eps = 0.4;
    auto c = make_sde("ndopo",
                      {{"Delta", 0.0}, {"kappa", kappa}, {"eps_re", eps}, {"beta", 1e-8}});
    WignerState fp{cvec::Zero(2), rvec(0)};
    auto g = linearize(c, fp, Drive::none(3));
    for (double w : {0.0, 0.2, 0.5, 1.0}) {
        auto p = amplifier_gain_noise(g, w);
        CHECK(p.gain > 1.0);
        CHECK(p.noise == doctest::Approx(caves_bound(p.gain)).epsilon(1e-6));
    }
}

TEST_CASE("latch build rejects bad couplings and unknown kinds") {
    CHECK_THROWS(latch_build("fc", {}, -1.0, 0.1));
    CHECK_THROWS(latch_build("opo", {}, 0.5, 0.1));
}
