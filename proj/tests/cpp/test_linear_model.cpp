#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "photonq/abcd.hpp"
#include "photonq/gaussian.hpp"

using namespace photonq;

namespace {

std::mt19937_64 rng(12345);

cmat random_cmat(int r, int c, double scale = 1.0) {
    std::normal_distribution<double> nd;
    cmat M(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) M(i, j) = scale * cxd(nd(rng), nd(rng));
    return M;
}

// Random physical component: Hermitian R-, symmetric R+, arbitrary couplings, unitary S.
LinearSlhModel random_slh(int n, int m, bool active = true) {
    LinearSlhModel g;
    g.n_modes = n;
    g.n_ports = m;
    cmat H = random_cmat(n, n);
    g.R_minus = 0.5 * (H + H.adjoint());
    cmat P = active ? random_cmat(n, n, 0.4) : cmat::Zero(n, n);
    g.R_plus = 0.5 * (P + P.transpose());
    g.Lambda_minus = random_cmat(m, n);
    g.Lambda_plus = active ? random_cmat(m, n, 0.4) : cmat::Zero(m, n);
    Eigen::HouseholderQR<cmat> qr(random_cmat(m, m));
    g.S = qr.householderQ();
    g.r = cvec::Zero(n);
    g.lambda = cvec::Zero(m);
    for (int i = 0; i < n; ++i) g.r(i) = cxd(0.1, -0.2) * double(i + 1);
    for (int i = 0; i < m; ++i) g.lambda(i) = cxd(-0.05, 0.1) * double(i + 1);
    return g;
}

AbcdModel phase_model(double phi, int nports = 1) {
    return to_abcd(make_component("phase", {{"phi", phi}, {"n", double(nports)}}));
}

}  // namespace

TEST_CASE("beamsplitter at zero angle is the identity") {
    auto bs = make_component("beamsplitter", {{"theta", 0.0}});
    CHECK((bs.S - cmat::Identity(2, 2)).norm() == doctest::Approx(0).epsilon(1e-14));
    CHECK(bs.Lambda_minus.size() == 0);
}

TEST_CASE("phases add in series") {
    auto g = series(phase_model(0.7), phase_model(0.4));
    CHECK(std::abs(g.D(0, 0) - std::exp(I_UNIT * 1.1)) < 1e-14);
}

TEST_CASE("displacements cancel in series") {
    auto dp = to_abcd(make_component("displacement", {{"re", 0.3}, {"im", -0.8}}));
    auto dm = to_abcd(make_component("displacement", {{"re", -0.3}, {"im", 0.8}}));
    auto g = series(dp, dm);
    CHECK(g.c.norm() == doctest::Approx(0).epsilon(1e-14));
}

TEST_CASE("ch11 cavity couplings") {
    auto cav = make_component(
        "cavity", {{"Delta", 0.1}, {"kappa1", 0.01}, {"kappa2", 0.01}, {"kappa3", 0.01}});
    for (int i = 0; i < 3; ++i)
        CHECK(cav.Lambda_minus(i, 0).real() == doctest::Approx(std::sqrt(0.01)));
    CHECK(cav.R_minus(0, 0).real() == doctest::Approx(0.1));
}

TEST_CASE("single-port cavity ABCD blocks") {
    const double Delta = 0.3, kappa = 0.8;
    auto g = to_abcd(make_component("cavity", {{"Delta", Delta}, {"kappa1", kappa}}));
    CHECK(std::abs(g.A(0, 0) - cxd(-kappa / 2, -Delta)) < 1e-14);
    CHECK(std::abs(g.A(0, 1)) < 1e-14);
    CHECK(std::abs(g.B(0, 0) + std::sqrt(kappa)) < 1e-14);
    CHECK(std::abs(g.C(0, 0) - std::sqrt(kappa)) < 1e-14);
    CHECK(std::abs(g.D(0, 0) - 1.0) < 1e-14);
}

TEST_CASE("degenerate OPO ABCD matrix") {
    const double Delta = 0.2, kappa = 1.0, eps = 0.25;
    auto g = to_abcd(make_component(
        "dopo", {{"Delta", Delta}, {"kappa", kappa}, {"eps_re", eps}, {"eps_im", 0.0}}));
    cmat want(2, 2);
    want << cxd(-kappa / 2, -Delta), eps, eps, cxd(-kappa / 2, Delta);
    CHECK((g.A - want).norm() < 1e-14);
}

TEST_CASE("zero component gives identity D and empty dynamics") {
    LinearSlhModel m;
    m.n_modes = 1;
    m.n_ports = 1;
    m.S = cmat::Identity(1, 1);
    m.Lambda_minus = cmat::Zero(1, 1);
    m.Lambda_plus = cmat::Zero(1, 1);
    m.R_minus = cmat::Zero(1, 1);
    m.R_plus = cmat::Zero(1, 1);
    m.r = cvec::Zero(1);
    m.lambda = cvec::Zero(1);
    auto g = to_abcd(m);
    CHECK(g.A.norm() == 0);
    CHECK(g.B.norm() == 0);
    CHECK(g.C.norm() == 0);
    CHECK((g.D - cmat::Identity(2, 2)).norm() == 0);
}

TEST_CASE("make_component rejects bad input") {
    CHECK_THROWS(make_component("no-such-kind", {}));
    CHECK_THROWS(make_component("cavity", {{"Delta", 0.0}, {"kappa1", -1.0}}));
    CHECK_THROWS(make_component("cavity", {{"kappa1", 1.0}}));  // missing Delta
    CHECK_THROWS(make_component("cavity", {{"Delta", std::nan("")}, {"kappa1", 1.0}}));
}

TEST_CASE("constructed models satisfy realizability") {
    auto cav = to_abcd(make_component("cavity", {{"Delta", 0.1}, {"kappa1", 0.3}}));
    auto rep = check_realizable(cav, 1e-8);
    CHECK(rep.passed);
    CHECK(rep.residual_commutator < 1e-12);

    auto opo = to_abcd(make_component(
        "dopo", {{"Delta", 0.0}, {"kappa", 1.0}, {"eps_re", 0.25}, {"eps_im", 0.0}}));
    CHECK(check_realizable(opo, 1e-8).passed);
}

TEST_CASE("damping without bath coupling fails realizability") {
    auto g = AbcdModel::zero(1, 1);
    g.A(0, 0) = g.A(1, 1) = -0.5;  // decay, but B = 0
    g.B.setZero();
    auto rep = check_realizable(g, 1e-8);
    CHECK(rep.residual_commutator > 0.1);
    CHECK(!rep.passed);
}

TEST_CASE("concatenation eigenvalues are the union") {
    auto c1 = to_abcd(make_component("cavity", {{"Delta", 0.4}, {"kappa1", 0.2}}));
    auto c2 = to_abcd(make_component("cavity", {{"Delta", -1.1}, {"kappa1", 0.7}}));
    auto g = concatenate(c1, c2);
    CHECK(g.n_modes == 2);
    CHECK(g.n_ports == 2);
    Eigen::ComplexEigenSolver<cmat> es(g.A, false);
    std::vector<cxd> ev(es.eigenvalues().data(), es.eigenvalues().data() + 4);
    auto contains = [&](cxd w) {
        for (auto v : ev)
            if (std::abs(v - w) < 1e-12) return true;
        return false;
    };
    CHECK(contains(cxd(-0.1, -0.4)));
    CHECK(contains(cxd(-0.35, 1.1)));
    CHECK(g.structure_residual() < 1e-12);
}

TEST_CASE("series associativity up to state ordering") {
    // three random one-mode two-port models: compare (a<|b)<|c with a<|(b<|c)
    auto a = to_abcd(random_slh(1, 2));
    auto b = to_abcd(random_slh(1, 2));
    auto c = to_abcd(random_slh(1, 2));
    auto left = series(series(a, b), c);
    auto right = series(a, series(b, c));
    // state ordering happens to agree for the chain with interleave permutations
    CHECK((left.D - right.D).norm() < 1e-10);
    // transfer functions are ordering-invariant
    for (double w : {0.0, 0.37, -1.2}) {
        auto Tl = transfer_function(left, w).T;
        auto Tr = transfer_function(right, w).T;
        CHECK((Tl - Tr).norm() < 1e-9 * (1 + Tl.norm()));
    }
}

TEST_CASE("feedback of series with identity equals plain feedback") {
    auto g = to_abcd(random_slh(2, 3));
    auto idm = to_abcd(make_component("identity", {{"n", 3.0}}));
    auto lhs = feedback(series(idm, g), 2, 3);
    auto rhs = feedback(g, 2, 3);
    for (double w : {0.11, -0.7}) {
        auto Tl = transfer_function(lhs, w).T;
        auto Tr = transfer_function(rhs, w).T;
        CHECK((Tl - Tr).norm() < 1e-9 * (1 + Tl.norm()));
    }
}

TEST_CASE("feedback with a pi phase loop stays finite") {
    auto g = concatenate(phase_model(M_PI), phase_model(0.0));
    auto h = feedback(g, 1, 1);
    CHECK(h.n_ports == 1);
    CHECK(std::abs(h.D(0, 0) - 1.0) < 1e-14);  // passthrough port unchanged
}

TEST_CASE("feedback rejects algebraic loops") {
    auto g = phase_model(0.0);  // D = I, loop gain 1
    CHECK_THROWS(feedback(g, 1, 1));
}

TEST_CASE("fig 01-f6 interferometer circuit builds") {
    auto bs1 = to_abcd(make_component("beamsplitter", {{"theta", 0.6}}));
    auto bs2 = to_abcd(make_component("beamsplitter", {{"theta", -0.3}}));
    auto cavs = concatenate(
        to_abcd(make_component("cavity", {{"Delta", 0.2}, {"kappa1", 0.5}})),
        to_abcd(make_component("cavity", {{"Delta", -0.2}, {"kappa1", 0.5}})));
    auto circ = feedback(series(series(bs1, cavs), bs2), 2, 2);
    CHECK(circ.n_ports == 1);
    CHECK(circ.n_modes == 2);
    CHECK(check_realizable(circ, 1e-7).passed);
}

TEST_CASE("trivial controller gives effective decay (sqrt k1 + sqrt k2)^2") {
    const double k = 0.01, kn = 5.0;
    auto plant = to_abcd(make_component(
        "cavity", {{"Delta", 0.1}, {"kappa1", k}, {"kappa2", k}, {"kappa3", k}}));
    auto loop = feedback(plant, 1, 2);
    // photon number kn * k3 / (k1+k2+k3+2 sqrt(k1 k2)) = kn/5
    auto st = steady_covariance(loop, InputCovariance::thermal(2, 1, kn));
    CHECK(photon_number(st, 0) == doctest::Approx(kn / 5.0).epsilon(1e-9));
}

TEST_CASE("adiabatic elimination of the degenerate OPO is a squeezer") {
    const double kappa = 1.0, eps = 0.25;
    auto g = to_abcd(make_component(
        "dopo", {{"Delta", 0.0}, {"kappa", kappa}, {"eps_re", eps}, {"eps_im", 0.0}}));
    auto s = adiabatic_eliminate(g);
    const double eta = std::log((kappa + 2 * eps) / (kappa - 2 * eps));
    CHECK(eta == doctest::Approx(std::log(3.0)));
    CHECK(std::abs(s.T0(0, 0)) == doctest::Approx(std::cosh(eta)).epsilon(1e-12));
    CHECK(std::abs(s.T0(0, 1)) == doctest::Approx(std::sinh(eta)).epsilon(1e-12));
}

TEST_CASE("adiabatic elimination of nondegenerate OPO is a two-mode squeezer") {
    const double ka = 1.0, kb = 2.0, eps = 0.5;
    auto g = to_abcd(make_component("ndopo", {{"Delta_a", 0.0},
                                              {"Delta_b", 0.0},
                                              {"kappa_a", ka},
                                              {"kappa_b", kb},
                                              {"eps_re", eps},
                                              {"eps_im", 0.0}}));
    auto s = adiabatic_eliminate(g);
    const double eta =
        std::log((std::sqrt(ka * kb) + eps) / (std::sqrt(ka * kb) - eps));
    CHECK(std::abs(s.T0(0, 0)) == doctest::Approx(std::cosh(eta)).epsilon(1e-12));
    // cross coupling sits between mode 1 and the conjugate of mode 2
    CHECK(std::abs(s.T0(0, 3)) == doctest::Approx(std::sinh(eta)).epsilon(1e-12));
}

TEST_CASE("resonant cavity adiabatic elimination is all-pass of -1") {
    auto g = to_abcd(make_component("cavity", {{"Delta", 0.0}, {"kappa1", 2.0}}));
    auto s = adiabatic_eliminate(g);
    CHECK(std::abs(s.T0(0, 0) + 1.0) < 1e-13);
}

TEST_CASE("adiabatic elimination rejects marginal modes") {
    auto g = to_abcd(make_component("cavity", {{"Delta", 0.0}, {"kappa1", 0.0}}));
    CHECK_THROWS(adiabatic_eliminate(g));
}

TEST_CASE("composition closure and symplectic D preservation, 100 random models") {
    std::uniform_int_distribution<int> dn(1, 3), dm(1, 3);
    int checked = 0;
    const cmat dummy;
    for (int trial = 0; trial < 100; ++trial) {
        const int m = dm(rng);
        auto g1 = to_abcd(random_slh(dn(rng), m));
        auto g2 = to_abcd(random_slh(dn(rng), m));
        REQUIRE(check_realizable(g1, 1e-8).passed);
        REQUIRE(check_realizable(g2, 1e-8).passed);
        auto gc = concatenate(g1, g2);
        auto gs = series(g2, g1);
        CHECK(check_realizable(gc, 1e-7).passed);
        CHECK(check_realizable(gs, 1e-7).passed);
        const cmat Tb = theta_mat(gs.n_ports);
        CHECK((gs.D * Tb * gs.D.transpose() - Tb).norm() < 1e-8 * (1 + gs.D.squaredNorm()));
        if (m >= 2) {
            bool loop_ok = true;
            AbcdModel gf;
            try {
                gf = feedback(gc, 1, m + 1);
            } catch (const std::exception&) {
                loop_ok = false;  // algebraic loop in an unlucky draw
            }
            if (loop_ok) {
                CHECK(check_realizable(gf, 1e-7).passed);
                const cmat Tf = theta_mat(gf.n_ports);
                CHECK((gf.D * Tf * gf.D.transpose() - Tf).norm() <
                      1e-7 * (1 + gf.D.squaredNorm()));
                ++checked;
            }
        }
    }
    CHECK(checked > 20);
}

TEST_CASE("C minus block reproduces Lambda_minus") {
    auto m = random_slh(2, 3);
    auto g = to_abcd(m);
    CHECK((g.C.topLeftCorner(3, 2) - m.Lambda_minus).norm() < 1e-14);
}

TEST_CASE("passive models have block-diagonal ABCD") {
    auto g = to_abcd(random_slh(2, 2, /*active=*/false));
    CHECK(g.A.topRightCorner(2, 2).norm() == doctest::Approx(0).epsilon(1e-14));
    CHECK(g.B.topRightCorner(2, 2).norm() == doctest::Approx(0).epsilon(1e-14));
    CHECK(g.C.topRightCorner(2, 2).norm() == doctest::Approx(0).epsilon(1e-14));
    CHECK(g.D.topRightCorner(2, 2).norm() == doctest::Approx(0).epsilon(1e-14));
}

TEST_CASE("quadrature conversion round trip") {
    auto g = to_abcd(random_slh(2, 2));
    rmat Aq = to_quadrature(g.A);
    CHECK(Aq.rows() == 4);
    // quadrature form of a doubled matrix must be real: residual of imag part
    const cmat T = quadrature_transform(2);
    cmat Aq_c = T * g.A * T.inverse();
    CHECK(Aq_c.imag().norm() < 1e-12 * (1 + Aq_c.norm()));
    // eigenvalues preserved
    Eigen::ComplexEigenSolver<cmat> e1(g.A, false), e2(Aq_c, false);
    std::vector<double> v1, v2;
    for (int i = 0; i < 4; ++i) {
        v1.push_back(e1.eigenvalues()(i).real());
        v2.push_back(e2.eigenvalues()(i).real());
    }
    std::sort(v1.begin(), v1.end());
    std::sort(v2.begin(), v2.end());
    for (int i = 0; i < 4; ++i) CHECK(v1[i] == doctest::Approx(v2[i]).epsilon(1e-9));
}

TEST_CASE("drive and offset terms carried through the algebra") {
    auto d = to_abcd(make_component("displacement", {{"re", 1.0}, {"im", 0.5}}));
    auto cav = to_abcd(make_component("cavity", {{"Delta", 0.0}, {"kappa1", 1.0}}));
    auto g = series(cav, d);  // displaced input into cavity
    // steady state mean: A mu + a = 0 with a = B c_displacement contribution
    auto st = steady_covariance(g);
    // alpha = -sqrt(kappa) beta / (kappa/2) = -2 beta for kappa=1
    CHECK(std::abs(st.mu(0) - cxd(-2.0, -1.0)) < 1e-12);
}
