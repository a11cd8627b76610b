#include "photonq/abcd.hpp"

#include <Eigen/LU>
#include <stdexcept>

namespace photonq {

AbcdModel AbcdModel::zero(int n, int m, Convention conv) {
    AbcdModel g;
    g.n_modes = n;
    g.n_ports = m;
    g.A = cmat::Zero(2 * n, 2 * n);
    g.B = cmat::Zero(2 * n, 2 * m);
    g.C = cmat::Zero(2 * m, 2 * n);
    g.D = cmat::Identity(2 * m, 2 * m);
    g.a = cvec::Zero(2 * n);
    g.c = cvec::Zero(2 * m);
    g.F = cmat::Zero(2 * n, 0);
    g.convention = conv;
    return g;
}

double AbcdModel::structure_residual() const {
    if (n_aux > 0) {
        const int n = n_modes, m = n_ports;
        double res =
            (A.block(n, n, n, n) - A.topLeftCorner(n, n).conjugate()).norm() +
            (A.block(n, 0, n, n) - A.block(0, n, n, n).conjugate()).norm();
        res += (B.block(n, m, n, m) - B.topLeftCorner(n, m).conjugate()).norm();
        res += A.bottomRows(n_aux).imag().norm();  // real rows stay real
        return res;
    }
    double res = doubled_structure_residual(A) + doubled_structure_residual(B) +
                 doubled_structure_residual(C) + doubled_structure_residual(D);
    res += (a.tail(n_modes) - a.head(n_modes).conjugate()).norm();
    res += (c.tail(n_ports) - c.head(n_ports).conjugate()).norm();
    return res;
}

namespace {
cmat sym_blocks(const cmat& M) {
    const long r = M.rows() / 2, c = M.cols() / 2;
    cmat Mm = 0.5 * (M.topLeftCorner(r, c) + M.bottomRightCorner(r, c).conjugate());
    cmat Mp = 0.5 * (M.topRightCorner(r, c) + M.bottomLeftCorner(r, c).conjugate());
    return dbl(Mm, Mp);
}
}  // namespace

void AbcdModel::enforce_structure() {
    A = sym_blocks(A);
    B = sym_blocks(B);
    C = sym_blocks(C);
    D = sym_blocks(D);
    a.tail(n_modes) = a.head(n_modes).conjugate();
    c.tail(n_ports) = c.head(n_ports).conjugate();
}

AbcdModel to_abcd(const LinearSlhModel& m) {
    m.validate();
    const cmat &S = m.S, &Lm = m.Lambda_minus, &Lp = m.Lambda_plus;
    if (Lm.rows() != S.rows() || Lp.rows() != S.rows())
        throw std::invalid_argument("to_abcd: S / Lambda dimension mismatch");
    AbcdModel g;
    g.n_modes = m.n_modes;
    g.n_ports = m.n_ports;
    const cmat Am = -I_UNIT * m.R_minus +
                    0.5 * (-Lm.adjoint() * Lm + Lp.transpose() * Lp.conjugate());
    const cmat Ap = -I_UNIT * m.R_plus +
                    0.5 * (-Lm.adjoint() * Lp + Lp.transpose() * Lm.conjugate());
    g.A = dbl(Am, Ap);
    g.B = dbl(-Lm.adjoint() * S, Lp.transpose() * S.conjugate());
    g.C = dbl(Lm, Lp);
    g.D = dbl(S, cmat::Zero(S.rows(), S.cols()));
    const cvec au = -I_UNIT * m.r.conjugate() +
                    0.5 * (-Lm.adjoint() * m.lambda + Lp.transpose() * m.lambda.conjugate());
    g.a = dbl_vec(au);
    g.c = dbl_vec(m.lambda);
    g.F = cmat::Zero(2 * g.n_modes, 0);
    return g;
}

RealizabilityReport check_realizable(const AbcdModel& g, double tol) {
    if (g.n_aux > 0)
        throw std::invalid_argument("check_realizable: not defined with auxiliary rows");
    const cmat Ta = theta_mat(g.n_modes), Tb = theta_mat(g.n_ports);
    RealizabilityReport rep;
    rep.residual_commutator =
        (g.A * Ta + Ta * g.A.transpose() + g.B * Tb * g.B.transpose()).norm();
    rep.residual_io = (Ta * g.C.transpose() + g.B * Tb * g.D.transpose()).norm();
    rep.residual_scatter = (g.D * Tb * g.D.transpose() - Tb).norm();
    const double s1 = 1.0 + g.A.norm() + g.B.norm() * g.B.norm();
    const double s2 = 1.0 + g.C.norm() + g.B.norm() * g.D.norm();
    const double s3 = 1.0 + g.D.norm() * g.D.norm();
    rep.passed = rep.residual_commutator < tol * s1 && rep.residual_io < tol * s2 &&
                 rep.residual_scatter < tol * s3;
    return rep;
}

Eigen::PermutationMatrix<Eigen::Dynamic> doubling_permutation(const std::vector<int>& sizes) {
    int N = 0;
    for (int s : sizes) N += s;
    Eigen::VectorXi idx(2 * N);  // idx[new] = old
    int off = 0, pos = 0;
    for (int s : sizes) {
        for (int i = 0; i < s; ++i) {
            idx(pos + i) = off + i;
            idx(N + pos + i) = off + s + i;
        }
        off += 2 * s;
        pos += s;
    }
    // PermutationMatrix applied on the left maps row indices(i) -> i.
    Eigen::PermutationMatrix<Eigen::Dynamic> P(2 * N);
    for (int i = 0; i < 2 * N; ++i) P.indices()(idx(i)) = i;
    return P;
}

AbcdModel concatenate(const AbcdModel& g1, const AbcdModel& g2) {
    if (g1.convention != g2.convention)
        throw std::invalid_argument("concatenate: convention mismatch");
    if (g1.n_aux > 0 || g2.n_aux > 0)
        throw std::invalid_argument("concatenate: auxiliary rows not supported");
    const auto Pa = doubling_permutation({g1.n_modes, g2.n_modes});
    const auto Pb = doubling_permutation({g1.n_ports, g2.n_ports});
    auto blkdiag = [](const cmat& X, const cmat& Y) {
        cmat Z = cmat::Zero(X.rows() + Y.rows(), X.cols() + Y.cols());
        Z.topLeftCorner(X.rows(), X.cols()) = X;
        Z.bottomRightCorner(Y.rows(), Y.cols()) = Y;
        return Z;
    };
    AbcdModel g;
    g.convention = g1.convention;
    g.n_modes = g1.n_modes + g2.n_modes;
    g.n_ports = g1.n_ports + g2.n_ports;
    g.A = Pa * blkdiag(g1.A, g2.A) * Pa.inverse();
    g.B = Pa * blkdiag(g1.B, g2.B) * Pb.inverse();
    g.C = Pb * blkdiag(g1.C, g2.C) * Pa.inverse();
    g.D = Pb * blkdiag(g1.D, g2.D) * Pb.inverse();
    cvec a(2 * g.n_modes), c(2 * g.n_ports);
    a << g1.a, g2.a;
    c << g1.c, g2.c;
    g.a = Pa * a;
    g.c = Pb * c;
    g.F = Pa * blkdiag(g1.F, g2.F);
    return g;
}

AbcdModel series(const AbcdModel& g2, const AbcdModel& g1) {
    if (g1.n_aux > 0 || g2.n_aux > 0)
        throw std::invalid_argument("series: auxiliary rows not supported");
    if (g1.n_ports != g2.n_ports) throw std::invalid_argument("series: port count mismatch");
    if (g1.convention != g2.convention)
        throw std::invalid_argument("series: convention mismatch");
    const auto Pa = doubling_permutation({g1.n_modes, g2.n_modes});
    const int n1 = 2 * g1.n_modes, n2 = 2 * g2.n_modes;
    AbcdModel g;
    g.convention = g1.convention;
    g.n_modes = g1.n_modes + g2.n_modes;
    g.n_ports = g1.n_ports;
    cmat A = cmat::Zero(n1 + n2, n1 + n2);
    A.topLeftCorner(n1, n1) = g1.A;
    A.bottomLeftCorner(n2, n1) = g2.B * g1.C;
    A.bottomRightCorner(n2, n2) = g2.A;
    g.A = Pa * A * Pa.inverse();
    cmat B(n1 + n2, 2 * g.n_ports);
    B << g1.B, g2.B * g1.D;
    g.B = Pa * B;
    cmat C(2 * g.n_ports, n1 + n2);
    C << g2.D * g1.C, g2.C;
    g.C = C * Pa.inverse();
    g.D = g2.D * g1.D;
    cvec a(n1 + n2);
    a << g1.a, g2.a + g2.B * g1.c;
    g.a = Pa * a;
    g.c = g2.c + g2.D * g1.c;
    cmat F = cmat::Zero(n1 + n2, g1.F.cols() + g2.F.cols());
    F.topLeftCorner(n1, g1.F.cols()) = g1.F;
    F.bottomRightCorner(n2, g2.F.cols()) = g2.F;
    g.F = Pa * F;
    return g;
}

AbcdModel feedback(const AbcdModel& g, int out_port, int in_port) {
    if (g.n_aux > 0)
        throw std::invalid_argument("feedback: auxiliary rows not supported");
    const int m = g.n_ports;
    if (out_port < 1 || out_port > m || in_port < 1 || in_port > m)
        throw std::invalid_argument("feedback: port index out of range");
    const int k = out_port - 1, l = in_port - 1;
    std::vector<int> rk = {k, m + k}, cl = {l, m + l};
    std::vector<int> keep_r, keep_c;
    for (int i = 0; i < 2 * m; ++i) {
        if (i != k && i != m + k) keep_r.push_back(i);
        if (i != l && i != m + l) keep_c.push_back(i);
    }
    cmat Dkl(2, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) Dkl(i, j) = g.D(rk[i], cl[j]);
    Eigen::Matrix2cd Wm = Eigen::Matrix2cd::Identity() - Dkl;
    Eigen::JacobiSVD<Eigen::Matrix2cd> svd(Wm);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (smin <= 0 || smax / smin > 1e12)
        throw std::runtime_error("feedback: algebraic loop, (I - D_kl) singular");
    cmat W = Wm.inverse();

    auto cols = [&](const cmat& M, const std::vector<int>& idx) {
        cmat out(M.rows(), long(idx.size()));
        for (size_t j = 0; j < idx.size(); ++j) out.col(j) = M.col(idx[j]);
        return out;
    };
    auto rows = [&](const cmat& M, const std::vector<int>& idx) {
        cmat out(long(idx.size()), M.cols());
        for (size_t i = 0; i < idx.size(); ++i) out.row(i) = M.row(idx[i]);
        return out;
    };

    const cmat Bl = cols(g.B, cl);
    const cmat Ck = rows(g.C, rk);
    cvec ck(2);
    ck << g.c(rk[0]), g.c(rk[1]);

    AbcdModel h;
    h.convention = g.convention;
    h.n_modes = g.n_modes;
    h.n_ports = m - 1;
    h.A = g.A + Bl * W * Ck;
    h.B = cols(g.B, keep_c) + Bl * W * rows(cols(g.D, keep_c), rk);
    h.C = rows(g.C, keep_r) + cols(rows(g.D, keep_r), cl) * W * Ck;
    h.D = rows(cols(g.D, keep_c), keep_r) + cols(rows(g.D, keep_r), cl) * W * rows(cols(g.D, keep_c), rk);
    h.a = g.a + Bl * W * ck;
    cvec cfull = g.c + cols(g.D, cl) * W * ck;
    h.c = cvec(2 * h.n_ports);
    for (size_t i = 0; i < keep_r.size(); ++i) h.c(long(i)) = cfull(keep_r[i]);
    h.F = g.F;
    return h;
}

StaticScatter adiabatic_eliminate(const AbcdModel& g) {
    Eigen::PartialPivLU<cmat> lu(g.A);
    const double det = std::abs(lu.determinant());
    if (!(det > 1e-300)) throw std::runtime_error("adiabatic_eliminate: marginal mode, A singular");
    StaticScatter s;
    const cmat AinvB = lu.solve(g.B);
    s.T0 = g.D - g.C * AinvB;
    s.noise_map = g.C * lu.solve(g.F);
    s.offset = g.c - g.C * lu.solve(g.a);
    return s;
}

AbcdModel static_model(const cmat& T0, int n_ports, const cmat& noise, const cvec& offset,
                       Convention conv) {
    AbcdModel g = AbcdModel::zero(0, n_ports, conv);
    if (T0.rows() != 2 * n_ports || T0.cols() != 2 * n_ports)
        throw std::invalid_argument("static_model: T0 must be 2m x 2m");
    g.D = T0;
    if (offset.size() > 0) g.c = offset;
    // static noise columns enter the outputs, not the (empty) state; fold them into c?  No:
    // keep them as a D-side noise by augmenting with phantom ports is not needed for the
    // analysis paths used here, so we reject nonzero static noise maps.
    if (noise.size() > 0 && noise.norm() > 0)
        throw std::invalid_argument("static_model: static noise maps are not supported");
    return g;
}

cmat quadrature_transform(int n) {
    cmat T = cmat::Zero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) {
        T(2 * i, i) = 1.0;
        T(2 * i, n + i) = 1.0;
        T(2 * i + 1, i) = -I_UNIT;
        T(2 * i + 1, n + i) = I_UNIT;
    }
    return T;
}

rmat to_quadrature(const cmat& M) {
    const int nr = int(M.rows()) / 2, nc = int(M.cols()) / 2;
    const cmat Tr = quadrature_transform(nr);
    const cmat Tc = quadrature_transform(nc);
    cmat Q = Tr * M * Tc.inverse();
    return Q.real();
}

}  // namespace photonq
