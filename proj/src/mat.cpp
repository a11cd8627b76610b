#include "photonq/mat.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>

namespace photonq {

namespace {

cmat pade13(const cmat& A) {
    static const double b[] = {64764752532480000., 32382376266240000., 7771770303897600.,
                               1187353796428800.,  129060195264000.,   10559470521600.,
                               670442572800.,      33522128640.,       1323241920.,
                               40840800.,          960960.,            16380.,
                               182.,               1.};
    const long n = A.rows();
    const cmat Id = cmat::Identity(n, n);
    const cmat A2 = A * A;
    const cmat A4 = A2 * A2;
    const cmat A6 = A4 * A2;
    cmat U = A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 +
                  b[3] * A2 + b[1] * Id);
    cmat V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 +
             b[0] * Id;
    return (V - U).partialPivLu().solve(V + U);
}

}  // namespace

cmat expm(const cmat& A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("expm: square matrix required");
    if (A.rows() == 0) return A;
    const double nrm = A.cwiseAbs().rowwise().sum().maxCoeff();  // inf-norm
    int squarings = 0;
    const double theta13 = 5.371920351148152;
    cmat As = A;
    if (nrm > theta13) {
        squarings = std::max(0, int(std::ceil(std::log2(nrm / theta13))));
        As /= std::pow(2.0, squarings);
    }
    cmat E = pade13(As);
    for (int i = 0; i < squarings; ++i) E = E * E;
    return E;
}

cmat lyapunov_solve(const cmat& A, const cmat& Q) {
    const long n = A.rows();
    if (A.cols() != n || Q.rows() != n || Q.cols() != n)
        throw std::invalid_argument("lyapunov_solve: shape mismatch");
    // vec(AX) = (I (x) A) vec X ; vec(X A^dag) = (conj(A) (x) I) vec X
    cmat M = cmat::Zero(n * n, n * n);
    const cmat Ac = A.conjugate();
    for (long j = 0; j < n; ++j)
        M.block(j * n, j * n, n, n) += A;
    for (long j = 0; j < n; ++j)
        for (long k = 0; k < n; ++k)
            M.block(j * n, k * n, n, n).diagonal().array() += Ac(j, k);
    cvec q(n * n);
    for (long j = 0; j < n; ++j) q.segment(j * n, n) = -Q.col(j);
    cvec x = M.partialPivLu().solve(q);
    cmat X(n, n);
    for (long j = 0; j < n; ++j) X.col(j) = x.segment(j * n, n);
    return X;
}

rmat care_solve(const rmat& A, const rmat& B, const rmat& Q, const rmat& R) {
    const long n = A.rows();
    const rmat G = B * R.llt().solve(B.transpose());
    rmat H(2 * n, 2 * n);
    H.topLeftCorner(n, n) = A;
    H.topRightCorner(n, n) = -G;
    H.bottomLeftCorner(n, n) = -Q;
    H.bottomRightCorner(n, n) = -A.transpose();
    Eigen::ComplexEigenSolver<cmat> es(H.cast<cxd>());
    cmat V(2 * n, n);
    long k = 0;
    for (long i = 0; i < 2 * n && k < n; ++i)
        if (es.eigenvalues()(i).real() < 0) V.col(k++) = es.eigenvectors().col(i);
    if (k != n) throw std::runtime_error("care_solve: stable subspace has wrong dimension");
    cmat X1 = V.topRows(n), X2 = V.bottomRows(n);
    rmat X = (X2 * X1.inverse()).real();
    X = 0.5 * (X + X.transpose());
    // Kleinman refinement: X_{k+1} solves (A - G Xk)' X + X (A - G Xk) + Xk G Xk + Q = 0
    for (int it = 0; it < 30; ++it) {
        rmat res = A.transpose() * X + X * A - X * G * X + Q;
        if (res.norm() <= 1e-12 * (1.0 + X.norm()) * (1.0 + A.norm())) break;
        cmat Ak = (A - G * X).transpose().cast<cxd>();
        cmat Qk = (Q + X * G * X).cast<cxd>();
        X = lyapunov_solve(Ak, Qk).real();
        X = 0.5 * (X + X.transpose());
    }
    return X;
}

std::vector<double> poly_real_roots(const std::vector<double>& coeffs, double imag_tol) {
    // strip trailing (highest-degree) zeros
    std::vector<double> c = coeffs;
    while (c.size() > 1 && std::abs(c.back()) < 1e-300) c.pop_back();
    const long deg = long(c.size()) - 1;
    std::vector<double> roots;
    if (deg < 1) return roots;
    if (deg == 1) {
        roots.push_back(-c[0] / c[1]);
        return roots;
    }
    rmat comp = rmat::Zero(deg, deg);
    for (long i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
    for (long i = 0; i < deg; ++i) comp(i, deg - 1) = -c[i] / c[deg];
    Eigen::EigenSolver<rmat> es(comp);
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    for (long i = 0; i < deg; ++i) {
        cxd r = es.eigenvalues()(i);
        if (std::abs(r.imag()) <= imag_tol * scale) roots.push_back(r.real());
    }
    return roots;
}

void fft_pow2(std::vector<cxd>& x) {
    const size_t n = x.size();
    if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("fft_pow2: size must be 2^k");
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * M_PI / double(len);
        const cxd wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            cxd w(1.0);
            for (size_t k = 0; k < len / 2; ++k) {
                cxd u = x[i + k], v = x[i + k + len / 2] * w;
                x[i + k] = u + v;
                x[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

}  // namespace photonq
