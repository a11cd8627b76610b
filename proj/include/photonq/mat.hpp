#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <complex>
#include <stdexcept>
#include <vector>

namespace photonq {

using cxd = std::complex<double>;
using cmat = Eigen::MatrixXcd;
using cvec = Eigen::VectorXcd;
using rmat = Eigen::MatrixXd;
using rvec = Eigen::VectorXd;

constexpr cxd I_UNIT{0.0, 1.0};

// Doubled-up commutator matrix Theta = [[0, I],[-I, 0]] of size 2N.
inline cmat theta_mat(int N) {
    cmat T = cmat::Zero(2 * N, 2 * N);
    T.topRightCorner(N, N) = cmat::Identity(N, N);
    T.bottomLeftCorner(N, N) = -cmat::Identity(N, N);
    return T;
}

// Conjugation-swap matrix J = [[0, I],[I, 0]] of size 2N.
inline cmat jswap_mat(int N) {
    cmat J = cmat::Zero(2 * N, 2 * N);
    J.topRightCorner(N, N) = cmat::Identity(N, N);
    J.bottomLeftCorner(N, N) = cmat::Identity(N, N);
    return J;
}

// Assemble [[Mm, Mp],[conj(Mp), conj(Mm)]].
inline cmat dbl(const cmat& Mm, const cmat& Mp) {
    const long r = Mm.rows(), c = Mm.cols();
    if (Mp.rows() != r || Mp.cols() != c)
        throw std::invalid_argument("dbl: block shape mismatch");
    cmat M(2 * r, 2 * c);
    M.topLeftCorner(r, c) = Mm;
    M.topRightCorner(r, c) = Mp;
    M.bottomLeftCorner(r, c) = Mp.conjugate();
    M.bottomRightCorner(r, c) = Mm.conjugate();
    return M;
}

inline cvec dbl_vec(const cvec& v) {
    cvec w(2 * v.size());
    w.head(v.size()) = v;
    w.tail(v.size()) = v.conjugate();
    return w;
}

// Deviation from the conjugate-block structure M = [[M-, M+],[M+*, M-*]].
inline double doubled_structure_residual(const cmat& M) {
    const long r = M.rows() / 2, c = M.cols() / 2;
    double res = (M.bottomRightCorner(r, c) - M.topLeftCorner(r, c).conjugate()).norm();
    res += (M.bottomLeftCorner(r, c) - M.topRightCorner(r, c).conjugate()).norm();
    return res;
}

// Matrix exponential, scaling and squaring with Pade(13).
cmat expm(const cmat& A);

// Solve A X + X A^dag + Q = 0 by Kronecker vectorization.
cmat lyapunov_solve(const cmat& A, const cmat& Q);

// Solve the continuous algebraic Riccati equation
//   A' X + X A - X B R^{-1} B' X + Q = 0   (real, symmetric X)
// via the Hamiltonian eigenvector method with Newton (Kleinman) refinement.
rmat care_solve(const rmat& A, const rmat& B, const rmat& Q, const rmat& R);

// Real roots of a polynomial with real coefficients (ascending order),
// imaginary parts below `imag_tol` accepted; returned unsorted.
std::vector<double> poly_real_roots(const std::vector<double>& coeffs, double imag_tol = 1e-7);

// In-place radix-2 FFT (size must be a power of two), forward transform.
void fft_pow2(std::vector<cxd>& x);

}  // namespace photonq
