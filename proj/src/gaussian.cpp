#include "photonq/gaussian.hpp"

#include <Eigen/SVD>
#include <sstream>

namespace photonq {

InputCovariance InputCovariance::thermal(int n_ports, int port_index, double kn) {
    InputCovariance in;
    in.ports.resize(n_ports);
    in.ports.at(port_index).thermal_kn = kn;
    return in;
}

cmat InputCovariance::sigma(int m) const {
    cmat S = 0.5 * cmat::Identity(2 * m, 2 * m);
    for (int i = 0; i < int(ports.size()) && i < m; ++i) {
        S(i, i) += ports[i].thermal_kn;
        S(m + i, m + i) += ports[i].thermal_kn;
        S(i, m + i) += ports[i].squeeze_m;
        S(m + i, i) += std::conj(ports[i].squeeze_m);
    }
    return S;
}

namespace {
cmat noise_source(const AbcdModel& m, const InputCovariance& in) {
    cmat N = m.B * in.sigma(m.n_ports) * m.B.adjoint();
    if (m.has_noise()) N += m.F * m.F.adjoint();
    return N;
}
}  // namespace

GaussianState steady_covariance(const AbcdModel& m, const InputCovariance& in) {
    Eigen::ComplexEigenSolver<cmat> es(m.A, false);
    const double abscissa = es.eigenvalues().real().maxCoeff();
    if (abscissa >= 0) {
        std::ostringstream os;
        os << "steady_covariance: A is not Hurwitz; eigenvalues with Re >= 0:";
        for (int i = 0; i < es.eigenvalues().size(); ++i)
            if (es.eigenvalues()(i).real() >= 0)
                os << " (" << es.eigenvalues()(i).real() << "," << es.eigenvalues()(i).imag()
                   << ")";
        throw std::runtime_error(os.str());
    }
    GaussianState s;
    s.sigma = lyapunov_solve(m.A, noise_source(m, in));
    s.sigma = 0.5 * (s.sigma + s.sigma.adjoint().eval());
    s.mu = m.A.partialPivLu().solve(-m.a);
    return s;
}

GaussianState evolve_moments(const AbcdModel& m, const GaussianState& s0, double t,
                             const InputCovariance& in) {
    if (t < 0) throw std::invalid_argument("evolve_moments: t must be >= 0");
    const int d = 2 * m.n_modes;
    GaussianState s;
    if (t == 0) return s0;
    // mean with drive: d/dt (mu,1) = [[A, a],[0,0]]
    cmat Maug = cmat::Zero(d + 1, d + 1);
    Maug.topLeftCorner(d, d) = m.A;
    Maug.topRightCorner(d, 1) = m.a;
    cmat Eaug = expm(Maug * t);
    cvec mu1(d + 1);
    mu1 << s0.mu, 1.0;
    s.mu = (Eaug * mu1).head(d);
    // covariance by the Van Loan block trick
    const cmat N = noise_source(m, in);
    cmat Mv = cmat::Zero(2 * d, 2 * d);
    Mv.topLeftCorner(d, d) = m.A;
    Mv.topRightCorner(d, d) = N;
    Mv.bottomRightCorner(d, d) = -m.A.adjoint();
    cmat Ev = expm(Mv * t);
    const cmat F1 = Ev.topLeftCorner(d, d);
    const cmat F2 = Ev.topRightCorner(d, d);
    s.sigma = F1 * s0.sigma * F1.adjoint() + F2 * F1.adjoint();
    s.sigma = 0.5 * (s.sigma + s.sigma.adjoint().eval());
    return s;
}

TransferFunction transfer_function(const AbcdModel& m, double omega) {
    const int d = 2 * m.n_modes;
    cmat M = -I_UNIT * omega * cmat::Identity(d, d) - m.A;
    Eigen::PartialPivLU<cmat> lu(M);
    if (!(std::abs(lu.determinant()) > 1e-300))
        throw std::runtime_error("transfer_function: resonance singularity at given omega");
    TransferFunction tf;
    tf.T = m.D + m.C * lu.solve(m.B);
    tf.N = m.has_noise() ? cmat(m.C * lu.solve(m.F)) : cmat::Zero(2 * m.n_ports, 0);
    return tf;
}

Gain amplitude_gain(const AbcdModel& m, double omega) {
    const auto tf = transfer_function(m, omega);
    Eigen::JacobiSVD<cmat> svd(tf.T);
    Gain g;
    g.g_max = svd.singularValues().maxCoeff();
    g.g_min = svd.singularValues().minCoeff();
    return g;
}

SqueezingPoint squeezing_spectrum(const AbcdModel& m, double omega, int port) {
    if (port < 1 || port > m.n_ports)
        throw std::invalid_argument("squeezing_spectrum: port out of range");
    const auto tf = transfer_function(m, omega);
    cmat G = 0.5 * tf.T * tf.T.adjoint();
    if (tf.N.cols() > 0) G += tf.N * tf.N.adjoint();
    const int j = port - 1, jc = m.n_ports + port - 1;
    SqueezingPoint p;
    p.omega = omega;
    const double n1 = G(j, j).real(), n2 = G(jc, jc).real();
    p.N = 0.5 * (n1 + n2) - 0.5;
    p.M = G(j, jc);
    p.S_plus = std::sqrt(2.0 * ((p.N + 0.5) + std::abs(p.M)));
    p.S_minus = std::sqrt(2.0 * ((p.N + 0.5) - std::abs(p.M)));
    return p;
}

}  // namespace photonq
