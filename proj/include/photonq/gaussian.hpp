#pragma once

#include "photonq/abcd.hpp"

namespace photonq {

// Per-port Gaussian input statistics; vacuum by default.
struct PortNoise {
    double thermal_kn = 0.0;  // <dB' dB> = kn dt
    cxd squeeze_m = 0.0;      // <dB dB> = m dt
};

struct InputCovariance {
    std::vector<PortNoise> ports;  // empty = all vacuum

    static InputCovariance vacuum() { return {}; }
    static InputCovariance thermal(int n_ports, int port_index, double kn);
    // Symmetrized 2m x 2m input covariance (vacuum diagonal = 1/2).
    cmat sigma(int n_ports) const;
};

struct GaussianState {
    cvec mu;     // 2n
    cmat sigma;  // 2n x 2n symmetrized covariance
};

struct SqueezingPoint {
    double omega = 0;
    double N = 0;       // power spectrum
    cxd M = 0;          // squeezing spectrum
    double S_plus = 0;  // max quadrature noise amplitude
    double S_minus = 0;
};

// Steady state of the Lyapunov equation A s + s A^dag + B Sig B^dag + F F^dag = 0.
// Throws with the offending eigenvalues if A is not Hurwitz.
GaussianState steady_covariance(const AbcdModel& m,
                                const InputCovariance& in = InputCovariance::vacuum());

// Propagate (mu, sigma) for duration t under the moment ODEs (Van Loan closed form).
GaussianState evolve_moments(const AbcdModel& m, const GaussianState& s0, double t,
                             const InputCovariance& in = InputCovariance::vacuum());

struct TransferFunction {
    cmat T;  // 2m x 2m
    cmat N;  // 2m x k (noise response; empty without F)
};

TransferFunction transfer_function(const AbcdModel& m, double omega);

struct Gain {
    double g_max = 0;
    double g_min = 0;
};
Gain amplitude_gain(const AbcdModel& m, double omega);

// Squeezing spectrum of output `port` (1-indexed) for vacuum inputs.
SqueezingPoint squeezing_spectrum(const AbcdModel& m, double omega, int port = 1);

// Mean photon number of mode `mode` (0-indexed) from a covariance matrix.
inline double photon_number(const GaussianState& s, int mode) {
    return s.sigma(mode, mode).real() - 0.5 + std::norm(s.mu(mode));
}

}  // namespace photonq
