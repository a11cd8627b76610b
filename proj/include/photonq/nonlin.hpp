#pragma once

#include "photonq/wigner.hpp"

namespace photonq {

enum class Stability { stable_node, stable_spiral, saddle, unstable, hopf_unstable };

struct FixedPoint {
    WignerState state;
    Stability classification;
    cvec eigenvalues;  // of the doubled-up Jacobian
    double drift_residual = 0;
};

struct FixedPointSet {
    std::vector<FixedPoint> points;
};

// Steady states under a constant drive; Kerr and free-carrier kinds go through
// the photon-number polynomial, everything else through damped Newton.
FixedPointSet fixed_points(const WignerComponent& c, const Drive& drive);

// Bistability boundary of the intensity polynomial: number of positive real roots.
int count_intensity_roots(const WignerComponent& c, double drive_amp);

struct HopfReport {
    double det = 0;
    double L = 0;  // (tr^2 - tr(A^2)) tr - 2 det; sign flips at the Hopf point
    Stability classification;
};

HopfReport hopf_indicator(const cmat& A);

struct LimitCycle {
    double omega_c = 0;
    double amplitude = 0;   // mean |alpha - center| over the cycle
    cxd center = 0;         // cycle centroid of the monitored field
    std::vector<cvec> samples;  // one period of the mean orbit
    std::vector<cxd> mu_xi;     // per-port drift response
    double D_xi = 0;            // phase diffusion: Var(xi(t)) = D_xi t
    double D_xi_se = 0;
};

struct LimitCycleOptions {
    double dt = 2e-4;
    double settle_T = 250.0;
    double measure_T = 40.0;
    int field_index = 0;         // monitored field
    double probe_frac = 0.01;    // mu_xi probe amplitude as a fraction of the cycle size
    double probe_T = 40.0;
    int ensemble = 256;          // trajectories for the diffusion fit
    double diffusion_T = 60.0;
    double burn_in_T = 10.0;
    int threads = 1;
    bool measure_mu = true;
    bool measure_diffusion = true;
    std::uint64_t seed = 1234;
};

LimitCycle limit_cycle(const WignerComponent& c, const Drive& drive,
                       const LimitCycleOptions& opts = {});

struct SwitchingFit {
    double tau_sw = 0;
    double r_squared = 0;
    int n_flips = 0;  // sign changes of the smoothed record
};

// Exponential fit to the autocorrelation of an asymmetric-mode record.
SwitchingFit switching_lifetime(const std::vector<double>& record, double dt);
// Convenience: Re(alpha_1 - alpha_2) from a latch trajectory.
std::vector<double> latch_asymmetry(const Trajectory& t);

// Phase-insensitive gain and noise of a linearized model at omega:
// G = |T_11|, S^2/2 = [T T^dag / 2 + N N^dag]_11 (both per the doubled rows).
struct AmpPoint {
    double gain = 0;
    double noise = 0;  // S(omega)
};
AmpPoint amplifier_gain_noise(const AbcdModel& m, double omega);

inline double caves_bound(double gain) { return std::sqrt(2 * gain * gain - 1); }

}  // namespace photonq
