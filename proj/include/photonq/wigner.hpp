#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "photonq/abcd.hpp"

namespace photonq {

// Semiclassical (truncated-Wigner) nonlinear component. State is a set of
// c-number fields alpha_i plus real variables (carrier numbers); port inputs
// carry vacuum statistics <dbeta* dbeta> = dt/2 on top of deterministic drives.
struct WignerComponent {
    std::string kind;
    ParamMap params;
    int n_fields = 0;
    int n_ports = 0;
    int n_real = 0;

    // parsed parameter cache (filled by make_sde)
    struct Par {
        int id = 0;
        double kappa[4] = {0, 0, 0, 0};
        double sqk[4] = {0, 0, 0, 0};
        double ktot = 0;
        double Delta = 0, Delta_b = 0, Delta_c2 = 0;
        double chi = 0, beta = 0, eta = 0;
        double gamma = 0, gamma_bar = 0, gamma_rc = 0;
        cxd eps = 0;
        cxd delta_c = 0, delta_cb = 0;
        double kplus = 0, kminus = 0;
        bool has_fca = false;
    } par;

    struct Channel {
        std::string name;
        bool is_complex = true;
    };
    std::vector<Channel> channels;  // intrinsic noise channels (ports not included)

    static constexpr int kMaxFields = 4;
    static constexpr int kMaxReal = 4;
    static constexpr int kMaxPorts = 4;
    static constexpr int kMaxChannels = 8;

    int state_dim() const { return 2 * n_fields + n_real; }
    int n_noise_columns() const;  // real-Wiener columns of the noise matrix

    // Deterministic drift per unit time (no inputs, no noise).
    void drift(const cxd* f, const double* r, cxd* df, double* dr) const;
    // Coupling of port input increments into the fields, evaluated at a state:
    // dfield_i += sum_p U(i, p) dbeta_p.
    cmat input_coupling(const cxd* f, const double* r) const;
    // Port output amplitudes: dout_p = dbeta_p + L_p dt.
    cvec output_amplitudes(const cxd* f, const double* r) const;
    // Intrinsic-noise matrix in doubled coordinates (rows: fields, conj fields,
    // reals), columns normalized to independent real Wiener increments dw^2 = dt.
    cmat noise_matrix(const cxd* f, const double* r) const;
    // Apply intrinsic noise increments given per-channel draws (complex channels
    // consume a vacuum increment, real channels a Wiener increment).
    void apply_noise(const cxd* f, const double* r, const cxd* cdraw, const double* rdraw,
                     cxd* df, double* dr) const;

    // Non-empty when parameters leave the truncation's validity regime.
    std::string validity_warning() const;
};

WignerComponent make_sde(const std::string& kind, const ParamMap& params);

// Deterministic per-port drive: sum of amp * exp(-i omega t) terms.
struct DriveTerm {
    cxd amp = 0.0;
    double omega = 0.0;
};
struct Drive {
    std::vector<std::vector<DriveTerm>> per_port;

    static Drive none(int n_ports) { return Drive{std::vector<std::vector<DriveTerm>>(n_ports)}; }
    static Drive constant(int n_ports, int port, cxd amp);
    Drive& add(int port, cxd amp, double omega = 0.0);
    cxd eval(int port, double t) const;
};

struct TrajectoryOptions {
    int save_stride = 1;
    bool record_io = true;
    std::uint64_t traj_index = 0;
    std::vector<cxd> f0;     // initial fields (defaults to vacuum sample)
    std::vector<double> r0;  // initial reals (defaults to 0)
    bool sample_initial_vacuum = true;  // sample f0 from the vacuum Wigner function
};

struct Trajectory {
    double dt = 0;
    std::uint64_t seed = 0;
    std::uint64_t traj_index = 0;
    int n_steps = 0;
    int n_fields = 0, n_real = 0, n_ports = 0;
    int save_stride = 1;
    std::vector<cxd> fields;    // (n_saved) x n_fields, row-major
    std::vector<double> reals;  // (n_saved) x n_real
    std::vector<cxd> inputs;    // n_steps x n_ports (increments), when record_io
    std::vector<cxd> outputs;   // n_steps x n_ports (increments), when record_io

    int n_saved() const { return n_fields ? int(fields.size()) / n_fields : 0; }
    cxd field(int snap, int i) const { return fields[size_t(snap) * n_fields + i]; }
    double real_var(int snap, int i) const { return reals[size_t(snap) * n_real + i]; }
};

Trajectory integrate_trajectory(const WignerComponent& c, const Drive& drive, double dt,
                                double T, std::uint64_t seed,
                                const TrajectoryOptions& opts = {});

struct EnsembleOptions {
    int threads = 1;
    int save_stride = 16;
    std::vector<cxd> f0;
    std::vector<double> r0;
    bool sample_initial_vacuum = true;
    // optional 2-D Wigner histogram of field `hist_field` at the final time
    bool histogram = false;
    int hist_field = 0;
    int hist_bins = 64;
    double hist_halfwidth = 4.0;
};

struct EnsembleStats {
    int n_traj = 0;
    std::vector<double> times;
    cmat mean;         // times x n_fields
    std::vector<cmat> cov;  // per time: doubled (2nf x 2nf) covariance of fields
    cmat mean_se;      // standard error of the mean (per field, complex parts pooled)
    rmat real_mean;    // times x n_real
    rmat hist;         // optional histogram counts
};

EnsembleStats ensemble_stats(const WignerComponent& c, const Drive& drive, double dt, double T,
                             int n_traj, std::uint64_t base_seed,
                             const EnsembleOptions& opts = {});

// Detection records.
std::vector<double> homodyne_record(const Trajectory& t, int port, double theta);
std::vector<cxd> heterodyne_record(const Trajectory& t, int port);

// Welch-averaged power spectral density, normalized so that a vacuum homodyne
// record gives S(omega) = 1. Returns (omega, psd) pairs over [-pi/dt, pi/dt).
struct Psd {
    std::vector<double> omega;
    std::vector<double> power;
};
Psd power_spectrum(const std::vector<double>& signal, double dt, int segment = 0);
Psd power_spectrum(const std::vector<cxd>& signal, double dt, int segment = 0);
// Average periodograms across whole records (one segment per trajectory).
Psd average_psd(const std::vector<std::vector<double>>& signals, double dt);

// Fixed point of the deterministic drift (with constant drive); Newton refined.
struct WignerState {
    cvec f;
    rvec r;
};

// Linearization about a drift fixed point: doubled-up ABCD with extra noise F.
// The returned model has n_aux = n_real auxiliary (real) state rows.
AbcdModel linearize(const WignerComponent& c, const WignerState& fixed_point,
                    const Drive& drive, double residual_tol = 1e-7);

// Builds the symmetric/antisymmetric-coupled two-cavity latch.
// inner_kind is "fc" or "kerr"; inner params as for make_sde (without kappa).
WignerComponent latch_build(const std::string& inner_kind, const ParamMap& inner,
                            double kappa_plus, double kappa_minus);

// Reduced (dimensionless) latch parameters, time scaled so kappa_plus + eta = 1.
ParamMap normalized_latch_params(const ParamMap& physical);

}  // namespace photonq
