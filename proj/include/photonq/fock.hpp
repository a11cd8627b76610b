#pragma once

#include "photonq/wigner.hpp"

namespace photonq {
namespace fock {

// Dense truncated-Fock operators. Words are strings over 'a' (annihilate) and
// 'A' (create), applied left to right as written: "AAaa" is a'a'aa.
cmat annihilate(int dim);
cmat create(int dim);
cmat number(int dim);
cmat word(int dim, const std::string& w);
// Two-mode embedding: op acting on mode `which` of dims (d1, d2).
cmat embed2(const cmat& op, int which, int d1, int d2);

struct DensityMatrix {
    int dim = 0;
    cmat rho;

    static DensityMatrix vacuum(int dim);
    static DensityMatrix coherent(int dim, cxd alpha);
    static DensityMatrix fock_state(int dim, int n);
    double trace_error() const { return std::abs(rho.trace().real() - 1.0) + std::abs(rho.trace().imag()); }
    void validate(double tol = 1e-8) const;
    double expect(const cmat& op) const { return (op * rho).trace().real(); }
    cxd expect_c(const cmat& op) const { return (op * rho).trace(); }
};

// Lindblad generator d rho/dt = -i[H, rho] + sum_k (L rho L' - {L'L, rho}/2).
struct Lindblad {
    int dim = 0;
    cmat H;
    std::vector<cmat> Ls;
    std::vector<cmat> ldl_cache_;  // L'L, filled by build_lindblad

    cmat apply(const cmat& rho) const;
    cmat superoperator() const;  // dense dim^2 x dim^2 map on vec(rho)
    double spectral_scale() const;
};

// Guard: dim^2 <= 4096 (dense desk-scale oracle only).
Lindblad build_lindblad(const std::vector<std::pair<cxd, cmat>>& h_terms,
                        const std::vector<cmat>& l_terms, int dim);

DensityMatrix evolve_rho(const Lindblad& gen, const DensityMatrix& rho0, double t);
struct SteadyStateResult {
    DensityMatrix rho;
    double residual = 0;
    int null_rank = 1;
};
SteadyStateResult steady_state(const Lindblad& gen);

// Wigner function by the displaced-parity formula; grid of alpha values.
struct WignerGrid {
    std::vector<double> re, im;  // axes
    rmat values;                 // values(i_im, i_re)
};
WignerGrid wigner_of_rho(const DensityMatrix& rho, const std::vector<double>& re_axis,
                         const std::vector<double>& im_axis);
double wigner_point(const DensityMatrix& rho, cxd alpha);

// Lindblad generator for a driven Wigner-component kind (cavity, kerr, dopo,
// dopo2); the drive is the port-1 input amplitude.
Lindblad lindblad_for_component(const WignerComponent& c, cxd drive_amp, int dim);

struct MomentRow {
    double time = 0;
    std::string name;
    double mc = 0, mc_se = 0, oracle = 0;
    double z = 0, rel_err = 0;
};

struct CompareReport {
    std::vector<MomentRow> rows;
    bool passed = false;
    double max_abs_z = 0;
    double max_rel_err = 0;
};

struct CompareOptions {
    double dt = 1e-3;
    double T = 3.0;
    int n_traj = 4000;
    int n_times = 4;
    int dim = 40;
    cxd alpha0 = 0.0;  // initial coherent state
    std::uint64_t seed = 2024;
    int threads = 1;
};

// Symmetric-moment comparison (alpha, alpha* alpha, alpha^2) between the
// truncated-Wigner ensemble and the Fock oracle; passes when every |z| < 3
// and every relative error < 5 percent.
CompareReport compare_wigner_oracle(const WignerComponent& c, cxd drive_amp,
                                    const CompareOptions& opts);

}  // namespace fock
}  // namespace photonq
