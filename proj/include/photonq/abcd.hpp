#pragma once

#include <optional>
#include <string>

#include "photonq/slh.hpp"

namespace photonq {

enum class Convention { quantum, wigner };

// Doubled-up state-space model of a linear open system:
//   dx = (A x + a) dt + B dB_in + F dw
//   dB_out = (C x + c) dt + D dB_in
// with x = (a_1..a_n, a_1^dag..a_n^dag) and ports ordered likewise.
struct AbcdModel {
    int n_modes = 0;
    int n_ports = 0;
    int n_aux = 0;    // real (self-conjugate) state rows appended after the doubled block
    cmat A, B, C, D;  // (2n+aux) x (2n+aux), (2n+aux) x 2m, 2m x (2n+aux), 2m x 2m
    cvec a, c;        // 2n+aux, 2m
    cmat F;           // (2n+aux) x k extra (real-Wiener) noise columns; k = 0 when absent
    Convention convention = Convention::quantum;

    static AbcdModel zero(int n_modes, int n_ports, Convention conv = Convention::quantum);
    int state_size() const { return 2 * n_modes + n_aux; }
    bool has_noise() const { return F.cols() > 0; }
    double structure_residual() const;
    void enforce_structure();  // symmetrize to exact conjugate-block form
};

struct RealizabilityReport {
    double residual_commutator = 0;  // |A Th + Th A^T + B Th B^T|
    double residual_io = 0;          // |Th C^T + B Th D^T|
    double residual_scatter = 0;     // |D Th D^T - Th|
    bool passed = false;
};

struct StaticScatter {
    cmat T0;         // 2m x 2m
    cmat noise_map;  // 2m x k
    cvec offset;     // 2m
};

AbcdModel to_abcd(const LinearSlhModel& m);

RealizabilityReport check_realizable(const AbcdModel& m, double tol = 1e-8);

// Gough-James algebra on ABCD models.
AbcdModel concatenate(const AbcdModel& g1, const AbcdModel& g2);
AbcdModel series(const AbcdModel& g2, const AbcdModel& g1);  // g2 <| g1
AbcdModel feedback(const AbcdModel& g, int out_port, int in_port);  // 1-indexed

StaticScatter adiabatic_eliminate(const AbcdModel& g);

// Wrap a static scattering map (with optional noise and offset) as a 0-mode model.
AbcdModel static_model(const cmat& T0, int n_ports, const cmat& noise = cmat(),
                       const cvec& offset = cvec(), Convention conv = Convention::quantum);

// Interleaving permutation restoring (g1-, g2-, ..., g1+, g2+, ...) order
// from stacked doubled blocks; acts on 2*sum(sizes) rows.
Eigen::PermutationMatrix<Eigen::Dynamic> doubling_permutation(const std::vector<int>& sizes);

// Conversion to real quadrature form, x = (X_1, P_1, ..) with X = a+a^dag, P = (a-a^dag)/i.
// Returns T such that x_quad = T x_dbl; quad matrices are T A T^{-1} etc.
cmat quadrature_transform(int n);
rmat to_quadrature(const cmat& doubled);

}  // namespace photonq
