#pragma once

#include <map>
#include <string>

#include "photonq/mat.hpp"

namespace photonq {

using ParamMap = std::map<std::string, double>;

// Linear SLH triple in doubled-up component form:
//   L = Lambda_minus a + Lambda_plus a^dag + lambda
//   H = a^dag R_minus a + (a^T R_plus^* a + a^dag R_plus a^dag)/2 + r^T a + r^dag a^dag
struct LinearSlhModel {
    int n_modes = 0;
    int n_ports = 0;
    cmat S;             // n_ports x n_ports, unitary
    cmat Lambda_minus;  // n_ports x n_modes
    cmat Lambda_plus;   // n_ports x n_modes
    cmat R_minus;       // Hermitian
    cmat R_plus;        // symmetric
    cvec r;             // linear Hamiltonian drive
    cvec lambda;        // constant coupling offset
    std::string kind;   // provenance
    ParamMap params;    // provenance

    // Hermiticity/symmetry/unitarity residuals; throws on gross violations.
    void validate(double tol = 1e-10) const;
};

// Component catalog (Ch. 2 style). Kinds:
//   beamsplitter(theta) | phase(phi[, n]) | displacement(re, im) | identity(n)
//   permutation(p1..pN) | cavity(Delta, kappa1..kappaN[, psi1..psiN])
//   dopo(Delta, kappa[, kappa2..], eps_re, eps_im)        -- linearized degenerate OPO
//   ndopo(Delta_a, Delta_b, kappa_a, kappa_b, eps_re, eps_im)
//   opo2(Delta, kappa1, kappa2, eps_re, eps_im)           -- two-port OPO, controller form
//   mems(K1, K2, Omega, km)                               -- position-coupled oscillator
//   optomech(Delta, Omega, kappa, km, kN, g_re, g_im)     -- linearized optomechanical cavity
LinearSlhModel make_component(const std::string& kind, const ParamMap& params);

// Named parameter tables used by the CLI presets.
const std::map<std::string, ParamMap>& component_presets();

}  // namespace photonq
