#pragma once

#include <functional>
#include <limits>

#include "photonq/gaussian.hpp"

namespace photonq {

// Closed-loop cooling problem: plant output `sense_port` feeds the controller,
// the controller's output drives plant input `feed_port`; minimize the summed
// excitation number of `cost_modes`.
struct LqgProblem {
    AbcdModel plant;
    std::function<AbcdModel(double)> plant_builder;  // optional: coupling K -> plant
    int sense_port = 1;
    int feed_port = 2;
    InputCovariance input_cov;
    std::vector<int> cost_modes = {0};
};

struct ControllerSpec {
    // trivial-phase | static-squeezer | static-linear-amplifier | classical-homodyne |
    // classical-heterodyne | opo | cavity | general-coherent
    std::string family;
    bool optimize_plant_coupling = false;  // appends plant coupling K to the parameters
    int n_internal_modes = 1;              // general-coherent family
    rvec lower, upper;                     // optional box bounds (sized like params)
    int parameter_count() const;
};

// Wiring info for a built controller.
struct BuiltController {
    AbcdModel model;
    int in_port = 1;   // receives the plant's sensed output
    int out_port = 1;  // drives the plant's feedback input
};

BuiltController build_controller(const ControllerSpec& spec, const rvec& params);

// Static maps used by the controller families (all pass check_realizable).
AbcdModel static_squeezer(double eta, double phi = 0.0);
AbcdModel static_linear_amplifier(double eta);               // 2 ports
AbcdModel static_homodyne_controller(double xi1, double xi2);  // 2 ports
AbcdModel static_heterodyne_controller(double xi);             // 3 ports

// Closed-loop circuit and its steady covariance; throws on an unstable loop.
AbcdModel closed_loop(const LqgProblem& p, const BuiltController& ctl);
InputCovariance closed_loop_cov(const LqgProblem& p, const BuiltController& ctl);

// Sum of <n_i> over cost_modes; +inf when the loop is unstable.
double lqg_cost(const LqgProblem& p, const BuiltController& ctl);
double lqg_cost(const LqgProblem& p, const AbcdModel& controller);
// No controller at all (open loop).
double open_loop_cost(const LqgProblem& p);

// ---------------------------------------------------------------------------
// Classical (measurement-based) LQG via Riccati equations, quadrature form.
struct ClassicalPlant {
    rmat A;   // state dynamics
    rmat Bu;  // control input
    rmat Cy;  // measurement
    rmat Fw;  // process noise covariance
    rmat Fv;  // measurement noise covariance
    rmat M;   // process/measurement noise cross-covariance
    rmat P;   // cost = <x' P x> (per unit; photon offset handled by caller)
};

struct ClassicalGains {
    rmat K;        // Kalman gain
    rmat L;        // feedback gain
    rmat sigma_f;  // filter Riccati solution
    rmat lambda_c; // control Riccati solution
};

ClassicalGains classical_lqg(const ClassicalPlant& p, double q_weight = 1.0,
                             double r_weight = 1e-6);
// Steady cost <x' P x> of the closed measurement-feedback loop.
double classical_closed_loop_cost(const ClassicalPlant& p, const ClassicalGains& g);

// ---------------------------------------------------------------------------
// Coherent-controller optimization: quasi-Newton with finite-difference
// gradients (or full Newton-Raphson), deterministic given (init, opts).
struct OptimizeOptions {
    int max_iter = 300;
    double fd_step = 1e-6;   // relative
    double tol = 1e-11;
    bool newton = false;     // Newton-Raphson instead of BFGS
    int polish_iters = 600;  // Nelder-Mead polish steps (0 disables)
};

struct OptimizeResult {
    BuiltController controller;
    rvec params;
    double cost = std::numeric_limits<double>::infinity();
    std::vector<std::pair<rvec, double>> trace;
    bool converged = false;
};

OptimizeResult optimize_coherent(const LqgProblem& p, const ControllerSpec& spec,
                                 const rvec& init, const OptimizeOptions& opts = {});
OptimizeResult optimize_coherent_multistart(const LqgProblem& p, const ControllerSpec& spec,
                                            const std::vector<rvec>& inits,
                                            const OptimizeOptions& opts = {},
                                            int threads = 1);

// ---------------------------------------------------------------------------
// Ch. 11 model-problem builders and analytic benchmark set.
LqgProblem make_cavity_problem(double k1, double k2, double k3, double Delta, double kn);
LqgProblem make_mems_problem(double Omega, double Q, double km, double kn);
ClassicalPlant make_mems_classical_plant(double K, double Omega, double Q, double km,
                                         double kn);

struct CavityBenchmarks {
    double no_control;        // k3 kn / (k1+k2+k3)
    double trivial;           // k3 kn / (k1+k2+k3+2 sqrt(k1 k2))
    double heterodyne;        // (k2 sinh^2 eta + k3 kn) / (.. + 2 sqrt(k1k2) sinh eta)
    double linear_amplifier;  // (k2 sinh^2 eta + k3 kn) / (.. + 2 sqrt(k1k2) cosh eta)
    double squeezer;          // derived closed form at phi = 0 (Delta-dependent)
    double kn_min;            // k1 (k1+k2+k3+2 sqrt(k1k2)) / (sqrt(k1k2) k3)
};

CavityBenchmarks analytic_cavity_benchmarks(double k1, double k2, double k3, double kn,
                                            double eta, double Delta = 0.0);

}  // namespace photonq
