#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace photonq {

// Counter-based normal generator: every (seed, trajectory, step, slot) tuple maps to an
// independent N(0,1) draw, so ensembles are reproducible under any thread schedule.
namespace rng {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                            std::uint64_t c) {
    std::uint64_t h = splitmix64(seed ^ 0x243f6a8885a308d3ULL);
    h = splitmix64(h + a);
    h = splitmix64(h + b);
    return splitmix64(h + c);
}

inline double to_unit(std::uint64_t h) {  // (0, 1)
    return (double(h >> 11) + 0.5) * 0x1.0p-53;
}

inline double normal(std::uint64_t seed, std::uint64_t traj, std::uint64_t step,
                     std::uint64_t slot) {
    const std::uint64_t h1 = derive(seed, traj, step, 2 * slot);
    const std::uint64_t h2 = derive(seed, traj, step, 2 * slot + 1);
    const double u1 = to_unit(h1), u2 = to_unit(h2);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Complex vacuum Wiener increment: <db db*> = dt/2, <db db> = 0.
inline std::complex<double> vacuum(std::uint64_t seed, std::uint64_t traj, std::uint64_t step,
                                   std::uint64_t slot, double dt) {
    const double s = 0.5 * std::sqrt(dt);
    return {s * normal(seed, traj, step, 4 * slot), s * normal(seed, traj, step, 4 * slot + 1)};
}

// Real Wiener increment: <dw^2> = dt.
inline double wiener(std::uint64_t seed, std::uint64_t traj, std::uint64_t step,
                     std::uint64_t slot, double dt) {
    return std::sqrt(dt) * normal(seed, traj, step, 4 * slot + 2);
}

}  // namespace rng
}  // namespace photonq
