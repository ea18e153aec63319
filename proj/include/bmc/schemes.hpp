#pragma once

#include <cstdint>
#include <vector>

#include "bmc/kernels.hpp"
#include "bmc/models.hpp"

namespace bmc {

// Reproducible Brownian increments for one path at one level.
// fine_increments[i] ~ N(0, h) with h = T 2^{-level}; pairwise sums give
// the coarse increments bitwise.
struct SeedTag {
    std::uint64_t seed = 0;
    std::uint64_t sample_index = 0;
    std::uint32_t stream = 0;
};

struct BrownianSkeleton {
    int level = 0;
    double maturity = 1.0;
    SeedTag seed_tag;
    std::vector<double> fine_increments;

    double h() const { return maturity * std::ldexp(1.0, -level); }
};

BrownianSkeleton make_skeleton(const SeedTag& tag, int level, double maturity);

// Unique y > 0 solving y = y_prev + L(y) dt + gamma dw. Closed-form
// quadratic root for the CIR/CEV drifts, safeguarded Newton for generic
// drift (needs drift_prime_bound to validate dt).
double implicit_step(const LampertiDynamics& dyn, double y_prev, double dt, double dw,
                     double drift_prime_bound = 0.0);

std::vector<double> simulate_fine_path(const LampertiDynamics& dyn, double y0,
                                       const BrownianSkeleton& skeleton);

// out[i] = fine[2i] + fine[2i+1], exact pairwise floating-point sums.
std::vector<double> coarse_increments(const BrownianSkeleton& skeleton);

// Brownian interpolation of the coarse scheme at the fine midpoint:
// y_i + L(y_{i+1}) h_fine + gamma w_half. Not clamped; may be <= 0.
double interpolate_midpoint(const LampertiDynamics& dyn, double y_i, double y_ip1,
                            double w_half, double h_fine);

struct CoupledLevelSample {
    std::vector<double> fine_values;      // 2^l + 1
    std::vector<double> coarse_values;    // 2^{l-1} + 1
    std::vector<double> coarse_midpoints; // 2^{l-1}, at odd fine times
    double terminal_fine = 0.0;
    double terminal_coarse = 0.0;
};

CoupledLevelSample simulate_coupled(const LampertiDynamics& dyn, double y0,
                                    const BrownianSkeleton& skeleton);

kernels::StepParams step_params(const LampertiDynamics& dyn);

}  // namespace bmc
