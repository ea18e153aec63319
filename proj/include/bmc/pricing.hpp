#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "bmc/models.hpp"
#include "bmc/schemes.hpp"

namespace bmc {

struct PayoffSpec {
    enum class Kind { DiscountedCall, Custom };
    Kind kind = Kind::DiscountedCall;
    double strike = 0.0;
    double rate = 0.0;
    double maturity = 0.0;
    // Custom evaluator: terminal Y -> payoff (already discounted).
    std::function<double(double)> custom;

    // g(y) = e^{-rT} (phi^{-1}(y) - K)_+ for the discounted call.
    double evaluate(double y, const LampertiDynamics& dyn) const;
};

PayoffSpec make_discounted_call(const BarrierContract& contract);
kernels::PayoffParams payoff_params(const PayoffSpec& payoff, const LampertiDynamics& dyn);

// 1 - exp(-2 d0 d1 / (gamma^2 h)) with d0, d1 the positive-part distances
// to the barrier on the surviving side. 0 exactly once an endpoint crossed.
double survival_factor(double y0, double y1, double barrier, BarrierKind kind, double gamma,
                       double h);

double fine_level_payoff(const std::vector<double>& fine_path, const BarrierContract& contract,
                         const PayoffSpec& payoff, const LampertiDynamics& dyn, double h);

// Coarse-level payoff with the fine step h in every factor; node sequence
// alternates coarse values and interpolated midpoints.
double coarse_level_payoff(const CoupledLevelSample& sample, const BarrierContract& contract,
                           const PayoffSpec& payoff, const LampertiDynamics& dyn, double h_fine);

struct LevelStats {
    int level = 0;
    std::uint64_t n_samples = 0;  // valid (non-excluded) samples
    double mean_diff = 0.0;       // P_l^f - P_{l-1}^c, or P_0^f at level 0
    double var_diff = 0.0;
    double mean_fine = 0.0;
    double var_fine = 0.0;
    double cost_units = 0.0;  // implicit-step solves
    std::uint64_t positivity_failures = 0;
};

struct DriverConfig {
    std::uint64_t n_warm = 10000;
    int l_min = 2;
    int l_max = 12;
    std::uint64_t seed = 1;
    int threads = 1;
    std::uint64_t chunk = 8192;
    double mc_steps_scale = 0.0;  // n_steps = ceil(scale/eps); 0 -> maturity
    std::uint64_t mc_max_samples = 200'000'000;  // budget cap for the MC baseline
    double positivity_error_rate = 1e-3;
};

LevelStats estimate_level(const LampertiDynamics& dyn, const BarrierContract& contract,
                          const PayoffSpec& payoff, int level, std::uint64_t n_samples,
                          std::uint64_t seed, int threads = 1, std::uint64_t chunk = 8192);

struct MlmcResult {
    double price = 0.0;
    std::vector<LevelStats> levels;
    double total_cost_units = 0.0;
    double epsilon_target = 0.0;
    double bias_estimate = 0.0;
    double statistical_error_estimate = 0.0;
};

MlmcResult mlmc_price(const LampertiDynamics& dyn, const BarrierContract& contract,
                      const PayoffSpec& payoff, double epsilon, const DriverConfig& cfg);

struct McResult {
    double price = 0.0;
    int n_steps = 0;
    std::uint64_t n_target = 0;   // allocation N = ceil(2 var / eps^2)
    std::uint64_t n_sampled = 0;  // min(n_target, budget)
    double variance = 0.0;
    double cost_units = 0.0;  // n_target * n_steps
    double statistical_error_estimate = 0.0;
    std::uint64_t positivity_failures = 0;
};

McResult mc_price(const LampertiDynamics& dyn, const BarrierContract& contract,
                  const PayoffSpec& payoff, double epsilon, int n_steps, const DriverConfig& cfg);

}  // namespace bmc
