#include "bmc/pricing.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "bmc/errors.hpp"
#include "bmc/kernels.hpp"

namespace bmc {

namespace {

// Substream ids; combined with the level into the 32-bit philox stream word.
enum Role : std::uint32_t { kRoleMlmc = 0, kRoleMc = 1 };

std::uint32_t stream_id(Role role, int level) {
    return (role << 8) | static_cast<std::uint32_t>(level);
}

double level_cost_per_sample(int level) {
    if (level == 0) return 1.0;
    return std::ldexp(1.0, level) + std::ldexp(1.0, level - 1);
}

struct Sums {
    double s_diff = 0.0, s_diff2 = 0.0;
    double s_fine = 0.0, s_fine2 = 0.0;
    std::uint64_t n_valid = 0, n_fail = 0;

    void add(const Sums& o) {
        s_diff += o.s_diff;
        s_diff2 += o.s_diff2;
        s_fine += o.s_fine;
        s_fine2 += o.s_fine2;
        n_valid += o.n_valid;
        n_fail += o.n_fail;
    }
};

// Deterministic parallel map-reduce: fixed chunk grid by absolute sample
// index, per-chunk results combined in chunk order regardless of the
// number of workers.
template <typename ChunkFn>
Sums reduce_chunks(std::uint64_t first, std::uint64_t count, std::uint64_t chunk, int threads,
                   ChunkFn fn) {
    const std::uint64_t n_chunks = count == 0 ? 0 : (count + chunk - 1) / chunk;
    std::vector<Sums> slots(n_chunks);
    if (threads <= 1 || n_chunks <= 1) {
        for (std::uint64_t c = 0; c < n_chunks; ++c) {
            const std::uint64_t lo = first + c * chunk;
            const std::uint64_t hi = std::min(first + count, lo + chunk);
            slots[c] = fn(lo, hi - lo);
        }
    } else {
        std::atomic<std::uint64_t> next{0};
        auto worker = [&] {
            for (;;) {
                const std::uint64_t c = next.fetch_add(1);
                if (c >= n_chunks) return;
                const std::uint64_t lo = first + c * chunk;
                const std::uint64_t hi = std::min(first + count, lo + chunk);
                slots[c] = fn(lo, hi - lo);
            }
        };
        std::vector<std::thread> pool;
        const int n_workers = std::min<int>(threads, static_cast<int>(n_chunks));
        pool.reserve(n_workers);
        for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    Sums total;
    for (const auto& s : slots) total.add(s);
    return total;
}

Sums accumulate(const double* diff, const double* fine, const std::uint8_t* fail,
                std::size_t n) {
    Sums s;
    for (std::size_t i = 0; i < n; ++i) {
        if (fail[i]) {
            ++s.n_fail;
            continue;
        }
        const double d = diff[i];
        const double f = fine[i];
        s.s_diff += d;
        s.s_diff2 += d * d;
        s.s_fine += f;
        s.s_fine2 += f * f;
        ++s.n_valid;
    }
    return s;
}

struct BatchSetup {
    kernels::StepParams step;
    kernels::PayoffParams payoff;
    kernels::BarrierParams barrier;
    double y0 = 0.0;
    double maturity = 0.0;
    bool batchable = false;  // custom payoffs use the reference path
};

BatchSetup make_setup(const LampertiDynamics& dyn, const BarrierContract& contract,
                      const PayoffSpec& payoff) {
    BMC_REQUIRE(contract.mapped, ContractError, "estimate_level: contract must be barrier-mapped");
    BMC_REQUIRE(2.0 + dyn.kappa_eff * contract.maturity > 0.0, StepSizeError,
                "pricing: coarsest step inadmissible (2 + kappa_eff*T <= 0)");
    BatchSetup b;
    b.step = step_params(dyn);
    b.barrier.level = contract.transformed_barrier;
    b.barrier.bsign = contract.transformed_kind == BarrierKind::DownOut ? 1.0 : -1.0;
    b.maturity = contract.maturity;
    b.batchable = payoff.kind == PayoffSpec::Kind::DiscountedCall &&
                  dyn.kind != ModelKind::Generic;
    if (b.batchable) b.payoff = payoff_params(payoff, dyn);
    return b;
}

// Reference-path sampler for custom payoffs and generic drifts.
Sums reference_chunk(const LampertiDynamics& dyn, const BarrierContract& contract,
                     const PayoffSpec& payoff, int level, std::uint64_t seed, Role role,
                     std::uint64_t lo, std::uint64_t n) {
    Sums s;
    const double h = contract.maturity * std::ldexp(1.0, -level);
    const double y_start = dyn.y0_transformed();
    for (std::uint64_t k = 0; k < n; ++k) {
        SeedTag tag{seed, lo + k, stream_id(role, level)};
        try {
            if (level == 0) {
                auto sk = make_skeleton(tag, 0, contract.maturity);
                auto path = simulate_fine_path(dyn, y_start, sk);
                const double pf = fine_level_payoff(path, contract, payoff, dyn, h);
                s.s_diff += pf;
                s.s_diff2 += pf * pf;
                s.s_fine += pf;
                s.s_fine2 += pf * pf;
                ++s.n_valid;
            } else {
                auto sk = make_skeleton(tag, level, contract.maturity);
                auto cs = simulate_coupled(dyn, y_start, sk);
                const double pf = fine_level_payoff(cs.fine_values, contract, payoff, dyn, h);
                const double pc = coarse_level_payoff(cs, contract, payoff, dyn, h);
                const double d = pf - pc;
                s.s_diff += d;
                s.s_diff2 += d * d;
                s.s_fine += pf;
                s.s_fine2 += pf * pf;
                ++s.n_valid;
            }
        } catch (const PositivityLossError&) {
            ++s.n_fail;
        }
    }
    return s;
}

LevelStats finalize_stats(int level, const Sums& sums, std::uint64_t n_requested,
                          double positivity_error_rate) {
    LevelStats st;
    st.level = level;
    st.n_samples = sums.n_valid;
    st.positivity_failures = sums.n_fail;
    if (sums.n_fail > positivity_error_rate * static_cast<double>(n_requested)) {
        std::ostringstream os;
        os << "estimate_level: positivity-loss rate " << sums.n_fail << "/" << n_requested
           << " exceeds threshold at level " << level;
        throw PositivityLossError(os.str());
    }
    BMC_REQUIRE(sums.n_valid >= 2, NonConvergenceError, "estimate_level: fewer than 2 samples");
    const double n = static_cast<double>(sums.n_valid);
    st.mean_diff = sums.s_diff / n;
    st.var_diff = std::fmax(0.0, (sums.s_diff2 - n * st.mean_diff * st.mean_diff) / (n - 1.0));
    st.mean_fine = sums.s_fine / n;
    st.var_fine = std::fmax(0.0, (sums.s_fine2 - n * st.mean_fine * st.mean_fine) / (n - 1.0));
    st.cost_units = static_cast<double>(sums.n_valid) * level_cost_per_sample(level);
    return st;
}

}  // namespace

double PayoffSpec::evaluate(double y, const LampertiDynamics& dyn) const {
    if (kind == Kind::Custom) return custom(y);
    const double disc = std::exp(-rate * maturity);
    double v;
    if (dyn.transform_power == 0.5) {
        v = y * y;
    } else {
        v = kernels::ref::exp_d((1.0 / dyn.transform_power) * kernels::ref::log_d(y));
    }
    return disc * std::fmax(v - strike, 0.0);
}

PayoffSpec make_discounted_call(const BarrierContract& contract) {
    PayoffSpec p;
    p.kind = PayoffSpec::Kind::DiscountedCall;
    p.strike = contract.strike;
    p.rate = contract.rate;
    p.maturity = contract.maturity;
    return p;
}

kernels::PayoffParams payoff_params(const PayoffSpec& payoff, const LampertiDynamics& dyn) {
    kernels::PayoffParams p;
    p.disc = std::exp(-payoff.rate * payoff.maturity);
    p.strike = payoff.strike;
    p.power = 1.0 / dyn.transform_power;
    p.square = dyn.transform_power == 0.5;
    return p;
}

double survival_factor(double y0, double y1, double barrier, BarrierKind kind, double gamma,
                       double h) {
    BMC_REQUIRE(h > 0.0, ParameterError, "survival_factor: h must be > 0");
    BMC_REQUIRE(gamma != 0.0, ParameterError, "survival_factor: gamma must be nonzero");
    const double bsign = kind == BarrierKind::DownOut ? 1.0 : -1.0;
    const double inv_g2h = 2.0 / (gamma * gamma * h);
    return kernels::ref::survival_factor(y0, y1, barrier, bsign, inv_g2h);
}

double fine_level_payoff(const std::vector<double>& fine_path, const BarrierContract& contract,
                         const PayoffSpec& payoff, const LampertiDynamics& dyn, double h) {
    BMC_REQUIRE(contract.mapped, ContractError, "fine_level_payoff: contract must be mapped");
    const double bsign = contract.transformed_kind == BarrierKind::DownOut ? 1.0 : -1.0;
    const double inv_g2h = 2.0 / (dyn.gamma * dyn.gamma * h);
    double prod = 1.0;
    for (std::size_t i = 0; i + 1 < fine_path.size(); ++i)
        prod *= kernels::ref::survival_factor(fine_path[i], fine_path[i + 1],
                                              contract.transformed_barrier, bsign, inv_g2h);
    return payoff.evaluate(fine_path.back(), dyn) * prod;
}

double coarse_level_payoff(const CoupledLevelSample& sample, const BarrierContract& contract,
                           const PayoffSpec& payoff, const LampertiDynamics& dyn, double h_fine) {
    BMC_REQUIRE(contract.mapped, ContractError, "coarse_level_payoff: contract must be mapped");
    BMC_REQUIRE(sample.coarse_midpoints.size() + 1 == sample.coarse_values.size(), ContractError,
                "coarse_level_payoff: midpoints missing");
    const double bsign = contract.transformed_kind == BarrierKind::DownOut ? 1.0 : -1.0;
    const double inv_g2h = 2.0 / (dyn.gamma * dyn.gamma * h_fine);
    double prod = 1.0;
    for (std::size_t i = 0; i < sample.coarse_midpoints.size(); ++i) {
        prod *= kernels::ref::survival_factor(sample.coarse_values[i], sample.coarse_midpoints[i],
                                              contract.transformed_barrier, bsign, inv_g2h);
        prod *= kernels::ref::survival_factor(sample.coarse_midpoints[i],
                                              sample.coarse_values[i + 1],
                                              contract.transformed_barrier, bsign, inv_g2h);
    }
    return payoff.evaluate(sample.terminal_coarse, dyn) * prod;
}

namespace {

Sums sample_range(const LampertiDynamics& dyn, const BarrierContract& contract,
                  const PayoffSpec& payoff, int level, std::uint64_t first, std::uint64_t count,
                  std::uint64_t seed, Role role, int threads, std::uint64_t chunk) {
    const BatchSetup setup = make_setup(dyn, contract, payoff);
    const auto& k = kernels::active_kernels();
    if (!setup.batchable) {
        return reduce_chunks(first, count, chunk, threads,
                             [&](std::uint64_t lo, std::uint64_t n) {
                                 return reference_chunk(dyn, contract, payoff, level, seed, role,
                                                        lo, n);
                             });
    }
    const kernels::StreamKey key{seed, stream_id(role, level)};
    return reduce_chunks(first, count, chunk, threads, [&](std::uint64_t lo, std::uint64_t n) {
        std::vector<double> pf(n), pc(n);
        std::vector<std::uint8_t> fail(n);
        if (level == 0) {
            kernels::FineJob job;
            job.step = setup.step;
            job.payoff = setup.payoff;
            job.barrier = setup.barrier;
            job.key = key;
            job.y0 = dyn.y0_transformed();
            job.maturity = contract.maturity;
            job.n_steps = 1;
            job.sample_base = lo;
            job.n = n;
            job.payoff_out = pf.data();
            job.fail = fail.data();
            k.fine(job);
            return accumulate(pf.data(), pf.data(), fail.data(), n);
        }
        kernels::CoupledJob job;
        job.step = setup.step;
        job.payoff = setup.payoff;
        job.barrier = setup.barrier;
        job.key = key;
        job.y0 = dyn.y0_transformed();
        job.maturity = contract.maturity;
        job.level = level;
        job.sample_base = lo;
        job.n = n;
        job.pf = pf.data();
        job.pc = pc.data();
        job.fail = fail.data();
        k.coupled(job);
        std::vector<double> diff(n);
        for (std::size_t i = 0; i < n; ++i) diff[i] = pf[i] - pc[i];
        return accumulate(diff.data(), pf.data(), fail.data(), n);
    });
}

}  // namespace

LevelStats estimate_level(const LampertiDynamics& dyn, const BarrierContract& contract,
                          const PayoffSpec& payoff, int level, std::uint64_t n_samples,
                          std::uint64_t seed, int threads, std::uint64_t chunk) {
    BMC_REQUIRE(n_samples >= 2, ParameterError, "estimate_level: n_samples must be >= 2");
    const Sums sums = sample_range(dyn, contract, payoff, level, 0, n_samples, seed, kRoleMlmc,
                                   threads, chunk);
    return finalize_stats(level, sums, n_samples, 1e-3);
}

MlmcResult mlmc_price(const LampertiDynamics& dyn, const BarrierContract& contract,
                      const PayoffSpec& payoff, double epsilon, const DriverConfig& cfg) {
    BMC_REQUIRE(epsilon > 0.0, ParameterError, "mlmc_price: epsilon must be > 0");
    BMC_REQUIRE(cfg.l_min >= 1 && cfg.l_max >= cfg.l_min, ParameterError,
                "mlmc_price: need 1 <= l_min <= l_max");

    const double maturity = contract.maturity;
    int top = cfg.l_min;
    std::vector<Sums> sums(top + 1);
    std::vector<std::uint64_t> sampled(top + 1, 0);
    std::vector<std::uint64_t> target(top + 1, cfg.n_warm);

    auto h_of = [&](int l) { return maturity * std::ldexp(1.0, -l); };

    for (;;) {
        for (int l = 0; l <= top; ++l) {
            if (sampled[l] < target[l]) {
                const Sums extra =
                    sample_range(dyn, contract, payoff, l, sampled[l], target[l] - sampled[l],
                                 cfg.seed, kRoleMlmc, cfg.threads, cfg.chunk);
                sums[l].add(extra);
                sampled[l] = target[l];
            }
        }
        // Refresh the level allocation from the current variances.
        std::vector<double> mean(top + 1), var(top + 1);
        double alloc_sum = 0.0;
        for (int l = 0; l <= top; ++l) {
            const double n = static_cast<double>(sums[l].n_valid);
            BMC_REQUIRE(n >= 2.0, NonConvergenceError, "mlmc_price: level starved of samples");
            mean[l] = sums[l].s_diff / n;
            var[l] = std::fmax(0.0, (sums[l].s_diff2 - n * mean[l] * mean[l]) / (n - 1.0));
            alloc_sum += std::sqrt(var[l] / h_of(l));
        }
        bool changed = false;
        for (int l = 0; l <= top; ++l) {
            const std::uint64_t n_opt = static_cast<std::uint64_t>(std::ceil(
                2.0 * std::sqrt(var[l] * h_of(l)) * alloc_sum / (epsilon * epsilon)));
            const std::uint64_t want = std::max<std::uint64_t>(n_opt, 2);
            if (want > target[l]) {
                target[l] = want;
                changed = true;
            }
        }
        if (changed) continue;

        const double bias = std::fabs(mean[top]);  // alpha-hat = 1: /(2^1 - 1)
        if (bias <= epsilon / std::sqrt(2.0) || top == cfg.l_max) {
            if (bias > epsilon / std::sqrt(2.0)) {
                std::ostringstream os;
                os << "mlmc_price: bias " << bias << " > " << epsilon / std::sqrt(2.0)
                   << " at l_max=" << cfg.l_max << " (eps=" << epsilon << ")";
                throw NonConvergenceError(os.str());
            }
            MlmcResult res;
            res.epsilon_target = epsilon;
            res.bias_estimate = bias;
            double price = 0.0, stat2 = 0.0, cost = 0.0;
            for (int l = 0; l <= top; ++l) {
                LevelStats st = finalize_stats(l, sums[l], sampled[l], cfg.positivity_error_rate);
                price += st.mean_diff;
                stat2 += st.var_diff / static_cast<double>(st.n_samples);
                cost += st.cost_units;
                res.levels.push_back(st);
            }
            res.price = price;
            res.total_cost_units = cost;
            res.statistical_error_estimate = std::sqrt(stat2);
            return res;
        }
        // Bias unmet: extend the telescope.
        ++top;
        sums.emplace_back();
        sampled.push_back(0);
        target.push_back(cfg.n_warm);
    }
}

McResult mc_price(const LampertiDynamics& dyn, const BarrierContract& contract,
                  const PayoffSpec& payoff, double epsilon, int n_steps,
                  const DriverConfig& cfg) {
    BMC_REQUIRE(epsilon > 0.0, ParameterError, "mc_price: epsilon must be > 0");
    if (n_steps <= 0) {
        const double scale = cfg.mc_steps_scale > 0.0 ? cfg.mc_steps_scale : contract.maturity;
        n_steps = static_cast<int>(std::ceil(scale / epsilon));
    }

    const BatchSetup setup = make_setup(dyn, contract, payoff);
    BMC_REQUIRE(setup.batchable, ParameterError, "mc_price: needs a closed-form model payoff");
    const kernels::StreamKey key{cfg.seed, stream_id(kRoleMc, 0)};
    const auto& k = kernels::active_kernels();

    auto run = [&](std::uint64_t first, std::uint64_t count) {
        return reduce_chunks(first, count, cfg.chunk, cfg.threads,
                             [&](std::uint64_t lo, std::uint64_t n) {
                                 std::vector<double> p(n);
                                 std::vector<std::uint8_t> fail(n);
                                 kernels::FineJob job;
                                 job.step = setup.step;
                                 job.payoff = setup.payoff;
                                 job.barrier = setup.barrier;
                                 job.key = key;
                                 job.y0 = dyn.y0_transformed();
                                 job.maturity = contract.maturity;
                                 job.n_steps = n_steps;
                                 job.sample_base = lo;
                                 job.n = n;
                                 job.payoff_out = p.data();
                                 job.fail = fail.data();
                                 k.fine(job);
                                 return accumulate(p.data(), p.data(), fail.data(), n);
                             });
    };

    // Pilot for the variance, then extend to the allocation target.
    const std::uint64_t n_pilot = 10000;
    Sums sums = run(0, n_pilot);
    double n = static_cast<double>(sums.n_valid);
    double mean = sums.s_diff / n;
    double var = std::fmax(0.0, (sums.s_diff2 - n * mean * mean) / (n - 1.0));
    const std::uint64_t n_target = std::max<std::uint64_t>(
        n_pilot, static_cast<std::uint64_t>(std::ceil(2.0 * var / (epsilon * epsilon))));
    const std::uint64_t n_run = std::min(n_target, std::max(cfg.mc_max_samples, n_pilot));
    if (n_run > n_pilot) {
        sums.add(run(n_pilot, n_run - n_pilot));
        n = static_cast<double>(sums.n_valid);
        mean = sums.s_diff / n;
        var = std::fmax(0.0, (sums.s_diff2 - n * mean * mean) / (n - 1.0));
    }
    if (sums.n_fail > cfg.positivity_error_rate * static_cast<double>(n_run))
        throw PositivityLossError("mc_price: positivity-loss rate exceeds threshold");

    McResult res;
    res.price = mean;
    res.n_steps = n_steps;
    res.n_target = n_target;
    res.n_sampled = sums.n_valid;
    res.variance = var;
    res.cost_units = static_cast<double>(n_target) * n_steps;
    res.statistical_error_estimate = std::sqrt(var / n);
    res.positivity_failures = sums.n_fail;
    return res;
}

}  // namespace bmc
