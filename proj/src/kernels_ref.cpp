// Scalar reference kernels. These are the semantic definition of every
// batched operation; the AVX2 lane replays the same IEEE operations
// four lanes at a time and is equivalence-tested bitwise against this
// file. Use explicit std::fma wherever the SIMD lane uses fmadd.

#include <bit>
#include <cmath>

#include "bmc/kernels.hpp"
#include "kernels_common.hpp"

namespace bmc::kernels {

using namespace detail;

namespace ref {

double exp_d(double x) {
    if (x < kExpUnderflow) return 0.0;
    if (x > kExpOverflow) return std::numeric_limits<double>::infinity();
    const double k = std::nearbyint(x * kInvLn2);
    double r = std::fma(k, -kLn2Hi, x);
    r = std::fma(k, -kLn2Lo, r);
    double p = kExpC[13];
    for (int i = 12; i >= 0; --i) p = std::fma(p, r, kExpC[i]);
    const std::int64_t ki = static_cast<std::int64_t>(k);
    const double scale = std::bit_cast<double>(static_cast<std::uint64_t>(ki + 1023) << 52);
    return p * scale;
}

double expm1_d(double x) {
    if (x > -kExpm1Switch && x < kExpm1Switch) {
        double p = kExpC[13];
        for (int i = 12; i >= 1; --i) p = std::fma(p, x, kExpC[i]);
        return x * p;
    }
    return exp_d(x) - 1.0;
}

double log_d(double x) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
    std::int64_t e = static_cast<std::int64_t>(bits >> 52) - 1022;
    double m = std::bit_cast<double>((bits & 0x000FFFFFFFFFFFFFull) | 0x3FE0000000000000ull);
    if (m < kSqrtHalf) {
        m = m * 2.0;
        e -= 1;
    }
    const double s = (m - 1.0) / (m + 1.0);
    const double w = s * s;
    double q = kLogQ[7];
    for (int i = 6; i >= 0; --i) q = std::fma(q, w, kLogQ[i]);
    const double lnm = std::fma(w * q, s, 2.0 * s);
    const double de = static_cast<double>(e);
    return std::fma(de, kLn2Hi, std::fma(de, kLn2Lo, lnm));
}

double norminv_d(double u) {
    const double q = u - 0.5;
    if (q >= -kNormCentral && q <= kNormCentral) {
        const double r = kNormCentralR - q * q;
        double num = kNormA[7];
        for (int i = 6; i >= 0; --i) num = std::fma(num, r, kNormA[i]);
        double den = kNormB[7];
        for (int i = 6; i >= 0; --i) den = std::fma(den, r, kNormB[i]);
        return q * num / den;
    }
    const double tail = q < 0.0 ? u : 1.0 - u;
    double r = std::sqrt(-log_d(tail));
    double x;
    if (r <= kNormTailSplit) {
        r = r - 1.6;
        double num = kNormC[7];
        for (int i = 6; i >= 0; --i) num = std::fma(num, r, kNormC[i]);
        double den = kNormD[7];
        for (int i = 6; i >= 0; --i) den = std::fma(den, r, kNormD[i]);
        x = num / den;
    } else {
        r = r - 5.0;
        double num = kNormE[7];
        for (int i = 6; i >= 0; --i) num = std::fma(num, r, kNormE[i]);
        double den = kNormF[7];
        for (int i = 6; i >= 0; --i) den = std::fma(den, r, kNormF[i]);
        x = num / den;
    }
    return q < 0.0 ? -x : x;
}

void philox4x32(const std::uint32_t ctr[4], const std::uint32_t key[2], std::uint32_t out[4]) {
    std::uint32_t x0 = ctr[0], x1 = ctr[1], x2 = ctr[2], x3 = ctr[3];
    std::uint32_t k0 = key[0], k1 = key[1];
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * x0;
        const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * x2;
        const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
        const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
        const std::uint32_t y0 = hi1 ^ x1 ^ k0;
        const std::uint32_t y1 = lo1;
        const std::uint32_t y2 = hi0 ^ x3 ^ k1;
        const std::uint32_t y3 = lo0;
        x0 = y0;
        x1 = y1;
        x2 = y2;
        x3 = y3;
        k0 += kPhiloxW0;
        k1 += kPhiloxW1;
    }
    out[0] = x0;
    out[1] = x1;
    out[2] = x2;
    out[3] = x3;
}

double uniform_from_bits(std::uint64_t bits) {
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1p-52;
}

double survival_factor(double y0, double y1, double barrier, double bsign, double inv_g2h) {
    const double d0 = std::fmax(bsign * (y0 - barrier), 0.0);
    const double d1 = std::fmax(bsign * (y1 - barrier), 0.0);
    const double t = (d0 * d1) * inv_g2h;
    return -expm1_d(-t);
}

}  // namespace ref

namespace {

// One Gaussian increment for (sample, step) under the given stream key.
double gauss_at(const StreamKey& key, std::uint64_t sample, std::uint32_t step, double sqrt_h) {
    const std::uint32_t ctr[4] = {
        static_cast<std::uint32_t>(sample),
        static_cast<std::uint32_t>(sample >> 32),
        step >> 1,
        key.stream,
    };
    const std::uint32_t k[2] = {
        static_cast<std::uint32_t>(key.seed),
        static_cast<std::uint32_t>(key.seed >> 32),
    };
    std::uint32_t out[4];
    ref::philox4x32(ctr, k, out);
    const int half = static_cast<int>(step & 1u);
    const std::uint64_t bits =
        (static_cast<std::uint64_t>(out[2 * half + 1]) << 32) | out[2 * half];
    return ref::norminv_d(ref::uniform_from_bits(bits)) * sqrt_h;
}

// Quadratic implicit step. Returns y > 0 or flags failure.
double quad_step(double y_prev, double gamma_dw, double a, double ac, double c, bool& fail) {
    const double b = y_prev + gamma_dw;
    const double disc = std::fma(b, b, ac);
    if (disc < 0.0) {
        fail = true;
        return 1.0;
    }
    const double sq = std::sqrt(disc);
    const double y = b >= 0.0 ? (b + sq) / a : c / (sq - b);
    if (!(y > 0.0)) {
        fail = true;
        return 1.0;
    }
    return y;
}

double payoff_eval(const PayoffParams& p, double y) {
    const double v = p.square ? y * y : ref::exp_d(p.power * ref::log_d(y));
    return p.disc * std::fmax(v - p.strike, 0.0);
}

void fill_gaussians(StreamKey key, std::uint64_t sample, std::uint32_t step0,
                    std::size_t count, double sqrt_h, double* out) {
    for (std::size_t i = 0; i < count; ++i)
        out[i] = gauss_at(key, sample, step0 + static_cast<std::uint32_t>(i), sqrt_h);
}

void norminv_batch(const double* u, double* z, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) z[i] = ref::norminv_d(u[i]);
}

void coupled(const CoupledJob& job) {
    const LevelConsts lc = make_step_consts(job.step, job.maturity * std::ldexp(1.0, -job.level));
    const std::uint64_t n_coarse = 1ull << (job.level - 1);
    for (std::size_t s = 0; s < job.n; ++s) {
        const std::uint64_t sample = job.sample_base + s;
        double yf = job.y0;
        double yc = job.y0;
        double prod_f = 1.0;
        double prod_c = 1.0;
        bool fail = false;
        for (std::uint64_t i = 0; i < n_coarse; ++i) {
            const std::uint32_t stepi = static_cast<std::uint32_t>(2 * i);
            const double dw0 = gauss_at(job.key, sample, stepi, lc.sqrt_h);
            const double dw1 = gauss_at(job.key, sample, stepi + 1, lc.sqrt_h);
            const double yf1 = quad_step(yf, lc.gamma * dw0, lc.a_fine, lc.ac_fine, lc.c_fine, fail);
            prod_f *= ref::survival_factor(yf, yf1, job.barrier.level, job.barrier.bsign, lc.inv_g2h);
            const double yf2 = quad_step(yf1, lc.gamma * dw1, lc.a_fine, lc.ac_fine, lc.c_fine, fail);
            prod_f *= ref::survival_factor(yf1, yf2, job.barrier.level, job.barrier.bsign, lc.inv_g2h);
            const double dwc = dw0 + dw1;
            const double yc1 = quad_step(yc, lc.gamma * dwc, lc.a_coarse, lc.ac_coarse, lc.c_coarse, fail);
            const double drift = lc.c_eff / (2.0 * yc1) - lc.half_kappa * yc1;
            const double mid = yc + drift * lc.h + lc.gamma * dw0;
            prod_c *= ref::survival_factor(yc, mid, job.barrier.level, job.barrier.bsign, lc.inv_g2h);
            prod_c *= ref::survival_factor(mid, yc1, job.barrier.level, job.barrier.bsign, lc.inv_g2h);
            yf = yf2;
            yc = yc1;
        }
        job.pf[s] = payoff_eval(job.payoff, yf) * prod_f;
        job.pc[s] = payoff_eval(job.payoff, yc) * prod_c;
        job.fail[s] = fail ? 1 : 0;
    }
}

void fine(const FineJob& job) {
    const LevelConsts lc = make_step_consts(job.step, job.maturity / job.n_steps);
    for (std::size_t s = 0; s < job.n; ++s) {
        const std::uint64_t sample = job.sample_base + s;
        double y = job.y0;
        double prod = 1.0;
        bool fail = false;
        for (int i = 0; i < job.n_steps; ++i) {
            const double dw = gauss_at(job.key, sample, static_cast<std::uint32_t>(i), lc.sqrt_h);
            const double y1 = quad_step(y, lc.gamma * dw, lc.a_fine, lc.ac_fine, lc.c_fine, fail);
            prod *= ref::survival_factor(y, y1, job.barrier.level, job.barrier.bsign, lc.inv_g2h);
            y = y1;
        }
        job.payoff_out[s] = payoff_eval(job.payoff, y) * prod;
        job.fail[s] = fail ? 1 : 0;
    }
}

void extremes(const ExtremeJob& job) {
    const LevelConsts lc = make_step_consts(job.step, job.maturity * std::ldexp(1.0, -job.level));
    const std::uint64_t n_steps = 1ull << job.level;
    for (std::size_t s = 0; s < job.n; ++s) {
        const std::uint64_t sample = job.sample_base + s;
        double y = job.y0;
        bool fail = false;
        double* surv = job.survival + s * job.n_levels;
        for (std::size_t j = 0; j < job.n_levels; ++j) surv[j] = 1.0;
        for (std::uint64_t i = 0; i < n_steps; ++i) {
            const double dw = gauss_at(job.key, sample, static_cast<std::uint32_t>(i), lc.sqrt_h);
            const double y1 = quad_step(y, lc.gamma * dw, lc.a_fine, lc.ac_fine, lc.c_fine, fail);
            for (std::size_t j = 0; j < job.n_levels; ++j)
                surv[j] *= ref::survival_factor(y, y1, job.z_levels[j], job.bsign, lc.inv_g2h);
            y = y1;
        }
        if (job.terminal) job.terminal[s] = y;
        job.fail[s] = fail ? 1 : 0;
    }
}

}  // namespace

const Kernels& scalar_kernels() {
    static const Kernels k = {&fill_gaussians, &norminv_batch, &coupled, &fine, &extremes,
                              "scalar"};
    return k;
}

}  // namespace bmc::kernels
