// AVX2 lane. Four samples per register, same IEEE operation order as
// kernels_ref.cpp so every per-sample result is bitwise identical to the
// scalar reference (tests/test_kernels.cpp asserts this).

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <bit>
#include <cstring>
#include <limits>
#include <vector>

#include "bmc/kernels.hpp"
#include "kernels_common.hpp"

namespace bmc::kernels {

using namespace detail;

namespace {

using d4 = __m256d;
using i4 = __m256i;

inline d4 bc(double x) { return _mm256_set1_pd(x); }

inline d4 blend(d4 a, d4 b, d4 mask) { return _mm256_blendv_pd(a, b, mask); }

// exp, same reduction/polynomial as ref::exp_d.
inline d4 exp4(d4 x) {
    const d4 under = _mm256_cmp_pd(x, bc(kExpUnderflow), _CMP_LT_OQ);
    const d4 over = _mm256_cmp_pd(x, bc(kExpOverflow), _CMP_GT_OQ);
    const d4 k = _mm256_round_pd(_mm256_mul_pd(x, bc(kInvLn2)),
                                 _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    d4 r = _mm256_fmadd_pd(k, bc(-kLn2Hi), x);
    r = _mm256_fmadd_pd(k, bc(-kLn2Lo), r);
    d4 p = bc(kExpC[13]);
    for (int i = 12; i >= 0; --i) p = _mm256_fmadd_pd(p, r, bc(kExpC[i]));
    const __m128i k32 = _mm256_cvtpd_epi32(k);
    const i4 k64 = _mm256_cvtepi32_epi64(k32);
    const i4 bits = _mm256_slli_epi64(_mm256_add_epi64(k64, _mm256_set1_epi64x(1023)), 52);
    d4 res = _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
    res = blend(res, _mm256_setzero_pd(), under);
    res = blend(res, bc(std::numeric_limits<double>::infinity()), over);
    return res;
}

inline d4 expm1_4(d4 x) {
    d4 p = bc(kExpC[13]);
    for (int i = 12; i >= 1; --i) p = _mm256_fmadd_pd(p, x, bc(kExpC[i]));
    const d4 small = _mm256_mul_pd(x, p);
    const d4 big = _mm256_sub_pd(exp4(x), bc(1.0));
    const d4 abs_x = _mm256_andnot_pd(bc(-0.0), x);
    const d4 use_small = _mm256_cmp_pd(abs_x, bc(kExpm1Switch), _CMP_LT_OQ);
    return blend(big, small, use_small);
}

inline d4 log4(d4 x) {
    const i4 bits = _mm256_castpd_si256(x);
    const i4 exp_bits = _mm256_srli_epi64(bits, 52);
    // int64 -> double via the 2^52 or-trick (values are tiny).
    const i4 biased = _mm256_or_si256(exp_bits, _mm256_set1_epi64x(0x4330000000000000ll));
    d4 e = _mm256_sub_pd(_mm256_castsi256_pd(biased), bc(0x1p52));
    e = _mm256_sub_pd(e, bc(1022.0));
    d4 m = _mm256_castsi256_pd(_mm256_or_si256(
        _mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFll)),
        _mm256_set1_epi64x(0x3FE0000000000000ll)));
    const d4 low = _mm256_cmp_pd(m, bc(kSqrtHalf), _CMP_LT_OQ);
    m = blend(m, _mm256_mul_pd(m, bc(2.0)), low);
    e = blend(e, _mm256_sub_pd(e, bc(1.0)), low);
    const d4 s = _mm256_div_pd(_mm256_sub_pd(m, bc(1.0)), _mm256_add_pd(m, bc(1.0)));
    const d4 w = _mm256_mul_pd(s, s);
    d4 q = bc(kLogQ[7]);
    for (int i = 6; i >= 0; --i) q = _mm256_fmadd_pd(q, w, bc(kLogQ[i]));
    const d4 lnm = _mm256_fmadd_pd(_mm256_mul_pd(w, q), s, _mm256_mul_pd(bc(2.0), s));
    return _mm256_fmadd_pd(e, bc(kLn2Hi), _mm256_fmadd_pd(e, bc(kLn2Lo), lnm));
}

template <const double* Coef>
inline d4 horner8(d4 r) {
    d4 p = bc(Coef[7]);
    for (int i = 6; i >= 0; --i) p = _mm256_fmadd_pd(p, r, bc(Coef[i]));
    return p;
}

inline d4 norminv4(d4 u) {
    const d4 q = _mm256_sub_pd(u, bc(0.5));
    const d4 abs_q = _mm256_andnot_pd(bc(-0.0), q);
    const d4 central = _mm256_cmp_pd(abs_q, bc(kNormCentral), _CMP_LE_OQ);

    const d4 r_c = _mm256_sub_pd(bc(kNormCentralR), _mm256_mul_pd(q, q));
    const d4 x_central =
        _mm256_div_pd(_mm256_mul_pd(q, horner8<kNormA>(r_c)), horner8<kNormB>(r_c));
    if (_mm256_testc_pd(central, _mm256_castsi256_pd(_mm256_set1_epi64x(-1)))) {
        return x_central;
    }

    const d4 neg = _mm256_cmp_pd(q, _mm256_setzero_pd(), _CMP_LT_OQ);
    const d4 tail_p = blend(_mm256_sub_pd(bc(1.0), u), u, neg);
    d4 r = _mm256_sqrt_pd(_mm256_sub_pd(_mm256_setzero_pd(), log4(tail_p)));
    const d4 near = _mm256_cmp_pd(r, bc(kNormTailSplit), _CMP_LE_OQ);
    const d4 r1 = _mm256_sub_pd(r, bc(1.6));
    const d4 x1 = _mm256_div_pd(horner8<kNormC>(r1), horner8<kNormD>(r1));
    const d4 r2 = _mm256_sub_pd(r, bc(5.0));
    const d4 x2 = _mm256_div_pd(horner8<kNormE>(r2), horner8<kNormF>(r2));
    d4 x_tail = blend(x2, x1, near);
    x_tail = blend(x_tail, _mm256_xor_pd(x_tail, bc(-0.0)), neg);
    return blend(x_tail, x_central, central);
}

struct Philox4 {
    i4 k0, k1;  // per-lane 64-bit slots holding 32-bit keys
    Philox4(const StreamKey& key) {
        k0 = _mm256_set1_epi64x(static_cast<std::uint32_t>(key.seed));
        k1 = _mm256_set1_epi64x(static_cast<std::uint32_t>(key.seed >> 32));
    }
    // 4 independent blocks; counters given per lane.
    void block(i4 x0, i4 x1, i4 x2, i4 x3, i4 out[4]) const {
        const i4 m0 = _mm256_set1_epi64x(kPhiloxM0);
        const i4 m1 = _mm256_set1_epi64x(kPhiloxM1);
        const i4 mask32 = _mm256_set1_epi64x(0xFFFFFFFFll);
        i4 c0 = k0, c1 = k1;
        for (int round = 0; round < 10; ++round) {
            const i4 p0 = _mm256_mul_epu32(m0, x0);
            const i4 p1 = _mm256_mul_epu32(m1, x2);
            const i4 hi0 = _mm256_srli_epi64(p0, 32);
            const i4 lo0 = _mm256_and_si256(p0, mask32);
            const i4 hi1 = _mm256_srli_epi64(p1, 32);
            const i4 lo1 = _mm256_and_si256(p1, mask32);
            const i4 y0 = _mm256_xor_si256(_mm256_xor_si256(hi1, x1), c0);
            const i4 y2 = _mm256_xor_si256(_mm256_xor_si256(hi0, x3), c1);
            x0 = y0;
            x1 = lo1;
            x2 = y2;
            x3 = lo0;
            c0 = _mm256_and_si256(_mm256_add_epi64(c0, _mm256_set1_epi64x(kPhiloxW0)), mask32);
            c1 = _mm256_and_si256(_mm256_add_epi64(c1, _mm256_set1_epi64x(kPhiloxW1)), mask32);
        }
        out[0] = x0;
        out[1] = x1;
        out[2] = x2;
        out[3] = x3;
    }
};

inline d4 uniform4(i4 bits64) {
    const i4 m = _mm256_srli_epi64(bits64, 12);
    const d4 d = _mm256_castsi256_pd(_mm256_or_si256(m, _mm256_set1_epi64x(0x4330000000000000ll)));
    const d4 mp5 = _mm256_sub_pd(d, bc(0x1p52 - 0.5));
    return _mm256_mul_pd(mp5, bc(0x1p-52));
}

// Gaussian increments for one block (two consecutive steps) of 4 samples.
struct GaussStream {
    Philox4 philox;
    i4 x0, x1, x3;
    d4 sqrt_h;
    GaussStream(const StreamKey& key, std::uint64_t sample_base, double sh) : philox(key) {
        alignas(32) std::int64_t lanes[4];
        for (int j = 0; j < 4; ++j)
            lanes[j] = static_cast<std::int64_t>(
                static_cast<std::uint32_t>(sample_base + static_cast<std::uint64_t>(j)));
        x0 = _mm256_load_si256(reinterpret_cast<const i4*>(lanes));
        for (int j = 0; j < 4; ++j)
            lanes[j] = static_cast<std::int64_t>(
                static_cast<std::uint32_t>((sample_base + static_cast<std::uint64_t>(j)) >> 32));
        x1 = _mm256_load_si256(reinterpret_cast<const i4*>(lanes));
        x3 = _mm256_set1_epi64x(key.stream);
        sqrt_h = bc(sh);
    }
    // dw for steps (2*block, 2*block+1)
    void pair(std::uint32_t block, d4& dw0, d4& dw1) {
        i4 out[4];
        philox.block(x0, x1, _mm256_set1_epi64x(block), x3, out);
        const i4 b0 = _mm256_or_si256(_mm256_slli_epi64(out[1], 32), out[0]);
        const i4 b1 = _mm256_or_si256(_mm256_slli_epi64(out[3], 32), out[2]);
        dw0 = _mm256_mul_pd(norminv4(uniform4(b0)), sqrt_h);
        dw1 = _mm256_mul_pd(norminv4(uniform4(b1)), sqrt_h);
    }
    d4 single(std::uint32_t step) {
        i4 out[4];
        philox.block(x0, x1, _mm256_set1_epi64x(step >> 1), x3, out);
        const int half = static_cast<int>(step & 1u);
        const i4 b = _mm256_or_si256(_mm256_slli_epi64(out[2 * half + 1], 32), out[2 * half]);
        return _mm256_mul_pd(norminv4(uniform4(b)), sqrt_h);
    }
};

inline d4 quad_step4(d4 y_prev, d4 gamma_dw, d4 a, d4 ac, d4 c, d4& fail) {
    const d4 b = _mm256_add_pd(y_prev, gamma_dw);
    const d4 disc = _mm256_fmadd_pd(b, b, ac);
    const d4 neg_disc = _mm256_cmp_pd(disc, _mm256_setzero_pd(), _CMP_LT_OQ);
    const d4 sq = _mm256_sqrt_pd(_mm256_max_pd(disc, _mm256_setzero_pd()));
    const d4 y_pos = _mm256_div_pd(_mm256_add_pd(b, sq), a);
    const d4 y_neg = _mm256_div_pd(c, _mm256_sub_pd(sq, b));
    const d4 b_ge0 = _mm256_cmp_pd(b, _mm256_setzero_pd(), _CMP_GE_OQ);
    d4 y = blend(y_neg, y_pos, b_ge0);
    const d4 bad = _mm256_or_pd(neg_disc, _mm256_cmp_pd(y, _mm256_setzero_pd(), _CMP_NGT_UQ));
    fail = _mm256_or_pd(fail, bad);
    return blend(y, bc(1.0), bad);
}

inline d4 survival4(d4 y0, d4 y1, d4 barrier, d4 bsign, d4 inv_g2h) {
    const d4 d0 = _mm256_max_pd(_mm256_mul_pd(bsign, _mm256_sub_pd(y0, barrier)),
                                _mm256_setzero_pd());
    const d4 d1 = _mm256_max_pd(_mm256_mul_pd(bsign, _mm256_sub_pd(y1, barrier)),
                                _mm256_setzero_pd());
    const d4 t = _mm256_mul_pd(_mm256_mul_pd(d0, d1), inv_g2h);
    return _mm256_sub_pd(_mm256_setzero_pd(), expm1_4(_mm256_sub_pd(_mm256_setzero_pd(), t)));
}

inline d4 payoff4(const PayoffParams& p, d4 y) {
    const d4 v = p.square ? _mm256_mul_pd(y, y) : exp4(_mm256_mul_pd(bc(p.power), log4(y)));
    const d4 gain = _mm256_max_pd(_mm256_sub_pd(v, bc(p.strike)), _mm256_setzero_pd());
    return _mm256_mul_pd(bc(p.disc), gain);
}

inline void store_lanes(d4 v, double* dst, std::size_t count) {
    alignas(32) double tmp[4];
    _mm256_store_pd(tmp, v);
    for (std::size_t j = 0; j < count; ++j) dst[j] = tmp[j];
}

inline void store_fail(d4 fail, std::uint8_t* dst, std::size_t count) {
    alignas(32) double tmp[4];
    _mm256_store_pd(tmp, fail);
    for (std::size_t j = 0; j < count; ++j)
        dst[j] = std::bit_cast<std::uint64_t>(tmp[j]) ? 1 : 0;
}

void fill_gaussians(StreamKey key, std::uint64_t sample, std::uint32_t step0,
                    std::size_t count, double sqrt_h, double* out) {
    // Per-sample utility; the scalar implementation is the definition.
    scalar_kernels().fill_gaussians(key, sample, step0, count, sqrt_h, out);
}

void norminv_batch(const double* u, double* z, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(z + i, norminv4(_mm256_loadu_pd(u + i)));
    if (i < n) scalar_kernels().norminv_batch(u + i, z + i, n - i);
}

void coupled(const CoupledJob& job) {
    const LevelConsts lc = make_step_consts(job.step, job.maturity * std::ldexp(1.0, -job.level));
    const std::uint64_t n_coarse = 1ull << (job.level - 1);
    const d4 a_f = bc(lc.a_fine), ac_f = bc(lc.ac_fine), c_f = bc(lc.c_fine);
    const d4 a_c = bc(lc.a_coarse), ac_c = bc(lc.ac_coarse), c_c = bc(lc.c_coarse);
    const d4 gamma = bc(lc.gamma), barrier = bc(job.barrier.level), bsign = bc(job.barrier.bsign);
    const d4 inv_g2h = bc(lc.inv_g2h), h = bc(lc.h);
    const d4 halfk = bc(lc.half_kappa), c_eff = bc(lc.c_eff), two = bc(2.0);
    for (std::size_t s = 0; s < job.n; s += 4) {
        const std::size_t lanes = job.n - s < 4 ? job.n - s : 4;
        GaussStream gs(job.key, job.sample_base + s, lc.sqrt_h);
        d4 yf = bc(job.y0), yc = bc(job.y0);
        d4 prod_f = bc(1.0), prod_c = bc(1.0);
        d4 fail = _mm256_setzero_pd();
        for (std::uint64_t i = 0; i < n_coarse; ++i) {
            d4 dw0, dw1;
            gs.pair(static_cast<std::uint32_t>(i), dw0, dw1);
            const d4 yf1 = quad_step4(yf, _mm256_mul_pd(gamma, dw0), a_f, ac_f, c_f, fail);
            prod_f = _mm256_mul_pd(prod_f, survival4(yf, yf1, barrier, bsign, inv_g2h));
            const d4 yf2 = quad_step4(yf1, _mm256_mul_pd(gamma, dw1), a_f, ac_f, c_f, fail);
            prod_f = _mm256_mul_pd(prod_f, survival4(yf1, yf2, barrier, bsign, inv_g2h));
            const d4 dwc = _mm256_add_pd(dw0, dw1);
            const d4 yc1 = quad_step4(yc, _mm256_mul_pd(gamma, dwc), a_c, ac_c, c_c, fail);
            const d4 drift = _mm256_sub_pd(_mm256_div_pd(c_eff, _mm256_mul_pd(two, yc1)),
                                           _mm256_mul_pd(halfk, yc1));
            const d4 mid = _mm256_add_pd(_mm256_add_pd(yc, _mm256_mul_pd(drift, h)),
                                         _mm256_mul_pd(gamma, dw0));
            prod_c = _mm256_mul_pd(prod_c, survival4(yc, mid, barrier, bsign, inv_g2h));
            prod_c = _mm256_mul_pd(prod_c, survival4(mid, yc1, barrier, bsign, inv_g2h));
            yf = yf2;
            yc = yc1;
        }
        store_lanes(_mm256_mul_pd(payoff4(job.payoff, yf), prod_f), job.pf + s, lanes);
        store_lanes(_mm256_mul_pd(payoff4(job.payoff, yc), prod_c), job.pc + s, lanes);
        store_fail(fail, job.fail + s, lanes);
    }
}

void fine(const FineJob& job) {
    const LevelConsts lc = make_step_consts(job.step, job.maturity / job.n_steps);
    const d4 a_f = bc(lc.a_fine), ac_f = bc(lc.ac_fine), c_f = bc(lc.c_fine);
    const d4 gamma = bc(lc.gamma), barrier = bc(job.barrier.level), bsign = bc(job.barrier.bsign);
    const d4 inv_g2h = bc(lc.inv_g2h);
    for (std::size_t s = 0; s < job.n; s += 4) {
        const std::size_t lanes = job.n - s < 4 ? job.n - s : 4;
        GaussStream gs(job.key, job.sample_base + s, lc.sqrt_h);
        d4 y = bc(job.y0);
        d4 prod = bc(1.0);
        d4 fail = _mm256_setzero_pd();
        for (int i = 0; i < job.n_steps; ++i) {
            const d4 dw = gs.single(static_cast<std::uint32_t>(i));
            const d4 y1 = quad_step4(y, _mm256_mul_pd(gamma, dw), a_f, ac_f, c_f, fail);
            prod = _mm256_mul_pd(prod, survival4(y, y1, barrier, bsign, inv_g2h));
            y = y1;
        }
        store_lanes(_mm256_mul_pd(payoff4(job.payoff, y), prod), job.payoff_out + s, lanes);
        store_fail(fail, job.fail + s, lanes);
    }
}

void extremes(const ExtremeJob& job) {
    const LevelConsts lc = make_step_consts(job.step, job.maturity * std::ldexp(1.0, -job.level));
    const std::uint64_t n_steps = 1ull << job.level;
    const d4 a_f = bc(lc.a_fine), ac_f = bc(lc.ac_fine), c_f = bc(lc.c_fine);
    const d4 gamma = bc(lc.gamma), bsign = bc(job.bsign), inv_g2h = bc(lc.inv_g2h);
    std::vector<d4> surv(job.n_levels);
    std::vector<d4> zvec(job.n_levels);
    for (std::size_t j = 0; j < job.n_levels; ++j) zvec[j] = bc(job.z_levels[j]);
    for (std::size_t s = 0; s < job.n; s += 4) {
        const std::size_t lanes = job.n - s < 4 ? job.n - s : 4;
        GaussStream gs(job.key, job.sample_base + s, lc.sqrt_h);
        d4 y = bc(job.y0);
        d4 fail = _mm256_setzero_pd();
        for (std::size_t j = 0; j < job.n_levels; ++j) surv[j] = bc(1.0);
        for (std::uint64_t i = 0; i < n_steps; i += 2) {
            d4 dw0, dw1;
            gs.pair(static_cast<std::uint32_t>(i >> 1), dw0, dw1);
            const d4 y1 = quad_step4(y, _mm256_mul_pd(gamma, dw0), a_f, ac_f, c_f, fail);
            for (std::size_t j = 0; j < job.n_levels; ++j)
                surv[j] = _mm256_mul_pd(surv[j], survival4(y, y1, zvec[j], bsign, inv_g2h));
            const d4 y2 = quad_step4(y1, _mm256_mul_pd(gamma, dw1), a_f, ac_f, c_f, fail);
            for (std::size_t j = 0; j < job.n_levels; ++j)
                surv[j] = _mm256_mul_pd(surv[j], survival4(y1, y2, zvec[j], bsign, inv_g2h));
            y = y2;
        }
        alignas(32) double tmp[4];
        for (std::size_t j = 0; j < job.n_levels; ++j) {
            _mm256_store_pd(tmp, surv[j]);
            for (std::size_t l = 0; l < lanes; ++l)
                job.survival[(s + l) * job.n_levels + j] = tmp[l];
        }
        if (job.terminal) store_lanes(y, job.terminal + s, lanes);
        store_fail(fail, job.fail + s, lanes);
    }
}

}  // namespace

const Kernels& avx2_kernels() {
    static const Kernels k = {&fill_gaussians, &norminv_batch, &coupled, &fine, &extremes,
                              "avx2"};
    return k;
}

}  // namespace bmc::kernels

#endif  // x86_64
