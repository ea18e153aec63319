#pragma once

// Shared constants for the scalar reference kernels and their SIMD
// mirrors. The two lanes must perform the same IEEE operations in the
// same order on every element; keep any change here in sync with both
// kernels_ref.cpp and kernels_avx2.cpp.

#include <cstdint>
#include <cmath>

#include "bmc/kernels.hpp"

namespace bmc::kernels::detail {

// exp: x = k ln2 + r, |r| <= ln2/2, e^r by degree-13 Taylor polynomial.
inline constexpr double kInvLn2 = 1.4426950408889634074;
inline constexpr double kLn2Hi = 6.93147180369123816490e-01;
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;
inline constexpr double kExpUnderflow = -708.0;
inline constexpr double kExpOverflow = 709.0;
inline constexpr double kExpC[14] = {
    1.0,
    1.0,
    5.0000000000000000000e-01,
    1.6666666666666666667e-01,
    4.1666666666666666667e-02,
    8.3333333333333333333e-03,
    1.3888888888888888889e-03,
    1.9841269841269841270e-04,
    2.4801587301587301587e-05,
    2.7557319223985890653e-06,
    2.7557319223985890653e-07,
    2.5052108385441718775e-08,
    2.0876756987868098979e-09,
    1.6059043836821614599e-10,
};
// expm1 on |x| <= ln2/2: x * P(x), P(x) = sum_{i>=0} x^i/(i+1)!.
inline constexpr double kExpm1Switch = 0.34657359027997264;

// log: m in [1/sqrt2, sqrt2), s = (m-1)/(m+1),
// ln m = 2s + s*w*Q(w), w = s^2, Q(w) = sum_k 2/(2k+3) w^k.
inline constexpr double kSqrtHalf = 0.70710678118654752440;
inline constexpr double kLogQ[8] = {
    2.0 / 3.0, 2.0 / 5.0, 2.0 / 7.0, 2.0 / 9.0,
    2.0 / 11.0, 2.0 / 13.0, 2.0 / 15.0, 2.0 / 17.0,
};

// Wichura's PPND16 (AS 241) rational approximations for the inverse
// normal CDF.
inline constexpr double kNormA[8] = {
    3.3871328727963666080e+00, 1.3314166789178437745e+02,
    1.9715909503065514427e+03, 1.3731693765509461125e+04,
    4.5921953931549871457e+04, 6.7265770927008700853e+04,
    3.3430575583588128105e+04, 2.5090809287301226727e+03,
};
inline constexpr double kNormB[8] = {
    1.0,
    4.2313330701600911252e+01, 6.8718700749205790830e+02,
    5.3941960214247511077e+03, 2.1213794301586595867e+04,
    3.9307895800092710610e+04, 2.8729085735721942674e+04,
    5.2264952788528545610e+03,
};
inline constexpr double kNormC[8] = {
    1.42343711074968357734e+00, 4.63033784615654529590e+00,
    5.76949722146069140550e+00, 3.64784832476320460504e+00,
    1.27045825245236838258e+00, 2.41780725177450611770e-01,
    2.27238449892691845833e-02, 7.74545014278341407640e-04,
};
inline constexpr double kNormD[8] = {
    1.0,
    2.05319162663775882187e+00, 1.67638483018380384940e+00,
    6.89767334985100004550e-01, 1.48103976427480074590e-01,
    1.51986665636164571966e-02, 5.47593808499534494600e-04,
    1.05075007164441684324e-09,
};
inline constexpr double kNormE[8] = {
    6.65790464350110377720e+00, 5.46378491116411436990e+00,
    1.78482653991729133580e+00, 2.96560571828504891230e-01,
    2.65321895265761230930e-02, 1.24266094738807843860e-03,
    2.71155556874348757815e-05, 2.01033439929228813265e-07,
};
inline constexpr double kNormF[8] = {
    1.0,
    5.99832206555887937690e-01, 1.36929880922735805310e-01,
    1.48753612908506148525e-02, 7.86869131145613259100e-04,
    1.84631831751005468180e-05, 1.42151175831644588870e-07,
    2.04426310338993978564e-15,
};
inline constexpr double kNormCentral = 0.425;
inline constexpr double kNormCentralR = 0.180625;  // 0.425^2
inline constexpr double kNormTailSplit = 5.0;

// Philox4x32-10 round constants.
inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

}  // namespace bmc::kernels::detail

namespace bmc::kernels::detail {

// Derived per-job constants. Computed once, in scalar double, and shared
// verbatim by both lanes.
struct LevelConsts {
    double h = 0.0;
    double sqrt_h = 0.0;
    double a_fine = 0.0;   // 2 + kappa_eff h
    double ac_fine = 0.0;  // a_fine * (c_eff h)
    double c_fine = 0.0;   // c_eff h
    double a_coarse = 0.0;
    double ac_coarse = 0.0;
    double c_coarse = 0.0;
    double inv_g2h = 0.0;  // 2 / (gamma^2 h)
    double half_kappa = 0.0;
    double c_eff = 0.0;  // drift L(y) = c_eff / (2 y) - half_kappa * y
    double gamma = 0.0;
};

inline LevelConsts make_step_consts(const StepParams& sp, double h) {
    LevelConsts c;
    c.h = h;
    c.sqrt_h = std::sqrt(h);
    c.c_fine = sp.c_eff * h;
    c.a_fine = 2.0 + sp.kappa_eff * h;
    c.ac_fine = c.a_fine * c.c_fine;
    const double h2 = 2.0 * h;
    c.c_coarse = sp.c_eff * h2;
    c.a_coarse = 2.0 + sp.kappa_eff * h2;
    c.ac_coarse = c.a_coarse * c.c_coarse;
    c.inv_g2h = 2.0 / (sp.gamma * sp.gamma * h);
    c.half_kappa = 0.5 * sp.kappa_eff;
    c.c_eff = sp.c_eff;
    c.gamma = sp.gamma;
    return c;
}

}  // namespace bmc::kernels::detail
