#include "bmc/specfun.hpp"

#include <cmath>

namespace bmc::specfun {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

// Lanczos g = 7, n = 9 (Godfrey coefficients).
constexpr double kLanczos[9] = {
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
};

bool is_nonpositive_integer(Complex z) {
    return z.imag() == 0.0 && z.real() <= 0.0 && z.real() == std::floor(z.real());
}

Complex log_gamma_core(Complex z) {
    // Re z >= 0.5
    const Complex x = z - 1.0;
    Complex acc(kLanczos[0], 0.0);
    for (int k = 1; k < 9; ++k) acc += kLanczos[k] / (x + static_cast<double>(k));
    const Complex t = x + 7.5;
    return kLogSqrt2Pi + (x + 0.5) * std::log(t) - t + std::log(acc);
}

}  // namespace

Complex log_gamma(Complex z) {
    if (is_nonpositive_integer(z))
        throw PoleError("log_gamma: pole at nonpositive integer");
    if (z.real() >= 0.5) return log_gamma_core(z);
    // Reflection: Gamma(z) Gamma(1-z) = pi / sin(pi z).
    const Complex s = std::sin(kPi * z);
    return std::log(kPi) - std::log(s) - log_gamma_core(1.0 - z);
}

Complex kummer_m(Complex a, Complex b, Complex z, const SeriesControl& ctl) {
    BMC_REQUIRE(!is_nonpositive_integer(b), PoleError,
                "kummer_m: b must not be a nonpositive integer");
    BMC_REQUIRE(ctl.rel_tol > 0.0, ParameterError, "kummer_m: rel_tol must be > 0");
    if (z.real() < 0.0) return std::exp(z) * kummer_m(b - a, b, -z, ctl);
    Complex sum(1.0, 0.0);
    Complex term(1.0, 0.0);
    for (int n = 0; n < ctl.max_terms; ++n) {
        const Complex ratio = (a + static_cast<double>(n)) * z /
                              ((b + static_cast<double>(n)) * static_cast<double>(n + 1));
        term *= ratio;
        sum += term;
        if (std::abs(term) <= ctl.rel_tol * std::abs(sum) && std::abs(ratio) <= 1.0) return sum;
        if (!std::isfinite(sum.real()) || !std::isfinite(sum.imag()))
            throw NonConvergenceError("kummer_m: series overflow");
    }
    throw NonConvergenceError("kummer_m: series did not converge within max_terms");
}

Complex tricomi_u(Complex a, Complex b, Complex z, const SeriesControl& ctl) {
    BMC_REQUIRE(z != Complex(0.0, 0.0), ParameterError, "tricomi_u: z must be nonzero");
    if (b.imag() == 0.0) {
        const double rounded = std::round(b.real());
        const double dist = std::fabs(b.real() - rounded);
        if (dist < 1e-6) {
            const double dir = b.real() >= rounded ? 1.0 : -1.0;
            b = Complex(rounded + dir * 1e-6, 0.0);
        }
    }
    // U = G1 * M(a,b,z) + G2 * z^{1-b} * M(1+a-b, 2-b, z), with the 1/Gamma
    // factors vanishing at their poles.
    Complex term1(0.0, 0.0);
    if (!is_nonpositive_integer(1.0 + a - b))
        term1 = std::exp(log_gamma(1.0 - b) - log_gamma(1.0 + a - b)) * kummer_m(a, b, z, ctl);
    Complex term2(0.0, 0.0);
    if (!is_nonpositive_integer(a)) {
        const Complex zp = std::exp((1.0 - b) * std::log(z));
        term2 = std::exp(log_gamma(b - 1.0) - log_gamma(a)) * zp *
                kummer_m(1.0 + a - b, 2.0 - b, z, ctl);
    }
    return term1 + term2;
}

}  // namespace bmc::specfun
