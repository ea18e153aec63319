#pragma once

#include <complex>

#include "bmc/errors.hpp"

namespace bmc::specfun {

using Complex = std::complex<double>;

struct SeriesControl {
    double rel_tol = 1e-14;
    int max_terms = 100000;
};

// Principal-branch log-gamma (Lanczos with reflection for Re z < 0.5).
// The imaginary part is reported modulo 2*pi of the principal value chain;
// exp(log_gamma(z)) recovers Gamma(z).
Complex log_gamma(Complex z);

// Kummer confluent hypergeometric 1F1(a; b; z) by the truncated power
// series; arguments with Re z < 0 are routed through the Kummer
// transformation e^z 1F1(b-a; b; -z) for stability.
Complex kummer_m(Complex a, Complex b, Complex z, const SeriesControl& ctl = {});

// Tricomi U(a, b, z) via the connection formula on principal branches.
// Integer (or near-integer) b is nudged by 1e-6 toward the regular case.
Complex tricomi_u(Complex a, Complex b, Complex z, const SeriesControl& ctl = {});

}  // namespace bmc::specfun
