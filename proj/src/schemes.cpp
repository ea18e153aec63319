#include "bmc/schemes.hpp"

#include <cmath>
#include <sstream>

#include "bmc/errors.hpp"

namespace bmc {

kernels::StepParams step_params(const LampertiDynamics& dyn) {
    return {dyn.kappa_eff, dyn.c_eff, dyn.gamma};
}

BrownianSkeleton make_skeleton(const SeedTag& tag, int level, double maturity) {
    BMC_REQUIRE(level >= 0 && level <= 30, ParameterError, "skeleton: level out of range");
    BMC_REQUIRE(maturity > 0.0, ParameterError, "skeleton: maturity must be > 0");
    BrownianSkeleton sk;
    sk.level = level;
    sk.maturity = maturity;
    sk.seed_tag = tag;
    const std::size_t n = std::size_t{1} << level;
    sk.fine_increments.resize(n);
    const double sqrt_h = std::sqrt(sk.h());
    kernels::StreamKey key{tag.seed, tag.stream};
    kernels::scalar_kernels().fill_gaussians(key, tag.sample_index, 0, n, sqrt_h,
                                             sk.fine_increments.data());
    return sk;
}

namespace {

void check_dt(const LampertiDynamics& dyn, double dt, double drift_prime_bound) {
    BMC_REQUIRE(dt > 0.0, StepSizeError, "implicit_step: dt must be > 0");
    switch (dyn.kind) {
        case ModelKind::Cir:
        case ModelKind::Cev:
            // 2 + kappa_eff dt > 0 keeps the quadratic's leading coefficient positive.
            BMC_REQUIRE(2.0 + dyn.kappa_eff * dt > 0.0, StepSizeError,
                        "implicit_step: dt inadmissible, 2 + kappa_eff*dt <= 0");
            break;
        case ModelKind::Generic:
            BMC_REQUIRE(drift_prime_bound > 0.0, StepSizeError,
                        "implicit_step: generic model needs a drift_prime_bound");
            BMC_REQUIRE(dt < 1.0 / (2.0 * drift_prime_bound), StepSizeError,
                        "implicit_step: dt inadmissible, dt >= 1/(2 L'_bound)");
            break;
    }
}

double closed_form_step(const LampertiDynamics& dyn, double y_prev, double dt, double dw) {
    const double a = 2.0 + dyn.kappa_eff * dt;
    const double c = dyn.c_eff * dt;
    const double b = y_prev + dyn.gamma * dw;
    const double disc = std::fma(b, b, a * c);
    if (disc < 0.0) {
        std::ostringstream os;
        os << "implicit_step: negative discriminant (positivity loss), y_prev=" << y_prev
           << " dw=" << dw << " dt=" << dt;
        throw PositivityLossError(os.str());
    }
    const double sq = std::sqrt(disc);
    const double y = b >= 0.0 ? (b + sq) / a : c / (sq - b);
    if (!(y > 0.0)) {
        std::ostringstream os;
        os << "implicit_step: nonpositive root (positivity loss), y_prev=" << y_prev
           << " dw=" << dw << " dt=" << dt;
        throw PositivityLossError(os.str());
    }
    return y;
}

// Safeguarded Newton with a bisection bracket on
// R(y) = y - y_prev - L(y) dt - gamma dw.
double newton_step(const LampertiDynamics& dyn, double y_prev, double dt, double dw) {
    const double target = y_prev + dyn.gamma * dw;
    auto residual = [&](double y) { return y - target - dyn.drift(y) * dt; };
    double lo = 1e-300;
    double hi = std::fmax(2.0 * std::fabs(target) + 1.0, 1.0);
    for (int i = 0; i < 1100 && residual(hi) < 0.0; ++i) hi *= 2.0;
    BMC_REQUIRE(residual(hi) >= 0.0, NonConvergenceError, "implicit_step: no upper bracket");
    double y = std::fmin(std::fmax(y_prev, lo), hi);
    for (int it = 0; it < 100; ++it) {
        const double r = residual(y);
        if (r > 0.0)
            hi = y;
        else
            lo = y;
        const double dr = 1.0 - dyn.drift_prime(y) * dt;
        double next = y - r / dr;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::fabs(next - y) <= 1e-12 * std::fmax(1.0, std::fabs(y))) return next;
        y = next;
    }
    throw NonConvergenceError("implicit_step: Newton did not converge in 100 iterations");
}

}  // namespace

double implicit_step(const LampertiDynamics& dyn, double y_prev, double dt, double dw,
                     double drift_prime_bound) {
    BMC_REQUIRE(y_prev > 0.0, ParameterError, "implicit_step: y_prev must be > 0");
    check_dt(dyn, dt, drift_prime_bound);
    if (dyn.kind == ModelKind::Generic) return newton_step(dyn, y_prev, dt, dw);
    return closed_form_step(dyn, y_prev, dt, dw);
}

std::vector<double> simulate_fine_path(const LampertiDynamics& dyn, double y0,
                                       const BrownianSkeleton& skeleton) {
    BMC_REQUIRE(y0 > 0.0, ParameterError, "simulate_fine_path: y0 must be > 0");
    const std::size_t n = skeleton.fine_increments.size();
    std::vector<double> path(n + 1);
    path[0] = y0;
    const double h = skeleton.h();
    for (std::size_t i = 0; i < n; ++i) {
        try {
            path[i + 1] = implicit_step(dyn, path[i], h, skeleton.fine_increments[i]);
        } catch (const PositivityLossError& e) {
            std::ostringstream os;
            os << e.what() << " at index " << i;
            throw PositivityLossError(os.str());
        }
    }
    return path;
}

std::vector<double> coarse_increments(const BrownianSkeleton& skeleton) {
    BMC_REQUIRE(skeleton.level >= 1, ParameterError, "coarse_increments: level must be >= 1");
    const std::size_t n = skeleton.fine_increments.size() / 2;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = skeleton.fine_increments[2 * i] + skeleton.fine_increments[2 * i + 1];
    return out;
}

double interpolate_midpoint(const LampertiDynamics& dyn, double y_i, double y_ip1,
                            double w_half, double h_fine) {
    BMC_REQUIRE(y_i > 0.0 && y_ip1 > 0.0, ParameterError,
                "interpolate_midpoint: endpoints must be > 0");
    return y_i + dyn.drift(y_ip1) * h_fine + dyn.gamma * w_half;
}

CoupledLevelSample simulate_coupled(const LampertiDynamics& dyn, double y0,
                                    const BrownianSkeleton& skeleton) {
    BMC_REQUIRE(skeleton.level >= 1, ParameterError, "simulate_coupled: level must be >= 1");
    CoupledLevelSample out;
    out.fine_values = simulate_fine_path(dyn, y0, skeleton);

    BrownianSkeleton coarse;
    coarse.level = skeleton.level - 1;
    coarse.maturity = skeleton.maturity;
    coarse.seed_tag = skeleton.seed_tag;
    coarse.fine_increments = coarse_increments(skeleton);
    out.coarse_values = simulate_fine_path(dyn, y0, coarse);

    const std::size_t nc = coarse.fine_increments.size();
    const double h_fine = skeleton.h();
    out.coarse_midpoints.resize(nc);
    for (std::size_t i = 0; i < nc; ++i)
        out.coarse_midpoints[i] =
            interpolate_midpoint(dyn, out.coarse_values[i], out.coarse_values[i + 1],
                                 skeleton.fine_increments[2 * i], h_fine);

    out.terminal_fine = out.fine_values.back();
    out.terminal_coarse = out.coarse_values.back();
    return out;
}

}  // namespace bmc
