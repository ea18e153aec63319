#include <doctest.h>

#include <cmath>
#include <random>

#include "bmc/schemes.hpp"

using namespace bmc;

namespace {

// Test-local oracle: solve y = y_prev + L(y) dt + g dw by bisection on the
// residual, independent of the closed-form root path.
double bisect_step(const LampertiDynamics& dyn, double y_prev, double dt, double dw) {
    auto residual = [&](double y) { return y - y_prev - dyn.drift(y) * dt - dyn.gamma * dw; };
    double lo = 1e-12, hi = 1.0;
    while (residual(hi) < 0.0) hi *= 2.0;
    while (residual(lo) > 0.0) lo *= 0.5;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (residual(mid) > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("implicit step closed forms") {
    {
        // zero drift: pure translation
        auto dyn = build_cir_dynamics({0.25, 0.0, 1.0, 1.0});
        const double y = implicit_step(dyn, 1.0, 0.01, 1.0);  // gamma=0.5 -> gdw=0.5
        CHECK(y == doctest::Approx(1.5).epsilon(1e-14));
    }
    {
        // CIR kappa=0, a-gamma^2=0.5, dt=0.01, y_prev+gdw=1: root of 2y^2-2y-0.005
        auto dyn = build_cir_dynamics({0.5 + 0.25, 0.0, 1.0, 1.0});
        const double y = implicit_step(dyn, 1.0, 0.01, 0.0);
        CHECK(y == doctest::Approx(1.0024937810560445).epsilon(1e-12));
        CHECK(y == doctest::Approx(bisect_step(dyn, 1.0, 0.01, 0.0)).epsilon(1e-11));
    }
    {
        // CEV mu=0, alpha=1.2, sigma=0.2, y_prev+gdw=0.4: root of 2y^2-0.8y-9.6e-5
        auto dyn = build_cev_dynamics({0.0, 0.2, 1.2, 100.0});
        const double y = implicit_step(dyn, 0.4, 0.01, 0.0);
        CHECK(y == doctest::Approx(0.4001199640215897).epsilon(1e-12));
        CHECK(y == doctest::Approx(bisect_step(dyn, 0.4, 0.01, 0.0)).epsilon(1e-11));
    }
}

TEST_CASE("implicit step admissibility and positivity errors") {
    auto cir = build_cir_dynamics({0.0, -0.1, 2.5, 100.0});
    CHECK_THROWS_AS(implicit_step(cir, 1.0, 25.0, 0.0), StepSizeError);  // 2 - 2.5 < 0
    // a < gamma^2: adverse draw kills the discriminant
    CHECK_THROWS_AS(implicit_step(cir, 0.1, 0.5, -0.2), PositivityLossError);
    CHECK_THROWS_AS(implicit_step(cir, -1.0, 0.5, 0.0), ParameterError);
}

TEST_CASE("implicit step residual property") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ua(0.3, 3.0), uk(-0.5, 2.0), us(0.2, 1.0);
    std::uniform_real_distribution<double> uy(0.05, 20.0), un(-3.0, 3.0);
    for (int i = 0; i < 500; ++i) {
        const double sigma = us(rng);
        // keep a >= sigma^2/4 so the step is defined for all draws
        auto dyn = build_cir_dynamics({ua(rng) + 0.25 * sigma * sigma, uk(rng), sigma, 1.0});
        const double y_prev = uy(rng), dt = 0.01, dw = un(rng) * std::sqrt(dt);
        const double y = implicit_step(dyn, y_prev, dt, dw);
        const double res = y - y_prev - dyn.drift(y) * dt - dyn.gamma * dw;
        CHECK(std::fabs(res) <= 1e-10 * (1.0 + y));
    }
    std::uniform_real_distribution<double> umu(-1.0, 1.0), ual(1.05, 1.5);
    for (int i = 0; i < 500; ++i) {
        auto dyn = build_cev_dynamics({umu(rng), us(rng), ual(rng), 100.0});
        const double y_prev = uy(rng), dt = 0.01, dw = un(rng) * std::sqrt(dt);
        const double y = implicit_step(dyn, y_prev, dt, dw);
        const double res = y - y_prev - dyn.drift(y) * dt - dyn.gamma * dw;
        CHECK(std::fabs(res) <= 1e-10 * (1.0 + y));
    }
}

TEST_CASE("generic newton step agrees with closed form") {
    auto cir = build_cir_dynamics({1.0, 0.5, 0.4, 1.0});
    LampertiDynamics gen;
    gen.kind = ModelKind::Generic;
    gen.gamma = cir.gamma;
    gen.generic_drift = [cir](double y) { return cir.drift(y); };
    gen.generic_drift_prime = [cir](double y) { return cir.drift_prime(y); };
    gen.generic_transform = [](double x) { return std::sqrt(x); };
    gen.generic_inverse = [](double y) { return y * y; };
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> uy(0.3, 5.0), un(-2.0, 2.0);
    for (int i = 0; i < 200; ++i) {
        const double y_prev = uy(rng), dt = 0.01, dw = un(rng) * 0.1;
        const double bound = 40.0;  // valid on the visited region; dt < 1/(2*40)
        const double a = implicit_step(cir, y_prev, dt, dw);
        const double b = implicit_step(gen, y_prev, dt, dw, bound);
        CHECK(a == doctest::Approx(b).epsilon(1e-10));
    }
}

TEST_CASE("skeleton pairwise sums and determinism") {
    auto sk = make_skeleton({123, 5, 0}, 6, 0.5);
    CHECK(sk.fine_increments.size() == 64);
    auto coarse = coarse_increments(sk);
    CHECK(coarse.size() == 32);
    for (std::size_t i = 0; i < coarse.size(); ++i)
        CHECK(coarse[i] == sk.fine_increments[2 * i] + sk.fine_increments[2 * i + 1]);

    auto sk2 = make_skeleton({123, 5, 0}, 6, 0.5);
    for (std::size_t i = 0; i < sk.fine_increments.size(); ++i)
        CHECK(sk.fine_increments[i] == sk2.fine_increments[i]);

    auto sk3 = make_skeleton({124, 5, 0}, 6, 0.5);
    bool differs = false;
    for (std::size_t i = 0; i < sk.fine_increments.size(); ++i)
        if (sk3.fine_increments[i] != sk.fine_increments[i]) differs = true;
    CHECK(differs);

    BrownianSkeleton level0;
    level0.level = 0;
    CHECK_THROWS_AS(coarse_increments(level0), ParameterError);
}

TEST_CASE("coarse increment example") {
    BrownianSkeleton sk;
    sk.level = 2;
    sk.maturity = 1.0;
    sk.fine_increments = {0.1, -0.1, 0.2, 0.3};
    auto c = coarse_increments(sk);
    CHECK(c[0] == 0.0);
    CHECK(c[1] == 0.5);
}

TEST_CASE("midpoint interpolation") {
    auto dyn = build_cir_dynamics({1.0, 0.5, 1.0, 4.0});
    // L(2.1) = 0.75/4.2 - 0.525 = -0.3464286; mid = 2 - 0.0866071 + 0.05
    const double mid = interpolate_midpoint(dyn, 2.0, 2.1, 0.1, 0.25);
    CHECK(mid == doctest::Approx(1.9633928571428571).epsilon(1e-12));
    // w_half = 0 drops the noise term
    CHECK(interpolate_midpoint(dyn, 2.0, 2.1, 0.0, 0.25) ==
          doctest::Approx(2.0 + dyn.drift(2.1) * 0.25).epsilon(1e-14));
    // zero drift: translation only
    auto flat = build_cir_dynamics({0.25, 0.0, 1.0, 1.0});
    CHECK(interpolate_midpoint(flat, 2.0, 2.1, 0.1, 0.25) ==
          doctest::Approx(2.0 + 0.5 * 0.1).epsilon(1e-14));
}

TEST_CASE("fine path reductions") {
    // zero-drift CIR: path is y0 + gamma * cumulative increments
    auto flat = build_cir_dynamics({0.25, 0.0, 1.0, 1.0});
    auto sk = make_skeleton({77, 0, 0}, 5, 1.0);
    auto path = simulate_fine_path(flat, 5.0, sk);
    double w = 0.0;
    CHECK(path[0] == 5.0);
    for (std::size_t i = 0; i < sk.fine_increments.size(); ++i) {
        w += sk.fine_increments[i];
        CHECK(path[i + 1] == doctest::Approx(5.0 + 0.5 * w).epsilon(1e-12));
    }

    // all-zero increments: deterministic orbit, monotone toward the fixed point
    auto dyn = build_cir_dynamics({1.0, 0.5, 0.4, 1.0});
    BrownianSkeleton zeros;
    zeros.level = 4;
    zeros.maturity = 1.0;
    zeros.fine_increments.assign(16, 0.0);
    const double y_fix = std::sqrt(dyn.c_eff / dyn.kappa_eff);
    auto orbit_up = simulate_fine_path(dyn, 0.5 * y_fix, zeros);
    auto orbit_down = simulate_fine_path(dyn, 2.0 * y_fix, zeros);
    for (std::size_t i = 0; i + 1 < orbit_up.size(); ++i) {
        CHECK(orbit_up[i] < orbit_up[i + 1]);
        CHECK(orbit_up[i + 1] < y_fix);
        CHECK(orbit_down[i] > orbit_down[i + 1]);
        CHECK(orbit_down[i + 1] > y_fix);
    }
}

TEST_CASE("coupled sample invariants") {
    auto dyn = build_cir_dynamics({1.0, 0.5, 0.4, 1.0});
    auto sk = make_skeleton({2024, 9, 1}, 5, 1.0);
    auto cs = simulate_coupled(dyn, 1.0, sk);
    CHECK(cs.fine_values.size() == 33);
    CHECK(cs.coarse_values.size() == 17);
    CHECK(cs.coarse_midpoints.size() == 16);
    CHECK(cs.terminal_fine == cs.fine_values.back());
    CHECK(cs.terminal_coarse == cs.coarse_values.back());
    for (double v : cs.fine_values) CHECK(v > 0.0);
    for (double v : cs.coarse_values) CHECK(v > 0.0);
    // Interpolation identity at every midpoint.
    const double h = sk.h();
    for (std::size_t i = 0; i < cs.coarse_midpoints.size(); ++i) {
        const double expect = cs.coarse_values[i] + dyn.drift(cs.coarse_values[i + 1]) * h +
                              dyn.gamma * sk.fine_increments[2 * i];
        CHECK(std::fabs(cs.coarse_midpoints[i] - expect) <= 1e-12 * (1.0 + std::fabs(expect)));
    }

    // level-1 zero drift: coarse terminal equals fine terminal
    auto flat = build_cir_dynamics({0.25, 0.0, 1.0, 1.0});
    auto sk1 = make_skeleton({5, 5, 5}, 1, 1.0);
    auto cs1 = simulate_coupled(flat, 3.0, sk1);
    CHECK(cs1.terminal_fine == doctest::Approx(cs1.terminal_coarse).epsilon(1e-13));
}

TEST_CASE("coupled terminals agree in mean as the level grows") {
    auto dyn = build_cev_dynamics({0.1, 0.2, 1.2, 100.0});
    const double y0 = dyn.y0_transformed();
    for (int level : {3, 6}) {
        double s = 0.0, s2 = 0.0;
        const int n = 20000;
        for (int k = 0; k < n; ++k) {
            auto sk = make_skeleton({31415, static_cast<std::uint64_t>(k), 2}, level, 1.0);
            auto cs = simulate_coupled(dyn, y0, sk);
            const double d = cs.terminal_fine - cs.terminal_coarse;
            s += d;
            s2 += d * d;
        }
        const double mean = s / n;
        const double var = (s2 - n * mean * mean) / (n - 1.0);
        const double se = std::sqrt(var / n);
        // weak bias of the coupled pair is O(h); allow 3 SE plus that scale
        CHECK(std::fabs(mean) <= 3.0 * se + 0.05 * std::ldexp(1.0, -level));
    }
}
