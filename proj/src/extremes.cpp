#include "bmc/extremes.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bmc/errors.hpp"

namespace bmc::extremes {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Rhs {
    Complex A;
    double B;
    // Riccati for the log-derivative v = F'/F of Kummer's equation:
    // v' = [A - (B - y) v] / y - v^2
    Complex operator()(double y, Complex v) const {
        return (A - (B - y) * v) / y - v * v;
    }
};

struct State {
    Complex v;  // log-derivative
    Complex I;  // running integral of v dy
};

State rk4(const Rhs& f, double y, State s, double h) {
    // classic RK4 on the augmented system (v' = rhs, I' = v)
    const Complex k1 = f(y, s.v);
    const Complex v2 = s.v + 0.5 * h * k1;
    const Complex k2 = f(y + 0.5 * h, v2);
    const Complex v3 = s.v + 0.5 * h * k2;
    const Complex k3 = f(y + 0.5 * h, v3);
    const Complex v4 = s.v + h * k3;
    const Complex k4 = f(y + h, v4);
    State out;
    out.v = s.v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.I = s.I + (h / 6.0) * (s.v + 2.0 * v2 + 2.0 * v3 + v4);
    return out;
}

// Adaptive RK4 with step doubling; advances state from y to y_target
// (either direction), controlling both v and the integral component. The
// step h persists across calls so segment boundaries keep the cruise step.
void advance(const Rhs& f, double& y, State& s, double y_target, double rel_tol, double& h) {
    if (y == y_target) return;
    const double dir = y_target > y ? 1.0 : -1.0;
    if (h == 0.0 || !std::isfinite(h) || h * dir <= 0.0)
        h = dir * 0.05 * std::sqrt(std::fabs(y) / (1.0 + std::abs(f.A)));
    if (h == 0.0 || !std::isfinite(h)) h = dir * 1e-8 * std::fabs(y_target);
    int guard = 0;
    while (dir * (y_target - y) > 0.0) {
        if (++guard > 2000000)
            throw NonConvergenceError("extremes: sweep step guard tripped");
        if (dir * (y + h - y_target) > 0.0) h = y_target - y;
        const State big = rk4(f, y, s, h);
        State half = rk4(f, y, s, 0.5 * h);
        half = rk4(f, y + 0.5 * h, half, 0.5 * h);
        const double err_v = std::abs(big.v - half.v);
        const double err_i = std::abs(big.I - half.I);
        const double tol = rel_tol * (1.0 + std::abs(half.v)) + 1e-300;
        const double tol_i = rel_tol * (1.0 + std::abs(half.I));
        if (err_v <= 15.0 * tol && err_i <= 15.0 * tol_i) {
            s.v = half.v + (half.v - big.v) / 15.0;
            s.I = half.I + (half.I - big.I) / 15.0;
            y += h;
            const double ratio = std::max(err_v / tol, err_i / tol_i) / 15.0 + 1e-16;
            h *= std::clamp(0.9 * std::pow(ratio, -0.2), 0.3, 2.5);
        } else {
            h *= 0.5;
            if (std::fabs(h) < 1e-13 * std::fabs(y) + 1e-300)
                throw NonConvergenceError("extremes: sweep step underflow");
        }
        if (!std::isfinite(s.v.real()) || !std::isfinite(s.v.imag()))
            throw NonConvergenceError("extremes: sweep diverged");
    }
}

struct SweepPoint {
    Complex logder;
    Complex prefix;  // int_{ys[0]}^{ys[k]} v dy
};

// Series values of 1F1 and its log-derivative at small |A| y.
Complex series_logder(Complex A, double B, double y) {
    Complex sum(1.0, 0.0), dsum(0.0, 0.0);
    Complex term(1.0, 0.0);
    for (int n = 0; n < 80; ++n) {
        const Complex ratio = (A + static_cast<double>(n)) * y /
                              ((B + static_cast<double>(n)) * static_cast<double>(n + 1));
        const Complex next = term * ratio;
        sum += next;
        dsum += next * static_cast<double>(n + 1) / y;
        term = next;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return dsum / sum;
}

// Forward sweep for the dominant (1F1) branch: ys ascending.
std::vector<SweepPoint> sweep_dominant(Complex A, double B, const std::vector<double>& ys,
                                       double tol) {
    const Rhs f{A, B};
    const double y_anchor = std::min(ys.front(), 0.5 / (1.0 + std::abs(A)));
    double y = y_anchor;
    State s{series_logder(A, B, y_anchor), Complex(0.0, 0.0)};
    std::vector<SweepPoint> out(ys.size());
    double h = 0.0;
    for (std::size_t k = 0; k < ys.size(); ++k) {
        advance(f, y, s, ys[k], tol, h);
        out[k] = {s.v, s.I};
    }
    const Complex base = out.front().prefix;
    for (auto& p : out) p.prefix -= base;
    return out;
}

// Backward sweep for the recessive (U) branch: ys ascending, seeded beyond
// the top point with the WKB log-derivative and contracted onto the branch.
std::vector<SweepPoint> sweep_recessive(Complex A, double B, const std::vector<double>& ys,
                                        double tol) {
    const Rhs f{A, B};
    const double y_top = ys.back();
    const double abs_a = std::abs(A);
    const double cos_half = std::cos(0.5 * std::arg(A));
    double y_end = y_top;
    {
        const double sq = std::sqrt(y_top) + 12.5 / (std::sqrt(abs_a) * std::max(cos_half, 0.1));
        y_end = std::max(sq * sq, 60.0 / std::max(abs_a, 1e-8));
        y_end = std::max(y_end, y_top * 1.0001);
    }
    const Complex root = std::sqrt(A / y_end);
    State s{-root + 0.5 - (2.0 * B - 1.0) / (4.0 * y_end), Complex(0.0, 0.0)};
    double y = y_end;
    std::vector<SweepPoint> out(ys.size());
    double h = 0.0;
    for (std::size_t k = ys.size(); k-- > 0;) {
        advance(f, y, s, ys[k], tol, h);
        out[k] = {s.v, s.I};
    }
    const Complex base = out.front().prefix;
    for (auto& p : out) p.prefix -= base;
    return out;
}

const char* target_name(Target t) {
    switch (t) {
        case Target::CirSup: return "cir-sup";
        case Target::CirInf: return "cir-inf";
        case Target::CevSup: return "cev-sup";
        case Target::CevInf: return "cev-inf";
    }
    return "?";
}

}  // namespace

TransformEvaluator::TransformEvaluator(Target target, const ModelSpec& params, Mode mode)
    : target_(target), mode_(mode) {
    const bool sup = target == Target::CirSup || target == Target::CevSup;
    if (target == Target::CirSup || target == Target::CirInf) {
        const auto* cir = std::get_if<CirParams>(&params);
        BMC_REQUIRE(cir != nullptr, ParameterError, "evaluator: cir target needs CirParams");
        cir->validate();
        BMC_REQUIRE(cir->kappa > 0.0, DomainError,
                    "evaluator: hitting-time transforms need kappa > 0");
        BMC_REQUIRE(cir->a > 0.0, DomainError,
                    "evaluator: formula undefined at a = 0 (1/a prefactor, b = 2a/sigma^2 = 0)");
        const double s2 = cir->sigma * cir->sigma;
        b_ = 2.0 * cir->a / s2;
        a_scale_ = 1.0 / cir->kappa;
        a_shift_ = 0.0;
        y_coeff_ = 2.0 * cir->kappa / s2;
        y_power_ = 1.0;
        x0_ = cir->x0;
        y_x0_ = y_coeff_ * cir->x0;
        recessive_ = !sup;  // sup uses 1F1, inf uses U
        ext_factor_ = false;
        env_sigma_ = cir->sigma;
        env_abar_ = cir->a / s2;
        env_kos2_ = cir->kappa / s2;
        c2_scale_ = 2.0 / cir->sigma;
    } else {
        const auto* cev = std::get_if<CevParams>(&params);
        BMC_REQUIRE(cev != nullptr, ParameterError, "evaluator: cev target needs CevParams");
        cev->validate();
        BMC_REQUIRE(cev->mu != 0.0, DomainError,
                    "evaluator: mu = 0 unsupported (hitting transforms need mu != 0)");
        const double beta = cev->beta();
        const double c = cev->c();
        b_ = 1.0 + 1.0 / (2.0 * beta);
        if (cev->mu > 0.0) {
            a_scale_ = 1.0 / (2.0 * cev->mu * beta);
            a_shift_ = 0.0;
            ext_factor_ = false;
        } else {
            a_scale_ = -1.0 / (2.0 * cev->mu * beta);
            a_shift_ = b_;
            ext_factor_ = true;
        }
        y_coeff_ = c;
        y_power_ = -2.0 * beta;
        x0_ = cev->x0;
        y_x0_ = c * std::pow(cev->x0, -2.0 * beta);
        recessive_ = sup;  // sup uses U, inf uses 1F1
        env_sigma_ = cev->sigma;
        env_abar_ = beta;
        env_kos2_ = 0.5 * c;
        c2_scale_ = 1.0 / (beta * cev->sigma);
    }
}

double TransformEvaluator::y_of_z(double z) const {
    return y_coeff_ * (y_power_ == 1.0 ? z : std::pow(z, y_power_));
}

double TransformEvaluator::dy_dz(double z) const {
    if (y_power_ == 1.0) return y_coeff_;
    return y_coeff_ * y_power_ * std::pow(z, y_power_ - 1.0);
}

double TransformEvaluator::decay_constant(double z) const {
    if (target_ == Target::CirSup || target_ == Target::CirInf)
        return c2_scale_ * std::fabs(std::sqrt(z) - std::sqrt(x0_));
    const double beta = env_abar_;
    return c2_scale_ * std::fabs(std::pow(x0_, -beta) - std::pow(z, -beta));
}

double TransformEvaluator::envelope_amplitude(double z) const {
    const double sqrt2 = std::sqrt(2.0);
    if (target_ == Target::CirSup || target_ == Target::CirInf) {
        return (sqrt2 / env_sigma_) * std::pow(x0_, 0.25 - env_abar_) *
               std::pow(z, env_abar_ - 0.75) * std::exp(env_kos2_ * (x0_ - z));
    }
    const double beta = env_abar_;
    return (sqrt2 / env_sigma_) * std::pow(x0_, 0.5 * (beta + 1.0)) *
           std::pow(z, -1.5 * (beta + 1.0)) *
           std::exp(env_kos2_ * (std::pow(x0_, -2.0 * beta) - std::pow(z, -2.0 * beta)));
}

void TransformEvaluator::require_admissible(double z, const QuadratureConfig& cfg) const {
    BMC_REQUIRE(z > 0.0, DomainError, "extremes: level must be > 0");
    const bool sup = target_ == Target::CirSup || target_ == Target::CevSup;
    if (sup) {
        BMC_REQUIRE(z > x0_, DomainError, "extremes: sup target needs z > x0");
    } else {
        BMC_REQUIRE(z < x0_, DomainError, "extremes: inf target needs z < x0");
    }
    if (decay_constant(z) < cfg.min_decay) {
        std::ostringstream os;
        os << "extremes: barrier gap too small for " << target_name(target_)
           << " (decay constant " << decay_constant(z) << " < " << cfg.min_decay << ")";
        throw DomainError(os.str());
    }
}

double TransformEvaluator::density_sign() const {
    // cdf-mode integrands invert to: P[sup > z] (sup targets), P[inf <= z]
    // (cir-inf), P[inf >= z] (cev-inf). The density is the z-derivative of
    // the CDF, so every target except cir-inf carries a minus sign.
    return target_ == Target::CirInf ? 1.0 : -1.0;
}

void TransformEvaluator::eval_both(double u, std::span<const double> z, Complex* cdf_vals,
                                   Complex* dens_vals, double sweep_tol) const {
    const Complex A(a_shift_ + a_scale_, a_scale_ * u);
    std::vector<double> ys(z.size() + 1);
    for (std::size_t j = 0; j < z.size(); ++j) ys[j] = y_of_z(z[j]);
    ys[z.size()] = y_x0_;
    std::vector<double> sorted = ys;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    std::vector<SweepPoint> pts;
    try {
        pts = recessive_ ? sweep_recessive(A, b_, sorted, sweep_tol)
                         : sweep_dominant(A, b_, sorted, sweep_tol);
    } catch (const NonConvergenceError& e) {
        std::ostringstream os;
        os << e.what() << " at u=" << u;
        throw NonConvergenceError(os.str());
    }

    auto index_of = [&](double y) {
        return static_cast<std::size_t>(
            std::lower_bound(sorted.begin(), sorted.end(), y) - sorted.begin());
    };
    const std::size_t ix0 = index_of(y_x0_);
    const Complex one_iu(1.0, u);
    for (std::size_t j = 0; j < z.size(); ++j) {
        const std::size_t iz = index_of(ys[j]);
        // log F(y_x0) - log F(y_z)
        const Complex log_ratio = pts[ix0].prefix - pts[iz].prefix;
        Complex log_s = log_ratio;
        if (ext_factor_) log_s += ys[j] - y_x0_;
        const Complex S = std::exp(log_s) / one_iu;
        if (cdf_vals) cdf_vals[j] = S;
        if (dens_vals) {
            const double ext_term = ext_factor_ ? 1.0 : 0.0;
            dens_vals[j] = density_sign() * S * dy_dz(z[j]) * (ext_term - pts[iz].logder);
        }
    }
}

void TransformEvaluator::eval_batch(double u, std::span<const double> z, Complex* values) const {
    if (mode_ == Mode::CdfIntegrand)
        eval_both(u, z, values, nullptr);
    else
        eval_both(u, z, nullptr, values);
}

Complex TransformEvaluator::operator()(double u, double z) const {
    // negative u via conjugate symmetry of the transform in 1 + iu
    if (u < 0.0) return std::conj((*this)(-u, z));
    Complex value;
    const double zz = z;
    eval_batch(u, std::span<const double>(&zz, 1), &value);
    return value;
}

TransformEvaluator make_evaluator(Target target, const ModelSpec& params, Mode mode) {
    return TransformEvaluator(target, params, mode);
}

double TransformEvaluator::laplace_value(double s, double z) const {
    const Complex A(a_shift_ + a_scale_ * s, 0.0);
    const double yz = y_of_z(z);
    std::vector<double> sorted{std::min(yz, y_x0_), std::max(yz, y_x0_)};
    if (sorted[0] == sorted[1]) sorted.pop_back();
    const auto pts = recessive_ ? sweep_recessive(A, b_, sorted, 1e-12)
                                : sweep_dominant(A, b_, sorted, 1e-12);
    const std::size_t ix0 = (sorted.size() == 2 && y_x0_ == sorted[1]) ? 1 : 0;
    const std::size_t iz = sorted.size() == 2 ? 1 - ix0 : 0;
    Complex log_v = pts[ix0].prefix - pts[iz].prefix;
    if (ext_factor_) log_v += yz - y_x0_;
    return std::exp(log_v).real();
}

namespace {

// Batched integrand: rows = quadrature outputs (cdf and/or density per z).
// One sweep per node serves every z and both modes; the sweep tolerance is
// relaxed as the envelope decays (absolute contributions shrink with it).
struct BromwichBatch {
    const TransformEvaluator* ev = nullptr;
    bool want_cdf = true;
    bool want_dens = false;
    std::span<const double> z;
    double t = 0.0;
    double c2_min = 1.0;

    std::size_t size() const { return z.size() * ((want_cdf ? 1 : 0) + (want_dens ? 1 : 0)); }

    void operator()(double u, double* out) const {
        const Complex rot = std::exp(Complex(0.0, u * t));
        std::vector<Complex> cvals(want_cdf ? z.size() : 0);
        std::vector<Complex> dvals(want_dens ? z.size() : 0);
        const double decayed = std::exp(-c2_min * std::sqrt(std::max(u, 0.0)));
        const double sweep_tol = std::clamp(1e-12 / std::max(decayed, 1e-4), 1e-12, 3e-9);
        ev->eval_both(u, z, want_cdf ? cvals.data() : nullptr,
                      want_dens ? dvals.data() : nullptr, sweep_tol);
        std::size_t off = 0;
        if (want_cdf) {
            for (std::size_t j = 0; j < z.size(); ++j) out[off + j] = (rot * cvals[j]).real();
            off += z.size();
        }
        if (want_dens)
            for (std::size_t j = 0; j < z.size(); ++j) out[off + j] = (rot * dvals[j]).real();
    }
};

struct PanelWork {
    double a, b;
    std::vector<double> fa, fm, fb;
    double tol;
    int depth;
};

// Adaptive interval-halving Simpson, vector-valued with a shared node set:
// a panel is split until every output meets its share of the tolerance.
std::vector<double> adaptive_simpson(const BromwichBatch& f, double u_max, double tol_total,
                                     double t) {
    const std::size_t m = f.size();
    std::vector<double> acc(m, 0.0);
    const double w0 = std::min({0.5 * kPi / std::max(t, 1e-6), u_max / 16.0, 8.0});
    std::vector<PanelWork> stack;
    std::vector<double> edges;
    for (double x = 0.0; x < u_max; x += w0) edges.push_back(x);
    edges.push_back(u_max);

    auto eval = [&](double u) {
        std::vector<double> vals(m);
        f(u, vals.data());
        return vals;
    };

    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        PanelWork w;
        w.a = edges[p];
        w.b = edges[p + 1];
        w.fa = eval(w.a);
        w.fm = eval(0.5 * (w.a + w.b));
        w.fb = eval(w.b);
        w.tol = tol_total * (w.b - w.a) / u_max;
        w.depth = 0;
        stack.push_back(std::move(w));
    }

    while (!stack.empty()) {
        PanelWork w = std::move(stack.back());
        stack.pop_back();
        const double mmid = 0.5 * (w.a + w.b);
        const auto fl = eval(0.5 * (w.a + mmid));
        const auto fr = eval(0.5 * (mmid + w.b));
        const double h6 = (w.b - w.a) / 6.0;
        double worst = 0.0;
        std::vector<double> s2(m);
        for (std::size_t i = 0; i < m; ++i) {
            const double s1 = h6 * (w.fa[i] + 4.0 * w.fm[i] + w.fb[i]);
            const double left = 0.5 * h6 * (w.fa[i] + 4.0 * fl[i] + w.fm[i]);
            const double right = 0.5 * h6 * (w.fm[i] + 4.0 * fr[i] + w.fb[i]);
            s2[i] = left + right;
            worst = std::max(worst, std::fabs(s2[i] - s1));
        }
        if (worst <= 15.0 * w.tol || w.depth >= 30) {
            for (std::size_t i = 0; i < m; ++i) acc[i] += s2[i];
        } else {
            PanelWork left{w.a, mmid, std::move(w.fa), fl, w.fm, 0.5 * w.tol, w.depth + 1};
            PanelWork right{mmid, w.b, std::move(w.fm), fr, std::move(w.fb), 0.5 * w.tol,
                            w.depth + 1};
            stack.push_back(std::move(left));
            stack.push_back(std::move(right));
        }
    }
    return acc;
}

struct UMaxInfo {
    double u_max;
    double truncation_bound;
};

UMaxInfo choose_u_max(const TransformEvaluator& ev, std::span<const double> z, double t,
                      const QuadratureConfig& cfg) {
    double c2 = 1e300, amp = 0.0;
    for (double zz : z) {
        c2 = std::min(c2, ev.decay_constant(zz));
        amp = std::max(amp, ev.envelope_amplitude(zz));
    }
    double x = 2.0;
    for (int it = 0; it < 4; ++it)
        x = std::max(2.0, std::log(10.0 * amp * std::max(x, 1.0) / cfg.abs_tol) / c2);
    double u_max = x * x;
    const double cap = cfg.u_max_cap;
    if (u_max > cap) u_max = cap;
    const double bound = std::exp(t) / kPi * amp * (2.0 / c2) * std::exp(-c2 * std::sqrt(u_max));
    return {u_max, bound};
}

}  // namespace

double invert_bromwich(const TransformEvaluator& ev, double t, double z,
                       const QuadratureConfig& cfg) {
    BMC_REQUIRE(t > 0.0, ParameterError, "invert_bromwich: t must be > 0");
    ev.require_admissible(z, cfg);
    const double zz = z;
    const std::span<const double> zs(&zz, 1);
    const auto info = choose_u_max(ev, zs, t, cfg);
    BromwichBatch batch;
    batch.ev = &ev;
    batch.want_cdf = ev.mode() == Mode::CdfIntegrand;
    batch.want_dens = !batch.want_cdf;
    batch.z = zs;
    batch.t = t;
    batch.c2_min = ev.decay_constant(z);
    const double inner_tol = 0.5 * cfg.abs_tol * kPi / std::exp(t);
    const auto acc = adaptive_simpson(batch, info.u_max, inner_tol, t);
    return std::exp(t) / kPi * acc[0];
}

namespace {

double assemble_cdf(Target target, double inverted) {
    switch (target) {
        case Target::CirSup: return 1.0 - inverted;   // tail P[sup > z]
        case Target::CirInf: return inverted;         // already P[inf <= z]
        case Target::CevSup: return 1.0 - inverted;   // tail
        case Target::CevInf: return 1.0 - inverted;   // survival P[inf >= z]
    }
    return 0.0;
}

double density_clip(double v, const QuadratureConfig& cfg) {
    if (v < 0.0 && v > -cfg.abs_tol) return 0.0;
    return v;
}

}  // namespace

double extreme_cdf(Target target, double z, double t, const ModelSpec& params,
                   const QuadratureConfig& cfg) {
    TransformEvaluator ev(target, params, Mode::CdfIntegrand);
    return assemble_cdf(target, invert_bromwich(ev, t, z, cfg));
}

double cir_sup_density(double z, double t, const CirParams& params, const QuadratureConfig& cfg) {
    TransformEvaluator ev(Target::CirSup, ModelSpec(params), Mode::DensityIntegrand);
    return density_clip(invert_bromwich(ev, t, z, cfg), cfg);
}

double cir_inf_density(double z, double t, const CirParams& params, const QuadratureConfig& cfg) {
    TransformEvaluator ev(Target::CirInf, ModelSpec(params), Mode::DensityIntegrand);
    return density_clip(invert_bromwich(ev, t, z, cfg), cfg);
}

double cev_sup_density(double z, double t, const CevParams& params, const QuadratureConfig& cfg) {
    TransformEvaluator ev(Target::CevSup, ModelSpec(params), Mode::DensityIntegrand);
    return density_clip(invert_bromwich(ev, t, z, cfg), cfg);
}

double cev_inf_density(double z, double t, const CevParams& params, const QuadratureConfig& cfg) {
    TransformEvaluator ev(Target::CevInf, ModelSpec(params), Mode::DensityIntegrand);
    return density_clip(invert_bromwich(ev, t, z, cfg), cfg);
}

double hitting_laplace(Target target, double s, double z, const ModelSpec& params) {
    BMC_REQUIRE(s > 0.0, ParameterError, "hitting_laplace: s must be > 0");
    TransformEvaluator ev(target, params, Mode::CdfIntegrand);
    {
        QuadratureConfig relaxed;
        relaxed.min_decay = 0.0;  // no oscillatory truncation at real s
        ev.require_admissible(z, relaxed);
    }
    return ev.laplace_value(s, z);
}

ExtremeCurve extreme_curve(Target target, const ModelSpec& params, double t,
                           std::span<const double> z, const QuadratureConfig& cfg,
                           bool want_density) {
    BMC_REQUIRE(!z.empty(), ParameterError, "extreme_curve: empty grid");
    TransformEvaluator cdf_ev(target, params, Mode::CdfIntegrand);
    for (double zz : z) cdf_ev.require_admissible(zz, cfg);
    const auto info = choose_u_max(cdf_ev, z, t, cfg);
    BromwichBatch batch;
    batch.ev = &cdf_ev;
    batch.want_cdf = true;
    batch.want_dens = want_density;
    batch.z = z;
    batch.t = t;
    double c2 = 1e300;
    for (double zz : z) c2 = std::min(c2, cdf_ev.decay_constant(zz));
    batch.c2_min = c2;
    const double inner_tol = 0.5 * cfg.abs_tol * kPi / std::exp(t);
    const auto acc = adaptive_simpson(batch, info.u_max, inner_tol, t);
    ExtremeCurve out;
    out.u_max = info.u_max;
    out.truncation_bound = info.truncation_bound;
    const double scale = std::exp(t) / kPi;
    out.cdf.resize(z.size());
    for (std::size_t j = 0; j < z.size(); ++j)
        out.cdf[j] = assemble_cdf(target, scale * acc[j]);
    if (want_density) {
        out.density.resize(z.size());
        for (std::size_t j = 0; j < z.size(); ++j)
            out.density[j] = density_clip(scale * acc[z.size() + j], cfg);
    }
    return out;
}

}  // namespace bmc::extremes
