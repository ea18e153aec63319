#pragma once

#include <complex>
#include <span>
#include <vector>

#include "bmc/models.hpp"

namespace bmc::extremes {

using Complex = std::complex<double>;

enum class Target { CirSup, CirInf, CevSup, CevInf };
enum class Mode { CdfIntegrand, DensityIntegrand };

struct QuadratureConfig {
    double abs_tol = 1e-8;
    double u_max_cap = 1e6;
    // Smallest admissible decay constant c2 of the integrand envelope
    // const * u^{-1/2} exp(-c2 sqrt(u)); below this the evaluation is refused.
    double min_decay = 0.05;
};

// Bromwich integrand of one running-extreme transform, evaluated through
// log-derivative sweeps of Kummer's equation (stable for arbitrarily large
// imaginary parameters, unlike the naive series/connection route).
class TransformEvaluator {
  public:
    TransformEvaluator(Target target, const ModelSpec& params, Mode mode);

    Target target() const { return target_; }
    Mode mode() const { return mode_; }

    // Single-point evaluation (tests, invariants). Batched evaluation goes
    // through eval_batch which shares one ODE sweep across all z.
    Complex operator()(double u, double z) const;

    // values[j] = integrand(u, z[j]) for the evaluator's mode.
    void eval_batch(double u, std::span<const double> z, Complex* values) const;

    // One ODE sweep serving both modes; either output may be null.
    // sweep_tol relaxes the sweep accuracy once the integrand envelope has
    // decayed (the absolute contribution shrinks with it).
    void eval_both(double u, std::span<const double> z, Complex* cdf_vals, Complex* dens_vals,
                   double sweep_tol = 1e-12) const;

    // Envelope data at level z: decay constant c2 and amplitude prefactor.
    double decay_constant(double z) const;
    double envelope_amplitude(double z) const;
    void require_admissible(double z, const QuadratureConfig& cfg) const;

    // sign carried by the density mode so the inverted integral is >= 0
    double density_sign() const;

    // Transform ratio at a real Laplace argument: E[e^{-s tau_z}].
    double laplace_value(double s, double z) const;

  private:
    Target target_;
    Mode mode_;
    // model constants
    double b_ = 0.0;          // Kummer b parameter (real)
    double a_scale_ = 0.0;    // A(u) = a_shift_ + (1 + iu) * a_scale_
    double a_shift_ = 0.0;
    double y_x0_ = 0.0;
    double x0_ = 0.0;
    bool recessive_ = false;  // U-branch (backward sweep) vs 1F1-branch
    bool ext_factor_ = false; // CEV mu<0 external exp(y_z - y_X0)
    // CIR: y = y_coeff * z; CEV: y = y_coeff * z^y_power
    double y_coeff_ = 0.0;
    double y_power_ = 1.0;
    // envelope constants
    double env_sigma_ = 0.0;
    double env_abar_ = 0.0;   // CIR a/sigma^2, CEV exponent bundle
    double env_kos2_ = 0.0;
    double c2_scale_ = 0.0;

    double y_of_z(double z) const;
    double dy_dz(double z) const;
    friend struct EvalCore;
};

TransformEvaluator make_evaluator(Target target, const ModelSpec& params, Mode mode);

// (e^t/pi) * Re int_0^{U_max} e^{iut} ev(u, z) du with U_max chosen from the
// envelope bound so the truncated tail stays below abs_tol/10 (capped at
// u_max_cap). Adaptive interval-halving Simpson with absolute tolerance.
double invert_bromwich(const TransformEvaluator& ev, double t, double z,
                       const QuadratureConfig& cfg = {});

// P[extreme <= z] for the target's running extreme over [0, t].
double extreme_cdf(Target target, double z, double t, const ModelSpec& params,
                   const QuadratureConfig& cfg = {});

double cir_sup_density(double z, double t, const CirParams& params,
                       const QuadratureConfig& cfg = {});
double cir_inf_density(double z, double t, const CirParams& params,
                       const QuadratureConfig& cfg = {});
double cev_sup_density(double z, double t, const CevParams& params,
                       const QuadratureConfig& cfg = {});
double cev_inf_density(double z, double t, const CevParams& params,
                       const QuadratureConfig& cfg = {});

// E[e^{-s tau_z}] for the hitting time of level z, real s > 0.
double hitting_laplace(Target target, double s, double z, const ModelSpec& params);

struct ExtremeCurve {
    std::vector<double> cdf;
    std::vector<double> density;
    double u_max = 0.0;
    double truncation_bound = 0.0;
};

// CDF and density on a z-grid sharing one set of quadrature nodes (one ODE
// sweep per node serves every grid point).
ExtremeCurve extreme_curve(Target target, const ModelSpec& params, double t,
                           std::span<const double> z, const QuadratureConfig& cfg = {},
                           bool want_density = true);

}  // namespace bmc::extremes
