#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "bmc/errors.hpp"

namespace bmc {

struct CirParams {
    double a = 0.0;      // mean-level drift constant, >= 0
    double kappa = 0.0;  // reversion rate
    double sigma = 0.0;  // volatility, > 0
    double x0 = 0.0;     // initial asset value, > 0

    void validate() const;
};

struct CevParams {
    double mu = 0.0;     // drift rate
    double sigma = 0.0;  // volatility, > 0
    double alpha = 0.0;  // elasticity exponent, > 1
    double x0 = 0.0;     // initial asset value, > 0

    double beta() const { return alpha - 1.0; }
    // c = |mu| / (beta * sigma^2); scale constant of the hitting-time
    // transforms, defined for mu != 0.
    double c() const { return std::abs(mu) / (beta() * sigma * sigma); }

    void validate() const;
};

using ModelSpec = std::variant<CirParams, CevParams>;

enum class ModelKind { Cir, Cev, Generic };
enum class Orientation { Increasing, Decreasing };

// Transformed dynamics dY = L(Y) dt + gamma dW on (0, inf) with
//   L(y) = c_eff / (2 y) - (kappa_eff / 2) y
// for both closed-form models. The asset map is phi(x) = x^transform_power.
class LampertiDynamics {
  public:
    ModelKind kind = ModelKind::Generic;
    double gamma = 0.0;  // signed noise scale
    double kappa_eff = 0.0;
    double c_eff = 0.0;
    double transform_power = 1.0;
    double x0 = 0.0;  // initial asset value
    Orientation orientation = Orientation::Increasing;

    // Generic-model hooks (closed-form models leave these empty).
    std::function<double(double)> generic_drift;
    std::function<double(double)> generic_drift_prime;
    std::function<double(double)> generic_transform;
    std::function<double(double)> generic_inverse;

    double drift(double y) const {
        if (kind == ModelKind::Generic) return generic_drift(y);
        return c_eff / (2.0 * y) - 0.5 * kappa_eff * y;
    }
    double drift_prime(double y) const {
        if (kind == ModelKind::Generic) return generic_drift_prime(y);
        return -c_eff / (2.0 * y * y) - 0.5 * kappa_eff;
    }
    double transform(double x) const {
        if (kind == ModelKind::Generic) return generic_transform(x);
        return std::pow(x, transform_power);
    }
    double inverse_transform(double y) const {
        if (kind == ModelKind::Generic) return generic_inverse(y);
        return std::pow(y, 1.0 / transform_power);
    }
    double y0_transformed() const { return transform(x0); }
};

LampertiDynamics build_cir_dynamics(const CirParams& params);
LampertiDynamics build_cev_dynamics(const CevParams& params);
LampertiDynamics build_dynamics(const ModelSpec& spec);

enum class BarrierKind { DownOut, UpOut };

struct BarrierContract {
    BarrierKind kind = BarrierKind::DownOut;  // asset space
    double barrier = 0.0;                     // asset space, > 0
    double strike = 0.0;                      // asset space, >= 0
    double rate = 0.0;
    double maturity = 0.0;  // > 0

    // Filled by map_barrier.
    double transformed_barrier = 0.0;
    BarrierKind transformed_kind = BarrierKind::DownOut;
    bool mapped = false;

    void validate(double x0) const;
};

// Fills transformed_barrier / transformed_kind from the asset-space fields;
// the kind flips exactly when the transform is decreasing. Idempotent.
BarrierContract map_barrier(const BarrierContract& contract, const LampertiDynamics& dyn);

struct ValidationReport {
    bool well_posed = true;
    std::vector<std::string> well_posed_messages;
    std::vector<std::string> theory_warnings;
    double max_moment_order = 0.0;
};

// Two-tier validation: well-posedness failures block simulation in strict
// mode, theory warnings only report violated moment/Feller conditions.
ValidationReport validate_theory(const ModelSpec& spec, double p);

double model_x0(const ModelSpec& spec);

}  // namespace bmc
