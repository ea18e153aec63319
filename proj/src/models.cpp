#include "bmc/models.hpp"

#include <sstream>

namespace bmc {

void CirParams::validate() const {
    BMC_REQUIRE(a >= 0.0, ParameterError, "cir: a must be >= 0");
    BMC_REQUIRE(sigma > 0.0, ParameterError, "cir: sigma must be > 0");
    BMC_REQUIRE(x0 > 0.0, ParameterError, "cir: x0 must be > 0");
}

void CevParams::validate() const {
    BMC_REQUIRE(sigma > 0.0, ParameterError, "cev: sigma must be > 0");
    BMC_REQUIRE(alpha > 1.0, ParameterError, "cev: alpha must be > 1");
    BMC_REQUIRE(x0 > 0.0, ParameterError, "cev: x0 must be > 0");
}

LampertiDynamics build_cir_dynamics(const CirParams& params) {
    params.validate();
    LampertiDynamics dyn;
    dyn.kind = ModelKind::Cir;
    dyn.gamma = 0.5 * params.sigma;
    dyn.kappa_eff = params.kappa;
    dyn.c_eff = params.a - 0.25 * params.sigma * params.sigma;
    dyn.transform_power = 0.5;
    dyn.x0 = params.x0;
    dyn.orientation = Orientation::Increasing;
    return dyn;
}

LampertiDynamics build_cev_dynamics(const CevParams& params) {
    params.validate();
    LampertiDynamics dyn;
    dyn.kind = ModelKind::Cev;
    dyn.gamma = params.sigma * (1.0 - params.alpha);
    dyn.kappa_eff = 2.0 * params.mu * (params.alpha - 1.0);
    dyn.c_eff = params.alpha * (params.alpha - 1.0) * params.sigma * params.sigma;
    dyn.transform_power = 1.0 - params.alpha;
    dyn.x0 = params.x0;
    dyn.orientation = Orientation::Decreasing;
    return dyn;
}

LampertiDynamics build_dynamics(const ModelSpec& spec) {
    if (const auto* cir = std::get_if<CirParams>(&spec)) return build_cir_dynamics(*cir);
    return build_cev_dynamics(std::get<CevParams>(spec));
}

double model_x0(const ModelSpec& spec) {
    if (const auto* cir = std::get_if<CirParams>(&spec)) return cir->x0;
    return std::get<CevParams>(spec).x0;
}

void BarrierContract::validate(double x0) const {
    BMC_REQUIRE(barrier > 0.0, ContractError, "contract: barrier must be > 0");
    BMC_REQUIRE(strike >= 0.0, ContractError, "contract: strike must be >= 0");
    BMC_REQUIRE(maturity > 0.0, ContractError, "contract: maturity must be > 0");
    if (kind == BarrierKind::DownOut) {
        BMC_REQUIRE(x0 > barrier, ContractError, "contract: down-out requires x0 > barrier");
    } else {
        BMC_REQUIRE(x0 < barrier, ContractError, "contract: up-out requires x0 < barrier");
    }
}

BarrierContract map_barrier(const BarrierContract& contract, const LampertiDynamics& dyn) {
    BarrierContract out = contract;
    out.transformed_barrier = dyn.transform(contract.barrier);
    const bool flip = dyn.orientation == Orientation::Decreasing;
    if (!flip) {
        out.transformed_kind = contract.kind;
    } else {
        out.transformed_kind = contract.kind == BarrierKind::DownOut ? BarrierKind::UpOut
                                                                     : BarrierKind::DownOut;
    }
    out.mapped = true;
    return out;
}

namespace {

std::string fmt(const char* prefix, double v) {
    std::ostringstream os;
    os << prefix << v;
    return os.str();
}

}  // namespace

ValidationReport validate_theory(const ModelSpec& spec, double p) {
    BMC_REQUIRE(p >= 1.0, ParameterError, "validate_theory: p must be >= 1");
    ValidationReport rep;
    if (const auto* cir = std::get_if<CirParams>(&spec)) {
        if (cir->a < 0.0) {
            rep.well_posed = false;
            rep.well_posed_messages.push_back("cir: a < 0");
        }
        if (cir->sigma <= 0.0) {
            rep.well_posed = false;
            rep.well_posed_messages.push_back("cir: sigma <= 0");
        }
        if (cir->x0 <= 0.0) {
            rep.well_posed = false;
            rep.well_posed_messages.push_back("cir: x0 <= 0");
        }
        if (!rep.well_posed) return rep;
        const double s2 = cir->sigma * cir->sigma;
        rep.max_moment_order = (4.0 / 3.0) * cir->a / s2;
        if (cir->a < 0.5 * s2)
            rep.theory_warnings.push_back("a >= sigma^2/2 (Feller) violated");
        if (s2 >= cir->a)
            rep.theory_warnings.push_back("sigma^2 < a violated");
        if (p >= rep.max_moment_order)
            rep.theory_warnings.push_back(fmt("moment order p exceeds (4/3) a/sigma^2 = ", rep.max_moment_order));
    } else {
        const auto& cev = std::get<CevParams>(spec);
        if (cev.sigma <= 0.0) {
            rep.well_posed = false;
            rep.well_posed_messages.push_back("cev: sigma <= 0");
        }
        if (cev.alpha <= 1.0) {
            rep.well_posed = false;
            rep.well_posed_messages.push_back("cev: alpha <= 1");
        }
        if (cev.x0 <= 0.0) {
            rep.well_posed = false;
            rep.well_posed_messages.push_back("cev: x0 <= 0");
        }
        if (!rep.well_posed) return rep;
        rep.max_moment_order = (2.0 * cev.alpha - 1.0) / (6.0 * (cev.alpha - 1.0));
        if (!(cev.alpha > 1.0 && cev.alpha < 7.0 / 6.0))
            rep.theory_warnings.push_back("alpha not in (1, 7/6)");
        if (p >= rep.max_moment_order)
            rep.theory_warnings.push_back(fmt("moment order p exceeds (2a-1)/(6(a-1)) = ", rep.max_moment_order));
    }
    return rep;
}

}  // namespace bmc
