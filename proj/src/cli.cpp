#include "bmc/cli.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "bmc/config.hpp"
#include "bmc/errors.hpp"
#include "bmc/extremes.hpp"
#include "bmc/kernels.hpp"
#include "bmc/pricing.hpp"

namespace bmc::cli {

namespace {

using nlohmann::json;

struct Prepared {
    RunConfig cfg;
    LampertiDynamics dyn;
    std::optional<BarrierContract> contract;
    std::optional<PayoffSpec> payoff;
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Write-to-temp plus atomic rename; no partial files on failure.
void write_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw ConfigError("cannot write '" + tmp.string() + "'");
        f << content;
        if (!f.good()) throw ConfigError("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

std::string csv_meta(const RunConfig& cfg) {
    char buf[80];
    std::snprintf(buf, sizeof(buf), "# config_hash=%016" PRIx64 " seed=%" PRIu64 "\n",
                  cfg.config_hash ^ cfg.driver.seed, cfg.driver.seed);
    return buf;
}

Prepared prepare(const GlobalOptions& opt, bool needs_option, bool needs_eps) {
    RunConfig cfg = load_config(opt.config_path, needs_option, needs_eps);
    if (opt.seed) cfg.driver.seed = *opt.seed;
    if (opt.out_dir) cfg.out_dir = *opt.out_dir;
    if (opt.threads) cfg.driver.threads = *opt.threads;
    if (opt.validation) {
        if (*opt.validation == "warn")
            cfg.validation = ValidationMode::Warn;
        else if (*opt.validation == "strict")
            cfg.validation = ValidationMode::Strict;
        else
            throw ConfigError("--validation must be warn or strict");
    }
    kernels::set_simd_mode(kernels::parse_simd_mode(opt.simd));

    const ValidationReport report = validate_theory(cfg.model, 2.0);
    for (const auto& w : report.theory_warnings)
        std::cerr << "theory warning: " << w << "\n";
    if (!report.well_posed) {
        for (const auto& m : report.well_posed_messages)
            std::cerr << "well-posedness: " << m << "\n";
        if (cfg.validation == ValidationMode::Strict)
            throw ConfigError("model fails well-posedness checks (strict mode)");
    }

    Prepared p{std::move(cfg), {}, {}, {}};
    p.dyn = build_dynamics(p.cfg.model);
    if (p.cfg.option) {
        p.cfg.option->validate(model_x0(p.cfg.model));
        p.contract = map_barrier(*p.cfg.option, p.dyn);
        p.payoff = make_discounted_call(*p.contract);
    }
    return p;
}

json level_json(const LevelStats& st) {
    return json{{"level", st.level},
                {"n_samples", st.n_samples},
                {"mean_diff", st.mean_diff},
                {"var_diff", st.var_diff},
                {"mean_fine", st.mean_fine},
                {"var_fine", st.var_fine},
                {"cost_units", st.cost_units},
                {"positivity_failures", st.positivity_failures}};
}

std::string levels_csv(const RunConfig& cfg, const std::vector<LevelStats>& levels) {
    std::ostringstream os;
    os << csv_meta(cfg);
    os << "level,n_samples,mean_diff,var_diff,mean_fine,var_fine,cost\n";
    for (const auto& st : levels) {
        os << st.level << ',' << st.n_samples << ',' << fmt(st.mean_diff) << ','
           << fmt(st.var_diff) << ',' << fmt(st.mean_fine) << ',' << fmt(st.var_fine) << ','
           << fmt(st.cost_units) << '\n';
    }
    return os.str();
}

double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

int run_guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ParameterError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ContractError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const PositivityLossError& e) {
        std::cerr << "positivity loss: " << e.what() << "\n";
        return kExitPositivityLoss;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    }
}

// Empirical CDF via the whole-path bridge survival product on level-12
// paths: smooth, and unbiased for the interpolated scheme's extreme.
std::vector<double> density_mc_cdf(const LampertiDynamics& dyn, const DriverConfig& driver,
                                   extremes::Target target, const DensityRequest& req,
                                   const std::vector<double>& zs) {
    const bool sup = target == extremes::Target::CirSup || target == extremes::Target::CevSup;
    const bool increasing = dyn.orientation == Orientation::Increasing;
    // crossing direction in transformed coordinates
    const bool up_crossing = sup == increasing;
    std::vector<double> levels(zs.size());
    for (std::size_t i = 0; i < zs.size(); ++i) levels[i] = dyn.transform(zs[i]);

    const auto& k = kernels::active_kernels();
    std::vector<double> mean(zs.size(), 0.0);
    const std::uint64_t chunk = 8192;
    std::vector<double> surv;
    std::vector<std::uint8_t> fail;
    for (std::uint64_t base = 0; base < req.mc_compare; base += chunk) {
        const std::uint64_t n = std::min(chunk, req.mc_compare - base);
        surv.assign(n * zs.size(), 0.0);
        fail.assign(n, 0);
        kernels::ExtremeJob job;
        job.step = step_params(dyn);
        job.key = {driver.seed, (2u << 8) | static_cast<std::uint32_t>(req.mc_level)};
        job.y0 = dyn.y0_transformed();
        job.maturity = req.t;
        job.level = req.mc_level;
        job.bsign = up_crossing ? -1.0 : 1.0;
        job.z_levels = levels.data();
        job.n_levels = zs.size();
        job.sample_base = base;
        job.n = n;
        job.survival = surv.data();
        job.fail = fail.data();
        k.extremes(job);
        for (std::uint64_t s = 0; s < n; ++s)
            for (std::size_t j = 0; j < zs.size(); ++j) mean[j] += surv[s * zs.size() + j];
    }
    for (double& m : mean) m /= static_cast<double>(req.mc_compare);
    // survival product estimates P[no crossing]; map to the asset-space CDF
    std::vector<double> cdf(zs.size());
    for (std::size_t j = 0; j < zs.size(); ++j) cdf[j] = sup ? mean[j] : 1.0 - mean[j];
    return cdf;
}

extremes::Target parse_target(const std::string& s) {
    if (s == "cir-sup") return extremes::Target::CirSup;
    if (s == "cir-inf") return extremes::Target::CirInf;
    if (s == "cev-sup") return extremes::Target::CevSup;
    if (s == "cev-inf") return extremes::Target::CevInf;
    throw ConfigError("density: unknown target '" + s + "'");
}

}  // namespace

int cmd_price(const GlobalOptions& opt) {
    return run_guarded([&] {
        Prepared p = prepare(opt, true, true);
        json report;
        report["config_hash"] = p.cfg.config_hash ^ p.cfg.driver.seed;
        report["seed"] = p.cfg.driver.seed;
        report["runs"] = json::array();
        for (std::size_t i = 0; i < p.cfg.eps.size(); ++i) {
            const double eps = p.cfg.eps[i];
            MlmcResult res = mlmc_price(p.dyn, *p.contract, *p.payoff, eps, p.cfg.driver);
            json run{{"eps", eps},
                     {"price", res.price},
                     {"bias_estimate", res.bias_estimate},
                     {"statistical_error_estimate", res.statistical_error_estimate},
                     {"total_cost_units", res.total_cost_units},
                     {"levels", json::array()}};
            for (const auto& st : res.levels) run["levels"].push_back(level_json(st));
            report["runs"].push_back(run);
            write_atomic(std::filesystem::path(p.cfg.out_dir) /
                             ("levels_eps" + std::to_string(i) + ".csv"),
                         levels_csv(p.cfg, res.levels));
            std::printf("eps=%g price=%.6f bias=%.3e stat=%.3e cost=%.6e\n", eps, res.price,
                        res.bias_estimate, res.statistical_error_estimate, res.total_cost_units);
        }
        write_atomic(std::filesystem::path(p.cfg.out_dir) / "price_report.json",
                     report.dump(2) + "\n");
        return kExitOk;
    });
}

int cmd_complexity(const GlobalOptions& opt) {
    return run_guarded([&] {
        Prepared p = prepare(opt, true, true);
        std::ostringstream rows, costfig;
        rows << csv_meta(p.cfg) << "accuracy,price,mlmc_cost,mc_cost,saving\n";
        costfig << csv_meta(p.cfg) << "eps,mlmc_eps2_cost,mc_eps2_cost\n";
        std::vector<LevelStats> finest_levels;
        for (double eps : p.cfg.eps) {
            MlmcResult res = mlmc_price(p.dyn, *p.contract, *p.payoff, eps, p.cfg.driver);
            McResult mc = mc_price(p.dyn, *p.contract, *p.payoff, eps, 0, p.cfg.driver);
            const double saving = mc.cost_units / res.total_cost_units;
            rows << fmt(eps) << ',' << fmt(res.price) << ',' << fmt(res.total_cost_units) << ','
                 << fmt(mc.cost_units) << ',' << fmt(saving) << '\n';
            costfig << fmt(eps) << ',' << fmt(eps * eps * res.total_cost_units) << ','
                    << fmt(eps * eps * mc.cost_units) << '\n';
            finest_levels = res.levels;
            std::printf("eps=%g price=%.6f mlmc_cost=%.4e mc_cost=%.4e saving=%.2f\n", eps,
                        res.price, res.total_cost_units, mc.cost_units, saving);
        }
        std::ostringstream levfig;
        levfig << csv_meta(p.cfg) << "level,log2_var_diff,log2_abs_mean_diff\n";
        for (const auto& st : finest_levels) {
            levfig << st.level << ',' << fmt(std::log2(std::max(st.var_diff, 1e-300))) << ','
                   << fmt(std::log2(std::max(std::fabs(st.mean_diff), 1e-300))) << '\n';
        }
        const std::filesystem::path dir(p.cfg.out_dir);
        write_atomic(dir / "complexity.csv", rows.str());
        write_atomic(dir / "complexity_cost.csv", costfig.str());
        write_atomic(dir / "complexity_levels.csv", levfig.str());
        return kExitOk;
    });
}

int cmd_convergence(const GlobalOptions& opt) {
    return run_guarded([&] {
        Prepared p = prepare(opt, false, false);
        const auto& req = p.cfg.convergence;
        BMC_REQUIRE(req.ref_level > req.level_max + 2, ConfigError,
                    "convergence: ref_level must exceed level_max + 2");
        const double maturity = p.cfg.option ? p.cfg.option->maturity : req.maturity;
        const double y0 = p.dyn.y0_transformed();
        const int n_levels = req.level_max - req.level_min + 1;
        std::vector<double> err(n_levels, 0.0);
        for (std::uint64_t k = 0; k < req.paths; ++k) {
            SeedTag tag{p.cfg.driver.seed, k, (3u << 8)};
            auto ref_sk = make_skeleton(tag, req.ref_level, maturity);
            auto ref_path = simulate_fine_path(p.dyn, y0, ref_sk);
            for (int l = req.level_min; l <= req.level_max; ++l) {
                const std::size_t stride = std::size_t{1} << (req.ref_level - l);
                BrownianSkeleton sk;
                sk.level = l;
                sk.maturity = maturity;
                sk.fine_increments.assign(std::size_t{1} << l, 0.0);
                for (std::size_t i = 0; i < sk.fine_increments.size(); ++i) {
                    double sum = 0.0;
                    for (std::size_t j = 0; j < stride; ++j)
                        sum += ref_sk.fine_increments[i * stride + j];
                    sk.fine_increments[i] = sum;
                }
                auto path = simulate_fine_path(p.dyn, y0, sk);
                double sup = 0.0;
                for (std::size_t i = 0; i < path.size(); ++i)
                    sup = std::fmax(sup, std::fabs(path[i] - ref_path[i * stride]));
                err[l - req.level_min] += sup;
            }
        }
        std::vector<double> xs, ys;
        std::ostringstream csv;
        csv << csv_meta(p.cfg) << "level,sup_error\n";
        for (int l = req.level_min; l <= req.level_max; ++l) {
            const double e = err[l - req.level_min] / static_cast<double>(req.paths);
            csv << l << ',' << fmt(e) << '\n';
            xs.push_back(l);
            ys.push_back(std::log2(e));
        }
        const double slope = fit_slope(xs, ys);
        write_atomic(std::filesystem::path(p.cfg.out_dir) / "convergence.csv", csv.str());
        json rep{{"slope", slope}, {"paths", req.paths}, {"ref_level", req.ref_level}};
        write_atomic(std::filesystem::path(p.cfg.out_dir) / "convergence.json",
                     rep.dump(2) + "\n");
        std::printf("strong-order slope: %.4f\n", slope);
        return kExitOk;
    });
}

int cmd_density(const GlobalOptions& opt) {
    return run_guarded([&] {
        Prepared p = prepare(opt, false, false);
        BMC_REQUIRE(p.cfg.density.has_value(), ConfigError, "density: missing [density] section");
        const DensityRequest& req = *p.cfg.density;
        const extremes::Target target = parse_target(req.target);
        extremes::QuadratureConfig qcfg;
        qcfg.abs_tol = req.abs_tol;
        std::vector<double> zs(req.points);
        for (int i = 0; i < req.points; ++i)
            zs[i] = req.z_min + (req.z_max - req.z_min) * i / (req.points - 1);
        auto curve = extremes::extreme_curve(target, p.cfg.model, req.t, zs, qcfg, true);

        std::vector<double> mc_cdf;
        if (req.mc_compare > 0) mc_cdf = density_mc_cdf(p.dyn, p.cfg.driver, target, req, zs);

        std::ostringstream csv;
        csv << csv_meta(p.cfg) << (mc_cdf.empty() ? "z,density,cdf\n" : "z,density,cdf,mc_cdf\n");
        for (int i = 0; i < req.points; ++i) {
            csv << fmt(zs[i]) << ',' << fmt(curve.density[i]) << ',' << fmt(curve.cdf[i]);
            if (!mc_cdf.empty()) csv << ',' << fmt(mc_cdf[i]);
            csv << '\n';
        }
        write_atomic(std::filesystem::path(p.cfg.out_dir) / "density.csv", csv.str());
        std::printf("density grid written: %d points, u_max=%.1f truncation<=%.2e\n", req.points,
                    curve.u_max, curve.truncation_bound);
        return kExitOk;
    });
}

int cmd_levels(const GlobalOptions& opt) {
    return run_guarded([&] {
        Prepared p = prepare(opt, true, false);
        std::vector<LevelStats> stats;
        for (int l = p.cfg.levels.level_min; l <= p.cfg.levels.level_max; ++l) {
            stats.push_back(estimate_level(p.dyn, *p.contract, *p.payoff, l,
                                           p.cfg.levels.samples, p.cfg.driver.seed,
                                           p.cfg.driver.threads, p.cfg.driver.chunk));
            std::printf("level=%d var_diff=%.4e mean_diff=%.4e\n", l, stats.back().var_diff,
                        stats.back().mean_diff);
        }
        write_atomic(std::filesystem::path(p.cfg.out_dir) / "levels.csv",
                     levels_csv(p.cfg, stats));
        return kExitOk;
    });
}

}  // namespace bmc::cli
