#include <CLI11.hpp>

#include "bmc/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Barrier option pricing under CIR/CEV dynamics: multilevel Monte Carlo with "
                 "Brownian-bridge crossing corrections, plus running-extreme distributions via "
                 "Laplace inversion"};
    app.require_subcommand(1);

    bmc::cli::GlobalOptions opt;
    std::uint64_t seed_val = 0;
    int threads_val = 0;
    std::string out_val, validation_val;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", opt.config_path, "config file path")->required();
        cmd->add_option("--seed", seed_val, "override [mlmc] seed");
        cmd->add_option("--out", out_val, "override output directory");
        cmd->add_option("--validation", validation_val, "warn|strict");
        cmd->add_option("--threads", threads_val, "worker threads");
        cmd->add_option("--simd", opt.simd, "auto|scalar|avx2")->capture_default_str();
    };

    CLI::App* price = app.add_subcommand("price", "MLMC price per accuracy target");
    CLI::App* complexity = app.add_subcommand("complexity", "MLMC vs MC cost table");
    CLI::App* convergence = app.add_subcommand("convergence", "strong-order study");
    CLI::App* density = app.add_subcommand("density", "running-extreme density/cdf grid");
    CLI::App* levels = app.add_subcommand("levels", "per-level estimator statistics");
    for (auto* c : {price, complexity, convergence, density, levels}) add_common(c);

    CLI11_PARSE(app, argc, argv);

    auto finish = [&](CLI::App* cmd) {
        if (cmd->count("--seed")) opt.seed = seed_val;
        if (cmd->count("--out")) opt.out_dir = out_val;
        if (cmd->count("--validation")) opt.validation = validation_val;
        if (cmd->count("--threads")) opt.threads = threads_val;
    };

    if (price->parsed()) {
        finish(price);
        return bmc::cli::cmd_price(opt);
    }
    if (complexity->parsed()) {
        finish(complexity);
        return bmc::cli::cmd_complexity(opt);
    }
    if (convergence->parsed()) {
        finish(convergence);
        return bmc::cli::cmd_convergence(opt);
    }
    if (density->parsed()) {
        finish(density);
        return bmc::cli::cmd_density(opt);
    }
    finish(levels);
    return bmc::cli::cmd_levels(opt);
}
