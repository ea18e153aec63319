#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bmc/cli.hpp"
#include "bmc/config.hpp"
#include "bmc/errors.hpp"

using namespace bmc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

fs::path write_tmp(const std::string& name, const std::string& content) {
    const fs::path p = fs::temp_directory_path() / name;
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f << content;
    return p;
}

const char* kCirUoConfig = R"(
[model]
type = cir
a = 0.0
kappa = -0.1
sigma = 2.5
x0 = 100.0

[option]
kind = up-out
barrier = 120.0
strike = 105.0
rate = 0.1
maturity = 0.5

[mlmc]
eps = 2e-2
n_warm = 2000
seed = 7

[output]
dir = /tmp/bmc_cli_out
)";

}  // namespace

TEST_CASE("ini parsing") {
    auto ini = IniFile::parse_string("[a]\nx = 1.5 # comment\nlist = 1, 2, 3\n; note\n[b]\ny=2\n");
    CHECK(ini.get_double("a", "x") == 1.5);
    CHECK(ini.get_list("a", "list").size() == 3);
    CHECK(ini.get_double("b", "y") == 2.0);
    CHECK_THROWS_AS(ini.get("a", "missing"), ConfigError);
    CHECK_THROWS_AS(IniFile::parse_string("[a\nx=1\n"), ConfigError);
    CHECK_THROWS_AS(IniFile::parse_string("[a]\nnot_kv\n"), ConfigError);
}

TEST_CASE("config loading and validation") {
    const auto path = write_tmp("bmc_ok.ini", kCirUoConfig);
    auto cfg = load_config(path.string(), true, true);
    CHECK(std::get<CirParams>(cfg.model).sigma == 2.5);
    CHECK(cfg.option->barrier == 120.0);
    CHECK(cfg.eps.size() == 1);
    CHECK(cfg.driver.seed == 7);

    // missing barrier names the field
    std::string broken = kCirUoConfig;
    broken.replace(broken.find("barrier = 120.0"), 15, "#barrier = x   ");
    const auto bad = write_tmp("bmc_bad.ini", broken);
    try {
        load_config(bad.string(), true, true);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("barrier") != std::string::npos);
    }

    // unsorted eps rejected
    std::string unsorted = kCirUoConfig;
    unsorted.replace(unsorted.find("eps = 2e-2"), 10, "eps = 1,2 ");
    const auto bad2 = write_tmp("bmc_bad2.ini", unsorted);
    CHECK_THROWS_AS(load_config(bad2.string(), true, true), ConfigError);
}

TEST_CASE("price command: exit codes and reproducible files") {
    const auto path = write_tmp("bmc_price.ini", kCirUoConfig);
    cli::GlobalOptions opt;
    opt.config_path = path.string();
    opt.out_dir = "/tmp/bmc_cli_run1";
    CHECK(cli::cmd_price(opt) == kExitOk);
    CHECK(fs::exists("/tmp/bmc_cli_run1/price_report.json"));
    CHECK(fs::exists("/tmp/bmc_cli_run1/levels_eps0.csv"));

    opt.out_dir = "/tmp/bmc_cli_run2";
    opt.threads = 4;
    CHECK(cli::cmd_price(opt) == kExitOk);
    CHECK(slurp("/tmp/bmc_cli_run1/levels_eps0.csv") == slurp("/tmp/bmc_cli_run2/levels_eps0.csv"));
    CHECK(slurp("/tmp/bmc_cli_run1/price_report.json") ==
          slurp("/tmp/bmc_cli_run2/price_report.json"));

    // config failure path: exit code 1
    cli::GlobalOptions bad = opt;
    bad.config_path = "/tmp/definitely_missing.ini";
    CHECK(cli::cmd_price(bad) == kExitConfig);
}

TEST_CASE("density command: domain errors exit 2, grids are monotone") {
    const char* cfg = R"(
[model]
type = cir
a = 1.0
kappa = 0.5
sigma = 0.4
x0 = 1.0

[density]
target = cir-sup
t = 1.0
z_min = 1.3
z_max = 1.9
points = 9
abs_tol = 1e-7
)";
    const auto path = write_tmp("bmc_density.ini", cfg);
    cli::GlobalOptions opt;
    opt.config_path = path.string();
    opt.out_dir = "/tmp/bmc_cli_den";
    CHECK(cli::cmd_density(opt) == kExitOk);
    const std::string csv = slurp("/tmp/bmc_cli_den/density.csv");
    CHECK(csv.find("z,density,cdf") != std::string::npos);
    // cdf column monotone
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);  // meta
    std::getline(is, line);  // header
    double prev = -1.0;
    while (std::getline(is, line)) {
        const auto c1 = line.find(','), c2 = line.rfind(',');
        const double cdf = std::stod(line.substr(c2 + 1));
        CHECK(cdf >= prev - 1e-9);
        prev = cdf;
        CHECK(c1 != std::string::npos);
    }

    // grid straddling x0 rejected with exit 2
    std::string bad = cfg;
    bad.replace(bad.find("z_min = 1.3"), 11, "z_min = 0.9");
    const auto path2 = write_tmp("bmc_density_bad.ini", bad);
    cli::GlobalOptions opt2;
    opt2.config_path = path2.string();
    opt2.out_dir = "/tmp/bmc_cli_den_bad";
    CHECK(cli::cmd_density(opt2) == kExitNumerical);
    CHECK(!fs::exists("/tmp/bmc_cli_den_bad/density.csv"));  // no partial files
}

TEST_CASE("levels command writes the documented columns") {
    std::string cfg = kCirUoConfig;
    cfg += "\n[levels]\nlevel_min = 0\nlevel_max = 3\nsamples = 4000\n";
    const auto path = write_tmp("bmc_levels.ini", cfg);
    cli::GlobalOptions opt;
    opt.config_path = path.string();
    opt.out_dir = "/tmp/bmc_cli_levels";
    CHECK(cli::cmd_levels(opt) == kExitOk);
    const std::string csv = slurp("/tmp/bmc_cli_levels/levels.csv");
    CHECK(csv.find("level,n_samples,mean_diff,var_diff,mean_fine,var_fine,cost") !=
          std::string::npos);
}

TEST_CASE("density command emits the MC comparison column") {
    const char* cfg = R"(
[model]
type = cir
a = 1.0
kappa = 0.5
sigma = 0.4
x0 = 1.0

[density]
target = cir-inf
t = 1.0
z_min = 0.4
z_max = 0.7
points = 5
abs_tol = 1e-6
mc_compare = 20000
mc_level = 8
)";
    const auto path = write_tmp("bmc_density_mc.ini", cfg);
    cli::GlobalOptions opt;
    opt.config_path = path.string();
    opt.out_dir = "/tmp/bmc_cli_den_mc";
    CHECK(cli::cmd_density(opt) == kExitOk);
    const std::string csv = slurp("/tmp/bmc_cli_den_mc/density.csv");
    CHECK(csv.find("z,density,cdf,mc_cdf") != std::string::npos);
    // analytic and empirical CDF columns agree loosely at this sample size
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);
    std::getline(is, line);
    while (std::getline(is, line)) {
        std::istringstream row(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(row, cell, ',')) vals.push_back(std::stod(cell));
        REQUIRE(vals.size() == 4);
        CHECK(std::fabs(vals[2] - vals[3]) < 0.02);
    }
}

TEST_CASE("complexity command: saving column is definitional") {
    std::string cfg = kCirUoConfig;
    cfg.replace(cfg.find("eps = 2e-2"), 10, "eps = 4e-2");
    const auto path = write_tmp("bmc_cplx.ini", cfg);
    cli::GlobalOptions opt;
    opt.config_path = path.string();
    opt.out_dir = "/tmp/bmc_cli_cplx";
    CHECK(cli::cmd_complexity(opt) == kExitOk);
    const std::string csv = slurp("/tmp/bmc_cli_cplx/complexity.csv");
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);
    std::getline(is, line);
    REQUIRE(std::getline(is, line).good());
    std::istringstream row(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(row, cell, ',')) vals.push_back(std::stod(cell));
    REQUIRE(vals.size() == 5);
    CHECK(vals[4] == doctest::Approx(vals[3] / vals[2]).epsilon(1e-12));
}

TEST_CASE("convergence: zero-noise config rejected; slope stable under doubling") {
    const char* base = R"(
[model]
type = cir
a = 1.0
kappa = 0.5
sigma = {SIGMA}
x0 = 1.0

[convergence]
level_min = 2
level_max = 5
ref_level = 8
paths = {PATHS}
maturity = 1.0
)";
    {
        std::string cfg = base;
        cfg.replace(cfg.find("{SIGMA}"), 7, "0.0");
        cfg.replace(cfg.find("{PATHS}"), 7, "100");
        const auto path = write_tmp("bmc_conv_zero.ini", cfg);
        cli::GlobalOptions opt;
        opt.config_path = path.string();
        opt.out_dir = "/tmp/bmc_cli_conv_zero";
        CHECK(cli::cmd_convergence(opt) == kExitConfig);
    }
    double slopes[2];
    for (int i = 0; i < 2; ++i) {
        std::string cfg = base;
        cfg.replace(cfg.find("{SIGMA}"), 7, "0.4");
        cfg.replace(cfg.find("{PATHS}"), 7, i == 0 ? "600" : "1200");
        const auto path = write_tmp("bmc_conv_n.ini", cfg);
        cli::GlobalOptions opt;
        opt.config_path = path.string();
        opt.out_dir = "/tmp/bmc_cli_conv_n" + std::to_string(i);
        REQUIRE(cli::cmd_convergence(opt) == kExitOk);
        std::istringstream is(slurp(opt.out_dir.value() + "/convergence.json"));
        nlohmann::json j = nlohmann::json::parse(is);
        slopes[i] = j["slope"].get<double>();
    }
    CHECK(std::fabs(slopes[0] - slopes[1]) < 0.2);
}

TEST_CASE("convergence command rejects a too-low reference level") {
    std::string cfg = R"(
[model]
type = cir
a = 1.0
kappa = 0.5
sigma = 0.4
x0 = 1.0

[convergence]
level_min = 4
level_max = 9
ref_level = 10
paths = 100
)";
    const auto path = write_tmp("bmc_conv_bad.ini", cfg);
    cli::GlobalOptions opt;
    opt.config_path = path.string();
    opt.out_dir = "/tmp/bmc_cli_conv";
    CHECK(cli::cmd_convergence(opt) == kExitConfig);
}
