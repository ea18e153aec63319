#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bmc/models.hpp"
#include "bmc/pricing.hpp"

namespace bmc {

// Flat sectioned key=value config ("[section]" headers, '#'/';' comments).
class IniFile {
  public:
    static IniFile parse_file(const std::string& path);
    static IniFile parse_string(const std::string& text);

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key) const;
    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key) const;
    double get_double_or(const std::string& section, const std::string& key,
                         double fallback) const;
    std::int64_t get_int_or(const std::string& section, const std::string& key,
                            std::int64_t fallback) const;
    std::vector<double> get_list(const std::string& section, const std::string& key) const;
    bool has_section(const std::string& section) const;

    const std::string& raw() const { return raw_; }

  private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
    std::string raw_;
};

enum class ValidationMode { Warn, Strict };

struct DensityRequest {
    std::string target;  // cir-sup | cir-inf | cev-sup | cev-inf
    double t = 1.0;
    double z_min = 0.0;
    double z_max = 0.0;
    int points = 50;
    double abs_tol = 1e-8;
    std::uint64_t mc_compare = 0;  // paths for the optional comparison column
    int mc_level = 12;
};

struct ConvergenceRequest {
    int level_min = 4;
    int level_max = 9;
    int ref_level = 12;
    std::uint64_t paths = 10000;
    double maturity = 1.0;  // used when no [option] section supplies one
};

struct LevelsRequest {
    int level_min = 0;
    int level_max = 8;
    std::uint64_t samples = 100000;
};

struct RunConfig {
    ModelSpec model;
    std::optional<BarrierContract> option;
    std::vector<double> eps;  // positive, sorted descending
    DriverConfig driver;
    ValidationMode validation = ValidationMode::Warn;
    std::string out_dir = "out";
    std::optional<DensityRequest> density;
    ConvergenceRequest convergence;
    LevelsRequest levels;
    std::uint64_t config_hash = 0;
};

// needs_option: subcommands pricing a contract require the [option] section.
RunConfig load_config(const std::string& path, bool needs_option, bool needs_eps);

}  // namespace bmc
