#pragma once

#include <optional>
#include <string>

namespace bmc::cli {

struct GlobalOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> validation;
    std::optional<int> threads;
    std::string simd = "auto";
};

int cmd_price(const GlobalOptions& opt);
int cmd_complexity(const GlobalOptions& opt);
int cmd_convergence(const GlobalOptions& opt);
int cmd_density(const GlobalOptions& opt);
int cmd_levels(const GlobalOptions& opt);

}  // namespace bmc::cli
