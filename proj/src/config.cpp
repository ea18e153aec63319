#include "bmc/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bmc/errors.hpp"

namespace bmc {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

IniFile IniFile::parse_string(const std::string& text) {
    IniFile ini;
    ini.raw_ = text;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config: malformed section header at line " +
                                  std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected key=value at line " + std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config: empty key at line " + std::to_string(lineno));
        ini.sections_[section][key] = value;
    }
    return ini;
}

IniFile IniFile::parse_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_string(buf.str());
}

bool IniFile::has(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
}

bool IniFile::has_section(const std::string& section) const {
    return sections_.count(section) > 0;
}

std::string IniFile::get(const std::string& section, const std::string& key) const {
    if (!has(section, key))
        throw ConfigError("config: missing [" + section + "] " + key);
    return sections_.at(section).at(key);
}

std::string IniFile::get_or(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
    return has(section, key) ? get(section, key) : fallback;
}

double IniFile::get_double(const std::string& section, const std::string& key) const {
    const std::string v = get(section, key);
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: [" + section + "] " + key + " is not a number: '" + v + "'");
    }
}

double IniFile::get_double_or(const std::string& section, const std::string& key,
                              double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
}

std::int64_t IniFile::get_int_or(const std::string& section, const std::string& key,
                                 std::int64_t fallback) const {
    if (!has(section, key)) return fallback;
    const double d = get_double(section, key);
    if (d != std::floor(d))
        throw ConfigError("config: [" + section + "] " + key + " must be an integer");
    return static_cast<std::int64_t>(d);
}

std::vector<double> IniFile::get_list(const std::string& section, const std::string& key) const {
    const std::string v = get(section, key);
    std::vector<double> out;
    std::string item;
    std::istringstream is(v);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError("config: [" + section + "] " + key + " has a bad entry: '" + item +
                              "'");
        }
    }
    if (out.empty()) throw ConfigError("config: [" + section + "] " + key + " is empty");
    return out;
}

namespace {

std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

ModelSpec parse_model(const IniFile& ini) {
    const std::string type = ini.get("model", "type");
    if (type == "cir") {
        CirParams p;
        p.a = ini.get_double("model", "a");
        p.kappa = ini.get_double("model", "kappa");
        p.sigma = ini.get_double("model", "sigma");
        p.x0 = ini.get_double("model", "x0");
        return p;
    }
    if (type == "cev") {
        CevParams p;
        p.mu = ini.get_double("model", "mu");
        p.sigma = ini.get_double("model", "sigma");
        p.alpha = ini.get_double("model", "alpha");
        p.x0 = ini.get_double("model", "x0");
        return p;
    }
    throw ConfigError("config: [model] type must be cir or cev, got '" + type + "'");
}

BarrierContract parse_option(const IniFile& ini) {
    BarrierContract c;
    const std::string kind = ini.get("option", "kind");
    if (kind == "down-out")
        c.kind = BarrierKind::DownOut;
    else if (kind == "up-out")
        c.kind = BarrierKind::UpOut;
    else
        throw ConfigError("config: [option] kind must be down-out or up-out");
    c.barrier = ini.get_double("option", "barrier");
    c.strike = ini.get_double("option", "strike");
    c.rate = ini.get_double("option", "rate");
    c.maturity = ini.get_double("option", "maturity");
    return c;
}

}  // namespace

RunConfig load_config(const std::string& path, bool needs_option, bool needs_eps) {
    const IniFile ini = IniFile::parse_file(path);
    RunConfig cfg;
    cfg.model = parse_model(ini);
    if (needs_option || ini.has_section("option")) cfg.option = parse_option(ini);

    if (needs_eps || ini.has("mlmc", "eps")) {
        cfg.eps = ini.get_list("mlmc", "eps");
        for (double e : cfg.eps)
            if (e <= 0.0) throw ConfigError("config: [mlmc] eps values must be positive");
        for (std::size_t i = 0; i + 1 < cfg.eps.size(); ++i)
            if (cfg.eps[i] < cfg.eps[i + 1])
                throw ConfigError("config: [mlmc] eps values must be sorted descending");
    }
    cfg.driver.n_warm = static_cast<std::uint64_t>(ini.get_int_or("mlmc", "n_warm", 10000));
    cfg.driver.l_min = static_cast<int>(ini.get_int_or("mlmc", "l_min", 2));
    cfg.driver.l_max = static_cast<int>(ini.get_int_or("mlmc", "l_max", 12));
    cfg.driver.seed = static_cast<std::uint64_t>(ini.get_int_or("mlmc", "seed", 1));
    cfg.driver.threads = static_cast<int>(ini.get_int_or("mlmc", "threads", 1));
    cfg.driver.mc_steps_scale = ini.get_double_or("mc", "steps_scale", 0.0);
    cfg.driver.mc_max_samples =
        static_cast<std::uint64_t>(ini.get_int_or("mc", "max_samples", 200000000));

    const std::string mode = ini.get_or("validation", "mode", "warn");
    if (mode == "warn")
        cfg.validation = ValidationMode::Warn;
    else if (mode == "strict")
        cfg.validation = ValidationMode::Strict;
    else
        throw ConfigError("config: [validation] mode must be warn or strict");

    cfg.out_dir = ini.get_or("output", "dir", "out");

    if (ini.has_section("density")) {
        DensityRequest d;
        d.target = ini.get("density", "target");
        d.t = ini.get_double_or("density", "t", 1.0);
        d.z_min = ini.get_double("density", "z_min");
        d.z_max = ini.get_double("density", "z_max");
        d.points = static_cast<int>(ini.get_int_or("density", "points", 50));
        d.abs_tol = ini.get_double_or("density", "abs_tol", 1e-8);
        d.mc_compare = static_cast<std::uint64_t>(ini.get_int_or("density", "mc_compare", 0));
        d.mc_level = static_cast<int>(ini.get_int_or("density", "mc_level", 12));
        if (d.points < 2) throw ConfigError("config: [density] points must be >= 2");
        if (!(d.z_min < d.z_max)) throw ConfigError("config: [density] needs z_min < z_max");
        cfg.density = d;
    }
    cfg.convergence.level_min = static_cast<int>(ini.get_int_or("convergence", "level_min", 4));
    cfg.convergence.level_max = static_cast<int>(ini.get_int_or("convergence", "level_max", 9));
    cfg.convergence.ref_level = static_cast<int>(ini.get_int_or("convergence", "ref_level", 12));
    cfg.convergence.paths =
        static_cast<std::uint64_t>(ini.get_int_or("convergence", "paths", 10000));
    cfg.convergence.maturity = ini.get_double_or("convergence", "maturity", 1.0);
    cfg.levels.level_min = static_cast<int>(ini.get_int_or("levels", "level_min", 0));
    cfg.levels.level_max = static_cast<int>(ini.get_int_or("levels", "level_max", 8));
    cfg.levels.samples = static_cast<std::uint64_t>(ini.get_int_or("levels", "samples", 100000));

    cfg.config_hash = fnv1a(ini.raw());
    return cfg;
}

}  // namespace bmc
