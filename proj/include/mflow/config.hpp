#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mflow/entropy.hpp"
#include "mflow/flow.hpp"
#include "mflow/random_field.hpp"
#include "mflow/tensor_field.hpp"

namespace mflow {

enum class ExperimentKind { flow, stability, entropy, gradcheck, willmore_compare };

inline std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::flow: return "flow";
        case ExperimentKind::stability: return "stability";
        case ExperimentKind::entropy: return "entropy";
        case ExperimentKind::gradcheck: return "gradcheck";
        case ExperimentKind::willmore_compare: return "willmore-compare";
    }
    return "?";
}

inline std::optional<ExperimentKind> parse_kind(const std::string& s) {
    if (s == "flow") return ExperimentKind::flow;
    if (s == "stability") return ExperimentKind::stability;
    if (s == "entropy") return ExperimentKind::entropy;
    if (s == "gradcheck") return ExperimentKind::gradcheck;
    if (s == "willmore-compare") return ExperimentKind::willmore_compare;
    return std::nullopt;
}

enum class InitialKind { zero, single_mode, random_smooth, constant };

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
    ConfigError(int line, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line) + ": " + msg) {}
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::flow;
    std::uint64_t seed = 0;

    // [grid]
    int grid_m = 0;
    int grid_n = 0;
    double grid_L = 0.0;

    AmbientModel ambient = AmbientModel::flat();    // [ambient]
    FlowCoefficients coeffs;                        // [coefficients]
    FlowSchedule schedule;                          // [schedule]
    double stationary_tol = 1e-6;

    // [entropy]
    std::optional<double> entropy_T;  // default 2 * t_end
    AdjointSign adjoint_sign = AdjointSign::diffusive;
    double entropy_tol = 1e-8;

    // [stability]
    double stab_amplitude = 1e-3;
    double stab_amplitude_cap = 1e-2;
    int stab_mode = 1;
    int stab_component = 0;

    // [gradcheck]
    int gradcheck_pairs = 20;
    std::vector<double> gradcheck_eps{1e-3, 1e-4, 1e-5};

    // [initial]
    InitialKind initial = InitialKind::zero;
    int init_mode = 1;
    int init_component = 0;
    int init_cutoff = 4;
    double init_amplitude = 0.1;
    std::vector<double> init_entries;

    // [output]
    std::optional<double> checkpoint_at;  // mid-run checkpoint trigger time

    double entropy_horizon() const { return entropy_T ? *entropy_T : 2.0 * schedule.t_end; }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

struct ConfigValue {
    std::string text;
    int line = 0;
};

struct RawConfig {
    std::map<std::string, ConfigValue> entries;  // "section.key" -> value

    const ConfigValue* find(const std::string& key) const {
        auto it = entries.find(key);
        return it == entries.end() ? nullptr : &it->second;
    }
};

inline double parse_double(const ConfigValue& v, const std::string& key) {
    std::size_t pos = 0;
    double d = 0.0;
    try {
        d = std::stod(v.text, &pos);
    } catch (const std::exception&) {
        throw ConfigError(v.line, key + " expects a number, got '" + v.text + "'");
    }
    if (pos != v.text.size()) throw ConfigError(v.line, key + " expects a number, got '" + v.text + "'");
    return d;
}

inline long parse_int(const ConfigValue& v, const std::string& key) {
    std::size_t pos = 0;
    long d = 0;
    try {
        d = std::stol(v.text, &pos);
    } catch (const std::exception&) {
        throw ConfigError(v.line, key + " expects an integer, got '" + v.text + "'");
    }
    if (pos != v.text.size()) throw ConfigError(v.line, key + " expects an integer, got '" + v.text + "'");
    return d;
}

inline std::uint64_t parse_u64(const ConfigValue& v, const std::string& key) {
    std::size_t pos = 0;
    unsigned long long d = 0;
    try {
        d = std::stoull(v.text, &pos);
    } catch (const std::exception&) {
        throw ConfigError(v.line, key + " expects an unsigned integer, got '" + v.text + "'");
    }
    if (pos != v.text.size())
        throw ConfigError(v.line, key + " expects an unsigned integer, got '" + v.text + "'");
    return d;
}

inline bool parse_bool(const ConfigValue& v, const std::string& key) {
    if (v.text == "true" || v.text == "on" || v.text == "1") return true;
    if (v.text == "false" || v.text == "off" || v.text == "0") return false;
    throw ConfigError(v.line, key + " expects true/false, got '" + v.text + "'");
}

inline std::vector<double> parse_double_list(const ConfigValue& v, const std::string& key) {
    std::istringstream ss(v.text);
    std::vector<double> out;
    std::string tok;
    while (ss >> tok) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(tok, &pos));
            if (pos != tok.size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw ConfigError(v.line, key + " expects numbers, got '" + tok + "'");
        }
    }
    if (out.empty()) throw ConfigError(v.line, key + " expects at least one number");
    return out;
}

inline RawConfig tokenize_config(const std::string& text) {
    RawConfig raw;
    std::istringstream stream(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(stream, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(lineno, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError(lineno, "empty section name");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(lineno, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(lineno, "empty key");
        if (value.empty()) throw ConfigError(lineno, "empty value for key '" + key + "'");
        const std::string full = section.empty() ? key : section + "." + key;
        if (raw.entries.count(full) != 0)
            throw ConfigError(lineno, "duplicate key '" + full + "'");
        raw.entries[full] = ConfigValue{value, lineno};
    }
    return raw;
}

inline const std::vector<std::string>& known_config_keys() {
    static const std::vector<std::string> keys = {
        "kind", "seed",
        "grid.m", "grid.n", "grid.L",
        "ambient.c", "ambient.lambda", "ambient.trace_adjusted",
        "coefficients.theta1", "coefficients.theta2", "coefficients.theta3",
        "coefficients.theta4", "coefficients.theta5",
        "schedule.t_end", "schedule.dt_init", "schedule.dt_min", "schedule.dt_max",
        "schedule.safety", "schedule.diag_every", "schedule.stationary_tol",
        "entropy.T", "entropy.adjoint_sign", "entropy.tol",
        "stability.amplitude", "stability.amplitude_cap", "stability.mode", "stability.component",
        "gradcheck.pairs", "gradcheck.eps",
        "initial.preset", "initial.k", "initial.component", "initial.cutoff",
        "initial.amplitude", "initial.entries",
        "output.checkpoint_at",
    };
    return keys;
}

}  // namespace detail

/// Parses the line-based "key = value" format with [section] headers and
/// '#' comments. Unknown keys are errors; omitted optional keys take the
/// documented defaults. Range validation happens here, not at run time.
inline ExperimentConfig parse_config(const std::string& text,
                                     std::optional<ExperimentKind> kind_override = std::nullopt) {
    using detail::ConfigValue;
    const detail::RawConfig raw = detail::tokenize_config(text);

    for (const auto& [key, value] : raw.entries) {
        bool known = false;
        for (const auto& k : detail::known_config_keys())
            if (k == key) {
                known = true;
                break;
            }
        if (!known) throw ConfigError(value.line, "unknown key '" + key + "'");
    }

    ExperimentConfig cfg;

    if (const auto* v = raw.find("kind")) {
        const auto k = parse_kind(v->text);
        if (!k) throw ConfigError(v->line, "unknown experiment kind '" + v->text + "'");
        cfg.kind = *k;
        if (kind_override && *kind_override != *k)
            throw ConfigError(v->line, "config kind '" + v->text + "' does not match the subcommand");
    } else if (kind_override) {
        cfg.kind = *kind_override;
    } else {
        throw ConfigError("missing required key 'kind'");
    }

    if (const auto* v = raw.find("seed")) cfg.seed = detail::parse_u64(*v, "seed");

    auto require = [&](const char* key) -> const ConfigValue& {
        const auto* v = raw.find(key);
        if (v == nullptr) throw ConfigError(std::string("missing required key '") + key + "'");
        return *v;
    };

    cfg.grid_m = static_cast<int>(detail::parse_int(require("grid.m"), "grid.m"));
    cfg.grid_n = static_cast<int>(detail::parse_int(require("grid.n"), "grid.n"));
    cfg.grid_L = detail::parse_double(require("grid.L"), "grid.L");
    if (cfg.grid_m != 1 && cfg.grid_m != 2) throw ConfigError("grid.m must be 1 or 2");
    if (cfg.grid_n % 2 != 0) throw ConfigError("grid.n: n must be even");
    if (cfg.grid_n < 8) throw ConfigError("grid.n must be >= 8");
    if (!(cfg.grid_L > 0.0)) throw ConfigError("grid.L must be positive");

    if (const auto* v = raw.find("ambient.c")) {
        const double c = detail::parse_double(*v, "ambient.c");
        if (c > 0.0) throw ConfigError(v->line, "ambient.c: c must be <= 0");
        cfg.ambient.c = c;
        cfg.ambient.lambda = std::abs(c);
    }
    if (const auto* v = raw.find("ambient.lambda")) {
        cfg.ambient.lambda = detail::parse_double(*v, "ambient.lambda");
        if (cfg.ambient.lambda < std::abs(cfg.ambient.c))
            throw ConfigError(v->line, "ambient.lambda must be >= |c|");
    }
    if (const auto* v = raw.find("ambient.trace_adjusted"))
        cfg.ambient.trace_adjusted = detail::parse_bool(*v, "ambient.trace_adjusted");

    auto theta = [&](const char* key, double& slot) {
        if (const auto* v = raw.find(key)) slot = detail::parse_double(*v, key);
    };
    theta("coefficients.theta1", cfg.coeffs.theta1);
    theta("coefficients.theta2", cfg.coeffs.theta2);
    theta("coefficients.theta3", cfg.coeffs.theta3);
    theta("coefficients.theta4", cfg.coeffs.theta4);
    theta("coefficients.theta5", cfg.coeffs.theta5);

    const bool needs_schedule = cfg.kind != ExperimentKind::gradcheck;
    if (needs_schedule)
        cfg.schedule.t_end = detail::parse_double(require("schedule.t_end"), "schedule.t_end");
    if (const auto* v = raw.find("schedule.dt_init")) cfg.schedule.dt_init = detail::parse_double(*v, "schedule.dt_init");
    if (const auto* v = raw.find("schedule.dt_min")) cfg.schedule.dt_min = detail::parse_double(*v, "schedule.dt_min");
    if (const auto* v = raw.find("schedule.dt_max")) cfg.schedule.dt_max = detail::parse_double(*v, "schedule.dt_max");
    if (const auto* v = raw.find("schedule.safety")) cfg.schedule.safety = detail::parse_double(*v, "schedule.safety");
    if (const auto* v = raw.find("schedule.diag_every"))
        cfg.schedule.diag_every = static_cast<int>(detail::parse_int(*v, "schedule.diag_every"));
    if (const auto* v = raw.find("schedule.stationary_tol")) {
        cfg.stationary_tol = detail::parse_double(*v, "schedule.stationary_tol");
        if (!(cfg.stationary_tol > 0.0)) throw ConfigError(v->line, "schedule.stationary_tol must be positive");
    }
    if (needs_schedule) {
        try {
            cfg.schedule.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("schedule: ") + e.what());
        }
    }

    if (const auto* v = raw.find("entropy.T")) cfg.entropy_T = detail::parse_double(*v, "entropy.T");
    if (const auto* v = raw.find("entropy.adjoint_sign")) {
        if (v->text == "diffusive") cfg.adjoint_sign = AdjointSign::diffusive;
        else if (v->text == "paper_literal") cfg.adjoint_sign = AdjointSign::paper_literal;
        else throw ConfigError(v->line, "entropy.adjoint_sign must be diffusive or paper_literal");
    }
    if (const auto* v = raw.find("entropy.tol")) {
        cfg.entropy_tol = detail::parse_double(*v, "entropy.tol");
        if (!(cfg.entropy_tol >= 0.0)) throw ConfigError(v->line, "entropy.tol must be >= 0");
    }
    if (cfg.kind == ExperimentKind::entropy && cfg.entropy_horizon() <= cfg.schedule.t_end)
        throw ConfigError("entropy.T must exceed schedule.t_end for entropy runs");

    if (const auto* v = raw.find("stability.amplitude")) cfg.stab_amplitude = detail::parse_double(*v, "stability.amplitude");
    if (const auto* v = raw.find("stability.amplitude_cap"))
        cfg.stab_amplitude_cap = detail::parse_double(*v, "stability.amplitude_cap");
    if (const auto* v = raw.find("stability.mode"))
        cfg.stab_mode = static_cast<int>(detail::parse_int(*v, "stability.mode"));
    if (const auto* v = raw.find("stability.component"))
        cfg.stab_component = static_cast<int>(detail::parse_int(*v, "stability.component"));
    if (cfg.kind == ExperimentKind::stability) {
        if (!(cfg.stab_amplitude > 0.0)) throw ConfigError("stability.amplitude must be positive");
        if (cfg.stab_amplitude > cfg.stab_amplitude_cap)
            throw ConfigError("stability.amplitude exceeds stability.amplitude_cap");
        if (cfg.stab_mode == 0) throw ConfigError("stability.mode must be nonzero (mean-free)");
        const int ncomp = cfg.grid_m == 1 ? 1 : 3;
        if (cfg.stab_component < 0 || cfg.stab_component >= ncomp)
            throw ConfigError("stability.component out of range for this grid dimension");
    }

    if (const auto* v = raw.find("gradcheck.pairs")) {
        cfg.gradcheck_pairs = static_cast<int>(detail::parse_int(*v, "gradcheck.pairs"));
        if (cfg.gradcheck_pairs < 1) throw ConfigError(v->line, "gradcheck.pairs must be >= 1");
    }
    if (const auto* v = raw.find("gradcheck.eps")) {
        cfg.gradcheck_eps = detail::parse_double_list(*v, "gradcheck.eps");
        if (cfg.gradcheck_eps.size() < 3) throw ConfigError(v->line, "gradcheck.eps needs >= 3 entries");
    }

    if (const auto* v = raw.find("initial.preset")) {
        if (v->text == "zero") cfg.initial = InitialKind::zero;
        else if (v->text == "single-mode") cfg.initial = InitialKind::single_mode;
        else if (v->text == "random-smooth") cfg.initial = InitialKind::random_smooth;
        else if (v->text == "constant") cfg.initial = InitialKind::constant;
        else throw ConfigError(v->line, "unknown initial preset '" + v->text + "'");
    }
    if (const auto* v = raw.find("initial.k"))
        cfg.init_mode = static_cast<int>(detail::parse_int(*v, "initial.k"));
    if (const auto* v = raw.find("initial.component"))
        cfg.init_component = static_cast<int>(detail::parse_int(*v, "initial.component"));
    if (const auto* v = raw.find("initial.cutoff"))
        cfg.init_cutoff = static_cast<int>(detail::parse_int(*v, "initial.cutoff"));
    if (const auto* v = raw.find("initial.amplitude"))
        cfg.init_amplitude = detail::parse_double(*v, "initial.amplitude");
    if (const auto* v = raw.find("initial.entries")) cfg.init_entries = detail::parse_double_list(*v, "initial.entries");

    if (cfg.initial == InitialKind::single_mode) {
        if (cfg.init_mode == 0) throw ConfigError("initial.k must be nonzero for single-mode data");
        const int ncomp = cfg.grid_m == 1 ? 1 : 3;
        if (cfg.init_component < 0 || cfg.init_component >= ncomp)
            throw ConfigError("initial.component out of range for this grid dimension");
    }
    if (cfg.initial == InitialKind::random_smooth) {
        if (cfg.init_cutoff < 1 || cfg.init_cutoff >= cfg.grid_n / 2)
            throw ConfigError("initial.cutoff must lie in [1, n/2)");
        if (!(cfg.init_amplitude > 0.0)) throw ConfigError("initial.amplitude must be positive");
    }
    if (cfg.initial == InitialKind::constant) {
        const std::size_t need = cfg.grid_m == 1 ? 1 : 3;
        if (cfg.init_entries.size() != need)
            throw ConfigError("initial.entries must list the " + std::to_string(need) +
                              " upper-triangle components");
    }

    if (const auto* v = raw.find("output.checkpoint_at")) {
        cfg.checkpoint_at = detail::parse_double(*v, "output.checkpoint_at");
        if (!(*cfg.checkpoint_at >= 0.0)) throw ConfigError(v->line, "output.checkpoint_at must be >= 0");
    }

    return cfg;
}

inline ExperimentConfig load_config_file(const std::string& path,
                                         std::optional<ExperimentKind> kind_override = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), kind_override);
}

/// Builds the configured initial tensor field.
inline SymTensorField build_initial_field(const ExperimentConfig& cfg, const Grid& g) {
    switch (cfg.initial) {
        case InitialKind::zero:
            return SymTensorField(g);
        case InitialKind::single_mode: {
            SymTensorField f(g);
            ScalarField mode(static_cast<std::size_t>(g.num_points()));
            const int n = g.n();
            for (int i = 0; i < g.num_points(); ++i) {
                const int ix = g.dim() == 1 ? i : i % n;
                mode[static_cast<std::size_t>(i)] =
                    cfg.init_amplitude *
                    std::cos(2.0 * std::numbers::pi * cfg.init_mode * ix / static_cast<double>(n));
            }
            f.set_component(cfg.init_component, mode);
            return f;
        }
        case InitialKind::random_smooth: {
            RandomSmoothSpec spec;
            spec.seed = cfg.seed;
            spec.cutoff = cfg.init_cutoff;
            spec.amplitude = cfg.init_amplitude;
            return random_smooth_field(g, spec);
        }
        case InitialKind::constant: {
            SymMat v = SymMat::zero(g.dim());
            for (std::size_t c = 0; c < cfg.init_entries.size(); ++c) v.a[c] = cfg.init_entries[c];
            return SymTensorField::constant(g, v);
        }
    }
    throw std::logic_error("unreachable initial kind");
}

}  // namespace mflow
