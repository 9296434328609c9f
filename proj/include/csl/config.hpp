#pragma once

// Run configuration: sectioned key = value text, e.g.
//
//     [curve]
//     n = 3
//     kind = moment            ; moment | perturbed-moment | table
//     perturb1 = 0 0 0.01      ; coefficients of s^j added to component 1
//     component2 = poly 0 0 0.5 ; cos 0.01 3 0
//
//     [experiment]
//     p = 4 6 8
//     lambda = 32 64 128 256
//
// Every violation is collected before anything is reported.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "csl/curve.hpp"
#include "csl/errors.hpp"
#include "csl/sweep.hpp"
#include "csl/synth.hpp"

namespace csl {

inline constexpr double kDefaultMemoryCap = 8.0 * 1024 * 1024 * 1024;

struct RunConfig {
    int n = 3;
    std::string curve_kind = "moment";
    ExperimentConfig experiment;
    WindowKind window = WindowKind::short_window;
    double memory_cap = kDefaultMemoryCap;
    std::string output_dir = "out";
    bool svg = true;
    std::uint64_t seed = 0;
    std::string source; // the text this was parsed from
};

/// Aggregated configuration problems.
class ConfigErrors : public ConfigurationError {
public:
    explicit ConfigErrors(std::vector<std::string> problems)
        : ConfigurationError(join(problems)), problems_(std::move(problems)) {}
    const std::vector<std::string>& problems() const { return problems_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s = std::to_string(v.size()) + " configuration problem(s):";
        for (const auto& p : v) s += "\n  - " + p;
        return s;
    }
    std::vector<std::string> problems_;
};

namespace detail {

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

inline std::string nearest(const std::string& key, const std::vector<std::string>& valid) {
    std::string best;
    auto best_d = std::numeric_limits<std::size_t>::max();
    for (const auto& v : valid) {
        const auto d = edit_distance(key, v);
        if (d < best_d) {
            best_d = d;
            best = v;
        }
    }
    return best;
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> words(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

/// Collects typed reads and their failures.
class Reader {
public:
    Reader(const boost::property_tree::ptree& tree, std::vector<std::string>& problems)
        : tree_(tree), problems_(problems) {}

    std::optional<std::string> raw(const std::string& section, const std::string& key) const {
        const auto s = tree_.get_child_optional(section);
        if (!s) return std::nullopt;
        const auto v = s->get_optional<std::string>(key);
        if (!v) return std::nullopt;
        return trim(*v);
    }

    double number(const std::string& section, const std::string& key, double fallback) {
        const auto v = raw(section, key);
        if (!v) return fallback;
        return parse_number(section + "." + key, *v, fallback);
    }

    std::vector<double> numbers(const std::string& section, const std::string& key, std::vector<double> fallback) {
        const auto v = raw(section, key);
        if (!v) return fallback;
        std::vector<double> out;
        for (const auto& w : words(*v)) out.push_back(parse_number(section + "." + key, w, 0.0));
        if (out.empty()) problems_.push_back(section + "." + key + ": expected at least one value");
        return out;
    }

    std::string text(const std::string& section, const std::string& key, std::string fallback) {
        const auto v = raw(section, key);
        return v ? *v : fallback;
    }

    bool flag(const std::string& section, const std::string& key, bool fallback) {
        const auto v = raw(section, key);
        if (!v) return fallback;
        if (*v == "true" || *v == "yes" || *v == "1") return true;
        if (*v == "false" || *v == "no" || *v == "0") return false;
        problems_.push_back(section + "." + key + ": expected true/false, got '" + *v + "'");
        return fallback;
    }

    double parse_number(const std::string& where, const std::string& w, double fallback) {
        if (w == "inf" || w == "infinity") return std::numeric_limits<double>::infinity();
        char* end = nullptr;
        const double v = std::strtod(w.c_str(), &end);
        if (end == w.c_str() || *end != '\0') {
            problems_.push_back(where + ": '" + w + "' is not a number");
            return fallback;
        }
        return v;
    }

private:
    const boost::property_tree::ptree& tree_;
    std::vector<std::string>& problems_;
};

/// "poly c0 c1 ... ; cos A w phi ; sin A w phi"
inline ComponentFunction parse_component(const std::string& where, const std::string& text,
                                         std::vector<std::string>& problems) {
    ComponentFunction f;
    std::stringstream terms(text);
    for (std::string term; std::getline(terms, term, ';');) {
        auto w = words(term);
        if (w.empty()) continue;
        std::vector<double> v;
        bool ok = true;
        for (std::size_t i = 1; i < w.size(); ++i) {
            char* end = nullptr;
            v.push_back(std::strtod(w[i].c_str(), &end));
            ok &= (end != w[i].c_str() && *end == '\0');
        }
        if (!ok) {
            problems.push_back(where + ": non-numeric coefficient in '" + trim(term) + "'");
            continue;
        }
        if (w[0] == "poly") {
            f.poly = v;
        } else if ((w[0] == "cos" || w[0] == "sin") && v.size() == 3) {
            const double shift = w[0] == "sin" ? -std::numbers::pi / 2.0 : 0.0;
            f.waves.push_back({v[0], v[1], v[2] + shift});
        } else {
            problems.push_back(where + ": expected 'poly c0 c1 ...', 'cos A w phi' or 'sin A w phi', got '" +
                               trim(term) + "'");
        }
    }
    return f;
}

inline bool is_power_of_two(double x) {
    if (!(x >= 1.0) || x > 1e15 || x != std::floor(x)) return false;
    const auto v = static_cast<std::uint64_t>(x);
    return (v & (v - 1)) == 0;
}

} // namespace detail

/// "8589934592", "8GiB", "512MiB", "64KiB".
inline double parse_bytes(const std::string& text) {
    const auto t = detail::trim(text);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end == t.c_str()) throw ConfigurationError("memory size '" + text + "' is not a number");
    const std::string unit = detail::trim(end);
    double scale = 1.0;
    if (unit == "KiB") scale = 1024.0;
    else if (unit == "MiB") scale = 1024.0 * 1024.0;
    else if (unit == "GiB") scale = 1024.0 * 1024.0 * 1024.0;
    else if (!unit.empty() && unit != "B") throw ConfigurationError("unknown memory unit '" + unit + "'");
    if (!(v > 0.0)) throw ConfigurationError("memory size must be positive");
    return v * scale;
}

inline const std::map<std::string, std::vector<std::string>>& config_schema() {
    static const std::map<std::string, std::vector<std::string>> schema{
        {"curve", {"n", "kind", "domain"}}, // plus componentK / perturbK
        {"construction", {"rho", "c0", "aperture", "delta", "newton_tolerance"}},
        {"grid", {"policy", "points_per_radius", "oversample", "L", "N", "memory_cap"}},
        {"experiment",
         {"p", "lambda", "window", "samples", "full_samples", "epsilon", "jobs", "seed", "quadrature_rel_tol",
          "quadrature_abs_tol"}},
        {"output", {"dir", "svg"}},
    };
    return schema;
}

/// Memory estimate, 2 * 16 bytes per grid point of the largest lambda cell.
inline double estimate_memory(const ExperimentConfig& cfg) {
    double worst = 0.0;
    for (double lam : cfg.lambdas) worst = std::max(worst, make_grid(cfg.spec(lam), cfg.grid).memory_bytes());
    return worst;
}

/// Memory cap, from CSL_MEMORY_CAP when set.
inline double memory_cap_from_env(double fallback) {
    if (const char* env = std::getenv("CSL_MEMORY_CAP"); env && *env) return parse_bytes(env);
    return fallback;
}

inline RunConfig parse_config(const std::string& text) {
    namespace pt = boost::property_tree;
    std::vector<std::string> problems;
    RunConfig rc;
    rc.source = text;

    // Boost's INI reader only knows ';' comments at line start; accept '#'
    // anywhere ('; ' inside a value separates table-curve terms).
    std::string cleaned;
    {
        std::istringstream in(text);
        for (std::string line; std::getline(in, line);) {
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            cleaned += line;
            cleaned += '\n';
        }
    }
    pt::ptree tree;
    try {
        std::istringstream in(cleaned);
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigErrors({"line " + std::to_string(e.line()) + ": " + e.message()});
    }

    // Unknown sections and keys.
    const auto& schema = config_schema();
    std::vector<std::string> section_names;
    for (const auto& [s, _] : schema) section_names.push_back(s);
    for (const auto& [section, body] : tree) {
        const auto it = schema.find(section);
        if (body.empty() && !body.data().empty()) {
            problems.push_back("key '" + section + "' outside any section");
            continue;
        }
        if (it == schema.end()) {
            problems.push_back("unknown section [" + section + "]; did you mean [" +
                               detail::nearest(section, section_names) + "]?");
            continue;
        }
        for (const auto& [key, _] : body) {
            if (std::find(it->second.begin(), it->second.end(), key) != it->second.end()) continue;
            if (section == "curve" && (key.rfind("component", 0) == 0 || key.rfind("perturb", 0) == 0)) continue;
            auto valid = it->second;
            if (section == "curve") {
                valid.push_back("component1");
                valid.push_back("perturb1");
            }
            problems.push_back("unknown key '" + key + "' in [" + section + "]; did you mean '" +
                               detail::nearest(key, valid) + "'?");
        }
    }

    detail::Reader rd(tree, problems);
    auto& ex = rc.experiment;

    // [curve]
    const double n_raw = rd.number("curve", "n", 3);
    if (n_raw != std::floor(n_raw) || n_raw < 2 || n_raw > 8) problems.push_back("curve.n must be an integer in [2, 8]");
    rc.n = static_cast<int>(std::clamp(n_raw, 2.0, 8.0));
    rc.curve_kind = rd.text("curve", "kind", "moment");
    const auto dom = rd.numbers("curve", "domain", {-2.0, 2.0});
    Interval domain{-2.0, 2.0};
    if (dom.size() != 2 || !(dom[0] < dom[1])) problems.push_back("curve.domain must be two increasing numbers");
    else domain = {dom[0], dom[1]};

    auto indexed = [&](const std::string& prefix) {
        std::map<int, std::string> out;
        if (const auto s = tree.get_child_optional("curve")) {
            for (const auto& [key, v] : *s) {
                if (key.rfind(prefix, 0) != 0) continue;
                const auto idx = key.substr(prefix.size());
                char* end = nullptr;
                const long k = std::strtol(idx.c_str(), &end, 10);
                if (idx.empty() || *end != '\0' || k < 1 || k > rc.n)
                    problems.push_back("curve." + key + ": index must be in 1.." + std::to_string(rc.n));
                else
                    out[static_cast<int>(k)] = v.data();
            }
        }
        return out;
    };
    try {
        if (rc.curve_kind == "moment") {
            if (!indexed("perturb").empty() || !indexed("component").empty())
                problems.push_back("curve: perturbK/componentK keys need kind = perturbed-moment or table");
            ex.curve = CurveSpec::moment(rc.n, domain);
        } else if (rc.curve_kind == "perturbed-moment") {
            std::vector<std::vector<double>> pert(static_cast<std::size_t>(rc.n));
            for (const auto& [k, v] : indexed("perturb"))
                pert[static_cast<std::size_t>(k - 1)] = rd.numbers("curve", "perturb" + std::to_string(k), {});
            ex.curve = CurveSpec::perturbed_moment(rc.n, pert, domain);
        } else if (rc.curve_kind == "table") {
            const auto comps = indexed("component");
            if (comps.size() != static_cast<std::size_t>(rc.n)) {
                problems.push_back("curve: table curves need component1..component" + std::to_string(rc.n));
            } else {
                std::vector<ComponentFunction> fs;
                for (const auto& [k, v] : comps)
                    fs.push_back(detail::parse_component("curve.component" + std::to_string(k), v, problems));
                ex.curve = CurveSpec::table(fs, domain);
            }
        } else {
            problems.push_back("curve.kind '" + rc.curve_kind + "' unknown; did you mean '" +
                               detail::nearest(rc.curve_kind, {"moment", "perturbed-moment", "table"}) + "'?");
        }
    } catch (const Error& e) {
        problems.push_back(std::string("curve: ") + e.what());
    }

    // [construction]
    ex.rho = rd.number("construction", "rho", ex.rho);
    ex.c0 = rd.number("construction", "c0", ex.c0);
    ex.aperture = rd.number("construction", "aperture", ex.aperture);
    ex.delta = rd.number("construction", "delta", ex.delta);
    ex.newton_tolerance = rd.number("construction", "newton_tolerance", ex.newton_tolerance);
    if (!(ex.rho > 0.0 && ex.rho < 1.0)) problems.push_back("construction.rho must lie in (0,1)");
    if (!(ex.c0 > 0.0)) problems.push_back("construction.c0 must be positive");
    if (!(ex.aperture > 0.0)) problems.push_back("construction.aperture must be positive");
    if (!(ex.delta > 0.0)) problems.push_back("construction.delta must be positive");
    else if (!domain.contains(Interval{-ex.delta, ex.delta}))
        problems.push_back("construction.delta: cutoff support exceeds the curve domain");
    if (!(ex.newton_tolerance > 0.0 && ex.newton_tolerance < 1e-3))
        problems.push_back("construction.newton_tolerance must lie in (0, 1e-3)");
    if (ex.c0 > ex.aperture)
        problems.push_back("construction.c0 must not exceed construction.aperture (centers leave the cone chart)");

    // [grid]
    const auto policy = rd.text("grid", "policy", "window");
    if (policy == "window") ex.grid.kind = GridPolicyKind::window;
    else if (policy == "centered") ex.grid.kind = GridPolicyKind::centered;
    else problems.push_back("grid.policy '" + policy + "' unknown; expected window or centered");
    ex.grid.points_per_radius = static_cast<int>(rd.number("grid", "points_per_radius", ex.grid.points_per_radius));
    ex.grid.oversample = rd.number("grid", "oversample", ex.grid.oversample);
    ex.grid.L = rd.number("grid", "L", ex.grid.L);
    ex.grid.N = static_cast<std::int64_t>(rd.number("grid", "N", static_cast<double>(ex.grid.N)));
    if (ex.grid.points_per_radius < 1 || ex.grid.points_per_radius > 64)
        problems.push_back("grid.points_per_radius must lie in [1, 64]");
    if (!(ex.grid.oversample >= 1.0 && ex.grid.oversample <= 8.0))
        problems.push_back("grid.oversample must lie in [1, 8]");
    if (!(ex.grid.L > 0.0)) problems.push_back("grid.L must be positive");
    if (ex.grid.N < 0 || (ex.grid.N > 0 && ex.grid.N < 2)) problems.push_back("grid.N must be 0 (auto) or >= 2");
    try {
        if (const auto cap = rd.raw("grid", "memory_cap")) rc.memory_cap = parse_bytes(*cap);
        rc.memory_cap = memory_cap_from_env(rc.memory_cap);
    } catch (const Error& e) {
        problems.push_back(std::string("grid.memory_cap: ") + e.what());
    }

    // [experiment]
    ex.ps = rd.numbers("experiment", "p", ex.ps);
    for (double p : ex.ps)
        if (!(p >= 2.0)) problems.push_back("experiment.p: every p must be >= 2 (got " + std::to_string(p) + ")");
    ex.lambdas = rd.numbers("experiment", "lambda", ex.lambdas);
    for (double l : ex.lambdas)
        if (!detail::is_power_of_two(l) || l < 2.0)
            problems.push_back("experiment.lambda: " + std::to_string(l) + " is not a dyadic value >= 2");
    if (std::set<double>(ex.lambdas.begin(), ex.lambdas.end()).size() != ex.lambdas.size())
        problems.push_back("experiment.lambda: values must be distinct");
    std::sort(ex.lambdas.begin(), ex.lambdas.end());
    const auto window = rd.text("experiment", "window", "short");
    if (window == "short") rc.window = WindowKind::short_window;
    else if (window == "full") rc.window = WindowKind::full;
    else problems.push_back("experiment.window '" + window + "' unknown; expected short or full");
    ex.window_samples = static_cast<int>(rd.number("experiment", "samples", ex.window_samples));
    ex.full_window_samples = static_cast<int>(rd.number("experiment", "full_samples", ex.full_window_samples));
    if (ex.window_samples < 5 || ex.window_samples > 1025) problems.push_back("experiment.samples must lie in [5, 1025]");
    if (ex.full_window_samples != 0 && (ex.full_window_samples < 5 || ex.full_window_samples > 1025))
        problems.push_back("experiment.full_samples must be 0 or lie in [5, 1025]");
    ex.epsilon = rd.number("experiment", "epsilon", ex.epsilon);
    if (!(ex.epsilon > 0.0 && ex.epsilon <= 1.0)) problems.push_back("experiment.epsilon must lie in (0, 1]");
    ex.jobs = static_cast<int>(rd.number("experiment", "jobs", ex.jobs));
    if (ex.jobs < 1 || ex.jobs > 1024) problems.push_back("experiment.jobs must lie in [1, 1024]");
    rc.seed = static_cast<std::uint64_t>(rd.number("experiment", "seed", 0));
    ex.quadrature.rel_tol = rd.number("experiment", "quadrature_rel_tol", ex.quadrature.rel_tol);
    ex.quadrature.abs_tol = rd.number("experiment", "quadrature_abs_tol", ex.quadrature.abs_tol);
    if (!(ex.quadrature.rel_tol > 0.0 && ex.quadrature.rel_tol < 1e-2))
        problems.push_back("experiment.quadrature_rel_tol must lie in (0, 1e-2)");
    if (!(ex.quadrature.abs_tol > 0.0 && ex.quadrature.abs_tol < 1e-2))
        problems.push_back("experiment.quadrature_abs_tol must lie in (0, 1e-2)");

    // [output]
    rc.output_dir = rd.text("output", "dir", rc.output_dir);
    rc.svg = rd.flag("output", "svg", rc.svg);

    // Geometry and memory only make sense once everything above parsed.
    if (problems.empty()) {
        try {
            const double need = estimate_memory(ex);
            if (need > rc.memory_cap) {
                std::ostringstream msg;
                msg << "memory: largest grid needs " << need / (1024.0 * 1024.0 * 1024.0) << " GiB (2*16 bytes per point) "
                    << "but the cap is " << rc.memory_cap / (1024.0 * 1024.0 * 1024.0) << " GiB";
                problems.push_back(msg.str());
            }
        } catch (const Error& e) {
            problems.push_back(std::string("construction: ") + e.what());
        }
    }
    if (!problems.empty()) throw ConfigErrors(problems);
    return rc;
}

} // namespace csl
