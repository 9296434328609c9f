#pragma once

// Artifacts: CSV tables, JSON reports and manifests, a small log-log SVG
// plot and a binary field snapshot.
//
// Snapshot layout (little-endian):
//   char[4] "CSLF", uint32 version, uint32 n,
//   int64 size[n], int64 lo[n], float64 L, float64 lambda,
//   then total() complex coefficients as (re, im) float64 pairs, row-major.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "csl/config.hpp"
#include "csl/errors.hpp"
#include "csl/grid.hpp"
#include "csl/sweep.hpp"

namespace csl {

inline constexpr const char* kVersion = "0.3.1";

using ordered_json = nlohmann::ordered_json;

/// 12 significant digits, scientific.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.11e", v);
    return buf;
}

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add(std::vector<std::string> row) {
        if (row.size() != header_.size()) throw DomainError("CSV row width does not match the header");
        rows_.push_back(std::move(row));
    }

    std::string str() const {
        std::string out;
        auto line = [&](const std::vector<std::string>& r) {
            for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + r[i];
            out += '\n';
        };
        line(header_);
        for (const auto& r : rows_) line(r);
        return out;
    }

    void write(const std::filesystem::path& path) const { write_text(path, str()); }

    static void write_text(const std::filesystem::path& path, const std::string& text) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw DomainError("cannot open " + path.string() + " for writing");
        out << text;
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

inline std::string p_label(double p) { return std::isinf(p) ? "inf" : format_number(p); }

inline CsvTable sweep_csv(const SweepReport& rep) {
    CsvTable t({"lambda", "p", "norm_f", "norm_At_short", "norm_At_full", "quotient"});
    for (const auto& c : rep.cells) {
        if (!c.ok) continue;
        for (std::size_t i = 0; i < rep.ps.size(); ++i)
            t.add({format_number(c.lambda), p_label(rep.ps[i]), format_number(c.norm_f[i]),
                   format_number(c.norm_short[i]), c.norm_full.empty() ? "nan" : format_number(c.norm_full[i]),
                   format_number(c.quotient[i])});
    }
    return t;
}

inline CsvTable slopes_csv(const SweepReport& rep) {
    CsvTable t({"p", "quantity", "slope", "expected", "intercept", "max_residual"});
    for (const auto& s : rep.slopes) {
        auto row = [&](const char* what, const SlopeFit& f, double expected) {
            t.add({p_label(s.p), what, format_number(f.slope), format_number(expected), format_number(f.intercept),
                   format_number(f.max_residual)});
        };
        row("input", s.input, s.expected_input);
        row("output", s.output, s.expected_output);
        row("quotient", s.quotient, s.expected_quotient);
    }
    return t;
}

inline ordered_json json_number(double v) {
    if (std::isfinite(v)) return v;
    return format_number(v);
}

inline ordered_json config_json(const ExperimentConfig& cfg) {
    ordered_json j;
    j["n"] = cfg.curve.dimension();
    j["curve"] = to_string(cfg.curve.kind());
    j["domain"] = {cfg.curve.domain().lo, cfg.curve.domain().hi};
    j["rho"] = cfg.rho;
    j["c0"] = cfg.c0;
    j["aperture"] = cfg.aperture;
    j["delta"] = cfg.delta;
    j["newton_tolerance"] = cfg.newton_tolerance;
    j["grid_policy"] = cfg.grid.kind == GridPolicyKind::window ? "window" : "centered";
    j["points_per_radius"] = cfg.grid.points_per_radius;
    j["oversample"] = cfg.grid.oversample;
    j["L"] = cfg.grid.L;
    j["N"] = cfg.grid.N;
    ordered_json ps = ordered_json::array();
    for (double p : cfg.ps) ps.push_back(json_number(p));
    j["p"] = ps;
    j["lambda"] = cfg.lambdas;
    j["samples"] = cfg.window_samples;
    j["full_samples"] = cfg.full_window_samples;
    j["epsilon"] = cfg.epsilon;
    j["quadrature_rel_tol"] = cfg.quadrature.rel_tol;
    j["quadrature_abs_tol"] = cfg.quadrature.abs_tol;
    return j;
}

inline ordered_json config_json(const RunConfig& rc) {
    auto j = config_json(rc.experiment);
    j["window"] = rc.window == WindowKind::full ? "full" : "short";
    j["memory_cap"] = rc.memory_cap;
    j["seed"] = rc.seed;
    j["output_dir"] = rc.output_dir;
    j["svg"] = rc.svg;
    return j;
}

inline ordered_json report_json(const SweepReport& rep) {
    ordered_json j;
    j["n"] = rep.n;
    ordered_json ps = ordered_json::array();
    for (double p : rep.ps) ps.push_back(json_number(p));
    j["p"] = ps;
    j["lambda"] = rep.lambdas;
    ordered_json cells = ordered_json::array();
    for (const auto& c : rep.cells) {
        ordered_json cj;
        cj["lambda"] = c.lambda;
        cj["ok"] = c.ok;
        if (!c.ok) {
            cj["failure"] = c.failure;
            cells.push_back(cj);
            continue;
        }
        cj["pieces"] = c.pieces;
        cj["grid_size"] = c.grid_size;
        cj["grid_L"] = c.grid_L;
        cj["norm_f"] = c.norm_f;
        cj["norm_At_short"] = c.norm_short;
        cj["norm_At_full"] = c.norm_full;
        cj["quotient"] = c.quotient;
        cj["piece_min_ratio_sqrt_lambda"] = c.piece_min_ratio_sqrt_lambda;
        cj["piece_min_ratio_g"] = c.piece_min_ratio_g;
        cj["piece_min_alpha_c"] = c.piece_min_alpha_c;
        cj["orthogonality_defect"] = c.orthogonality_defect;
        cj["concentration"] = c.concentration;
        cells.push_back(cj);
    }
    j["cells"] = cells;
    ordered_json slopes = ordered_json::array();
    for (const auto& s : rep.slopes) {
        auto fit = [](const SlopeFit& f, double expected) {
            ordered_json o;
            o["slope"] = f.slope;
            o["expected"] = expected;
            o["intercept"] = f.intercept;
            o["max_residual"] = f.max_residual;
            return o;
        };
        ordered_json sj;
        sj["p"] = json_number(s.p);
        sj["input"] = fit(s.input, s.expected_input);
        sj["output"] = fit(s.output, s.expected_output);
        sj["quotient"] = fit(s.quotient, s.expected_quotient);
        slopes.push_back(sj);
    }
    j["slopes"] = slopes;
    if (!rep.slope_failure.empty()) j["slope_failure"] = rep.slope_failure;
    j["config"] = config_json(rep.config);
    return j;
}

inline ordered_json manifest_json(const ordered_json& config, const std::string& command,
                                  const std::vector<std::string>& artifacts, int jobs) {
    ordered_json j;
    j["tool"] = "csl_lab";
    j["version"] = kVersion;
    j["command"] = command;
    j["jobs"] = jobs;
    j["config"] = config;
    j["artifacts"] = artifacts;
    return j;
}

inline void write_json(const std::filesystem::path& path, const ordered_json& j) {
    CsvTable::write_text(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

struct Series {
    std::string label;
    std::string color;
    std::vector<std::pair<double, double>> points; // (lambda, value)
    std::optional<SlopeFit> fit;
};

/// Log2-log2 scatter with fitted lines and axis labels.
inline std::string loglog_svg(const std::vector<Series>& series, const std::string& title) {
    const double W = 640, H = 440, left = 70, right = 170, top = 36, bottom = 50;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            if (!(x > 0 && y > 0)) continue;
            xmin = std::min(xmin, std::log2(x));
            xmax = std::max(xmax, std::log2(x));
            ymin = std::min(ymin, std::log2(y));
            ymax = std::max(ymax, std::log2(y));
        }
    if (xmin > xmax) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (xmax - xmin < 1e-9) xmax = xmin + 1;
    if (ymax - ymin < 1e-9) ymax = ymin + 1;
    const double padx = 0.05 * (xmax - xmin), pady = 0.08 * (ymax - ymin);
    xmin -= padx, xmax += padx, ymin -= pady, ymax += pady;
    const double pw = W - left - right, ph = H - top - bottom;
    auto X = [&](double lx) { return left + (lx - xmin) / (xmax - xmin) * pw; };
    auto Y = [&](double ly) { return top + (ymax - ly) / (ymax - ymin) * ph; };

    std::ostringstream s;
    s.precision(6);
    s << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "' viewBox='0 0 " << W << ' '
      << H << "'>\n";
    s << "<rect width='100%' height='100%' fill='white'/>\n";
    s << "<text x='" << left << "' y='22' font-family='sans-serif' font-size='14'>" << title << "</text>\n";
    s << "<line x1='" << left << "' y1='" << top + ph << "' x2='" << left + pw << "' y2='" << top + ph
      << "' stroke='black'/>\n";
    s << "<line x1='" << left << "' y1='" << top << "' x2='" << left << "' y2='" << top + ph << "' stroke='black'/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double lx = xmin + (xmax - xmin) * i / 4.0, ly = ymin + (ymax - ymin) * i / 4.0;
        s << "<text x='" << X(lx) << "' y='" << top + ph + 16 << "' font-size='10' text-anchor='middle'>" << lx
          << "</text>\n";
        s << "<text x='" << left - 6 << "' y='" << Y(ly) + 3 << "' font-size='10' text-anchor='end'>" << ly
          << "</text>\n";
    }
    s << "<text x='" << left + pw / 2 << "' y='" << H - 12
      << "' font-size='12' text-anchor='middle'>log2 lambda</text>\n";
    s << "<text x='16' y='" << top + ph / 2 << "' font-size='12' transform='rotate(-90 16 " << top + ph / 2
      << ")' text-anchor='middle'>log2 value</text>\n";
    double legend_y = top + 10;
    for (const auto& ser : series) {
        for (const auto& [x, y] : ser.points)
            if (x > 0 && y > 0)
                s << "<circle cx='" << X(std::log2(x)) << "' cy='" << Y(std::log2(y)) << "' r='3' fill='" << ser.color
                  << "'/>\n";
        if (ser.fit) {
            const double a = xmin + padx, b = xmax - padx;
            s << "<line x1='" << X(a) << "' y1='" << Y(ser.fit->intercept + ser.fit->slope * a) << "' x2='" << X(b)
              << "' y2='" << Y(ser.fit->intercept + ser.fit->slope * b) << "' stroke='" << ser.color
              << "' stroke-dasharray='4 3'/>\n";
        }
        s << "<circle cx='" << left + pw + 14 << "' cy='" << legend_y - 4 << "' r='3' fill='" << ser.color << "'/>\n";
        s << "<text x='" << left + pw + 22 << "' y='" << legend_y << "' font-size='11'>" << ser.label;
        if (ser.fit) s << " (" << std::fixed << std::setprecision(3) << ser.fit->slope << std::defaultfloat << ")";
        s << "</text>\n";
        legend_y += 16;
    }
    s << "</svg>\n";
    return s.str();
}

/// Quotient series per p.
inline std::string sweep_svg(const SweepReport& rep) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::vector<Series> series;
    for (std::size_t i = 0; i < rep.ps.size(); ++i) {
        Series s;
        s.label = "quotient p=" + (std::isinf(rep.ps[i]) ? std::string("inf") : std::to_string(static_cast<int>(rep.ps[i])));
        s.color = colors[i % 6];
        for (const auto& c : rep.cells)
            if (c.ok) s.points.emplace_back(c.lambda, c.quotient[i]);
        if (i < rep.slopes.size()) s.fit = rep.slopes[i].quotient;
        series.push_back(std::move(s));
    }
    return loglog_svg(series, "||A_t f|| / ||f||, n=" + std::to_string(rep.n));
}

// ---------------------------------------------------------------------------

namespace detail {

template <class T>
void put(std::ostream& out, T v) {
    static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get(std::istream& in) {
    unsigned char b[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(b), sizeof(T))) throw DomainError("snapshot truncated");
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}

} // namespace detail

inline constexpr std::uint32_t kSnapshotVersion = 1;

struct Snapshot {
    GridSpec grid;
    double lambda = 0;
    std::vector<cplx> coefficients;
};

inline void write_snapshot(const std::filesystem::path& path, const SpectralField& f, double lambda) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DomainError("cannot open " + path.string() + " for writing");
    const auto& g = f.grid();
    out.write("CSLF", 4);
    detail::put<std::uint32_t>(out, kSnapshotVersion);
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(g.n));
    for (auto s : g.size) detail::put<std::int64_t>(out, s);
    for (auto l : g.lo) detail::put<std::int64_t>(out, l);
    detail::put<double>(out, g.L);
    detail::put<double>(out, lambda);
    for (const auto& c : f.coefficients()) {
        detail::put<double>(out, c.real());
        detail::put<double>(out, c.imag());
    }
}

inline Snapshot read_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DomainError("cannot open " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::string(magic, 4) != "CSLF") throw DomainError("not a field snapshot");
    if (detail::get<std::uint32_t>(in) != kSnapshotVersion) throw DomainError("unsupported snapshot version");
    Snapshot s;
    s.grid.n = static_cast<int>(detail::get<std::uint32_t>(in));
    if (s.grid.n < 1 || s.grid.n > 16) throw DomainError("snapshot dimension out of range");
    for (int k = 0; k < s.grid.n; ++k) s.grid.size.push_back(detail::get<std::int64_t>(in));
    for (int k = 0; k < s.grid.n; ++k) s.grid.lo.push_back(detail::get<std::int64_t>(in));
    s.grid.L = detail::get<double>(in);
    s.lambda = detail::get<double>(in);
    s.coefficients.resize(s.grid.total());
    for (auto& c : s.coefficients) {
        const double re = detail::get<double>(in);
        const double im = detail::get<double>(in);
        c = {re, im};
    }
    return s;
}

} // namespace csl
