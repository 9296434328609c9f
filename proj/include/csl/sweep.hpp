#pragma once

// Quantitative experiments on the counterexample: exponent table, lambda
// sweeps with log-log slope fits, per-piece L^2 lower bounds, orthogonality
// and concentration.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "csl/avgop.hpp"
#include "csl/errors.hpp"
#include "csl/oscillator.hpp"
#include "csl/parallel.hpp"
#include "csl/synth.hpp"

namespace csl {

// ---------------------------------------------------------------------------
// Exact rationals for the exponent table.

struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    constexpr Rational() = default;
    constexpr Rational(std::int64_t v) : num(v), den(1) {} // NOLINT(google-explicit-constructor)
    constexpr Rational(std::int64_t a, std::int64_t b) : num(a), den(b) {
        if (den == 0) throw DomainError("rational with zero denominator");
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const auto g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }

    friend constexpr Rational operator+(Rational a, Rational b) { return {a.num * b.den + b.num * a.den, a.den * b.den}; }
    friend constexpr Rational operator-(Rational a, Rational b) { return {a.num * b.den - b.num * a.den, a.den * b.den}; }
    friend constexpr Rational operator*(Rational a, Rational b) { return {a.num * b.num, a.den * b.den}; }
    friend constexpr Rational operator/(Rational a, Rational b) { return {a.num * b.den, a.den * b.num}; }
    friend constexpr bool operator==(Rational a, Rational b) { return a.num == b.num && a.den == b.den; }
    friend constexpr bool operator<(Rational a, Rational b) { return a.num * b.den < b.num * a.den; }
    friend constexpr bool operator<=(Rational a, Rational b) { return !(b < a); }
};

/// sigma(p, n) by its piecewise form: 1/n on [2,4], (1/n)(1/2 + 2/p) on
/// [4, 4(n-1)], 2/p beyond.
inline Rational critical_exponent(Rational p, int n) {
    if (n < 2) throw DomainError("critical_exponent requires n >= 2");
    if (p < Rational(2)) throw DomainError("critical_exponent requires p >= 2");
    const Rational inv_n(1, n);
    if (p <= Rational(4)) return inv_n;
    if (p <= Rational(4 * (n - 1))) return inv_n * (Rational(1, 2) + Rational(2) / p);
    return Rational(2) / p;
}

inline double critical_exponent(double p, int n) {
    if (n < 2) throw DomainError("critical_exponent requires n >= 2");
    if (!(p >= 2.0)) throw DomainError("critical_exponent requires p >= 2");
    if (std::isinf(p)) return 0.0;
    if (p <= 4.0) return 1.0 / n;
    if (p <= 4.0 * (n - 1)) return (0.5 + 2.0 / p) / n;
    return 2.0 / p;
}

// Predicted exponents of the construction.
inline double expected_input_slope(int n, double p) { return (n + 1.0) / n - (n - 1.0) / (n * p); }
inline double expected_output_slope(int n, double p) { return 1.0 - 1.0 / p + 1.0 / (2.0 * n) - 1.0 / (n * p); }
inline double expected_quotient_slope(int n, double p) { return -(0.5 + 2.0 / p) / n; }

// ---------------------------------------------------------------------------

struct SlopeFit {
    double slope = 0;
    double intercept = 0;
    double max_residual = 0;
};

/// Least squares of log2(value) against log2(lambda).
inline SlopeFit fit_slope(const std::vector<std::pair<double, double>>& pairs) {
    if (pairs.size() < 3) throw DomainError("slope fit needs >= 3 points");
    std::vector<double> x, y;
    for (const auto& [lam, v] : pairs) {
        if (!(lam > 0.0) || !(v > 0.0)) throw DomainError("slope fit needs positive lambda and values");
        x.push_back(std::log2(lam));
        y.push_back(std::log2(v));
    }
    const double m = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / m;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / m;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw DomainError("slope fit needs distinct lambda values");
    SlopeFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    for (std::size_t i = 0; i < x.size(); ++i)
        f.max_residual = std::max(f.max_residual, std::abs(y[i] - (f.intercept + f.slope * x[i])));
    return f;
}

// ---------------------------------------------------------------------------

struct ExperimentConfig {
    CurveSpec curve = CurveSpec::moment(3);
    double rho = 0.9;
    double c0 = 1.0;
    double aperture = 1.5;
    double delta = 1.5;
    double newton_tolerance = 1e-12;
    GridPolicy grid;
    std::vector<double> ps{4.0, 6.0, 8.0};
    std::vector<double> lambdas{32.0, 64.0, 128.0, 256.0};
    int window_samples = 9;      // short window [1, 1 + lambda^{-1/n}]
    int full_window_samples = 17; // [1, 2]; 0 disables
    double epsilon = 0.3;
    int jobs = 1;
    QuadratureOptions quadrature;

    ConeChart chart() const { return {curve, aperture, newton_tolerance}; }
    CounterexampleSpec spec(double lambda) const { return {lambda, rho, c0, chart(), CutoffSpec(delta)}; }
};

struct PieceRatio {
    int nu = 0;
    double t = 1;
    double a_t_f_l2 = 0;       // ||A_t f_nu||_2
    double g_l2 = 0;           // ||g_nu||_2
    double ratio_g = 0;        // ||A_t f_nu||_2 / ||g_nu||_2
    double ratio_sqrt_lambda = 0; // ||A_t f_nu||_2 / lambda^{1/2}
    double c_t_nu = 0;         // chi(theta(xi^nu)) lambda^{1/n} / (t u_n(xi^nu))^{1/n}
    double alpha_c = 0;        // |alpha_n| c_{t,nu}
    double leading_c = 0;      // |int e^{-iy^n}| (n!)^{1/n} c_{t,nu}
};

/// One lambda of the construction: grid, pieces, f and cached multipliers.
class CounterexampleCell {
public:
    CounterexampleCell(const ExperimentConfig& cfg, double lambda)
        : cfg_(cfg), spec_(cfg.spec(lambda)), grid_(make_grid(spec_, cfg.grid)),
          eval_(cfg.curve, CutoffSpec(cfg.delta), cfg.quadrature) {
        pieces_ = build_pieces(spec_, grid_, cfg_.jobs);
        f_ = field_from_pieces(grid_, pieces_);
        cache_ = std::make_unique<MultiplierCache>(eval_, grid_, f_.support_indices());
    }

    const CounterexampleSpec& spec() const { return spec_; }
    const GridSpec& grid() const { return grid_; }
    const SpectralField& f() const { return f_; }
    const std::vector<Piece>& pieces() const { return pieces_; }
    const MultiplierEvaluator& evaluator() const { return eval_; }
    int dimension() const { return spec_.dimension(); }

    TimeWindow short_window() const {
        return {WindowKind::short_window, cfg_.window_samples, spec_.lambda, dimension()};
    }
    TimeWindow full_window() const { return {WindowKind::full, cfg_.full_window_samples, spec_.lambda, dimension()}; }

    SpectralField averaged(double t) { return apply_averaging(f_, eval_, t, cfg_.jobs, cache_.get()); }

    std::shared_ptr<const std::vector<cplx>> multipliers(double t) { return cache_->at(t, cfg_.jobs); }

    /// Per-piece L^2 data at t.
    std::vector<PieceRatio> piece_ratios(double t) {
        const auto mult = multipliers(t);
        const int n = dimension();
        const double L_n = std::pow(grid_.L, n);
        const double lam = spec_.lambda;
        std::vector<PieceRatio> out;
        for (const auto& p : pieces_) {
            PieceRatio r;
            r.nu = p.nu;
            r.t = t;
            double acc = 0.0;
            for (std::size_t i = 0; i < p.indices.size(); ++i)
                acc += std::norm(cache_->lookup(*mult, p.indices[i]) * p.f_hat[i]);
            r.a_t_f_l2 = std::sqrt(acc / L_n);
            r.g_l2 = std::sqrt(p.g_l2_squared(grid_.L, n));
            r.ratio_g = r.a_t_f_l2 / r.g_l2;
            r.ratio_sqrt_lambda = r.a_t_f_l2 / std::sqrt(lam);
            const auto cd = cone_data(spec_.chart, p.center);
            r.c_t_nu = spec_.cutoff(cd.theta) * std::pow(lam, 1.0 / n) / std::pow(t * cd.u_n, 1.0 / n);
            r.alpha_c = std::abs(alpha_n(n)) * r.c_t_nu;
            r.leading_c = std::abs(stationary_phase_constant(n)) * std::pow(factorial(n), 1.0 / n) * r.c_t_nu;
            out.push_back(r);
        }
        return out;
    }

    /// |sum ||A_t f_nu||^2 - ||sum A_t f_nu||^2| / sum ||A_t f_nu||^2, with
    /// the total taken from spatial samples and the pieces from the lattice.
    double orthogonality_defect(double t) {
        const auto ratios = piece_ratios(t);
        double pieces = 0.0;
        for (const auto& r : ratios) pieces += r.a_t_f_l2 * r.a_t_f_l2;
        const auto vals = averaged(t).spatial_values(false);
        const double total = std::pow(lp_norm_values(vals, grid_.cell_volume(), 2.0, cfg_.jobs), 2.0);
        return std::abs(total - pieces) / pieces;
    }

    /// Fraction of ||A_t f||_2^2 inside B(0, lambda^{-(1-eps)/n}).
    double concentration_fraction(double t, double eps) {
        return concentration_fraction_of(averaged(t).spatial_values(false), eps);
    }

    double concentration_fraction_of(const std::vector<cplx>& vals, double eps) const {
        if (!(eps > 0.0 && eps <= 1.0)) throw DomainError("epsilon must lie in (0,1]");
        const double radius = std::pow(spec_.lambda, -(1.0 - eps) / dimension());
        if (!(radius < grid_.L / 2.0))
            throw GeometryError("concentration ball radius " + std::to_string(radius) + " is not below L/2 = " +
                                std::to_string(grid_.L / 2.0));
        const int n = dimension();
        double inside = 0.0, total = 0.0;
        std::vector<std::int64_t> m(static_cast<std::size_t>(n), 0);
        for (std::size_t flat = 0; flat < vals.size(); ++flat) {
            const double w = std::norm(vals[flat]);
            total += w;
            double r2 = 0.0;
            for (int k = 0; k < n; ++k) {
                const double x = grid_.coordinate(k, m[static_cast<std::size_t>(k)]);
                r2 += x * x;
            }
            if (r2 < radius * radius) inside += w;
            for (std::size_t k = m.size(); k-- > 0;) {
                if (++m[k] < grid_.size[k]) break;
                m[k] = 0;
            }
        }
        return inside / total;
    }

private:
    ExperimentConfig cfg_;
    CounterexampleSpec spec_;
    GridSpec grid_;
    MultiplierEvaluator eval_;
    std::vector<Piece> pieces_;
    SpectralField f_;
    std::unique_ptr<MultiplierCache> cache_;
};

struct PieceLowerBound {
    double lambda = 0;
    double min_ratio_sqrt_lambda = 0; // min over nu, t of ||A_t f_nu||_2 / lambda^{1/2}
    double min_ratio_g = 0;           // min over nu, t of ||A_t f_nu||_2 / ||g_nu||_2
    double min_alpha_c = 0;           // min over nu, t of |alpha_n| c_{t,nu}
    std::vector<PieceRatio> samples;
};

inline PieceLowerBound piece_l2_lower(CounterexampleCell& cell) {
    PieceLowerBound out;
    out.lambda = cell.spec().lambda;
    out.min_ratio_sqrt_lambda = out.min_ratio_g = out.min_alpha_c = std::numeric_limits<double>::infinity();
    for (double t : cell.short_window().nodes()) {
        for (const auto& r : cell.piece_ratios(t)) {
            out.min_ratio_sqrt_lambda = std::min(out.min_ratio_sqrt_lambda, r.ratio_sqrt_lambda);
            out.min_ratio_g = std::min(out.min_ratio_g, r.ratio_g);
            out.min_alpha_c = std::min(out.min_alpha_c, r.alpha_c);
            out.samples.push_back(r);
        }
    }
    return out;
}

inline PieceLowerBound piece_l2_lower(double lambda, const ExperimentConfig& cfg) {
    CounterexampleCell cell(cfg, lambda);
    return piece_l2_lower(cell);
}

inline double orthogonality_check(double lambda, double t, const ExperimentConfig& cfg) {
    CounterexampleCell cell(cfg, lambda);
    return cell.orthogonality_defect(t);
}

/// Orthogonality defect of an arbitrary family of averaged pieces on a
/// common grid; pieces' norms from their own samples, total from the sum.
inline double orthogonality_defect(const std::vector<SpectralField>& pieces, int jobs = 1) {
    if (pieces.empty()) throw DomainError("orthogonality defect needs at least one piece");
    SpectralField sum(pieces.front().grid());
    double parts = 0.0;
    for (const auto& p : pieces) {
        const auto vals = p.spatial_values(false);
        parts += std::pow(lp_norm_values(vals, p.grid().cell_volume(), 2.0, jobs), 2.0);
        for (std::size_t i = 0; i < p.coefficients().size(); ++i) sum.coefficients()[i] += p.coefficients()[i];
    }
    const auto vals = sum.spatial_values(false);
    const double total = std::pow(lp_norm_values(vals, sum.grid().cell_volume(), 2.0, jobs), 2.0);
    return std::abs(total - parts) / parts;
}

inline double concentration_check(double lambda, double eps, double t, const ExperimentConfig& cfg) {
    CounterexampleCell cell(cfg, lambda);
    return cell.concentration_fraction(t, eps);
}

// ---------------------------------------------------------------------------

struct LambdaResult {
    double lambda = 0;
    bool ok = false;
    std::string failure;            // reason when !ok
    int pieces = 0;
    std::vector<std::int64_t> grid_size;
    double grid_L = 0;
    std::vector<double> norm_f;      // per p
    std::vector<double> norm_short;  // per p, L^p over short window x torus
    std::vector<double> norm_full;   // per p, L^p over [1,2] x torus (empty if disabled)
    std::vector<double> quotient;    // norm_short / norm_f
    double piece_min_ratio_sqrt_lambda = 0;
    double piece_min_ratio_g = 0;
    double piece_min_alpha_c = 0;
    double orthogonality_defect = 0; // max over short-window nodes
    std::vector<double> concentration; // per short-window node
};

struct SlopeSet {
    double p = 0;
    SlopeFit input, output, quotient;
    double expected_input = 0, expected_output = 0, expected_quotient = 0;
};

struct SweepReport {
    int n = 3;
    std::vector<double> ps;
    std::vector<double> lambdas;
    std::vector<LambdaResult> cells;
    std::vector<SlopeSet> slopes; // empty when fewer than 3 cells survived
    std::string slope_failure;
    ExperimentConfig config;
};

inline LambdaResult run_cell(const ExperimentConfig& cfg, double lambda) {
    LambdaResult res;
    res.lambda = lambda;
    CounterexampleCell cell(cfg, lambda);
    const auto& ps = cfg.ps;
    res.pieces = static_cast<int>(cell.pieces().size());
    res.grid_size = cell.grid().size;
    res.grid_L = cell.grid().L;
    res.norm_f = lp_norms_space(cell.f(), ps, cfg.jobs);

    struct NodeData {
        std::vector<double> norms;
        double concentration = 0;
        double orthogonality = 0;
    };
    // Nodes run one after another; each node parallelizes internally.
    auto node = [&](double t, bool diagnostics) {
        NodeData d;
        const auto vals = cell.averaged(t).spatial_values(false);
        for (double p : ps) d.norms.push_back(lp_norm_values(vals, cell.grid().cell_volume(), p, cfg.jobs));
        if (diagnostics) {
            d.concentration = cell.concentration_fraction_of(vals, cfg.epsilon);
            double parts = 0.0;
            for (const auto& r : cell.piece_ratios(t)) parts += r.a_t_f_l2 * r.a_t_f_l2;
            const double total = std::pow(lp_norm_values(vals, cell.grid().cell_volume(), 2.0, cfg.jobs), 2.0);
            d.orthogonality = std::abs(total - parts) / parts;
        }
        return d;
    };

    const auto sw = cell.short_window();
    std::vector<std::vector<double>> short_norms(ps.size());
    for (double t : sw.nodes()) {
        const auto d = node(t, true);
        for (std::size_t i = 0; i < ps.size(); ++i) short_norms[i].push_back(d.norms[i]);
        res.concentration.push_back(d.concentration);
        res.orthogonality_defect = std::max(res.orthogonality_defect, d.orthogonality);
    }
    for (std::size_t i = 0; i < ps.size(); ++i) {
        res.norm_short.push_back(lp_norm_spacetime(short_norms[i], sw, ps[i]));
        res.quotient.push_back(res.norm_short[i] / res.norm_f[i]);
    }
    if (cfg.full_window_samples > 0) {
        const auto fw = cell.full_window();
        std::vector<std::vector<double>> full_norms(ps.size());
        for (double t : fw.nodes()) {
            const auto d = node(t, false);
            for (std::size_t i = 0; i < ps.size(); ++i) full_norms[i].push_back(d.norms[i]);
        }
        for (std::size_t i = 0; i < ps.size(); ++i) res.norm_full.push_back(lp_norm_spacetime(full_norms[i], fw, ps[i]));
    }
    const auto lower = piece_l2_lower(cell);
    res.piece_min_ratio_sqrt_lambda = lower.min_ratio_sqrt_lambda;
    res.piece_min_ratio_g = lower.min_ratio_g;
    res.piece_min_alpha_c = lower.min_alpha_c;
    res.ok = true;
    return res;
}

/// Builds f per lambda, applies A_t over the short window and fits
/// log2 ||f||_p, log2 ||A_t f||_{L^p(window x torus)} and their quotient
/// against log2 lambda. Cells that fail record their reason; the fit uses
/// the survivors when at least three remain.
inline SweepReport sharpness_sweep(const ExperimentConfig& cfg) {
    SweepReport rep;
    rep.n = cfg.curve.dimension();
    rep.ps = cfg.ps;
    rep.lambdas = cfg.lambdas;
    rep.config = cfg;
    for (double lam : cfg.lambdas) {
        try {
            rep.cells.push_back(run_cell(cfg, lam));
        } catch (const Error& e) {
            LambdaResult r;
            r.lambda = lam;
            r.failure = e.kind() + ": " + e.what();
            rep.cells.push_back(r);
        }
    }
    std::vector<const LambdaResult*> good;
    for (const auto& c : rep.cells)
        if (c.ok) good.push_back(&c);
    if (good.size() < 3) {
        rep.slope_failure = "need >= 3 lambda values for a slope fit, have " + std::to_string(good.size());
        return rep;
    }
    for (std::size_t i = 0; i < cfg.ps.size(); ++i) {
        std::vector<std::pair<double, double>> in, out, q;
        for (const auto* c : good) {
            in.emplace_back(c->lambda, c->norm_f[i]);
            out.emplace_back(c->lambda, c->norm_short[i]);
            q.emplace_back(c->lambda, c->quotient[i]);
        }
        SlopeSet s;
        s.p = cfg.ps[i];
        s.input = fit_slope(in);
        s.output = fit_slope(out);
        s.quotient = fit_slope(q);
        s.expected_input = expected_input_slope(rep.n, s.p);
        s.expected_output = expected_output_slope(rep.n, s.p);
        s.expected_quotient = expected_quotient_slope(rep.n, s.p);
        rep.slopes.push_back(s);
    }
    return rep;
}

} // namespace csl
