#pragma once

// The counterexample family: centers xi^nu = lambda Gamma(nu lambda^{-1/n}),
// bumps g_nu, pieces f_nu_hat = lambda^{1/n} exp(i phi) g_nu_hat and their
// sum f.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "csl/cone.hpp"
#include "csl/errors.hpp"
#include "csl/grid.hpp"
#include "csl/oscillator.hpp"

namespace csl {

enum class EtaKind { inner, outer };

/// Smooth step: 0 for x <= 0, 1 for x >= 1, h(x)/(h(x)+h(1-x)) with h(x)=e^{-1/x}.
inline double smooth_step(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / x);
    const double b = std::exp(-1.0 / (1.0 - x));
    return a / (a + b);
}

/// inner: 1 on [0,1/2], 0 on [1,inf). outer: 1 on [0,1], 0 on [3/2,inf).
inline double radial_bump(EtaKind kind, double x) {
    switch (kind) {
    case EtaKind::inner: return 1.0 - smooth_step((x - 0.5) / 0.5);
    case EtaKind::outer: return 1.0 - smooth_step((x - 1.0) / 0.5);
    }
    return 0.0;
}

struct CounterexampleSpec {
    double lambda = 64;
    double rho = 0.9;
    double c0 = 1.0;
    ConeChart chart{CurveSpec::moment(3)};
    CutoffSpec cutoff{1.5};

    int dimension() const { return chart.curve.dimension(); }
    /// rho lambda^{1/n}, radius of the support of g_nu_hat.
    double radius() const { return rho * std::pow(lambda, 1.0 / dimension()); }
    /// Largest |nu| in N(lambda) = Z cap [-c0 lambda^{1/n}, c0 lambda^{1/n}].
    int nu_max() const {
        return static_cast<int>(std::floor(c0 * std::pow(lambda, 1.0 / dimension()) + 1e-12));
    }
    std::vector<int> nus() const {
        std::vector<int> v;
        for (int nu = -nu_max(); nu <= nu_max(); ++nu) v.push_back(nu);
        return v;
    }
};

inline void validate(const CounterexampleSpec& spec) {
    if (!(spec.lambda > 0.0)) throw ConfigurationError("lambda must be positive");
    if (!(spec.rho > 0.0 && spec.rho < 1.0)) throw ConfigurationError("rho must lie in (0,1)");
    if (!(spec.c0 > 0.0)) throw ConfigurationError("c0 must be positive");
}

/// xi^nu for nu in N(lambda); checks that the outer balls B(xi^nu, 3/2 rho
/// lambda^{1/n}) are pairwise disjoint.
inline std::vector<Vec> frequency_centers(const CounterexampleSpec& spec) {
    validate(spec);
    const int n = spec.dimension();
    const double scale = std::pow(spec.lambda, -1.0 / n);
    std::vector<Vec> centers;
    for (int nu : spec.nus()) centers.push_back(spec.lambda * solve_gamma(spec.chart, nu * scale).xi);
    const double min_gap = 3.0 * spec.radius();
    for (std::size_t a = 0; a < centers.size(); ++a)
        for (std::size_t b = a + 1; b < centers.size(); ++b)
            if (!((centers[a] - centers[b]).norm() > min_gap))
                throw ConfigurationError("frequency balls overlap (distance " +
                                         std::to_string((centers[a] - centers[b]).norm()) + " <= " +
                                         std::to_string(min_gap) + "); rho or c0 too large");
    return centers;
}

enum class GridPolicyKind { window, centered };

struct GridPolicy {
    GridPolicyKind kind = GridPolicyKind::window;
    int points_per_radius = 4; // window: lattice spacing = rho lambda^{1/n} / points_per_radius
    double oversample = 2.0;   // window: spatial samples per lattice point of the support span
    double L = 2.0;            // centered: torus side
    std::int64_t N = 0;        // centered: points per axis, 0 = least power of two covering the support
};

/// Grid for a construction. The window policy sizes the lattice to the
/// balls; the centered policy is the classic L-periodic N^n box.
inline GridSpec make_grid(const CounterexampleSpec& spec, const GridPolicy& policy) {
    validate(spec);
    const int n = spec.dimension();
    const double r = spec.radius();
    if (policy.kind == GridPolicyKind::centered) {
        std::int64_t N = policy.N;
        if (N == 0) {
            N = 2;
            while (static_cast<double>(N) * std::numbers::pi / policy.L < 1.2 * spec.lambda + 2.0 * r) N *= 2;
        }
        return GridSpec::centered(n, policy.L, N);
    }
    if (policy.points_per_radius < 1 || !(policy.oversample >= 1.0))
        throw ConfigurationError("window grid needs points_per_radius >= 1 and oversample >= 1");
    const double h = r / policy.points_per_radius;
    GridSpec g;
    g.n = n;
    g.L = 2.0 * std::numbers::pi / h;
    const auto centers = frequency_centers(spec);
    for (int k = 0; k < n; ++k) {
        double mn = centers.front()[k], mx = mn;
        for (const auto& c : centers) {
            mn = std::min(mn, c[k]);
            mx = std::max(mx, c[k]);
        }
        const auto lo = static_cast<std::int64_t>(std::floor((mn - r) / h)) - 1;
        const auto hi = static_cast<std::int64_t>(std::ceil((mx + r) / h)) + 1;
        const auto span = hi - lo + 1;
        const auto N = smooth_size(static_cast<std::int64_t>(std::ceil(policy.oversample * static_cast<double>(span))));
        g.size.push_back(N);
        g.lo.push_back(lo - (N - span) / 2);
    }
    return g;
}

/// Sparse coefficients of one piece: window indices, f_nu_hat and g_nu_hat values.
struct Piece {
    int nu = 0;
    Vec center;
    double radius = 0;
    std::vector<std::size_t> indices;
    std::vector<cplx> f_hat;
    std::vector<double> g_hat;

    /// ||g_nu||_2^2 on the torus (Parseval).
    double g_l2_squared(double L, int n) const {
        double acc = 0.0;
        for (double v : g_hat) acc += v * v;
        return acc / std::pow(L, n);
    }
};

inline Piece piece_coefficients(const CounterexampleSpec& spec, const GridSpec& grid, int nu,
                                const Vec& center) {
    const int n = spec.dimension();
    Piece p;
    p.nu = nu;
    p.center = center;
    p.radius = spec.radius();
    p.indices = SpectralField::lattice_points_in(grid, {center, p.radius});
    std::sort(p.indices.begin(), p.indices.end());
    const double amp = std::pow(spec.lambda, 1.0 / n);
    p.f_hat.reserve(p.indices.size());
    p.g_hat.reserve(p.indices.size());
    for (auto idx : p.indices) {
        const Vec xi = grid.frequency(idx);
        const double eta = radial_bump(EtaKind::inner, (xi - center).norm() / p.radius);
        const double phi = phase_phi(spec.chart, xi);
        p.g_hat.push_back(eta);
        p.f_hat.push_back(amp * std::polar(1.0, phi) * eta);
    }
    return p;
}

/// All pieces for nu in N(lambda), in increasing nu.
inline std::vector<Piece> build_pieces(const CounterexampleSpec& spec, const GridSpec& grid, int jobs = 1) {
    const auto centers = frequency_centers(spec);
    const auto nus = spec.nus();
    std::vector<Piece> pieces(nus.size());
    parallel_for(nus.size(), jobs, [&](std::size_t i) {
        pieces[i] = piece_coefficients(spec, grid, nus[i], centers[i]);
    });
    return pieces;
}

inline SpectralField field_from_pieces(const GridSpec& grid, const std::vector<Piece>& pieces) {
    SpectralField f(grid);
    for (const auto& p : pieces) {
        f.declare({p.center, p.radius});
        for (std::size_t i = 0; i < p.indices.size(); ++i) f.coefficients()[p.indices[i]] += p.f_hat[i];
    }
    return f;
}

/// f_nu as a field on `grid`; declared support B(xi^nu, rho lambda^{1/n}).
inline SpectralField build_piece(const CounterexampleSpec& spec, const GridSpec& grid, int nu) {
    const int K = spec.nu_max();
    if (nu < -K || nu > K) throw DomainError("nu=" + std::to_string(nu) + " not in N(lambda)");
    const auto centers = frequency_centers(spec);
    const auto p = piece_coefficients(spec, grid, nu, centers[static_cast<std::size_t>(nu + K)]);
    return field_from_pieces(grid, {p});
}

/// f = sum over N(lambda) of f_nu.
inline SpectralField build_f(const CounterexampleSpec& spec, const GridSpec& grid, int jobs = 1) {
    return field_from_pieces(grid, build_pieces(spec, grid, jobs));
}

} // namespace csl
