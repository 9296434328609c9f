#pragma once

// Worst-decay cone: theta(xi), Gamma(tau), phi(xi), u_n(xi).

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "csl/curve.hpp"

namespace csl {

struct ConeChart {
    CurveSpec curve;
    double aperture = 1.5;          // Xi = {|xi'| <= aperture * |xi_n|}
    double newton_tolerance = 1e-12;
    int max_iterations = 60;
};

inline bool in_aperture(const ConeChart& chart, const Vec& xi) {
    const int n = chart.curve.dimension();
    if (xi.size() != n || xi.isZero(0.0)) return false;
    return xi.head(n - 1).norm() <= chart.aperture * std::abs(xi[n - 1]);
}

namespace detail {

inline void require_aperture(const ConeChart& chart, const Vec& xi) {
    if (xi.size() != chart.curve.dimension())
        throw DomainError("frequency has wrong dimension");
    if (!in_aperture(chart, xi)) {
        const int n = chart.curve.dimension();
        throw ApertureError("xi outside the aperture |xi'| <= " + std::to_string(chart.aperture) +
                            "|xi_n| (|xi'|=" + std::to_string(xi.head(n - 1).norm()) +
                            ", |xi_n|=" + std::to_string(std::abs(xi[n - 1])) + ")");
    }
}

} // namespace detail

/// The unique s near 0 with <gamma^{(n-1)}(s), xi> = 0. Newton from s = 0 on
/// the degree-0 normalized equation, so theta(lambda xi) = theta(xi) bitwise
/// for lambda > 0 up to the rounding of xi / xi_n.
inline double solve_theta(const ConeChart& chart, const Vec& xi) {
    detail::require_aperture(chart, xi);
    const auto& curve = chart.curve;
    const int n = curve.dimension();
    const Vec dir = xi / xi[n - 1];
    const double scale = xi.norm() / std::abs(xi[n - 1]);
    double s = 0.0;
    for (int it = 0; it <= chart.max_iterations; ++it) {
        const double g = curve.derivative(n - 1, s).dot(dir);
        if (std::abs(g) <= chart.newton_tolerance * scale) return s;
        const double dg = curve.derivative(n, s).dot(dir);
        if (dg == 0.0) break;
        s -= g / dg;
        if (!std::isfinite(s) || !curve.domain().contains(s)) break;
    }
    throw ConvergenceError("theta Newton iteration failed to converge (aperture too large?)");
}

struct ConePoint {
    Vec xi;        // Gamma(tau): xi_{n-1} = tau, xi_n = 1
    double s = 0;  // theta(Gamma(tau))
};

/// Solves <gamma^{(j)}(s), xi> = 0 for 1 <= j <= n-1 with xi_{n-1} = tau,
/// xi_n = 1, unknowns (xi_1..xi_{n-2}, s). Seeded with the moment-curve
/// closed form xi_k = tau^{n-k}/(n-k)!, s = -tau.
inline ConePoint solve_gamma(const ConeChart& chart, double tau) {
    if (std::abs(tau) > chart.aperture)
        throw ApertureError("|tau| = " + std::to_string(std::abs(tau)) + " exceeds aperture");
    const auto& curve = chart.curve;
    const int n = curve.dimension();
    const int m = n - 1; // unknowns and equations

    Vec xi(n);
    double fact = 1.0;
    for (int k = n; k >= 1; --k) {
        xi[k - 1] = std::pow(tau, n - k) / fact;
        fact *= (n - k + 1);
    }
    double s = -tau;

    Vec residual(m);
    Eigen::MatrixXd jac(m, m);
    for (int it = 0; it <= chart.max_iterations; ++it) {
        for (int j = 1; j <= m; ++j) residual[j - 1] = curve.derivative(j, s).dot(xi);
        if (residual.lpNorm<Eigen::Infinity>() <= chart.newton_tolerance) return {xi, s};
        for (int j = 1; j <= m; ++j) {
            const Vec dj = curve.derivative(j, s);
            for (int i = 0; i < n - 2; ++i) jac(j - 1, i) = dj[i];
            jac(j - 1, m - 1) = curve.derivative(j + 1, s).dot(xi);
        }
        const Vec step = jac.partialPivLu().solve(residual);
        if (!step.allFinite()) break;
        xi.head(n - 2) -= step.head(n - 2);
        s -= step[m - 1];
        if (!curve.domain().contains(s)) break;
    }
    throw ConvergenceError("cone system Newton iteration failed at tau=" + std::to_string(tau));
}

struct ConeData {
    double theta = 0;
    double phi = 0;
    double u_n = 0;
};

/// theta, phi = <gamma(theta), xi> and u_n = <gamma^{(n)}(theta), xi> from one solve.
inline ConeData cone_data(const ConeChart& chart, const Vec& xi) {
    const double th = solve_theta(chart, xi);
    const int n = chart.curve.dimension();
    return {th, chart.curve.derivative(0, th).dot(xi), chart.curve.derivative(n, th).dot(xi)};
}

inline double phase_phi(const ConeChart& chart, const Vec& xi) { return cone_data(chart, xi).phi; }

inline double u_n(const ConeChart& chart, const Vec& xi) { return cone_data(chart, xi).u_n; }

} // namespace csl
