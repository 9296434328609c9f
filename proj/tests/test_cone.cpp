#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "csl/cone.hpp"

using namespace csl;

namespace {

Vec vec(std::initializer_list<double> xs) {
    Vec v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

// Dense scan + bisection for Gamma(tau): for each s, equations j = 1..n-2
// are linear in xi_1..xi_{n-2}; the root is where equation n-1 changes sign.
ConePoint brute_force_gamma(const CurveSpec& c, double tau) {
    const int n = c.dimension();
    const int m = n - 2;
    auto solve_at = [&](double s, Vec& xi) {
        xi = Vec::Zero(n);
        xi[n - 2] = tau;
        xi[n - 1] = 1.0;
        if (m > 0) {
            Eigen::MatrixXd A(m, m);
            Vec b(m);
            for (int j = 1; j <= m; ++j) {
                const Vec d = c.derivative(j, s);
                for (int i = 0; i < m; ++i) A(j - 1, i) = d[i];
                b[j - 1] = -(d[n - 2] * tau + d[n - 1]);
            }
            xi.head(m) = A.fullPivLu().solve(b);
        }
        return c.derivative(n - 1, s).dot(xi);
    };
    Vec xi;
    const int samples = 20000;
    double a = -1.0, fa = solve_at(a, xi);
    for (int i = 1; i <= samples; ++i) {
        const double b = -1.0 + 2.0 * i / samples;
        const double fb = solve_at(b, xi);
        if (fb == 0.0) return {xi, b};
        if (fa * fb < 0.0) {
            double lo = a, hi = b, flo = fa;
            for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = solve_at(mid, xi);
                if ((fm < 0) == (flo < 0)) lo = mid, flo = fm;
                else hi = mid;
            }
            const double s = 0.5 * (lo + hi);
            solve_at(s, xi);
            return {xi, s};
        }
        a = b;
        fa = fb;
    }
    throw std::runtime_error("no root found");
}

} // namespace

TEST(Cone, ThetaExamples) {
    const ConeChart ch{CurveSpec::moment(3)};
    EXPECT_EQ(solve_theta(ch, vec({0, 0, 1})), 0.0);
    EXPECT_NEAR(solve_theta(ch, vec({0.3, 0.1, 1})), -0.1, 1e-14);
    EXPECT_NEAR(solve_theta(ch, vec({0, 0.2, 2})), -0.1, 1e-14);
}

TEST(Cone, ThetaResidualWithinTolerance) {
    // Aperture 1: at 1.5 this perturbation leaves some directions with no theta in the domain.
    const ConeChart ch{CurveSpec::perturbed_moment(3, {{0, 0, 0, 0.02}, {0, 0, 0, 0, 0.01}}), 1.0};
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const Vec xi = vec({u(rng), u(rng), 1.0 + 0.5 * u(rng)}) * 3.0;
        if (!in_aperture(ch, xi)) continue;
        const double th = solve_theta(ch, xi);
        EXPECT_LE(std::abs(ch.curve.derivative(2, th).dot(xi)), ch.newton_tolerance * xi.norm());
    }
}

TEST(Cone, GammaExamples) {
    const ConeChart ch{CurveSpec::moment(3)};
    const auto g0 = solve_gamma(ch, 0.0);
    EXPECT_EQ(g0.xi, vec({0, 0, 1}));
    EXPECT_EQ(g0.s, 0.0);
    const auto g = solve_gamma(ch, 0.2);
    EXPECT_NEAR(g.xi[0], 0.02, 1e-14);
    EXPECT_EQ(g.xi[1], 0.2);
    EXPECT_EQ(g.xi[2], 1.0);
    EXPECT_NEAR(g.s, -0.2, 1e-14);
}

TEST(Cone, MomentClosedFormsOnHundredTaus) {
    const ConeChart ch{CurveSpec::moment(3)};
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double tau = -0.25 + 0.5 * i / 99.0;
        const auto g = solve_gamma(ch, tau);
        worst = std::max({worst, (g.xi - vec({tau * tau / 2, tau, 1})).lpNorm<Eigen::Infinity>(),
                          std::abs(solve_theta(ch, g.xi) + tau), std::abs(g.s + tau)});
    }
    EXPECT_LE(worst, 1e-10);
}

TEST(Cone, FourDimensionalAgainstDenseRootFinding) {
    for (const auto& curve : {CurveSpec::moment(4), CurveSpec::perturbed_moment(4, {{0, 0, 0, 0, 0, 0.01},
                                                                                   {0, 0, 0, 0, 0.005}})}) {
        const ConeChart ch{curve};
        for (double tau : {-0.4, -0.2, 0.0, 0.2, 0.35}) {
            const auto newton = solve_gamma(ch, tau);
            const auto dense = brute_force_gamma(curve, tau);
            EXPECT_NEAR(newton.s, dense.s, 1e-9) << "tau " << tau;
            EXPECT_LT((newton.xi - dense.xi).norm(), 1e-9) << "tau " << tau;
        }
    }
    // Moment curve: xi = (-tau^3/6, tau^2/2, tau, 1) and s = -tau.
    const auto g = solve_gamma(ConeChart{CurveSpec::moment(4)}, 0.2);
    EXPECT_NEAR(g.xi[0], 0.008 / 6.0, 1e-13);
    EXPECT_NEAR(g.xi[1], 0.02, 1e-13);
}

TEST(Cone, GammaResidualAndConsistency) {
    const ConeChart ch{CurveSpec::perturbed_moment(3, {{0, 0, 0, 0.05}, {0, 0, 0, 0.02}})};
    for (double tau : {-1.2, -0.5, 0.0, 0.3, 1.0}) {
        const auto g = solve_gamma(ch, tau);
        EXPECT_EQ(g.xi[1], tau);
        EXPECT_EQ(g.xi[2], 1.0);
        for (int j = 1; j <= 2; ++j) EXPECT_LE(std::abs(ch.curve.derivative(j, g.s).dot(g.xi)), ch.newton_tolerance);
        EXPECT_NEAR(solve_theta(ch, g.xi), g.s, 10 * ch.newton_tolerance);
    }
}

TEST(Cone, Homogeneity) {
    const ConeChart ch{CurveSpec::perturbed_moment(3, {{0, 0, 0, 0.05}})};
    const Vec xi = vec({0.3, 0.1, 1.0});
    const auto base = cone_data(ch, xi);
    for (double l : {0.5, 2.0, 10.0}) {
        const auto d = cone_data(ch, l * xi);
        EXPECT_NEAR(d.theta, base.theta, 10 * ch.newton_tolerance);
        EXPECT_NEAR(d.phi, l * base.phi, 10 * ch.newton_tolerance * l);
        EXPECT_NEAR(d.u_n, l * base.u_n, 10 * ch.newton_tolerance * l);
    }
}

TEST(Cone, PhaseExamples) {
    const ConeChart ch{CurveSpec::moment(3)};
    EXPECT_EQ(phase_phi(ch, vec({0, 0, 1})), 0.0);
    EXPECT_NEAR(phase_phi(ch, vec({0.02, 0.2, 1})), -0.008 / 6.0, 1e-15);
    EXPECT_NEAR(phase_phi(ch, vec({0.6, 0.2, 2})), 2.0 * phase_phi(ch, vec({0.3, 0.1, 1})), 1e-14);
    // phi = -xi1 xi2/xi3 + xi2^3/(3 xi3^2)
    const Vec xi = vec({0.4, -0.3, 1.7});
    EXPECT_NEAR(phase_phi(ch, xi), -0.4 * -0.3 / 1.7 + std::pow(-0.3, 3) / (3 * 1.7 * 1.7), 1e-14);
}

TEST(Cone, UnExamples) {
    const ConeChart ch{CurveSpec::moment(3)};
    EXPECT_EQ(u_n(ch, vec({0.02, 0.2, 1})), 1.0);
    EXPECT_EQ(u_n(ch, vec({0.04, 0.4, 2})), 2.0);
    // +0.001 s^4 on component 3: <gamma'', xi> = 0.1 + s + 0.012 s^2, <gamma''', xi> = 1 + 0.024 s.
    const ConeChart p{CurveSpec::perturbed_moment(3, {{}, {}, {0, 0, 0, 0, 0.001}})};
    const double th = (-1.0 + std::sqrt(1.0 - 4 * 0.012 * 0.1)) / (2 * 0.012);
    EXPECT_NEAR(solve_theta(p, vec({0, 0.1, 1})), th, 1e-13);
    EXPECT_NEAR(u_n(p, vec({0, 0.1, 1})), 1.0 + 0.024 * th, 1e-13);
}

TEST(Cone, ApertureErrors) {
    const ConeChart ch{CurveSpec::moment(3), 0.25};
    EXPECT_THROW(solve_theta(ch, vec({1, 0, 1})), ApertureError);
    EXPECT_THROW(solve_theta(ch, vec({0, 0, 0})), ApertureError);
    EXPECT_THROW(solve_gamma(ch, 0.3), ApertureError);
    EXPECT_TRUE(in_aperture(ch, vec({0.1, 0.1, 1})));
}
