#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <random>

#include "csl/oscillator.hpp"

using namespace csl;

namespace {

Vec e(int n, int k, double scale = 1.0) {
    Vec v = Vec::Zero(n);
    v[k] = scale;
    return v;
}

// Composite Simpson on a uniform grid, far finer than any oscillation tested.
cplx simpson_mu_hat(const CurveSpec& c, const CutoffSpec& chi, double t, const Vec& xi, int intervals) {
    const double a = -chi.delta(), b = chi.delta(), h = (b - a) / intervals;
    cplx acc{};
    for (int i = 0; i <= intervals; ++i) {
        const double s = a + i * h;
        const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        acc += w * chi(s) * std::polar(1.0, -t * c(s).dot(xi));
    }
    return acc * h / 3.0;
}

} // namespace

TEST(Oscillator, CutoffIntegralAgainstTanhSinh) {
    for (double d : {0.25, 1.0, 1.5}) {
        const CutoffSpec chi(d);
        boost::math::quadrature::tanh_sinh<double> ts;
        const double ref = ts.integrate([&](double s) { return chi(s); }, -d, d);
        EXPECT_NEAR(chi.integral(), ref, 1e-12 * ref);
        EXPECT_EQ(chi(d), 0.0);
        EXPECT_EQ(chi(0.0), 1.0);
    }
}

TEST(Oscillator, ZeroFrequencyIsIntegralOfCutoff) {
    const MultiplierEvaluator ev(CurveSpec::moment(3), CutoffSpec(1.5));
    for (double t : {1.0, 1.37, 2.0}) {
        const cplx v = ev(t, Vec::Zero(3));
        EXPECT_NEAR(v.real(), ev.cutoff().integral(), 1e-9 * ev.cutoff().integral());
        EXPECT_EQ(v.imag(), 0.0);
    }
}

TEST(Oscillator, ConjugateSymmetry) {
    const MultiplierEvaluator ev(CurveSpec::perturbed_moment(3, {{0, 0, 0.1}}), CutoffSpec(1.0));
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-200.0, 200.0);
    for (int i = 0; i < 100; ++i) {
        Vec xi(3);
        xi << u(rng), u(rng), u(rng);
        const cplx a = ev(1.25, xi), b = ev(1.25, -xi);
        EXPECT_LE(std::abs(a - std::conj(b)), 1e-9 * std::max(std::abs(a), 1e-6));
    }
}

TEST(Oscillator, PanelDoublingSelfConsistency) {
    const MultiplierEvaluator ev(CurveSpec::moment(3), CutoffSpec(1.5));
    QuadratureOptions twice;
    twice.panel_budget = 2.0;
    const MultiplierEvaluator ev2(CurveSpec::moment(3), CutoffSpec(1.5), twice);
    for (double lam : {10.0, 300.0, 4096.0}) {
        Vec xi(3);
        xi << 0.2 * lam, -0.3 * lam, 0.9 * lam;
        const cplx a = ev(1.0, xi), b = ev2(1.0, xi);
        EXPECT_LE(std::abs(a - b), 1e-8 * std::abs(b) + 1e-14) << lam;
    }
}

TEST(Oscillator, AgreesWithDenseSimpson) {
    const CurveSpec c = CurveSpec::moment(3);
    const CutoffSpec chi(1.5);
    const MultiplierEvaluator ev(c, chi);
    for (double lam : {64.0, 4096.0}) {
        const cplx ref = simpson_mu_hat(c, chi, 1.0, e(3, 2, lam), 2'000'000);
        EXPECT_LE(std::abs(ev(1.0, e(3, 2, lam)) - ref), 1e-9 * std::abs(ref)) << lam;
    }
    Vec xi(3);
    xi << 40.0, -25.0, 300.0;
    const cplx ref = simpson_mu_hat(c, chi, 1.7, xi, 2'000'000);
    EXPECT_LE(std::abs(ev(1.7, xi) - ref), 1e-9 * std::abs(ref) + 1e-13); // off the cone: |ref| is tiny
}

TEST(Oscillator, AlphaConstants) {
    // int e^{-iy^3} dy = 2 Gamma(4/3) cos(pi/6)
    EXPECT_NEAR(alpha_n(3).real(), 2.0 * std::tgamma(4.0 / 3.0) * std::cos(std::numbers::pi / 6), 1e-13);
    EXPECT_NEAR(alpha_n(3).real(), 1.5467, 1e-4);
    EXPECT_EQ(alpha_n(3).imag(), 0.0);
    EXPECT_NEAR(alpha_n(2).real(), 1.2533141373155, 1e-12);
    EXPECT_NEAR(alpha_n(2).imag(), 1.2533141373155, 1e-12);
    EXPECT_NEAR(alpha_n(5).real(), 0.4 * std::tgamma(0.2) * std::sin(0.4 * std::numbers::pi), 1e-14);
    EXPECT_GT(alpha_n(5).real(), 0.0);
    EXPECT_THROW(alpha_n(1), DomainError);
}

TEST(Oscillator, StationaryPhaseConstantByQuadrature) {
    // int_R exp(-i y^3) dy = (2/3) int_0^inf u^{-2/3} cos(u) du. Check the
    // damped version against its closed form Gamma(1/3) Re[(eps - i)^{-1/3}],
    // then let eps -> 0 in the closed form.
    const double eps = 0.05;
    auto f = [&](double u) { return std::pow(u, -2.0 / 3.0) * std::cos(u) * std::exp(-eps * u); };
    boost::math::quadrature::tanh_sinh<double> ts;
    double acc = ts.integrate(f, 0.0, 1.0);
    for (int k = 1; k < 1200; ++k) acc += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, k, k + 1);
    const auto closed = [](double e) { return std::tgamma(1.0 / 3.0) * std::pow(cplx(e, -1.0), -1.0 / 3.0); };
    EXPECT_NEAR(acc, closed(eps).real(), 1e-9);
    EXPECT_NEAR(2.0 / 3.0 * closed(0.0).real(), stationary_phase_constant(3).real(), 1e-14);
    EXPECT_NEAR(std::abs(stationary_phase_constant(4)), std::abs(alpha_n(4)), 1e-15);
    EXPECT_NEAR(std::arg(stationary_phase_constant(4)), -std::arg(alpha_n(4)), 1e-15);
}

TEST(Oscillator, DecayProfile) {
    const MultiplierEvaluator ev(CurveSpec::moment(3), CutoffSpec(1.5));
    const auto off = decay_profile(ev, 1.0, e(3, 0), {0.0, 16.0, 64.0, 256.0});
    EXPECT_NEAR(off[0].normalized, ev.cutoff().integral(), 1e-9);
    for (std::size_t i = 2; i < off.size(); ++i) EXPECT_LT(off[i].normalized, off[i - 1].normalized);
    EXPECT_LT(off.back().normalized, 1e-6);

    // On the cone the normalized value settles at |int e^{-iy^3}| 6^{1/3} chi(0).
    const auto on = decay_profile(ev, 1.0, e(3, 2), {4096.0});
    const double limit = std::abs(stationary_phase_constant(3)) * std::cbrt(6.0);
    EXPECT_NEAR(on[0].normalized, limit, 0.01 * limit);
    EXPECT_THROW(decay_profile(ev, 1.0, e(3, 2, 2.0), {1.0}), DomainError);
}

TEST(Oscillator, MultiplierSampleOnCone) {
    const CurveSpec c = CurveSpec::moment(3);
    const MultiplierEvaluator ev(c, CutoffSpec(1.5));
    const ConeChart ch{c};
    double prev = 1e300;
    for (int k = 8; k <= 12; ++k) {
        const double lam = std::pow(2.0, k);
        const auto s = multiplier_sample(ev, ch, 1.0, e(3, 2, lam));
        EXPECT_NEAR(std::abs(s.m), std::abs(s.mu_hat), 1e-15 * std::abs(s.mu_hat));
        EXPECT_NEAR(std::abs(s.reference), alpha_n(3).real() * std::pow(lam, -1.0 / 3.0), 1e-12);
        EXPECT_LE(s.deficit * std::cbrt(lam), 5.0);
        // The corrected leading term captures m up to a remainder decaying faster than lambda^{-1/3}.
        EXPECT_LT(s.leading_deficit * std::cbrt(lam), prev);
        prev = s.leading_deficit * std::cbrt(lam);
    }
    EXPECT_LT(prev, 1e-4);
}

TEST(Oscillator, ThetaOutsideCutoffSupport) {
    const CurveSpec c = CurveSpec::moment(3);
    const MultiplierEvaluator ev(c, CutoffSpec(1.0));
    const ConeChart ch{c, 3.0};
    Vec xi(3);
    // theta = -1.2; xi_1 large enough that <gamma'(s), xi> = 1000 + 1200 s + 500 s^2 >= 300 on the support.
    xi << 1000.0, 1200.0, 1000.0;
    const auto s = multiplier_sample(ev, ch, 1.0, xi);
    EXPECT_EQ(s.reference, cplx{});
    EXPECT_LT(std::abs(s.m), 1e-6);
}

TEST(Oscillator, DerivativeBoundCheck) {
    const CurveSpec c = CurveSpec::moment(3);
    const MultiplierEvaluator ev(c, CutoffSpec(1.5));
    const ConeChart ch{c};
    const auto r = derivative_bound_check(ev, ch, 1.0, e(3, 2, 512.0), 0.9, 2);
    ASSERT_EQ(r.size(), 1u + 3u + 6u);
    EXPECT_NEAR(r[0].ratio, std::abs(reduced_multiplier(ev, ch, 1.0, e(3, 2, 512.0))) * 8.0, 1e-12);
    const auto r2 = derivative_bound_check(ev, ch, 1.0, e(3, 2, 1024.0), 0.9, 2);
    for (std::size_t i = 0; i < r.size(); ++i) {
        int order = 0;
        for (int a : r[i].alpha) order += a;
        EXPECT_NEAR(r2[i].bound / r[i].bound, std::pow(2.0, -(1.0 + order) / 3.0), 1e-14);
    }
    EXPECT_THROW(derivative_bound_check(ev, ch, 1.0, e(3, 2, 32.0), 0.9, 1), DomainError);
    EXPECT_THROW(derivative_bound_check(ev, ch, 1.0, e(3, 2, 512.0), 0.9, 3), UnsupportedOrderError);
}

TEST(Oscillator, Errors) {
    const MultiplierEvaluator ev(CurveSpec::moment(3), CutoffSpec(1.5));
    EXPECT_THROW(ev(0.5, Vec::Zero(3)), DomainError);
    EXPECT_THROW(ev(1.0, Vec::Zero(2)), DomainError);
    EXPECT_THROW(MultiplierEvaluator(CurveSpec::moment(3, {-1, 1}), CutoffSpec(1.5)), DomainError);
    QuadratureOptions none;
    none.max_refinements = 0;
    const MultiplierEvaluator strict(CurveSpec::moment(3), CutoffSpec(1.5), none);
    try {
        strict(1.0, e(3, 2, 100.0));
        FAIL() << "expected a quadrature error";
    } catch (const QuadratureError& err) {
        EXPECT_EQ(err.kind(), "quadrature-accuracy");
    }
}
