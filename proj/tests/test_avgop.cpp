#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "csl/avgop.hpp"

using namespace csl;

namespace {

const MultiplierEvaluator& moment3() {
    static const MultiplierEvaluator ev(CurveSpec::moment(3), CutoffSpec(1.5));
    return ev;
}

SpectralField single_mode(const GridSpec& g, const std::vector<std::int64_t>& lattice, cplx c) {
    SpectralField f(g);
    f.declare_everything();
    f.coefficients()[g.flat_of_lattice(lattice)] = c;
    return f;
}

Vec point_of(const GridSpec& g, std::size_t flat) {
    const auto m = g.unflatten(flat);
    Vec x(g.n);
    for (int k = 0; k < g.n; ++k)
        x[k] = static_cast<double>(m[static_cast<std::size_t>(k)]) * g.L / static_cast<double>(g.size[static_cast<std::size_t>(k)]);
    return x;
}

} // namespace

TEST(TimeWindow, NodesAndWeights) {
    const TimeWindow full{WindowKind::full, 5, 64, 3};
    EXPECT_EQ(full.nodes(), (std::vector<double>{1.0, 1.25, 1.5, 1.75, 2.0}));
    const TimeWindow sw{WindowKind::short_window, 9, 64, 3};
    EXPECT_DOUBLE_EQ(sw.end(), 1.25);
    double total = 0.0;
    for (double w : sw.weights()) total += w;
    EXPECT_DOUBLE_EQ(total, 0.25);
    EXPECT_THROW((TimeWindow{WindowKind::full, 4, 64, 3}.nodes()), DomainError);
}

TEST(Averaging, SingleModeIsEigenfunction) {
    const auto g = GridSpec::centered(3, 2.0, 16);
    const std::vector<std::int64_t> k{2, -3, 5};
    const auto f = single_mode(g, k, {1.0, 0.0});
    const double t = 1.3;
    const Vec xi = g.frequency(g.flat_of_lattice(k));
    const cplx mu = moment3()(t, xi);
    const auto out = apply_averaging(f, moment3(), t);
    EXPECT_EQ(out.coefficients()[g.flat_of_lattice(k)], mu);
    const auto vals = out.spatial_values();
    std::vector<Vec> pts;
    for (std::size_t flat : {std::size_t{0}, std::size_t{37}, std::size_t{1234}, g.total() - 1}) {
        const Vec x = point_of(g, flat);
        const cplx expect = mu * std::polar(1.0, x.dot(xi)) / 8.0;
        EXPECT_LT(std::abs(vals[flat] - expect), 1e-12);
        pts.push_back(x);
    }
    const auto direct = direct_oracle(f, moment3(), t, pts);
    for (std::size_t i = 0; i < pts.size(); ++i)
        EXPECT_LT(std::abs(direct[i] - mu * std::polar(1.0, pts[i].dot(xi)) / 8.0), 1e-8 * std::abs(mu) / 8.0);
}

TEST(Averaging, ConstantField) {
    const auto g = GridSpec::centered(3, 2.0, 8);
    const auto f = single_mode(g, {0, 0, 0}, {8.0, 0.0}); // f == 1
    const auto out = apply_averaging(f, moment3(), 1.7).spatial_values();
    for (const auto& v : out) EXPECT_NEAR(std::abs(v - moment3().cutoff().integral()), 0.0, 1e-9);
    const auto direct = direct_oracle(f, moment3(), 1.7, {Vec::Zero(3), Vec::Constant(3, 0.3)});
    for (const auto& v : direct) EXPECT_NEAR(v.real(), moment3().cutoff().integral(), 1e-9);
}

TEST(Averaging, MatchesDirectQuadratureOnBandLimitedField) {
    const auto g = GridSpec::centered(3, 2.0, 32);
    const double lam = 8.0;
    SpectralField f(g);
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> nd;
    for (std::size_t i = 0; i < g.total(); ++i) {
        const double r = g.frequency(i).norm();
        if (r >= lam / 2 && r <= 2 * lam) f.coefficients()[i] = {nd(rng), nd(rng)};
    }
    f.declare_everything();
    const double t = 1.4;
    const auto spectral = apply_averaging(f, moment3(), t, 2).spatial_values();
    std::vector<Vec> pts;
    std::vector<cplx> ref;
    std::uniform_int_distribution<std::size_t> pick(0, g.total() - 1);
    for (int i = 0; i < 48; ++i) {
        const auto flat = pick(rng);
        pts.push_back(point_of(g, flat));
        ref.push_back(spectral[flat]);
    }
    const auto direct = direct_oracle(f, moment3(), t, pts);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        num += std::norm(direct[i] - ref[i]);
        den += std::norm(direct[i]);
    }
    EXPECT_LE(std::sqrt(num / den), 1e-3);
}

TEST(Averaging, ContractionAndSupport) {
    const auto g = GridSpec::centered(3, 2.0, 16);
    SpectralField f(g);
    f.declare({Vec::Constant(3, 6.0), 4.0});
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    for (auto i : f.support_indices()) f.coefficients()[i] = {nd(rng), nd(rng)};
    const auto out = apply_averaging(f, moment3(), 1.0);
    double mx = 0.0;
    for (auto i : f.support_indices()) mx = std::max(mx, std::abs(moment3()(1.0, g.frequency(i))));
    EXPECT_LE(out.l2_squared_lattice(), mx * mx * f.l2_squared_lattice());
    EXPECT_EQ(out.support_indices(), f.support_indices());
    for (std::size_t i = 0; i < g.total(); ++i)
        if (f.coefficients()[i] == cplx{}) EXPECT_EQ(out.coefficients()[i], cplx{});
}

TEST(Averaging, CacheIsIndependentOfJobs) {
    const auto g = GridSpec::centered(3, 2.0, 16);
    SpectralField f(g);
    f.declare({Vec::Constant(3, 5.0), 5.0});
    MultiplierCache one(moment3(), g, f.support_indices()), four(moment3(), g, f.support_indices());
    EXPECT_EQ(*one.at(1.2, 1), *four.at(1.2, 4));
    EXPECT_EQ(one.at(1.2, 1), one.at(1.2, 3)); // cached
}

TEST(Norms, SingleModeAndConstant) {
    const double L = 2.0;
    const auto g = GridSpec::centered(3, L, 8);
    // f = L^{-n} e^{i<x,xi>}: ||f||_2 = L^{-n} L^{n/2}.
    const auto mode = single_mode(g, {1, 2, -1}, {1.0, 0.0});
    EXPECT_NEAR(lp_norm_space(mode, 2.0), std::pow(L, -1.5), 1e-14);
    EXPECT_NEAR(lp_norm_space(mode, INFINITY), std::pow(L, -3.0), 1e-14);
    const auto c = single_mode(g, {0, 0, 0}, {-2.5 * 8.0, 0.0}); // f == -2.5
    for (double p : {1.0, 2.0, 3.5, 6.0}) EXPECT_NEAR(lp_norm_space(c, p), 2.5 * std::pow(L, 3.0 / p), 1e-12);
    EXPECT_THROW(lp_norm_space(c, 0.5), DomainError);
}

TEST(Norms, RiemannSumMatchesDoubleResolution) {
    // A wide bump in frequency gives a localized envelope in space.
    auto build = [](std::int64_t N) {
        const auto g = GridSpec::centered(3, 2.0 * std::numbers::pi, N);
        SpectralField f(g);
        f.declare_everything();
        for (std::size_t i = 0; i < g.total(); ++i) {
            const double r = g.frequency(i).norm();
            f.coefficients()[i] = std::exp(-r * r / 8.0);
        }
        return f;
    };
    for (double p : {3.0, 4.0}) {
        const double a = lp_norm_space(build(24), p), b = lp_norm_space(build(48), p);
        EXPECT_NEAR(a, b, 1e-4 * b) << p;
    }
}

TEST(Norms, SpaceTime) {
    const TimeWindow full{WindowKind::full, 9, 64, 3};
    EXPECT_NEAR(lp_norm_spacetime(std::vector<double>(9, 3.0), full, 4.0), 3.0, 1e-14);
    const TimeWindow sw{WindowKind::short_window, 9, 64, 3};
    EXPECT_NEAR(lp_norm_spacetime(std::vector<double>(9, 3.0), sw, 6.0), 3.0 * std::pow(64.0, -1.0 / 18.0), 1e-14);
    EXPECT_THROW(lp_norm_spacetime(std::vector<double>(8, 3.0), sw, 6.0), DomainError);
}
