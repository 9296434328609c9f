#pragma once

// Composite Gauss-Legendre rules on uniform panels.

#include <boost/math/quadrature/gauss.hpp>

#include <array>
#include <cstddef>
#include <vector>

namespace csl {

inline constexpr int kGaussOrder = 16;

struct PanelRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Nodes and weights of a `panels`-panel composite Gauss-Legendre rule of
/// order 16 on [a, b].
inline PanelRule composite_gauss(double a, double b, int panels) {
    using Gauss = boost::math::quadrature::gauss<double, kGaussOrder>;
    // Boost stores the nonnegative half of the symmetric rule.
    const auto& x = Gauss::abscissa();
    const auto& w = Gauss::weights();
    std::array<double, kGaussOrder> xs{}, ws{};
    std::size_t k = 0;
    for (std::size_t i = x.size(); i-- > 0;) {
        if (x[i] == 0.0) continue;
        xs[k] = -x[i];
        ws[k++] = w[i];
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        xs[k] = x[i];
        ws[k++] = w[i];
    }

    PanelRule rule;
    rule.nodes.reserve(static_cast<std::size_t>(panels) * kGaussOrder);
    rule.weights.reserve(rule.nodes.capacity());
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * h;
        for (std::size_t i = 0; i < k; ++i) {
            rule.nodes.push_back(mid + 0.5 * h * xs[i]);
            rule.weights.push_back(0.5 * h * ws[i]);
        }
    }
    return rule;
}

} // namespace csl
