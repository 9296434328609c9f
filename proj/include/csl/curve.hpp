#pragma once

// Curves gamma: I -> R^n with analytic derivative rules.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "csl/errors.hpp"

namespace csl {

using Vec = Eigen::VectorXd;

/// Default number of uniform samples for margins and C^{n+1} distances.
inline constexpr int kDefaultCurveSamples = 2048;

struct Interval {
    double lo = -2.0;
    double hi = 2.0;

    bool contains(double s) const { return s >= lo && s <= hi; }
    bool contains(const Interval& o) const { return o.lo >= lo && o.hi <= hi; }
    double length() const { return hi - lo; }
};

/// amplitude * cos(frequency * s + phase); sin is a phase of -pi/2.
struct Sinusoid {
    double amplitude = 0.0;
    double frequency = 1.0;
    double phase = 0.0;
};

/// One coordinate function: a polynomial plus a finite sum of sinusoids.
/// Derivatives of every order are exact.
struct ComponentFunction {
    std::vector<double> poly; // poly[j] multiplies s^j
    std::vector<Sinusoid> waves;

    double derivative(int order, double s) const {
        double acc = 0.0;
        // Horner on the order-th derivative: sum_j poly[j] * j!/(j-order)! * s^(j-order)
        for (int j = static_cast<int>(poly.size()) - 1; j >= order; --j) {
            double falling = 1.0;
            for (int i = 0; i < order; ++i) falling *= static_cast<double>(j - i);
            acc = acc * s + poly[static_cast<std::size_t>(j)] * falling;
        }
        for (const auto& w : waves) {
            acc += w.amplitude * std::pow(w.frequency, order) *
                   std::cos(w.frequency * s + w.phase + order * std::numbers::pi / 2.0);
        }
        return acc;
    }
};

enum class CurveKind { moment, perturbed_moment, table };

inline std::string to_string(CurveKind k) {
    switch (k) {
    case CurveKind::moment: return "moment";
    case CurveKind::perturbed_moment: return "perturbed-moment";
    case CurveKind::table: return "table";
    }
    return "unknown";
}

class CurveSpec {
public:
    /// gamma(s) = (s, s^2/2!, ..., s^n/n!)
    static CurveSpec moment(int n, Interval domain = {}) {
        return CurveSpec(n, CurveKind::moment, moment_components(n), domain);
    }

    /// Moment curve plus polynomial perturbations; perturbation[k][j] is the
    /// coefficient of s^j added to component k (0-based). Missing rows mean zero.
    static CurveSpec perturbed_moment(int n, const std::vector<std::vector<double>>& perturbation,
                                      Interval domain = {}) {
        if (perturbation.size() > static_cast<std::size_t>(n))
            throw DomainError("perturbation has more rows than the curve dimension");
        auto comps = moment_components(n);
        for (std::size_t k = 0; k < perturbation.size(); ++k) {
            auto& p = comps[k].poly;
            if (p.size() < perturbation[k].size()) p.resize(perturbation[k].size(), 0.0);
            for (std::size_t j = 0; j < perturbation[k].size(); ++j) p[j] += perturbation[k][j];
        }
        return CurveSpec(n, CurveKind::perturbed_moment, std::move(comps), domain);
    }

    static CurveSpec table(std::vector<ComponentFunction> components, Interval domain = {}) {
        const int n = static_cast<int>(components.size());
        return CurveSpec(n, CurveKind::table, std::move(components), domain);
    }

    int dimension() const { return n_; }
    CurveKind kind() const { return kind_; }
    const Interval& domain() const { return domain_; }
    const std::vector<ComponentFunction>& components() const { return comps_; }

    /// gamma^{(order)}(s) without range checks; hot paths use this.
    Vec derivative(int order, double s) const {
        Vec v(n_);
        for (int k = 0; k < n_; ++k) v[k] = comps_[static_cast<std::size_t>(k)].derivative(order, s);
        return v;
    }

    Vec operator()(double s) const { return derivative(0, s); }

private:
    CurveSpec(int n, CurveKind kind, std::vector<ComponentFunction> comps, Interval domain)
        : n_(n), kind_(kind), comps_(std::move(comps)), domain_(domain) {
        if (n_ < 2) throw DomainError("curve dimension must be >= 2, got " + std::to_string(n_));
        if (!(domain_.lo < domain_.hi)) throw DomainError("curve domain must be a nonempty interval");
    }

    static std::vector<ComponentFunction> moment_components(int n) {
        std::vector<ComponentFunction> comps(static_cast<std::size_t>(std::max(n, 0)));
        double fact = 1.0;
        for (int k = 1; k <= n; ++k) {
            fact *= k;
            comps[static_cast<std::size_t>(k - 1)].poly.assign(static_cast<std::size_t>(k + 1), 0.0);
            comps[static_cast<std::size_t>(k - 1)].poly[static_cast<std::size_t>(k)] = 1.0 / fact;
        }
        return comps;
    }

    int n_;
    CurveKind kind_;
    std::vector<ComponentFunction> comps_;
    Interval domain_;
};

/// gamma(s), gamma'(s), ..., gamma^{(max_order)}(s).
inline std::vector<Vec> eval_derivatives(const CurveSpec& curve, double s, int max_order) {
    if (!curve.domain().contains(s))
        throw DomainError("parameter s=" + std::to_string(s) + " outside curve domain");
    if (max_order < 0 || max_order > curve.dimension() + 1)
        throw UnsupportedOrderError("derivative order " + std::to_string(max_order) +
                                    " not in 0..n+1 = " + std::to_string(curve.dimension() + 1));
    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(max_order + 1));
    for (int j = 0; j <= max_order; ++j) out.push_back(curve.derivative(j, s));
    return out;
}

namespace detail {

inline bool is_triangular(const Eigen::MatrixXd& m) {
    bool lower = true, upper = true;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > i && m(i, j) != 0.0) lower = false;
            if (j < i && m(i, j) != 0.0) upper = false;
        }
    return lower || upper;
}

// Triangular matrices get the exact diagonal product; LU otherwise.
inline double determinant(const Eigen::MatrixXd& m) {
    if (is_triangular(m)) return m.diagonal().prod();
    return m.partialPivLu().determinant();
}

inline double uniform_point(const Interval& I, int i, int samples) {
    if (i == samples - 1) return I.hi;
    return I.lo + I.length() * static_cast<double>(i) / static_cast<double>(samples - 1);
}

} // namespace detail

/// |det(gamma'(s), ..., gamma^{(n)}(s))| at one parameter value.
inline double wronskian(const CurveSpec& curve, double s) {
    const int n = curve.dimension();
    Eigen::MatrixXd m(n, n);
    for (int j = 1; j <= n; ++j) m.col(j - 1) = curve.derivative(j, s);
    return std::abs(detail::determinant(m));
}

/// min over a uniform grid on the curve domain of the Wronskian determinant.
inline double nondegeneracy_margin(const CurveSpec& curve, int samples = kDefaultCurveSamples) {
    if (samples < 2) throw DomainError("nondegeneracy_margin needs at least 2 samples");
    double margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i)
        margin = std::min(margin, wronskian(curve, detail::uniform_point(curve.domain(), i, samples)));
    return margin;
}

/// sup |gamma'| over [a,b], sampled.
inline double max_speed(const CurveSpec& curve, Interval range, int samples = 257) {
    double best = 0.0;
    for (int i = 0; i < samples; ++i)
        best = std::max(best, curve.derivative(1, detail::uniform_point(range, i, samples)).norm());
    return best;
}

struct ModelClassReport {
    double delta = 0.0;
    double distance = 0.0; // max_{1<=j<=n+1} sup_{[-1,1]} |gamma^{(j)} - gamma_o^{(j)}|
    bool anchored = false;
    bool member_of_G_n_delta = false;
};

/// Membership of the model class G_n(delta): anchored at the moment curve's
/// jet at s=0 and within delta of it in C^{n+1}([-1,1]).
inline ModelClassReport model_class_report(const CurveSpec& curve, double delta,
                                           int samples = kDefaultCurveSamples) {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1)");
    if (!curve.domain().contains(Interval{-1.0, 1.0}))
        throw DomainError("model class requires the curve domain to contain [-1,1]");
    const int n = curve.dimension();
    const auto ref = CurveSpec::moment(n, curve.domain());

    ModelClassReport r;
    r.delta = delta;
    r.anchored = curve.derivative(0, 0.0).isZero(0.0);
    for (int j = 1; j <= n && r.anchored; ++j) {
        Vec e = Vec::Zero(n);
        e[j - 1] = 1.0;
        r.anchored = (curve.derivative(j, 0.0) - e).isZero(0.0);
    }
    const Interval unit{-1.0, 1.0};
    for (int i = 0; i < samples; ++i) {
        const double s = detail::uniform_point(unit, i, samples);
        for (int j = 1; j <= n + 1; ++j)
            r.distance = std::max(r.distance, (curve.derivative(j, s) - ref.derivative(j, s)).norm());
    }
    r.member_of_G_n_delta = r.anchored && r.distance <= delta;
    return r;
}

} // namespace csl
