#pragma once

// Fourier transform of the curve measure,
//
//     mu_hat_t(xi) = int exp(-i t <gamma(s), xi>) chi(s) ds,
//
// under the convention f_hat(xi) = int f(x) exp(-i <x, xi>) dx used
// throughout the library, and the reduced multiplier
// m_t(xi) = exp(i t phi(xi)) mu_hat_t(xi).

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include "csl/cone.hpp"
#include "csl/curve.hpp"
#include "csl/errors.hpp"
#include "csl/quadrature.hpp"

namespace csl {

using cplx = std::complex<double>;

/// chi(s) = exp(1 - 1/(1 - (s/delta)^2)) on (-delta, delta), zero elsewhere.
class CutoffSpec {
public:
    explicit CutoffSpec(double delta = 1.5) : delta_(delta) {
        if (!(delta > 0.0)) throw DomainError("cutoff half-width must be positive");
        const auto rule = composite_gauss(-delta_, delta_, 256);
        double acc = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) acc += rule.weights[i] * (*this)(rule.nodes[i]);
        integral_ = acc;
    }

    double delta() const { return delta_; }
    double integral() const { return integral_; }
    Interval support() const { return {-delta_, delta_}; }

    double operator()(double s) const {
        const double u = s / delta_;
        if (!(std::abs(u) < 1.0)) return 0.0;
        return std::exp(1.0 - 1.0 / (1.0 - u * u));
    }

private:
    double delta_;
    double integral_ = 0.0;
};

struct QuadratureOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-14;        // times int chi; floor for rapidly decaying values
    int nodes_per_oscillation = 12;
    int min_panels = 8;
    int max_refinements = 8;
    double panel_budget = 1.0;     // multiplies the initial panel count
};

/// Evaluates mu_hat_t at arbitrary frequencies. Node tables are shared per
/// panel count; the cache is safe under concurrent use.
class MultiplierEvaluator {
public:
    MultiplierEvaluator(CurveSpec curve, CutoffSpec cutoff, QuadratureOptions opts = {})
        : curve_(std::move(curve)), cutoff_(cutoff), opts_(opts) {
        if (!curve_.domain().contains(cutoff_.support()))
            throw DomainError("cutoff support [-" + std::to_string(cutoff_.delta()) + ", " +
                              std::to_string(cutoff_.delta()) + "] exceeds the curve domain");
        speed_ = max_speed(curve_, cutoff_.support());
    }

    const CurveSpec& curve() const { return curve_; }
    const CutoffSpec& cutoff() const { return cutoff_; }
    const QuadratureOptions& options() const { return opts_; }

    int initial_panels(double t, const Vec& xi) const {
        const double oscillations =
            t * xi.norm() * speed_ * 2.0 * cutoff_.delta() / (2.0 * std::numbers::pi);
        const double per_panel = static_cast<double>(kGaussOrder) / opts_.nodes_per_oscillation;
        const int p = static_cast<int>(std::ceil(opts_.panel_budget * (1.0 + oscillations) / per_panel));
        return std::max(p, opts_.min_panels);
    }

    cplx operator()(double t, const Vec& xi) const {
        if (!(t >= 1.0 && t <= 2.0)) throw DomainError("dilation t must lie in [1,2]");
        if (xi.size() != curve_.dimension()) throw DomainError("frequency has wrong dimension");
        int panels = initial_panels(t, xi);
        cplx coarse = integrate(panels, t, xi);
        const double floor = opts_.abs_tol * cutoff_.integral();
        for (int r = 0; r < opts_.max_refinements; ++r) {
            panels *= 2;
            const cplx fine = integrate(panels, t, xi);
            if (std::abs(fine - coarse) <= std::max(opts_.rel_tol * std::abs(fine), floor)) return fine;
            coarse = fine;
        }
        throw QuadratureError("mu_hat quadrature did not reach the accuracy target at |xi|=" +
                              std::to_string(xi.norm()));
    }

private:
    struct Table {
        Eigen::MatrixXd points; // n x M curve samples gamma(s_k)
        Eigen::VectorXd weights; // w_k chi(s_k)
    };

    std::shared_ptr<const Table> table(int panels) const {
        std::lock_guard lock(mutex_);
        auto& slot = tables_[panels];
        if (!slot) {
            const auto rule = composite_gauss(-cutoff_.delta(), cutoff_.delta(), panels);
            auto tab = std::make_shared<Table>();
            const auto m = static_cast<Eigen::Index>(rule.nodes.size());
            tab->points.resize(curve_.dimension(), m);
            tab->weights.resize(m);
            for (Eigen::Index k = 0; k < m; ++k) {
                const double s = rule.nodes[static_cast<std::size_t>(k)];
                tab->points.col(k) = curve_.derivative(0, s);
                tab->weights[k] = rule.weights[static_cast<std::size_t>(k)] * cutoff_(s);
            }
            slot = std::move(tab);
        }
        return slot;
    }

    cplx integrate(int panels, double t, const Vec& xi) const {
        const auto tab = table(panels);
        const Eigen::VectorXd phase = t * (tab->points.transpose() * xi);
        double re = 0.0, im = 0.0;
        for (Eigen::Index k = 0; k < phase.size(); ++k) {
            re += tab->weights[k] * std::cos(phase[k]);
            im -= tab->weights[k] * std::sin(phase[k]);
        }
        return {re, im};
    }

    CurveSpec curve_;
    CutoffSpec cutoff_;
    QuadratureOptions opts_;
    double speed_ = 0.0;
    mutable std::mutex mutex_;
    mutable std::map<int, std::shared_ptr<const Table>> tables_;
};

inline cplx mu_hat(const CurveSpec& curve, const CutoffSpec& cutoff, double t, const Vec& xi) {
    return MultiplierEvaluator(curve, cutoff)(t, xi);
}

/// (2/n) Gamma(1/n) sin((n-1) pi/(2n)) for odd n, (2/n) Gamma(1/n) e^{i pi/(2n)} for even n.
inline cplx alpha_n(int n) {
    if (n < 2) throw DomainError("alpha_n requires n >= 2");
    const double mag = 2.0 / n * std::tgamma(1.0 / n);
    if (n % 2 == 1) return {mag * std::sin((n - 1) * std::numbers::pi / (2.0 * n)), 0.0};
    return std::polar(mag, std::numbers::pi / (2.0 * n));
}

/// int_R exp(-i y^n) dy. Equals alpha_n for odd n and conj(alpha_n) for even n.
inline cplx stationary_phase_constant(int n) {
    if (n < 2) throw DomainError("stationary phase constant requires n >= 2");
    const double mag = 2.0 / n * std::tgamma(1.0 / n);
    if (n % 2 == 1) return {mag * std::cos(std::numbers::pi / (2.0 * n)), 0.0};
    return std::polar(mag, -std::numbers::pi / (2.0 * n));
}

/// beta_2 = 1, beta_n = 0 for n > 2 (log correction in the remainder).
inline double beta_n(int n) { return n == 2 ? 1.0 : 0.0; }

inline double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

struct DecayPoint {
    double lambda = 0;
    double normalized = 0; // |mu_hat_t(lambda dir)| (1 + lambda)^{1/n}
};

inline std::vector<DecayPoint> decay_profile(const MultiplierEvaluator& eval, double t, const Vec& direction,
                                             const std::vector<double>& lambdas) {
    if (std::abs(direction.norm() - 1.0) > 1e-12) throw DomainError("decay direction must be a unit vector");
    const double inv_n = 1.0 / eval.curve().dimension();
    std::vector<DecayPoint> out;
    out.reserve(lambdas.size());
    for (double lam : lambdas)
        out.push_back({lam, std::abs(eval(t, lam * direction)) * std::pow(1.0 + lam, inv_n)});
    return out;
}

struct MultiplierSample {
    Vec xi;
    double t = 1;
    cplx mu_hat;
    cplx m;          // exp(i t phi) mu_hat
    cplx reference;  // alpha_n chi(theta) (t u_n)^{-1/n}
    double deficit = 0;
    cplx leading_term;     // stationary-phase leading term, carries (n!)^{1/n}
    double leading_deficit = 0;
};

inline MultiplierSample multiplier_sample(const MultiplierEvaluator& eval, const ConeChart& chart, double t,
                                          const Vec& xi) {
    const int n = chart.curve.dimension();
    const auto cd = cone_data(chart, xi);
    MultiplierSample s;
    s.xi = xi;
    s.t = t;
    s.mu_hat = eval(t, xi);
    s.m = std::polar(1.0, t * cd.phi) * s.mu_hat;
    const cplx scale = std::pow(cplx(t * cd.u_n, 0.0), -1.0 / n);
    const double chi = eval.cutoff()(cd.theta);
    s.reference = alpha_n(n) * chi * scale;
    s.deficit = std::abs(s.m - s.reference);
    s.leading_term = stationary_phase_constant(n) * chi * std::pow(factorial(n), 1.0 / n) * scale;
    s.leading_deficit = std::abs(s.m - s.leading_term);
    return s;
}

/// Reduced multiplier m_t(xi) = exp(i t phi(xi)) mu_hat_t(xi).
inline cplx reduced_multiplier(const MultiplierEvaluator& eval, const ConeChart& chart, double t,
                               const Vec& xi) {
    return std::polar(1.0, t * phase_phi(chart, xi)) * eval(t, xi);
}

struct DerivativeRatio {
    std::vector<int> alpha;  // multi-index
    double magnitude = 0;    // finite-difference |d^alpha m_t(xi)|
    double bound = 0;        // lambda^{-1/n - |alpha|/n}
    double ratio = 0;
};

/// Central-difference estimates of d^alpha m_t(xi) for |alpha| <= max_order,
/// step h = rho lambda^{1/n} / 64 per axis with lambda = |xi|.
inline std::vector<DerivativeRatio> derivative_bound_check(const MultiplierEvaluator& eval,
                                                           const ConeChart& chart, double t, const Vec& xi,
                                                           double rho, int max_order) {
    if (max_order < 0 || max_order > 2)
        throw UnsupportedOrderError("derivative_bound_check supports |alpha| <= 2");
    const int n = chart.curve.dimension();
    const double lambda = xi.norm();
    if (lambda < 64.0) throw DomainError("derivative_bound_check requires |xi| >= 2^6");
    const double h = rho * std::pow(lambda, 1.0 / n) / 64.0;
    if (!(h > 1e-8 * lambda)) throw ResolutionError("finite-difference step underflows relative to |xi|");

    auto m_at = [&](const Vec& p) { return reduced_multiplier(eval, chart, t, p); };
    auto shifted = [&](int i, double a, int j = -1, double b = 0.0) {
        Vec p = xi;
        p[i] += a * h;
        if (j >= 0) p[j] += b * h;
        return p;
    };
    auto bound = [&](int order) { return std::pow(lambda, -(1.0 + order) / n); };

    std::vector<DerivativeRatio> out;
    const cplx m0 = m_at(xi);
    out.push_back({std::vector<int>(static_cast<std::size_t>(n), 0), std::abs(m0), bound(0), 0});
    if (max_order >= 1) {
        std::vector<cplx> plus(static_cast<std::size_t>(n)), minus(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            plus[static_cast<std::size_t>(i)] = m_at(shifted(i, 1.0));
            minus[static_cast<std::size_t>(i)] = m_at(shifted(i, -1.0));
            std::vector<int> a(static_cast<std::size_t>(n), 0);
            a[static_cast<std::size_t>(i)] = 1;
            out.push_back({a, std::abs((plus[static_cast<std::size_t>(i)] - minus[static_cast<std::size_t>(i)]) /
                                       (2.0 * h)),
                           bound(1), 0});
        }
        if (max_order >= 2) {
            for (int i = 0; i < n; ++i) {
                for (int j = i; j < n; ++j) {
                    std::vector<int> a(static_cast<std::size_t>(n), 0);
                    a[static_cast<std::size_t>(i)] += 1;
                    a[static_cast<std::size_t>(j)] += 1;
                    cplx d;
                    if (i == j) {
                        d = (plus[static_cast<std::size_t>(i)] - 2.0 * m0 + minus[static_cast<std::size_t>(i)]) /
                            (h * h);
                    } else {
                        d = (m_at(shifted(i, 1, j, 1)) - m_at(shifted(i, 1, j, -1)) -
                             m_at(shifted(i, -1, j, 1)) + m_at(shifted(i, -1, j, -1))) /
                            (4.0 * h * h);
                    }
                    out.push_back({a, std::abs(d), bound(2), 0});
                }
            }
        }
    }
    for (auto& r : out) r.ratio = r.magnitude / r.bound;
    return out;
}

} // namespace csl
