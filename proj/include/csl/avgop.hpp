#pragma once

// The averaging operator A_t f(x) = int f(x - t gamma(s)) chi(s) ds applied
// spectrally, (A_t f)^(xi) = mu_hat_t(xi) f_hat(xi), together with a direct
// quadrature oracle and L^p norms on the torus.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "csl/errors.hpp"
#include "csl/grid.hpp"
#include "csl/oscillator.hpp"
#include "csl/parallel.hpp"

namespace csl {

enum class WindowKind { full, short_window };

/// Trapezoid nodes on [1,2] or on [1, 1 + lambda^{-1/n}].
struct TimeWindow {
    WindowKind kind = WindowKind::short_window;
    int samples = 9;
    double lambda = 1;
    int n = 3;

    double start() const { return 1.0; }
    double end() const { return kind == WindowKind::full ? 2.0 : 1.0 + std::pow(lambda, -1.0 / n); }
    double length() const { return end() - start(); }

    std::vector<double> nodes() const {
        if (samples < 5) throw DomainError("time window needs at least 5 nodes");
        std::vector<double> t(static_cast<std::size_t>(samples));
        for (int i = 0; i < samples; ++i) t[static_cast<std::size_t>(i)] = start() + length() * i / (samples - 1);
        t.back() = end();
        return t;
    }

    std::vector<double> weights() const {
        std::vector<double> w(static_cast<std::size_t>(samples), length() / (samples - 1));
        w.front() *= 0.5;
        w.back() *= 0.5;
        return w;
    }
};

/// mu_hat_t sampled on a fixed set of window indices, one vector per t.
/// Concurrent lookups of distinct t values are safe.
class MultiplierCache {
public:
    MultiplierCache(const MultiplierEvaluator& eval, GridSpec grid, std::vector<std::size_t> support)
        : eval_(&eval), grid_(std::move(grid)), support_(std::move(support)) {
        std::sort(support_.begin(), support_.end());
    }

    const std::vector<std::size_t>& support() const { return support_; }

    /// Multipliers aligned with support().
    std::shared_ptr<const std::vector<cplx>> at(double t, int jobs = 1) {
        {
            std::lock_guard lock(mutex_);
            if (auto it = cache_.find(t); it != cache_.end()) return it->second;
        }
        auto vals = std::make_shared<std::vector<cplx>>(support_.size());
        parallel_for(support_.size(), jobs, [&](std::size_t i) {
            const Vec xi = grid_.frequency(support_[i]);
            try {
                (*vals)[i] = (*eval_)(t, xi);
            } catch (const QuadratureError& e) {
                throw QuadratureError(std::string(e.what()) + " at xi=" + format(xi));
            }
        });
        std::lock_guard lock(mutex_);
        return cache_.emplace(t, std::move(vals)).first->second;
    }

    /// Value at a window index that belongs to support().
    cplx lookup(const std::vector<cplx>& values, std::size_t flat) const {
        const auto it = std::lower_bound(support_.begin(), support_.end(), flat);
        if (it == support_.end() || *it != flat) throw DomainError("index outside cached support");
        return values[static_cast<std::size_t>(it - support_.begin())];
    }

    static std::string format(const Vec& xi) {
        std::string s = "(";
        for (Eigen::Index k = 0; k < xi.size(); ++k) s += (k ? ", " : "") + std::to_string(xi[k]);
        return s + ")";
    }

private:
    const MultiplierEvaluator* eval_;
    GridSpec grid_;
    std::vector<std::size_t> support_;
    std::mutex mutex_;
    std::map<double, std::shared_ptr<const std::vector<cplx>>> cache_;
};

/// (A_t f)^ = mu_hat_t f_hat on the declared support; other coefficients are copied.
inline SpectralField apply_averaging(const SpectralField& field, const MultiplierEvaluator& eval, double t,
                                     int jobs = 1, MultiplierCache* cache = nullptr) {
    SpectralField out = field;
    const auto& support = field.support_indices();
    if (cache) {
        const auto vals = cache->at(t, jobs);
        for (auto idx : support) out.coefficients()[idx] *= cache->lookup(*vals, idx);
        return out;
    }
    parallel_for(support.size(), jobs, [&](std::size_t i) {
        const auto idx = support[i];
        const Vec xi = field.grid().frequency(idx);
        try {
            out.coefficients()[idx] *= eval(t, xi);
        } catch (const QuadratureError& e) {
            throw QuadratureError(std::string(e.what()) + " at xi=" + MultiplierCache::format(xi));
        }
    });
    return out;
}

/// A_t f at arbitrary points by quadrature in s of f(x - t gamma(s)) chi(s),
/// with f summed directly from its Fourier coefficients. Two refinement
/// levels are compared against the same accuracy target as mu_hat.
inline std::vector<cplx> direct_oracle(const SpectralField& field, const MultiplierEvaluator& eval, double t,
                                       const std::vector<Vec>& points) {
    const auto& grid = field.grid();
    const auto& curve = eval.curve();
    const auto& cutoff = eval.cutoff();
    const auto& opts = eval.options();
    const int n = grid.n;

    std::vector<Vec> freqs;
    std::vector<cplx> coeffs;
    double max_freq = 0.0;
    for (auto idx : field.support_indices()) {
        if (field.coefficients()[idx] == cplx{}) continue;
        freqs.push_back(grid.frequency(idx));
        coeffs.push_back(field.coefficients()[idx]);
        max_freq = std::max(max_freq, freqs.back().norm());
    }
    const double norm = 1.0 / std::pow(grid.L, n);

    auto evaluate = [&](const Vec& y) {
        cplx acc{};
        for (std::size_t k = 0; k < freqs.size(); ++k) acc += coeffs[k] * std::polar(1.0, y.dot(freqs[k]));
        return acc * norm;
    };
    auto integrate = [&](const Vec& x, int panels) {
        const auto rule = composite_gauss(-cutoff.delta(), cutoff.delta(), panels);
        cplx acc{};
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
            const double s = rule.nodes[q];
            acc += rule.weights[q] * cutoff(s) * evaluate(x - t * curve.derivative(0, s));
        }
        return acc;
    };

    Vec probe = Vec::Zero(n);
    if (n > 0) probe[n - 1] = max_freq;
    const int base = eval.initial_panels(t, probe);
    double scale = 0.0;
    for (const auto& c : coeffs) scale += std::abs(c);
    scale *= norm * cutoff.integral();

    std::vector<cplx> out;
    out.reserve(points.size());
    for (const auto& x : points) {
        int panels = base;
        cplx coarse = integrate(x, panels);
        bool ok = false;
        for (int r = 0; r < opts.max_refinements; ++r) {
            panels *= 2;
            const cplx fine = integrate(x, panels);
            if (std::abs(fine - coarse) <= std::max(opts.rel_tol * std::abs(fine), opts.abs_tol * scale)) {
                out.push_back(fine);
                ok = true;
                break;
            }
            coarse = fine;
        }
        if (!ok) throw QuadratureError("direct oracle quadrature did not reach the accuracy target");
    }
    return out;
}

/// (sum_j |v_j|^p cell)^{1/p}, or max |v_j| for p = inf, with a fixed
/// block reduction order.
inline double lp_norm_values(const std::vector<cplx>& values, double cell, double p, int jobs = 1) {
    if (std::isinf(p)) {
        double m = 0.0;
        for (const auto& v : values) m = std::max(m, std::abs(v));
        return m;
    }
    if (!(p >= 1.0)) throw DomainError("L^p norm requires p >= 1");
    const double sum = parallel_block_sum<double>(values.size(), jobs, [&](std::size_t lo, std::size_t hi) {
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) acc += std::pow(std::abs(values[i]), p);
        return acc;
    });
    return std::pow(sum * cell, 1.0 / p);
}

/// Several norms from one inverse transform.
inline std::vector<double> lp_norms_space(const SpectralField& field, const std::vector<double>& ps, int jobs = 1) {
    const auto vals = field.spatial_values(false);
    std::vector<double> out;
    for (double p : ps) out.push_back(lp_norm_values(vals, field.grid().cell_volume(), p, jobs));
    return out;
}

inline double lp_norm_space(const SpectralField& field, double p, int jobs = 1) {
    return lp_norms_space(field, {p}, jobs).front();
}

/// (trapezoid over the window of ||A_t f||_p^p)^{1/p} from per-node space norms.
inline double lp_norm_spacetime(const std::vector<double>& space_norms, const TimeWindow& window, double p) {
    if (space_norms.size() != static_cast<std::size_t>(window.samples))
        throw DomainError("one space norm per window node is required");
    const auto w = window.weights();
    if (std::isinf(p)) return *std::max_element(space_norms.begin(), space_norms.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * std::pow(space_norms[i], p);
    return std::pow(acc, 1.0 / p);
}

inline double lp_norm_spacetime(const std::vector<SpectralField>& fields_by_t, const TimeWindow& window, double p,
                                int jobs = 1) {
    std::vector<double> norms;
    norms.reserve(fields_by_t.size());
    for (const auto& f : fields_by_t) norms.push_back(lp_norm_space(f, p, jobs));
    return lp_norm_spacetime(norms, window, p);
}

} // namespace csl
