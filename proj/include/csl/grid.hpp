#pragma once

// Periodic lattices and spectral fields.
//
// A field on the torus (R / L Z)^n is stored by its Fourier coefficients on
// a rectangular window of the frequency lattice (2 pi / L) Z^n:
//
//     f(x) = L^{-n} sum_k c_k exp(i <x, xi_k>),   xi_k = (lo + m) * 2 pi / L,
//
// so that c_k samples f_hat and spatial values approximate the R^n inverse
// transform (2 pi)^{-n} int f_hat(xi) exp(i <x, xi>) d xi. Axis k of the window
// holds size[k] consecutive lattice indices starting at lo[k]; spatial samples
// sit at x_j = j L / size[k]. Flat indices are row-major (last axis fastest).

#include <fftw3.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <mutex>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "csl/errors.hpp"
#include "csl/parallel.hpp"

namespace csl {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;

struct GridSpec {
    int n = 3;
    double L = 2.0;
    std::vector<std::int64_t> size;  // points per axis
    std::vector<std::int64_t> lo;    // first lattice index per axis

    /// Window of N lattice points per axis centered on the origin.
    static GridSpec centered(int n, double L, std::int64_t N) {
        if (n < 1 || !(L > 0.0) || N < 2) throw GridError("invalid centered grid parameters");
        GridSpec g;
        g.n = n;
        g.L = L;
        g.size.assign(static_cast<std::size_t>(n), N);
        g.lo.assign(static_cast<std::size_t>(n), -N / 2);
        return g;
    }

    double spacing() const { return 2.0 * std::numbers::pi / L; }

    std::size_t total() const {
        std::size_t t = 1;
        for (auto s : size) t *= static_cast<std::size_t>(s);
        return t;
    }

    /// Bytes for one complex field plus one transform buffer.
    double memory_bytes() const { return 2.0 * 16.0 * static_cast<double>(total()); }

    double cell_volume() const {
        double v = 1.0;
        for (auto s : size) v *= L / static_cast<double>(s);
        return v;
    }

    /// Axis multi-index of a flat index.
    std::vector<std::int64_t> unflatten(std::size_t flat) const {
        std::vector<std::int64_t> m(static_cast<std::size_t>(n));
        for (int k = n - 1; k >= 0; --k) {
            const auto s = static_cast<std::size_t>(size[static_cast<std::size_t>(k)]);
            m[static_cast<std::size_t>(k)] = static_cast<std::int64_t>(flat % s);
            flat /= s;
        }
        return m;
    }

    /// Frequency of a flat window index.
    Vec frequency(std::size_t flat) const {
        const auto m = unflatten(flat);
        Vec xi(n);
        for (int k = 0; k < n; ++k)
            xi[k] = static_cast<double>(lo[static_cast<std::size_t>(k)] + m[static_cast<std::size_t>(k)]) * spacing();
        return xi;
    }

    /// Flat index of a lattice point given by absolute lattice indices, or
    /// npos-like sentinel (total()) when outside the window.
    std::size_t flat_of_lattice(const std::vector<std::int64_t>& lattice) const {
        std::size_t flat = 0;
        for (int k = 0; k < n; ++k) {
            const auto off = lattice[static_cast<std::size_t>(k)] - lo[static_cast<std::size_t>(k)];
            if (off < 0 || off >= size[static_cast<std::size_t>(k)]) return total();
            flat = flat * static_cast<std::size_t>(size[static_cast<std::size_t>(k)]) + static_cast<std::size_t>(off);
        }
        return flat;
    }

    /// Minimum-image spatial coordinate of sample j on axis k.
    double coordinate(int k, std::int64_t j) const {
        const auto N = size[static_cast<std::size_t>(k)];
        const auto jj = j > N / 2 ? j - N : j;
        return static_cast<double>(jj) * L / static_cast<double>(N);
    }
};

struct Ball {
    Vec center;
    double radius = 0;
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwBuffer {
    explicit FftwBuffer(std::size_t count)
        : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * count))) {
        if (!data) throw std::bad_alloc();
    }
    ~FftwBuffer() { fftw_free(data); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
    fftw_complex* data;
};

} // namespace detail

/// Unnormalized multidimensional DFT, out_j = sum_m in_m exp(sign 2 pi i <j, m/N>).
/// FFTW_BACKWARD is the + sign.
inline std::vector<cplx> dft(const std::vector<cplx>& input, const std::vector<std::int64_t>& dims, int sign) {
    std::size_t total = 1;
    std::vector<int> d(dims.size());
    for (std::size_t k = 0; k < dims.size(); ++k) {
        d[k] = static_cast<int>(dims[k]);
        total *= static_cast<std::size_t>(dims[k]);
    }
    if (input.size() != total) throw GridError("dft input size does not match dimensions");
    detail::FftwBuffer buf(total);
    fftw_plan plan;
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        plan = fftw_plan_dft(static_cast<int>(d.size()), d.data(), buf.data, buf.data, sign, FFTW_ESTIMATE);
    }
    if (!plan) throw GridError("FFTW planning failed");
    std::copy(input.begin(), input.end(), reinterpret_cast<cplx*>(buf.data));
    fftw_execute(plan);
    std::vector<cplx> out(reinterpret_cast<cplx*>(buf.data), reinterpret_cast<cplx*>(buf.data) + total);
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

class SpectralField {
public:
    SpectralField() = default;
    explicit SpectralField(GridSpec grid) : grid_(std::move(grid)), coeffs_(grid_.total(), cplx{}) {}

    const GridSpec& grid() const { return grid_; }
    std::vector<cplx>& coefficients() { return coeffs_; }
    const std::vector<cplx>& coefficients() const { return coeffs_; }

    const std::vector<Ball>& declared_support() const { return balls_; }
    /// Sorted flat indices of lattice points strictly inside the declared balls.
    const std::vector<std::size_t>& support_indices() const { return support_; }

    /// Adds a ball to the declared support. Lattice points inside it must lie
    /// in the window.
    void declare(const Ball& ball) {
        auto pts = lattice_points_in(grid_, ball);
        balls_.push_back(ball);
        std::vector<std::size_t> merged;
        merged.reserve(support_.size() + pts.size());
        std::sort(pts.begin(), pts.end());
        std::set_union(support_.begin(), support_.end(), pts.begin(), pts.end(), std::back_inserter(merged));
        support_ = std::move(merged);
    }

    /// Declares the whole window as support (used for generic fields).
    void declare_everything() {
        support_.resize(grid_.total());
        std::iota(support_.begin(), support_.end(), std::size_t{0});
    }

    void copy_support_from(const SpectralField& other) {
        balls_ = other.balls_;
        support_ = other.support_;
    }

    /// f(x_j) at all grid samples; phases are exact when `with_phase` is true,
    /// otherwise values are correct up to a unimodular factor per sample.
    std::vector<cplx> spatial_values(bool with_phase = true) const {
        auto vals = dft(coeffs_, grid_.size, FFTW_BACKWARD);
        const double scale = 1.0 / std::pow(grid_.L, grid_.n);
        bool shifted = false;
        for (auto l : grid_.lo) shifted |= (l != 0);
        if (!with_phase || !shifted) {
            for (auto& v : vals) v *= scale;
            return vals;
        }
        const int n = grid_.n;
        std::vector<std::vector<cplx>> axis_phase(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) {
            const auto N = grid_.size[static_cast<std::size_t>(k)];
            const auto lo = grid_.lo[static_cast<std::size_t>(k)];
            auto& ph = axis_phase[static_cast<std::size_t>(k)];
            ph.resize(static_cast<std::size_t>(N));
            for (std::int64_t j = 0; j < N; ++j) {
                // exp(2 pi i j lo / N), reduced exactly in integers first
                const auto r = ((j * lo) % N + N) % N;
                ph[static_cast<std::size_t>(j)] =
                    std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(N));
            }
        }
        std::vector<std::size_t> m(static_cast<std::size_t>(n), 0);
        for (std::size_t flat = 0; flat < vals.size(); ++flat) {
            cplx p = scale;
            for (std::size_t k = 0; k < m.size(); ++k) p *= axis_phase[k][m[k]];
            vals[flat] *= p;
            for (std::size_t k = m.size(); k-- > 0;) {
                if (++m[k] < static_cast<std::size_t>(grid_.size[k])) break;
                m[k] = 0;
            }
        }
        return vals;
    }

    /// sum |c_k|^2 / L^n, the squared L^2 norm on the torus via Parseval.
    double l2_squared_lattice() const {
        double acc = 0.0;
        for (auto i : support_) acc += std::norm(coeffs_[i]);
        return acc / std::pow(grid_.L, grid_.n);
    }

    static std::vector<std::size_t> lattice_points_in(const GridSpec& grid, const Ball& ball) {
        const int n = grid.n;
        const double h = grid.spacing();
        std::vector<std::int64_t> lo(static_cast<std::size_t>(n)), hi(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) {
            lo[static_cast<std::size_t>(k)] = static_cast<std::int64_t>(std::floor((ball.center[k] - ball.radius) / h));
            hi[static_cast<std::size_t>(k)] = static_cast<std::int64_t>(std::ceil((ball.center[k] + ball.radius) / h));
        }
        std::vector<std::size_t> out;
        std::vector<std::int64_t> idx = lo;
        while (true) {
            double d2 = 0.0;
            for (int k = 0; k < n; ++k) {
                const double d = static_cast<double>(idx[static_cast<std::size_t>(k)]) * h - ball.center[k];
                d2 += d * d;
            }
            if (d2 < ball.radius * ball.radius) {
                const auto flat = grid.flat_of_lattice(idx);
                if (flat == grid.total())
                    throw GridError("declared support leaves the grid's frequency window (Nyquist range)");
                out.push_back(flat);
            }
            int k = n - 1;
            while (k >= 0 && ++idx[static_cast<std::size_t>(k)] > hi[static_cast<std::size_t>(k)]) {
                idx[static_cast<std::size_t>(k)] = lo[static_cast<std::size_t>(k)];
                --k;
            }
            if (k < 0) break;
        }
        return out;
    }

private:
    GridSpec grid_;
    std::vector<cplx> coeffs_;
    std::vector<Ball> balls_;
    std::vector<std::size_t> support_;
};

/// Least 2^a 3^b 5^c 7^d >= x.
inline std::int64_t smooth_size(std::int64_t x) {
    for (std::int64_t v = std::max<std::int64_t>(x, 1);; ++v) {
        auto r = v;
        for (std::int64_t p : {2, 3, 5, 7})
            while (r % p == 0) r /= p;
        if (r == 1) return v;
    }
}

} // namespace csl
