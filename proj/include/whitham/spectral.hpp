#pragma once

// Periodic grid on [0, 2 pi L), real zero-mean fields stored as Fourier-series
// coefficients c_k (u(x) = sum_k c_k exp(i k x / L)), and the linear
// operations on them. Transforms are done with FFTW.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "whitham/dispersion.hpp"
#include "whitham/detail/summation.hpp"
#include "whitham/errors.hpp"

namespace whitham {

using cplx = std::complex<double>;

/// Periodic grid: n_points samples of [0, 2 pi L); wavenumbers xi_k = k / L for
/// integer k in [-n/2, n/2).
class Grid {
  public:
    Grid(int n_points, double scale) : n_(n_points), scale_(scale) {
        detail::require(n_points >= 16 && (n_points & (n_points - 1)) == 0,
                        "Grid: n_points must be a power of two >= 16");
        detail::require(scale > 0.0 && std::isfinite(scale), "Grid: scale must be positive");
    }

    int n_points() const { return n_; }
    double scale() const { return scale_; }
    double length() const { return 2.0 * std::numbers::pi * scale_; }

    /// Integer wavenumber stored at FFT-order index i.
    int mode(int i) const { return i < n_ / 2 ? i : i - n_; }
    /// FFT-order index of integer wavenumber k in [-n/2, n/2).
    int index(int k) const { return k >= 0 ? k : k + n_; }
    double wavenumber(int k) const { return static_cast<double>(k) / scale_; }
    double x(int j) const { return length() * j / n_; }

    int nyquist() const { return -n_ / 2; }
    /// Largest |k| kept by the 2/3 rule.
    int dealias_cutoff() const { return n_ / 3; }
    double max_wavenumber() const { return wavenumber(n_ / 2); }

    bool operator==(const Grid& o) const { return n_ == o.n_ && scale_ == o.scale_; }

  private:
    int n_;
    double scale_;
};

namespace detail {

// Plan cache: planning is not thread-safe in FFTW, execution with the
// new-array interface is.
class FftPlans {
  public:
    static FftPlans& instance() {
        static FftPlans plans;
        return plans;
    }

    std::pair<fftw_plan, fftw_plan> get(int n) {
        std::lock_guard lock(mutex_);
        auto it = plans_.find(n);
        if (it != plans_.end()) return it->second;
        std::vector<cplx> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
        auto* in = reinterpret_cast<fftw_complex*>(a.data());
        auto* out = reinterpret_cast<fftw_complex*>(b.data());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        auto fwd = fftw_plan_dft_1d(n, in, out, FFTW_FORWARD, flags);
        auto bwd = fftw_plan_dft_1d(n, in, out, FFTW_BACKWARD, flags);
        return plans_[n] = {fwd, bwd};
    }

    ~FftPlans() {
        for (auto& [n, p] : plans_) {
            fftw_destroy_plan(p.first);
            fftw_destroy_plan(p.second);
        }
    }

  private:
    FftPlans() = default;
    std::mutex mutex_;
    std::map<int, std::pair<fftw_plan, fftw_plan>> plans_;
};

inline void fft(std::span<const cplx> in, std::span<cplx> out, bool forward) {
    const auto [fwd, bwd] = FftPlans::instance().get(static_cast<int>(in.size()));
    fftw_execute_dft(forward ? fwd : bwd,
                     reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace detail

/// Real, zero-mean field on a grid. Coefficients are in FFT order; use
/// coeff(k) for access by signed wavenumber index.
class Field {
  public:
    explicit Field(Grid grid) : grid_(grid), c_(static_cast<std::size_t>(grid.n_points())) {}

    const Grid& grid() const { return grid_; }
    std::span<const cplx> coeffs() const { return c_; }
    std::span<cplx> coeffs() { return c_; }

    cplx coeff(int k) const { return c_[static_cast<std::size_t>(grid_.index(k))]; }
    cplx& coeff(int k) { return c_[static_cast<std::size_t>(grid_.index(k))]; }

    /// Sets c_k and c_{-k} = conj(c_k) together (k != 0; the Nyquist mode takes the real part).
    void set_mode(int k, cplx c) {
        detail::require(k != 0, "Field::set_mode: the zero mode is pinned to 0");
        if (k == grid_.nyquist() || -k == grid_.nyquist()) {
            coeff(grid_.nyquist()) = c.real();
            return;
        }
        coeff(k) = c;
        coeff(-k) = std::conj(c);
    }

    /// Mean removed by synthesize(); 0 for fields built any other way.
    double removed_mean = 0.0;

    /// Largest |k| with a nonzero coefficient (0 for the zero field).
    int band_limit() const {
        int b = 0;
        for (int i = 0; i < grid_.n_points(); ++i) {
            if (c_[static_cast<std::size_t>(i)] != cplx{}) b = std::max(b, std::abs(grid_.mode(i)));
        }
        return b;
    }

    bool all_finite() const {
        return std::all_of(c_.begin(), c_.end(),
                           [](cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
    }

    Field& operator+=(const Field& o) {
        check_same(o);
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
        return *this;
    }
    Field& operator-=(const Field& o) {
        check_same(o);
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
        return *this;
    }
    Field& operator*=(double s) {
        for (auto& z : c_) z *= s;
        return *this;
    }
    friend Field operator+(Field a, const Field& b) { return a += b; }
    friend Field operator-(Field a, const Field& b) { return a -= b; }
    friend Field operator*(double s, Field a) { return a *= s; }
    friend Field operator-(Field a) { return a *= -1.0; }

    void check_same(const Field& o) const {
        detail::require(grid_ == o.grid_, "fields live on different grids");
    }

  private:
    Grid grid_;
    std::vector<cplx> c_;
};

namespace detail {

// synthesize without input checks; non-finite values propagate into the coefficients.
inline Field transform_values(const Grid& grid, std::span<const double> values) {
    const int n = grid.n_points();
    std::vector<cplx> in(values.begin(), values.end());
    Field f(grid);
    detail::fft(in, f.coeffs(), true);
    const double inv = 1.0 / n;
    for (auto& z : f.coeffs()) z *= inv;
    f.removed_mean = f.coeff(0).real();
    f.coeff(0) = 0.0;
    for (int k = 1; k < n / 2; ++k) {
        const cplx avg = 0.5 * (f.coeff(k) + std::conj(f.coeff(-k)));
        f.coeff(k) = avg;
        f.coeff(-k) = std::conj(avg);
    }
    f.coeff(grid.nyquist()) = f.coeff(grid.nyquist()).real();
    return f;
}

}  // namespace detail

/// Forward transform of point values x_j = 2 pi L j / n. The mean is removed
/// and kept in removed_mean; conjugate symmetry is imposed exactly.
inline Field synthesize(const Grid& grid, std::span<const double> values) {
    detail::require(static_cast<int>(values.size()) == grid.n_points(),
                    "synthesize: expected " + std::to_string(grid.n_points()) + " values, got " +
                        std::to_string(values.size()));
    for (double v : values) {
        detail::require(std::isfinite(v), "synthesize: non-finite input value");
    }
    return detail::transform_values(grid, values);
}

/// Point values at x_j (inverse transform). The removed mean is not added back.
inline std::vector<double> sample(const Field& f) {
    const int n = f.grid().n_points();
    std::vector<cplx> out(static_cast<std::size_t>(n));
    detail::fft(f.coeffs(), out, false);
    std::vector<double> u(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) u[static_cast<std::size_t>(j)] = out[static_cast<std::size_t>(j)].real();
    return u;
}

/// Samples an arbitrary function at the grid points and synthesizes it.
template <class F>
Field synthesize_function(const Grid& grid, F&& fn) {
    std::vector<double> v(static_cast<std::size_t>(grid.n_points()));
    for (int j = 0; j < grid.n_points(); ++j) v[static_cast<std::size_t>(j)] = fn(grid.x(j));
    return synthesize(grid, v);
}

/// (i xi_k)^order c_k. Odd orders zero the Nyquist mode.
inline Field derivative(const Field& f, int order) {
    detail::require(order >= 0, "derivative: order must be >= 0");
    Field out = f;
    out.removed_mean = 0.0;
    const Grid& g = f.grid();
    for (int i = 0; i < g.n_points(); ++i) {
        const double xi = g.wavenumber(g.mode(i));
        cplx z = out.coeffs()[static_cast<std::size_t>(i)];
        for (int r = 0; r < order; ++r) z = cplx(-z.imag() * xi, z.real() * xi);  // z *= i xi
        out.coeffs()[static_cast<std::size_t>(i)] = z;
    }
    if (order % 2 == 1) out.coeff(g.nyquist()) = 0.0;
    return out;
}

/// Fourier multiplier with symbol p: c_k -> p(xi_k) c_k.
inline Field apply_L(const SymbolSpec& sym, const Field& f) {
    Field out(f.grid());
    const Grid& g = f.grid();
    for (int i = 0; i < g.n_points(); ++i) {
        const int k = g.mode(i);
        if (k == 0) continue;
        out.coeffs()[static_cast<std::size_t>(i)] = sym.p(g.wavenumber(k)) * f.coeffs()[static_cast<std::size_t>(i)];
    }
    return out;
}

/// Parseval inner product 2 pi L sum_k f_k conj(g_k) (real for real fields).
inline double inner(const Field& f, const Field& g) {
    f.check_same(g);
    detail::CompensatedSum s;
    for (std::size_t i = 0; i < f.coeffs().size(); ++i) {
        s.add((f.coeffs()[i] * std::conj(g.coeffs()[i])).real());
    }
    return f.grid().length() * s.value();
}

/// (2 pi L sum_k (1 + xi_k^2)^s |c_k|^2)^(1/2); s = 0 is the L2 norm on a period.
inline double sobolev_norm(const Field& f, double s) {
    detail::require(s >= -2.0, "sobolev_norm: s must be >= -2");
    const Grid& g = f.grid();
    detail::CompensatedSum acc;
    for (int i = 0; i < g.n_points(); ++i) {
        const double xi = g.wavenumber(g.mode(i));
        acc.add(std::pow(1.0 + xi * xi, s) * std::norm(f.coeffs()[static_cast<std::size_t>(i)]));
    }
    return std::sqrt(g.length() * acc.value());
}

/// ||d_x^k f||^2 = 2 pi L sum_k xi^(2k) |c_k|^2.
inline double seminorm_sq(const Field& f, int k) {
    const Grid& g = f.grid();
    detail::CompensatedSum acc;
    for (int i = 0; i < g.n_points(); ++i) {
        const double xi = g.wavenumber(g.mode(i));
        acc.add(std::pow(xi * xi, k) * std::norm(f.coeffs()[static_cast<std::size_t>(i)]));
    }
    return g.length() * acc.value();
}

/// f(-x): c_k -> c_{-k} = conj(c_k).
inline Field reflect(const Field& f) {
    Field out = f;
    for (auto& z : out.coeffs()) z = std::conj(z);
    return out;
}

/// 2/3 rule: zero every |k| > n/3.
inline Field dealias(const Field& f) {
    Field out = f;
    const Grid& g = f.grid();
    for (int i = 0; i < g.n_points(); ++i) {
        if (std::abs(g.mode(i)) > g.dealias_cutoff()) out.coeffs()[static_cast<std::size_t>(i)] = 0.0;
    }
    return out;
}

/// Pseudo-spectral product f g with the mean projected out (aliased; dealias
/// the result when the inputs are band-limited to n/3).
inline Field multiply(const Field& f, const Field& g) {
    f.check_same(g);
    const auto a = sample(f);
    const auto b = sample(g);
    std::vector<double> prod(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) prod[j] = a[j] * b[j];
    Field out = detail::transform_values(f.grid(), prod);
    out.removed_mean = 0.0;
    return out;
}

/// Random real field with modes 1..band and amplitudes ~ 1/(1+k^2), scaled to
/// unit L2 norm. Used for property tests and randomized identity checks.
inline Field random_field(const Grid& grid, int band, std::uint64_t seed) {
    detail::require(band >= 1 && band < grid.n_points() / 2, "random_field: band out of range");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Field f(grid);
    for (int k = 1; k <= band; ++k) {
        const double amp = 1.0 / (1.0 + static_cast<double>(k) * k);
        const double re = normal(rng), im = normal(rng);
        f.set_mode(k, amp * cplx(re, im));
    }
    const double nrm = sobolev_norm(f, 0.0);
    return nrm > 0.0 ? (1.0 / nrm) * f : f;
}

}  // namespace whitham
