#pragma once

// Bilinear pseudoproducts
//   B(f,g)^_k = sum_j m(xi_{k-j}, xi_j) f_{k-j} g_j     (symbol m = xi / (2 phi))
//   Q(f,g)^_k = sum_j n(xi_{k-j}, xi_j) f_{k-j} g_j     (symbol n = -i / (2 phi))
// evaluated as dense frequency convolutions. The multiplier is not
// separable, so the cost is O(N^2) per product.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <iostream>
#include <limits>
#include <vector>

#include "whitham/detail/parallel.hpp"
#include "whitham/detail/summation.hpp"
#include "whitham/dispersion.hpp"
#include "whitham/spectral.hpp"

namespace whitham {

namespace detail {

// Output-block size for the convolution kernel; 0 means "not chosen yet".
inline std::atomic<int>& kernel_block_setting() {
    static std::atomic<int> value{0};
    return value;
}

}  // namespace detail

inline int tune_kernel_block_size(std::ostream* log = &std::clog);

/// p(xi_k) xi_k tabulated on all grid wavenumbers, so that
/// phi(xi_a, xi_b) = flux[a] + flux[b] - flux[a+b] costs three loads.
class FluxTable {
  public:
    FluxTable(const SymbolSpec& sym, const Grid& grid) : grid_(grid), half_(grid.n_points() / 2) {
        flux_.resize(static_cast<std::size_t>(grid.n_points()));
        for (int k = -half_; k < half_; ++k) flux_[static_cast<std::size_t>(k + half_)] = sym.flux(grid.wavenumber(k));
    }

    const Grid& grid() const { return grid_; }
    double flux(int k) const { return flux_[static_cast<std::size_t>(k + half_)]; }
    /// phi(xi_a, xi_b); a, b and a+b must be resolved wavenumbers.
    double phi(int a, int b) const { return detail::sum3(flux(a), flux(b), -flux(a + b)); }

  private:
    Grid grid_;
    int half_;
    std::vector<double> flux_;
};

/// Generic pair-symmetric convolution
///   out_k = sum over unordered pairs {a, b}, a + b = k, of w(a, b) (f_a g_b + f_b g_a)
/// (the diagonal a = b contributes w(a,a) f_a g_a) for 0 < k <= k_out, with
/// out_{-k} = conj(out_k). Pairs are summed in ascending order of the smaller
/// index with compensated accumulation, so the result is deterministic and
/// exactly symmetric in (f, g). The weight must satisfy w(a,b) = w(b,a).
template <class Weight>
Field pair_convolve(const Field& f, const Field& g, int k_out, Weight&& w, int block = 0) {
    f.check_same(g);
    const Grid& grid = f.grid();
    const int half = grid.n_points() / 2;
    k_out = std::min(k_out, half - 1);
    Field out(grid);
    if (k_out < 1) return out;
    if (block <= 0) block = tune_kernel_block_size();
    std::vector<cplx> result(static_cast<std::size_t>(k_out) + 1);
    detail::parallel_blocks(static_cast<std::size_t>(k_out), static_cast<std::size_t>(block),
                            [&](std::size_t begin, std::size_t end) {
        for (std::size_t kk = begin; kk < end; ++kk) {
            const int k = static_cast<int>(kk) + 1;
            detail::CompensatedComplexSum acc;
            // a ranges over resolved indices with b = k - a also resolved and a < b.
            const int a_lo = std::max(-half, k - (half - 1));
            for (int a = a_lo; 2 * a < k; ++a) {
                const int b = k - a;
                const double wt = w(a, b);
                if (wt == 0.0) continue;
                acc.add(wt * (f.coeff(a) * g.coeff(b) + f.coeff(b) * g.coeff(a)));
            }
            if (k % 2 == 0) {
                const int a = k / 2;
                const double wt = w(a, a);
                if (wt != 0.0) acc.add(wt * (f.coeff(a) * g.coeff(a)));
            }
            result[static_cast<std::size_t>(k)] = acc.value();
        }
    });
    for (int k = 1; k <= k_out; ++k) {
        out.coeff(k) = result[static_cast<std::size_t>(k)];
        out.coeff(-k) = std::conj(result[static_cast<std::size_t>(k)]);
    }
    return out;
}

/// Reusable evaluator of B and Q for one (symbol, grid) pair.
class Pseudoproduct {
  public:
    Pseudoproduct(const SymbolSpec& sym, const Grid& grid) : table_(sym, grid) {}

    const FluxTable& table() const { return table_; }

    /// m(xi_a, xi_b) from the table, zero on the resonance set.
    double m(int a, int b) const {
        if (a == 0 || b == 0 || a + b == 0) return 0.0;
        return table_.grid().wavenumber(a + b) / (2.0 * table_.phi(a, b));
    }

    /// Im n(xi_a, xi_b) = -1 / (2 phi); n is purely imaginary.
    double n_imag(int a, int b) const {
        if (a == 0 || b == 0 || a + b == 0) return 0.0;
        return -1.0 / (2.0 * table_.phi(a, b));
    }

    /// B(f,g), dealiased (|k| <= n/3 only).
    Field B(const Field& f, const Field& g) const {
        check(f, g);
        return pair_convolve(f, g, table_.grid().dealias_cutoff(), [this](int a, int b) { return m(a, b); });
    }

    /// Q(f,g) = d_x^{-1} B(f,g), dealiased.
    Field Q(const Field& f, const Field& g) const {
        check(f, g);
        Field s = pair_convolve(f, g, table_.grid().dealias_cutoff(),
                                [this](int a, int b) { return n_imag(a, b); });
        // n = i n_imag with n_imag odd, so Q_{-k} = conj(Q_k) = -i conj(S_k).
        const Grid& grid = table_.grid();
        for (int i = 0; i < grid.n_points(); ++i) {
            const int k = grid.mode(i);
            auto& z = s.coeffs()[static_cast<std::size_t>(i)];
            z = (k > 0 ? cplx(0.0, 1.0) : cplx(0.0, -1.0)) * z;
        }
        return s;
    }

  private:
    void check(const Field& f, const Field& g) const {
        detail::require(f.grid() == table_.grid() && g.grid() == table_.grid(),
                        "pseudoproduct: field grid does not match the evaluator grid");
    }

    FluxTable table_;
};

inline Field bilinear_B(const SymbolSpec& sym, const Field& f, const Field& g) {
    f.check_same(g);
    return Pseudoproduct(sym, f.grid()).B(f, g);
}

inline Field bilinear_Q(const SymbolSpec& sym, const Field& f, const Field& g) {
    f.check_same(g);
    return Pseudoproduct(sym, f.grid()).Q(f, g);
}

/// Times the kernel at a few block sizes on an n=512 product and keeps the
/// fastest. Runs once per process unless a size was set explicitly.
inline int tune_kernel_block_size(std::ostream* log) {
    auto& setting = detail::kernel_block_setting();
    if (const int v = setting.load(); v > 0) return v;
    const Grid grid(512, 1.0);
    const Field f = random_field(grid, grid.dealias_cutoff(), 7);
    const auto w = [](int a, int b) { return 1.0 / (1.0 + std::abs(a) + std::abs(b)); };
    int best = 32;
    double best_time = std::numeric_limits<double>::infinity();
    for (int block : {8, 16, 32, 64, 170}) {
        const auto t0 = std::chrono::steady_clock::now();
        (void)pair_convolve(f, f, grid.dealias_cutoff(), w, block);
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (dt < best_time) {
            best_time = dt;
            best = block;
        }
    }
    int expected = 0;
    setting.compare_exchange_strong(expected, best);
    if (log != nullptr) *log << "[whitham] pseudoproduct block size " << setting.load() << "\n";
    return setting.load();
}

inline void set_kernel_block_size(int block) {
    detail::require(block >= 1, "kernel block size must be >= 1");
    detail::kernel_block_setting().store(block);
}

// ---------------------------------------------------------------------------
// Exact cancellations.

/// -P(u u_x) with P the 2/3-rule projection; exact for u band-limited to n/3.
inline Field advective_term(const Field& u) { return -dealias(multiply(u, derivative(u, 1))); }

/// Largest |k| whose coefficient exceeds `rel` times the largest coefficient;
/// transform round-off in the upper modes is ignored.
inline int effective_band_limit(const Field& u, double rel = 1e-13) {
    double peak = 0.0;
    for (auto z : u.coeffs()) peak = std::max(peak, std::abs(z));
    int band = 0;
    const Grid& g = u.grid();
    for (int i = 0; i < g.n_points(); ++i) {
        if (std::abs(u.coeffs()[static_cast<std::size_t>(i)]) > rel * peak) band = std::max(band, std::abs(g.mode(i)));
    }
    return band;
}

/// Checks that u is band-limited to n/3 (up to round-off) and returns the
/// exactly truncated field.
inline Field require_band_limit(const Field& u, const char* who) {
    const int band = effective_band_limit(u);
    if (band > u.grid().dealias_cutoff()) {
        throw ValidationError(std::string(who) + ": field must be band-limited to |k| <= n/3 (has " +
                              std::to_string(band) + ", limit " +
                              std::to_string(u.grid().dealias_cutoff()) + ")");
    }
    return dealias(u);
}

/// || -u u_x - L d_x B(u,u) + B(L d_x u, u) + B(u, L d_x u) ||_{L2} / ||u||_{H1}^2.
inline double check_bilinear_identity(const SymbolSpec& sym, const Field& u_in) {
    const Field u = require_band_limit(u_in, "check_bilinear_identity");
    const Pseudoproduct pp(sym, u.grid());
    const Field lux = apply_L(sym, derivative(u, 1));
    Field res = advective_term(u);
    res -= apply_L(sym, derivative(pp.B(u, u), 1));
    res += pp.B(lux, u);
    res += pp.B(u, lux);
    const double h1 = sobolev_norm(u, 1.0);
    if (h1 == 0.0) return 0.0;
    return sobolev_norm(res, 0.0) / (h1 * h1);
}

struct CancellationResult {
    double f0 = 0.0;
    double g0 = 0.0;
    /// |F0 + G0| / (|F0| + |G0|), 0 when both vanish.
    double relative() const {
        const double s = std::abs(f0) + std::abs(g0);
        return s == 0.0 ? 0.0 : std::abs(f0 + g0) / s;
    }
};

/// F0 = (Q(u, d^{k+1} u), d^k(-u u_x)) and G0 = (Q(u, d^k(u u_x)), d^{k+1} u).
inline CancellationResult highest_order_cancellation(const SymbolSpec& sym, const Field& u_in, int k) {
    const Field u = require_band_limit(u_in, "highest_order_cancellation");
    detail::require(k >= 0, "highest_order_cancellation: k must be >= 0");
    const Pseudoproduct pp(sym, u.grid());
    const Field w = -advective_term(u);  // u u_x
    CancellationResult r;
    r.f0 = inner(pp.Q(u, derivative(u, k + 1)), derivative(-w, k));
    r.g0 = inner(pp.Q(u, derivative(w, k)), derivative(u, k + 1));
    return r;
}

}  // namespace whitham
