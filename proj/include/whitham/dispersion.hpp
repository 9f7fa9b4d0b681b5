#pragma once

// Dispersion symbols p(xi) for u_t + u u_x - L u_x = 0, the resonance
// function phi, the normal-form multipliers m and n, and sampled
// verification of the symbol identities and two-sided bounds.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "whitham/detail/summation.hpp"
#include "whitham/errors.hpp"
#include "whitham/expression.hpp"

namespace whitham {

/// An even dispersion symbol with its far-field order and local extremum data.
struct SymbolSpec {
    std::string name;
    /// Far-field order: |p^(i)(xi)| ~ |xi|^(alpha - i).
    double alpha = 0.0;
    /// p(xi) - p(0) ~ xi^(2 j_star) near the origin.
    int j_star = 1;
    /// Leading local Taylor coefficient; absent when there is no such expansion.
    std::optional<double> p_tilde_at_zero;
    std::function<double(double)> eval_p;
    std::function<double(double)> eval_dp;
    std::function<double(double)> eval_d2p;
    /// False when the symbol is only usable as an evaluator (raw fKdV, and
    /// capillary Whitham with beta <= 1/3 which is not monotone).
    bool satisfies_a3 = true;
    /// Builtin parameters (beta or alpha) or the expression text, for reports.
    std::vector<double> params;
    std::string expression;

    double p(double xi) const { return eval_p(xi); }
    double dp(double xi) const { return eval_dp(xi); }
    double d2p(double xi) const { return eval_d2p(xi); }

    /// p(xi) * xi, with the removable value 0 at the origin.
    double flux(double xi) const { return xi == 0.0 ? 0.0 : eval_p(xi) * xi; }
};

namespace detail {

// tanh(x)/x = sum_n c_n x^(2n); radius of convergence pi/2.
inline constexpr std::array<double, 8> tanh_over_x_series = {
    1.0,
    -1.0 / 3.0,
    2.0 / 15.0,
    -17.0 / 315.0,
    62.0 / 2835.0,
    -1382.0 / 155925.0,
    21844.0 / 6081075.0,
    -929569.0 / 638512875.0,
};

/// g(x) = tanh(x)/x and its first two derivatives.
inline std::array<double, 3> tanh_over_x(double x) {
    if (std::abs(x) < 0.1) {
        const double x2 = x * x;
        double g = 0.0, g1 = 0.0, g2 = 0.0;
        for (std::size_t n = tanh_over_x_series.size(); n-- > 0;) {
            const double c = tanh_over_x_series[n];
            const double e = 2.0 * static_cast<double>(n);
            g = g * x2 + c;
            if (n >= 1) g1 = g1 * x2 + c * e;
            if (n >= 1) g2 = g2 * x2 + c * e * (e - 1.0);
        }
        // g1 accumulated coefficients of x^(2n-1), g2 of x^(2n-2).
        return {g, g1 * x, g2};
    }
    const double t = std::tanh(x);
    const double s = 1.0 - t * t;
    const double g = t / x;
    const double g1 = s / x - t / (x * x);
    const double g2 = -2.0 * t * s / x - 2.0 * s / (x * x) + 2.0 * t / (x * x * x);
    return {g, g1, g2};
}

/// sqrt(h) and derivatives from h, h', h''.
inline std::array<double, 3> sqrt_chain(double h, double h1, double h2) {
    const double r = std::sqrt(h);
    return {r, h1 / (2.0 * r), h2 / (2.0 * r) - h1 * h1 / (4.0 * h * r)};
}

inline double sgn(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

inline SymbolSpec from_triple(std::string name, std::function<std::array<double, 3>(double)> f) {
    SymbolSpec s;
    s.name = std::move(name);
    s.eval_p = [f](double xi) { return f(xi)[0]; };
    s.eval_dp = [f](double xi) { return f(xi)[1]; };
    s.eval_d2p = [f](double xi) { return f(xi)[2]; };
    return s;
}

}  // namespace detail

/// Builtin symbols:
///   whitham                  sqrt(tanh(xi)/xi)                alpha=-1/2, j*=1
///   capillary_whitham(beta)  sqrt((1+beta xi^2) tanh(xi)/xi)  alpha=+1/2, j*=1
///   bessel                   (1+xi^4)^(-1/8)                  alpha=-1/2, j*=2
///   smooth_fkdv(alpha)       (1+xi^2)^(alpha/2)               j*=1
///   fkdv(alpha)              |xi|^alpha                       evaluator only
inline SymbolSpec make_builtin(const std::string& name, std::span<const double> params = {}) {
    auto param = [&](const char* what) {
        detail::require(params.size() == 1, name + " expects exactly one parameter (" + what + ")");
        const double v = params[0];
        detail::require(std::isfinite(v), name + ": parameter must be finite");
        return v;
    };
    auto check_alpha = [&](double a) {
        detail::require(a >= -1.0 && a <= 1.0 && a != 0.0,
                        name + ": alpha must lie in [-1,1] without 0");
    };

    if (name == "whitham") {
        detail::require(params.empty(), "whitham takes no parameters");
        auto s = detail::from_triple(name, [](double xi) {
            const auto g = detail::tanh_over_x(xi);
            return detail::sqrt_chain(g[0], g[1], g[2]);
        });
        s.alpha = -0.5;
        s.j_star = 1;
        s.p_tilde_at_zero = -1.0 / 6.0;
        return s;
    }
    if (name == "capillary_whitham") {
        const double beta = param("beta");
        detail::require(beta > 0.0, "capillary_whitham: beta must be positive");
        auto s = detail::from_triple(name, [beta](double xi) {
            const auto g = detail::tanh_over_x(xi);
            const double w = 1.0 + beta * xi * xi;
            const double h = w * g[0];
            const double h1 = 2.0 * beta * xi * g[0] + w * g[1];
            const double h2 = 2.0 * beta * g[0] + 4.0 * beta * xi * g[1] + w * g[2];
            return detail::sqrt_chain(h, h1, h2);
        });
        s.alpha = 0.5;
        s.j_star = 1;
        s.p_tilde_at_zero = (beta - 1.0 / 3.0) / 2.0;
        s.satisfies_a3 = beta > 1.0 / 3.0;
        s.params = {beta};
        return s;
    }
    if (name == "bessel") {
        detail::require(params.empty(), "bessel takes no parameters");
        auto s = detail::from_triple(name, [](double xi) {
            const double x2 = xi * xi;
            const double q = 1.0 + x2 * x2;
            const double q98 = std::pow(q, -9.0 / 8.0);
            const double q178 = q98 / q;
            return std::array<double, 3>{std::pow(q, -0.125), -0.5 * xi * x2 * q98,
                                         -1.5 * x2 * q98 + 2.25 * x2 * x2 * x2 * q178};
        });
        s.alpha = -0.5;
        s.j_star = 2;
        s.p_tilde_at_zero = -0.125;
        return s;
    }
    if (name == "smooth_fkdv") {
        const double a = param("alpha");
        check_alpha(a);
        auto s = detail::from_triple(name, [a](double xi) {
            const double w = 1.0 + xi * xi;
            const double base = std::pow(w, a / 2.0 - 2.0);
            return std::array<double, 3>{std::pow(w, a / 2.0), a * xi * base * w,
                                         a * base * (w + (a - 2.0) * xi * xi)};
        });
        s.alpha = a;
        s.j_star = 1;
        s.p_tilde_at_zero = a / 2.0;
        s.params = {a};
        return s;
    }
    if (name == "fkdv") {
        const double a = param("alpha");
        check_alpha(a);
        auto s = detail::from_triple(name, [a](double xi) {
            const double ax = std::abs(xi);
            return std::array<double, 3>{std::pow(ax, a), a * detail::sgn(xi) * std::pow(ax, a - 1.0),
                                         a * (a - 1.0) * std::pow(ax, a - 2.0)};
        });
        s.alpha = a;
        s.j_star = 1;
        s.satisfies_a3 = false;
        s.params = {a};
        return s;
    }
    throw ValidationError("unknown symbol '" + name + "'");
}

/// Symbol from an expression in `xi`; p' and p'' come from forward-mode
/// differentiation of the parsed tree. A removable singularity at the origin
/// (e.g. tanh(xi)/xi) is evaluated as the limit from |xi| = 1e-10.
inline SymbolSpec make_custom(const std::string& expression, double alpha, int j_star,
                              std::optional<double> p_tilde = std::nullopt) {
    detail::require(alpha >= -1.0 && alpha <= 1.0 && alpha != 0.0,
                    "custom symbol: alpha must lie in [-1,1] without 0");
    detail::require(j_star >= 1, "custom symbol: j_star must be a positive integer");
    const auto e = Expression::parse(expression, "xi");
    auto at = [e](double xi) {
        Jet j = e.jet(xi);
        if (!std::isfinite(j.v) && std::abs(xi) < 1e-10) j = e.jet(xi < 0 ? -1e-10 : 1e-10);
        return std::array<double, 3>{j.v, j.d, j.dd};
    };
    SymbolSpec s = detail::from_triple("custom", at);
    s.alpha = alpha;
    s.j_star = j_star;
    s.expression = expression;
    if (p_tilde) {
        s.p_tilde_at_zero = p_tilde;
    } else {
        // Difference quotient at a point where the increment is well above rounding.
        const double h = j_star == 1 ? 1e-3 : 3e-2;
        s.p_tilde_at_zero = (s.p(h) - s.p(0.0)) / std::pow(h, 2.0 * j_star);
    }
    s.satisfies_a3 = *s.p_tilde_at_zero != 0.0 && std::isfinite(*s.p_tilde_at_zero);
    return s;
}

/// phi(a,b) = p(a) a + p(b) b - p(a+b)(a+b).
inline double phi(const SymbolSpec& sym, double a, double b) {
    return detail::sum3(sym.flux(a), sym.flux(b), -sym.flux(a + b));
}

/// True on the resonance set where m and n are set to zero.
inline bool on_zero_set(double a, double b) { return a == 0.0 || b == 0.0 || a + b == 0.0; }

/// m(a,b) = (a+b) / (2 phi(a,b)); zero on {a=0, b=0, a+b=0}.
inline double m_mult(const SymbolSpec& sym, double a, double b) {
    if (on_zero_set(a, b)) return 0.0;
    return (a + b) / (2.0 * phi(sym, a, b));
}

/// n(a,b) = -i / (2 phi(a,b)), the symbol of d_x^{-1} B; same zero-set convention.
inline std::complex<double> n_mult(const SymbolSpec& sym, double a, double b) {
    if (on_zero_set(a, b)) return {0.0, 0.0};
    return {0.0, -1.0 / (2.0 * phi(sym, a, b))};
}

// ---------------------------------------------------------------------------
// Sampled checks of the symbol assumptions.

struct CheckResult {
    std::string name;
    bool passed = false;
    double value = 0.0;  // the measured quantity the check thresholds
    std::string detail;
};

namespace detail {
inline std::vector<double> logspace(double lo, double hi, int per_decade) {
    const int count = static_cast<int>(std::lround(std::log10(hi / lo) * per_decade));
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count) + 1);
    for (int i = 0; i <= count; ++i) {
        out.push_back(lo * std::pow(10.0, static_cast<double>(i) / per_decade));
    }
    out.back() = hi;
    return out;
}
}  // namespace detail

/// p(xi) = p(-xi) on random samples, to 1e-14 relative.
inline CheckResult check_evenness(const SymbolSpec& sym, int samples = 1000, std::uint64_t seed = 1) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> expo(-4.0, 4.0);
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double xi = std::pow(10.0, expo(rng));
        const double a = sym.p(xi), b = sym.p(-xi);
        const double scale = std::max({std::abs(a), std::abs(b), std::numeric_limits<double>::min()});
        const double r = std::abs(a - b) / scale;
        worst = std::isfinite(r) ? std::max(worst, r) : std::numeric_limits<double>::infinity();
    }
    return {"evenness", worst <= 1e-14, worst, "max |p(xi)-p(-xi)|/|p(xi)|"};
}

/// Strict monotonicity of p on {0} and a log grid of [1e-3, 1e4].
inline CheckResult check_monotone(const SymbolSpec& sym) {
    auto grid = detail::logspace(1e-3, 1e4, 20);
    grid.insert(grid.begin(), 0.0);
    int sign = 0;
    bool ok = true;
    double min_step = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double d = sym.p(grid[i]) - sym.p(grid[i - 1]);
        const int s = d > 0 ? 1 : (d < 0 ? -1 : 0);
        if (s == 0 || !std::isfinite(d) || (sign != 0 && s != sign)) ok = false;
        if (sign == 0) sign = s;
        min_step = std::min(min_step, std::abs(d));
    }
    return {"monotone", ok, min_step,
            ok ? (sign > 0 ? "increasing" : "decreasing") : "not strictly monotone"};
}

/// |p^(i)(xi)| / |xi|^(alpha-i) stays in a bounded interval [c, C], c > 0, for
/// |xi| in [10, 1e4] and i = 0, 1, 2. Passes when C/c <= 100 for each i.
inline CheckResult check_far_field(const SymbolSpec& sym) {
    const auto grid = detail::logspace(10.0, 1e4, 20);
    double worst_spread = 0.0;
    std::string detail;
    bool ok = true;
    for (int i = 0; i <= 2; ++i) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (double xi : grid) {
            const double d = i == 0 ? sym.p(xi) : (i == 1 ? sym.dp(xi) : sym.d2p(xi));
            const double r = std::abs(d) / std::pow(xi, sym.alpha - i);
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        const double spread = lo > 0.0 && std::isfinite(hi) ? hi / lo : std::numeric_limits<double>::infinity();
        worst_spread = std::max(worst_spread, spread);
        if (!(spread <= 100.0)) {
            ok = false;
            detail += "p^(" + std::to_string(i) + ") ratio range [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "] ";
        }
    }
    return {"far_field", ok, worst_spread, ok ? "max C/c over i=0,1,2" : detail};
}

/// (p(xi) - p(0)) / xi^(2 j*) within 50% of p_tilde_at_zero for |xi| in
/// [1e-4, 1e-1]. Points where the expected increment |p_tilde| xi^(2j*) is below
/// 1e-8 |p(0)| are skipped because the difference is dominated by rounding there.
inline CheckResult check_local_expansion(const SymbolSpec& sym) {
    if (!sym.satisfies_a3 || !sym.p_tilde_at_zero) {
        return {"local_expansion", false, 0.0, "symbol has no admissible local expansion"};
    }
    const double pt = *sym.p_tilde_at_zero;
    const double p0 = sym.p(0.0);
    double worst = 0.0;
    int used = 0;
    for (double xi : detail::logspace(1e-4, 1e-1, 20)) {
        const double scale = std::pow(xi, 2.0 * sym.j_star);
        if (std::abs(pt) * scale < 1e-8 * std::max(std::abs(p0), 1.0)) continue;
        for (double x : {xi, -xi}) {
            const double q = (sym.p(x) - p0) / scale;
            worst = std::max(worst, std::abs(q - pt) / std::abs(pt));
            ++used;
        }
    }
    const bool ok = used > 0 && worst <= 0.5;
    return {"local_expansion", ok, worst,
            "max relative deviation from p_tilde over " + std::to_string(used) + " points"};
}

inline std::vector<CheckResult> check_assumptions(const SymbolSpec& sym) {
    return {check_evenness(sym), check_monotone(sym), check_far_field(sym), check_local_expansion(sym)};
}

// ---------------------------------------------------------------------------
// Pointwise identities.

struct IdentityResidual {
    std::string name;
    double max_residual = 0.0;
    double worst_a = 0.0;
    double worst_b = 0.0;
};

struct IdentityReport {
    std::vector<IdentityResidual> entries;
    double tolerance = 1e-12;
    int samples = 0;

    double max_residual() const {
        double r = 0.0;
        for (const auto& e : entries) r = std::max(r, e.max_residual);
        return r;
    }
    bool passed() const {
        for (const auto& e : entries) {
            if (!(e.max_residual <= tolerance)) return false;
        }
        return true;
    }
};

namespace detail {

// Random dyadic rationals M * 2^(e-20) with M in [2^19, 2^20) and |e| <= 10, so
// magnitudes span roughly [1e-3, 1e3]. Sums and differences of two samples are
// exact in double precision, which leaves only the rounding inside p.
inline double dyadic_sample(std::mt19937_64& rng) {
    std::uniform_int_distribution<std::int64_t> mant(1 << 19, (1 << 20) - 1);
    std::uniform_int_distribution<int> expo(-10, 10);
    std::uniform_int_distribution<int> sign(0, 1);
    const double v = std::ldexp(static_cast<double>(mant(rng)), expo(rng) - 20);
    return sign(rng) ? v : -v;
}

inline void track(IdentityResidual& r, double res, double a, double b) {
    if (!std::isfinite(res)) res = std::numeric_limits<double>::infinity();
    if (res > r.max_residual) {
        r.max_residual = res;
        r.worst_a = a;
        r.worst_b = b;
    }
}

inline double tiny_floor(double x) { return std::max(x, std::numeric_limits<double>::min()); }

}  // namespace detail

/// phi(a,b) = phi(b,a), phi(-a,-b) = -phi(a,b), phi(a,b) = phi(-(a+b),b) on
/// random samples. Residuals are relative to |pa a| + |pb b| + |p(a+b)(a+b)|,
/// the magnitude of the terms whose difference forms phi.
inline IdentityReport verify_phi_symmetries(const SymbolSpec& sym, int samples, std::uint64_t seed) {
    detail::require(samples >= 1, "verify_phi_symmetries: samples must be >= 1");
    IdentityReport rep;
    rep.samples = samples;
    rep.entries = {{"phi_swap"}, {"phi_odd"}, {"phi_reflect"}};
    std::mt19937_64 rng(seed);
    for (int i = 0; i < samples; ++i) {
        const double a = detail::dyadic_sample(rng);
        const double b = detail::dyadic_sample(rng);
        const double scale = detail::tiny_floor(std::abs(sym.flux(a)) + std::abs(sym.flux(b)) +
                                                std::abs(sym.flux(a + b)));
        const double f = phi(sym, a, b);
        detail::track(rep.entries[0], std::abs(f - phi(sym, b, a)) / scale, a, b);
        detail::track(rep.entries[1], std::abs(phi(sym, -a, -b) + f) / scale, a, b);
        detail::track(rep.entries[2], std::abs(phi(sym, -(a + b), b) - f) / scale, a, b);
    }
    return rep;
}

/// m(xi-eta,eta) eta + m(eta-xi,xi) xi = 0, n(xi-eta,eta) = conj(n(eta-xi,xi)),
/// and m(a,b) phi(a,b) = (a+b)/2 on random samples off the zero set.
inline IdentityReport verify_multiplier_identities(const SymbolSpec& sym, int samples,
                                                   std::uint64_t seed) {
    detail::require(samples >= 1, "verify_multiplier_identities: samples must be >= 1");
    IdentityReport rep;
    rep.samples = samples;
    rep.entries = {{"m_antisymmetry"}, {"n_conjugation"}, {"m_times_phi"}};
    std::mt19937_64 rng(seed);
    for (int i = 0; i < samples; ++i) {
        const double xi = detail::dyadic_sample(rng);
        const double eta = detail::dyadic_sample(rng);
        if (on_zero_set(xi - eta, eta) || on_zero_set(eta - xi, xi)) continue;
        const double t1 = m_mult(sym, xi - eta, eta) * eta;
        const double t2 = m_mult(sym, eta - xi, xi) * xi;
        detail::track(rep.entries[0], std::abs(t1 + t2) / detail::tiny_floor(std::abs(t1) + std::abs(t2)),
                      xi, eta);

        const auto n1 = n_mult(sym, xi - eta, eta);
        const auto n2 = std::conj(n_mult(sym, eta - xi, xi));
        detail::track(rep.entries[1], std::abs(n1 - n2) / detail::tiny_floor(std::abs(n1) + std::abs(n2)),
                      xi, eta);

        const double a = xi, b = eta;
        if (!on_zero_set(a, b)) {
            const double lhs = m_mult(sym, a, b) * phi(sym, a, b);
            detail::track(rep.entries[2], std::abs(lhs - (a + b) / 2.0) / std::abs((a + b) / 2.0), a, b);
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Empirical two-sided constants.

/// Constants c_min <= ratio <= c_max of a sampled quantity against a model.
struct BoundReport {
    std::string model_name;
    double c_min = std::numeric_limits<double>::infinity();
    double c_max = 0.0;
    std::int64_t sample_count = 0;
    std::vector<double> min_point;
    std::vector<double> max_point;
    /// Location of c_max, the constant the upper bound needs.
    const std::vector<double>& worst_point() const { return max_point; }

    bool valid() const {
        return sample_count >= 1 && c_min > 0.0 && c_min <= c_max && std::isfinite(c_max);
    }

    void add(double ratio, std::vector<double> point) {
        if (!std::isfinite(ratio)) {
            throw NumericalError(model_name + ": non-finite ratio at sample " +
                                 std::to_string(sample_count));
        }
        // Strict comparisons keep the earliest sample on ties.
        if (ratio < c_min) {
            c_min = ratio;
            min_point = point;
        }
        if (ratio > c_max) {
            c_max = ratio;
            max_point = std::move(point);
        }
        ++sample_count;
    }
};

/// Largest relative change of c_min and c_max between two reports.
inline double relative_change(const BoundReport& coarse, const BoundReport& fine) {
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); };
    return std::max(rel(coarse.c_min, fine.c_min), rel(coarse.c_max, fine.c_max));
}

using PlanePoint = std::array<double, 2>;

/// Log-spaced sample set over the plane: a, b in [lo, hi] with `per_decade`
/// points per decade. With `mixed_signs`, also a > 0 > b, placed by
/// |a+b| on the same log grid (a+b of either sign) so that samples approach
/// the line a+b = 0 equally closely at every density.
struct PlaneGrid {
    double lo = 1e-3;
    double hi = 1e3;
    int per_decade = 10;
    bool mixed_signs = true;

    PlaneGrid refined() const { return {lo, hi, per_decade * 2, mixed_signs}; }

    std::vector<PlanePoint> points() const {
        detail::require(lo > 0.0 && hi > lo && per_decade >= 1, "PlaneGrid: need 0 < lo < hi, per_decade >= 1");
        const auto g = detail::logspace(lo, hi, per_decade);
        std::vector<PlanePoint> out;
        out.reserve(g.size() * g.size() * (mixed_signs ? 2 : 1));
        for (double a : g) {
            for (double b : g) out.push_back({a, b});
        }
        if (mixed_signs) {
            for (double a : g) {
                for (double c : g) {
                    if (c >= a) break;
                    out.push_back({a, c - a});
                    out.push_back({a, -c - a});
                }
            }
        }
        return out;
    }
};

/// |phi(a,b)| / (|ab(a+b)|/r^2 * min(r^(2j*), 1 + r^alpha)), r^2 = a^2+b^2.
inline double phi_bound_ratio(const SymbolSpec& sym, double a, double b) {
    const double r2 = a * a + b * b;
    const double r = std::sqrt(r2);
    const double model =
        std::abs(a * b * (a + b)) / r2 * std::min(std::pow(r, 2.0 * sym.j_star), 1.0 + std::pow(r, sym.alpha));
    return std::abs(phi(sym, a, b)) / model;
}

inline BoundReport verify_phi_bound(const SymbolSpec& sym, std::span<const PlanePoint> points) {
    detail::require(sym.satisfies_a3, "verify_phi_bound: symbol '" + sym.name + "' does not satisfy the assumptions");
    BoundReport rep;
    rep.model_name = "phi:" + sym.name;
    for (const auto& [a, b] : points) {
        if (on_zero_set(a, b)) {
            throw ValidationError("verify_phi_bound: sample (" + std::to_string(a) + ", " +
                                  std::to_string(b) + ") lies on the zero set");
        }
        rep.add(phi_bound_ratio(sym, a, b), {a, b});
    }
    return rep;
}

inline BoundReport verify_phi_bound(const SymbolSpec& sym, const PlaneGrid& grid) {
    const auto pts = grid.points();
    return verify_phi_bound(sym, pts);
}

/// m1 + m2 from the multiplier bound, evaluated at (xi, eta).
inline std::array<double, 2> m_bound_terms(const SymbolSpec& sym, double xi, double eta) {
    const double m1 = 1.0 / std::abs(eta * (xi - eta) * std::pow(xi, 2.0 * sym.j_star - 2.0));
    const double m2 = 1.0 + std::abs(xi) * (1.0 + 1.0 / std::abs(eta) + 1.0 / std::abs(xi - eta));
    return {m1, m2};
}

/// |m(xi-eta, eta)| / (m1 + m2).
inline double m_bound_ratio(const SymbolSpec& sym, double xi, double eta) {
    const auto [m1, m2] = m_bound_terms(sym, xi, eta);
    return std::abs(m_mult(sym, xi - eta, eta)) / (m1 + m2);
}

/// m_bound_ratio over samples (xi, eta); points are read as
/// (xi, eta) and must avoid xi = 0, eta = 0, xi = eta.
inline BoundReport verify_m_bound(const SymbolSpec& sym, std::span<const PlanePoint> points) {
    detail::require(sym.satisfies_a3, "verify_m_bound: symbol '" + sym.name + "' does not satisfy the assumptions");
    BoundReport rep;
    rep.model_name = "m:" + sym.name;
    for (const auto& [xi, eta] : points) {
        if (on_zero_set(xi - eta, eta)) {
            throw ValidationError("verify_m_bound: sample (" + std::to_string(xi) + ", " +
                                  std::to_string(eta) + ") lies on the zero set");
        }
        rep.add(m_bound_ratio(sym, xi, eta), {xi, eta});
    }
    return rep;
}

/// The grid describes the plane of arguments (xi - eta, eta).
inline BoundReport verify_m_bound(const SymbolSpec& sym, const PlaneGrid& grid) {
    auto pts = grid.points();
    for (auto& [a, b] : pts) a = a + b;
    return verify_m_bound(sym, pts);
}

// ---------------------------------------------------------------------------
// Main commutator diagnostic.

using Triple = std::array<double, 3>;

/// N(xi,eta,sigma) = m(xi-eta,eta)/xi - m(xi-eta,sigma)/(xi-eta+sigma).
inline double commutator_N(const SymbolSpec& sym, double xi, double eta, double sigma) {
    return m_mult(sym, xi - eta, eta) / xi - m_mult(sym, xi - eta, sigma) / (xi - eta + sigma);
}

/// U(xi,eta,sigma) = [p(s)s - p(xi-eta+s)(xi-eta+s)] - [p(eta)eta - p(xi)xi].
inline double commutator_U(const SymbolSpec& sym, double xi, double eta, double sigma) {
    return (sym.flux(sigma) - sym.flux(xi - eta + sigma)) - (sym.flux(eta) - sym.flux(xi));
}

/// xi, eta, sigma >= 1 and |xi-eta| + |eta-sigma| <= xi/10.
inline bool in_commutator_region(const Triple& t) {
    const auto [xi, eta, sigma] = t;
    return xi >= 1.0 && eta >= 1.0 && sigma >= 1.0 &&
           std::abs(xi - eta) + std::abs(eta - sigma) <= xi / 10.0;
}

struct CommutatorReport {
    /// sup/inf of |N| xi |xi-eta| / |sigma-eta|.
    BoundReport n_bound;
    /// sup/inf of |U| / (|xi-eta| |sigma-eta| eta^(alpha-1)).
    BoundReport u_bound;
    std::int64_t skipped = 0;
};

inline CommutatorReport commutator_scan(const SymbolSpec& sym, std::span<const Triple> samples) {
    CommutatorReport rep;
    rep.n_bound.model_name = "commutator_N:" + sym.name;
    rep.u_bound.model_name = "commutator_U:" + sym.name;
    for (const auto& t : samples) {
        if (!in_commutator_region(t)) {
            throw ValidationError("commutator_scan: sample (" + std::to_string(t[0]) + ", " +
                                  std::to_string(t[1]) + ", " + std::to_string(t[2]) +
                                  ") is outside the region");
        }
        const auto [xi, eta, sigma] = t;
        if (sigma == eta || xi == eta) {
            ++rep.skipped;
            continue;
        }
        const double dxe = std::abs(xi - eta);
        const double dse = std::abs(sigma - eta);
        const std::vector<double> where{xi, eta, sigma};
        rep.n_bound.add(std::abs(commutator_N(sym, xi, eta, sigma)) * xi * dxe / dse, where);
        rep.u_bound.add(std::abs(commutator_U(sym, xi, eta, sigma)) /
                            (dxe * dse * std::pow(eta, sym.alpha - 1.0)),
                        where);
    }
    return rep;
}

/// Structured samples of the commutator region: `xi_count` log-spaced xi in
/// [xi_lo, xi_hi]; offsets xi-eta = +-f1 xi/10 and eta-sigma = +-f2 (xi/10 - |xi-eta|)
/// with f1, f2 log-spaced over [1e-3, 0.9] (`offset_count` each, both signs).
/// Triples leaving the region (eta or sigma below 1) are dropped.
struct CommutatorGrid {
    int xi_count = 25;
    int offset_count = 10;
    double xi_lo = 1.0;
    double xi_hi = 1e3;

    CommutatorGrid refined() const { return {xi_count * 2, offset_count * 2, xi_lo, xi_hi}; }

    std::vector<Triple> samples() const {
        detail::require(xi_count >= 2 && offset_count >= 2 && xi_lo >= 1.0 && xi_hi > xi_lo,
                        "CommutatorGrid: invalid parameters");
        std::vector<double> fr;
        for (int i = 0; i < offset_count; ++i) {
            fr.push_back(1e-3 * std::pow(900.0, static_cast<double>(i) / (offset_count - 1)));
        }
        std::vector<Triple> out;
        for (int ix = 0; ix < xi_count; ++ix) {
            const double xi = xi_lo * std::pow(xi_hi / xi_lo, static_cast<double>(ix) / (xi_count - 1));
            for (double s1 : {1.0, -1.0}) {
                for (double f1 : fr) {
                    const double d1 = s1 * f1 * xi / 10.0;
                    for (double s2 : {1.0, -1.0}) {
                        for (double f2 : fr) {
                            const double d2 = s2 * f2 * (xi / 10.0 - std::abs(d1));
                            const Triple t{xi, xi - d1, xi - d1 - d2};
                            if (in_commutator_region(t)) out.push_back(t);
                        }
                    }
                }
            }
        }
        return out;
    }
};

}  // namespace whitham
