#pragma once

// Integrating-factor RK4 for u_t + u u_x - L u_x = 0. The linear part is
// propagated exactly by exp(i p(xi) xi t); RK4 handles -(1/2) d_x(u^2).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "whitham/energy.hpp"
#include "whitham/spectral.hpp"

namespace whitham {

struct SolverConfig {
    double dt = 1e-3;
    double t_end = 1.0;
    std::int64_t checkpoint_every = 100;
    bool dealias = true;
    double breakdown_gradient_factor = 10.0;
    double tail_fraction_limit = 1e-6;
    /// Test hook: false integrates only the linear flow.
    bool nonlinear = true;

    void validate() const {
        detail::require(dt > 0.0 && std::isfinite(dt), "solver.dt must be positive");
        detail::require(t_end >= 0.0 && std::isfinite(t_end), "solver.t_end must be >= 0");
        detail::require(checkpoint_every >= 1, "solver.checkpoint_every must be >= 1");
        detail::require(breakdown_gradient_factor > 1.0, "solver.breakdown_gradient_factor must be > 1");
        detail::require(tail_fraction_limit > 0.0 && tail_fraction_limit < 1.0,
                        "solver.tail_fraction_limit must lie in (0,1)");
    }
};

enum class BreakdownReason { gradient, tail, nonfinite };

inline const char* to_string(BreakdownReason r) {
    switch (r) {
        case BreakdownReason::gradient: return "gradient";
        case BreakdownReason::tail: return "tail";
        case BreakdownReason::nonfinite: return "nonfinite";
    }
    return "unknown";
}

struct Breakdown {
    double time = 0.0;
    BreakdownReason reason = BreakdownReason::nonfinite;
};

struct Checkpoint {
    double time = 0.0;
    EnergyReport energy;
    double mean_removed = 0.0;
    double l2 = 0.0;
    double sup_grad = 0.0;
    double tail_fraction = 0.0;
};

struct Trajectory {
    std::vector<Checkpoint> checkpoints;
    std::optional<Breakdown> breakdown;
    Field final_state;
    std::int64_t steps = 0;
};

inline double sup_gradient(const Field& u) {
    const auto ux = sample(derivative(u, 1));
    double m = 0.0;
    for (double v : ux) m = std::max(m, std::abs(v));
    return m;
}

inline double sup_abs(const Field& u) {
    double m = 0.0;
    for (double v : sample(u)) m = std::max(m, std::abs(v));
    return m;
}

/// Fraction of sum |c_k|^2 carried by the top third of the retained band
/// (|k| > 2/3 of n/3 when dealiasing, of n/2 otherwise).
inline double tail_fraction(const Field& u, bool dealiased = true) {
    const Grid& g = u.grid();
    const int retained = dealiased ? g.dealias_cutoff() : g.n_points() / 2;
    const int start = (2 * retained) / 3;
    double tail = 0.0, total = 0.0;
    for (int i = 0; i < g.n_points(); ++i) {
        const double e = std::norm(u.coeffs()[static_cast<std::size_t>(i)]);
        total += e;
        if (std::abs(g.mode(i)) > start) tail += e;
    }
    return total > 0.0 ? tail / total : 0.0;
}

/// Largest dt allowed by the advective guard dt <= 0.5 / (max|u| xi_max).
inline double advective_dt_limit(const Field& u) {
    const double umax = sup_abs(u);
    if (umax == 0.0) return std::numeric_limits<double>::infinity();
    return 0.5 / (umax * u.grid().max_wavenumber());
}

/// IFRK4 stepper with cached linear propagators for one step size.
class Stepper {
  public:
    Stepper(const SymbolSpec& sym, const Grid& grid, double dt, bool dealias = true, bool nonlinear = true)
        : grid_(grid), dt_(dt), dealias_(dealias), nonlinear_(nonlinear) {
        const int n = grid.n_points();
        half_.resize(static_cast<std::size_t>(n));
        full_.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const int k = grid.mode(i);
            // L d_x vanishes on the mean and, with odd derivatives zeroing it, on Nyquist.
            const double omega = (k == 0 || k == grid.nyquist()) ? 0.0 : sym.flux(grid.wavenumber(k));
            half_[static_cast<std::size_t>(i)] = std::polar(1.0, omega * dt / 2.0);
            full_[static_cast<std::size_t>(i)] = std::polar(1.0, omega * dt);
        }
    }

    double dt() const { return dt_; }

    Field step(const Field& u) const {
        if (!nonlinear_) return propagate(u, full_);
        const double h = dt_;
        const Field a = h * nonlinear_term(u);
        const Field eu = propagate(u, half_);
        const Field b = h * nonlinear_term(propagate(u + 0.5 * a, half_));
        const Field c = h * nonlinear_term(eu + 0.5 * b);
        const Field d = h * nonlinear_term(propagate(u, full_) + propagate(c, half_));
        Field out = propagate(u, full_);
        Field incr = propagate(a, full_) + 2.0 * propagate(b + c, half_) + d;
        out += (1.0 / 6.0) * incr;
        return out;
    }

    /// -(1/2) d_x (u^2), dealiased when configured.
    Field nonlinear_term(const Field& u) const {
        Field sq = multiply(u, u);
        if (dealias_) sq = dealias(sq);
        Field out = derivative(sq, 1);
        out *= -0.5;
        return out;
    }

  private:
    static Field propagate(const Field& u, const std::vector<cplx>& mult) {
        Field out = u;
        out.removed_mean = 0.0;
        auto c = out.coeffs();
        for (std::size_t i = 0; i < c.size(); ++i) c[i] *= mult[i];
        return out;
    }

    Grid grid_;
    double dt_;
    bool dealias_;
    bool nonlinear_;
    std::vector<cplx> half_;
    std::vector<cplx> full_;
};

/// One IFRK4 step. Throws ValidationError if dt exceeds the advective guard.
inline Field step(const SymbolSpec& sym, const Field& u, double dt, bool dealias = true, bool nonlinear = true) {
    detail::require(dt > 0.0, "step: dt must be positive");
    if (nonlinear) {
        detail::require(dt <= advective_dt_limit(u),
                        "step: dt exceeds the advective guard 0.5/(max|u| xi_max)");
    }
    return Stepper(sym, u.grid(), dt, dealias, nonlinear).step(u);
}

/// Called after every accepted step (and once for the initial state, step 0).
using StepObserver = std::function<void(std::int64_t step, double t, const Field& u)>;

/// Integrates to t_end or breakdown, recording checkpoints every
/// `checkpoint_every` steps plus the initial and final states.
inline Trajectory evolve(const SymbolSpec& sym, const Field& u0_in, const SolverConfig& cfg, int n_max,
                         const StepObserver& observer = {}) {
    cfg.validate();
    detail::require(n_max >= min_energy_order(sym),
                    "evolve: n_max must be >= max(3, 2j*-1) = " + std::to_string(min_energy_order(sym)));
    detail::require(u0_in.all_finite(), "evolve: initial state is not finite");
    const Field u0 = cfg.dealias ? dealias(u0_in) : u0_in;
    if (cfg.nonlinear && cfg.t_end > 0.0) {
        detail::require(cfg.dt <= advective_dt_limit(u0),
                        "solver.dt exceeds the advective guard 0.5/(max|u| xi_max) = " +
                            std::to_string(advective_dt_limit(u0)));
    }

    const double mean = u0_in.removed_mean;
    const double grad0 = sup_gradient(u0);
    Trajectory traj{{}, std::nullopt, u0, 0};

    auto checkpoint = [&](double t, const Field& u) {
        Checkpoint c;
        c.time = t;
        c.energy = total_modified_energy(sym, u, n_max, t);
        c.mean_removed = mean;
        c.l2 = sobolev_norm(u, 0.0);
        c.sup_grad = sup_gradient(u);
        c.tail_fraction = tail_fraction(u, cfg.dealias);
        traj.checkpoints.push_back(std::move(c));
    };

    checkpoint(0.0, u0);
    if (observer) observer(0, 0.0, u0);
    if (cfg.t_end == 0.0) return traj;

    const auto total_steps = static_cast<std::int64_t>(std::ceil(cfg.t_end / cfg.dt - 1e-9));
    const double last_dt = cfg.t_end - static_cast<double>(total_steps - 1) * cfg.dt;
    const Stepper stepper(sym, u0.grid(), cfg.dt, cfg.dealias, cfg.nonlinear);

    Field u = u0;
    for (std::int64_t s = 1; s <= total_steps; ++s) {
        const bool last = s == total_steps;
        Field next = (last && last_dt != cfg.dt)
                         ? Stepper(sym, u.grid(), last_dt, cfg.dealias, cfg.nonlinear).step(u)
                         : stepper.step(u);
        const double t = last ? cfg.t_end : static_cast<double>(s) * cfg.dt;
        traj.steps = s;
        if (!next.all_finite()) {
            traj.breakdown = Breakdown{t, BreakdownReason::nonfinite};
            break;
        }
        u = std::move(next);
        if (observer) observer(s, t, u);

        std::optional<BreakdownReason> reason;
        if (sup_gradient(u) > cfg.breakdown_gradient_factor * grad0) {
            reason = BreakdownReason::gradient;
        } else if (tail_fraction(u, cfg.dealias) > cfg.tail_fraction_limit) {
            reason = BreakdownReason::tail;
        }
        if (reason) {
            traj.breakdown = Breakdown{t, *reason};
            checkpoint(t, u);
            break;
        }
        if (s % cfg.checkpoint_every == 0 || last) checkpoint(t, u);
    }
    traj.final_state = u;
    return traj;
}

}  // namespace whitham
