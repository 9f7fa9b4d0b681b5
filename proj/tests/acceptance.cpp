// Acceptance run: one [PASS]/[FAIL] line per primary criterion, exit 1 if any fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "whitham/whitham.hpp"

using namespace whitham;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [x]");
    }
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

int failures = 0;

void criterion(const std::string& name, double limit_s, const std::function<Verdict()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = body();
    } catch (const std::exception& e) {
        v.pass = false;
        v.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit_s > 0.0) v.require(secs < limit_s, "runtime " + num(secs) + " s < " + num(limit_s) + " s");
    if (!v.pass) ++failures;
    std::printf("[%s] %s (%.2f s): %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), secs, v.detail.c_str());
    std::fflush(stdout);
}

SymbolSpec builtin(const std::string& name, double param) {
    const std::array<double, 1> p{param};
    return make_builtin(name, p);
}

std::vector<SymbolSpec> bound_symbols() {
    return {make_builtin("whitham"), builtin("capillary_whitham", 1.0), make_builtin("bessel"),
            builtin("smooth_fkdv", 0.5), builtin("smooth_fkdv", -0.5)};
}

// Independent double loop: B(f,g)_k = sum_j m(k-j, j) f_{k-j} g_j on |k| <= n/3.
Field naive_B(const SymbolSpec& sym, const Field& f, const Field& g) {
    const Grid& grid = f.grid();
    const int half = grid.n_points() / 2;
    Field out(grid);
    for (int k = -grid.dealias_cutoff(); k <= grid.dealias_cutoff(); ++k) {
        cplx s = 0.0;
        for (int j = -half; j < half; ++j) {
            const int a = k - j;
            if (a < -half || a >= half) continue;
            s += m_mult(sym, grid.wavenumber(a), grid.wavenumber(j)) * f.coeff(a) * g.coeff(j);
        }
        out.coeff(k) = s;
    }
    return out;
}

Field profile(const Grid& g, double eps, const std::string& expr) {
    const auto e = Expression::parse(expr, "x");
    return dealias(synthesize_function(g, [&](double x) { return eps * e(x); }));
}

const char* kAsymmetric = "cos(x)+0.3*cos(2*x+1)+0.1*cos(3*x+2)";

Field run(const SymbolSpec& sym, Field u, double dt, double t_end, bool nonlinear = true) {
    const Stepper st(sym, u.grid(), dt, true, nonlinear);
    const auto steps = std::lround(t_end / dt);
    for (long i = 0; i < steps; ++i) u = st.step(u);
    return u;
}

// max |FD - rhs| / max |rhs| over checkpoints carrying a centered difference.
double fd_mismatch(const std::vector<detail::QuarticPoint>& pts) {
    double err = 0.0, scale = 0.0;
    for (const auto& p : pts) {
        if (!p.fd) continue;
        err = std::max(err, std::abs(*p.fd - p.rate));
        scale = std::max(scale, std::abs(p.rate));
    }
    return scale > 0.0 ? err / scale : std::nan("");
}

std::filesystem::path scratch(const std::string& name) {
    return std::filesystem::temp_directory_path() / "whitham_acceptance" / name;
}

const CheckRecord* find_check(const Outcome& o, const std::string& name) {
    for (const auto& c : o.checks) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

}  // namespace

int main() {
    std::printf("whitham acceptance %s\n", version);
    tune_kernel_block_size(nullptr);

    criterion("symbol identities, 1e4 samples per builtin, <= 1e-12", 5.0, [] {
        Verdict v;
        std::vector<SymbolSpec> syms = bound_symbols();
        syms.push_back(builtin("capillary_whitham", 0.2));
        syms.push_back(builtin("fkdv", 0.5));
        syms.push_back(builtin("fkdv", -0.5));
        double worst = 0.0;
        for (const auto& s : syms) {
            const auto a = verify_phi_symmetries(s, 10000, 11);
            const auto b = verify_multiplier_identities(s, 10000, 12);
            const double r = std::max(a.max_residual(), b.max_residual());
            worst = std::max(worst, r);
            v.require(a.passed() && b.passed() && a.samples == 10000,
                      s.name + (s.params.empty() ? "" : "(" + num(s.params[0]) + ")") + " " + num(r));
        }
        v.require(worst <= 1e-12, "worst " + num(worst));
        return v;
    });

    criterion("bound suite, two-sided and stable within 10% under doubling", 30.0, [] {
        Verdict v;
        const PlaneGrid coarse;
        const PlaneGrid fine = coarse.refined();
        for (const auto& s : bound_symbols()) {
            const std::string tag = s.name + (s.params.empty() ? "" : "(" + num(s.params[0]) + ")");
            const auto p0 = verify_phi_bound(s, coarse), p1 = verify_phi_bound(s, fine);
            const auto m0 = verify_m_bound(s, coarse), m1 = verify_m_bound(s, fine);
            const double dp = relative_change(p0, p1);
            const double dm = std::abs(m0.c_max - m1.c_max) / std::max(m0.c_max, m1.c_max);
            v.require(p0.valid() && p1.valid() && dp < 0.1,
                      tag + " phi [" + num(p0.c_min) + ", " + num(p0.c_max) + "] change " + num(dp));
            v.require(std::isfinite(m0.c_max) && m0.c_max > 0.0 && dm < 0.1,
                      tag + " m " + num(m0.c_max) + " change " + num(dm));
        }
        return v;
    });

    criterion("exact cancellations on 20 random fields at n=128, <= 1e-10", 0.0, [] {
        Verdict v;
        const Grid g(128, 1.0);
        double bil = 0.0, can = 0.0;
        for (const auto& s : {make_builtin("whitham"), make_builtin("bessel"), builtin("capillary_whitham", 1.0)}) {
            for (std::uint64_t seed = 1; seed <= 20; ++seed) {
                const Field u = random_field(g, g.dealias_cutoff(), seed);
                bil = std::max(bil, check_bilinear_identity(s, u));
                for (int k = 1; k <= 3; ++k) can = std::max(can, highest_order_cancellation(s, u, k).relative());
            }
        }
        v.require(bil <= 1e-10, "bilinear identity " + num(bil));
        v.require(can <= 1e-10, "F0+G0 cancellation " + num(can));
        return v;
    });

    criterion("quartic law: FD of E^(k) vs quartic_rhs, n=256, dt=1e-3, eps=0.1", 120.0, [] {
        Verdict v;
        const auto w = make_builtin("whitham");
        const Field u0 = profile(Grid(256, 1.0), 0.1, kAsymmetric);
        SolverConfig c1;
        c1.dt = 1e-3;
        c1.t_end = 1.0;
        c1.checkpoint_every = 100;
        SolverConfig c2 = c1;
        c2.dt = 5e-4;
        c2.checkpoint_every = 200;
        for (int k = 1; k <= 3; ++k) {
            const double e1 = fd_mismatch(detail::quartic_track(w, u0, c1, k));
            const double e2 = fd_mismatch(detail::quartic_track(w, u0, c2, k));
            const double ratio = e1 / e2;
            v.require(e1 < 1e-3, "k=" + std::to_string(k) + " error " + num(e1));
            v.require(ratio > 3.0 && ratio < 5.0, "k=" + std::to_string(k) + " dt/2 reduction " + num(ratio));
        }
        return v;
    });

    criterion("energy-scan slope of log|ratio-1| in [0.7, 1.3], whitham and bessel, N=3", 60.0, [] {
        Verdict v;
        for (const char* name : {"whitham", "bessel"}) {
            ExperimentConfig cfg;
            cfg.experiment = "energy-scan";
            cfg.symbol.name = name;
            cfg.profile = "cos(x)+0.5*cos(2*x)";
            cfg.n_max = 3;
            cfg.output_dir = scratch(std::string("energy_") + name).string();
            const Outcome o = run_experiment(cfg, std::clog);
            const auto* c = find_check(o, "energy_scan.slope");
            v.require(c != nullptr && c->passed, std::string(name) + " slope " + num(c ? c->value : std::nan("")));
        }
        return v;
    });

    criterion("quartic-scan exponent in [3.5, 4.5], whitham k=3; lambda^4 homogeneity", 0.0, [] {
        Verdict v;
        ExperimentConfig cfg;
        cfg.experiment = "quartic-scan";
        cfg.symbol.name = "whitham";
        cfg.profile = kAsymmetric;
        cfg.k = 3;
        cfg.solver.t_end = 1.0;
        cfg.solver.checkpoint_every = 10;
        cfg.early_time = 0.1;
        cfg.output_dir = scratch("quartic").string();
        const Outcome o = run_experiment(cfg, std::clog);
        const auto* c = find_check(o, "quartic_scan.exponent");
        v.require(c != nullptr && c->passed, "exponent " + num(c ? c->value : std::nan("")));

        const auto w = make_builtin("whitham");
        const Field u = random_field(Grid(128, 1.0), 42, 9);
        double worst = 0.0;
        for (double lam : {0.5, 2.0, 3.0, -1.5}) {
            for (int k = 1; k <= 3; ++k) {
                const double a = quartic_rhs(w, lam * u, k), b = std::pow(lam, 4) * quartic_rhs(w, u, k);
                worst = std::max(worst, std::abs(a - b) / std::abs(b));
            }
        }
        v.require(worst <= 1e-12, "homogeneity " + num(worst));
        return v;
    });

    criterion("integrator: linear exactness, order in [3.7, 4.3], L2 drift <= 1e-8", 0.0, [] {
        Verdict v;
        const auto w = make_builtin("whitham");
        {
            const Grid g(64, 1.0);
            const Field u0 = random_field(g, 20, 3);
            const Field u = run(w, u0, 0.01, 10.0, false);
            double err = 0.0;
            for (int k = -g.n_points() / 2 + 1; k < g.n_points() / 2; ++k) {
                const cplx exact = u0.coeff(k) * std::polar(1.0, w.flux(g.wavenumber(k)) * 10.0);
                err = std::max(err, std::abs(u.coeff(k) - exact));
            }
            v.require(err <= 1e-12, "linear " + num(err));
        }
        {
            const Field u0 = profile(Grid(64, 1.0), 0.3, "cos(x)+0.5*sin(2*x)");
            const Field ref = run(w, u0, 0.0025, 1.0);
            const double e1 = sobolev_norm(run(w, u0, 0.02, 1.0) - ref, 0.0);
            const double e2 = sobolev_norm(run(w, u0, 0.01, 1.0) - ref, 0.0);
            const double order = std::log2(e1 / e2);
            v.require(order >= 3.7 && order <= 4.3, "order " + num(order));
        }
        {
            const Field u0 = profile(Grid(256, 1.0), 0.05, "cos(x)");
            const double l0 = sobolev_norm(u0, 0.0);
            const double drift = std::abs(sobolev_norm(run(w, u0, 1e-3, 1.0), 0.0) - l0) / l0;
            v.require(drift <= 1e-8, "L2 drift " + num(drift));
        }
        return v;
    });

    criterion("kernel equals naive double loop to 1e-12 at n = 32..256", 0.0, [] {
        Verdict v;
        for (const auto& s : {make_builtin("whitham"), make_builtin("bessel")}) {
            for (int n : {32, 64, 128, 256}) {
                const Grid g(n, 1.0);
                const Field f = random_field(g, g.dealias_cutoff(), 100 + n), h = random_field(g, n / 2 - 1, 200 + n);
                const Field b = bilinear_B(s, f, h), ref = naive_B(s, f, h);
                double d = 0.0, m = 0.0;
                for (std::size_t i = 0; i < b.coeffs().size(); ++i) {
                    d = std::max(d, std::abs(b.coeffs()[i] - ref.coeffs()[i]));
                    m = std::max(m, std::abs(ref.coeffs()[i]));
                }
                v.require(d <= 1e-12 * m, s.name + " n=" + std::to_string(n) + " " + num(d / m));
            }
        }
        return v;
    });

    criterion("commutator sups finite and refinement-stable, whitham, ~1e4 samples", 0.0, [] {
        Verdict v;
        const auto w = make_builtin("whitham");
        const CommutatorGrid grid;
        const auto s0 = grid.samples(), s1 = grid.refined().samples();
        const auto r0 = commutator_scan(w, s0), r1 = commutator_scan(w, s1);
        v.require(s0.size() >= 5000 && s0.size() <= 20000, std::to_string(s0.size()) + " samples");
        for (const auto& [name, a, b] : {std::tuple{"N", r0.n_bound, r1.n_bound}, std::tuple{"U", r0.u_bound, r1.u_bound}}) {
            const double d = std::abs(a.c_max - b.c_max) / std::max(a.c_max, b.c_max);
            v.require(std::isfinite(a.c_max) && std::isfinite(b.c_max) && d < 0.1,
                      std::string(name) + " sup " + num(a.c_max) + " -> " + num(b.c_max));
        }
        return v;
    });

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
