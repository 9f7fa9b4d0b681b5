#pragma once

// Experiment configuration and the drivers behind whitham-lab.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "whitham/detail/parallel.hpp"
#include "whitham/dispersion.hpp"
#include "whitham/energy.hpp"
#include "whitham/evolve.hpp"
#include "whitham/expression.hpp"
#include "whitham/io.hpp"
#include "whitham/pseudoproduct.hpp"
#include "whitham/spectral.hpp"

#ifndef WHITHAM_VERSION
#define WHITHAM_VERSION "0.1.0"
#endif

namespace whitham {

inline constexpr const char* version = WHITHAM_VERSION;

using json = nlohmann::ordered_json;

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"verify-symbol", "identity-check", "simulate",       "energy-scan",
                                                "quartic-scan",  "lifespan-scan",  "commutator-scan"};
    return names;
}

namespace detail {

inline void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) throw ValidationError(where + ": expected a JSON object");
    for (const auto& [key, _] : obj.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            throw ValidationError(where + ": unknown key '" + key + "'");
        }
    }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(where + "." + key + ": wrong type");
    }
}

}  // namespace detail

/// Symbol as written in a config: {"name": "whitham"}, {"name": "capillary_whitham",
/// "beta": 1}, {"name": "smooth_fkdv", "alpha": 0.5} or {"name": "custom",
/// "alpha": ..., "j_star": ..., "p": "<expression in xi>", "p_tilde": ...}.
struct SymbolDesc {
    std::string name = "whitham";
    std::optional<double> beta;
    std::optional<double> alpha;
    std::optional<int> j_star;
    std::string p;
    std::optional<double> p_tilde;

    static SymbolDesc from_json(const json& j) {
        detail::reject_unknown(j, {"name", "beta", "alpha", "j_star", "p", "p_tilde"}, "symbol");
        SymbolDesc d;
        detail::read(j, "name", d.name, "symbol");
        auto opt = [&](const char* key, auto& field) {
            if (j.contains(key)) {
                std::remove_reference_t<decltype(*field)> v{};
                detail::read(j, key, v, "symbol");
                field = v;
            }
        };
        opt("beta", d.beta);
        opt("alpha", d.alpha);
        opt("j_star", d.j_star);
        opt("p_tilde", d.p_tilde);
        detail::read(j, "p", d.p, "symbol");
        return d;
    }

    json to_json() const {
        json j{{"name", name}};
        if (beta) j["beta"] = *beta;
        if (alpha) j["alpha"] = *alpha;
        if (j_star) j["j_star"] = *j_star;
        if (!p.empty()) j["p"] = p;
        if (p_tilde) j["p_tilde"] = *p_tilde;
        return j;
    }

    SymbolSpec build() const {
        auto need = [&](const auto& v, const char* key) {
            if (!v) throw ValidationError("symbol '" + name + "' requires '" + key + "'");
            return *v;
        };
        if (name == "custom") {
            detail::require(!p.empty(), "symbol 'custom' requires 'p'");
            return make_custom(p, need(alpha, "alpha"), need(j_star, "j_star"), p_tilde);
        }
        detail::require(p.empty() && !p_tilde && !j_star, "symbol '" + name + "' takes no p, p_tilde or j_star");
        if (name == "capillary_whitham") {
            const double params[] = {need(beta, "beta")};
            return make_builtin(name, params);
        }
        if (name == "fkdv" || name == "smooth_fkdv") {
            const double params[] = {need(alpha, "alpha")};
            return make_builtin(name, params);
        }
        detail::require(!beta && !alpha, "symbol '" + name + "' takes no parameters");
        return make_builtin(name);
    }
};

struct ExperimentConfig {
    std::string experiment = "verify-symbol";
    SymbolDesc symbol;
    int n_points = 256;
    double scale = 1.0;
    SolverConfig solver;
    std::vector<double> amplitudes{0.4, 0.2, 0.1, 0.05};
    std::string profile = "cos(x)";
    int n_max = 3;
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    /// Energy index for quartic-scan.
    int k = 3;
    /// Random samples per identity in verify-symbol.
    int samples = 10000;
    /// Random fields in identity-check.
    int fields = 20;
    /// Largest accepted relative mismatch between quartic_rhs and the finite difference.
    double fd_tolerance = 1e-3;
    /// quartic-scan fits max |dE/dt| over checkpoints with t <= early_time.
    double early_time = 0.1;
    PlaneGrid bounds;
    CommutatorGrid commutator;
    /// Scan worker threads; 0 means one per hardware thread.
    unsigned workers = 0;
    /// Pseudoproduct block size; 0 picks one by benchmark at startup.
    int kernel_block_size = 0;

    static ExperimentConfig from_json(const json& j) {
        detail::reject_unknown(j,
                               {"experiment", "symbol", "grid", "solver", "amplitudes", "profile", "n_max", "seed",
                                "output_dir", "k", "samples", "fields", "fd_tolerance", "early_time", "bounds", "commutator",
                                "workers", "kernel_block_size"},
                               "config");
        ExperimentConfig c;
        const std::string w = "config";
        detail::read(j, "experiment", c.experiment, w);
        if (j.contains("symbol")) c.symbol = SymbolDesc::from_json(j.at("symbol"));
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            detail::reject_unknown(g, {"n_points", "scale"}, "grid");
            detail::read(g, "n_points", c.n_points, "grid");
            detail::read(g, "scale", c.scale, "grid");
        }
        if (j.contains("solver")) {
            const auto& s = j.at("solver");
            detail::reject_unknown(s,
                                   {"dt", "t_end", "checkpoint_every", "dealias", "breakdown_gradient_factor",
                                    "tail_fraction_limit"},
                                   "solver");
            detail::read(s, "dt", c.solver.dt, "solver");
            detail::read(s, "t_end", c.solver.t_end, "solver");
            detail::read(s, "checkpoint_every", c.solver.checkpoint_every, "solver");
            detail::read(s, "dealias", c.solver.dealias, "solver");
            detail::read(s, "breakdown_gradient_factor", c.solver.breakdown_gradient_factor, "solver");
            detail::read(s, "tail_fraction_limit", c.solver.tail_fraction_limit, "solver");
        }
        detail::read(j, "amplitudes", c.amplitudes, w);
        detail::read(j, "profile", c.profile, w);
        detail::read(j, "n_max", c.n_max, w);
        detail::read(j, "seed", c.seed, w);
        detail::read(j, "output_dir", c.output_dir, w);
        detail::read(j, "k", c.k, w);
        detail::read(j, "samples", c.samples, w);
        detail::read(j, "fields", c.fields, w);
        detail::read(j, "fd_tolerance", c.fd_tolerance, w);
        detail::read(j, "early_time", c.early_time, w);
        if (j.contains("bounds")) {
            const auto& b = j.at("bounds");
            detail::reject_unknown(b, {"lo", "hi", "per_decade"}, "bounds");
            detail::read(b, "lo", c.bounds.lo, "bounds");
            detail::read(b, "hi", c.bounds.hi, "bounds");
            detail::read(b, "per_decade", c.bounds.per_decade, "bounds");
        }
        if (j.contains("commutator")) {
            const auto& m = j.at("commutator");
            detail::reject_unknown(m, {"xi_count", "offset_count", "xi_lo", "xi_hi"}, "commutator");
            detail::read(m, "xi_count", c.commutator.xi_count, "commutator");
            detail::read(m, "offset_count", c.commutator.offset_count, "commutator");
            detail::read(m, "xi_lo", c.commutator.xi_lo, "commutator");
            detail::read(m, "xi_hi", c.commutator.xi_hi, "commutator");
        }
        detail::read(j, "workers", c.workers, w);
        detail::read(j, "kernel_block_size", c.kernel_block_size, w);
        return c;
    }

    json to_json() const {
        return {
            {"experiment", experiment},
            {"symbol", symbol.to_json()},
            {"grid", {{"n_points", n_points}, {"scale", scale}}},
            {"solver",
             {{"dt", solver.dt},
              {"t_end", solver.t_end},
              {"checkpoint_every", solver.checkpoint_every},
              {"dealias", solver.dealias},
              {"breakdown_gradient_factor", solver.breakdown_gradient_factor},
              {"tail_fraction_limit", solver.tail_fraction_limit}}},
            {"amplitudes", amplitudes},
            {"profile", profile},
            {"n_max", n_max},
            {"seed", seed},
            {"output_dir", output_dir},
            {"k", k},
            {"samples", samples},
            {"fields", fields},
            {"fd_tolerance", fd_tolerance},
            {"early_time", early_time},
            {"bounds", {{"lo", bounds.lo}, {"hi", bounds.hi}, {"per_decade", bounds.per_decade}}},
            {"commutator",
             {{"xi_count", commutator.xi_count},
              {"offset_count", commutator.offset_count},
              {"xi_lo", commutator.xi_lo},
              {"xi_hi", commutator.xi_hi}}},
            {"workers", workers},
            {"kernel_block_size", kernel_block_size},
        };
    }

    bool is_scan() const {
        return experiment == "energy-scan" || experiment == "quartic-scan" || experiment == "lifespan-scan";
    }

    /// Checks everything that can be checked without running; returns the symbol.
    SymbolSpec validate() const {
        const auto& names = experiment_names();
        if (std::find(names.begin(), names.end(), experiment) == names.end()) {
            throw ValidationError("unknown experiment '" + experiment + "'");
        }
        SymbolSpec sym = symbol.build();
        (void)Grid(n_points, scale);
        solver.validate();
        detail::require(n_max >= min_energy_order(sym),
                        "n_max must be >= max(3, 2j*-1) = " + std::to_string(min_energy_order(sym)));
        detail::require(k >= 0, "k must be >= 0");
        detail::require(samples >= 1, "samples must be >= 1");
        detail::require(fields >= 1, "fields must be >= 1");
        detail::require(fd_tolerance > 0.0, "fd_tolerance must be positive");
        detail::require(early_time >= 0.0, "early_time must be >= 0");
        detail::require(kernel_block_size >= 0, "kernel_block_size must be >= 0");
        detail::require(!output_dir.empty(), "output_dir must not be empty");
        (void)Expression::parse(profile, "x");
        if (is_scan()) {
            detail::require(amplitudes.size() >= 2, "amplitudes: a scan needs at least two values");
            for (std::size_t i = 0; i < amplitudes.size(); ++i) {
                detail::require(amplitudes[i] > 0.0 && std::isfinite(amplitudes[i]),
                                "amplitudes must be strictly positive");
                if (i > 0) detail::require(amplitudes[i] < amplitudes[i - 1], "amplitudes must be strictly decreasing");
            }
        }
        detail::require(bounds.lo > 0.0 && bounds.hi > bounds.lo && bounds.per_decade >= 1, "bounds: invalid grid");
        detail::require(commutator.xi_count >= 2 && commutator.offset_count >= 2 && commutator.xi_lo >= 1.0 &&
                            commutator.xi_hi > commutator.xi_lo,
                        "commutator: invalid grid");
        return sym;
    }
};

/// Sets a dotted JSON path ("grid.n_points") to `value`, parsed as JSON when
/// possible and kept as a string otherwise.
inline void apply_override(json& doc, const std::string& path, const std::string& value) {
    detail::require(!path.empty(), "empty override path");
    json parsed = json::parse(value, nullptr, false);
    if (parsed.is_discarded()) parsed = value;
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        detail::require(!key.empty(), "malformed override path '" + path + "'");
        if (!node->is_object()) *node = json::object();
        if (dot == std::string::npos) {
            (*node)[key] = parsed;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

// ---------------------------------------------------------------------------
// Fits.

struct PowerFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::size_t points = 0;
};

/// Least-squares line through (log x, log y). Needs two distinct x and positive data.
inline std::optional<PowerFit> fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
    detail::require(x.size() == y.size(), "fit_power_law: size mismatch");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    if (lx.size() < 2) return std::nullopt;
    const double n = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx == 0.0) return std::nullopt;
    PowerFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.points = lx.size();
    return f;
}

// ---------------------------------------------------------------------------
// Running.

struct CheckRecord {
    std::string name;
    bool passed = false;
    double value = 0.0;
    std::string detail;
};

struct Outcome {
    std::vector<CheckRecord> checks;
    std::vector<std::filesystem::path> files;
    /// Set when the run produced non-finite results (exit 3 after writing outputs).
    std::string numerical_failure;

    bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const CheckRecord& c) { return c.passed; });
    }
};

namespace detail {

inline json checks_json(const std::vector<CheckRecord>& checks) {
    json a = json::array();
    for (const auto& c : checks) {
        a.push_back({{"name", c.name}, {"passed", c.passed}, {"value", io::number_or_null(c.value)},
                     {"detail", c.detail}});
    }
    return a;
}

class Writer {
  public:
    Writer(const ExperimentConfig& cfg, Outcome& out) : cfg_(cfg), out_(out), dir_(cfg.output_dir) {}

    /// Writes the table and its sidecar `<file>.json`.
    void csv(const std::string& file, const io::Table& table, json extra = json::object()) {
        const auto path = dir_ / file;
        io::write_text(path, table.str());
        json meta{{"artifact", "whitham-lab"},
                  {"version", version},
                  {"experiment", cfg_.experiment},
                  {"file", file},
                  {"columns", table.columns()},
                  {"config", cfg_.to_json()}};
        for (auto& [key, v] : extra.items()) meta[key] = v;
        io::write_text(path.string() + ".json", io::dump(meta));
        out_.files.push_back(path);
    }

    void json_file(const std::string& file, const json& j) {
        const auto path = dir_ / file;
        io::write_text(path, io::dump(j));
        out_.files.push_back(path);
    }

  private:
    const ExperimentConfig& cfg_;
    Outcome& out_;
    std::filesystem::path dir_;
};

inline Field initial_field(const ExperimentConfig& cfg, double amplitude) {
    const Grid grid(cfg.n_points, cfg.scale);
    const auto e = Expression::parse(cfg.profile, "x");
    Field u = synthesize_function(grid, [&](double x) { return amplitude * e(x); });
    return cfg.solver.dealias ? dealias(u) : u;
}

inline io::Cell opt_cell(const std::optional<double>& v) { return v ? io::Cell(*v) : io::Cell(); }

inline void add_check(Outcome& out, std::string name, bool passed, double value, std::string detail) {
    out.checks.push_back({std::move(name), passed, value, std::move(detail)});
}

// verify-symbol -------------------------------------------------------------

inline void run_verify_symbol(const ExperimentConfig& cfg, const SymbolSpec& sym, Outcome& out) {
    for (const auto& c : check_assumptions(sym)) add_check(out, "assumption." + c.name, c.passed, c.value, c.detail);
    for (const auto& rep : {verify_phi_symmetries(sym, cfg.samples, cfg.seed),
                            verify_multiplier_identities(sym, cfg.samples, cfg.seed)}) {
        for (const auto& e : rep.entries) {
            add_check(out, "identity." + e.name, e.max_residual <= rep.tolerance, e.max_residual,
                      "max relative residual over " + std::to_string(rep.samples) + " samples, tolerance 1e-12");
        }
    }
    io::Table bounds(io::bound_columns(false));
    if (sym.satisfies_a3) {
        const auto fine = cfg.bounds.refined();
        const auto phi0 = verify_phi_bound(sym, cfg.bounds), phi1 = verify_phi_bound(sym, fine);
        const auto m0 = verify_m_bound(sym, cfg.bounds), m1 = verify_m_bound(sym, fine);
        io::add_bound_row(bounds, phi0, 0);
        io::add_bound_row(bounds, phi1, 1);
        io::add_bound_row(bounds, m0, 0);
        io::add_bound_row(bounds, m1, 1);
        add_check(out, "phi_bound.two_sided", phi0.valid() && phi1.valid(), phi0.c_min,
                  "0 < c_min <= c_max < inf on both grids");
        const double dphi = relative_change(phi0, phi1);
        add_check(out, "phi_bound.stable", dphi < 0.1, dphi, "relative change of c_min, c_max under doubling");
        add_check(out, "m_bound.finite", std::isfinite(m0.c_max) && std::isfinite(m1.c_max), m0.c_max,
                  "sup |m| / (m1 + m2)");
        const double dm = std::abs(m0.c_max - m1.c_max) / std::max(m0.c_max, m1.c_max);
        add_check(out, "m_bound.stable", dm < 0.1, dm, "relative change of c_max under doubling");
    } else {
        add_check(out, "bounds.applicable", false, 0.0,
                  "symbol '" + sym.name + "' does not satisfy the assumptions; bound verifiers refused it");
    }
    io::Table t({"check", "passed", "value", "detail"});
    for (const auto& c : out.checks) {
        t.add({c.name, static_cast<std::int64_t>(c.passed ? 1 : 0), c.value, c.detail});
    }
    Writer w(cfg, out);
    w.csv("verify_symbol.csv", t);
    w.csv("bounds.csv", bounds);
    if (sym.satisfies_a3) {
        // Per-sample ratios on the coarse grid; the m plane is (xi - eta, eta) = (a, b).
        io::Table samples({"model_name", "a", "b", "ratio"});
        const auto pts = cfg.bounds.points();
        for (const auto& [a, b] : pts) samples.add({"phi:" + sym.name, a, b, phi_bound_ratio(sym, a, b)});
        for (const auto& [a, b] : pts) samples.add({"m:" + sym.name, a, b, m_bound_ratio(sym, a + b, b)});
        w.csv("bound_samples.csv", samples);
    }
}

// identity-check ------------------------------------------------------------

inline void run_identity_check(const ExperimentConfig& cfg, const SymbolSpec& sym, Outcome& out) {
    const Grid grid(cfg.n_points, cfg.scale);
    struct Row {
        std::uint64_t seed = 0;
        double bilinear = 0.0;
        std::array<double, 3> cancel{};
    };
    const auto rows = parallel_map(static_cast<std::size_t>(cfg.fields), cfg.workers, [&](std::size_t i) {
        Row r;
        r.seed = cfg.seed + i;
        const Field u = random_field(grid, grid.dealias_cutoff(), r.seed);
        r.bilinear = check_bilinear_identity(sym, u);
        for (int k = 1; k <= 3; ++k) r.cancel[static_cast<std::size_t>(k - 1)] = highest_order_cancellation(sym, u, k).relative();
        return r;
    });
    io::Table t({"field", "seed", "bilinear_residual", "cancellation_k1", "cancellation_k2", "cancellation_k3"});
    double worst_b = 0.0, worst_c = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        t.add({static_cast<std::int64_t>(i), static_cast<std::int64_t>(r.seed), r.bilinear, r.cancel[0], r.cancel[1],
               r.cancel[2]});
        worst_b = std::max(worst_b, r.bilinear);
        for (double c : r.cancel) worst_c = std::max(worst_c, c);
    }
    add_check(out, "identity.bilinear", worst_b <= 1e-10, worst_b, "max residual / ||u||_H1^2, tolerance 1e-10");
    add_check(out, "identity.cancellation", worst_c <= 1e-10, worst_c, "max |F0+G0|/(|F0|+|G0|), tolerance 1e-10");
    Writer(cfg, out).csv("identity_check.csv", t, {{"checks", checks_json(out.checks)}});
}

// simulate ------------------------------------------------------------------

inline void run_simulate(const ExperimentConfig& cfg, const SymbolSpec& sym, Outcome& out, std::ostream& log) {
    const Field u0 = initial_field(cfg, 1.0);
    const auto tr = evolve(sym, u0, cfg.solver, cfg.n_max);
    Writer w(cfg, out);
    w.csv("trajectory.csv", io::trajectory_table(tr), {{"breakdown", io::breakdown_json(tr.breakdown)}});
    w.json_file("breakdown.json", io::breakdown_json(tr.breakdown));
    w.csv("final_state.csv", io::field_table(tr.final_state));
    w.json_file("final_spectrum.json", io::spectrum_json(tr.final_state));
    const bool ratio_ok = std::all_of(tr.checkpoints.begin(), tr.checkpoints.end(),
                                      [](const Checkpoint& c) { return c.energy.ok; });
    if (!ratio_ok) log << "warning: energy ratio not positive at some checkpoint (data not small)\n";
    if (tr.breakdown && tr.breakdown->reason == BreakdownReason::nonfinite) {
        out.numerical_failure = "simulate: non-finite state at t = " + io::format_double(tr.breakdown->time);
    }
}

// energy-scan ---------------------------------------------------------------

inline void run_energy_scan(const ExperimentConfig& cfg, const SymbolSpec& sym, Outcome& out) {
    const auto& eps = cfg.amplitudes;
    const auto reps = parallel_map(eps.size(), cfg.workers, [&](std::size_t i) {
        return total_modified_energy(sym, initial_field(cfg, eps[i]), cfg.n_max);
    });
    std::vector<double> dev;
    for (const auto& r : reps) {
        if (!std::isfinite(r.total_modified)) throw NumericalError("energy-scan: non-finite energy");
        dev.push_back(std::abs(r.ratio - 1.0));
    }
    const auto fit = fit_power_law(eps, dev);
    io::Table t({"eps", "ratio", "abs_dev", "total_modified", "quadratic_sq", "h_n_sq", "hn_ratio", "slope",
                 "intercept"});
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const auto& r = reps[i];
        t.add({eps[i], r.ratio, dev[i], r.total_modified, r.quadratic_sq, r.h_n_sq, r.hn_ratio,
               opt_cell(fit ? std::optional(fit->slope) : std::nullopt),
               opt_cell(fit ? std::optional(fit->intercept) : std::nullopt)});
    }
    if (fit) {
        add_check(out, "energy_scan.slope", fit->slope >= 0.7 && fit->slope <= 1.3, fit->slope,
                  "slope of log|ratio-1| vs log eps, expected in [0.7, 1.3]");
    } else {
        add_check(out, "energy_scan.slope", false, std::nan(""),
                  "no fit: |ratio-1| vanished (the profile has no cubic interaction)");
    }
    Writer(cfg, out).csv("energy_scan.csv", t, {{"checks", checks_json(out.checks)}});
}

// quartic-scan --------------------------------------------------------------

struct QuarticPoint {
    double t = 0.0;
    double rate = 0.0;
    std::optional<double> fd;
};

/// dE^(k)/dt from quartic_rhs at every checkpoint and, where both neighbours
/// exist, the centered difference (E(t+dt) - E(t-dt)) / (2 dt).
inline std::vector<QuarticPoint> quartic_track(const SymbolSpec& sym, const Field& u0, const SolverConfig& cfg,
                                               int k) {
    cfg.validate();
    const Grid& grid = u0.grid();
    const auto total = std::llround(cfg.t_end / cfg.dt);
    detail::require(std::abs(static_cast<double>(total) * cfg.dt - cfg.t_end) <= 1e-9 * std::max(1.0, cfg.t_end),
                    "quartic-scan: solver.t_end must be a multiple of solver.dt");
    detail::require(cfg.dt <= advective_dt_limit(u0), "solver.dt exceeds the advective guard");
    const Stepper st(sym, grid, cfg.dt, cfg.dealias);
    const QuarticLaw law(sym, grid);
    const std::int64_t every = cfg.checkpoint_every;
    std::vector<QuarticPoint> pts;
    // e_prev: E at the previous step when a checkpoint follows it; e_minus: E
    // just before the latest checkpoint, consumed one step after it.
    std::optional<double> e_prev, e_minus;
    Field u = u0;
    for (std::int64_t s = 0; s <= total; ++s) {
        if (s > 0) {
            u = st.step(u);
            if (!u.all_finite()) throw NumericalError("quartic-scan: non-finite state");
        }
        const bool after_checkpoint = s >= 2 && (s - 1) % every == 0;
        const bool before_checkpoint = (s + 1) % every == 0 && s + 1 <= total;
        std::optional<double> e_here;
        if (after_checkpoint || before_checkpoint) e_here = modified_energy(sym, u, k);
        if (after_checkpoint) pts.back().fd = (*e_here - *e_minus) / (2.0 * cfg.dt);
        if (s % every == 0) {
            pts.push_back({static_cast<double>(s) * cfg.dt, law.rate(u, k), std::nullopt});
            e_minus = e_prev;
        }
        if (before_checkpoint) e_prev = e_here;
    }
    return pts;
}

inline void run_quartic_scan(const ExperimentConfig& cfg, const SymbolSpec& sym, Outcome& out) {
    const auto& eps = cfg.amplitudes;
    const auto tracks = parallel_map(eps.size(), cfg.workers, [&](std::size_t i) {
        return quartic_track(sym, initial_field(cfg, eps[i]), cfg.solver, cfg.k);
    });
    std::vector<double> max_rate(eps.size(), 0.0), max_fd(eps.size(), 0.0), fd_err(eps.size(), 0.0);
    io::Table points({"eps", "t", "rate", "fd"});
    for (std::size_t i = 0; i < eps.size(); ++i) {
        double rate_on_fd = 0.0;
        for (const auto& p : tracks[i]) {
            points.add({eps[i], p.t, p.rate, opt_cell(p.fd)});
            if (p.t <= cfg.early_time + 1e-12) max_rate[i] = std::max(max_rate[i], std::abs(p.rate));
            if (p.fd) {
                max_fd[i] = std::max(max_fd[i], std::abs(*p.fd));
                fd_err[i] = std::max(fd_err[i], std::abs(*p.fd - p.rate));
                rate_on_fd = std::max(rate_on_fd, std::abs(p.rate));
            }
        }
        fd_err[i] = rate_on_fd > 0.0 ? fd_err[i] / rate_on_fd : std::nan("");
        if (!std::isfinite(max_rate[i])) throw NumericalError("quartic-scan: non-finite rate");
    }
    const auto fit = fit_power_law(eps, max_rate);
    io::Table t({"eps", "max_rate", "max_fd", "fd_rel_error", "exponent", "intercept"});
    for (std::size_t i = 0; i < eps.size(); ++i) {
        t.add({eps[i], max_rate[i], max_fd[i], fd_err[i], opt_cell(fit ? std::optional(fit->slope) : std::nullopt),
               opt_cell(fit ? std::optional(fit->intercept) : std::nullopt)});
    }
    if (fit) {
        add_check(out, "quartic_scan.exponent", fit->slope >= 3.5 && fit->slope <= 4.5, fit->slope,
                  "exponent of max|dE/dt| over t <= early_time vs eps, expected in [3.5, 4.5]");
    } else {
        add_check(out, "quartic_scan.exponent", false, std::nan(""),
                  "no fit: dE/dt vanished at every early checkpoint (data with a reflection symmetry)");
    }
    double worst = 0.0;
    bool have_fd = true;
    for (double e : fd_err) {
        if (std::isnan(e)) have_fd = false;
        worst = std::max(worst, e);
    }
    add_check(out, "quartic_scan.finite_difference", have_fd && worst < cfg.fd_tolerance, have_fd ? worst : std::nan(""),
              have_fd ? "max |FD - rhs| / max |rhs| over checkpoints with both neighbours"
                      : "no checkpoint with two neighbouring steps (t_end too short)");
    Writer w(cfg, out);
    w.csv("quartic_scan.csv", t, {{"k", cfg.k}, {"checks", checks_json(out.checks)}});
    w.csv("quartic_scan_points.csv", points, {{"k", cfg.k}});
}

// lifespan-scan -------------------------------------------------------------

inline void run_lifespan_scan(const ExperimentConfig& cfg, const SymbolSpec& sym, Outcome& out) {
    const auto& eps = cfg.amplitudes;
    const auto trs = parallel_map(eps.size(), cfg.workers, [&](std::size_t i) {
        auto tr = evolve(sym, initial_field(cfg, eps[i]), cfg.solver, cfg.n_max);
        tr.final_state = Field(tr.final_state.grid());
        return tr;
    });
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (trs[i].breakdown) {
            xs.push_back(eps[i]);
            ys.push_back(trs[i].breakdown->time);
        }
    }
    const auto fit = fit_power_law(xs, ys);
    io::Table t({"eps", "breakdown_time", "reason", "censored", "steps", "exponent", "intercept", "fit_points"});
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const auto& b = trs[i].breakdown;
        t.add({eps[i], b ? io::Cell(b->time) : io::Cell(cfg.solver.t_end),
               b ? io::Cell(std::string(to_string(b->reason))) : io::Cell(std::string("none")),
               static_cast<std::int64_t>(b ? 0 : 1), trs[i].steps,
               opt_cell(fit ? std::optional(fit->slope) : std::nullopt),
               opt_cell(fit ? std::optional(fit->intercept) : std::nullopt),
               static_cast<std::int64_t>(fit ? fit->points : 0)});
    }
    Writer(cfg, out).csv("lifespan_scan.csv", t);
}

// commutator-scan -----------------------------------------------------------

inline void run_commutator_scan(const ExperimentConfig& cfg, const SymbolSpec& sym, Outcome& out) {
    const auto coarse = cfg.commutator.samples();
    const auto fine = cfg.commutator.refined().samples();
    const auto r0 = commutator_scan(sym, coarse), r1 = commutator_scan(sym, fine);
    io::Table t(io::bound_columns(true));
    io::add_bound_row(t, r0.n_bound, 0);
    io::add_bound_row(t, r1.n_bound, 1);
    io::add_bound_row(t, r0.u_bound, 0);
    io::add_bound_row(t, r1.u_bound, 1);
    for (const auto& [name, a, b] : {std::tuple{"N", r0.n_bound, r1.n_bound}, std::tuple{"U", r0.u_bound, r1.u_bound}}) {
        const bool finite = std::isfinite(a.c_max) && std::isfinite(b.c_max) && a.sample_count > 0;
        add_check(out, std::string("commutator.") + name + ".finite", finite, b.c_max, "normalized sup");
        const double d = std::abs(a.c_max - b.c_max) / std::max(a.c_max, b.c_max);
        add_check(out, std::string("commutator.") + name + ".stable", finite && d < 0.1, d,
                  "relative change of the sup under refinement");
    }
    Writer(cfg, out).csv("commutator.csv", t,
                         {{"samples", {coarse.size(), fine.size()}},
                          {"skipped", {r0.skipped, r1.skipped}},
                          {"checks", checks_json(out.checks)}});
}

}  // namespace detail

/// Runs one experiment and writes its outputs. Throws ValidationError on a bad
/// config and NumericalError on non-finite results; failed checks are returned.
inline Outcome run_experiment(const ExperimentConfig& cfg, std::ostream& log = std::clog) {
    const SymbolSpec sym = cfg.validate();
    if (cfg.kernel_block_size > 0) {
        set_kernel_block_size(cfg.kernel_block_size);
    } else if (cfg.experiment != "verify-symbol" && cfg.experiment != "commutator-scan") {
        tune_kernel_block_size(&log);
    }
    Outcome out;
    const auto& e = cfg.experiment;
    if (e == "verify-symbol") detail::run_verify_symbol(cfg, sym, out);
    else if (e == "identity-check") detail::run_identity_check(cfg, sym, out);
    else if (e == "simulate") detail::run_simulate(cfg, sym, out, log);
    else if (e == "energy-scan") detail::run_energy_scan(cfg, sym, out);
    else if (e == "quartic-scan") detail::run_quartic_scan(cfg, sym, out);
    else if (e == "lifespan-scan") detail::run_lifespan_scan(cfg, sym, out);
    else if (e == "commutator-scan") detail::run_commutator_scan(cfg, sym, out);
    return out;
}

/// run_experiment with the process exit status: 0 success, 2 validation,
/// 3 numerical failure, 4 check failure. Messages go to `err`, results to `out`.
inline int run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        const Outcome o = run_experiment(cfg, err);
        for (const auto& c : o.checks) {
            out << (c.passed ? "[PASS] " : "[FAIL] ") << c.name << " = " << io::format_double(c.value) << "  ("
                << c.detail << ")\n";
        }
        for (const auto& f : o.files) out << "wrote " << f.string() << "\n";
        if (!o.numerical_failure.empty()) {
            err << "error: " << o.numerical_failure << "\n";
            return 3;
        }
        if (!o.passed()) {
            std::string names;
            for (const auto& c : o.checks) {
                if (!c.passed) names += (names.empty() ? "" : ", ") + c.name;
            }
            err << "error: check failed: " << names << "\n";
            return 4;
        }
        return 0;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const CheckFailure& e) {
        err << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace whitham
