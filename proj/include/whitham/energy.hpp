#pragma once

// Modified energies E^(k) = ||d^k u||^2 + 2 (d^k u, d^k B(u,u)) and the
// quartic law for their time derivative.

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "whitham/pseudoproduct.hpp"
#include "whitham/spectral.hpp"

namespace whitham {

/// Energies of one state. Sobolev norms use weights (1 + xi^2)^N; seminorms
/// ||d^k u||^2 use xi^(2k).
struct EnergyReport {
    double time = 0.0;
    int n_max = 0;
    /// k -> ||d_x^k u||^2 for k = 0..N.
    std::map<int, double> sobolev_sq;
    /// k -> E^(k) for k = 2j*-1..N.
    std::map<int, double> modified;
    /// sum_{k=2j*-1}^N E^(k) + ||u||^2.
    double total_modified = 0.0;
    /// Quadratic part of total_modified: sum_{k=2j*-1}^N ||d^k u||^2 + ||u||^2.
    double quadratic_sq = 0.0;
    /// ||u||^2_{H^N}.
    double h_n_sq = 0.0;
    /// total_modified / quadratic_sq (1 for u = 0). Deviates from 1 at first order in u.
    double ratio = 1.0;
    /// total_modified / h_n_sq (1 for u = 0).
    double hn_ratio = 1.0;
    /// False if ratio <= 0 or any entry is non-finite.
    bool ok = true;
};

inline int lowest_energy_index(const SymbolSpec& sym) { return 2 * sym.j_star - 1; }

inline int min_energy_order(const SymbolSpec& sym) { return std::max(3, lowest_energy_index(sym)); }

/// E^(k) given a precomputed B(u,u).
inline double modified_energy_from(const Field& u, const Field& buu, int k) {
    const Field dku = derivative(u, k);
    return seminorm_sq(u, k) + 2.0 * inner(dku, derivative(buu, k));
}

inline double modified_energy(const SymbolSpec& sym, const Field& u, int k) {
    detail::require(k >= 0, "modified_energy: k must be >= 0");
    return modified_energy_from(u, bilinear_B(sym, u, u), k);
}

inline EnergyReport total_modified_energy(const SymbolSpec& sym, const Field& u, int n_max, double time = 0.0) {
    detail::require(n_max >= min_energy_order(sym),
                    "total_modified_energy: n_max must be >= max(3, 2j*-1) = " +
                        std::to_string(min_energy_order(sym)));
    EnergyReport r;
    r.time = time;
    r.n_max = n_max;
    const Field buu = bilinear_B(sym, u, u);
    for (int k = 0; k <= n_max; ++k) r.sobolev_sq[k] = seminorm_sq(u, k);
    r.total_modified = r.sobolev_sq[0];
    r.quadratic_sq = r.sobolev_sq[0];
    for (int k = lowest_energy_index(sym); k <= n_max; ++k) {
        r.modified[k] = modified_energy_from(u, buu, k);
        r.total_modified += r.modified[k];
        r.quadratic_sq += r.sobolev_sq[k];
    }
    const double hn = sobolev_norm(u, n_max);
    r.h_n_sq = hn * hn;
    if (r.quadratic_sq > 0.0) {
        r.ratio = r.total_modified / r.quadratic_sq;
        r.hn_ratio = r.total_modified / r.h_n_sq;
    }
    r.ok = std::isfinite(r.total_modified) && std::isfinite(r.h_n_sq) && r.ratio > 0.0;
    return r;
}

/// Evaluates dE^(k)/dt = 2[(d^k w, d^k B(u,u)) + 2 (d^k u, d^k B(w,u))],
/// w = -u u_x, for several k sharing the two pseudoproducts.
class QuarticLaw {
  public:
    QuarticLaw(const SymbolSpec& sym, const Grid& grid) : pp_(sym, grid) {}

    std::vector<double> rates(const Field& u_in, const std::vector<int>& ks) const {
        const Field u = require_band_limit(u_in, "quartic_rhs");
        const Field w = advective_term(u);
        const Field buu = pp_.B(u, u);
        const Field bwu = pp_.B(w, u);
        std::vector<double> out;
        out.reserve(ks.size());
        for (int k : ks) {
            detail::require(k >= 0, "quartic_rhs: k must be >= 0");
            const double first = inner(derivative(w, k), derivative(buu, k));
            const double second = inner(derivative(u, k), derivative(bwu, k));
            out.push_back(2.0 * (first + 2.0 * second));
        }
        return out;
    }

    double rate(const Field& u, int k) const { return rates(u, {k}).front(); }

  private:
    Pseudoproduct pp_;
};

inline double quartic_rhs(const SymbolSpec& sym, const Field& u, int k) {
    return QuarticLaw(sym, u.grid()).rate(u, k);
}

/// |E^(k) - ||d^k u||^2| / (||u||_{H2} ||u||_{H^k}^2): the empirical constant of
/// the cubic correction bound.
inline double cubic_constant(const SymbolSpec& sym, const Field& u, int k) {
    const double hk = sobolev_norm(u, k);
    const double denom = sobolev_norm(u, 2.0) * hk * hk;
    if (denom == 0.0) return 0.0;
    return std::abs(modified_energy(sym, u, k) - seminorm_sq(u, k)) / denom;
}

/// |dE^(k)/dt| / ((||u||_{H2} ||u||_{H3} + ||u||_{Hk}^2) ||u||_{Hk}^2).
inline double quartic_constant(const SymbolSpec& sym, const Field& u, int k) {
    const double hk2 = std::pow(sobolev_norm(u, k), 2);
    const double denom = (sobolev_norm(u, 2.0) * sobolev_norm(u, 3.0) + hk2) * hk2;
    if (denom == 0.0) return 0.0;
    return std::abs(quartic_rhs(sym, u, k)) / denom;
}

}  // namespace whitham
