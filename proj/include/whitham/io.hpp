#pragma once

// CSV and JSON serialization of fields, bound reports and trajectories.
// Floats are written with 17 significant digits; column layouts are listed
// in docs/formats.md.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "whitham/dispersion.hpp"
#include "whitham/evolve.hpp"
#include "whitham/spectral.hpp"

namespace whitham::io {

using json = nlohmann::ordered_json;

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// One CSV cell: a number, an integer, text, or empty (missing value).
using Cell = std::variant<std::monostate, double, std::int64_t, std::string>;

inline std::string format_cell(const Cell& c) {
    struct Visitor {
        std::string operator()(std::monostate) const { return ""; }
        std::string operator()(double v) const { return format_double(v); }
        std::string operator()(std::int64_t v) const { return std::to_string(v); }
        std::string operator()(const std::string& s) const {
            if (s.find_first_of(",\"\n") == std::string::npos) return s;
            std::string q = "\"";
            for (char ch : s) {
                if (ch == '"') q += '"';
                q += ch;
            }
            return q + "\"";
        }
    };
    return std::visit(Visitor{}, c);
}

/// Header-first table written row by row.
class Table {
  public:
    explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    const std::vector<std::string>& columns() const { return columns_; }
    std::size_t rows() const { return rows_.size(); }

    void add(std::vector<Cell> row) {
        detail::require(row.size() == columns_.size(), "Table::add: expected " + std::to_string(columns_.size()) +
                                                           " cells, got " + std::to_string(row.size()));
        rows_.push_back(std::move(row));
    }

    void write(std::ostream& os) const {
        for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
        os << '\n';
        for (const auto& row : rows_) {
            for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_cell(row[i]);
            os << '\n';
        }
    }

    std::string str() const {
        std::ostringstream os;
        write(os);
        return os.str();
    }

  private:
    std::vector<std::string> columns_;
    std::vector<std::vector<Cell>> rows_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw Error("write to '" + path.string() + "' failed");
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// JSON text with a trailing newline. Non-finite numbers become null.
inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ---------------------------------------------------------------------------
// Fields.

/// Columns x, u: the zero-mean field at the grid points.
inline Table field_table(const Field& f) {
    Table t({"x", "u"});
    const auto v = sample(f);
    for (int j = 0; j < f.grid().n_points(); ++j) t.add({f.grid().x(j), v[static_cast<std::size_t>(j)]});
    return t;
}

/// {n_points, scale, removed_mean, modes: [{k, re, im}, ...]} with k ascending
/// from -n/2 to n/2-1.
inline json spectrum_json(const Field& f) {
    const Grid& g = f.grid();
    json modes = json::array();
    for (int k = -g.n_points() / 2; k < g.n_points() / 2; ++k) {
        const cplx c = f.coeff(k);
        modes.push_back({{"k", k}, {"re", c.real()}, {"im", c.imag()}});
    }
    return {{"n_points", g.n_points()}, {"scale", g.scale()}, {"removed_mean", f.removed_mean}, {"modes", modes}};
}

inline Field field_from_spectrum(const json& j) {
    try {
        const Grid g(j.at("n_points").get<int>(), j.at("scale").get<double>());
        Field f(g);
        for (const auto& m : j.at("modes")) {
            const int k = m.at("k").get<int>();
            detail::require(k >= -g.n_points() / 2 && k < g.n_points() / 2, "spectrum: mode out of range");
            f.coeff(k) = {m.at("re").get<double>(), m.at("im").get<double>()};
        }
        f.removed_mean = j.value("removed_mean", 0.0);
        return f;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("spectrum: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Bound reports.

inline std::vector<std::string> bound_columns(bool triples) {
    std::vector<std::string> c{"model_name", "c_min", "c_max", "sample_count", "worst_a", "worst_b"};
    if (triples) c.emplace_back("worst_c");
    c.emplace_back("refinement");
    return c;
}

/// Appends one BoundReport row; `refinement` counts grid doublings.
inline void add_bound_row(Table& t, const BoundReport& r, int refinement) {
    const bool triples = t.columns().size() == 8;
    const auto& w = r.worst_point();
    auto at = [&](std::size_t i) -> Cell { return i < w.size() ? Cell(w[i]) : Cell(); };
    std::vector<Cell> row{r.model_name, r.c_min, r.c_max, r.sample_count, at(0), at(1)};
    if (triples) row.push_back(at(2));
    row.push_back(static_cast<std::int64_t>(refinement));
    t.add(std::move(row));
}

// ---------------------------------------------------------------------------
// Trajectories.

inline Table trajectory_table(const Trajectory& tr) {
    std::vector<std::string> cols{"t", "sup_grad", "l2", "tail_fraction", "mean_removed"};
    std::vector<int> ks;
    if (!tr.checkpoints.empty()) {
        for (const auto& [k, _] : tr.checkpoints.front().energy.modified) {
            ks.push_back(k);
            cols.push_back("E_" + std::to_string(k));
        }
    }
    for (const char* c : {"total_modified", "quadratic_sq", "h_n_sq", "ratio", "hn_ratio", "ok"}) cols.emplace_back(c);
    Table t(cols);
    for (const auto& c : tr.checkpoints) {
        std::vector<Cell> row{c.time, c.sup_grad, c.l2, c.tail_fraction, c.mean_removed};
        for (int k : ks) row.emplace_back(c.energy.modified.at(k));
        row.emplace_back(c.energy.total_modified);
        row.emplace_back(c.energy.quadratic_sq);
        row.emplace_back(c.energy.h_n_sq);
        row.emplace_back(c.energy.ratio);
        row.emplace_back(c.energy.hn_ratio);
        row.emplace_back(static_cast<std::int64_t>(c.energy.ok ? 1 : 0));
        t.add(std::move(row));
    }
    return t;
}

/// {time, reason}; both null when the run reached t_end.
inline json breakdown_json(const std::optional<Breakdown>& b) {
    if (!b) return {{"time", nullptr}, {"reason", nullptr}};
    return {{"time", b->time}, {"reason", to_string(b->reason)}};
}

}  // namespace whitham::io
