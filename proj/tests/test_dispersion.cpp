#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>

#include "whitham/dispersion.hpp"

using namespace whitham;

namespace {

const std::array<double, 1> kOne{1.0};
const std::array<double, 1> kHalf{0.5};
const std::array<double, 1> kMinusHalf{-0.5};

}  // namespace

TEST(Builtin, Metadata) {
    const auto w = make_builtin("whitham");
    EXPECT_DOUBLE_EQ(w.alpha, -0.5);
    EXPECT_EQ(w.j_star, 1);
    EXPECT_TRUE(w.satisfies_a3);
    const auto b = make_builtin("bessel");
    EXPECT_DOUBLE_EQ(b.alpha, -0.5);
    EXPECT_EQ(b.j_star, 2);
    const auto c = make_builtin("capillary_whitham", kOne);
    EXPECT_DOUBLE_EQ(c.alpha, 0.5);
    EXPECT_EQ(c.j_star, 1);
    const auto s = make_builtin("smooth_fkdv", kOne);
    ASSERT_TRUE(s.p_tilde_at_zero);
    EXPECT_DOUBLE_EQ(*s.p_tilde_at_zero, 0.5);
    EXPECT_FALSE(make_builtin("fkdv", kOne).satisfies_a3);
}

TEST(Builtin, Errors) {
    EXPECT_THROW(make_builtin("kdv"), ValidationError);
    const std::array<double, 1> zero{0.0}, big{1.5};
    EXPECT_THROW(make_builtin("smooth_fkdv", zero), ValidationError);
    EXPECT_THROW(make_builtin("fkdv", big), ValidationError);
    const std::array<double, 1> neg{-1.0};
    EXPECT_THROW(make_builtin("capillary_whitham", neg), ValidationError);
    EXPECT_THROW(make_builtin("capillary_whitham", zero), ValidationError);
    EXPECT_THROW(make_builtin("smooth_fkdv"), ValidationError);
}

// Reference values from a 30-digit arbitrary-precision evaluation.
TEST(Builtin, WhithamValues) {
    const auto w = make_builtin("whitham");
    EXPECT_DOUBLE_EQ(w.p(0.0), 1.0);
    EXPECT_NEAR(w.p(1.0), 0.8726936208978296915, 1e-15);
    struct Row { double xi, p, dp, d2p; };
    const Row rows[] = {
        {0.05, 0.99958366291051368, -0.016640311839315052, -0.33175340452977716},
        {0.5, 0.96137105974749392, -0.14332299704370343, -0.20414296296827950},
        {3.0, 0.57592093024613788, -0.093131673646183001, 0.041345483035266766},
        {1000.0, 0.031622776601683793, -1.5811388300841897e-5, 2.3717082451262845e-8},
    };
    for (const auto& r : rows) {
        EXPECT_NEAR(w.p(r.xi), r.p, 1e-14 * std::abs(r.p)) << r.xi;
        EXPECT_NEAR(w.dp(r.xi), r.dp, 1e-12 * std::abs(r.dp)) << r.xi;
        EXPECT_NEAR(w.d2p(r.xi), r.d2p, 1e-10 * std::abs(r.d2p)) << r.xi;
        EXPECT_DOUBLE_EQ(w.p(-r.xi), w.p(r.xi));
        EXPECT_DOUBLE_EQ(w.dp(-r.xi), -w.dp(r.xi));
    }
}

TEST(Builtin, BesselValues) {
    const auto b = make_builtin("bessel");
    struct Row { double xi, p, dp, d2p; };
    const Row rows[] = {
        {0.3, 0.99899208690125489, -0.013378031121086143, -0.13216794063134356},
        {2.0, 0.70176852345018462, -0.16512200551769050, 0.10198712105504133},
    };
    for (const auto& r : rows) {
        EXPECT_NEAR(b.p(r.xi), r.p, 1e-14);
        EXPECT_NEAR(b.dp(r.xi), r.dp, 1e-13);
        EXPECT_NEAR(b.d2p(r.xi), r.d2p, 1e-12);
    }
}

TEST(Phi, Values) {
    const auto f = make_builtin("fkdv", kOne);
    EXPECT_DOUBLE_EQ(phi(f, 1.0, 1.0), -2.0);
    EXPECT_DOUBLE_EQ(m_mult(f, 1.0, 1.0), -0.5);
    EXPECT_DOUBLE_EQ(n_mult(f, 1.0, 1.0).imag(), 0.25);
    EXPECT_DOUBLE_EQ(n_mult(f, 1.0, 1.0).real(), 0.0);
    // 2 sqrt(2) - 2 sqrt(5) from an arbitrary-precision oracle.
    const auto s = make_builtin("smooth_fkdv", kOne);
    EXPECT_NEAR(phi(s, 1.0, 1.0), -1.6437088302533893, 1e-14);
    const auto w = make_builtin("whitham");
    EXPECT_EQ(phi(w, 2.5, -2.5), 0.0);
}

TEST(Multipliers, ZeroSetConvention) {
    const auto w = make_builtin("whitham");
    EXPECT_EQ(m_mult(w, 3.0, -3.0), 0.0);
    EXPECT_EQ(m_mult(w, 0.0, 2.0), 0.0);
    EXPECT_EQ(m_mult(w, 2.0, 0.0), 0.0);
    EXPECT_EQ(n_mult(w, 1.5, -1.5), std::complex<double>(0.0, 0.0));
}

TEST(Multipliers, PointIdentities) {
    const auto w = make_builtin("whitham");
    EXPECT_NEAR(m_mult(w, 2.0, 1.0) * 1.0 + m_mult(w, -2.0, 3.0) * 3.0, 0.0, 1e-14);
    EXPECT_NEAR(std::abs(n_mult(w, 2.0, 1.0) - std::conj(n_mult(w, -2.0, 3.0))), 0.0, 1e-15);
    EXPECT_NEAR(m_mult(w, 0.7, 1.9) * phi(w, 0.7, 1.9), 1.3, 1e-15);
}

TEST(Assumptions, BuiltinsPass) {
    for (const auto& sym : {make_builtin("whitham"), make_builtin("bessel"), make_builtin("capillary_whitham", kOne),
                            make_builtin("smooth_fkdv", kHalf), make_builtin("smooth_fkdv", kMinusHalf)}) {
        for (const auto& c : check_assumptions(sym)) EXPECT_TRUE(c.passed) << sym.name << " " << c.name << " " << c.value;
    }
}

TEST(Assumptions, Failures) {
    // An odd part breaks evenness.
    const auto broken = make_custom("xi + 1", 0.5, 1, 1.0);
    EXPECT_FALSE(check_evenness(broken).passed);
    // beta below 1/3 makes capillary Whitham non-monotone.
    const std::array<double, 1> small{0.1};
    const auto c = make_builtin("capillary_whitham", small);
    EXPECT_FALSE(c.satisfies_a3);
    EXPECT_FALSE(check_monotone(c).passed);
}

TEST(Custom, MatchesBuiltin) {
    const auto c = make_custom("sqrt(tanh(xi)/xi)", -0.5, 1);
    const auto w = make_builtin("whitham");
    for (double xi : {0.0, 1e-3, 0.3, 2.0, 50.0}) {
        EXPECT_NEAR(c.p(xi), w.p(xi), 1e-12) << xi;
        EXPECT_NEAR(c.dp(xi), w.dp(xi), 1e-7) << xi;
    }
    ASSERT_TRUE(c.p_tilde_at_zero);
    EXPECT_NEAR(*c.p_tilde_at_zero, -1.0 / 6.0, 1e-3);
    EXPECT_THROW(make_custom("sqrt(", -0.5, 1), ValidationError);
}

TEST(Identities, BuiltinsPass) {
    for (const auto& sym : {make_builtin("whitham"), make_builtin("bessel"), make_builtin("capillary_whitham", kOne),
                            make_builtin("smooth_fkdv", kHalf), make_builtin("fkdv", kHalf)}) {
        const auto a = verify_phi_symmetries(sym, 2000, 3);
        const auto b = verify_multiplier_identities(sym, 2000, 3);
        EXPECT_TRUE(a.passed()) << sym.name << " " << a.max_residual();
        EXPECT_TRUE(b.passed()) << sym.name << " " << b.max_residual();
    }
}

TEST(Identities, BrokenSymbolFails) {
    const auto broken = make_custom("xi + 1", 0.5, 1, 1.0);
    EXPECT_FALSE(verify_phi_symmetries(broken, 100, 1).passed());
}

TEST(Bounds, PhiBoundWhitham) {
    const auto w = make_builtin("whitham");
    const PlaneGrid g{1e-2, 1e2, 6, true};
    const auto r = verify_phi_bound(w, g);
    EXPECT_TRUE(r.valid());
    EXPECT_LT(relative_change(r, verify_phi_bound(w, g.refined())), 0.1);
}

TEST(Bounds, ZeroSetRejected) {
    const auto w = make_builtin("whitham");
    const std::vector<PlanePoint> pts{{1.0, 2.0}, {1.0, -1.0}};
    EXPECT_THROW(verify_phi_bound(w, pts), ValidationError);
    const std::vector<PlanePoint> eta0{{1.0, 0.0}};
    EXPECT_THROW(verify_m_bound(w, eta0), ValidationError);
    EXPECT_THROW(verify_phi_bound(make_builtin("fkdv", kOne), pts), ValidationError);
}

TEST(Bounds, SmallDiagonalLimit) {
    // phi(t,t) ~ -6 p2 t^3 as t -> 0 for j* = 1; the model is 2t^3/(2t^2) * 2t^2 = 2t^3.
    const auto s = make_builtin("smooth_fkdv", kOne);
    std::vector<PlanePoint> pts;
    for (double t : {1e-2, 1e-3, 1e-4}) pts.push_back({t, t});
    const auto r = verify_phi_bound(s, pts);
    EXPECT_NEAR(r.c_max, 1.5, 1e-3);
    EXPECT_NEAR(r.c_min, 1.5, 1e-3);
}

TEST(Bounds, BoundReportTies) {
    BoundReport r;
    r.add(1.0, {1.0});
    r.add(1.0, {2.0});
    EXPECT_EQ(r.worst_point(), std::vector<double>{1.0});
    EXPECT_THROW(r.add(std::nan(""), {3.0}), NumericalError);
}

TEST(Bounds, MBoundBessel) {
    const auto b = make_builtin("bessel");
    const PlaneGrid g{1e-2, 1e2, 6, true};
    const auto r = verify_m_bound(b, g);
    EXPECT_TRUE(std::isfinite(r.c_max));
    EXPECT_GT(r.c_max, 0.0);
}

TEST(Commutator, ExactZeros) {
    const auto w = make_builtin("whitham");
    EXPECT_EQ(commutator_N(w, 5.0, 5.0, 5.0), 0.0);
    EXPECT_NEAR(commutator_U(w, 5.0, 5.0, 5.2), 0.0, 1e-15);
    EXPECT_NEAR(commutator_U(w, 5.0, 4.9, 4.9), 0.0, 1e-15);
}

TEST(Commutator, RegionAndScan) {
    const auto w = make_builtin("whitham");
    const std::vector<Triple> bad{{2.0, 1.0, 1.0}};
    EXPECT_THROW(commutator_scan(w, bad), ValidationError);
    const std::vector<Triple> eq{{10.0, 10.0, 10.2}, {10.0, 9.9, 9.9}};
    EXPECT_EQ(commutator_scan(w, eq).skipped, 2);
    const auto samples = CommutatorGrid{10, 4}.samples();
    const auto rep = commutator_scan(w, samples);
    EXPECT_TRUE(std::isfinite(rep.n_bound.c_max));
    EXPECT_TRUE(std::isfinite(rep.u_bound.c_max));
    EXPECT_GT(rep.n_bound.sample_count, 0);
}
