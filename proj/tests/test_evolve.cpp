#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "whitham/evolve.hpp"

using namespace whitham;

namespace {

const std::array<double, 1> kOne{1.0};

Field profile(const Grid& g, double eps) {
    return dealias(synthesize_function(g, [eps](double x) { return eps * (std::cos(x) + 0.5 * std::sin(2.0 * x)); }));
}

Field run(const SymbolSpec& sym, Field u, double dt, double t_end) {
    const Stepper st(sym, u.grid(), dt);
    const auto steps = std::lround(t_end / dt);
    for (long i = 0; i < steps; ++i) u = st.step(u);
    return u;
}

double l2_diff(const Field& a, const Field& b) { return sobolev_norm(a - b, 0.0); }

}  // namespace

TEST(Step, LinearFlowIsExact) {
    const auto f = make_builtin("fkdv", kOne);
    const Grid g(32, 1.0);
    Field u = synthesize_function(g, [](double x) { return std::cos(x); });
    const double dt = 0.01;
    for (int i = 0; i < 1000; ++i) u = step(f, u, dt, true, false);
    const auto v = sample(u);
    for (int j = 0; j < g.n_points(); ++j) EXPECT_NEAR(v[j], std::cos(g.x(j) + 10.0), 1e-12);
}

TEST(Step, ZeroStaysZero) {
    const auto w = make_builtin("whitham");
    const Grid g(32, 1.0);
    const Field u = step(w, Field(g), 0.1);
    EXPECT_EQ(u.band_limit(), 0);
}

TEST(Step, AdvectiveGuard) {
    const auto w = make_builtin("whitham");
    const Grid g(64, 1.0);
    const Field u = profile(g, 1.0);
    EXPECT_THROW(step(w, u, 1.0), ValidationError);
    EXPECT_THROW(step(w, u, -0.1), ValidationError);
    EXPECT_NO_THROW(step(w, u, 0.9 * advective_dt_limit(u)));
}

TEST(Step, FourthOrder) {
    const auto w = make_builtin("whitham");
    const Grid g(64, 1.0);
    const Field u0 = profile(g, 0.3);
    const double dt = 0.02;
    const Field ref = run(w, u0, dt / 8.0, 1.0);
    const double e1 = l2_diff(run(w, u0, dt, 1.0), ref);
    const double e2 = l2_diff(run(w, u0, dt / 2.0, 1.0), ref);
    const double order = std::log2(e1 / e2);
    EXPECT_GE(order, 3.7);
    EXPECT_LE(order, 4.3);
}

TEST(Step, MeanAndRealityPreserved) {
    const auto w = make_builtin("whitham");
    const Grid g(64, 1.0);
    const Field u = run(w, profile(g, 0.2), 0.01, 0.5);
    EXPECT_EQ(u.coeff(0), cplx(0.0, 0.0));
    for (int k = 1; k < 32; ++k) EXPECT_EQ(u.coeff(-k), std::conj(u.coeff(k)));
}

TEST(Step, TimeReversal) {
    const auto w = make_builtin("whitham");
    const Grid g(64, 1.0);
    const Field u0 = profile(g, 0.2);
    const Field ut = run(w, u0, 0.01, 1.0);
    const Field back = run(w, reflect(ut), 0.01, 1.0);
    EXPECT_LE(l2_diff(back, reflect(u0)), 1e-10 * sobolev_norm(u0, 0.0));
}

TEST(Step, SpectralAccuracy) {
    const auto w = make_builtin("whitham");
    const Grid g1(64, 1.0), g2(128, 1.0);
    const Field a = run(w, profile(g1, 0.1), 0.01, 1.0);
    const Field b = run(w, profile(g2, 0.1), 0.01, 1.0);
    double diff = 0.0;
    for (int k = -21; k <= 21; ++k) diff = std::max(diff, std::abs(a.coeff(k) - b.coeff(k)));
    for (int k = 22; k < 64; ++k) diff = std::max(diff, std::abs(b.coeff(k)));
    EXPECT_LT(diff, 1e-9);
}

TEST(Evolve, ZeroEndTime) {
    const auto w = make_builtin("whitham");
    const Grid g(64, 1.0);
    SolverConfig cfg;
    cfg.t_end = 0.0;
    const auto tr = evolve(w, profile(g, 0.1), cfg, 3);
    ASSERT_EQ(tr.checkpoints.size(), 1u);
    EXPECT_EQ(tr.checkpoints[0].time, 0.0);
    EXPECT_FALSE(tr.breakdown);
}

TEST(Evolve, SmallDataConservesL2) {
    const auto w = make_builtin("whitham");
    const Grid g(256, 1.0);
    SolverConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 20.0;
    cfg.checkpoint_every = 5000;
    const Field u0 = synthesize_function(g, [](double x) { return 0.05 * std::cos(x); });
    const auto tr = evolve(w, u0, cfg, 3);
    EXPECT_FALSE(tr.breakdown);
    ASSERT_EQ(tr.checkpoints.size(), 5u);
    const double l0 = tr.checkpoints.front().l2;
    for (const auto& c : tr.checkpoints) EXPECT_LE(std::abs(c.l2 - l0), 1e-8 * l0);
    for (std::size_t i = 1; i < tr.checkpoints.size(); ++i) EXPECT_GT(tr.checkpoints[i].time, tr.checkpoints[i - 1].time);
    EXPECT_DOUBLE_EQ(tr.checkpoints.back().time, 20.0);
    EXPECT_EQ(tr.steps, 20000);
}

TEST(Evolve, LargeDataBreaks) {
    const auto w = make_builtin("whitham");
    const Grid g(512, 1.0);
    SolverConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 10.0;
    const Field u0 = synthesize_function(g, [](double x) { return 0.5 * std::cos(x); });
    const auto tr = evolve(w, u0, cfg, 3);
    ASSERT_TRUE(tr.breakdown);
    EXPECT_EQ(tr.breakdown->reason, BreakdownReason::gradient);
    EXPECT_GT(tr.breakdown->time, 1.0);
    EXPECT_LT(tr.breakdown->time, 3.0);
    EXPECT_DOUBLE_EQ(tr.checkpoints.back().time, tr.breakdown->time);
}

TEST(Evolve, UnderResolvedReportsTail) {
    const auto w = make_builtin("whitham");
    const Grid g(128, 1.0);
    SolverConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 10.0;
    const Field u0 = synthesize_function(g, [](double x) { return 0.5 * std::cos(x); });
    const auto tr = evolve(w, u0, cfg, 3);
    ASSERT_TRUE(tr.breakdown);
    EXPECT_EQ(tr.breakdown->reason, BreakdownReason::tail);
}

TEST(Evolve, PartialLastStep) {
    const auto w = make_builtin("whitham");
    const Grid g(64, 1.0);
    SolverConfig cfg;
    cfg.dt = 0.03;
    cfg.t_end = 0.1;
    cfg.checkpoint_every = 2;
    const auto tr = evolve(w, profile(g, 0.1), cfg, 3);
    EXPECT_EQ(tr.steps, 4);
    EXPECT_DOUBLE_EQ(tr.checkpoints.back().time, 0.1);
    EXPECT_EQ(tr.checkpoints.size(), 3u);
}

TEST(Evolve, ObserverSeesEveryStep) {
    const auto w = make_builtin("whitham");
    const Grid g(64, 1.0);
    SolverConfig cfg;
    cfg.dt = 0.01;
    cfg.t_end = 0.1;
    int calls = 0;
    evolve(w, profile(g, 0.1), cfg, 3, [&](std::int64_t, double, const Field&) { ++calls; });
    EXPECT_EQ(calls, 11);
}

TEST(Evolve, ConfigErrors) {
    const auto w = make_builtin("whitham");
    const Grid g(64, 1.0);
    const Field u = profile(g, 0.1);
    SolverConfig cfg;
    cfg.dt = 0.0;
    EXPECT_THROW(evolve(w, u, cfg, 3), ValidationError);
    cfg = {};
    cfg.checkpoint_every = 0;
    EXPECT_THROW(evolve(w, u, cfg, 3), ValidationError);
    cfg = {};
    EXPECT_THROW(evolve(w, u, cfg, 2), ValidationError);
    cfg.dt = 10.0;
    EXPECT_THROW(evolve(w, u, cfg, 3), ValidationError);
}

TEST(Evolve, NonfiniteInitialState) {
    const auto w = make_builtin("whitham");
    const Grid g(64, 1.0);
    Field u = profile(g, 0.1);
    u.coeff(3) = std::nan("");
    EXPECT_THROW(evolve(w, u, SolverConfig{}, 3), ValidationError);
}
