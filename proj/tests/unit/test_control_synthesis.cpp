#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bsteer/control_synthesis.hpp"
#include "bsteer/error.hpp"
#include "bsteer/pde_solver.hpp"

using namespace bsteer;

namespace {

constexpr double pi = std::numbers::pi;

GridFunction tilted(const Grid1D& ax)
{
    return GridFunction::sample(ax, [](double x) { return 2 * std::sin(2 * pi * x) * (1 + 0.1 * x); }, true);
}

GridFunction sine2(const Grid1D& ax)
{
    return GridFunction::sample(ax, [](double x) { return std::sin(2 * pi * x); }, true);
}

GridFunction run(const GridFunction& u0, const ControlStage& stage, double dt = 1e-4)
{
    ControlSchedule s;
    s.append(stage);
    return simulate(u0, s, dt).final_state();
}

}  // namespace

TEST(LogRatio, SkipsBandAndOppositeSigns)
{
    const Grid1D ax(0, 1, 100);
    const auto r = log_ratio(tilted(ax), sine2(ax));
    EXPECT_EQ(r.violation_fraction, 0.0);
    EXPECT_LT(r.max_ratio, 0.51);
    EXPECT_GT(r.retained, 90u);
    EXPECT_EQ(r.field[0], 0.0);
    EXPECT_EQ(r.field[50], 0.0);
    EXPECT_NEAR(r.field[25], std::log(1.0 / (2 * 1.025)), 1e-12);

    const auto flipped = log_ratio(tilted(ax), sine2(ax).scaled(-1.0));
    EXPECT_EQ(flipped.retained, 0u);
}

TEST(StaticLogControl, RequiresShrinkingMagnitude)
{
    const Grid1D ax(0, 1, 100);
    try {
        static_log_control(sine2(ax), tilted(ax), 0.1);
        FAIL() << "expected assumption_a1";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::assumption_a1);
    }
    EXPECT_THROW(static_log_control(tilted(ax), sine2(ax), 0.0), Error);
}

TEST(StaticLogControl, ErrorShrinksWithTime)
{
    const Grid1D ax(0, 1, 200);
    const auto u0 = tilted(ax), u1 = sine2(ax);
    double prev = 1e9;
    for (double T : {0.2, 0.1, 0.05}) {
        const double err = relative_l2_error(run(u0, static_log_control(u0, u1, T)), u1);
        EXPECT_LT(err, prev);
        prev = err;
    }
}

TEST(StaticLogControl, ShortHorizonFollowsHeatFlowFactor)
{
    // Over short T the stage applies e^{v0} up to the free decay of the target shape.
    const Grid1D ax(0, 1, 200);
    const auto u0 = tilted(ax), u1 = sine2(ax);
    const double T = 1e-3;
    const double err = relative_l2_error(run(u0, static_log_control(u0, u1, T), 1e-5), u1);
    EXPECT_LT(err, 1 - std::exp(-4 * pi * pi * T) + 0.01);
}

TEST(Amplification, MultipliesByL)
{
    const Grid1D ax(0, 1, 100);
    const auto u0 = sine2(ax);
    const double L = 3.7, t = 0.01;
    const auto amplified = run(u0, amplification_stage(u0, L, t));
    const auto free = run(u0, ControlStage{GridFunction::constant(Grid(ax), 0.0), t, "free"});
    // Crank-Nicolson reproduces e^{c dt} per step up to O((c dt)^3).
    EXPECT_NEAR(relative_l2_error(amplified, free.scaled(L)), 0.0, 1e-4);
    EXPECT_THROW(amplification_stage(u0, 0.5, t), Error);
}

TEST(SpectralShift, OffsetAndErrors)
{
    EXPECT_NEAR(spectral_shift_offset(0.25, 1.0, 2.0), std::log(4.0) / 2.0, 1e-15);
    try {
        spectral_shift_offset(-0.1, 1.0, 2.0);
        FAIL() << "expected wrong_sign";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::wrong_sign);
    }
    const Grid1D ax(0, 1, 40);
    const auto v0 = GridFunction::constant(Grid(ax), 1.0);
    try {
        spectral_shift_schedule(v0, -5.0, 0.0, 0.5, 1.0, 1.0);
        FAIL() << "expected degenerate_gap";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::degenerate_gap);
    }
    const auto stage = spectral_shift_schedule(v0, -5.0, 3.0, 0.5, 1.0, 2.0);
    EXPECT_NEAR(stage.field[7], 1.0 + 5.0 + std::log(2.0) / 2.0, 1e-14);
    EXPECT_DOUBLE_EQ(stage.duration, 2.0);
}

TEST(SpectralShift, TargetCoefficientReachesAlpha)
{
    const Grid1D ax(0, 1, 200);
    const auto v = GridFunction::sample(ax, [](double x) { return 30 * std::cos(3 * x); });
    const auto b1 = solve_1d(v, 5);
    const SpectralBasisND basis(std::vector<SpectralBasis1D>{b1}, 5);
    const auto u0 = (basis.mode(0).scaled(0.3) + basis.mode(1).scaled(0.02) + basis.mode(2).scaled(0.1)).with_dirichlet();
    const double c0 = inner_product(u0, basis.mode(1));
    const double alpha = 1.0, T = 0.2;
    const auto stage = spectral_shift_schedule(basis.potential(), basis.eigenvalue(1), basis.eigenvalue(1) - basis.eigenvalue(2),
                                               c0, alpha, T);
    const auto end = run(u0, stage, 1e-4);
    EXPECT_NEAR(inner_product(end, basis.mode(1)), alpha, 1e-3 * alpha);
}
