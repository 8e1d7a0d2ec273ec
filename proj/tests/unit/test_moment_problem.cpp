#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bsteer/control_synthesis.hpp"
#include "bsteer/error.hpp"
#include "bsteer/nodal_profile.hpp"

using namespace bsteer;

namespace {

constexpr double pi = std::numbers::pi;

std::shared_ptr<const SpectralBasis1D> free_basis(std::size_t cells = 400, std::size_t m = 6)
{
    const Grid1D ax(0, 1, cells);
    return std::make_shared<const SpectralBasis1D>(solve_1d(GridFunction::constant(Grid(ax), 0.0), m));
}

// Moments of a piecewise-constant profile against sqrt(2) sin(j pi x), in closed form.
double sine_moment(const std::vector<ProfilePiece>& pieces, std::size_t j)
{
    const double k = static_cast<double>(j) * pi;
    double sum = 0.0;
    for (const auto& p : pieces) {
        sum += p.value * std::sqrt(2.0) / k * (std::cos(k * p.lo) - std::cos(k * p.hi));
    }
    return sum;
}

MomentProblemSpec spec_for(std::shared_ptr<const SpectralBasis1D> basis, std::vector<double> points, double probe,
                           double h)
{
    MomentProblemSpec s;
    s.basis = std::move(basis);
    s.points = std::move(points);
    s.target_mode = s.points.size() + 1;
    s.probe = probe;
    s.half_width = h;
    return s;
}

}  // namespace

TEST(MomentCone, ResidualHalvesWithTheSupportWidth)
{
    const auto basis = free_basis();
    std::vector<double> rho;
    for (double h : {0.02, 0.01, 0.005}) {
        const auto sol = solve_moment_cone(spec_for(basis, {0.5}, 0.25, h));
        EXPECT_NEAR(std::abs(sol.payoff), 1.0, 1e-12);
        // Independent check with the continuous sines.
        EXPECT_NEAR(sine_moment(sol.pieces, 2), sol.payoff, 1e-3);
        EXPECT_NEAR(sine_moment(sol.pieces, 1), sol.residuals[0], 1e-3 * std::abs(sol.pieces[0].value) * h + 1e-4);
        rho.push_back(std::abs(sol.residuals[0]));
    }
    for (std::size_t i = 1; i < rho.size(); ++i) {
        EXPECT_GE(rho[i] / rho[i - 1], 0.4);
        EXPECT_LE(rho[i] / rho[i - 1], 0.6);
    }
}

TEST(MomentCone, NullVectorSatisfiesPointConditions)
{
    const auto basis = free_basis();
    const auto sol = solve_moment_cone(spec_for(basis, {0.3, 0.7}, 0.5, 0.01));
    ASSERT_EQ(sol.amplitudes.size(), 2u);
    // sum_i V_i omega_j(x_i) + P omega_j(s) = 0 for the lower modes.
    for (std::size_t j = 0; j < 2; ++j) {
        const double r = sol.amplitudes[0] * basis->mode_at(j, 0.3) + sol.amplitudes[1] * basis->mode_at(j, 0.7) +
                         sol.probe_amplitude * basis->mode_at(j, 0.5);
        EXPECT_NEAR(r, 0.0, 1e-10 * (std::abs(sol.amplitudes[0]) + std::abs(sol.probe_amplitude)));
    }
    EXPECT_NEAR(std::abs(sol.payoff), 1.0, 1e-12);
    EXPECT_LT(sol.max_residual(), 0.2);
}

TEST(MomentCone, RandomLayoutsProperty)
{
    const auto basis = free_basis(400, 8);
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> u(0.1, 0.9);
    int solved = 0;
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> pts{u(rng), u(rng)};
        std::sort(pts.begin(), pts.end());
        if (pts[1] - pts[0] < 0.1) continue;
        if (!check_assumption_31(*basis, pts)) continue;
        const double s = select_probe_point(*basis, pts, 3, 64, 0.01);
        const auto sol = solve_moment_cone(spec_for(basis, pts, s, 0.01));
        EXPECT_NEAR(std::abs(sol.payoff), 1.0, 1e-12);
        EXPECT_LT(sol.max_residual(), 0.1);
        for (const auto& p : sol.pieces) {
            EXPECT_NEAR(p.hi - p.lo, 0.01, 1e-15);
        }
        ++solved;
    }
    EXPECT_GT(solved, 5);
}

TEST(MomentCone, InvalidSpecs)
{
    const auto basis = free_basis();
    EXPECT_THROW(solve_moment_cone(spec_for(basis, {0.5}, 0.495, 0.01)), Error);  // overlapping supports
    EXPECT_THROW(solve_moment_cone(spec_for(basis, {1.2}, 0.25, 0.01)), Error);   // outside
    EXPECT_THROW(solve_moment_cone(spec_for(basis, {0.6, 0.4}, 0.2, 0.01)), Error);
}

TEST(Assumptions, FreeOperatorSingleChangeAlwaysHasFullRank)
{
    const auto basis = free_basis();
    for (double x : {0.1, 0.3, 0.5, 0.77}) {
        const std::vector<double> p{x};
        EXPECT_TRUE(check_assumption_31(*basis, p));
    }
}

TEST(Assumptions, WorkedExampleForTwoChangePoints)
{
    const Grid1D ax(0, 1, 400);
    const std::vector<double> target{0.35, 0.65};
    const auto v = potential_from_target(nodal_profile(ax, target));
    const SpectralBasis1D basis = solve_1d(v, 6);
    const double z12 = basis.mode_zeros(1).at(0);
    const auto z13 = basis.mode_zeros(2);

    const std::vector<double> straddle{z12 - 0.15, z12 + 0.15};
    EXPECT_TRUE(check_assumption_31(basis, straddle));

    const std::vector<double> left{z13.at(0) - 0.05, std::min(z12 - 0.02, z13.at(0) + 0.05)};
    ASSERT_LT(left[1], z12);
    EXPECT_TRUE(check_assumption_32(basis, left, 3));
}

TEST(ProbeSelection, PicksAValidPoint)
{
    const auto basis = free_basis();
    const std::vector<double> pts{0.5};
    const double s = select_probe_point(*basis, pts, 2, 32, 0.01);
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s + 0.01, 1.0);
    EXPECT_TRUE(s + 0.01 <= 0.49 || s >= 0.5 + 0.01);
    EXPECT_GT(probe_residual(*basis, pts, 2, s), 1e-10);
}

TEST(MomentText, ListsPieces)
{
    const auto basis = free_basis();
    const auto text = to_text(solve_moment_cone(spec_for(basis, {0.5}, 0.25, 0.01)));
    EXPECT_NE(text.find("P = "), std::string::npos);
    EXPECT_NE(text.find("piece = "), std::string::npos);
}
