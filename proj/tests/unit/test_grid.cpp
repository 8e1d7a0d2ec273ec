#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "bsteer/error.hpp"
#include "bsteer/grid.hpp"

using namespace bsteer;

namespace {

Grid square(std::size_t n) { return Grid(Box::unit(2), n); }

}  // namespace

TEST(Grid1D, NodesAndSpacing)
{
    const Grid1D g(-1.0, 3.0, 16);
    EXPECT_EQ(g.size(), 17u);
    EXPECT_DOUBLE_EQ(g.spacing(), 0.25);
    EXPECT_DOUBLE_EQ(g.node(0), -1.0);
    EXPECT_DOUBLE_EQ(g.node(16), 3.0);
    EXPECT_DOUBLE_EQ(g.node(4), 0.0);
}

TEST(Grid1D, RejectsCoarseOrEmptyAxes)
{
    EXPECT_THROW(Grid1D(0.0, 1.0, 4), Error);
    EXPECT_THROW(Grid1D(1.0, 1.0, 16), Error);
}

TEST(Grid, FlattenRoundTripProperty)
{
    const Grid g(std::vector<Grid1D>{Grid1D(0, 1, 10), Grid1D(0, 2, 13), Grid1D(-1, 1, 8)});
    std::mt19937 rng(7);
    std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
    std::vector<std::size_t> idx(3);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t flat = pick(rng);
        g.unflatten(flat, idx);
        EXPECT_EQ(g.flatten(idx), flat);
    }
    EXPECT_EQ(g.stride(0), 1u);
    EXPECT_EQ(g.stride(1), 11u);
}

TEST(Grid, BoundaryDetection)
{
    const Grid g = square(10);
    std::vector<std::size_t> idx{0, 5};
    EXPECT_TRUE(g.on_boundary(g.flatten(idx)));
    idx = {5, 10};
    EXPECT_TRUE(g.on_boundary(g.flatten(idx)));
    idx = {5, 5};
    EXPECT_FALSE(g.on_boundary(g.flatten(idx)));
}

TEST(Quadrature, ExactForLinearAndSecondOrderForSine)
{
    const Grid1D ax(0.0, 1.0, 64);
    const auto lin = GridFunction::sample(ax, [](double x) { return 3.0 * x - 1.0; });
    EXPECT_NEAR(integral(lin), 0.5, 1e-14);

    double prev = 0.0;
    for (std::size_t n : {32u, 64u, 128u}) {
        const auto s = GridFunction::sample(Grid1D(0, 1, n), [](double x) { return std::sin(std::numbers::pi * x); });
        const double err = std::abs(integral(s) - 2.0 / std::numbers::pi);
        if (prev > 0.0) {
            EXPECT_NEAR(prev / err, 4.0, 0.05);
        }
        prev = err;
    }
}

TEST(Quadrature, WeightsSumToLength)
{
    const auto w = trapezoid_weights(Grid1D(2.0, 5.0, 30));
    double sum = 0.0;
    for (double x : w) {
        sum += x;
    }
    EXPECT_NEAR(sum, 3.0, 1e-13);
}

TEST(GridFunction, InnerProductPropertiesOnRandomData)
{
    const Grid g = square(12);
    std::mt19937 rng(11);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a(g.size()), b(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            a[i] = n01(rng);
            b[i] = n01(rng);
        }
        const GridFunction f(g, a), h(g, b);
        EXPECT_NEAR(inner_product(f, h), inner_product(h, f), 1e-14);
        EXPECT_LE(std::abs(inner_product(f, h)), l2_norm(f) * l2_norm(h) * (1 + 1e-14));
        EXPECT_NEAR(l2_norm(normalized(f)), 1.0, 1e-13);
        EXPECT_NEAR(inner_product(f + h, f + h),
                    inner_product(f, f) + 2 * inner_product(f, h) + inner_product(h, h), 1e-10);
    }
}

TEST(GridFunction, DirichletFlagRejectsBoundaryValues)
{
    const Grid1D ax(0, 1, 16);
    EXPECT_THROW(GridFunction(Grid(ax), std::vector<double>(ax.size(), 1.0), true), Error);
    EXPECT_EQ(GridFunction::sample(ax, [](double) { return 1.0; }, true)[0], 0.0);
    const auto f = GridFunction::sample(ax, [](double) { return 1.0; }).with_dirichlet();
    EXPECT_TRUE(f.dirichlet());
    EXPECT_EQ(f[0], 0.0);
    EXPECT_EQ(f[16], 0.0);
    EXPECT_EQ(f[8], 1.0);
}

TEST(GridFunction, NormalizingZeroThrows)
{
    EXPECT_THROW(normalized(GridFunction::constant(square(10), 0.0)), Error);
}

TEST(GridFunction, MismatchedGridsThrow)
{
    const auto a = GridFunction::constant(square(10), 1.0);
    const auto b = GridFunction::constant(square(12), 1.0);
    EXPECT_THROW(inner_product(a, b), Error);
    EXPECT_THROW(a + b, Error);
}

TEST(GridFunction, MultilinearEvaluationIsExactForBilinear)
{
    const Grid g = square(10);
    const auto f = GridFunction::sample(g, [](std::span<const double> x) { return 1 + 2 * x[0] - x[1] + 3 * x[0] * x[1]; });
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 100; ++i) {
        const double p[2] = {u(rng), u(rng)};
        EXPECT_NEAR(f.evaluate(p), 1 + 2 * p[0] - p[1] + 3 * p[0] * p[1], 1e-12);
    }
}

TEST(TensorProduct, IntegralFactorsProperty)
{
    const Grid1D ax(0, 1, 20), ay(0, 2, 24);
    const Grid g(std::vector<Grid1D>{ax, ay});
    std::mt19937 rng(5);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> a(ax.size()), b(ay.size());
        for (auto& x : a) x = n01(rng);
        for (auto& x : b) x = n01(rng);
        std::vector<GridFunction> fs{GridFunction(Grid(ax), a), GridFunction(Grid(ay), b)};
        const auto t = tensor_product(g, fs);
        EXPECT_NEAR(integral(t), integral(fs[0]) * integral(fs[1]), 1e-10);
        EXPECT_NEAR(l2_norm(t), l2_norm(fs[0]) * l2_norm(fs[1]), 1e-10);
    }
}

TEST(TensorProduct, AxisMismatchThrows)
{
    const Grid1D ax(0, 1, 20), ay(0, 1, 24);
    const Grid g(std::vector<Grid1D>{ax, ax});
    std::vector<GridFunction> fs{GridFunction::constant(Grid(ax), 1.0), GridFunction::constant(Grid(ay), 1.0)};
    EXPECT_THROW(tensor_product(g, fs), Error);
}

TEST(LineValues, ExtractsAxisParallelTraces)
{
    const Grid g = square(10);
    const auto f = GridFunction::sample(g, [](std::span<const double> x) { return x[0] + 10 * x[1]; });
    const std::vector<std::size_t> idx{3, 4};
    const auto along_y = line_values(f, 1, g.flatten(idx));
    ASSERT_EQ(along_y.size(), 11u);
    EXPECT_NEAR(along_y[7], 0.3 + 7.0, 1e-12);
}

TEST(Csv, HeaderAndRowCount)
{
    const Grid g = square(10);
    std::ostringstream os;
    write_csv(os, GridFunction::constant(g, 2.5));
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "x1,x2,value");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++rows;
    }
    EXPECT_EQ(rows, g.size());
}
