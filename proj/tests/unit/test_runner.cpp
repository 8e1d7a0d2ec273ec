#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bsteer/config.hpp"
#include "bsteer/error.hpp"
#include "bsteer/runner.hpp"

using namespace bsteer;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in, "test.cfg");
}

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("bsteer_runner_" + name);
    fs::remove_all(dir);
    fs::remove_all(fs::path(dir.string() + ".partial"));
    return dir;
}

std::string read(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* eigensolve_text = R"(mode = eigensolve
cells = 200
modes = 5
max.lambda_1 = -9.8
min.lambda_1 = -9.9
)";

}  // namespace

TEST(Config, ShippedExamplesValidate)
{
    std::size_t count = 0;
    for (const auto& entry : fs::directory_iterator(BSTEER_CONFIG_DIR)) {
        if (entry.path().extension() != ".cfg") continue;
        const auto c = load_config(entry.path());
        const auto d = validate_config(c);
        EXPECT_TRUE(d.empty()) << format_diagnostics(c, d);
        ++count;
    }
    EXPECT_GE(count, 5u);
}

TEST(Config, ParsesSectionsAndAxes)
{
    const auto c = parse(R"(mode = simulate   # comment
dim = 2
u0.x1 = mode 2 tilt 0.1
u0.x2 = zeros 0.4 0.7
u0.scale = 2
[stage]
field = const 1.5
duration = 0.1
[stage]
field = log u1
duration = 0.2
)");
    EXPECT_EQ(c.mode, Mode::simulate);
    ASSERT_EQ(c.u0.axes.size(), 2u);
    EXPECT_EQ(c.u0.axes[0]->mode, 2u);
    EXPECT_DOUBLE_EQ(c.u0.axes[0]->tilt, 0.1);
    EXPECT_EQ(c.u0.axes[1]->zeros, (std::vector<double>{0.4, 0.7}));
    ASSERT_EQ(c.stages.size(), 2u);
    EXPECT_EQ(c.stages[1].field, StageConfig::Field::log_target);
    // log u1 without u1 is a named violation.
    const auto d = validate_config(c);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_NE(d[0].message.find("needs u1"), std::string::npos);
    EXPECT_EQ(d[0].line, 9);
}

TEST(Config, UnknownModeIsNamed)
{
    try {
        parse("mode = optimize\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::config);
        EXPECT_NE(std::string(e.what()).find("test.cfg:1: unknown mode 'optimize'"), std::string::npos);
    }
}

TEST(Config, SyntaxErrorsCarryLineNumbers)
{
    for (const auto* text : {"mode = steer\ncells = many\n", "mode = steer\nbogus = 1\n", "mode = steer\n[stages]\n",
                             "mode = steer\ncells\n", "mode = steer\nmode = steer\n"}) {
        try {
            parse(text);
            FAIL() << text;
        } catch (const Error& e) {
            EXPECT_NE(std::string(e.what()).find("test.cfg:2:"), std::string::npos) << e.what();
        }
    }
    EXPECT_THROW(parse("cells = 20\n"), Error);
}

TEST(Config, ZeroOutsideBoxIsNamed)
{
    const auto c = parse("mode = steer\nu0.x1 = zeros 0.3\nu1.x1 = zeros 1.4\n");
    const auto d = validate_config(c);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_EQ(d[0].line, 3);
    EXPECT_NE(d[0].message.find("u1.x1: zero 1.4 lies outside"), std::string::npos);
    EXPECT_EQ(format_diagnostics(parse(eigensolve_text), {}), "ok\n");
}

TEST(Config, ResolutionAndSweepChecks)
{
    EXPECT_FALSE(validate_config(parse("mode = eigensolve\ncells = 12\nmodes = 2\n")).empty());
    const auto c = parse(R"(mode = sweep
u0.x1 = zeros 0.3
u1.x1 = zeros 0.6
sweep.presteer_times = 1e-3 5e-4
sweep.spectral_times = 4 2
)");
    EXPECT_FALSE(validate_config(c).empty());
}

TEST(MakeState, FactorsAndScale)
{
    const auto c = parse("mode = steer\ndim = 2\ncells = 20\nu0.x1 = linear 0.5\nu0.x2 = mode 1\nu0.scale = 3\n");
    const auto g = make_grid(c);
    const auto u = make_state(g, c.u0);
    const std::vector<std::size_t> idx{5, 10};
    EXPECT_NEAR(u[g.flatten(idx)], 3 * 0.25 * 1.0, 1e-12);
    const std::vector<std::size_t> idx2{15, 10};
    EXPECT_NEAR(u[g.flatten(idx2)], -3 * 0.25, 1e-12);
}

TEST(Run, EigensolveSummaryAndArtifacts)
{
    auto c = parse(eigensolve_text);
    const auto out = scratch("eigen");
    const auto r = run_experiment(c, RunOptions{out, 1});
    EXPECT_TRUE(r.ok());
    const auto summary = read(out / "summary.txt");
    EXPECT_NE(summary.find("lambda_1 = -9.8694"), std::string::npos);
    EXPECT_NE(summary.find("pass"), std::string::npos);
    for (int j = 1; j <= 5; ++j) {
        EXPECT_NE(summary.find("zeros_" + std::to_string(j) + " = " + std::to_string(j - 1)), std::string::npos);
    }
    EXPECT_TRUE(fs::exists(out / "basis.csv"));
    EXPECT_TRUE(fs::exists(out / "mode_05.csv"));
    EXPECT_FALSE(fs::exists(fs::path(out.string() + ".partial")));
    fs::remove_all(out);
}

TEST(Run, FailedAssertionIsReported)
{
    auto c = parse("mode = eigensolve\ncells = 64\nmodes = 3\nmax.lambda_1 = -20\nrequire.nothing = true\n");
    const auto out = scratch("fail");
    const auto r = run_experiment(c, RunOptions{out, 1});
    EXPECT_FALSE(r.ok());
    ASSERT_EQ(r.failures.size(), 2u);
    EXPECT_EQ(r.failures[0].rfind("fail lambda_1 = ", 0), 0u);
    EXPECT_EQ(r.failures[1], "missing nothing");
    EXPECT_NE(read(out / "summary.txt").find(" fail\n"), std::string::npos);
    fs::remove_all(out);
}

TEST(Run, DeterministicSummary)
{
    auto c = parse("mode = moment\ncells = 200\npoints = 0.5\nhalf_width = 0.01\n");
    const auto a = run_experiment(c, RunOptions{scratch("det_a"), 1});
    const auto b = run_experiment(c, RunOptions{scratch("det_b"), 1});
    EXPECT_EQ(format_summary(a.summary), format_summary(b.summary));
    fs::remove_all(a.out_dir);
    fs::remove_all(b.out_dir);
}

TEST(Run, InvalidConfigLeavesNoArtifacts)
{
    auto c = parse("mode = steer\nu0.x1 = zeros 0.3\n");
    const auto out = scratch("invalid");
    EXPECT_THROW(run_experiment(c, RunOptions{out, 1}), Error);
    EXPECT_FALSE(fs::exists(out));
    EXPECT_FALSE(fs::exists(fs::path(out.string() + ".partial")));
}

TEST(Run, RuntimeFailureLeavesNoArtifacts)
{
    // Interface counts differ: rejected while planning, after staging began.
    auto c = parse("mode = steer\nu0.x1 = zeros 0.3\nu1.x1 = zeros 0.3 0.6\n");
    const auto out = scratch("runtime");
    EXPECT_THROW(run_experiment(c, RunOptions{out, 1}), Error);
    EXPECT_FALSE(fs::exists(out));
    EXPECT_FALSE(fs::exists(fs::path(out.string() + ".partial")));
}

TEST(Run, RefusesForeignOutputDirectory)
{
    const auto out = scratch("foreign");
    fs::create_directories(out);
    std::ofstream(out / "keep.txt") << "data";
    EXPECT_THROW(run_experiment(parse(eigensolve_text), RunOptions{out, 1}), Error);
    EXPECT_TRUE(fs::exists(out / "keep.txt"));
    fs::remove_all(out);
}

TEST(Run, SimulateReportsEnergyBound)
{
    const auto out = scratch("simulate");
    const auto r = run_experiment(load_config(fs::path(BSTEER_CONFIG_DIR) / "simulate_log.cfg"), RunOptions{out, 1});
    EXPECT_TRUE(r.ok());
    EXPECT_TRUE(fs::exists(out / "snapshots" / "index.csv"));
    EXPECT_NE(read(out / "summary.txt").find("appendix_pass = true pass"), std::string::npos);
    fs::remove_all(out);
}

TEST(Run, SteerWritesStagesAndSummary)
{
    const auto out = scratch("steer");
    const auto r = run_experiment(load_config(fs::path(BSTEER_CONFIG_DIR) / "steer_1d.cfg"), RunOptions{out, 1});
    EXPECT_TRUE(r.ok()) << format_summary(r.summary);
    EXPECT_TRUE(fs::exists(out / "plan.txt"));
    EXPECT_TRUE(fs::exists(out / "report.txt"));
    EXPECT_TRUE(fs::exists(out / "stage_01_presteer.csv"));
    EXPECT_TRUE(fs::exists(out / "final_state.csv"));
    fs::remove_all(out);
}
