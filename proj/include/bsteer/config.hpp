#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bsteer/grid.hpp"
#include "bsteer/steering.hpp"

namespace bsteer {

enum class Mode { eigensolve, simulate, moment, steer, sweep };
std::string_view to_string(Mode mode) noexcept;

/// One factor of a separable state: `mode m [tilt c]` for
/// sin(m pi t)(1 + c x), `zeros z...` for the smooth nodal profile, or
/// `linear z...` for alternating tents through the listed zeros.
struct FactorSpec {
    enum class Kind { mode, zeros, linear };
    Kind kind = Kind::mode;
    std::size_t mode = 1;
    double tilt = 0.0;
    std::vector<double> zeros;
    int line = 0;
};

struct StateSpec {
    std::vector<std::optional<FactorSpec>> axes;
    double scale = 1.0;
    bool present() const;
};

/// Per-axis potential: `const c`, or `target z...` for the potential whose
/// second mode vanishes at the listed points.
struct PotentialSpec {
    enum class Kind { constant, target };
    Kind kind = Kind::constant;
    double value = 0.0;
    std::vector<double> zeros;
    int line = 0;
};

/// `[stage]` section of a simulation.
struct StageConfig {
    enum class Field { constant, log_target, potential };
    Field field = Field::constant;
    double value = 0.0;  // constant value, or shift added to the potential
    double duration = 0.0;
    int line = 0;
};

struct Assertion {
    enum class Kind { max, min, require };
    Kind kind = Kind::max;
    std::string key;
    double bound = 0.0;
    bool expected = true;
    int line = 0;
};

struct ExperimentConfig {
    std::filesystem::path source;
    Mode mode = Mode::steer;
    int mode_line = 0;
    std::size_t dim = 1;
    std::size_t cells = 200;
    int cells_line = 0;
    std::vector<Interval> box;

    StateSpec u0;
    StateSpec u1;
    std::vector<std::optional<PotentialSpec>> potential;

    // eigensolve
    std::size_t modes = 5;

    // simulate
    double dt = 1e-3;
    std::vector<double> snapshot_times;
    std::vector<StageConfig> stages;

    // moment
    std::vector<double> points;
    int points_line = 0;
    std::size_t target_mode = 0;  // 0 selects points + 1
    std::optional<double> probe;
    double half_width = 0.01;
    std::size_t probe_candidates = 64;

    SteeringParams steering;
    SweepSpec sweep;

    std::vector<Assertion> assertions;
    std::filesystem::path out_dir = "out";
};

struct Diagnostic {
    int line = 0;
    std::string message;
};

/// Parses `key = value` lines with `#` comments and repeated `[stage]`
/// sections. Throws Error(config) naming the line on syntax errors or
/// unknown keys.
ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& source = "<input>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Semantic checks without running anything. Empty when the config is valid.
std::vector<Diagnostic> validate_config(const ExperimentConfig& config);
std::string format_diagnostics(const ExperimentConfig& config, const std::vector<Diagnostic>& diagnostics);

Grid make_grid(const ExperimentConfig& config);
/// Builds the separable state; missing axes default to `mode 1`.
GridFunction make_state(const Grid& grid, const StateSpec& spec);
/// 1-D potential on `axis`; missing specs give zero.
GridFunction make_potential(const Grid1D& axis, const std::optional<PotentialSpec>& spec);

}  // namespace bsteer
