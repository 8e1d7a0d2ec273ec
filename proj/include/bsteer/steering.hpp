#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bsteer/control_synthesis.hpp"
#include "bsteer/grid.hpp"
#include "bsteer/pde_solver.hpp"
#include "bsteer/sign_pattern.hpp"
#include "bsteer/sturm_liouville.hpp"

namespace bsteer {

struct SteeringParams {
    double alpha = 1.0;               // amplitude reached by the spectral stage
    double half_width = 0.05;         // moment-problem support width h
    double background = 0.05;         // floor of the pre-steering multiplier, relative to bump mass
    double peak_ratio = 0.9;          // max of the pre-steering multiplier (keeps |u*| < |u0|)
    double profile_halfwidth = 3.0;   // linear window half-width around target zeros, in cells
    double potential_band = 3.0;      // zero band of the potential, in cells
    double slope_weight = 1.0;        // concave share of each target-profile lobe
    std::size_t modes_per_axis = 6;
    std::size_t probe_candidates = 64;
    double presteer_time = 1e-3;      // T_*
    double spectral_time = 4.0;       // T_i
    double final_time = 1e-4;         // magnitude-adjustment time
    double amplification_fraction = 0.25;  // amplification time over the following stage time
    double amplification_margin = 1.05;
    double dt = 1e-3;
    double log_band = 1e-6;
    double shooting_tol = 1e-12;
    std::size_t shooting_iterations = 25;
    double envelope = 1e-3;           // coupling bound on the propagated forbidden part
};

enum class StageKind { amplification, presteer, spectral, magnitude };
std::string_view to_string(StageKind kind) noexcept;

struct StageSpec {
    StageKind kind;
    std::string label;
    double duration = 0.0;
};

struct AxisPlan {
    std::vector<double> source_changes;
    std::vector<double> target_changes;
    GridFunction profile;    // w_i
    GridFunction potential;  // v_i
    std::shared_ptr<const SpectralBasis1D> basis;
    std::optional<MomentProblemSpec> moment_spec;
    std::optional<MomentSolution> moment;
    bool assumption_31 = true;
    bool assumption_32 = true;
};

/// Immutable steering recipe. Stage controls that depend on measured states
/// (the spectral offset and the magnitude log control) are synthesized when
/// the plan is executed; the plan stores their recipes and durations.
struct SteeringPlan {
    GridFunction u0;
    GridFunction u1;
    SignPattern source_pattern;
    SignPattern target_pattern;
    bool direct = false;  // patterns already agree: single log-control stage
    std::vector<AxisPlan> axes;
    std::shared_ptr<const SpectralBasisND> basis;
    TargetMode target;
    SteeringParams params;
    std::vector<StageSpec> stages;

    double pattern_tolerance() const { return 2.0 * u0.grid().max_spacing(); }
};

/// Analyzes both patterns, builds per-axis target profiles and potentials,
/// the tensor basis, the target mode and the moment problems.
/// Throws pattern_mismatch if the interface counts or first-cell signs
/// differ, assumption_failure naming the axis if neither the rank nor the
/// span condition holds at u0's change points.
SteeringPlan build_plan(const GridFunction& u0, const GridFunction& u1, const SteeringParams& params = {});

struct StageTimes {
    double presteer = 0.0;
    double spectral = 0.0;
    double final = 0.0;
    double envelope = 0.0;
};

struct StageRecord {
    StageKind kind;
    std::string label;
    double start = 0.0;
    double duration = 0.0;
    double time_step = 0.0;
    GridFunction end_state;
    double target_distance = 0.0;      // relative L2 distance to the stage target
    std::vector<double> coefficients;  // leading basis coefficients at the end
    TrajectoryInvariants invariants;
};

struct SteeringReport {
    StageTimes times;
    std::vector<StageRecord> stages;
    ControlSchedule schedule;
    GridFunction final_state;
    double final_error = 0.0;  // ||u(T) - u1|| / ||u1||
    std::optional<SignPattern> final_pattern;
    std::string final_pattern_error;
    bool pattern_matches = false;
    bool invariants_ok = true;

    // Spectral-route diagnostics; zero for direct plans.
    double target_coefficient = 0.0;   // c0 at the end of pre-steering
    double forbidden_norm = 0.0;       // norm of the coefficients above the target mode
    double remainder_norm = 0.0;       // ||u(T_*) - u*||
    double shift = 0.0;                // a
    double coupling_value = 0.0;       // (k*-1) e^{(lambda_1 - lambda_k* + a) T_i} * forbidden_norm
    std::size_t shooting_iterations = 0;
    double shooting_residual = 0.0;    // forbidden_norm / |c0|
};

SteeringReport execute_plan(const SteeringPlan& plan);
/// Runs the plan with overridden stage times. Throws coupling_infeasible if
/// the propagated forbidden part exceeds `times.envelope`.
SteeringReport execute_plan(const SteeringPlan& plan, const StageTimes& times);

struct SweepSpec {
    std::vector<double> presteer_times;  // non-increasing
    std::vector<double> spectral_times;  // increasing
    std::vector<double> final_times;     // non-increasing; one entry is broadcast
    double envelope = 1e-3;
    double envelope_decay = 0.5;         // envelope_i = envelope * decay^i
    std::size_t max_refinements = 4;     // halvings of T_* allowed per index
    unsigned threads = 1;
};

struct SweepPoint {
    std::size_t index = 0;
    StageTimes times;
    std::size_t refinements = 0;
    SteeringReport report;
};

/// One report per index, indices run concurrently. On a coupling failure
/// the index retries with T_* halved.
std::vector<SweepPoint> sweep(const SteeringPlan& plan, const SweepSpec& spec);

std::string to_text(const SteeringPlan& plan);
std::string to_text(const SteeringReport& report);

}  // namespace bsteer
