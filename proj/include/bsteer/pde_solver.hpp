#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "bsteer/grid.hpp"
#include "bsteer/sturm_liouville.hpp"

namespace bsteer {

/// Spatial control field held constant over `duration`.
struct ControlStage {
    GridFunction field;
    double duration = 0.0;
    std::string label;
};

/// Piecewise-constant-in-time control: an ordered list of stages on one grid.
class ControlSchedule {
public:
    ControlSchedule() = default;
    explicit ControlSchedule(std::vector<ControlStage> stages);

    void append(ControlStage stage);
    const std::vector<ControlStage>& stages() const noexcept { return stages_; }
    std::size_t size() const noexcept { return stages_.size(); }
    bool empty() const noexcept { return stages_.empty(); }
    double total_duration() const noexcept;

private:
    std::vector<ControlStage> stages_;
};

struct SimulationOptions {
    /// Extra absolute snapshot times; stage boundaries are always recorded.
    std::vector<double> snapshot_times;
    bool snapshot_every_step = false;
    /// Backward-Euler half steps replacing the first step of each stage,
    /// damping the Crank-Nicolson response to the jump in the control.
    bool damped_startup = true;
    double blow_up_norm = 1e12;
    /// Approximate number of diagnostic records per stage.
    std::size_t diagnostics_per_stage = 200;
};

struct StepDiagnostic {
    double time = 0.0;
    double l2_norm = 0.0;
    double min_value = 0.0;
    double max_value = 0.0;
    std::vector<std::size_t> interface_counts;
};

struct Trajectory {
    GridFunction initial;
    std::vector<double> times;  // strictly increasing, starts at 0
    std::vector<GridFunction> snapshots;
    std::vector<std::size_t> snapshot_stage;  // stage index active when recorded
    std::vector<StepDiagnostic> diagnostics;
    std::vector<double> stage_end_times;
    std::vector<std::string> stage_labels;
    std::vector<double> stage_steps;  // time step used per stage

    const GridFunction& final_state() const { return snapshots.back(); }
};

/// Effective step: min(requested, 1e-3, duration/50, 0.1/max|v|).
double stage_time_step(double requested, double duration, double max_abs_field);

/// Crank-Nicolson integration of u_t = Lap u + v u with homogeneous
/// Dirichlet data and the control frozen per stage. Throws blow_up with the
/// stage label when ||u|| exceeds the limit.
Trajectory simulate(const GridFunction& u0, const ControlSchedule& schedule, double dt,
                    const SimulationOptions& options = {});

/// Discrete Laplacian (central differences, zero on the boundary).
GridFunction discrete_laplacian(const GridFunction& u);

struct CoefficientTrace {
    std::vector<double> times;
    std::vector<std::vector<double>> coefficients;  // [snapshot][mode]
};

/// Fourier coefficients <u(t), omega_k> for the first m basis modes.
CoefficientTrace fourier_trace(const Trajectory& trajectory, const SpectralBasisND& basis, std::size_t m);

struct LawCheck {
    /// Max over snapshots of |c_k(t) - c_k(0) e^{(lambda_k + shift) t}| / |prediction|,
    /// per mode; negative for modes skipped because c_k(0) is negligible.
    std::vector<double> relative_deviation;
    double worst = 0.0;
};

/// Exponential law for a stage control equal to the basis potential plus `shift`.
/// Modes with |c_k(0)| <= floor * max_k |c_k(0)| are skipped.
LawCheck check_exponential_law(const CoefficientTrace& trace, const SpectralBasisND& basis, double shift,
                               double floor = 1e-8);

struct AppendixBound {
    double lhs = 0.0;           // time quadrature over the snapshots
    double lhs_identity = 0.0;  // ||u(T) - e^{v0} u0||^2, equal in the semi-discrete model
    double rhs = 0.0;
    bool pass = false;
};

/// Energy bound for the static log control v = v0/T. Needs a trajectory
/// with dense snapshots on [0, T] (snapshot_every_step).
AppendixBound appendix_bound_check(const Trajectory& trajectory, const GridFunction& v0, double T,
                                   double slack = 0.1);

struct TrajectoryInvariants {
    bool nonnegative_data = false;
    double min_ratio = 0.0;  // min u over the run divided by max|u0|
    bool sign_preserved = true;
    bool interfaces_monotone = true;

    bool ok() const noexcept { return sign_preserved && interfaces_monotone; }
};

/// Maximum-principle checks: nonnegative data stays above -tol*max|u0|, and
/// per-axis interface counts never increase.
TrajectoryInvariants check_invariants(const Trajectory& trajectory, double tol = 1e-8);

/// One CSV per snapshot plus index.csv with `time,file,l2_norm,interface_counts`.
void write_snapshots(const std::filesystem::path& dir, const Trajectory& trajectory);

}  // namespace bsteer
