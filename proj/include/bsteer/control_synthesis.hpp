#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bsteer/grid.hpp"
#include "bsteer/pde_solver.hpp"
#include "bsteer/sturm_liouville.hpp"

namespace bsteer {

/// ln(u1/u0) on nodes where both states are above `band` times their
/// maximum and agree in sign; zero elsewhere.
struct LogRatio {
    GridFunction field;
    double violation_fraction = 0.0;  // retained nodes with |u1| > |u0|
    double max_ratio = 0.0;           // max |u1|/|u0| over retained nodes
    std::size_t retained = 0;
};

LogRatio log_ratio(const GridFunction& u0, const GridFunction& u1, double band = 1e-6);

/// Stage v0/T with v0 = ln(u1/u0). Throws assumption_a1 (with the offending
/// node fraction) if |u1| > |u0| anywhere on the retained set.
ControlStage static_log_control(const GridFunction& u0, const GridFunction& u1, double T, double band = 1e-6);

/// Constant field ln(L)/t_star on u0's grid over t_star; requires L >= 1.
ControlStage amplification_stage(const GridFunction& u0, double L, double t_star);

/// v0 - lambda_target + a with a = ln(alpha/c0)/T over T.
/// Throws wrong_sign if c0 <= 0 and degenerate_gap if gap <= gap_tol.
ControlStage spectral_shift_schedule(const GridFunction& v0, double lambda_target, double gap, double c0,
                                     double alpha, double T, double gap_tol = 1e-9);
double spectral_shift_offset(double c0, double alpha, double T);

// ---------------------------------------------------------------------------
// Moment problem on a sign cone.

struct MomentProblemSpec {
    std::shared_ptr<const SpectralBasis1D> basis;
    std::vector<double> points;   // prescribed sign changes x0_1 < ... < x0_{k-1}
    std::size_t target_mode = 1;  // k, 1-based
    double probe = 0.0;           // s
    double half_width = 0.01;     // h
    int first_sign = 1;

    /// Throws invalid_argument unless points are interior, increasing, and
    /// all support intervals are disjoint and inside the axis.
    void validate() const;
};

struct ProfilePiece {
    double lo = 0.0;
    double hi = 0.0;
    double value = 0.0;
};

struct MomentSolution {
    std::vector<double> amplitudes;  // V_1 .. V_{k-1}
    double probe_amplitude = 0.0;    // P
    bool probe_free = false;         // P forced to zero (rank-deficient branch)
    std::vector<ProfilePiece> pieces;
    GridFunction profile;
    std::vector<double> residuals;  // <profile, omega_j>, j < k
    double payoff = 0.0;            // <profile, omega_k>

    double max_residual() const noexcept;
};

/// Null vector of [omega_j(x0_i) | omega_j(s)] by SVD, flipped onto the
/// sign cone, assembled as a piecewise-constant profile and scaled so the
/// exact payoff has magnitude one.
MomentSolution solve_moment_cone(const MomentProblemSpec& spec);

/// Full numerical rank of [omega_j(x0_i)], j, i < k.
bool check_assumption_31(const SpectralBasis1D& basis, std::span<const double> points);

/// The vector (omega_k(x0_i))_i lies outside the span that survives when
/// the matrix of lower modes degenerates to its closest rank-deficient
/// approximation. Coincides with the plain span test whenever the lower
/// matrix is itself rank deficient.
bool check_assumption_32(const SpectralBasis1D& basis, std::span<const double> points, std::size_t k);

/// Length of the component of (omega_k(x0_1), ..., omega_k(x0_{k-1}), omega_k(s))
/// orthogonal to the same vectors built from the lower modes.
double probe_residual(const SpectralBasis1D& basis, std::span<const double> points, std::size_t k, double s);

/// Best of `candidates` equispaced probe points that keep (s, s+h) clear of
/// the other supports. Throws no_valid_probe if every residual is below 1e-10.
double select_probe_point(const SpectralBasis1D& basis, std::span<const double> points, std::size_t k,
                          std::size_t candidates, double half_width = 0.0);

std::string to_text(const MomentSolution& solution);

}  // namespace bsteer
