#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "bsteer/grid.hpp"
#include "bsteer/sign_pattern.hpp"

namespace bsteer {

/// Leading Dirichlet eigenpairs of w'' + v w = lambda w on one axis.
///
/// Eigenvalues are strictly decreasing. Mode j (0-based) is L2-normalized,
/// has exactly j interior sign changes, and is positive just right of the
/// left endpoint.
class SpectralBasis1D {
public:
    SpectralBasis1D(GridFunction potential, std::vector<double> eigenvalues, std::vector<GridFunction> modes);

    const GridFunction& potential() const noexcept { return potential_; }
    const Grid1D& axis() const { return potential_.grid().axis(0); }
    std::size_t size() const noexcept { return eigenvalues_.size(); }
    const std::vector<double>& eigenvalues() const noexcept { return eigenvalues_; }
    double eigenvalue(std::size_t j) const { return eigenvalues_.at(j); }
    const GridFunction& mode(std::size_t j) const { return modes_.at(j); }

    /// Piecewise-linear interpolant of mode j.
    double mode_at(std::size_t j, double x) const { return modes_.at(j).evaluate(x); }
    /// Exact integral of the piecewise-linear interpolant of mode j over [lo, hi].
    double mode_integral(std::size_t j, double lo, double hi) const;
    std::vector<double> mode_zeros(std::size_t j) const;

private:
    GridFunction potential_;
    std::vector<double> eigenvalues_;
    std::vector<GridFunction> modes_;
};

/// Leading m eigenpairs of the second-difference operator plus diag(v).
/// Requires m <= N/4. Throws oscillation_violation if mode j does not have
/// exactly j interior sign changes.
SpectralBasis1D solve_1d(const GridFunction& v, std::size_t m);

/// Potential v = -w''/w by central differences, set to zero within
/// distance `band` of every zero of w (interior zeros and vanishing ends).
/// `band` defaults to three cells. Throws unbounded_potential if |v| > cap.
GridFunction potential_from_target(const GridFunction& w, std::optional<double> band = std::nullopt,
                                   double cap = 1e6);

/// Zeros of a 1-D sample: nodes with |w| <= 1e-12 max|w| and sign flips
/// located by linear interpolation.
std::vector<double> sample_zeros(const GridFunction& w);

struct TensorMode {
    std::vector<std::size_t> index;  // 1-based mode number per axis
    double eigenvalue = 0.0;
};

/// Tensor-product eigenpairs of a box, sorted by non-increasing eigenvalue.
class SpectralBasisND {
public:
    SpectralBasisND(std::vector<SpectralBasis1D> axes, std::size_t m);

    const Grid& grid() const noexcept { return grid_; }
    std::size_t dim() const noexcept { return axes_.size(); }
    std::size_t size() const noexcept { return modes_.size(); }
    const SpectralBasis1D& axis(std::size_t i) const { return axes_.at(i); }
    const TensorMode& info(std::size_t l) const { return info_.at(l); }
    double eigenvalue(std::size_t l) const { return info_.at(l).eigenvalue; }
    const GridFunction& mode(std::size_t l) const { return modes_.at(l); }
    /// Position of the mode with the given 1-based multi-index, if assembled.
    std::optional<std::size_t> find(std::span<const std::size_t> index) const;
    /// Sum over axes of the 1-D potentials.
    const GridFunction& potential() const noexcept { return potential_; }

private:
    std::vector<SpectralBasis1D> axes_;
    Grid grid_;
    std::vector<TensorMode> info_;
    std::vector<GridFunction> modes_;
    GridFunction potential_;
};

/// The m largest combined eigenvalues. Near-ties (relative 1e-10) are
/// ordered lexicographically by multi-index.
SpectralBasisND assemble_nd(std::vector<SpectralBasis1D> bases, std::size_t m);

struct TargetMode {
    std::size_t position = 0;  // 0-based position in the sorted basis
    double eigenvalue = 0.0;
    double gap = 0.0;          // eigenvalue minus the next one down
};

/// Mode built from the (count+1)-th 1-D mode on every axis.
/// Throws degenerate_target if the next mode down shares its eigenvalue
/// within `tol` (relative), invalid_argument if it is not among the
/// assembled modes or is the last one (gap unknown). Ties with modes sorted
/// above the target are allowed: those modes are forbidden ones.
TargetMode locate_target_mode(const SpectralBasisND& basis, std::span<const std::size_t> axis_counts,
                              double tol = 1e-9);
TargetMode locate_target_mode(const SpectralBasisND& basis, const SignPattern& pattern, double tol = 1e-9);

/// CSV with columns index,lambda,zero_count.
void write_basis_csv(std::ostream& out, const SpectralBasis1D& basis);

}  // namespace bsteer
