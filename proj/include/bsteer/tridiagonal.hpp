#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bsteer {

/// Symmetric tridiagonal matrix: `diag` has n entries, `off` has n-1.
struct SymTridiagonal {
    std::vector<double> diag;
    std::vector<double> off;

    std::size_t size() const noexcept { return diag.size(); }
};

struct TridiagonalEigen {
    std::vector<double> values;               // descending
    std::vector<std::vector<double>> vectors;  // unit Euclidean norm
};

/// Number of eigenvalues strictly below x (Sturm sequence count).
std::size_t count_below(const SymTridiagonal& t, double x);

/// The m largest eigenpairs. Eigenvalues by bisection on the Sturm count,
/// eigenvectors by inverse iteration with reorthogonalization.
TridiagonalEigen largest_eigenpairs(const SymTridiagonal& t, std::size_t m);

/// LU factorization without pivoting for diagonally dominant tridiagonal
/// systems, reused across right-hand sides.
class TridiagonalSolver {
public:
    TridiagonalSolver() = default;
    TridiagonalSolver(std::vector<double> lower, std::vector<double> diag, std::vector<double> upper);

    std::size_t size() const noexcept { return pivot_.size(); }
    void solve_in_place(std::span<double> rhs) const;

private:
    std::vector<double> lower_;
    std::vector<double> upper_;
    std::vector<double> pivot_;
};

}  // namespace bsteer
