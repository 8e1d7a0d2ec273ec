#include "bsteer/tridiagonal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bsteer/error.hpp"

namespace bsteer {

namespace {

double gershgorin_low(const SymTridiagonal& t)
{
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < t.size(); ++i) {
        double r = 0.0;
        if (i > 0) {
            r += std::abs(t.off[i - 1]);
        }
        if (i + 1 < t.size()) {
            r += std::abs(t.off[i]);
        }
        lo = std::min(lo, t.diag[i] - r);
    }
    return lo;
}

double gershgorin_high(const SymTridiagonal& t)
{
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < t.size(); ++i) {
        double r = 0.0;
        if (i > 0) {
            r += std::abs(t.off[i - 1]);
        }
        if (i + 1 < t.size()) {
            r += std::abs(t.off[i]);
        }
        hi = std::max(hi, t.diag[i] + r);
    }
    return hi;
}

// Eigenvalue with ascending index `k` (0-based).
double bisect(const SymTridiagonal& t, std::size_t k, double lo, double hi)
{
    const double scale = std::max(std::abs(lo), std::abs(hi));
    const double tol = 4.0 * std::numeric_limits<double>::epsilon() * scale;
    for (int it = 0; it < 200 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (count_below(t, mid) > k) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Solves (T - shift I) x = b in place with partial pivoting (Gaussian
// elimination on the band, one extra superdiagonal for fill-in).
void shifted_solve(const SymTridiagonal& t, double shift, std::vector<double>& b)
{
    const std::size_t n = t.size();
    const double tiny = std::numeric_limits<double>::epsilon() *
                        std::max({1.0, std::abs(gershgorin_low(t)), std::abs(gershgorin_high(t))});
    std::vector<double> d(n), du(n, 0.0), du2(n, 0.0), dl(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = t.diag[i] - shift;
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        du[i] = t.off[i];
        dl[i] = t.off[i];
    }
    std::vector<bool> swapped(n, false);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (std::abs(d[i]) >= std::abs(dl[i])) {
            if (d[i] == 0.0) {
                d[i] = tiny;
            }
            const double f = dl[i] / d[i];
            dl[i] = f;
            d[i + 1] -= f * du[i];
            b[i + 1] -= f * b[i];
        } else {
            swapped[i] = true;
            const double f = d[i] / dl[i];
            d[i] = dl[i];
            dl[i] = f;
            const double tmp = du[i];
            du[i] = d[i + 1];
            d[i + 1] = tmp - f * d[i + 1];
            if (i + 2 < n) {
                du2[i] = du[i + 1];
                du[i + 1] = -f * du[i + 1];
            }
            std::swap(b[i], b[i + 1]);
            b[i + 1] -= f * b[i];
        }
    }
    if (d[n - 1] == 0.0) {
        d[n - 1] = tiny;
    }
    b[n - 1] /= d[n - 1];
    if (n > 1) {
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    }
    for (std::size_t ii = n; ii-- > 2;) {
        const std::size_t i = ii - 2;
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
    }
}

void normalize(std::vector<double>& x)
{
    const double n = std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0));
    if (n > 0.0) {
        for (double& v : x) {
            v /= n;
        }
    }
}

}  // namespace

std::size_t count_below(const SymTridiagonal& t, double x)
{
    const std::size_t n = t.size();
    const double guard = std::numeric_limits<double>::min() * 1e3;
    std::size_t count = 0;
    double q = t.diag[0] - x;
    for (std::size_t i = 0;;) {
        if (q == 0.0) {
            q = -guard;
        }
        if (q < 0.0) {
            ++count;
        }
        if (++i == n) {
            break;
        }
        q = t.diag[i] - x - t.off[i - 1] * t.off[i - 1] / q;
    }
    return count;
}

TridiagonalEigen largest_eigenpairs(const SymTridiagonal& t, std::size_t m)
{
    const std::size_t n = t.size();
    if (n == 0 || t.off.size() + 1 != n) {
        throw Error(Errc::invalid_argument, "malformed tridiagonal matrix");
    }
    if (m > n) {
        throw Error(Errc::invalid_argument, "requested more eigenpairs than the matrix order");
    }
    const double lo = gershgorin_low(t);
    const double hi = gershgorin_high(t);
    TridiagonalEigen out;
    for (std::size_t k = 0; k < m; ++k) {
        out.values.push_back(bisect(t, n - 1 - k, lo, hi));
    }
    for (std::size_t k = 0; k < m; ++k) {
        std::vector<double> x(n);
        // Deterministic start vector with components along every mode.
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = 1.0 + 0.5 * std::sin(1.7 * static_cast<double>(i + 1) + static_cast<double>(k));
        }
        for (int it = 0; it < 4; ++it) {
            shifted_solve(t, out.values[k], x);
            for (const auto& prev : out.vectors) {
                const double c = std::inner_product(prev.begin(), prev.end(), x.begin(), 0.0);
                for (std::size_t i = 0; i < n; ++i) {
                    x[i] -= c * prev[i];
                }
            }
            normalize(x);
        }
        out.vectors.push_back(std::move(x));
    }
    return out;
}

TridiagonalSolver::TridiagonalSolver(std::vector<double> lower, std::vector<double> diag, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)), pivot_(std::move(diag))
{
    const std::size_t n = pivot_.size();
    if (n == 0 || lower_.size() + 1 != n || upper_.size() + 1 != n) {
        throw Error(Errc::invalid_argument, "malformed tridiagonal system");
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (pivot_[i - 1] == 0.0) {
            throw Error(Errc::invalid_argument, "zero pivot in tridiagonal factorization");
        }
        lower_[i - 1] /= pivot_[i - 1];
        pivot_[i] -= lower_[i - 1] * upper_[i - 1];
    }
    if (pivot_[n - 1] == 0.0) {
        throw Error(Errc::invalid_argument, "zero pivot in tridiagonal factorization");
    }
}

void TridiagonalSolver::solve_in_place(std::span<double> rhs) const
{
    const std::size_t n = pivot_.size();
    for (std::size_t i = 1; i < n; ++i) {
        rhs[i] -= lower_[i - 1] * rhs[i - 1];
    }
    rhs[n - 1] /= pivot_[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
        rhs[i] = (rhs[i] - upper_[i] * rhs[i + 1]) / pivot_[i];
    }
}

}  // namespace bsteer
