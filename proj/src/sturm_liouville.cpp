#include "bsteer/sturm_liouville.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "bsteer/error.hpp"
#include "bsteer/tridiagonal.hpp"

namespace bsteer {

namespace {

constexpr double mode_sign_tol = 1e-10;

const Grid1D& single_axis(const GridFunction& f, const char* what)
{
    if (f.grid().dim() != 1) {
        throw Error(Errc::axis_mismatch, std::string(what) + " expects a one-dimensional function");
    }
    return f.grid().axis(0);
}

std::vector<double> zeros_of(const GridFunction& f, double tol)
{
    const auto x = f.grid().axis(0).nodes();
    return trace_sign_changes(x, f.values(), tol);
}

}  // namespace

SpectralBasis1D::SpectralBasis1D(GridFunction potential, std::vector<double> eigenvalues,
                                 std::vector<GridFunction> modes)
    : potential_(std::move(potential)), eigenvalues_(std::move(eigenvalues)), modes_(std::move(modes))
{
    single_axis(potential_, "SpectralBasis1D");
    if (eigenvalues_.size() != modes_.size()) {
        throw Error(Errc::invalid_argument, "eigenvalue and mode counts differ");
    }
    for (const auto& m : modes_) {
        if (!(m.grid() == potential_.grid())) {
            throw Error(Errc::grid_mismatch, "mode and potential grids differ");
        }
    }
}

double SpectralBasis1D::mode_integral(std::size_t j, double lo, double hi) const
{
    const auto& f = modes_.at(j);
    const auto& ax = axis();
    lo = std::max(lo, ax.lo());
    hi = std::min(hi, ax.hi());
    if (!(hi > lo)) {
        return 0.0;
    }
    const double dx = ax.spacing();
    auto cell_of = [&](double x) {
        const auto k = static_cast<std::size_t>(std::floor((x - ax.lo()) / dx));
        return std::min(k, ax.cells() - 1);
    };
    double acc = 0.0;
    for (std::size_t k = cell_of(lo); k <= cell_of(hi); ++k) {
        const double a = std::max(lo, ax.node(k));
        const double b = std::min(hi, ax.node(k + 1));
        if (b > a) {
            acc += 0.5 * (b - a) * (f.evaluate(a) + f.evaluate(b));
        }
    }
    return acc;
}

std::vector<double> SpectralBasis1D::mode_zeros(std::size_t j) const
{
    const auto& f = modes_.at(j);
    return zeros_of(f, mode_sign_tol * f.max_abs());
}

SpectralBasis1D solve_1d(const GridFunction& v, std::size_t m)
{
    const Grid1D& ax = single_axis(v, "solve_1d");
    if (m == 0 || m > ax.cells() / 4) {
        throw Error(Errc::invalid_argument, "mode count must lie in [1, N/4]");
    }
    for (double x : v.values()) {
        if (!std::isfinite(x)) {
            throw Error(Errc::invalid_argument, "potential must be finite");
        }
    }
    const std::size_t n = ax.cells() - 1;
    const double dx = ax.spacing();
    const double inv = 1.0 / (dx * dx);
    SymTridiagonal t;
    t.diag.resize(n);
    t.off.assign(n - 1, inv);
    for (std::size_t i = 0; i < n; ++i) {
        t.diag[i] = -2.0 * inv + v[i + 1];
    }
    auto eig = largest_eigenpairs(t, m);
    std::vector<GridFunction> modes;
    modes.reserve(m);
    const double scale = 1.0 / std::sqrt(dx);
    for (std::size_t j = 0; j < m; ++j) {
        const auto& vec = eig.vectors[j];
        std::vector<double> vals(ax.size(), 0.0);
        double peak = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            vals[i + 1] = scale * vec[i];
            peak = std::max(peak, std::abs(vals[i + 1]));
        }
        const auto lead = std::find_if(vals.begin() + 1, vals.end(),
                                       [&](double x) { return std::abs(x) > mode_sign_tol * peak; });
        if (lead != vals.end() && *lead < 0.0) {
            for (double& x : vals) {
                x = -x;
            }
        }
        GridFunction mode(Grid(ax), std::move(vals), true);
        const std::size_t changes = zeros_of(mode, mode_sign_tol * peak).size();
        if (changes != j) {
            throw Error(Errc::oscillation_violation, "mode " + std::to_string(j + 1) + " has " +
                                                         std::to_string(changes) + " sign changes, expected " +
                                                         std::to_string(j));
        }
        modes.push_back(std::move(mode));
    }
    return SpectralBasis1D(v, std::move(eig.values), std::move(modes));
}

std::vector<double> sample_zeros(const GridFunction& w)
{
    const Grid1D& ax = single_axis(w, "sample_zeros");
    const double tol = 1e-12 * w.max_abs();
    std::vector<double> z = zeros_of(w, tol);
    for (std::size_t i = 0; i < ax.size(); ++i) {
        if (std::abs(w[i]) <= tol) {
            z.push_back(ax.node(i));
        }
    }
    std::sort(z.begin(), z.end());
    z.erase(std::unique(z.begin(), z.end(), [&](double a, double b) { return std::abs(a - b) < 1e-12; }),
            z.end());
    return z;
}

GridFunction potential_from_target(const GridFunction& w, std::optional<double> band, double cap)
{
    const Grid1D& ax = single_axis(w, "potential_from_target");
    const double dx = ax.spacing();
    const double width = band.value_or(3.0 * dx);
    if (width < 0.0) {
        throw Error(Errc::invalid_argument, "band must be nonnegative");
    }
    if (!(w.max_abs() > 0.0)) {
        throw Error(Errc::invalid_argument, "target profile vanishes identically");
    }
    const auto zeros = sample_zeros(w);
    auto near_zero = [&](double x) {
        return std::any_of(zeros.begin(), zeros.end(),
                           [&](double z) { return std::abs(x - z) <= width + 1e-9 * dx; });
    };
    const std::size_t n = ax.size();
    std::vector<double> v(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double x = ax.node(i);
        if (near_zero(x)) {
            continue;
        }
        if (w[i] == 0.0) {
            throw Error(Errc::unbounded_potential, "profile vanishes at x = " + std::to_string(x) +
                                                       " outside every band");
        }
        const double d2 = (w[i + 1] - 2.0 * w[i] + w[i - 1]) / (dx * dx);
        v[i] = -d2 / w[i];
        if (!(std::abs(v[i]) <= cap)) {
            std::ostringstream msg;
            msg << "|v| = " << std::abs(v[i]) << " exceeds cap " << cap << " at x = " << x
                << "; the profile is not linear near its zero";
            throw Error(Errc::unbounded_potential, msg.str());
        }
    }
    if (!near_zero(ax.lo())) {
        v[0] = v[1];
    }
    if (!near_zero(ax.hi())) {
        v[n - 1] = v[n - 2];
    }
    return GridFunction(Grid(ax), std::move(v));
}

SpectralBasisND::SpectralBasisND(std::vector<SpectralBasis1D> axes, std::size_t m)
    : axes_(std::move(axes)),
      grid_([&] {
          if (axes_.empty()) {
              throw Error(Errc::invalid_argument, "tensor basis needs at least one axis");
          }
          std::vector<Grid1D> g;
          for (const auto& b : axes_) {
              g.push_back(b.axis());
          }
          return Grid(std::move(g));
      }()),
      potential_(GridFunction::constant(grid_, 0.0))
{
    const std::size_t d = axes_.size();
    std::size_t total = 1;
    for (const auto& b : axes_) {
        total *= b.size();
    }
    if (m == 0 || m > total) {
        throw Error(Errc::invalid_argument, "requested " + std::to_string(m) + " tensor modes out of " +
                                                std::to_string(total) + " available");
    }
    std::vector<TensorMode> all;
    all.reserve(total);
    std::vector<std::size_t> idx(d, 0);
    for (std::size_t c = 0; c < total; ++c) {
        std::size_t r = c;
        TensorMode tm;
        for (std::size_t a = 0; a < d; ++a) {
            idx[a] = r % axes_[a].size();
            r /= axes_[a].size();
            tm.index.push_back(idx[a] + 1);
            tm.eigenvalue += axes_[a].eigenvalue(idx[a]);
        }
        all.push_back(std::move(tm));
    }
    std::sort(all.begin(), all.end(), [](const TensorMode& a, const TensorMode& b) {
        if (a.eigenvalue != b.eigenvalue) {
            return a.eigenvalue > b.eigenvalue;
        }
        return a.index < b.index;
    });
    // Regroup near-ties lexicographically.
    for (std::size_t s = 0; s < all.size();) {
        std::size_t e = s + 1;
        while (e < all.size() &&
               std::abs(all[e].eigenvalue - all[s].eigenvalue) <= 1e-10 * std::max(1.0, std::abs(all[s].eigenvalue))) {
            ++e;
        }
        std::sort(all.begin() + static_cast<std::ptrdiff_t>(s), all.begin() + static_cast<std::ptrdiff_t>(e),
                  [](const TensorMode& a, const TensorMode& b) { return a.index < b.index; });
        s = e;
    }
    all.resize(m);
    info_ = std::move(all);
    for (const auto& tm : info_) {
        std::vector<GridFunction> factors;
        for (std::size_t a = 0; a < d; ++a) {
            factors.push_back(axes_[a].mode(tm.index[a] - 1));
        }
        modes_.push_back(tensor_product(grid_, factors));
    }
    std::vector<double> pot(grid_.size(), 0.0);
    std::vector<std::size_t> node(d);
    for (std::size_t flat = 0; flat < pot.size(); ++flat) {
        grid_.unflatten(flat, node);
        for (std::size_t a = 0; a < d; ++a) {
            pot[flat] += axes_[a].potential()[node[a]];
        }
    }
    potential_ = GridFunction(grid_, std::move(pot));
}

std::optional<std::size_t> SpectralBasisND::find(std::span<const std::size_t> index) const
{
    for (std::size_t l = 0; l < info_.size(); ++l) {
        if (std::equal(index.begin(), index.end(), info_[l].index.begin(), info_[l].index.end())) {
            return l;
        }
    }
    return std::nullopt;
}

SpectralBasisND assemble_nd(std::vector<SpectralBasis1D> bases, std::size_t m)
{
    return SpectralBasisND(std::move(bases), m);
}

TargetMode locate_target_mode(const SpectralBasisND& basis, std::span<const std::size_t> axis_counts, double tol)
{
    if (axis_counts.size() != basis.dim()) {
        throw Error(Errc::axis_mismatch, "pattern dimension differs from basis dimension");
    }
    std::vector<std::size_t> index;
    for (std::size_t c : axis_counts) {
        index.push_back(c + 1);
    }
    const auto pos = basis.find(index);
    if (!pos) {
        throw Error(Errc::invalid_argument, "target mode is not among the assembled modes; assemble more");
    }
    const double lam = basis.eigenvalue(*pos);
    const double scale = std::max(1.0, std::abs(lam));
    if (*pos + 1 >= basis.size()) {
        throw Error(Errc::invalid_argument, "target mode is the last assembled mode; gap unknown");
    }
    const double gap = lam - basis.eigenvalue(*pos + 1);
    if (!(gap > tol * scale)) {
        throw Error(Errc::degenerate_target, "target eigenvalue " + std::to_string(lam) +
                                                 " coincides with the next one down");
    }
    return TargetMode{*pos, lam, gap};
}

TargetMode locate_target_mode(const SpectralBasisND& basis, const SignPattern& pattern, double tol)
{
    const auto counts = pattern.counts();
    return locate_target_mode(basis, std::span<const std::size_t>(counts), tol);
}

void write_basis_csv(std::ostream& out, const SpectralBasis1D& basis)
{
    std::ostringstream buf;
    buf << std::setprecision(12) << "index,lambda,zero_count\n";
    for (std::size_t j = 0; j < basis.size(); ++j) {
        buf << (j + 1) << ',' << basis.eigenvalue(j) << ',' << basis.mode_zeros(j).size() << '\n';
    }
    out << buf.str();
}

}  // namespace bsteer
