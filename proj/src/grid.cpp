#include "bsteer/grid.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "bsteer/error.hpp"

namespace bsteer {

namespace {

void require_same_grid(const GridFunction& a, const GridFunction& b, const char* what)
{
    if (!(a.grid() == b.grid())) {
        throw Error(Errc::grid_mismatch, std::string(what) + ": operands live on different grids");
    }
}

// Calls fn(flat, weight) for every node with its tensor trapezoid weight.
template <class Fn>
void for_each_weighted(const Grid& grid, Fn&& fn)
{
    const std::size_t d = grid.dim();
    std::vector<std::vector<double>> w;
    w.reserve(d);
    for (const auto& ax : grid.axes()) {
        w.push_back(trapezoid_weights(ax));
    }
    if (d == 1) {
        for (std::size_t i = 0; i < w[0].size(); ++i) {
            fn(i, w[0][i]);
        }
        return;
    }
    std::vector<std::size_t> idx(d, 0);
    const std::size_t n0 = w[0].size();
    for (std::size_t flat = 0; flat < grid.size(); flat += n0) {
        grid.unflatten(flat, idx);
        double outer = 1.0;
        for (std::size_t a = 1; a < d; ++a) {
            outer *= w[a][idx[a]];
        }
        for (std::size_t i = 0; i < n0; ++i) {
            fn(flat + i, outer * w[0][i]);
        }
    }
}

}  // namespace

Box::Box(std::vector<Interval> axes) : axes_(std::move(axes))
{
    if (axes_.empty()) {
        throw Error(Errc::invalid_argument, "box needs at least one axis");
    }
    for (const auto& a : axes_) {
        if (!(a.lo < a.hi) || !std::isfinite(a.lo) || !std::isfinite(a.hi)) {
            throw Error(Errc::invalid_argument, "box axis requires finite lo < hi");
        }
    }
}

Box Box::unit(std::size_t dim)
{
    return Box(std::vector<Interval>(dim, Interval{0.0, 1.0}));
}

bool Box::contains(std::span<const double> point) const
{
    if (point.size() != axes_.size()) {
        return false;
    }
    for (std::size_t i = 0; i < point.size(); ++i) {
        if (point[i] < axes_[i].lo || point[i] > axes_[i].hi) {
            return false;
        }
    }
    return true;
}

Grid1D::Grid1D(double lo, double hi, std::size_t cells) : lo_(lo), hi_(hi), cells_(cells)
{
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw Error(Errc::invalid_argument, "grid axis requires finite lo < hi");
    }
    if (cells < min_cells) {
        throw Error(Errc::invalid_argument, "grid axis needs at least 8 cells");
    }
}

std::vector<double> Grid1D::nodes() const
{
    std::vector<double> x(size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = node(i);
    }
    return x;
}

Grid::Grid(std::vector<Grid1D> axes) : axes_(std::move(axes))
{
    if (axes_.empty()) {
        throw Error(Errc::invalid_argument, "grid needs at least one axis");
    }
    strides_.resize(axes_.size());
    std::size_t s = 1;
    for (std::size_t i = 0; i < axes_.size(); ++i) {
        strides_[i] = s;
        s *= axes_[i].size();
    }
    size_ = s;
}

namespace {
std::vector<Grid1D> axes_of(const Box& box, std::size_t cells)
{
    std::vector<Grid1D> axes;
    for (const auto& a : box.axes()) {
        axes.emplace_back(a.lo, a.hi, cells);
    }
    return axes;
}
}  // namespace

Grid::Grid(const Box& box, std::size_t cells_per_axis) : Grid(axes_of(box, cells_per_axis)) {}

Box Grid::box() const
{
    std::vector<Interval> iv;
    for (const auto& a : axes_) {
        iv.push_back({a.lo(), a.hi()});
    }
    return Box(std::move(iv));
}

double Grid::max_spacing() const noexcept
{
    double h = 0.0;
    for (const auto& a : axes_) {
        h = std::max(h, a.spacing());
    }
    return h;
}

std::size_t Grid::flatten(std::span<const std::size_t> index) const
{
    if (index.size() != dim()) {
        throw Error(Errc::axis_mismatch, "index rank differs from grid dimension");
    }
    std::size_t flat = 0;
    for (std::size_t i = 0; i < dim(); ++i) {
        flat += index[i] * strides_[i];
    }
    return flat;
}

void Grid::unflatten(std::size_t flat, std::span<std::size_t> index) const
{
    for (std::size_t i = 0; i < dim(); ++i) {
        index[i] = flat % axes_[i].size();
        flat /= axes_[i].size();
    }
}

bool Grid::on_boundary(std::size_t flat) const
{
    for (std::size_t i = 0; i < dim(); ++i) {
        const std::size_t k = flat % axes_[i].size();
        if (k == 0 || k == axes_[i].cells()) {
            return true;
        }
        flat /= axes_[i].size();
    }
    return false;
}

std::vector<double> Grid::point(std::size_t flat) const
{
    std::vector<double> x(dim());
    for (std::size_t i = 0; i < dim(); ++i) {
        x[i] = axes_[i].node(flat % axes_[i].size());
        flat /= axes_[i].size();
    }
    return x;
}

std::vector<double> trapezoid_weights(const Grid1D& axis)
{
    std::vector<double> w(axis.size(), axis.spacing());
    w.front() *= 0.5;
    w.back() *= 0.5;
    return w;
}

GridFunction::GridFunction(Grid grid, std::vector<double> values, bool dirichlet)
    : grid_(std::make_shared<const Grid>(std::move(grid))), values_(std::move(values)), dirichlet_(dirichlet)
{
    if (values_.size() != grid_->size()) {
        throw Error(Errc::grid_mismatch, "value count " + std::to_string(values_.size()) +
                                             " differs from lattice size " + std::to_string(grid_->size()));
    }
    if (dirichlet_) {
        const double scale = std::max(max_abs(), 1.0);
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (grid_->on_boundary(i) && std::abs(values_[i]) > 1e-12 * scale) {
                throw Error(Errc::invalid_argument, "Dirichlet-flagged function is nonzero on the boundary");
            }
        }
    }
}

GridFunction GridFunction::constant(const Grid& grid, double value)
{
    return GridFunction(grid, std::vector<double>(grid.size(), value));
}

GridFunction GridFunction::sample(const Grid& grid, const PointFn& fn, bool dirichlet)
{
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (dirichlet && grid.on_boundary(i)) {
            v[i] = 0.0;
            continue;
        }
        const auto x = grid.point(i);
        v[i] = fn(x);
    }
    return GridFunction(grid, std::move(v), dirichlet);
}

GridFunction GridFunction::sample(const Grid1D& axis, const std::function<double(double)>& fn, bool dirichlet)
{
    return sample(Grid(axis), [&](std::span<const double> x) { return fn(x[0]); }, dirichlet);
}

double GridFunction::max_abs() const noexcept
{
    double m = 0.0;
    for (double v : values_) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

double GridFunction::min() const noexcept
{
    return *std::min_element(values_.begin(), values_.end());
}

double GridFunction::max() const noexcept
{
    return *std::max_element(values_.begin(), values_.end());
}

double GridFunction::evaluate(std::span<const double> point) const
{
    const Grid& g = *grid_;
    if (point.size() != g.dim()) {
        throw Error(Errc::axis_mismatch, "evaluation point rank differs from grid dimension");
    }
    const std::size_t d = g.dim();
    std::vector<std::size_t> base(d);
    std::vector<double> frac(d);
    for (std::size_t a = 0; a < d; ++a) {
        const auto& ax = g.axis(a);
        const double x = std::clamp(point[a], ax.lo(), ax.hi());
        double s = (x - ax.lo()) / ax.spacing();
        auto k = static_cast<std::size_t>(std::floor(s));
        k = std::min(k, ax.cells() - 1);
        base[a] = k;
        frac[a] = s - static_cast<double>(k);
    }
    double acc = 0.0;
    const std::size_t corners = std::size_t{1} << d;
    for (std::size_t c = 0; c < corners; ++c) {
        double w = 1.0;
        std::size_t flat = 0;
        for (std::size_t a = 0; a < d; ++a) {
            const bool up = (c >> a) & 1U;
            w *= up ? frac[a] : 1.0 - frac[a];
            flat += (base[a] + (up ? 1 : 0)) * g.stride(a);
        }
        if (w != 0.0) {
            acc += w * values_[flat];
        }
    }
    return acc;
}

GridFunction GridFunction::with_dirichlet() const
{
    std::vector<double> v = values_;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (grid_->on_boundary(i)) {
            v[i] = 0.0;
        }
    }
    return GridFunction(*grid_, std::move(v), true);
}

GridFunction GridFunction::map(const std::function<double(double)>& fn) const
{
    std::vector<double> v(values_.size());
    std::transform(values_.begin(), values_.end(), v.begin(), fn);
    return GridFunction(*grid_, std::move(v));
}

GridFunction GridFunction::scaled(double factor) const
{
    std::vector<double> v(values_.size());
    std::transform(values_.begin(), values_.end(), v.begin(), [factor](double x) { return factor * x; });
    return GridFunction(*grid_, std::move(v), dirichlet_);
}

namespace {
template <class Op>
GridFunction combine(const GridFunction& a, const GridFunction& b, Op op, const char* what)
{
    require_same_grid(a, b, what);
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = op(a[i], b[i]);
    }
    return GridFunction(a.grid(), std::move(v), a.dirichlet() && b.dirichlet());
}
}  // namespace

GridFunction operator+(const GridFunction& a, const GridFunction& b)
{
    return combine(a, b, std::plus<>{}, "addition");
}

GridFunction operator-(const GridFunction& a, const GridFunction& b)
{
    return combine(a, b, std::minus<>{}, "subtraction");
}

GridFunction operator*(const GridFunction& a, const GridFunction& b)
{
    std::vector<double> v(a.size());
    require_same_grid(a, b, "product");
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = a[i] * b[i];
    }
    return GridFunction(a.grid(), std::move(v), a.dirichlet() || b.dirichlet());
}

double inner_product(const GridFunction& f, const GridFunction& g)
{
    require_same_grid(f, g, "inner_product");
    const auto fv = f.values();
    const auto gv = g.values();
    double acc = 0.0;
    for_each_weighted(f.grid(), [&](std::size_t i, double w) { acc += w * fv[i] * gv[i]; });
    return acc;
}

double l2_norm(const GridFunction& f)
{
    return std::sqrt(std::max(0.0, inner_product(f, f)));
}

double integral(const GridFunction& f)
{
    const auto fv = f.values();
    double acc = 0.0;
    for_each_weighted(f.grid(), [&](std::size_t i, double w) { acc += w * fv[i]; });
    return acc;
}

GridFunction normalized(const GridFunction& f)
{
    const double n = l2_norm(f);
    if (!(n > 0.0)) {
        throw Error(Errc::invalid_argument, "cannot normalize the zero function");
    }
    return f.scaled(1.0 / n);
}

double relative_l2_error(const GridFunction& approx, const GridFunction& reference)
{
    const double r = l2_norm(reference);
    if (!(r > 0.0)) {
        throw Error(Errc::invalid_argument, "relative error against the zero function");
    }
    return l2_norm(approx - reference) / r;
}

GridFunction tensor_product(std::span<const GridFunction> factors)
{
    std::vector<Grid1D> axes;
    for (const auto& f : factors) {
        if (f.grid().dim() != 1) {
            throw Error(Errc::axis_mismatch, "tensor factors must be one-dimensional");
        }
        axes.push_back(f.grid().axis(0));
    }
    return tensor_product(Grid(std::move(axes)), factors);
}

GridFunction tensor_product(const Grid& grid, std::span<const GridFunction> factors)
{
    if (factors.size() != grid.dim()) {
        throw Error(Errc::axis_mismatch, "expected " + std::to_string(grid.dim()) + " factors, got " +
                                             std::to_string(factors.size()));
    }
    bool dirichlet = false;
    for (std::size_t a = 0; a < factors.size(); ++a) {
        const auto& fg = factors[a].grid();
        if (fg.dim() != 1 || !(fg.axis(0) == grid.axis(a))) {
            throw Error(Errc::axis_mismatch, "factor " + std::to_string(a) + " does not live on axis " +
                                                 std::to_string(a));
        }
    }
    std::vector<double> v(grid.size());
    std::vector<std::size_t> idx(grid.dim());
    for (std::size_t flat = 0; flat < v.size(); ++flat) {
        grid.unflatten(flat, idx);
        double p = 1.0;
        for (std::size_t a = 0; a < idx.size(); ++a) {
            p *= factors[a][idx[a]];
        }
        v[flat] = p;
    }
    // Dirichlet holds if every face is annihilated by its own factor.
    dirichlet = std::all_of(factors.begin(), factors.end(), [](const GridFunction& f) {
        return f[0] == 0.0 && f[f.size() - 1] == 0.0;
    });
    return GridFunction(grid, std::move(v), dirichlet);
}

std::vector<double> line_values(const GridFunction& f, std::size_t axis, std::size_t anchor)
{
    const Grid& g = f.grid();
    const std::size_t n = g.axis(axis).size();
    const std::size_t stride = g.stride(axis);
    const std::size_t k = (anchor / stride) % n;
    const std::size_t start = anchor - k * stride;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = f[start + i * stride];
    }
    return out;
}

void write_csv(std::ostream& out, const GridFunction& f)
{
    const Grid& g = f.grid();
    std::ostringstream buf;
    buf << std::setprecision(12);
    for (std::size_t a = 0; a < g.dim(); ++a) {
        buf << 'x' << (a + 1) << ',';
    }
    buf << "value\n";
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (double x : g.point(i)) {
            buf << x << ',';
        }
        buf << f[i] << '\n';
    }
    out << buf.str();
}

}  // namespace bsteer
