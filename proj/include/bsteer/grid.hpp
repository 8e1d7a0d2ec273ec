#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

namespace bsteer {

struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    double length() const noexcept { return hi - lo; }
    bool operator==(const Interval&) const = default;
};

/// Axis-aligned box (a_1,b_1) x ... x (a_n,b_n).
class Box {
public:
    explicit Box(std::vector<Interval> axes);
    static Box unit(std::size_t dim);

    std::size_t dim() const noexcept { return axes_.size(); }
    const Interval& axis(std::size_t i) const { return axes_.at(i); }
    const std::vector<Interval>& axes() const noexcept { return axes_; }
    bool contains(std::span<const double> point) const;

    bool operator==(const Box&) const = default;

private:
    std::vector<Interval> axes_;
};

/// Uniform 1-D grid with N cells, i.e. N+1 nodes including both ends.
class Grid1D {
public:
    static constexpr std::size_t min_cells = 8;

    Grid1D(double lo, double hi, std::size_t cells);

    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }
    std::size_t cells() const noexcept { return cells_; }
    std::size_t size() const noexcept { return cells_ + 1; }
    double spacing() const noexcept { return (hi_ - lo_) / static_cast<double>(cells_); }
    double node(std::size_t i) const noexcept
    {
        return i == cells_ ? hi_ : lo_ + static_cast<double>(i) * spacing();
    }
    std::vector<double> nodes() const;

    bool operator==(const Grid1D&) const = default;

private:
    double lo_;
    double hi_;
    std::size_t cells_;
};

/// Tensor-product lattice. Flat storage is row-major with axis 0 fastest.
class Grid {
public:
    explicit Grid(std::vector<Grid1D> axes);
    Grid(const Box& box, std::size_t cells_per_axis);
    explicit Grid(const Grid1D& axis) : Grid(std::vector<Grid1D>{axis}) {}

    std::size_t dim() const noexcept { return axes_.size(); }
    const Grid1D& axis(std::size_t i) const { return axes_.at(i); }
    const std::vector<Grid1D>& axes() const noexcept { return axes_; }
    std::size_t size() const noexcept { return size_; }
    std::size_t stride(std::size_t axis) const { return strides_.at(axis); }
    Box box() const;
    double max_spacing() const noexcept;

    std::size_t flatten(std::span<const std::size_t> index) const;
    void unflatten(std::size_t flat, std::span<std::size_t> index) const;
    bool on_boundary(std::size_t flat) const;
    /// Physical coordinates of a node.
    std::vector<double> point(std::size_t flat) const;

    bool operator==(const Grid& other) const { return axes_ == other.axes_; }

private:
    std::vector<Grid1D> axes_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 0;
};

/// Trapezoidal weights of one axis.
std::vector<double> trapezoid_weights(const Grid1D& axis);

/// Immutable sampled function on a grid.
class GridFunction {
public:
    using PointFn = std::function<double(std::span<const double>)>;

    GridFunction(Grid grid, std::vector<double> values, bool dirichlet = false);

    static GridFunction constant(const Grid& grid, double value);
    static GridFunction sample(const Grid& grid, const PointFn& fn, bool dirichlet = false);
    static GridFunction sample(const Grid1D& axis, const std::function<double(double)>& fn,
                               bool dirichlet = false);

    const Grid& grid() const noexcept { return *grid_; }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const noexcept { return values_.size(); }
    bool dirichlet() const noexcept { return dirichlet_; }

    double max_abs() const noexcept;
    double min() const noexcept;
    double max() const noexcept;
    /// Multilinear interpolation; points outside the box are clamped.
    double evaluate(std::span<const double> point) const;
    double evaluate(double x) const { return evaluate(std::span<const double>(&x, 1)); }

    /// Copy with boundary nodes set to zero and the Dirichlet flag raised.
    GridFunction with_dirichlet() const;
    GridFunction map(const std::function<double(double)>& fn) const;
    GridFunction scaled(double factor) const;

    friend GridFunction operator+(const GridFunction& a, const GridFunction& b);
    friend GridFunction operator-(const GridFunction& a, const GridFunction& b);
    friend GridFunction operator*(const GridFunction& a, const GridFunction& b);
    friend GridFunction operator*(double s, const GridFunction& f) { return f.scaled(s); }

private:
    std::shared_ptr<const Grid> grid_;
    std::vector<double> values_;
    bool dirichlet_ = false;
};

/// Trapezoidal approximation of the integral of f*g.
double inner_product(const GridFunction& f, const GridFunction& g);
double l2_norm(const GridFunction& f);
double integral(const GridFunction& f);
/// Returns f / ||f||. Throws invalid_argument for the zero function.
GridFunction normalized(const GridFunction& f);
double relative_l2_error(const GridFunction& approx, const GridFunction& reference);

/// Nodewise product of one-dimensional factors over the lattice they span.
GridFunction tensor_product(std::span<const GridFunction> factors);
/// Same, checking each factor against the matching axis of `grid`.
GridFunction tensor_product(const Grid& grid, std::span<const GridFunction> factors);

/// Restriction of f to the axis-parallel line through node `anchor` along `axis`.
std::vector<double> line_values(const GridFunction& f, std::size_t axis, std::size_t anchor);

/// CSV with header `x1[,x2,...],value`, one row per node, axis 1 fastest.
void write_csv(std::ostream& out, const GridFunction& f);

}  // namespace bsteer
