#include "bsteer/nodal_profile.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "bsteer/error.hpp"

namespace bsteer {

namespace {

using std::numbers::pi;

// Concave lobe with unit slopes at both ends, linear on [0, d] and [1-d, 1].
double blend(double t, double d)
{
    if (t <= d) {
        return t;
    }
    if (t >= 1.0 - d) {
        return 1.0 - t;
    }
    const double w = 1.0 - 2.0 * d;
    const double tau = (t - d) / w;
    return t - 4.0 * w * (0.25 * tau * tau + (std::cos(2.0 * pi * tau) - 1.0) / (8.0 * pi * pi));
}

double bump(double t, double d)
{
    const double tau = std::clamp((t - d) / (1.0 - 2.0 * d), 0.0, 1.0);
    const double s = std::sin(pi * tau);
    return s * s * s * s;
}

}  // namespace

GridFunction nodal_profile(const Grid1D& axis, std::span<const double> zeros, const NodalProfileOptions& options)
{
    const double half = options.linear_halfwidth > 0.0 ? options.linear_halfwidth : 3.0 * axis.spacing();
    std::vector<double> edges{axis.lo()};
    for (double z : zeros) {
        if (!(z > edges.back())) {
            throw Error(Errc::invalid_argument, "profile zeros must be increasing and interior");
        }
        edges.push_back(z);
    }
    if (!(axis.hi() > edges.back())) {
        throw Error(Errc::invalid_argument, "profile zeros must be interior");
    }
    edges.push_back(axis.hi());
    for (std::size_t c = 0; c + 1 < edges.size(); ++c) {
        if (!(2.0 * half < edges[c + 1] - edges[c])) {
            throw Error(Errc::invalid_argument, "linear windows overlap; zeros are too close");
        }
    }
    std::vector<double> values(axis.size(), 0.0);
    const double first = options.first_sign < 0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < axis.size(); ++i) {
        const double x = axis.node(i);
        const auto it = std::upper_bound(edges.begin(), edges.end(), x);
        if (it == edges.begin() || it == edges.end()) {
            continue;
        }
        const auto c = static_cast<std::size_t>(it - edges.begin()) - 1;
        const double a = edges[c];
        const double len = edges[c + 1] - a;
        const double t = (x - a) / len;
        const double d = half / len;
        const double sign = (c % 2 == 0) ? first : -first;
        values[i] = sign * len * (options.slope_weight * blend(t, d) + bump(t, d));
    }
    // Exact zeros at nodes that coincide with a prescribed zero.
    for (std::size_t i = 0; i < axis.size(); ++i) {
        for (double e : edges) {
            if (std::abs(axis.node(i) - e) < 1e-12 * (axis.hi() - axis.lo())) {
                values[i] = 0.0;
            }
        }
    }
    return normalized(GridFunction(Grid(axis), std::move(values), true));
}

}  // namespace bsteer
