#pragma once

#include <span>

#include "bsteer/grid.hpp"

namespace bsteer {

struct NodalProfileOptions {
    /// Half-width of the exactly linear window around each zero; 0 selects three cells.
    double linear_halfwidth = 0.0;
    /// Weight of the concave part of each lobe relative to the sin^4 bump.
    double slope_weight = 1.0;
    /// Sign of the lobe next to the left endpoint.
    int first_sign = 1;
};

/// L2-normalized profile vanishing exactly at the ends and at `zeros`,
/// exactly linear with slope magnitude independent of the cell within the
/// window around every zero, alternating in sign between cells and C^2
/// elsewhere. Each lobe is L*(slope_weight*g(t) + sin^4(pi*tau)) in cell
/// coordinates, where g is a concave C^2 blend between the slopes +1 and -1.
GridFunction nodal_profile(const Grid1D& axis, std::span<const double> zeros, const NodalProfileOptions& options = {});

}  // namespace bsteer
