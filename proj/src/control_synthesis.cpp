#include "bsteer/control_synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bsteer/error.hpp"

namespace bsteer {

LogRatio log_ratio(const GridFunction& u0, const GridFunction& u1, double band)
{
    if (!(u0.grid() == u1.grid())) {
        throw Error(Errc::grid_mismatch, "log control states live on different grids");
    }
    const double t0 = band * u0.max_abs();
    const double t1 = band * u1.max_abs();
    std::vector<double> v(u0.size(), 0.0);
    LogRatio out{GridFunction::constant(u0.grid(), 0.0), 0.0, 0.0, 0};
    std::size_t violations = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double a = u0[i];
        const double b = u1[i];
        if (std::abs(a) <= t0 || std::abs(b) <= t1 || (a > 0.0) != (b > 0.0)) {
            continue;
        }
        const double ratio = b / a;
        v[i] = std::log(ratio);
        ++out.retained;
        out.max_ratio = std::max(out.max_ratio, ratio);
        if (v[i] > 0.0) {
            ++violations;
        }
    }
    out.violation_fraction =
        out.retained ? static_cast<double>(violations) / static_cast<double>(out.retained) : 0.0;
    out.field = GridFunction(u0.grid(), std::move(v));
    return out;
}

ControlStage static_log_control(const GridFunction& u0, const GridFunction& u1, double T, double band)
{
    if (!(T > 0.0)) {
        throw Error(Errc::invalid_argument, "steering time must be positive");
    }
    const LogRatio r = log_ratio(u0, u1, band);
    if (r.violation_fraction > 0.0) {
        std::ostringstream msg;
        msg << "|u1| exceeds |u0| on a fraction " << r.violation_fraction
            << " of the retained nodes (max ratio " << r.max_ratio << "); amplify first";
        throw Error(Errc::assumption_a1, msg.str());
    }
    return ControlStage{r.field.scaled(1.0 / T), T, "log-control"};
}

ControlStage amplification_stage(const GridFunction& u0, double L, double t_star)
{
    if (!(L >= 1.0) || !(t_star > 0.0)) {
        throw Error(Errc::invalid_argument, "amplification needs L >= 1 and t_star > 0");
    }
    return ControlStage{GridFunction::constant(u0.grid(), std::log(L) / t_star), t_star, "amplification"};
}

double spectral_shift_offset(double c0, double alpha, double T)
{
    if (!(c0 > 0.0)) {
        throw Error(Errc::wrong_sign, "target coefficient c0 = " + std::to_string(c0) +
                                          " is not positive; flip the target sign upstream");
    }
    if (!(alpha > 0.0) || !(T > 0.0)) {
        throw Error(Errc::invalid_argument, "alpha and T must be positive");
    }
    return std::log(alpha / c0) / T;
}

ControlStage spectral_shift_schedule(const GridFunction& v0, double lambda_target, double gap, double c0,
                                     double alpha, double T, double gap_tol)
{
    const double a = spectral_shift_offset(c0, alpha, T);
    if (!(gap > gap_tol)) {
        throw Error(Errc::degenerate_gap, "spectral gap " + std::to_string(gap) + " is not above tolerance");
    }
    const double shift = a - lambda_target;
    return ControlStage{v0.map([shift](double x) { return x + shift; }), T, "spectral-shift"};
}

}  // namespace bsteer
