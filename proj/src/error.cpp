#include "bsteer/error.hpp"

namespace bsteer {

std::string_view to_string(Errc code) noexcept
{
    switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::grid_mismatch: return "grid_mismatch";
    case Errc::axis_mismatch: return "axis_mismatch";
    case Errc::non_axis_aligned: return "non_axis_aligned";
    case Errc::ambiguous_sign: return "ambiguous_sign";
    case Errc::oscillation_violation: return "oscillation_violation";
    case Errc::unbounded_potential: return "unbounded_potential";
    case Errc::degenerate_target: return "degenerate_target";
    case Errc::blow_up: return "blow_up";
    case Errc::assumption_a1: return "assumption_a1";
    case Errc::wrong_sign: return "wrong_sign";
    case Errc::degenerate_gap: return "degenerate_gap";
    case Errc::rank_deficient: return "rank_deficient";
    case Errc::payoff_degenerate: return "payoff_degenerate";
    case Errc::no_valid_probe: return "no_valid_probe";
    case Errc::pattern_mismatch: return "pattern_mismatch";
    case Errc::assumption_failure: return "assumption_failure";
    case Errc::coupling_infeasible: return "coupling_infeasible";
    case Errc::config: return "config";
    }
    return "unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
{
}

}  // namespace bsteer
