#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bsteer {

enum class Errc {
    invalid_argument,
    grid_mismatch,
    axis_mismatch,
    non_axis_aligned,
    ambiguous_sign,
    oscillation_violation,
    unbounded_potential,
    degenerate_target,
    blow_up,
    assumption_a1,
    wrong_sign,
    degenerate_gap,
    rank_deficient,
    payoff_degenerate,
    no_valid_probe,
    pattern_mismatch,
    assumption_failure,
    coupling_infeasible,
    config,
};

/// Stable machine-readable name, e.g. "blow_up".
std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message);
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace bsteer
