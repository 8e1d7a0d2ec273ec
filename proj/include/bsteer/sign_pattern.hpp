#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bsteer/grid.hpp"

namespace bsteer {

/// Axis-aligned sign structure: ordered change coordinates per axis and
/// the sign of the cell touching the lower corner of the box.
struct SignPattern {
    std::vector<std::vector<double>> changes;
    int first_sign = 1;

    std::size_t dim() const noexcept { return changes.size(); }
    std::vector<std::size_t> counts() const;
    /// Sign of the cell containing `point`, from the alternation rule.
    int sign_at(std::span<const double> point) const;

    bool operator==(const SignPattern&) const = default;
};

/// 1e-9 * max|f|.
double default_sign_tolerance(const GridFunction& f);

/// Sign changes of one sampled trace. Values with |v| <= tol are neutral;
/// a change between adjacent signed nodes is located by linear
/// interpolation, across a neutral run by its midpoint.
std::vector<double> trace_sign_changes(std::span<const double> nodes, std::span<const double> values,
                                       double tol);

/// Throws non_axis_aligned when parallel lines disagree by more than 2*dx
/// and ambiguous_sign when a whole cell is sign-neutral.
SignPattern detect_pattern(const GridFunction& f, std::optional<double> tol = std::nullopt);

bool same_pattern(const SignPattern& p, const SignPattern& q, double tol);

/// Per-axis interface count as the most frequent count over interior
/// axis-parallel lines. Never throws; used for trajectory monitoring where
/// transient interfaces need not be straight.
std::vector<std::size_t> interface_counts(const GridFunction& f, std::optional<double> tol = std::nullopt);

bool interface_count_monotone(std::span<const std::vector<std::size_t>> counts);
bool interface_count_monotone(std::span<const SignPattern> patterns);

std::string to_text(const SignPattern& p);
SignPattern pattern_from_text(std::string_view text);

}  // namespace bsteer
