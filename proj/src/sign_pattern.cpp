#include "bsteer/sign_pattern.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include "bsteer/error.hpp"

namespace bsteer {

namespace {

// Longest admissible neutral run between signed nodes, in nodes.
constexpr std::size_t max_neutral_run = 3;

int classify(double v, double tol)
{
    if (v > tol) {
        return 1;
    }
    if (v < -tol) {
        return -1;
    }
    return 0;
}

struct TraceScan {
    std::vector<double> changes;
    int first_sign = 0;
    bool ambiguous = false;
};

TraceScan scan_trace(std::span<const double> x, std::span<const double> v, double tol)
{
    TraceScan out;
    const std::size_t n = v.size();
    std::ptrdiff_t last = -1;
    int last_sign = 0;
    // Interior nodes only; the ends carry the boundary condition.
    for (std::size_t j = 1; j + 1 < n; ++j) {
        const int s = classify(v[j], tol);
        if (s == 0) {
            continue;
        }
        const std::size_t run_start = last < 0 ? 1 : static_cast<std::size_t>(last) + 1;
        if (j - run_start > max_neutral_run) {
            out.ambiguous = true;
        }
        if (last_sign == 0) {
            out.first_sign = s;
        } else if (s != last_sign) {
            const auto i = static_cast<std::size_t>(last);
            double loc = 0.0;
            if (j == i + 1) {
                loc = x[i] + v[i] / (v[i] - v[j]) * (x[j] - x[i]);
            } else {
                loc = 0.5 * (x[i + 1] + x[j - 1]);
            }
            out.changes.push_back(loc);
        }
        last = static_cast<std::ptrdiff_t>(j);
        last_sign = s;
    }
    if (last_sign == 0 || (n - 2) - static_cast<std::size_t>(last) > max_neutral_run) {
        out.ambiguous = true;
    }
    return out;
}

// Calls fn(anchor) for each axis-parallel line along `axis` whose other
// coordinates are interior.
template <class Fn>
void for_each_interior_line(const Grid& g, std::size_t axis, Fn&& fn)
{
    std::vector<std::size_t> idx(g.dim(), 0);
    for (std::size_t flat = 0; flat < g.size(); ++flat) {
        g.unflatten(flat, idx);
        if (idx[axis] != 0) {
            continue;
        }
        bool interior = true;
        for (std::size_t a = 0; a < g.dim(); ++a) {
            if (a != axis && (idx[a] == 0 || idx[a] == g.axis(a).cells())) {
                interior = false;
            }
        }
        if (interior) {
            fn(flat);
        }
    }
}

}  // namespace

std::vector<std::size_t> SignPattern::counts() const
{
    std::vector<std::size_t> c;
    for (const auto& ax : changes) {
        c.push_back(ax.size());
    }
    return c;
}

int SignPattern::sign_at(std::span<const double> point) const
{
    int s = first_sign;
    for (std::size_t a = 0; a < changes.size() && a < point.size(); ++a) {
        for (double c : changes[a]) {
            if (point[a] > c) {
                s = -s;
            }
        }
    }
    return s;
}

double default_sign_tolerance(const GridFunction& f)
{
    return 1e-9 * f.max_abs();
}

std::vector<double> trace_sign_changes(std::span<const double> nodes, std::span<const double> values, double tol)
{
    if (nodes.size() != values.size()) {
        throw Error(Errc::invalid_argument, "trace nodes and values differ in length");
    }
    return scan_trace(nodes, values, tol).changes;
}

SignPattern detect_pattern(const GridFunction& f, std::optional<double> tol)
{
    const Grid& g = f.grid();
    const double t = tol.value_or(default_sign_tolerance(f));
    if (!(f.max_abs() > t)) {
        throw Error(Errc::ambiguous_sign, "function is sign-neutral everywhere");
    }
    SignPattern p;
    p.changes.resize(g.dim());
    int corner_sign = 0;
    for (std::size_t axis = 0; axis < g.dim(); ++axis) {
        const auto x = g.axis(axis).nodes();
        const double slack = 2.0 * g.axis(axis).spacing();
        std::vector<double> sum;
        std::size_t lines = 0;
        std::vector<double> reference;
        for_each_interior_line(g, axis, [&](std::size_t anchor) {
            const auto vals = line_values(f, axis, anchor);
            const TraceScan s = scan_trace(x, vals, t);
            if (s.ambiguous) {
                throw Error(Errc::ambiguous_sign, "sign-neutral cell along axis " + std::to_string(axis + 1));
            }
            if (lines == 0) {
                reference = s.changes;
                sum.assign(s.changes.size(), 0.0);
            } else {
                if (s.changes.size() != reference.size()) {
                    throw Error(Errc::non_axis_aligned, "parallel lines along axis " + std::to_string(axis + 1) +
                                                            " disagree on interface count");
                }
                for (std::size_t k = 0; k < reference.size(); ++k) {
                    if (std::abs(s.changes[k] - reference[k]) > slack) {
                        throw Error(Errc::non_axis_aligned, "interface along axis " + std::to_string(axis + 1) +
                                                                " moves by more than 2 cells across lines");
                    }
                }
            }
            for (std::size_t k = 0; k < s.changes.size(); ++k) {
                sum[k] += s.changes[k];
            }
            ++lines;
        });
        for (double& s : sum) {
            s /= static_cast<double>(lines);
        }
        p.changes[axis] = std::move(sum);
    }
    // First-cell sign: scan the first interior line of axis 0 from the
    // lower-corner side; the first signed node lies in the first cell along
    // that axis, and crossing no other interface is guaranteed by alignment.
    for_each_interior_line(g, 0, [&](std::size_t anchor) {
        if (corner_sign != 0) {
            return;
        }
        const auto vals = line_values(f, 0, anchor);
        auto pt = g.point(anchor);
        for (std::size_t j = 1; j + 1 < vals.size(); ++j) {
            const int s = classify(vals[j], t);
            if (s != 0) {
                pt[0] = g.axis(0).node(j);
                // Undo the alternation picked up along the other axes and along axis 0.
                SignPattern probe{p.changes, 1};
                corner_sign = s * probe.sign_at(pt);
                return;
            }
        }
    });
    p.first_sign = corner_sign == 0 ? 1 : corner_sign;
    return p;
}

bool same_pattern(const SignPattern& p, const SignPattern& q, double tol)
{
    if (p.dim() != q.dim() || p.first_sign != q.first_sign) {
        return false;
    }
    for (std::size_t a = 0; a < p.dim(); ++a) {
        if (p.changes[a].size() != q.changes[a].size()) {
            return false;
        }
        for (std::size_t k = 0; k < p.changes[a].size(); ++k) {
            if (std::abs(p.changes[a][k] - q.changes[a][k]) > tol) {
                return false;
            }
        }
    }
    return true;
}

std::vector<std::size_t> interface_counts(const GridFunction& f, std::optional<double> tol)
{
    const Grid& g = f.grid();
    const double t = tol.value_or(default_sign_tolerance(f));
    std::vector<std::size_t> out(g.dim(), 0);
    for (std::size_t axis = 0; axis < g.dim(); ++axis) {
        const auto x = g.axis(axis).nodes();
        std::map<std::size_t, std::size_t> histogram;
        for_each_interior_line(g, axis, [&](std::size_t anchor) {
            const auto vals = line_values(f, axis, anchor);
            ++histogram[scan_trace(x, vals, t).changes.size()];
        });
        std::size_t best = 0;
        std::size_t best_count = 0;
        for (const auto& [count, freq] : histogram) {
            if (freq > best_count) {
                best = count;
                best_count = freq;
            }
        }
        out[axis] = best;
    }
    return out;
}

bool interface_count_monotone(std::span<const std::vector<std::size_t>> counts)
{
    for (std::size_t i = 1; i < counts.size(); ++i) {
        const auto& prev = counts[i - 1];
        const auto& cur = counts[i];
        if (prev.size() != cur.size()) {
            return false;
        }
        for (std::size_t a = 0; a < cur.size(); ++a) {
            if (cur[a] > prev[a]) {
                return false;
            }
        }
    }
    return true;
}

bool interface_count_monotone(std::span<const SignPattern> patterns)
{
    std::vector<std::vector<std::size_t>> counts;
    counts.reserve(patterns.size());
    for (const auto& p : patterns) {
        counts.push_back(p.counts());
    }
    return interface_count_monotone(std::span<const std::vector<std::size_t>>(counts));
}

std::string to_text(const SignPattern& p)
{
    std::ostringstream out;
    out << std::setprecision(12);
    out << "dim = " << p.dim() << '\n';
    out << "first_sign = " << (p.first_sign > 0 ? "+1" : "-1") << '\n';
    for (std::size_t a = 0; a < p.dim(); ++a) {
        out << "axis" << (a + 1) << " =";
        for (double c : p.changes[a]) {
            out << ' ' << c;
        }
        out << '\n';
    }
    return out.str();
}

SignPattern pattern_from_text(std::string_view text)
{
    std::istringstream in{std::string(text)};
    std::string line;
    SignPattern p;
    std::size_t dim = 0;
    bool have_dim = false;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            continue;
        }
        std::string key = line.substr(0, eq);
        key.erase(key.find_last_not_of(" \t") + 1);
        std::istringstream rest(line.substr(eq + 1));
        if (key == "dim") {
            rest >> dim;
            p.changes.assign(dim, {});
            have_dim = true;
        } else if (key == "first_sign") {
            int s = 0;
            rest >> s;
            p.first_sign = s < 0 ? -1 : 1;
        } else if (key.rfind("axis", 0) == 0 && have_dim) {
            const std::size_t a = std::stoul(key.substr(4)) - 1;
            if (a >= dim) {
                throw Error(Errc::invalid_argument, "pattern text names axis beyond its dimension");
            }
            double c = 0.0;
            while (rest >> c) {
                p.changes[a].push_back(c);
            }
        }
    }
    if (!have_dim) {
        throw Error(Errc::invalid_argument, "pattern text lacks a dim line");
    }
    return p;
}

}  // namespace bsteer
