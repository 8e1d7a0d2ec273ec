#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "bsteer/control_synthesis.hpp"
#include "bsteer/error.hpp"

namespace bsteer {

namespace {

constexpr double rank_tol = 1e-8;

// Sign of the cell containing x given the first-cell sign and change points.
int cell_sign(std::span<const double> points, int first_sign, double x)
{
    int s = first_sign < 0 ? -1 : 1;
    for (double p : points) {
        if (x > p) {
            s = -s;
        }
    }
    return s;
}

// Rows: modes 0..rows-1. Columns: points.
Eigen::MatrixXd mode_matrix(const SpectralBasis1D& basis, std::size_t rows, std::span<const double> points)
{
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(points.size()));
    for (std::size_t j = 0; j < rows; ++j) {
        for (std::size_t i = 0; i < points.size(); ++i) {
            m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = basis.mode_at(j, points[i]);
        }
    }
    return m;
}

Eigen::VectorXd null_vector(const Eigen::MatrixXd& m)
{
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
    return svd.matrixV().col(svd.matrixV().cols() - 1);
}

double piece_moment(const SpectralBasis1D& basis, const std::vector<ProfilePiece>& pieces, std::size_t j)
{
    double acc = 0.0;
    for (const auto& p : pieces) {
        acc += p.value * basis.mode_integral(j, p.lo, p.hi);
    }
    return acc;
}

}  // namespace

void MomentProblemSpec::validate() const
{
    if (!basis) {
        throw Error(Errc::invalid_argument, "moment problem needs a basis");
    }
    const auto& ax = basis->axis();
    if (target_mode < 1 || target_mode > basis->size()) {
        throw Error(Errc::invalid_argument, "target mode outside the computed basis");
    }
    if (points.size() + 1 != target_mode) {
        throw Error(Errc::invalid_argument, "mode k needs exactly k-1 change points");
    }
    if (!(half_width > 0.0)) {
        throw Error(Errc::invalid_argument, "half width must be positive");
    }
    std::vector<std::pair<double, double>> supports;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (i > 0 && !(points[i] > points[i - 1])) {
            throw Error(Errc::invalid_argument, "change points must be strictly increasing");
        }
        supports.emplace_back(points[i] - half_width, points[i] + half_width);
    }
    supports.emplace_back(probe, probe + half_width);
    std::sort(supports.begin(), supports.end());
    for (std::size_t i = 0; i < supports.size(); ++i) {
        if (supports[i].first < ax.lo() || supports[i].second > ax.hi()) {
            throw Error(Errc::invalid_argument, "a support interval leaves the axis");
        }
        if (i > 0 && supports[i].first < supports[i - 1].second) {
            throw Error(Errc::invalid_argument, "support intervals overlap");
        }
    }
}

double MomentSolution::max_residual() const noexcept
{
    double m = 0.0;
    for (double r : residuals) {
        m = std::max(m, std::abs(r));
    }
    return m;
}

bool check_assumption_31(const SpectralBasis1D& basis, std::span<const double> points)
{
    if (points.empty()) {
        return true;
    }
    if (points.size() > basis.size()) {
        throw Error(Errc::invalid_argument, "more points than computed modes");
    }
    const Eigen::MatrixXd m = mode_matrix(basis, points.size(), points);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& s = svd.singularValues();
    return s(s.size() - 1) > rank_tol * s(0);
}

bool check_assumption_32(const SpectralBasis1D& basis, std::span<const double> points, std::size_t k)
{
    if (points.size() + 1 != k) {
        throw Error(Errc::invalid_argument, "mode k needs exactly k-1 points");
    }
    if (points.empty()) {
        return true;
    }
    const auto K = static_cast<Eigen::Index>(points.size());
    const Eigen::MatrixXd rows = mode_matrix(basis, points.size(), points);
    Eigen::VectorXd y(K);
    for (Eigen::Index i = 0; i < K; ++i) {
        y(i) = basis.mode_at(k - 1, points[static_cast<std::size_t>(i)]);
    }
    const double ynorm = y.norm();
    if (!(ynorm > 0.0)) {
        return false;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(rows, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    Eigen::Index rank = 0;
    while (rank < s.size() && s(rank) > rank_tol * s(0)) {
        ++rank;
    }
    const Eigen::Index keep = std::min(rank, K - 1);
    Eigen::VectorXd r = y;
    for (Eigen::Index c = 0; c < keep; ++c) {
        const Eigen::VectorXd v = svd.matrixV().col(c);
        r -= v.dot(y) * v;
    }
    return r.norm() > rank_tol * ynorm;
}

double probe_residual(const SpectralBasis1D& basis, std::span<const double> points, std::size_t k, double s)
{
    std::vector<double> ext(points.begin(), points.end());
    ext.push_back(s);
    const Eigen::MatrixXd all = mode_matrix(basis, k, ext);
    const Eigen::VectorXd target = all.row(static_cast<Eigen::Index>(k - 1)).transpose();
    if (k == 1) {
        return target.norm();
    }
    const Eigen::MatrixXd lower = all.topRows(static_cast<Eigen::Index>(k - 1)).transpose();
    const Eigen::VectorXd coef = lower.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(target);
    return (target - lower * coef).norm();
}

double select_probe_point(const SpectralBasis1D& basis, std::span<const double> points, std::size_t k,
                          std::size_t candidates, double half_width)
{
    if (candidates < 16) {
        throw Error(Errc::invalid_argument, "probe scan needs at least 16 candidates");
    }
    const auto& ax = basis.axis();
    const double len = ax.hi() - ax.lo();
    const double eps = 1e-9 * len;
    double best = -1.0;
    double best_s = 0.0;
    for (std::size_t c = 0; c < candidates; ++c) {
        const double s = ax.lo() + len * static_cast<double>(c + 1) / static_cast<double>(candidates + 1);
        if (s + half_width > ax.hi()) {
            continue;
        }
        const bool clash = std::any_of(points.begin(), points.end(), [&](double x) {
            if (half_width > 0.0) {
                return s + half_width > x - half_width + eps && s < x + half_width - eps;
            }
            return std::abs(s - x) < eps;
        });
        if (clash) {
            continue;
        }
        const double r = probe_residual(basis, points, k, s);
        if (r > best) {
            best = r;
            best_s = s;
        }
    }
    if (!(best >= 1e-10)) {
        throw Error(Errc::no_valid_probe, "every probe candidate leaves the payoff degenerate");
    }
    return best_s;
}

MomentSolution solve_moment_cone(const MomentProblemSpec& spec)
{
    spec.validate();
    const SpectralBasis1D& basis = *spec.basis;
    const std::size_t k = spec.target_mode;
    const std::size_t K = k - 1;
    const double h = spec.half_width;
    const int probe_sign = cell_sign(spec.points, spec.first_sign, spec.probe + 0.5 * h);

    std::vector<double> V(K, 0.0);
    double P = 0.0;
    bool probe_free = false;
    if (K == 0) {
        P = probe_sign;
    } else if (check_assumption_31(basis, spec.points)) {
        std::vector<double> ext(spec.points);
        ext.push_back(spec.probe);
        const Eigen::VectorXd n = null_vector(mode_matrix(basis, K, ext));
        for (std::size_t j = 0; j < K; ++j) {
            V[j] = n(static_cast<Eigen::Index>(j));
        }
        P = n(static_cast<Eigen::Index>(K));
        if (P * probe_sign < 0.0) {
            for (double& v : V) {
                v = -v;
            }
            P = -P;
        }
    } else if (check_assumption_32(basis, spec.points, k)) {
        probe_free = true;
        const Eigen::VectorXd n = null_vector(mode_matrix(basis, K, spec.points));
        for (std::size_t j = 0; j < K; ++j) {
            V[j] = n(static_cast<Eigen::Index>(j));
        }
    } else {
        throw Error(Errc::rank_deficient, "change points fail both the rank and the span conditions");
    }

    auto assemble = [&] {
        std::vector<ProfilePiece> pieces;
        for (std::size_t j = 0; j < K; ++j) {
            if (V[j] == 0.0) {
                continue;
            }
            const double x = spec.points[j];
            const int left = cell_sign(spec.points, spec.first_sign, x - 0.5 * h);
            if ((V[j] > 0.0) == (left > 0)) {
                pieces.push_back({x - h, x, V[j] / h});
            } else {
                pieces.push_back({x, x + h, V[j] / h});
            }
        }
        if (P != 0.0) {
            pieces.push_back({spec.probe, spec.probe + h, P / h});
        }
        std::sort(pieces.begin(), pieces.end(), [](const auto& a, const auto& b) { return a.lo < b.lo; });
        return pieces;
    };

    auto pieces = assemble();
    double mu = piece_moment(basis, pieces, k - 1);
    double mass = 0.0;
    for (const auto& p : pieces) {
        mass += std::abs(p.value) * (p.hi - p.lo);
    }
    const double mode_peak = basis.mode(k - 1).max_abs();
    if (!(std::abs(mu) > 1e-12 * mass * mode_peak)) {
        throw Error(Errc::payoff_degenerate, "the target-mode functional vanishes on the null space");
    }
    if (probe_free && mu * spec.first_sign < 0.0) {
        for (double& v : V) {
            v = -v;
        }
    }
    const double scale = 1.0 / std::abs(mu);
    for (double& v : V) {
        v *= scale;
    }
    P *= scale;
    pieces = assemble();

    MomentSolution out{V, P, probe_free, pieces, GridFunction::constant(Grid(basis.axis()), 0.0), {}, 0.0};
    const auto& ax = basis.axis();
    std::vector<double> vals(ax.size(), 0.0);
    for (std::size_t i = 0; i < ax.size(); ++i) {
        const double x = ax.node(i);
        for (const auto& p : pieces) {
            if (x >= p.lo && x < p.hi) {
                vals[i] = p.value;
            }
        }
    }
    out.profile = GridFunction(Grid(ax), std::move(vals));
    for (std::size_t j = 0; j < K; ++j) {
        out.residuals.push_back(piece_moment(basis, pieces, j));
    }
    out.payoff = piece_moment(basis, pieces, k - 1);
    return out;
}

std::string to_text(const MomentSolution& s)
{
    std::ostringstream out;
    out << std::setprecision(12);
    out << "P = " << s.probe_amplitude << '\n';
    out << "V =";
    for (double v : s.amplitudes) {
        out << ' ' << v;
    }
    out << "\nprobe_free = " << (s.probe_free ? "true" : "false") << '\n';
    out << "residuals =";
    for (double r : s.residuals) {
        out << ' ' << r;
    }
    out << "\npayoff = " << s.payoff << '\n';
    for (const auto& p : s.pieces) {
        out << "piece = " << p.lo << ' ' << p.hi << ' ' << p.value << '\n';
    }
    return out.str();
}

}  // namespace bsteer
