#include "bsteer/pde_solver.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "bsteer/error.hpp"
#include "bsteer/sign_pattern.hpp"
#include "bsteer/tridiagonal.hpp"

namespace bsteer {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

// Interior nodes of a grid, in the same axis-0-fastest order.
struct Interior {
    explicit Interior(const Grid& g)
    {
        std::size_t s = 1;
        for (const auto& ax : g.axes()) {
            dims.push_back(ax.cells() - 1);
            strides.push_back(s);
            inv_h2.push_back(1.0 / (ax.spacing() * ax.spacing()));
            s *= ax.cells() - 1;
        }
        size = s;
        to_full.resize(size);
        std::vector<std::size_t> k(dims.size());
        std::vector<std::size_t> full(dims.size());
        for (std::size_t i = 0; i < size; ++i) {
            std::size_t r = i;
            for (std::size_t a = 0; a < dims.size(); ++a) {
                k[a] = r % dims[a];
                r /= dims[a];
                full[a] = k[a] + 1;
            }
            to_full[i] = g.flatten(full);
        }
    }

    std::vector<std::size_t> dims;
    std::vector<std::size_t> strides;
    std::vector<double> inv_h2;
    std::vector<std::size_t> to_full;
    std::size_t size = 0;
};

// Interior generator A = Lap_h + diag(v) as a sparse matrix.
SpMat generator(const Interior& in, std::span<const double> v)
{
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(in.size * (1 + 2 * in.dims.size()));
    for (std::size_t i = 0; i < in.size; ++i) {
        double diag = v[i];
        for (std::size_t a = 0; a < in.dims.size(); ++a) {
            const std::size_t k = (i / in.strides[a]) % in.dims[a];
            diag -= 2.0 * in.inv_h2[a];
            if (k > 0) {
                trip.emplace_back(static_cast<int>(i), static_cast<int>(i - in.strides[a]), in.inv_h2[a]);
            }
            if (k + 1 < in.dims[a]) {
                trip.emplace_back(static_cast<int>(i), static_cast<int>(i + in.strides[a]), in.inv_h2[a]);
            }
        }
        trip.emplace_back(static_cast<int>(i), static_cast<int>(i), diag);
    }
    SpMat A(static_cast<int>(in.size), static_cast<int>(in.size));
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

// Holds the factorization of I - (h/2) A for one field and step h.
class CrankNicolson {
public:
    CrankNicolson(const Interior& in, std::span<const double> v, double h) : in_(in), h_(h), v_(v.begin(), v.end())
    {
        if (in.dims.size() == 1) {
            const std::size_t n = in.size;
            const double c = 0.5 * h * in.inv_h2[0];
            std::vector<double> diag(n);
            for (std::size_t i = 0; i < n; ++i) {
                diag[i] = 1.0 + 2.0 * c - 0.5 * h * v[i];
            }
            tri_ = TridiagonalSolver(std::vector<double>(n - 1, -c), std::move(diag), std::vector<double>(n - 1, -c));
            return;
        }
        A_ = generator(in, v);
        SpMat I(A_.rows(), A_.cols());
        I.setIdentity();
        const SpMat lhs = I - (0.5 * h) * A_;
        ldlt_.compute(lhs);
        if (ldlt_.info() != Eigen::Success) {
            throw Error(Errc::invalid_argument, "Crank-Nicolson matrix is not positive definite");
        }
    }

    double step() const noexcept { return h_; }

    // u <- (I - h/2 A)^{-1} u
    void implicit_half(std::vector<double>& u) const
    {
        if (in_.dims.size() == 1) {
            tri_.solve_in_place(u);
            return;
        }
        Eigen::Map<Eigen::VectorXd> x(u.data(), static_cast<Eigen::Index>(u.size()));
        x = ldlt_.solve(Eigen::VectorXd(x));
    }

    // u <- (I + h/2 A) u
    void explicit_half(std::vector<double>& u) const
    {
        if (in_.dims.size() == 1) {
            const std::size_t n = u.size();
            const double c = 0.5 * h_ * in_.inv_h2[0];
            double prev = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double cur = u[i];
                const double next = i + 1 < n ? u[i + 1] : 0.0;
                u[i] = cur + c * (prev - 2.0 * cur + next) + 0.5 * h_ * v_[i] * cur;
                prev = cur;
            }
            return;
        }
        Eigen::Map<Eigen::VectorXd> x(u.data(), static_cast<Eigen::Index>(u.size()));
        const Eigen::VectorXd ax = A_ * x;
        x += (0.5 * h_) * ax;
    }

private:
    const Interior& in_;
    double h_;
    std::vector<double> v_;
    TridiagonalSolver tri_;
    SpMat A_;
    Eigen::SimplicialLDLT<SpMat> ldlt_;
};

GridFunction to_full(const Grid& g, const Interior& in, const std::vector<double>& u)
{
    std::vector<double> v(g.size(), 0.0);
    for (std::size_t i = 0; i < in.size; ++i) {
        v[in.to_full[i]] = u[i];
    }
    return GridFunction(g, std::move(v), true);
}

double cell_volume(const Grid& g)
{
    double vol = 1.0;
    for (const auto& ax : g.axes()) {
        vol *= ax.spacing();
    }
    return vol;
}

StepDiagnostic diagnose(double t, const GridFunction& u)
{
    return StepDiagnostic{t, l2_norm(u), u.min(), u.max(), interface_counts(u)};
}

}  // namespace

ControlSchedule::ControlSchedule(std::vector<ControlStage> stages)
{
    for (auto& s : stages) {
        append(std::move(s));
    }
}

void ControlSchedule::append(ControlStage stage)
{
    if (!(stage.duration > 0.0) || !std::isfinite(stage.duration)) {
        throw Error(Errc::invalid_argument, "stage '" + stage.label + "' needs a positive duration");
    }
    if (!stages_.empty() && !(stage.field.grid() == stages_.front().field.grid())) {
        throw Error(Errc::grid_mismatch, "stage '" + stage.label + "' lives on a different grid");
    }
    stages_.push_back(std::move(stage));
}

double ControlSchedule::total_duration() const noexcept
{
    double t = 0.0;
    for (const auto& s : stages_) {
        t += s.duration;
    }
    return t;
}

double stage_time_step(double requested, double duration, double max_abs_field)
{
    double dt = std::min({requested, 1e-3, duration / 50.0});
    if (max_abs_field > 0.0) {
        dt = std::min(dt, 0.1 / max_abs_field);
    }
    return dt;
}

Trajectory simulate(const GridFunction& u0, const ControlSchedule& schedule, double dt,
                    const SimulationOptions& options)
{
    if (!(dt > 0.0)) {
        throw Error(Errc::invalid_argument, "time step must be positive");
    }
    const Grid& g = u0.grid();
    const double peak = u0.max_abs();
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.on_boundary(i) && std::abs(u0[i]) > 1e-12 * std::max(peak, 1.0)) {
            throw Error(Errc::invalid_argument, "initial state violates the Dirichlet condition");
        }
    }
    for (const auto& st : schedule.stages()) {
        if (!(st.field.grid() == g)) {
            throw Error(Errc::grid_mismatch, "stage '" + st.label + "' field is not on the state grid");
        }
    }
    const Interior in(g);
    if (in.size == 0) {
        throw Error(Errc::invalid_argument, "grid has no interior nodes");
    }
    const double vol = cell_volume(g);

    std::vector<double> u(in.size);
    for (std::size_t i = 0; i < in.size; ++i) {
        u[i] = u0[in.to_full[i]];
    }
    Trajectory traj{u0.with_dirichlet(), {}, {}, {}, {}, {}, {}, {}};
    traj.times.push_back(0.0);
    traj.snapshots.push_back(traj.initial);
    traj.snapshot_stage.push_back(0);
    traj.diagnostics.push_back(diagnose(0.0, traj.initial));

    auto extra = options.snapshot_times;
    std::sort(extra.begin(), extra.end());

    double t0 = 0.0;
    for (std::size_t s = 0; s < schedule.size(); ++s) {
        const auto& stage = schedule.stages()[s];
        const double t1 = t0 + stage.duration;
        std::vector<double> v(in.size);
        for (std::size_t i = 0; i < in.size; ++i) {
            v[i] = stage.field[in.to_full[i]];
        }
        const double vmax = stage.field.max_abs();
        if (!std::isfinite(vmax)) {
            throw Error(Errc::invalid_argument, "stage '" + stage.label + "' field is not finite");
        }
        const double h_cap = stage_time_step(dt, stage.duration, vmax);
        const auto stage_steps = static_cast<std::size_t>(std::ceil(stage.duration / h_cap - 1e-9));
        const std::size_t stride =
            std::max<std::size_t>(1, stage_steps / std::max<std::size_t>(1, options.diagnostics_per_stage));

        std::vector<double> breaks{t0};
        for (double ts : extra) {
            if (ts > t0 + 1e-12 && ts < t1 - 1e-12) {
                breaks.push_back(ts);
            }
        }
        breaks.push_back(t1);

        std::unique_ptr<CrankNicolson> cn;
        bool first_step = true;
        std::size_t step_count = 0;
        std::vector<double> tmp;
        for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
            const double len = breaks[b + 1] - breaks[b];
            const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / h_cap - 1e-9)));
            const double h = len / static_cast<double>(n);
            if (!cn || std::abs(cn->step() - h) > 1e-14 * h) {
                cn = std::make_unique<CrankNicolson>(in, v, h);
            }
            for (std::size_t k = 0; k < n; ++k) {
                if (first_step && options.damped_startup) {
                    cn->implicit_half(u);
                    cn->implicit_half(u);
                } else {
                    cn->explicit_half(u);
                    cn->implicit_half(u);
                }
                first_step = false;
                ++step_count;
                double sq = 0.0;
                for (double x : u) {
                    sq += x * x;
                }
                const double norm = std::sqrt(sq * vol);
                if (!(norm <= options.blow_up_norm)) {
                    throw Error(Errc::blow_up, "stage '" + stage.label + "': ||u|| exceeded " +
                                                   std::to_string(options.blow_up_norm));
                }
                const double t = (k + 1 == n) ? breaks[b + 1] : breaks[b] + static_cast<double>(k + 1) * h;
                const bool at_break = k + 1 == n;
                if (at_break || options.snapshot_every_step || step_count % stride == 0) {
                    GridFunction full = to_full(g, in, u);
                    if (at_break || step_count % stride == 0) {
                        traj.diagnostics.push_back(diagnose(t, full));
                    }
                    if (at_break || options.snapshot_every_step) {
                        traj.times.push_back(t);
                        traj.snapshot_stage.push_back(s);
                        traj.snapshots.push_back(std::move(full));
                    }
                }
            }
        }
        traj.stage_end_times.push_back(t1);
        traj.stage_labels.push_back(stage.label);
        traj.stage_steps.push_back(h_cap);
        t0 = t1;
    }
    return traj;
}

GridFunction discrete_laplacian(const GridFunction& u)
{
    const Grid& g = u.grid();
    std::vector<double> out(g.size(), 0.0);
    std::vector<std::size_t> idx(g.dim());
    for (std::size_t flat = 0; flat < g.size(); ++flat) {
        if (g.on_boundary(flat)) {
            continue;
        }
        double acc = 0.0;
        for (std::size_t a = 0; a < g.dim(); ++a) {
            const double h = g.axis(a).spacing();
            const std::size_t s = g.stride(a);
            acc += (u[flat + s] - 2.0 * u[flat] + u[flat - s]) / (h * h);
        }
        out[flat] = acc;
    }
    return GridFunction(g, std::move(out), true);
}

CoefficientTrace fourier_trace(const Trajectory& trajectory, const SpectralBasisND& basis, std::size_t m)
{
    if (m > basis.size()) {
        throw Error(Errc::invalid_argument, "requested more coefficients than basis modes");
    }
    if (!(trajectory.initial.grid() == basis.grid())) {
        throw Error(Errc::grid_mismatch, "basis and trajectory grids differ");
    }
    CoefficientTrace out;
    out.times = trajectory.times;
    for (const auto& snap : trajectory.snapshots) {
        std::vector<double> c(m);
        for (std::size_t k = 0; k < m; ++k) {
            c[k] = inner_product(snap, basis.mode(k));
        }
        out.coefficients.push_back(std::move(c));
    }
    return out;
}

LawCheck check_exponential_law(const CoefficientTrace& trace, const SpectralBasisND& basis, double shift, double floor)
{
    LawCheck out;
    if (trace.coefficients.empty()) {
        return out;
    }
    const auto& c0 = trace.coefficients.front();
    double scale = 0.0;
    for (double c : c0) {
        scale = std::max(scale, std::abs(c));
    }
    for (std::size_t k = 0; k < c0.size(); ++k) {
        if (std::abs(c0[k]) <= floor * scale) {
            out.relative_deviation.push_back(-1.0);
            continue;
        }
        double worst = 0.0;
        for (std::size_t s = 0; s < trace.times.size(); ++s) {
            const double pred = c0[k] * std::exp((basis.eigenvalue(k) + shift) * trace.times[s]);
            worst = std::max(worst, std::abs(trace.coefficients[s][k] - pred) / std::abs(pred));
        }
        out.relative_deviation.push_back(worst);
        out.worst = std::max(out.worst, worst);
    }
    return out;
}

AppendixBound appendix_bound_check(const Trajectory& trajectory, const GridFunction& v0, double T, double slack)
{
    const Grid& g = trajectory.initial.grid();
    if (!(v0.grid() == g)) {
        throw Error(Errc::grid_mismatch, "v0 is not on the trajectory grid");
    }
    std::vector<double> acc(g.size(), 0.0);
    std::size_t last = 0;
    for (std::size_t s = 0; s < trajectory.times.size() && trajectory.times[s] <= T * (1.0 + 1e-12); ++s) {
        last = s;
    }
    if (last == 0) {
        throw Error(Errc::invalid_argument, "trajectory has no snapshots inside (0, T]");
    }
    // Trapezoid rule in time over the recorded snapshots.
    GridFunction prev = discrete_laplacian(trajectory.snapshots[0]);
    for (std::size_t s = 1; s <= last; ++s) {
        GridFunction cur = discrete_laplacian(trajectory.snapshots[s]);
        const double ta = trajectory.times[s - 1];
        const double tb = trajectory.times[s];
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double fa = std::exp(v0[i] * (T - ta) / T) * prev[i];
            const double fb = std::exp(v0[i] * (T - tb) / T) * cur[i];
            acc[i] += 0.5 * (tb - ta) * (fa + fb);
        }
        prev = std::move(cur);
    }
    AppendixBound out;
    const GridFunction inner(g, std::move(acc));
    out.lhs = inner_product(inner, inner);

    const GridFunction& u0 = trajectory.initial;
    const GridFunction& uT = trajectory.snapshots[last];
    std::vector<double> r(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        r[i] = uT[i] - std::exp(v0[i]) * u0[i];
    }
    const GridFunction resid(g, std::move(r));
    out.lhs_identity = inner_product(resid, resid);

    // Gradient energy of the piecewise-multilinear interpolant along each axis.
    double grad = 0.0;
    std::vector<std::size_t> idx(g.dim());
    for (std::size_t a = 0; a < g.dim(); ++a) {
        const double h = g.axis(a).spacing();
        for (std::size_t flat = 0; flat < g.size(); ++flat) {
            g.unflatten(flat, idx);
            if (idx[a] + 1 >= g.axis(a).size()) {
                continue;
            }
            double w = h;
            for (std::size_t b = 0; b < g.dim(); ++b) {
                if (b == a) {
                    continue;
                }
                const bool edge = idx[b] == 0 || idx[b] == g.axis(b).cells();
                w *= edge ? 0.5 * g.axis(b).spacing() : g.axis(b).spacing();
            }
            const double d = (u0[flat + g.stride(a)] - u0[flat]) / h;
            grad += w * d * d;
        }
    }
    const double lap_v0 = discrete_laplacian(v0).max_abs();
    out.rhs = 0.5 * T * grad + 0.5 * lap_v0 * T * T * inner_product(u0, u0);
    out.pass = out.lhs <= out.rhs * (1.0 + slack);
    return out;
}

TrajectoryInvariants check_invariants(const Trajectory& trajectory, double tol)
{
    TrajectoryInvariants out;
    const GridFunction& u0 = trajectory.initial;
    const double peak = u0.max_abs();
    out.nonnegative_data = u0.min() >= 0.0;
    double lowest = u0.min();
    std::vector<std::vector<std::size_t>> counts;
    for (const auto& d : trajectory.diagnostics) {
        lowest = std::min(lowest, d.min_value);
        counts.push_back(d.interface_counts);
    }
    for (const auto& s : trajectory.snapshots) {
        lowest = std::min(lowest, s.min());
    }
    out.min_ratio = peak > 0.0 ? lowest / peak : 0.0;
    out.sign_preserved = !out.nonnegative_data || lowest >= -tol * peak;
    out.interfaces_monotone = interface_count_monotone(std::span<const std::vector<std::size_t>>(counts));
    return out;
}

void write_snapshots(const std::filesystem::path& dir, const Trajectory& trajectory)
{
    std::filesystem::create_directories(dir);
    std::ofstream index(dir / "index.csv");
    index << std::setprecision(12) << "time,file,l2_norm,interface_counts\n";
    for (std::size_t s = 0; s < trajectory.snapshots.size(); ++s) {
        std::ostringstream name;
        name << "snapshot_" << std::setw(4) << std::setfill('0') << s << ".csv";
        std::ofstream f(dir / name.str());
        write_csv(f, trajectory.snapshots[s]);
        const auto counts = interface_counts(trajectory.snapshots[s]);
        index << trajectory.times[s] << ',' << name.str() << ',' << l2_norm(trajectory.snapshots[s]) << ',';
        for (std::size_t a = 0; a < counts.size(); ++a) {
            index << (a ? ";" : "") << counts[a];
        }
        index << '\n';
    }
}

}  // namespace bsteer
