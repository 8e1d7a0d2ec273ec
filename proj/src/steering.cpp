#include "bsteer/steering.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <future>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "bsteer/error.hpp"
#include "bsteer/nodal_profile.hpp"

namespace bsteer {

namespace {

constexpr std::size_t extra_coefficients = 3;

double bump(double x, double start, double width)
{
    const double t = std::clamp((x - start) / width, 0.0, 1.0);
    const double s = std::sin(std::numbers::pi * t);
    return s * s;
}

// Multiplier bumps on one axis; amplitudes are the moment-problem weights.
struct AxisBumps {
    std::size_t axis = 0;
    std::vector<double> starts;
    std::vector<double> widths;
    std::vector<double> amplitudes;
    std::vector<double> masses;  // integral of |u0| times the bump over the box
    std::vector<bool> free;      // adjusted by shooting
};

GridFunction axis_bump(const Grid& g, std::size_t axis, double start, double width)
{
    return GridFunction::sample(g, [&](std::span<const double> x) { return bump(x[axis], start, width); });
}

std::vector<AxisBumps> layout_bumps(const SteeringPlan& plan)
{
    const Grid& g = plan.u0.grid();
    const GridFunction mag = plan.u0.map([](double x) { return std::abs(x); });
    std::vector<AxisBumps> out;
    for (std::size_t a = 0; a < plan.axes.size(); ++a) {
        const auto& ap = plan.axes[a];
        if (!ap.moment) {
            continue;
        }
        AxisBumps b;
        b.axis = a;
        bool anchored = false;
        for (const auto& piece : ap.moment->pieces) {
            const bool is_probe = std::abs(piece.lo - ap.moment_spec->probe) < 1e-12;
            b.starts.push_back(piece.lo);
            b.widths.push_back(piece.hi - piece.lo);
            b.amplitudes.push_back(std::abs(piece.value) * (piece.hi - piece.lo));
            b.masses.push_back(inner_product(mag, axis_bump(g, a, piece.lo, piece.hi - piece.lo)));
            b.free.push_back(!is_probe);
            anchored = anchored || is_probe;
        }
        if (!anchored && !b.free.empty()) {
            b.free.front() = false;
        }
        out.push_back(std::move(b));
    }
    return out;
}

// u* = u0 * peak * prod_i rho_i(x_i) with each rho_i scaled to max 1.
GridFunction presteer_target(const SteeringPlan& plan, const std::vector<AxisBumps>& bumps)
{
    const Grid& g = plan.u0.grid();
    const double total_mass = integral(plan.u0.map([](double x) { return std::abs(x); }));
    std::vector<double> rho(g.size(), plan.params.peak_ratio);
    for (const auto& b : bumps) {
        double weight = 0.0;
        for (double A : b.amplitudes) {
            weight += A;
        }
        const double floor = plan.params.background * weight / total_mass;
        const Grid1D& ax = g.axis(b.axis);
        std::vector<double> r(ax.size(), floor);
        for (std::size_t i = 0; i < ax.size(); ++i) {
            for (std::size_t q = 0; q < b.starts.size(); ++q) {
                r[i] += b.amplitudes[q] * bump(ax.node(i), b.starts[q], b.widths[q]) / b.masses[q];
            }
        }
        const double peak = *std::max_element(r.begin(), r.end());
        std::vector<std::size_t> idx(g.dim());
        for (std::size_t flat = 0; flat < g.size(); ++flat) {
            g.unflatten(flat, idx);
            rho[flat] *= r[idx[b.axis]] / peak;
        }
    }
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = plan.u0[i] * rho[i];
    }
    return GridFunction(g, std::move(v), true);
}

std::vector<double> leading_coefficients(const SpectralBasisND& basis, const GridFunction& u, std::size_t count)
{
    count = std::min(count, basis.size());
    std::vector<double> c(count);
    for (std::size_t k = 0; k < count; ++k) {
        c[k] = inner_product(u, basis.mode(k));
    }
    return c;
}

// Accumulates executed stages.
struct Runner {
    const SteeringPlan& plan;
    SteeringReport& report;
    GridFunction state;
    double clock = 0.0;
    std::vector<std::vector<std::size_t>> all_counts;

    GridFunction run(const ControlStage& control, StageKind kind, const GridFunction* target)
    {
        ControlSchedule single;
        single.append(control);
        const Trajectory traj = simulate(state, single, plan.params.dt);
        StageRecord rec{kind, control.label, clock, control.duration, traj.stage_steps.front(),
                        traj.final_state(), 0.0, {}, check_invariants(traj)};
        if (target != nullptr) {
            rec.target_distance = relative_l2_error(rec.end_state, *target);
        }
        if (plan.basis) {
            rec.coefficients =
                leading_coefficients(*plan.basis, rec.end_state, plan.target.position + 1 + extra_coefficients);
        }
        for (const auto& d : traj.diagnostics) {
            all_counts.push_back(d.interface_counts);
        }
        report.invariants_ok = report.invariants_ok && rec.invariants.ok();
        report.schedule.append(control);
        clock += control.duration;
        state = rec.end_state;
        report.stages.push_back(std::move(rec));
        return state;
    }

    // Log control to `to` over T, preceded by amplification when needed.
    void log_leg(const GridFunction& to, double T, StageKind kind, const std::string& label)
    {
        const auto& p = plan.params;
        const LogRatio r = log_ratio(state, to, p.log_band);
        if (r.violation_fraction > 0.0) {
            const double L = p.amplification_margin * r.max_ratio;
            const GridFunction scaled = state.scaled(L);
            auto amp = amplification_stage(state, L, p.amplification_fraction * T);
            amp.label = label + "/amplification";
            run(amp, StageKind::amplification, &scaled);
        }
        auto stage = static_log_control(state, to, T, p.log_band);
        stage.label = label;
        run(stage, kind, &to);
    }
};

// Forbidden-coefficient residual of the pre-steering stage.
struct PresteerOutcome {
    GridFunction target;
    GridFunction end;
    std::vector<double> coefficients;  // modes 0..k*
};

PresteerOutcome presteer_once(const SteeringPlan& plan, const std::vector<AxisBumps>& bumps, double T)
{
    const GridFunction target = presteer_target(plan, bumps);
    SteeringReport scratch{{}, {}, {}, target, 0.0, std::nullopt, {}, false, true};
    Runner r{plan, scratch, plan.u0, 0.0, {}};
    r.log_leg(target, T, StageKind::presteer, "presteer");
    auto c = leading_coefficients(*plan.basis, r.state, plan.target.position + 1);
    return PresteerOutcome{target, r.state, std::move(c)};
}

Eigen::VectorXd forbidden_ratio(const std::vector<double>& c, std::size_t pos)
{
    Eigen::VectorXd f(static_cast<Eigen::Index>(pos));
    for (std::size_t l = 0; l < pos; ++l) {
        f(static_cast<Eigen::Index>(l)) = c[l] / c[pos];
    }
    return f;
}

struct FreeParam {
    std::size_t group;
    std::size_t slot;
};

// Gauss-Newton on the log of the free bump amplitudes so that the measured
// forbidden coefficients of u(T_*) vanish.
std::size_t shoot(const SteeringPlan& plan, std::vector<AxisBumps>& bumps, double T, double& residual)
{
    std::vector<FreeParam> params;
    for (std::size_t gi = 0; gi < bumps.size(); ++gi) {
        for (std::size_t q = 0; q < bumps[gi].free.size(); ++q) {
            if (bumps[gi].free[q]) {
                params.push_back({gi, q});
            }
        }
    }
    const std::size_t pos = plan.target.position;
    auto evaluate = [&](const std::vector<AxisBumps>& b) {
        return forbidden_ratio(presteer_once(plan, b, T).coefficients, pos);
    };
    Eigen::VectorXd F = evaluate(bumps);
    residual = F.norm();
    if (params.empty() || pos == 0) {
        return 0;
    }
    const auto n = static_cast<Eigen::Index>(params.size());
    std::size_t it = 0;
    for (; it < plan.params.shooting_iterations && residual > plan.params.shooting_tol; ++it) {
        Eigen::MatrixXd J(F.size(), n);
        constexpr double step = 1e-6;
        for (Eigen::Index c = 0; c < n; ++c) {
            auto trial = bumps;
            auto& A = trial[params[static_cast<std::size_t>(c)].group].amplitudes[params[static_cast<std::size_t>(c)].slot];
            A *= std::exp(step);
            J.col(c) = (evaluate(trial) - F) / step;
        }
        const Eigen::VectorXd delta = -J.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(F);
        double damping = 1.0;
        bool improved = false;
        for (int tries = 0; tries < 12; ++tries, damping *= 0.5) {
            auto trial = bumps;
            for (Eigen::Index c = 0; c < n; ++c) {
                const auto& fp = params[static_cast<std::size_t>(c)];
                trial[fp.group].amplitudes[fp.slot] *= std::exp(damping * std::clamp(delta(c), -2.0, 2.0));
            }
            const Eigen::VectorXd Ft = evaluate(trial);
            if (Ft.norm() < residual) {
                bumps = std::move(trial);
                F = Ft;
                residual = Ft.norm();
                improved = true;
                break;
            }
        }
        if (!improved) {
            break;
        }
    }
    return it;
}

void finish(const SteeringPlan& plan, SteeringReport& report)
{
    report.final_error = relative_l2_error(report.final_state, plan.u1);
    try {
        report.final_pattern = detect_pattern(report.final_state);
        report.pattern_matches = same_pattern(*report.final_pattern, plan.target_pattern, plan.pattern_tolerance());
    } catch (const Error& e) {
        report.final_pattern_error = e.what();
        report.pattern_matches = false;
    }
}

}  // namespace

std::string_view to_string(StageKind kind) noexcept
{
    switch (kind) {
    case StageKind::amplification: return "amplification";
    case StageKind::presteer: return "presteer";
    case StageKind::spectral: return "spectral";
    case StageKind::magnitude: return "magnitude";
    }
    return "unknown";
}

SteeringPlan build_plan(const GridFunction& u0, const GridFunction& u1, const SteeringParams& params)
{
    if (!(u0.grid() == u1.grid())) {
        throw Error(Errc::grid_mismatch, "initial and target states live on different grids");
    }
    const Grid& g = u0.grid();
    SignPattern p0 = detect_pattern(u0);
    SignPattern p1 = detect_pattern(u1);
    if (p0.counts() != p1.counts()) {
        throw Error(Errc::pattern_mismatch, "interface counts differ between the initial and target states");
    }
    if (p0.first_sign != p1.first_sign) {
        throw Error(Errc::pattern_mismatch, "first-cell signs differ between the initial and target states");
    }
    SteeringPlan plan{u0.with_dirichlet(), u1.with_dirichlet(), p0, p1, false, {}, nullptr, {}, params, {}};
    plan.direct = same_pattern(p0, p1, plan.pattern_tolerance());
    if (plan.direct) {
        plan.stages.push_back({StageKind::magnitude, "magnitude", params.final_time});
        return plan;
    }

    const std::size_t d = g.dim();
    std::vector<std::future<AxisPlan>> jobs;
    for (std::size_t a = 0; a < d; ++a) {
        jobs.push_back(std::async(std::launch::async, [&, a] {
            const Grid1D& ax = g.axis(a);
            const double dx = ax.spacing();
            const auto& target = p1.changes[a];
            GridFunction w = target.empty()
                                 ? GridFunction::constant(Grid(ax), 1.0)
                                 : nodal_profile(ax, target, {params.profile_halfwidth * dx, params.slope_weight, 1});
            GridFunction v = potential_from_target(w, params.potential_band * dx);
            const std::size_t m = std::min(ax.cells() / 4, std::max(params.modes_per_axis, target.size() + 3));
            auto basis = std::make_shared<const SpectralBasis1D>(solve_1d(v, m));
            return AxisPlan{p0.changes[a], target, std::move(w), std::move(v), std::move(basis), std::nullopt,
                            std::nullopt, true, true};
        }));
    }
    std::vector<SpectralBasis1D> bases;
    for (auto& j : jobs) {
        plan.axes.push_back(j.get());
        bases.push_back(*plan.axes.back().basis);
    }
    std::size_t total = 1;
    for (const auto& b : bases) {
        total *= b.size();
    }
    plan.basis = std::make_shared<const SpectralBasisND>(assemble_nd(std::move(bases), total));
    plan.target = locate_target_mode(*plan.basis, p1);

    for (std::size_t a = 0; a < d; ++a) {
        auto& ap = plan.axes[a];
        if (ap.source_changes.empty()) {
            continue;
        }
        const std::size_t k = ap.source_changes.size() + 1;
        ap.assumption_31 = check_assumption_31(*ap.basis, ap.source_changes);
        ap.assumption_32 = check_assumption_32(*ap.basis, ap.source_changes, k);
        if (!ap.assumption_31 && !ap.assumption_32) {
            throw Error(Errc::assumption_failure, "axis " + std::to_string(a + 1) +
                                                      ": change points fail the rank and the span conditions");
        }
        MomentProblemSpec spec;
        spec.basis = ap.basis;
        spec.points = ap.source_changes;
        spec.target_mode = k;
        spec.half_width = params.half_width;
        spec.first_sign = 1;
        spec.probe = select_probe_point(*ap.basis, ap.source_changes, k, params.probe_candidates, params.half_width);
        ap.moment = solve_moment_cone(spec);
        ap.moment_spec = std::move(spec);
    }
    plan.stages.push_back({StageKind::presteer, "presteer", params.presteer_time});
    plan.stages.push_back({StageKind::spectral, "spectral", params.spectral_time});
    plan.stages.push_back({StageKind::magnitude, "magnitude", params.final_time});
    return plan;
}

SteeringReport execute_plan(const SteeringPlan& plan)
{
    const auto& p = plan.params;
    return execute_plan(plan, StageTimes{p.presteer_time, p.spectral_time, p.final_time, p.envelope});
}

SteeringReport execute_plan(const SteeringPlan& plan, const StageTimes& times)
{
    SteeringReport report{times, {}, {}, plan.u0, 0.0, std::nullopt, {}, false, true};
    Runner runner{plan, report, plan.u0, 0.0, {}};
    if (plan.direct) {
        runner.log_leg(plan.u1, times.final, StageKind::magnitude, "magnitude");
        report.final_state = runner.state;
        finish(plan, report);
        report.invariants_ok = report.invariants_ok &&
                               interface_count_monotone(std::span<const std::vector<std::size_t>>(runner.all_counts));
        return report;
    }
    const SpectralBasisND& basis = *plan.basis;
    const std::size_t pos = plan.target.position;

    // Pre-steering towards the moment profile, refined on measured coefficients.
    auto bumps = layout_bumps(plan);
    double residual = 0.0;
    report.shooting_iterations = shoot(plan, bumps, times.presteer, residual);
    const GridFunction target = presteer_target(plan, bumps);
    runner.log_leg(target, times.presteer, StageKind::presteer, "presteer");
    const auto c = leading_coefficients(basis, runner.state, pos + 1);
    report.target_coefficient = c[pos];
    double forbidden = 0.0;
    for (std::size_t l = 0; l < pos; ++l) {
        forbidden += c[l] * c[l];
    }
    report.forbidden_norm = std::sqrt(forbidden);
    report.remainder_norm = l2_norm(runner.state - target);
    report.shooting_residual = report.forbidden_norm / std::abs(c[pos]);

    // Coupling between the pre-steering accuracy and the spectral amplification.
    const double sigma = plan.target_pattern.first_sign;
    const double c0 = sigma * c[pos];
    report.shift = spectral_shift_offset(c0, plan.params.alpha, times.spectral);
    if (pos > 0) {
        const double growth = (basis.eigenvalue(0) - plan.target.eigenvalue + report.shift) * times.spectral;
        report.coupling_value = report.forbidden_norm > 0.0
                                    ? std::exp(std::log(static_cast<double>(pos)) + growth +
                                               std::log(report.forbidden_norm))
                                    : 0.0;
    }
    if (!(report.coupling_value <= times.envelope)) {
        std::ostringstream msg;
        msg << "propagated forbidden part " << report.coupling_value << " exceeds envelope " << times.envelope
            << " (T_* = " << times.presteer << ", T_i = " << times.spectral << ")";
        throw Error(Errc::coupling_infeasible, msg.str());
    }

    // Spectral stage towards sigma * alpha * omega_k*.
    auto spectral = spectral_shift_schedule(basis.potential(), plan.target.eigenvalue, plan.target.gap, c0,
                                            plan.params.alpha, times.spectral);
    const GridFunction mode_target = basis.mode(pos).scaled(sigma * plan.params.alpha);
    runner.run(spectral, StageKind::spectral, &mode_target);

    // Magnitude adjustment.
    runner.log_leg(plan.u1, times.final, StageKind::magnitude, "magnitude");
    report.final_state = runner.state;
    finish(plan, report);
    report.invariants_ok = report.invariants_ok &&
                           interface_count_monotone(std::span<const std::vector<std::size_t>>(runner.all_counts));
    return report;
}

std::vector<SweepPoint> sweep(const SteeringPlan& plan, const SweepSpec& spec)
{
    const std::size_t n = spec.presteer_times.size();
    if (n == 0 || spec.spectral_times.size() != n || (spec.final_times.size() != n && spec.final_times.size() != 1)) {
        throw Error(Errc::invalid_argument, "sweep time lists must share one length (final times may be a single entry)");
    }
    auto point = [&](std::size_t i) {
        StageTimes t{spec.presteer_times[i], spec.spectral_times[i],
                     spec.final_times.size() == 1 ? spec.final_times.front() : spec.final_times[i],
                     spec.envelope * std::pow(spec.envelope_decay, static_cast<double>(i))};
        for (std::size_t r = 0;; ++r) {
            try {
                return SweepPoint{i, t, r, execute_plan(plan, t)};
            } catch (const Error& e) {
                if (e.code() != Errc::coupling_infeasible || r >= spec.max_refinements) {
                    throw;
                }
                t.presteer *= 0.5;
            }
        }
    };
    std::vector<SweepPoint> out;
    const std::size_t batch = std::max(1u, spec.threads);
    for (std::size_t start = 0; start < n; start += batch) {
        std::vector<std::future<SweepPoint>> jobs;
        for (std::size_t i = start; i < std::min(n, start + batch); ++i) {
            jobs.push_back(std::async(batch > 1 ? std::launch::async : std::launch::deferred, point, i));
        }
        for (auto& j : jobs) {
            out.push_back(j.get());
        }
    }
    return out;
}

std::string to_text(const SteeringPlan& plan)
{
    std::ostringstream os;
    os << std::setprecision(12);
    os << "direct = " << (plan.direct ? "true" : "false") << '\n';
    os << "source_pattern:\n" << to_text(plan.source_pattern);
    os << "target_pattern:\n" << to_text(plan.target_pattern);
    if (plan.basis) {
        const auto& info = plan.basis->info(plan.target.position);
        os << "target_mode =";
        for (std::size_t j : info.index) {
            os << ' ' << j;
        }
        os << "\ntarget_position = " << plan.target.position + 1 << '\n';
        os << "target_eigenvalue = " << plan.target.eigenvalue << '\n';
        os << "target_gap = " << plan.target.gap << '\n';
    }
    for (std::size_t a = 0; a < plan.axes.size(); ++a) {
        const auto& ap = plan.axes[a];
        os << "[axis" << a + 1 << "]\n";
        os << "assumption_rank = " << ap.assumption_31 << '\n';
        os << "assumption_span = " << ap.assumption_32 << '\n';
        os << "eigenvalues =";
        for (double l : ap.basis->eigenvalues()) {
            os << ' ' << l;
        }
        os << '\n';
        if (ap.moment) {
            os << "probe = " << ap.moment_spec->probe << '\n' << to_text(*ap.moment);
        }
    }
    for (const auto& s : plan.stages) {
        os << "stage = " << s.label << ' ' << s.duration << '\n';
    }
    return os.str();
}

std::string to_text(const SteeringReport& report)
{
    std::ostringstream os;
    os << std::setprecision(12);
    os << "presteer_time = " << report.times.presteer << '\n';
    os << "spectral_time = " << report.times.spectral << '\n';
    os << "final_time = " << report.times.final << '\n';
    os << "final_error = " << report.final_error << '\n';
    os << "pattern_matches = " << (report.pattern_matches ? "true" : "false") << '\n';
    if (!report.final_pattern_error.empty()) {
        os << "pattern_error = " << report.final_pattern_error << '\n';
    }
    os << "invariants_ok = " << (report.invariants_ok ? "true" : "false") << '\n';
    os << "target_coefficient = " << report.target_coefficient << '\n';
    os << "forbidden_norm = " << report.forbidden_norm << '\n';
    os << "remainder_norm = " << report.remainder_norm << '\n';
    os << "shift = " << report.shift << '\n';
    os << "coupling_value = " << report.coupling_value << '\n';
    os << "shooting_iterations = " << report.shooting_iterations << '\n';
    os << "shooting_residual = " << report.shooting_residual << '\n';
    for (const auto& s : report.stages) {
        os << "stage = " << to_string(s.kind) << ' ' << s.label << " start " << s.start << " duration "
           << s.duration << " dt " << s.time_step << " distance " << s.target_distance << '\n';
    }
    return os.str();
}

}  // namespace bsteer
