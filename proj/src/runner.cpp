#include "bsteer/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "bsteer/control_synthesis.hpp"
#include "bsteer/error.hpp"
#include "bsteer/pde_solver.hpp"
#include "bsteer/sign_pattern.hpp"
#include "bsteer/steering.hpp"
#include "bsteer/sturm_liouville.hpp"

namespace fs = std::filesystem;

namespace bsteer {

namespace {

class Summary {
public:
    void add(const std::string& key, double v) { entries_.push_back({key, format_number(v), std::nullopt}); }
    void add(const std::string& key, bool v) { entries_.push_back({key, v ? "true" : "false", std::nullopt}); }
    void add(const std::string& key, std::size_t v) { entries_.push_back({key, std::to_string(v), std::nullopt}); }
    void add_text(const std::string& key, std::string v) { entries_.push_back({key, std::move(v), std::nullopt}); }

    void add_counts(const std::string& key, const std::vector<std::size_t>& counts)
    {
        std::string s;
        for (std::size_t c : counts) {
            s += (s.empty() ? "" : " ") + std::to_string(c);
        }
        add_text(key, s);
    }

    std::vector<std::string> apply(const std::vector<Assertion>& assertions)
    {
        std::vector<std::string> failures;
        for (const auto& as : assertions) {
            auto it = std::find_if(entries_.begin(), entries_.end(), [&](const auto& e) { return e.key == as.key; });
            if (it == entries_.end()) {
                failures.push_back("missing " + as.key);
                continue;
            }
            bool pass = false;
            std::string bound;
            if (as.kind == Assertion::Kind::require) {
                pass = it->value == (as.expected ? "true" : "false");
                bound = as.expected ? "== true" : "== false";
            } else {
                const double v = std::stod(it->value);
                pass = as.kind == Assertion::Kind::max ? v <= as.bound : v >= as.bound;
                bound = (as.kind == Assertion::Kind::max ? "<= " : ">= ") + format_number(as.bound);
            }
            it->pass = it->pass.value_or(true) && pass;
            if (!pass) {
                failures.push_back("fail " + as.key + " = " + it->value + " expected " + bound);
            }
        }
        return failures;
    }

    std::vector<SummaryEntry> take() { return std::move(entries_); }

private:
    std::vector<SummaryEntry> entries_;
};

void write_function(const fs::path& path, const GridFunction& f)
{
    std::ofstream out(path);
    if (!out) {
        throw Error(Errc::config, "cannot write " + path.string());
    }
    write_csv(out, f);
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path);
    if (!out) {
        throw Error(Errc::config, "cannot write " + path.string());
    }
    out << text;
}

std::string two_digits(std::size_t i)
{
    std::ostringstream os;
    os << std::setw(2) << std::setfill('0') << i;
    return os.str();
}

void add_invariants(Summary& s, const std::string& prefix, const TrajectoryInvariants& inv)
{
    s.add(prefix + "sign_preserved", inv.sign_preserved);
    s.add(prefix + "interfaces_monotone", inv.interfaces_monotone);
    if (inv.nonnegative_data) {
        s.add(prefix + "min_ratio", inv.min_ratio);
    }
}

void run_eigensolve(const ExperimentConfig& c, const fs::path& dir, Summary& s)
{
    const Grid g = make_grid(c);
    const Grid1D& ax = g.axis(0);
    const GridFunction v = make_potential(ax, c.potential.empty() ? std::nullopt : c.potential.front());
    const SpectralBasis1D basis = solve_1d(v, c.modes);
    write_function(dir / "potential.csv", v);
    std::ofstream out(dir / "basis.csv");
    write_basis_csv(out, basis);
    for (std::size_t j = 0; j < basis.size(); ++j) {
        const std::string n = std::to_string(j + 1);
        write_function(dir / ("mode_" + two_digits(j + 1) + ".csv"), basis.mode(j));
        s.add("lambda_" + n, basis.eigenvalue(j));
        s.add("zeros_" + n, basis.mode_zeros(j).size());
        if (j + 1 < basis.size()) {
            s.add("gap_" + n, basis.eigenvalue(j) - basis.eigenvalue(j + 1));
        }
    }
}

// Appends `part`, shifted by `offset`, to `all`.
void append_trajectory(Trajectory& all, const Trajectory& part, double offset, bool first)
{
    const std::size_t from = first ? 0 : 1;
    for (std::size_t i = from; i < part.times.size(); ++i) {
        all.times.push_back(part.times[i] + offset);
        all.snapshots.push_back(part.snapshots[i]);
        all.snapshot_stage.push_back(all.stage_labels.size());
    }
    for (auto d : part.diagnostics) {
        d.time += offset;
        all.diagnostics.push_back(std::move(d));
    }
    all.stage_end_times.push_back(part.stage_end_times.front() + offset);
    all.stage_labels.push_back(part.stage_labels.front());
    all.stage_steps.push_back(part.stage_steps.front());
}

// Keeps stage ends plus the requested times.
Trajectory thinned(const Trajectory& t, const std::vector<double>& keep)
{
    Trajectory out = t;
    out.times.clear();
    out.snapshots.clear();
    out.snapshot_stage.clear();
    for (std::size_t i = 0; i < t.times.size(); ++i) {
        const double ti = t.times[i];
        auto near = [&](double x) { return std::abs(x - ti) <= 1e-12 * std::max(1.0, std::abs(x)); };
        if (i == 0 || std::any_of(keep.begin(), keep.end(), near) ||
            std::any_of(t.stage_end_times.begin(), t.stage_end_times.end(), near)) {
            out.times.push_back(ti);
            out.snapshots.push_back(t.snapshots[i]);
            out.snapshot_stage.push_back(t.snapshot_stage[i]);
        }
    }
    return out;
}

void run_simulate(const ExperimentConfig& c, const fs::path& dir, Summary& s)
{
    const Grid g = make_grid(c);
    const GridFunction u0 = make_state(g, c.u0);
    const std::optional<GridFunction> u1 =
        c.u1.present() ? std::optional<GridFunction>(make_state(g, c.u1)) : std::nullopt;
    GridFunction potential = GridFunction::constant(g, 0.0);
    if (std::any_of(c.stages.begin(), c.stages.end(),
                    [](const auto& st) { return st.field == StageConfig::Field::potential; })) {
        std::vector<double> v(g.size(), 0.0);
        std::vector<std::size_t> idx(g.dim());
        std::vector<GridFunction> per_axis;
        for (std::size_t a = 0; a < g.dim(); ++a) {
            per_axis.push_back(make_potential(g.axis(a), a < c.potential.size() ? c.potential[a] : std::nullopt));
        }
        for (std::size_t flat = 0; flat < g.size(); ++flat) {
            g.unflatten(flat, idx);
            for (std::size_t a = 0; a < g.dim(); ++a) {
                v[flat] += per_axis[a][idx[a]];
            }
        }
        potential = GridFunction(g, std::move(v));
    }

    const bool single_log = c.stages.size() == 1 && c.stages.front().field == StageConfig::Field::log_target;
    Trajectory all{u0, {}, {}, {}, {}, {}, {}, {}};
    GridFunction state = u0;
    double clock = 0.0;
    std::optional<GridFunction> log_field;
    for (std::size_t i = 0; i < c.stages.size(); ++i) {
        const auto& st = c.stages[i];
        auto make_stage = [&]() {
            switch (st.field) {
            case StageConfig::Field::potential:
                return ControlStage{potential.map([&](double x) { return x + st.value; }), st.duration, "potential"};
            case StageConfig::Field::log_target:
                return static_log_control(state, *u1, st.duration);
            case StageConfig::Field::constant:
                break;
            }
            return ControlStage{GridFunction::constant(g, st.value), st.duration, "constant"};
        };
        const ControlStage stage = make_stage();
        if (st.field == StageConfig::Field::log_target) {
            log_field = stage.field.scaled(st.duration);
        }
        SimulationOptions opts;
        opts.snapshot_every_step = single_log;
        for (double t : c.snapshot_times) {
            if (t > clock && t < clock + st.duration) {
                opts.snapshot_times.push_back(t - clock);
            }
        }
        ControlSchedule schedule;
        schedule.append(stage);
        const Trajectory part = simulate(state, schedule, c.dt, opts);
        append_trajectory(all, part, clock, i == 0);
        clock += st.duration;
        state = part.final_state();
    }

    const TrajectoryInvariants inv = check_invariants(all);
    write_snapshots(dir / "snapshots", thinned(all, c.snapshot_times));
    write_function(dir / "final_state.csv", state);
    s.add("final_time", clock);
    s.add("final_l2", l2_norm(state));
    s.add("final_min", state.min());
    s.add("final_max", state.max());
    s.add_counts("final_interfaces", interface_counts(state));
    add_invariants(s, "", inv);
    s.add("invariants_ok", inv.ok());
    if (u1) {
        s.add("final_error", relative_l2_error(state, *u1));
    }
    if (single_log) {
        const AppendixBound b = appendix_bound_check(all, *log_field, clock);
        s.add("appendix_lhs", b.lhs);
        s.add("appendix_lhs_identity", b.lhs_identity);
        s.add("appendix_rhs", b.rhs);
        s.add("appendix_pass", b.pass);
    }
}

void run_moment(const ExperimentConfig& c, const fs::path& dir, Summary& s)
{
    const Grid g = make_grid(c);
    const Grid1D& ax = g.axis(0);
    const GridFunction v = make_potential(ax, c.potential.empty() ? std::nullopt : c.potential.front());
    const std::size_t k = c.points.size() + 1;
    const std::size_t m = std::min(ax.cells() / 4, std::max<std::size_t>(k + 2, 6));
    auto basis = std::make_shared<const SpectralBasis1D>(solve_1d(v, m));
    const bool a31 = check_assumption_31(*basis, c.points);
    const bool a32 = check_assumption_32(*basis, c.points, k);
    s.add("assumption_rank", a31);
    s.add("assumption_span", a32);

    MomentProblemSpec spec;
    spec.basis = basis;
    spec.points = c.points;
    spec.target_mode = k;
    spec.half_width = c.half_width;
    spec.probe = c.probe ? *c.probe : select_probe_point(*basis, c.points, k, c.probe_candidates, c.half_width);
    const MomentSolution sol = solve_moment_cone(spec);
    write_function(dir / "profile.csv", sol.profile);
    write_text(dir / "moment.txt", to_text(sol));
    s.add("probe", spec.probe);
    s.add("probe_residual", probe_residual(*basis, c.points, k, spec.probe));
    s.add("probe_amplitude", sol.probe_amplitude);
    for (std::size_t j = 0; j < sol.amplitudes.size(); ++j) {
        s.add("amplitude_" + std::to_string(j + 1), sol.amplitudes[j]);
    }
    s.add("probe_free", sol.probe_free);
    s.add("max_residual", sol.max_residual());
    s.add("payoff", sol.payoff);
}

void add_plan(Summary& s, const SteeringPlan& plan)
{
    s.add("direct", plan.direct);
    if (plan.basis) {
        std::vector<std::size_t> index = plan.basis->info(plan.target.position).index;
        s.add_counts("target_mode", index);
        s.add("target_eigenvalue", plan.target.eigenvalue);
        s.add("target_gap", plan.target.gap);
    }
}

void add_report(Summary& s, const std::string& suffix, const SteeringReport& r, bool direct)
{
    s.add("final_error" + suffix, r.final_error);
    s.add("pattern_matches" + suffix, r.pattern_matches);
    s.add("invariants_ok" + suffix, r.invariants_ok);
    if (!direct) {
        s.add("presteer_time" + suffix, r.times.presteer);
        s.add("coupling_value" + suffix, r.coupling_value);
        s.add("envelope" + suffix, r.times.envelope);
        s.add("shooting_residual" + suffix, r.shooting_residual);
    }
}

void write_report(const fs::path& dir, const SteeringReport& r)
{
    fs::create_directories(dir);
    write_text(dir / "report.txt", to_text(r));
    for (std::size_t i = 0; i < r.stages.size(); ++i) {
        write_function(dir / ("stage_" + two_digits(i + 1) + "_" + std::string(to_string(r.stages[i].kind)) + ".csv"),
                       r.stages[i].end_state);
    }
    write_function(dir / "final_state.csv", r.final_state);
}

void run_steer(const ExperimentConfig& c, const fs::path& dir, Summary& s, unsigned threads)
{
    const Grid g = make_grid(c);
    const GridFunction u0 = make_state(g, c.u0);
    const GridFunction u1 = make_state(g, c.u1);
    const SteeringPlan plan = build_plan(u0, u1, c.steering);
    write_function(dir / "u0.csv", u0);
    write_function(dir / "u1.csv", u1);
    write_text(dir / "plan.txt", to_text(plan));
    add_plan(s, plan);

    if (c.mode == Mode::steer) {
        const SteeringReport r = execute_plan(plan);
        write_report(dir, r);
        add_report(s, "", r, plan.direct);
        return;
    }
    SweepSpec spec = c.sweep;
    if (spec.final_times.empty()) {
        spec.final_times = {c.steering.final_time};
    }
    spec.threads = threads;
    const auto points = sweep(plan, spec);
    bool monotone = true;
    bool all_ok = true;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        write_report(dir / ("point_" + two_digits(i + 1)), p.report);
        add_report(s, "_" + std::to_string(i + 1), p.report, plan.direct);
        s.add("refinements_" + std::to_string(i + 1), p.refinements);
        monotone = monotone && (i == 0 || p.report.final_error <= points[i - 1].report.final_error);
        all_ok = all_ok && p.report.invariants_ok;
    }
    s.add("errors_nonincreasing", monotone);
    s.add("final_error", points.back().report.final_error);
    s.add("pattern_matches", points.back().report.pattern_matches);
    s.add("invariants_ok", all_ok);
}

// Accepts a missing directory or one holding an earlier run.
void check_out_dir(const fs::path& out)
{
    if (fs::exists(out) && (!fs::is_directory(out) || (!fs::is_empty(out) && !fs::exists(out / "summary.txt")))) {
        throw Error(Errc::config, "output path " + out.string() + " exists and does not hold an earlier run");
    }
}

}  // namespace

std::string format_number(double value)
{
    std::ostringstream os;
    os << std::setprecision(12) << value;
    return os.str();
}

std::string format_summary(const std::vector<SummaryEntry>& summary)
{
    std::ostringstream os;
    for (const auto& e : summary) {
        os << e.key << " = " << e.value;
        if (e.pass) {
            os << (*e.pass ? " pass" : " fail");
        }
        os << '\n';
    }
    return os.str();
}

RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options)
{
    const auto diagnostics = validate_config(config);
    if (!diagnostics.empty()) {
        throw Error(Errc::config, format_diagnostics(config, diagnostics));
    }
    const fs::path out = options.out_dir.value_or(config.out_dir);
    check_out_dir(out);
    fs::path staging = out;
    staging += ".partial";
    fs::remove_all(staging);
    fs::create_directories(staging);

    Summary s;
    s.add_text("mode", std::string(to_string(config.mode)));
    try {
        switch (config.mode) {
        case Mode::eigensolve: run_eigensolve(config, staging, s); break;
        case Mode::simulate: run_simulate(config, staging, s); break;
        case Mode::moment: run_moment(config, staging, s); break;
        case Mode::steer:
        case Mode::sweep: run_steer(config, staging, s, std::max(1u, options.threads)); break;
        }
    } catch (...) {
        fs::remove_all(staging);
        throw;
    }
    RunResult result;
    result.failures = s.apply(config.assertions);
    result.summary = s.take();
    result.out_dir = out;
    write_text(staging / "summary.txt", format_summary(result.summary));
    fs::remove_all(out);
    fs::rename(staging, out);
    return result;
}

}  // namespace bsteer
