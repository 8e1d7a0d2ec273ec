#include "bsteer/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "bsteer/error.hpp"
#include "bsteer/nodal_profile.hpp"
#include "bsteer/sturm_liouville.hpp"

namespace bsteer {

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> words(const std::string& s)
{
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;) {
        out.push_back(w);
    }
    return out;
}

class LineParser {
public:
    LineParser(const std::filesystem::path& source, int line) : source_(source), line_(line) {}

    [[noreturn]] void fail(const std::string& message) const
    {
        throw Error(Errc::config, source_.string() + ":" + std::to_string(line_) + ": " + message);
    }

    double number(const std::string& text) const
    {
        double v = 0.0;
        const char* end = text.data() + text.size();
        auto [ptr, ec] = std::from_chars(text.data(), end, v);
        if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
            fail("expected a number, got '" + text + "'");
        }
        return v;
    }

    std::size_t count(const std::string& text) const
    {
        std::size_t v = 0;
        const char* end = text.data() + text.size();
        auto [ptr, ec] = std::from_chars(text.data(), end, v);
        if (ec != std::errc() || ptr != end) {
            fail("expected a non-negative integer, got '" + text + "'");
        }
        return v;
    }

    std::vector<double> numbers(const std::vector<std::string>& ws, std::size_t from = 0) const
    {
        std::vector<double> out;
        for (std::size_t i = from; i < ws.size(); ++i) {
            out.push_back(number(ws[i]));
        }
        return out;
    }

    bool flag(const std::string& text) const
    {
        if (text == "true") {
            return true;
        }
        if (text == "false") {
            return false;
        }
        fail("expected true or false, got '" + text + "'");
    }

    int line() const { return line_; }

private:
    const std::filesystem::path& source_;
    int line_;
};

// Axis suffix `x1`, `x2`, ... as a 0-based index.
std::optional<std::size_t> axis_suffix(const std::string& key, const std::string& prefix)
{
    if (key.rfind(prefix + ".x", 0) != 0) {
        return std::nullopt;
    }
    const std::string digits = key.substr(prefix.size() + 2);
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](unsigned char ch) { return std::isdigit(ch) != 0; })) {
        return std::nullopt;
    }
    const std::size_t n = std::stoul(digits);
    if (n == 0 || n > 8) {
        return std::nullopt;
    }
    return n - 1;
}

template <class T>
void put_axis(std::vector<std::optional<T>>& v, std::size_t axis, T value)
{
    if (v.size() <= axis) {
        v.resize(axis + 1);
    }
    v[axis] = std::move(value);
}

FactorSpec parse_factor(const LineParser& p, const std::string& value)
{
    const auto ws = words(value);
    if (ws.empty()) {
        p.fail("empty state factor");
    }
    FactorSpec f;
    f.line = p.line();
    if (ws[0] == "mode") {
        if (ws.size() != 2 && !(ws.size() == 4 && ws[2] == "tilt")) {
            p.fail("expected 'mode m [tilt c]'");
        }
        f.kind = FactorSpec::Kind::mode;
        f.mode = p.count(ws[1]);
        if (ws.size() == 4) {
            f.tilt = p.number(ws[3]);
        }
    } else if (ws[0] == "zeros" || ws[0] == "linear") {
        f.kind = ws[0] == "zeros" ? FactorSpec::Kind::zeros : FactorSpec::Kind::linear;
        f.zeros = p.numbers(ws, 1);
    } else {
        p.fail("unknown state factor '" + ws[0] + "' (expected mode, zeros or linear)");
    }
    return f;
}

PotentialSpec parse_potential(const LineParser& p, const std::string& value)
{
    const auto ws = words(value);
    PotentialSpec s;
    s.line = p.line();
    if (ws.size() == 2 && ws[0] == "const") {
        s.kind = PotentialSpec::Kind::constant;
        s.value = p.number(ws[1]);
    } else if (!ws.empty() && ws[0] == "target") {
        s.kind = PotentialSpec::Kind::target;
        s.zeros = p.numbers(ws, 1);
    } else {
        p.fail("expected 'const c' or 'target z...'");
    }
    return s;
}

void set_stage_key(const LineParser& p, StageConfig& st, const std::string& key, const std::string& value)
{
    if (key == "duration") {
        st.duration = p.number(value);
        return;
    }
    if (key != "field") {
        p.fail("unknown stage key '" + key + "'");
    }
    const auto ws = words(value);
    if (ws.size() == 2 && ws[0] == "const") {
        st.field = StageConfig::Field::constant;
        st.value = p.number(ws[1]);
    } else if (ws.size() == 2 && ws[0] == "log" && ws[1] == "u1") {
        st.field = StageConfig::Field::log_target;
    } else if (!ws.empty() && ws[0] == "potential" && (ws.size() == 1 || (ws.size() == 3 && ws[1] == "shift"))) {
        st.field = StageConfig::Field::potential;
        st.value = ws.size() == 3 ? p.number(ws[2]) : 0.0;
    } else {
        p.fail("expected field 'const c', 'log u1' or 'potential [shift c]'");
    }
}

void set_steering_key(const LineParser& p, SteeringParams& s, const std::string& key, const std::string& value)
{
    static const std::map<std::string, double SteeringParams::*> reals{
        {"alpha", &SteeringParams::alpha},
        {"half_width", &SteeringParams::half_width},
        {"background", &SteeringParams::background},
        {"peak_ratio", &SteeringParams::peak_ratio},
        {"profile_halfwidth", &SteeringParams::profile_halfwidth},
        {"potential_band", &SteeringParams::potential_band},
        {"slope_weight", &SteeringParams::slope_weight},
        {"presteer_time", &SteeringParams::presteer_time},
        {"spectral_time", &SteeringParams::spectral_time},
        {"final_time", &SteeringParams::final_time},
        {"amplification_fraction", &SteeringParams::amplification_fraction},
        {"amplification_margin", &SteeringParams::amplification_margin},
        {"dt", &SteeringParams::dt},
        {"log_band", &SteeringParams::log_band},
        {"shooting_tol", &SteeringParams::shooting_tol},
        {"envelope", &SteeringParams::envelope},
    };
    static const std::map<std::string, std::size_t SteeringParams::*> counts{
        {"modes_per_axis", &SteeringParams::modes_per_axis},
        {"probe_candidates", &SteeringParams::probe_candidates},
        {"shooting_iterations", &SteeringParams::shooting_iterations},
    };
    if (auto it = reals.find(key); it != reals.end()) {
        s.*(it->second) = p.number(value);
    } else if (auto jt = counts.find(key); jt != counts.end()) {
        s.*(jt->second) = p.count(value);
    } else {
        p.fail("unknown steering key 'steer." + key + "'");
    }
}

void set_sweep_key(const LineParser& p, SweepSpec& s, const std::string& key, const std::string& value)
{
    if (key == "presteer_times") {
        s.presteer_times = p.numbers(words(value));
    } else if (key == "spectral_times") {
        s.spectral_times = p.numbers(words(value));
    } else if (key == "final_times") {
        s.final_times = p.numbers(words(value));
    } else if (key == "envelope") {
        s.envelope = p.number(value);
    } else if (key == "envelope_decay") {
        s.envelope_decay = p.number(value);
    } else if (key == "max_refinements") {
        s.max_refinements = p.count(value);
    } else {
        p.fail("unknown sweep key 'sweep." + key + "'");
    }
}

Mode parse_mode(const LineParser& p, const std::string& value)
{
    static const std::map<std::string, Mode> modes{{"eigensolve", Mode::eigensolve},
                                                   {"simulate", Mode::simulate},
                                                   {"moment", Mode::moment},
                                                   {"steer", Mode::steer},
                                                   {"sweep", Mode::sweep}};
    const auto it = modes.find(value);
    if (it == modes.end()) {
        p.fail("unknown mode '" + value + "' (expected eigensolve, simulate, moment, steer or sweep)");
    }
    return it->second;
}

void set_key(const LineParser& p, ExperimentConfig& c, const std::string& key, const std::string& value)
{
    if (key == "mode") {
        c.mode = parse_mode(p, value);
        c.mode_line = p.line();
    } else if (key == "dim") {
        c.dim = p.count(value);
    } else if (key == "cells") {
        c.cells = p.count(value);
        c.cells_line = p.line();
    } else if (auto a = axis_suffix(key, "box")) {
        const auto v = p.numbers(words(value));
        if (v.size() != 2) {
            p.fail("expected 'lo hi'");
        }
        if (c.box.size() <= *a) {
            c.box.resize(*a + 1, Interval{0.0, 1.0});
        }
        c.box[*a] = Interval{v[0], v[1]};
    } else if (auto a0 = axis_suffix(key, "u0")) {
        put_axis(c.u0.axes, *a0, parse_factor(p, value));
    } else if (auto a1 = axis_suffix(key, "u1")) {
        put_axis(c.u1.axes, *a1, parse_factor(p, value));
    } else if (key == "u0.scale") {
        c.u0.scale = p.number(value);
    } else if (key == "u1.scale") {
        c.u1.scale = p.number(value);
    } else if (auto pv = axis_suffix(key, "potential")) {
        put_axis(c.potential, *pv, parse_potential(p, value));
    } else if (key == "modes") {
        c.modes = p.count(value);
    } else if (key == "dt") {
        c.dt = p.number(value);
    } else if (key == "snapshot_times") {
        c.snapshot_times = p.numbers(words(value));
    } else if (key == "points") {
        c.points = p.numbers(words(value));
        c.points_line = p.line();
    } else if (key == "target_mode") {
        c.target_mode = p.count(value);
    } else if (key == "probe") {
        c.probe = p.number(value);
    } else if (key == "half_width") {
        c.half_width = p.number(value);
    } else if (key == "probe_candidates") {
        c.probe_candidates = p.count(value);
    } else if (key == "out") {
        c.out_dir = value;
    } else if (key.rfind("steer.", 0) == 0) {
        set_steering_key(p, c.steering, key.substr(6), value);
    } else if (key.rfind("sweep.", 0) == 0) {
        set_sweep_key(p, c.sweep, key.substr(6), value);
    } else if (key.rfind("max.", 0) == 0 || key.rfind("min.", 0) == 0) {
        Assertion as{key[1] == 'a' ? Assertion::Kind::max : Assertion::Kind::min, key.substr(4), p.number(value),
                     true, p.line()};
        c.assertions.push_back(std::move(as));
    } else if (key.rfind("require.", 0) == 0) {
        c.assertions.push_back({Assertion::Kind::require, key.substr(8), 0.0, p.flag(value), p.line()});
    } else {
        p.fail("unknown key '" + key + "'");
    }
}

void check_zeros(std::vector<Diagnostic>& out, int line, const std::string& what, const std::vector<double>& zeros,
                 const Interval& span)
{
    for (std::size_t i = 0; i < zeros.size(); ++i) {
        if (!(zeros[i] > span.lo && zeros[i] < span.hi)) {
            std::ostringstream msg;
            msg << what << ": zero " << zeros[i] << " lies outside the open interval (" << span.lo << ", "
                << span.hi << ")";
            out.push_back({line, msg.str()});
        }
        if (i > 0 && !(zeros[i] > zeros[i - 1])) {
            out.push_back({line, what + ": zeros must be strictly increasing"});
        }
    }
}

Interval axis_span(const ExperimentConfig& c, std::size_t a)
{
    return a < c.box.size() ? c.box[a] : Interval{0.0, 1.0};
}

void check_state(std::vector<Diagnostic>& out, const ExperimentConfig& c, const StateSpec& s, const std::string& name)
{
    if (s.axes.size() > c.dim) {
        out.push_back({s.axes.back() ? s.axes.back()->line : 0, name + ": axis beyond dim = " + std::to_string(c.dim)});
    }
    for (std::size_t a = 0; a < s.axes.size(); ++a) {
        if (!s.axes[a]) {
            continue;
        }
        const auto& f = *s.axes[a];
        const std::string what = name + ".x" + std::to_string(a + 1);
        if (f.kind == FactorSpec::Kind::mode && f.mode == 0) {
            out.push_back({f.line, what + ": mode numbers start at 1"});
        }
        const Interval span = axis_span(c, a);
        if (f.kind == FactorSpec::Kind::mode && std::min(1.0 + f.tilt * span.lo, 1.0 + f.tilt * span.hi) <= 0.0) {
            out.push_back({f.line, what + ": tilt makes the factor change sign"});
        }
        check_zeros(out, f.line, what, f.zeros, axis_span(c, a));
    }
    if (!(s.scale != 0.0)) {
        out.push_back({0, name + ".scale must be nonzero"});
    }
}

bool strictly_monotone(const std::vector<double>& v, bool increasing)
{
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (increasing ? !(v[i] > v[i - 1]) : !(v[i] <= v[i - 1])) {
            return false;
        }
    }
    return true;
}

}  // namespace

std::string_view to_string(Mode mode) noexcept
{
    switch (mode) {
    case Mode::eigensolve: return "eigensolve";
    case Mode::simulate: return "simulate";
    case Mode::moment: return "moment";
    case Mode::steer: return "steer";
    case Mode::sweep: return "sweep";
    }
    return "unknown";
}

bool StateSpec::present() const
{
    return std::any_of(axes.begin(), axes.end(), [](const auto& f) { return f.has_value(); });
}

ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& source)
{
    ExperimentConfig c;
    c.source = source;
    std::set<std::string> seen;
    StageConfig* stage = nullptr;
    std::set<std::string> stage_seen;
    bool has_mode = false;
    int number = 0;
    for (std::string raw; std::getline(in, raw);) {
        ++number;
        const LineParser p(c.source, number);
        const std::string line = trim(raw.substr(0, raw.find('#')));
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line != "[stage]") {
                p.fail("unknown section '" + line + "' (only [stage] is supported)");
            }
            c.stages.push_back(StageConfig{});
            c.stages.back().line = number;
            stage = &c.stages.back();
            stage_seen.clear();
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            p.fail("expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            p.fail("empty key or value");
        }
        auto& used = stage ? stage_seen : seen;
        if (!used.insert(key).second) {
            p.fail("duplicate key '" + key + "'");
        }
        if (stage) {
            set_stage_key(p, *stage, key, value);
        } else {
            set_key(p, c, key, value);
            has_mode = has_mode || key == "mode";
        }
    }
    if (!has_mode) {
        throw Error(Errc::config, source.string() + ": missing required key 'mode'");
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::config, path.string() + ": cannot open file");
    }
    return parse_config(in, path);
}

std::vector<Diagnostic> validate_config(const ExperimentConfig& c)
{
    std::vector<Diagnostic> out;
    if (c.dim < 1 || c.dim > 3) {
        out.push_back({0, "dim must be 1, 2 or 3"});
    }
    if (c.cells < 16) {
        out.push_back({c.cells_line, "cells must be at least 16"});
    }
    if (c.box.size() > c.dim) {
        out.push_back({0, "box axis beyond dim = " + std::to_string(c.dim)});
    }
    for (std::size_t a = 0; a < c.box.size(); ++a) {
        if (!(c.box[a].lo < c.box[a].hi)) {
            out.push_back({0, "box.x" + std::to_string(a + 1) + ": lo must be below hi"});
        }
    }
    check_state(out, c, c.u0, "u0");
    check_state(out, c, c.u1, "u1");
    for (std::size_t a = 0; a < c.potential.size(); ++a) {
        if (c.potential[a]) {
            if (a >= c.dim) {
                out.push_back({c.potential[a]->line, "potential axis beyond dim"});
            }
            check_zeros(out, c.potential[a]->line, "potential.x" + std::to_string(a + 1), c.potential[a]->zeros,
                        axis_span(c, a));
        }
    }
    if (!(c.dt > 0.0)) {
        out.push_back({0, "dt must be positive"});
    }
    auto need_state = [&](const StateSpec& s, const char* name) {
        if (!s.present()) {
            out.push_back({c.mode_line, std::string("mode ") + std::string(to_string(c.mode)) + " needs " + name});
        }
    };
    switch (c.mode) {
    case Mode::eigensolve:
        if (c.dim != 1) {
            out.push_back({c.mode_line, "eigensolve works on one axis; set dim = 1"});
        }
        if (c.modes < 1 || c.modes > c.cells / 4) {
            out.push_back({0, "modes must lie in [1, cells/4]"});
        }
        break;
    case Mode::simulate:
        need_state(c.u0, "u0");
        if (c.stages.empty()) {
            out.push_back({c.mode_line, "simulate needs at least one [stage]"});
        }
        for (const auto& st : c.stages) {
            if (!(st.duration > 0.0)) {
                out.push_back({st.line, "stage duration must be positive"});
            }
            if (st.field == StageConfig::Field::log_target && !c.u1.present()) {
                out.push_back({st.line, "field 'log u1' needs u1"});
            }
        }
        break;
    case Mode::moment: {
        if (c.dim != 1) {
            out.push_back({c.mode_line, "moment works on one axis; set dim = 1"});
        }
        const Interval span = axis_span(c, 0);
        check_zeros(out, c.points_line, "points", c.points, span);
        if (!(c.half_width > 0.0)) {
            out.push_back({0, "half_width must be positive"});
        }
        const std::size_t k = c.target_mode ? c.target_mode : c.points.size() + 1;
        if (k != c.points.size() + 1) {
            out.push_back({c.points_line, "target_mode must equal the number of points plus one"});
        }
        if (c.probe && !(*c.probe > span.lo && *c.probe + c.half_width < span.hi)) {
            out.push_back({0, "probe support lies outside the box"});
        }
        if (c.probe_candidates < 16) {
            out.push_back({0, "probe_candidates must be at least 16"});
        }
        break;
    }
    case Mode::steer:
    case Mode::sweep:
        need_state(c.u0, "u0");
        need_state(c.u1, "u1");
        if (c.mode == Mode::sweep) {
            const auto n = c.sweep.presteer_times.size();
            if (n == 0 || c.sweep.spectral_times.size() != n) {
                out.push_back({c.mode_line, "sweep.presteer_times and sweep.spectral_times need equal, nonzero length"});
            }
            if (!c.sweep.final_times.empty() && c.sweep.final_times.size() != 1 && c.sweep.final_times.size() != n) {
                out.push_back({c.mode_line, "sweep.final_times needs one entry or one per index"});
            }
            if (!strictly_monotone(c.sweep.presteer_times, false) || !strictly_monotone(c.sweep.final_times, false)) {
                out.push_back({c.mode_line, "sweep presteer and final times must be non-increasing"});
            }
            if (!strictly_monotone(c.sweep.spectral_times, true)) {
                out.push_back({c.mode_line, "sweep.spectral_times must be increasing"});
            }
        }
        break;
    }
    for (const auto& as : c.assertions) {
        if (as.key.empty()) {
            out.push_back({as.line, "assertion without a summary key"});
        }
    }
    return out;
}

std::string format_diagnostics(const ExperimentConfig& config, const std::vector<Diagnostic>& diagnostics)
{
    if (diagnostics.empty()) {
        return "ok\n";
    }
    std::ostringstream os;
    for (const auto& d : diagnostics) {
        os << config.source.string();
        if (d.line > 0) {
            os << ':' << d.line;
        }
        os << ": " << d.message << '\n';
    }
    return os.str();
}

Grid make_grid(const ExperimentConfig& c)
{
    std::vector<Grid1D> axes;
    for (std::size_t a = 0; a < c.dim; ++a) {
        const Interval s = axis_span(c, a);
        axes.emplace_back(s.lo, s.hi, c.cells);
    }
    return Grid(std::move(axes));
}

GridFunction make_state(const Grid& grid, const StateSpec& spec)
{
    std::vector<GridFunction> factors;
    for (std::size_t a = 0; a < grid.dim(); ++a) {
        const Grid1D& ax = grid.axis(a);
        const FactorSpec f = a < spec.axes.size() && spec.axes[a] ? *spec.axes[a] : FactorSpec{};
        const double lo = ax.lo();
        const double len = ax.hi() - ax.lo();
        switch (f.kind) {
        case FactorSpec::Kind::mode:
            factors.push_back(GridFunction::sample(
                ax,
                [&](double x) {
                    return std::sin(static_cast<double>(f.mode) * std::numbers::pi * (x - lo) / len) *
                           (1.0 + f.tilt * x);
                },
                true));
            break;
        case FactorSpec::Kind::zeros:
            factors.push_back(nodal_profile(ax, f.zeros));
            break;
        case FactorSpec::Kind::linear: {
            std::vector<double> pts{ax.lo()};
            pts.insert(pts.end(), f.zeros.begin(), f.zeros.end());
            pts.push_back(ax.hi());
            factors.push_back(GridFunction::sample(
                ax,
                [&](double x) {
                    const auto it = std::upper_bound(pts.begin() + 1, pts.end() - 1, x);
                    const auto j = static_cast<std::size_t>(it - pts.begin()) - 1;
                    const double sign = j % 2 == 0 ? 1.0 : -1.0;
                    return sign * std::max(0.0, std::min(x - pts[j], pts[j + 1] - x));
                },
                true));
            break;
        }
        }
    }
    return tensor_product(grid, factors).scaled(spec.scale);
}

GridFunction make_potential(const Grid1D& axis, const std::optional<PotentialSpec>& spec)
{
    if (!spec || spec->kind == PotentialSpec::Kind::constant) {
        return GridFunction::constant(Grid(axis), spec ? spec->value : 0.0);
    }
    return potential_from_target(nodal_profile(axis, spec->zeros), 3.0 * axis.spacing());
}

}  // namespace bsteer
