#include "dugks/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <memory>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dugks/checkpoint.hpp"
#include "dugks/error.hpp"

namespace dugks {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string short_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string sanitize(std::string id)
{
    for (char& c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '.' || c == '_' || c == '-';
        if (!ok) {
            c = '_';
        }
    }
    return id;
}

// ---------------------------------------------------------------------------
// Output helpers

class OutputFile {
public:
    explicit OutputFile(const fs::path& path) : path_(path), tmp_(path)
    {
        tmp_ += ".tmp";
        file_ = std::fopen(tmp_.c_str(), "wb");
        if (file_ == nullptr) {
            throw IoError("cannot open " + tmp_.string() + " for writing");
        }
    }
    OutputFile(const OutputFile&) = delete;
    OutputFile& operator=(const OutputFile&) = delete;
    ~OutputFile()
    {
        if (file_ != nullptr) {
            std::fclose(file_);
            std::error_code ec;
            fs::remove(tmp_, ec);
        }
    }

    void line(const std::string& text)
    {
        if (std::fputs(text.c_str(), file_) < 0 || std::fputc('\n', file_) == EOF) {
            throw IoError("write failed on " + tmp_.string());
        }
    }

    void commit()
    {
        const bool bad = std::fclose(file_) != 0;
        file_ = nullptr;
        if (bad) {
            throw IoError("close failed on " + tmp_.string());
        }
        std::error_code ec;
        fs::rename(tmp_, path_, ec);
        if (ec) {
            throw IoError("cannot move " + tmp_.string() + " to " + path_.string() + ": " + ec.message());
        }
    }

private:
    fs::path path_;
    fs::path tmp_;
    std::FILE* file_ = nullptr;
};

void ensure_directory(const fs::path& dir)
{
    if (dir.empty()) {
        return;
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    }
}

std::string csv_row(std::initializer_list<double> values)
{
    std::string row;
    for (double v : values) {
        if (!row.empty()) {
            row += ',';
        }
        row += format_double(v);
    }
    return row;
}

struct ProfilePoint {
    double coordinate;
    double numeric;
    double analytic;
};

void write_profile(const fs::path& path, const std::string& what, const std::vector<ProfilePoint>& points)
{
    OutputFile out(path);
    out.line("# dugks profile v1 " + what);
    out.line("coordinate,u_numeric,u_analytic");
    for (const auto& p : points) {
        out.line(csv_row({p.coordinate, p.numeric, p.analytic}));
    }
    out.commit();
}

void write_svg(const fs::path& path, const std::string& title, const std::vector<ProfilePoint>& points)
{
    if (points.empty()) {
        return;
    }
    constexpr double width = 480.0;
    constexpr double height = 360.0;
    constexpr double margin = 48.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& p : points) {
        lo = std::min({lo, p.numeric, p.analytic});
        hi = std::max({hi, p.numeric, p.analytic});
    }
    if (!(hi > lo)) {
        hi = lo + 1.0;
    }
    const double x0 = points.front().coordinate;
    const double x1 = points.back().coordinate > x0 ? points.back().coordinate : x0 + 1.0;
    auto px = [&](double x) { return margin + (x - x0) / (x1 - x0) * (width - 2 * margin); };
    auto py = [&](double y) { return height - margin - (y - lo) / (hi - lo) * (height - 2 * margin); };
    char buf[96];
    OutputFile out(path);
    std::snprintf(buf, sizeof buf, R"(<svg xmlns="http://www.w3.org/2000/svg" width="%g" height="%g">)", width,
                  height);
    out.line(buf);
    out.line(R"(<rect width="100%" height="100%" fill="white"/>)");
    std::snprintf(buf, sizeof buf, R"(<rect x="%g" y="%g" width="%g" height="%g" fill="none" stroke="black"/>)",
                  margin, margin, width - 2 * margin, height - 2 * margin);
    out.line(buf);
    out.line(R"(<text x="48" y="30" font-family="sans-serif" font-size="14">)" + title + "</text>");
    std::string line = R"(<polyline fill="none" stroke="gray" stroke-width="1.5" points=")";
    for (const auto& p : points) {
        std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(p.coordinate), py(p.analytic));
        line += buf;
    }
    out.line(line + "\"/>");
    for (const auto& p : points) {
        std::snprintf(buf, sizeof buf, R"(<circle cx="%.2f" cy="%.2f" r="2.5" fill="none" stroke="red"/>)",
                      px(p.coordinate), py(p.numeric));
        out.line(buf);
    }
    out.line("</svg>");
    out.commit();
}

// ---------------------------------------------------------------------------
// Conserved totals

struct Totals {
    double mass = 0.0;
    Vec2 momentum{};
    double momentum_scale = 0.0;  // sum of |xi| f; the total momentum itself may vanish
};

Totals totals(const DistributionField& field)
{
    Totals t;
    const auto& set = field.set();
    const std::size_t cells = field.grid().cell_count();
    const auto values = field.values();
    for (std::size_t q = 0; q < set.size(); ++q) {
        const double* f = values.data() + q * cells;
        double sum = 0.0;
        for (std::size_t c = 0; c < cells; ++c) {
            sum += f[c];
        }
        const Vec2 xi = set.velocities[q];
        t.mass += sum;
        t.momentum[0] += xi[0] * sum;
        t.momentum[1] += xi[1] * sum;
        t.momentum_scale += std::hypot(xi[0], xi[1]) * sum;
    }
    return t;
}

// ---------------------------------------------------------------------------
// Benchmark plumbing

struct CaseSetup {
    std::string id;
    int n;
    DiscreteVelocitySet set;
    UniformPeriodicGrid grid;
    RelaxationModel model;
    SchemeConfig scheme;
    std::optional<TaylorVortexSpec> taylor;
    double t_c = kNaN;
    std::size_t total_steps = 0;
    std::size_t error_step = 0;
    std::vector<std::size_t> sample_steps;
};

CaseSetup make_setup(const RunConfig& config)
{
    config.validate();
    const int n = config.resolved_mesh();
    const auto& bench = config.benchmark;
    const bool taylor = bench.kind == BenchmarkKind::TaylorVortex;
    DiscreteVelocitySet set = build_velocity_set(taylor ? VelocitySetKind::D2Q9 : VelocitySetKind::D1Q3, bench.rt0);
    UniformPeriodicGrid grid(taylor ? 2 : 1, n);
    RelaxationModel model(config.epsilon, config.tau);
    SchemeConfig scheme(model, config.eta, config.scheme, grid, set);
    CaseSetup s{config.resolved_id(), n, set, grid, model, scheme, std::nullopt, kNaN, 0, 0, {}};
    const double dt = scheme.dt();
    if (taylor) {
        s.taylor = make_taylor_vortex(bench.a, bench.b, bench.u0, bench.rho0, bench.rt0, model);
        s.t_c = t_half(*s.taylor);
    }
    double end_time = 0.0;
    if (config.steps) {
        s.total_steps = *config.steps;
    } else {
        end_time = config.end_time ? *config.end_time : config.end_time_tc * s.t_c;
        s.total_steps = static_cast<std::size_t>(std::llround(end_time / dt));
    }
    if (s.total_steps == 0) {
        throw ConfigError("case " + s.id + " has no time steps to run");
    }
    if (taylor) {
        s.error_step = std::min(s.total_steps, static_cast<std::size_t>(std::llround(s.t_c / dt)));
        const double interval = config.sample_interval_tc * s.t_c;
        for (std::size_t k = 0;; ++k) {
            const auto step = static_cast<std::size_t>(std::llround(static_cast<double>(k) * interval / dt));
            if (step > s.total_steps) {
                break;
            }
            s.sample_steps.push_back(step);
        }
    } else {
        s.error_step = s.total_steps;
        const std::size_t every = std::max<std::size_t>(1, s.total_steps / 20);
        for (std::size_t step = 0; step <= s.total_steps; step += every) {
            s.sample_steps.push_back(step);
        }
    }
    s.sample_steps.push_back(s.total_steps);
    std::sort(s.sample_steps.begin(), s.sample_steps.end());
    s.sample_steps.erase(std::unique(s.sample_steps.begin(), s.sample_steps.end()), s.sample_steps.end());
    return s;
}

double advection_density(const BenchmarkParams& bench, double x)
{
    return bench.rho0 * (1.0 + bench.amplitude * std::sin(2.0 * std::numbers::pi * x));
}

AnalyticInitialCondition advection_initial_condition(const BenchmarkParams& bench)
{
    return [bench](double x, double, MacroState& state, FlowDerivatives& derivs) {
        state = MacroState{advection_density(bench, x), {0.0, 0.0}};
        derivs = FlowDerivatives{};
    };
}

// Free transport of the initial equilibrium: f_q(x, t) = f_q(x - xi_q t, 0).
std::vector<double> advection_exact(const BenchmarkParams& bench, const DiscreteVelocitySet& set, double x,
                                    double t)
{
    std::vector<double> f(set.size());
    for (std::size_t q = 0; q < set.size(); ++q) {
        f[q] = set.weights[q] * advection_density(bench, x - set.velocities[q][0] * t);
    }
    return f;
}

double advection_error(const DistributionField& field, const BenchmarkParams& bench)
{
    const auto& set = field.set();
    double err = 0.0;
    double ref = 0.0;
    for (std::size_t cell = 0; cell < field.grid().cell_count(); ++cell) {
        const double x = field.grid().center(cell)[0];
        const auto exact = advection_exact(bench, set, x, field.time());
        double rho = 0.0;
        double rho_exact = 0.0;
        for (std::size_t q = 0; q < set.size(); ++q) {
            rho += field.at(cell, q);
            rho_exact += exact[q];
        }
        err += (rho - rho_exact) * (rho - rho_exact);
        ref += (rho_exact - bench.rho0) * (rho_exact - bench.rho0);
    }
    if (!(ref > 0.0)) {
        throw DegenerateError("advection error: the density perturbation vanishes");
    }
    return std::sqrt(err / ref);
}

void initialize(DistributionField& field, const CaseSetup& setup, const RunConfig& config)
{
    if (setup.taylor) {
        init_ce(field, taylor_initial_condition(*setup.taylor), setup.model);
    } else {
        init_ce(field, advection_initial_condition(config.benchmark), 0.0);
    }
}

// ---------------------------------------------------------------------------
// Run state that survives a checkpoint

struct Progress {
    std::vector<DecaySample> decay;
    double l2_error = kNaN;
    double error_time = kNaN;
    Totals initial;
    double mass_drift = 0.0;
    double momentum_drift = 0.0;
    double max_velocity = 0.0;
    double wall_time = 0.0;
};

fs::path progress_path(const fs::path& checkpoint)
{
    fs::path p = checkpoint;
    p.replace_extension(".json");
    return p;
}

json nullable(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

double from_nullable(const json& j)
{
    return j.is_null() ? kNaN : j.get<double>();
}

void write_progress(const fs::path& path, const std::string& id, std::size_t steps, const Progress& p)
{
    json j;
    j["format"] = "dugks progress v1";
    j["id"] = id;
    j["steps"] = steps;
    json decay = json::array();
    for (const auto& s : p.decay) {
        decay.push_back({s.t, s.max_u});
    }
    j["decay"] = decay;
    j["l2_error"] = nullable(p.l2_error);
    j["error_time"] = nullable(p.error_time);
    j["mass0"] = p.initial.mass;
    j["momentum0"] = {p.initial.momentum[0], p.initial.momentum[1]};
    j["momentum_scale"] = p.initial.momentum_scale;
    j["mass_drift"] = p.mass_drift;
    j["momentum_drift"] = p.momentum_drift;
    j["max_velocity"] = p.max_velocity;
    j["wall_time"] = p.wall_time;
    OutputFile out(path);
    out.line(j.dump(1));
    out.commit();
}

Progress read_progress(const fs::path& path, const std::string& id, std::size_t steps)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open progress file " + path.string());
    }
    json j;
    try {
        in >> j;
        if (j.at("format").get<std::string>() != "dugks progress v1") {
            throw ConfigError("unknown progress format in " + path.string());
        }
        if (j.at("id").get<std::string>() != id || j.at("steps").get<std::size_t>() != steps) {
            throw ConfigError("progress file " + path.string() + " does not belong to checkpoint of case " + id);
        }
        Progress p;
        for (const auto& s : j.at("decay")) {
            p.decay.push_back({s.at(0).get<double>(), s.at(1).get<double>()});
        }
        p.l2_error = from_nullable(j.at("l2_error"));
        p.error_time = from_nullable(j.at("error_time"));
        p.initial.mass = j.at("mass0").get<double>();
        p.initial.momentum = {j.at("momentum0").at(0).get<double>(), j.at("momentum0").at(1).get<double>()};
        p.initial.momentum_scale = j.at("momentum_scale").get<double>();
        p.mass_drift = j.at("mass_drift").get<double>();
        p.momentum_drift = j.at("momentum_drift").get<double>();
        p.max_velocity = j.at("max_velocity").get<double>();
        p.wall_time = j.at("wall_time").get<double>();
        return p;
    } catch (const json::exception& e) {
        throw ConfigError("malformed progress file " + path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Case driver

std::vector<ProfilePoint> centerline_profile(const DistributionField& field, const TaylorVortexSpec& spec,
                                             int component)
{
    // u_x along the vertical centerline, u_y along the horizontal one.
    const auto& grid = field.grid();
    const int mid = grid.n() / 2;
    std::vector<ProfilePoint> points;
    for (int j = 0; j < grid.n(); ++j) {
        const std::size_t cell = component == 0 ? grid.index(mid, j) : grid.index(j, mid);
        const Vec2 x = grid.center(cell);
        const Vec2 u = cell_velocity(field, cell);
        const Vec2 ua = taylor_analytic(spec, x[0], x[1], field.time()).u;
        points.push_back({x[component == 0 ? 1 : 0], u[component], ua[component]});
    }
    return points;
}

std::vector<ProfilePoint> advection_profile(const DistributionField& field, const BenchmarkParams& bench)
{
    const auto& set = field.set();
    std::vector<ProfilePoint> points;
    for (std::size_t cell = 0; cell < field.grid().cell_count(); ++cell) {
        const double x = field.grid().center(cell)[0];
        const auto exact = advection_exact(bench, set, x, field.time());
        double rho = 0.0, m = 0.0, rho_e = 0.0, m_e = 0.0;
        for (std::size_t q = 0; q < set.size(); ++q) {
            rho += field.at(cell, q);
            m += set.velocities[q][0] * field.at(cell, q);
            rho_e += exact[q];
            m_e += set.velocities[q][0] * exact[q];
        }
        points.push_back({x, m / rho, m_e / rho_e});
    }
    return points;
}

void write_case_outputs(const RunConfig& config, const CaseSetup& setup, const DistributionField& field,
                        const CaseReport& report)
{
    const fs::path dir = config.output_dir;
    ensure_directory(dir);
    const std::string& id = setup.id;
    const std::string when = "t=" + format_double(field.time());
    std::vector<ProfilePoint> main;
    if (setup.taylor) {
        main = centerline_profile(field, *setup.taylor, 0);
        write_profile(dir / ("profile_" + id + ".csv"), "u_x on x=center " + when, main);
        write_profile(dir / ("profile_" + id + "_uy.csv"), "u_y on y=center " + when,
                      centerline_profile(field, *setup.taylor, 1));
    } else {
        main = advection_profile(field, config.benchmark);
        write_profile(dir / ("profile_" + id + ".csv"), "u_x along x " + when, main);
    }
    {
        OutputFile out(dir / ("decay_" + id + ".csv"));
        out.line("# dugks decay v1");
        out.line("t,max_u");
        for (const auto& s : report.decay) {
            out.line(csv_row({s.t, s.max_u}));
        }
        out.commit();
    }
    if (config.plot) {
        write_svg(dir / ("profile_" + id + ".svg"), id + " " + when, main);
    }
}

void check_finite(double v, const std::string& id, const DistributionField& field)
{
    if (!std::isfinite(v)) {
        throw NonPhysicalFieldError("case " + id + " diverged at t=" + format_double(field.time()) +
                                    " (step " + std::to_string(field.step_count()) + ")");
    }
}

CaseReport drive(const RunConfig& config, const CaseSetup& setup, DistributionField& field, Progress progress)
{
    using clock = std::chrono::steady_clock;
    const auto started = clock::now();
    const fs::path ckpt = config.resolved_checkpoint_path();
    const std::size_t start = field.step_count();
    Stepper stepper(setup.scheme, config.threads);

    auto save = [&] {
        ensure_directory(ckpt.parent_path());
        Progress p = progress;
        p.wall_time += std::chrono::duration<double>(clock::now() - started).count();
        checkpoint_write(field, setup.model, ckpt);
        write_progress(progress_path(ckpt), setup.id, field.step_count(), p);
    };

    CaseReport r;
    r.id = setup.id;
    r.scheme = config.scheme;
    r.epsilon = config.epsilon;
    r.n = setup.n;
    r.eta = config.eta;
    r.dx = setup.grid.dx();
    r.dt = setup.scheme.dt();
    r.delta_x = r.dx / r.epsilon;
    r.delta_t = r.dt / r.epsilon;
    r.nu_expected = setup.model.tau_eff() * setup.set.rt0;

    for (std::size_t k = start;; ++k) {
        if (k != start) {
            const bool stop = config.stop_after_steps && k == *config.stop_after_steps;
            const bool due = config.checkpoint_interval != 0 && k % config.checkpoint_interval == 0;
            if (stop || due) {
                save();
            }
            if (stop && k < setup.total_steps) {
                r.steps = k;
                r.final_time = field.time();
                r.decay = progress.decay;
                r.completed = false;
                r.status = "stopped";
                r.wall_time = progress.wall_time + std::chrono::duration<double>(clock::now() - started).count();
                return r;
            }
        }
        if (k == setup.error_step) {
            progress.error_time = field.time();
            progress.l2_error =
                setup.taylor ? relative_l2_error(field, *setup.taylor, field.time()) : advection_error(field, config.benchmark);
            check_finite(progress.l2_error, setup.id, field);
        }
        if (std::binary_search(setup.sample_steps.begin(), setup.sample_steps.end(), k)) {
            const double umax = max_velocity(field);
            check_finite(umax, setup.id, field);
            progress.decay.push_back({field.time(), umax});
            progress.max_velocity = std::max(progress.max_velocity, umax);
            const Totals now = totals(field);
            const Totals& t0 = progress.initial;
            progress.mass_drift = std::max(progress.mass_drift, std::abs(now.mass - t0.mass) / t0.mass);
            const double dp = std::hypot(now.momentum[0] - t0.momentum[0], now.momentum[1] - t0.momentum[1]);
            progress.momentum_drift = std::max(progress.momentum_drift, dp / t0.momentum_scale);
        }
        if (k == setup.total_steps) {
            break;
        }
        stepper.advance(field);
    }

    r.steps = field.step_count();
    r.final_time = field.time();
    r.error_time = progress.error_time;
    r.l2_error = progress.l2_error;
    r.mass_drift = progress.mass_drift;
    r.momentum_drift = progress.momentum_drift;
    r.conservation_ok = r.mass_drift <= kConservationTolerance && r.momentum_drift <= kConservationTolerance;
    r.max_velocity = progress.max_velocity;
    r.decay = progress.decay;
    r.nu_fit = kNaN;
    if (setup.taylor && r.decay.size() >= 10) {
        try {
            r.nu_fit = fit_decay_viscosity(r.decay, setup.taylor->alpha());
        } catch (const DegenerateError&) {
            r.nu_fit = kNaN;
        }
    }
    r.completed = true;
    r.wall_time = progress.wall_time + std::chrono::duration<double>(clock::now() - started).count();
    if (config.write_outputs) {
        write_case_outputs(config, setup, field, r);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Config parsing

const std::set<std::string> kRunKeys = {
    "id", "scheme", "epsilon", "tau", "mesh", "mesh_exponent", "eta", "benchmark", "end_time_tc", "end_time",
    "steps", "sample_interval_tc", "checkpoint_interval", "stop_after_steps", "checkpoint", "output_dir",
    "write_outputs", "plot", "threads"};
const std::set<std::string> kBenchmarkKeys = {"kind", "a", "b", "u0", "rho0", "rt0", "amplitude"};

template <class T>
T get_as(const json& j, const char* key)
{
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where)
{
    if (!j.is_object()) {
        throw ConfigError(where + " must be a JSON object");
    }
    for (const auto& item : j.items()) {
        if (!allowed.count(item.key())) {
            throw ConfigError("unknown key '" + item.key() + "' in " + where);
        }
    }
}

void apply_run_json(RunConfig& c, const json& j)
{
    check_keys(j, kRunKeys, "run config");
    if (j.contains("id")) c.id = get_as<std::string>(j, "id");
    if (j.contains("scheme")) c.scheme = parse_reconstruction(get_as<std::string>(j, "scheme"));
    if (j.contains("epsilon")) c.epsilon = get_as<double>(j, "epsilon");
    if (j.contains("tau")) c.tau = get_as<double>(j, "tau");
    if (j.contains("mesh") && j.contains("mesh_exponent")) {
        throw ConfigError("set exactly one of 'mesh' and 'mesh_exponent'");
    }
    if (j.contains("mesh")) {
        c.mesh = get_as<int>(j, "mesh");
        c.mesh_exponent.reset();
    }
    if (j.contains("mesh_exponent")) {
        c.mesh_exponent = get_as<double>(j, "mesh_exponent");
        c.mesh.reset();
    }
    if (j.contains("eta")) c.eta = get_as<double>(j, "eta");
    if (j.contains("benchmark")) {
        const json& b = j.at("benchmark");
        check_keys(b, kBenchmarkKeys, "benchmark");
        auto& p = c.benchmark;
        if (b.contains("kind")) {
            const auto kind = get_as<std::string>(b, "kind");
            if (kind == "taylor_vortex") {
                p.kind = BenchmarkKind::TaylorVortex;
            } else if (kind == "advection_1d") {
                p.kind = BenchmarkKind::Advection1d;
            } else {
                throw ConfigError("unknown benchmark kind '" + kind + "'");
            }
        }
        if (b.contains("a")) p.a = get_as<double>(b, "a");
        if (b.contains("b")) p.b = get_as<double>(b, "b");
        if (b.contains("u0")) p.u0 = get_as<double>(b, "u0");
        if (b.contains("rho0")) p.rho0 = get_as<double>(b, "rho0");
        if (b.contains("rt0")) p.rt0 = get_as<double>(b, "rt0");
        if (b.contains("amplitude")) p.amplitude = get_as<double>(b, "amplitude");
    }
    if (j.contains("end_time_tc")) c.end_time_tc = get_as<double>(j, "end_time_tc");
    if (j.contains("end_time")) c.end_time = get_as<double>(j, "end_time");
    if (j.contains("steps")) c.steps = get_as<std::size_t>(j, "steps");
    if (j.contains("sample_interval_tc")) c.sample_interval_tc = get_as<double>(j, "sample_interval_tc");
    if (j.contains("checkpoint_interval")) c.checkpoint_interval = get_as<std::size_t>(j, "checkpoint_interval");
    if (j.contains("stop_after_steps")) c.stop_after_steps = get_as<std::size_t>(j, "stop_after_steps");
    if (j.contains("checkpoint")) c.checkpoint_path = fs::path(get_as<std::string>(j, "checkpoint"));
    if (j.contains("output_dir")) c.output_dir = get_as<std::string>(j, "output_dir");
    if (j.contains("write_outputs")) c.write_outputs = get_as<bool>(j, "write_outputs");
    if (j.contains("plot")) c.plot = get_as<bool>(j, "plot");
    if (j.contains("threads")) c.threads = get_as<int>(j, "threads");
}

json parse_json_text(const std::string& text, const std::string& where)
{
    try {
        return json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("cannot parse " + where + ": " + e.what());
    }
}

json read_json_file(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_json_text(buffer.str(), path.string());
}

RunConfig run_config_from(const json& j)
{
    RunConfig c;
    apply_run_json(c, j);
    c.validate();
    return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// RunConfig

void RunConfig::validate() const
{
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw ConfigError("epsilon must be positive, got " + format_double(epsilon));
    }
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw ConfigError("tau must be positive, got " + format_double(tau));
    }
    if (mesh.has_value() == mesh_exponent.has_value()) {
        throw ConfigError("set exactly one of 'mesh' and 'mesh_exponent'");
    }
    if (!(eta > 0.0 && eta < 1.0)) {
        throw ConfigError("eta must lie in (0, 1), got " + format_double(eta));
    }
    if (resolved_mesh() < 4) {
        throw ConfigError("mesh must have at least 4 cells per axis, got " + std::to_string(resolved_mesh()));
    }
    if (steps && *steps == 0) {
        throw ConfigError("steps must be positive");
    }
    if (end_time && !(*end_time > 0.0)) {
        throw ConfigError("end_time must be positive");
    }
    if (!(end_time_tc > 0.0)) {
        throw ConfigError("end_time_tc must be positive");
    }
    if (!(sample_interval_tc > 0.0)) {
        throw ConfigError("sample_interval_tc must be positive");
    }
    if (benchmark.kind == BenchmarkKind::Advection1d && !steps && !end_time) {
        throw ConfigError("the 1-D advection case needs 'steps' or 'end_time'");
    }
    if (benchmark.kind == BenchmarkKind::Advection1d &&
        !(std::abs(benchmark.amplitude) > 0.0 && std::abs(benchmark.amplitude) < 1.0)) {
        throw ConfigError("advection amplitude must lie in (0, 1) in magnitude");
    }
    if (threads < 1) {
        throw ConfigError("threads must be at least 1");
    }
}

int RunConfig::resolved_mesh() const
{
    if (mesh) {
        return *mesh;
    }
    if (!mesh_exponent || !(*mesh_exponent > 0.0)) {
        throw ConfigError("mesh_exponent must be positive");
    }
    const double n = std::round(std::pow(epsilon, -*mesh_exponent));
    if (!(n < 1e6)) {
        throw ConfigError("derived mesh " + format_double(n) + " is too large");
    }
    return static_cast<int>(n);
}

std::string RunConfig::resolved_id() const
{
    if (!id.empty()) {
        return sanitize(id);
    }
    return sanitize(std::string(to_string(scheme)) + "_eps" + short_double(epsilon) + "_n" +
                    std::to_string(resolved_mesh()));
}

fs::path RunConfig::resolved_checkpoint_path() const
{
    if (checkpoint_path) {
        return *checkpoint_path;
    }
    return output_dir / ("checkpoint_" + resolved_id() + ".bin");
}

// ---------------------------------------------------------------------------
// Runs

CaseReport run_case(const RunConfig& config)
{
    const CaseSetup setup = make_setup(config);
    DistributionField field(setup.grid, setup.set);
    initialize(field, setup, config);
    Progress progress;
    progress.initial = totals(field);
    return drive(config, setup, field, std::move(progress));
}

CaseReport resume_case(const RunConfig& config, const fs::path& checkpoint)
{
    const CaseSetup setup = make_setup(config);
    Checkpoint ck = checkpoint_read(checkpoint);
    const auto& g = ck.field.grid();
    if (g.dim() != setup.grid.dim() || g.n() != setup.n || ck.field.set().kind != setup.set.kind ||
        ck.field.set().rt0 != setup.set.rt0 || ck.model.epsilon() != setup.model.epsilon() ||
        ck.model.tau() != setup.model.tau()) {
        throw ConfigError("checkpoint " + checkpoint.string() + " does not match case " + setup.id);
    }
    if (ck.field.step_count() > setup.total_steps) {
        throw ConfigError("checkpoint " + checkpoint.string() + " lies beyond the end of case " + setup.id);
    }
    Progress progress = read_progress(progress_path(checkpoint), setup.id, ck.field.step_count());
    RunConfig cfg = config;
    if (cfg.stop_after_steps && *cfg.stop_after_steps <= ck.field.step_count()) {
        cfg.stop_after_steps.reset();
    }
    return drive(cfg, setup, ck.field, std::move(progress));
}

void write_summary_csv(const std::vector<CaseReport>& reports, const fs::path& path)
{
    ensure_directory(path.parent_path());
    OutputFile out(path);
    out.line("# dugks summary v1");
    out.line("id,scheme,epsilon,n,delta_x,delta_t,l2_error,nu_fit,nu_expected,wall_time,status");
    for (const auto& r : reports) {
        out.line(r.id + "," + std::string(to_string(r.scheme)) + "," + format_double(r.epsilon) + "," +
                 std::to_string(r.n) + "," +
                 csv_row({r.delta_x, r.delta_t, r.l2_error, r.nu_fit, r.nu_expected, r.wall_time}) + "," +
                 r.status);
    }
    out.commit();
}

SweepResult run_sweep(const std::vector<RunConfig>& configs, const fs::path& output_dir, int jobs)
{
    if (configs.empty()) {
        throw ConfigError("sweep has no cases to run");
    }
    std::set<std::string> ids;
    for (const auto& c : configs) {
        std::string id;
        try {
            id = c.resolved_id();
        } catch (const ConfigError&) {
            continue;  // reported on the row itself
        }
        if (!ids.insert(id).second) {
            throw ConfigError("duplicate case id '" + id + "' in sweep");
        }
    }
    SweepResult result;
    result.reports.resize(configs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) {
            const RunConfig& c = configs[i];
            CaseReport& r = result.reports[i];
            try {
                r = run_case(c);
                continue;
            } catch (const NonPhysicalFieldError& e) {
                r.status = "diverged";
                std::fprintf(stderr, "case %zu: %s\n", i, e.what());
            } catch (const ConfigError& e) {
                r.status = "config_error";
                std::fprintf(stderr, "case %zu: %s\n", i, e.what());
            } catch (const IoError& e) {
                r.status = "io_error";
                std::fprintf(stderr, "case %zu: %s\n", i, e.what());
            } catch (const std::exception& e) {
                r.status = "error";
                std::fprintf(stderr, "case %zu: %s\n", i, e.what());
            }
            // Fill what is known so the row still identifies the case.
            r.scheme = c.scheme;
            r.epsilon = c.epsilon;
            r.eta = c.eta;
            r.l2_error = r.nu_fit = r.nu_expected = kNaN;
            try {
                r.id = c.resolved_id();
                r.n = c.resolved_mesh();
                r.dx = 1.0 / r.n;
                r.delta_x = r.dx / r.epsilon;
                const auto set = build_velocity_set(
                    c.benchmark.kind == BenchmarkKind::TaylorVortex ? VelocitySetKind::D2Q9 : VelocitySetKind::D1Q3,
                    c.benchmark.rt0);
                r.dt = c.eta * r.dx / set.xi_max;
                r.delta_t = r.dt / r.epsilon;
                r.nu_expected = c.epsilon * c.tau * c.benchmark.rt0;
            } catch (const std::exception&) {
                r.delta_x = r.delta_t = kNaN;
            }
        }
    };
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(configs.size())));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    if (!output_dir.empty()) {
        result.summary_path = output_dir / "summary.csv";
        write_summary_csv(result.reports, result.summary_path);
    }
    return result;
}

double observed_order(const std::vector<ConvergenceRow>& rows)
{
    if (rows.size() < 2) {
        throw DegenerateError("observed_order needs at least two levels");
    }
    double mx = 0.0;
    double my = 0.0;
    for (const auto& r : rows) {
        if (!(r.dx > 0.0) || !(r.l2_error > 0.0)) {
            throw DegenerateError("observed_order needs positive spacings and errors");
        }
        mx += std::log(r.dx);
        my += std::log(r.l2_error);
    }
    mx /= static_cast<double>(rows.size());
    my /= static_cast<double>(rows.size());
    double sxx = 0.0;
    double sxy = 0.0;
    for (const auto& r : rows) {
        const double dx = std::log(r.dx) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(r.l2_error) - my);
    }
    if (!(sxx > 0.0)) {
        throw DegenerateError("observed_order needs distinct spacings");
    }
    return sxy / sxx;
}

ConvergenceResult assess_convergence(std::vector<ConvergenceRow> rows)
{
    ConvergenceResult result;
    result.rows = std::move(rows);
    for (std::size_t i = 1; i < result.rows.size(); ++i) {
        if (!(result.rows[i].l2_error < result.rows[i - 1].l2_error)) {
            result.monotone = false;
        }
    }
    result.order = result.monotone ? observed_order(result.rows) : kNaN;
    return result;
}

ConvergenceResult run_convergence(const RunConfig& base, const std::vector<int>& levels, const fs::path& output_dir)
{
    if (levels.size() < 3) {
        throw ConfigError("convergence study needs at least three levels");
    }
    for (std::size_t i = 1; i < levels.size(); ++i) {
        if (levels[i] != 2 * levels[i - 1]) {
            throw ConfigError("convergence levels must double: " + std::to_string(levels[i - 1]) + " then " +
                              std::to_string(levels[i]));
        }
    }
    ConvergenceResult result;
    const std::string stem = base.resolved_id();
    for (int n : levels) {
        RunConfig c = base;
        c.mesh = n;
        c.mesh_exponent.reset();
        c.id = stem + "_n" + std::to_string(n);
        if (!output_dir.empty()) {
            c.output_dir = output_dir;
        }
        const CaseReport r = run_case(c);
        result.rows.push_back({n, r.dx, r.l2_error});
    }
    result = assess_convergence(std::move(result.rows));
    if (!output_dir.empty()) {
        ensure_directory(output_dir);
        OutputFile out(output_dir / "convergence.csv");
        out.line("# dugks convergence v1 scheme=" + std::string(to_string(base.scheme)) +
                 " epsilon=" + format_double(base.epsilon) + " order=" + format_double(result.order) +
                 (result.monotone ? "" : " non-monotone"));
        out.line("n,dx,l2_error");
        for (const auto& row : result.rows) {
            out.line(std::to_string(row.n) + "," + csv_row({row.dx, row.l2_error}));
        }
        out.commit();
    }
    return result;
}

// ---------------------------------------------------------------------------
// Config files

RunConfig parse_run_config(const std::string& json_text)
{
    return run_config_from(parse_json_text(json_text, "run config"));
}

RunConfig load_run_config(const fs::path& path)
{
    return run_config_from(read_json_file(path));
}

std::vector<RunConfig> load_sweep_config(const fs::path& path)
{
    const json root = read_json_file(path);
    check_keys(root, {"defaults", "cases", "schemes"}, "sweep config");
    if (!root.contains("cases") || !root.at("cases").is_array()) {
        throw ConfigError("sweep config needs a 'cases' array");
    }
    const json defaults = root.value("defaults", json::object());
    std::vector<json> schemes;
    if (root.contains("schemes")) {
        for (const auto& s : root.at("schemes")) {
            schemes.push_back(s);
        }
        if (schemes.empty()) {
            throw ConfigError("'schemes' must not be empty when present");
        }
    }
    std::vector<RunConfig> out;
    for (const auto& scheme : schemes.empty() ? std::vector<json>{json()} : schemes) {
        for (const auto& entry : root.at("cases")) {
            check_keys(entry, kRunKeys, "sweep case");
            // An epsilon list expands into one case per value.
            std::vector<json> eps_values;
            if (entry.contains("epsilon") && entry.at("epsilon").is_array()) {
                for (const auto& e : entry.at("epsilon")) {
                    eps_values.push_back(e);
                }
            } else {
                eps_values.push_back(json());
            }
            for (const auto& eps : eps_values) {
                RunConfig c;
                apply_run_json(c, defaults);
                json e = entry;
                if (!eps.is_null()) {
                    e["epsilon"] = eps;
                    if (e.contains("id")) {
                        e["id"] = e["id"].get<std::string>() + "_eps" + short_double(eps.get<double>());
                    }
                }
                if (!scheme.is_null()) {
                    e["scheme"] = scheme;
                    if (e.contains("id")) {
                        e["id"] = scheme.get<std::string>() + "_" + e["id"].get<std::string>();
                    }
                }
                apply_run_json(c, e);
                out.push_back(std::move(c));
            }
        }
    }
    return out;
}

ConvergenceConfig load_convergence_config(const fs::path& path)
{
    const json root = read_json_file(path);
    check_keys(root, {"base", "levels"}, "convergence config");
    ConvergenceConfig cc;
    if (!root.contains("base") || !root.contains("levels")) {
        throw ConfigError("convergence config needs 'base' and 'levels'");
    }
    json base = root.at("base");
    check_keys(base, kRunKeys, "convergence base");
    apply_run_json(cc.base, base);
    try {
        cc.levels = root.at("levels").get<std::vector<int>>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("convergence 'levels': ") + e.what());
    }
    // The base mesh is replaced level by level; fix it to the first one for validation.
    if (!cc.levels.empty()) {
        cc.base.mesh = cc.levels.front();
        cc.base.mesh_exponent.reset();
    }
    cc.base.validate();
    return cc;
}

}  // namespace dugks
