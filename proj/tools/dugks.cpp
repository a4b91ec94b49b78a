// Command-line front end: run, sweep, convergence and resume.
//
// Exit codes: 0 success, 1 configuration error, 2 solver divergence, 3 I/O error.

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dugks/checkpoint.hpp"
#include "dugks/error.hpp"
#include "dugks/harness.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 1, kDiverged = 2, kIo = 3 };

struct Overrides {
    std::string config;
    std::string out;
    std::string scheme;
    std::optional<double> eps;
    std::optional<int> mesh;
    std::optional<double> eta;
    std::optional<int> threads;
    bool plot = false;
};

void add_common(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--scheme", o.scheme, "reconstruction: dugks, clr or lw")
        ->check(CLI::IsMember({"dugks", "clr", "lw"}));
    cmd->add_option("--eps", o.eps, "relaxation scale epsilon");
    cmd->add_option("--mesh", o.mesh, "cells per axis");
    cmd->add_option("--eta", o.eta, "CFL number in (0, 1)");
    cmd->add_option("--threads", o.threads, "worker threads per case");
    cmd->add_flag("--plot", o.plot, "also write an SVG profile plot per case");
}

void apply(dugks::RunConfig& c, const Overrides& o)
{
    if (!o.out.empty()) {
        c.output_dir = o.out;
    }
    if (!o.scheme.empty()) {
        c.scheme = dugks::parse_reconstruction(o.scheme);
    }
    if (o.eps) {
        c.epsilon = *o.eps;
    }
    if (o.mesh) {
        c.mesh = *o.mesh;
        c.mesh_exponent.reset();
    }
    if (o.eta) {
        c.eta = *o.eta;
    }
    if (o.threads) {
        c.threads = *o.threads;
    }
    if (o.plot) {
        c.plot = true;
    }
    c.validate();
}

void print_report(const dugks::CaseReport& r)
{
    std::printf("%s scheme=%s eps=%g n=%d dx/eps=%g dt/eps=%g steps=%zu l2=%.6e nu_fit=%.6e nu=%.6e "
                "mass_drift=%.2e momentum_drift=%.2e wall=%.2fs %s\n",
                r.id.c_str(), std::string(dugks::to_string(r.scheme)).c_str(), r.epsilon, r.n, r.delta_x,
                r.delta_t, r.steps, r.l2_error, r.nu_fit, r.nu_expected, r.mass_drift, r.momentum_drift,
                r.wall_time, r.status.c_str());
}

bool close_to(double a, double b)
{
    return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
}

int run_cmd(const Overrides& o, std::optional<std::size_t> stop_after, std::optional<std::size_t> ckpt_every)
{
    dugks::RunConfig c = o.config.empty() ? dugks::RunConfig{} : dugks::load_run_config(o.config);
    apply(c, o);
    if (stop_after) {
        c.stop_after_steps = *stop_after;
    }
    if (ckpt_every) {
        c.checkpoint_interval = *ckpt_every;
    }
    const dugks::CaseReport r = dugks::run_case(c);
    print_report(r);
    if (r.completed) {
        dugks::write_summary_csv({r}, c.output_dir / "summary.csv");
    } else {
        std::printf("stopped after %zu steps; checkpoint at %s\n", r.steps,
                    c.resolved_checkpoint_path().string().c_str());
    }
    return kOk;
}

int resume_cmd(const Overrides& o, const std::string& checkpoint)
{
    if (o.config.empty()) {
        throw dugks::ConfigError("resume needs --config with the original case");
    }
    dugks::RunConfig c = dugks::load_run_config(o.config);
    apply(c, o);
    c.stop_after_steps.reset();
    const auto path = checkpoint.empty() ? c.resolved_checkpoint_path() : std::filesystem::path(checkpoint);
    const dugks::CaseReport r = dugks::resume_case(c, path);
    print_report(r);
    dugks::write_summary_csv({r}, c.output_dir / "summary.csv");
    return kOk;
}

int sweep_cmd(const Overrides& o, int jobs)
{
    if (o.config.empty()) {
        throw dugks::ConfigError("sweep needs --config");
    }
    // --scheme, --eps and --mesh select cases; the other flags override.
    std::vector<dugks::RunConfig> cases;
    for (auto c : dugks::load_sweep_config(o.config)) {
        if (!o.scheme.empty() && dugks::to_string(c.scheme) != o.scheme) {
            continue;
        }
        if (o.eps && !close_to(c.epsilon, *o.eps)) {
            continue;
        }
        if (o.mesh) {
            int n = 0;
            try {
                n = c.resolved_mesh();
            } catch (const dugks::ConfigError&) {
            }
            if (n != *o.mesh) {
                continue;
            }
        }
        if (!o.out.empty()) {
            c.output_dir = o.out;
        }
        if (o.eta) {
            c.eta = *o.eta;
        }
        if (o.threads) {
            c.threads = *o.threads;
        }
        if (o.plot) {
            c.plot = true;
        }
        cases.push_back(std::move(c));
    }
    if (cases.empty()) {
        throw dugks::ConfigError("no sweep cases left after filtering");
    }
    const auto dir = o.out.empty() ? cases.front().output_dir : std::filesystem::path(o.out);
    const auto result = dugks::run_sweep(cases, dir, jobs);
    int code = kOk;
    for (const auto& r : result.reports) {
        print_report(r);
        if (code == kOk && r.status != "ok") {
            code = r.status == "diverged" ? kDiverged : r.status == "io_error" ? kIo : kConfig;
        }
    }
    std::printf("summary: %s\n", result.summary_path.string().c_str());
    return code;
}

int convergence_cmd(const Overrides& o, std::vector<int> levels)
{
    if (o.config.empty()) {
        throw dugks::ConfigError("convergence needs --config");
    }
    auto cc = dugks::load_convergence_config(o.config);
    if (!levels.empty()) {
        cc.levels = levels;
    }
    Overrides rest = o;
    rest.mesh.reset();
    apply(cc.base, rest);
    const auto dir = cc.base.output_dir;
    const auto result = dugks::run_convergence(cc.base, cc.levels, dir);
    for (const auto& row : result.rows) {
        std::printf("n=%d dx=%.6g l2=%.6e\n", row.n, row.dx, row.l2_error);
    }
    if (result.monotone) {
        std::printf("observed order: %.4f\n", result.order);
    } else {
        std::printf("observed order: n/a (errors are not monotone)\n");
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"DUGKS solver and verification harness"};
    app.require_subcommand(1);

    Overrides run_o, sweep_o, conv_o, resume_o;
    std::optional<std::size_t> stop_after;
    std::optional<std::size_t> ckpt_every;
    int jobs = 1;
    std::vector<int> levels;
    std::string checkpoint;

    auto* run = app.add_subcommand("run", "run a single case");
    add_common(run, run_o);
    run->add_option("--stop-after", stop_after, "stop after this many steps and write a checkpoint");
    run->add_option("--checkpoint-interval", ckpt_every, "write a checkpoint every N steps");

    auto* sweep = app.add_subcommand("sweep", "run every case of a sweep config");
    add_common(sweep, sweep_o);
    sweep->add_option("--jobs", jobs, "cases run concurrently")->check(CLI::PositiveNumber);

    auto* conv = app.add_subcommand("convergence", "mesh refinement study");
    add_common(conv, conv_o);
    conv->add_option("--levels", levels, "meshes, each doubling the previous");

    auto* resume = app.add_subcommand("resume", "continue a case from its checkpoint");
    add_common(resume, resume_o);
    resume->add_option("--checkpoint", checkpoint, "checkpoint file (default: from the config)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        if (*run) {
            return run_cmd(run_o, stop_after, ckpt_every);
        }
        if (*sweep) {
            return sweep_cmd(sweep_o, jobs);
        }
        if (*conv) {
            return convergence_cmd(conv_o, levels);
        }
        return resume_cmd(resume_o, checkpoint);
    } catch (const dugks::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfig;
    } catch (const dugks::NonPhysicalFieldError& e) {
        std::fprintf(stderr, "solver diverged: %s\n", e.what());
        return kDiverged;
    } catch (const dugks::IoError& e) {
        std::fprintf(stderr, "I/O error: %s\n", e.what());
        return kIo;
    } catch (const dugks::CheckpointError& e) {
        std::fprintf(stderr, "I/O error: %s\n", e.what());
        return kIo;
    } catch (const dugks::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kConfig;
    }
}
