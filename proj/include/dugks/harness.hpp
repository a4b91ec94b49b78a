#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dugks/benchmarks.hpp"
#include "dugks/scheme.hpp"

namespace dugks {

enum class BenchmarkKind { TaylorVortex, Advection1d };

struct BenchmarkParams {
    BenchmarkKind kind = BenchmarkKind::TaylorVortex;
    double a = 2.0 * 3.14159265358979323846;
    double b = 2.0 * 3.14159265358979323846;
    double u0 = 0.01;
    double rho0 = 1.0;
    double rt0 = 0.5;
    double amplitude = 0.01;  // density perturbation of the 1-D advection case
};

/// One simulation case. Exactly one of `mesh` and `mesh_exponent` is set;
/// with an exponent the mesh is round(epsilon^-exponent) cells per axis. The
/// default exponent 0.5 gives dx = sqrt(epsilon).
/// The run length is `steps` if given, else `end_time` if given, else
/// `end_time_tc` half-decay times (Taylor vortex only).
struct RunConfig {
    std::string id;
    Reconstruction scheme = Reconstruction::Dugks;
    double epsilon = 1e-4;
    double tau = 1.0;
    std::optional<int> mesh;
    std::optional<double> mesh_exponent = 0.5;
    double eta = 0.5;
    BenchmarkParams benchmark;
    double end_time_tc = 1.0;
    std::optional<double> end_time;
    std::optional<std::size_t> steps;
    double sample_interval_tc = 0.05;
    std::size_t checkpoint_interval = 0;           // steps; 0 disables
    std::optional<std::size_t> stop_after_steps;   // halt early after writing a checkpoint
    std::optional<std::filesystem::path> checkpoint_path;  // default: output_dir/checkpoint_<id>.bin
    std::filesystem::path output_dir = "out";
    bool write_outputs = true;
    bool plot = false;
    int threads = 1;

    /// Throws ConfigError on inconsistent settings.
    void validate() const;
    int resolved_mesh() const;
    /// `id` if set, otherwise built from scheme, epsilon and mesh; always
    /// restricted to characters safe in file names.
    std::string resolved_id() const;
    std::filesystem::path resolved_checkpoint_path() const;
};

struct CaseReport {
    std::string id;
    Reconstruction scheme = Reconstruction::Dugks;
    double epsilon = 0.0;
    int n = 0;
    double eta = 0.0;
    double dx = 0.0;
    double dt = 0.0;
    double delta_x = 0.0;  // dx / epsilon
    double delta_t = 0.0;  // dt / epsilon
    std::size_t steps = 0;
    double final_time = 0.0;
    double error_time = 0.0;
    double l2_error = 0.0;
    double nu_fit = 0.0;
    double nu_expected = 0.0;
    double mass_drift = 0.0;
    double momentum_drift = 0.0;
    bool conservation_ok = false;
    double max_velocity = 0.0;  // largest sampled max|u|
    double wall_time = 0.0;
    bool completed = false;     // false when stopped early by stop_after_steps
    std::string status = "ok";
    std::vector<DecaySample> decay;
};

/// Relative drift tolerance applied to total mass and momentum.
inline constexpr double kConservationTolerance = 1e-12;

/// Runs a case from its initial condition.
CaseReport run_case(const RunConfig& config);

/// Continues a case from a checkpoint written by an earlier run of the same config.
CaseReport resume_case(const RunConfig& config, const std::filesystem::path& checkpoint);

struct SweepResult {
    std::vector<CaseReport> reports;
    std::filesystem::path summary_path;
};

/// Runs every case; failures are recorded per row and never drop a row.
/// Writes summary.csv into `output_dir` when it is non-empty.
SweepResult run_sweep(const std::vector<RunConfig>& configs, const std::filesystem::path& output_dir,
                      int jobs = 1);

struct ConvergenceRow {
    int n;
    double dx;
    double l2_error;
};

struct ConvergenceResult {
    std::vector<ConvergenceRow> rows;
    double order = 0.0;   // NaN when errors are not monotone
    bool monotone = true;
};

/// Least-squares slope of log(error) against log(dx).
double observed_order(const std::vector<ConvergenceRow>& rows);

/// Monotonicity flag and slope for rows ordered from coarse to fine.
ConvergenceResult assess_convergence(std::vector<ConvergenceRow> rows);

/// Runs `base` on each mesh in `levels` (at least three, each doubling).
ConvergenceResult run_convergence(const RunConfig& base, const std::vector<int>& levels,
                                  const std::filesystem::path& output_dir = {});

// Config files are JSON; see README.md for the schema.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::vector<RunConfig> load_sweep_config(const std::filesystem::path& path);

struct ConvergenceConfig {
    RunConfig base;
    std::vector<int> levels;
};
ConvergenceConfig load_convergence_config(const std::filesystem::path& path);

/// Writes summary.csv for the given reports.
void write_summary_csv(const std::vector<CaseReport>& reports, const std::filesystem::path& path);

}  // namespace dugks
