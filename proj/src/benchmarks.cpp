#include "dugks/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "dugks/error.hpp"

namespace dugks {

TaylorVortexSpec make_taylor_vortex(double a, double b, double u0, double rho0, double rt0,
                                    const RelaxationModel& model)
{
    if (!(a > 0.0) || !(b > 0.0)) {
        throw ConfigError("Taylor vortex wavenumbers must be positive");
    }
    if (!(rho0 > 0.0) || !(rt0 > 0.0)) {
        throw ConfigError("Taylor vortex needs positive rho0 and rt0");
    }
    if (!(u0 >= 0.0) || u0 / std::sqrt(rt0) > 0.05) {
        throw ConfigError("Taylor vortex amplitude outside the low-Mach range: u0/sqrt(rt0) = " +
                          std::to_string(u0 / std::sqrt(rt0)));
    }
    return {a, b, u0, rho0, rt0, model.tau_eff() * rt0};
}

TaylorSample taylor_analytic(const TaylorVortexSpec& spec, double x, double y, double t)
{
    const double decay = std::exp(-spec.nu * spec.alpha() * t);
    const double ax = spec.a * x;
    const double by = spec.b * y;
    TaylorSample s{};
    s.u[0] = -(spec.u0 / spec.a) * std::cos(ax) * std::sin(by) * decay;
    s.u[1] = (spec.u0 / spec.b) * std::sin(ax) * std::cos(by) * decay;
    s.p = spec.p0() - 0.25 * spec.rho0 * spec.u0 * spec.u0 *
                          (std::cos(2.0 * ax) / (spec.a * spec.a) + std::cos(2.0 * by) / (spec.b * spec.b)) *
                          decay * decay;
    return s;
}

FlowDerivatives taylor_derivatives(const TaylorVortexSpec& spec, double x, double y, double t)
{
    const double rate = spec.nu * spec.alpha();
    const double decay = std::exp(-rate * t);
    const double ax = spec.a * x;
    const double by = spec.b * y;
    const double u0 = spec.u0;
    FlowDerivatives d{};
    d.grad_u[0][0] = u0 * std::sin(ax) * std::sin(by) * decay;
    d.grad_u[0][1] = -(u0 * spec.b / spec.a) * std::cos(ax) * std::cos(by) * decay;
    d.grad_u[1][0] = (u0 * spec.a / spec.b) * std::cos(ax) * std::cos(by) * decay;
    d.grad_u[1][1] = -u0 * std::sin(ax) * std::sin(by) * decay;
    const TaylorSample s = taylor_analytic(spec, x, y, t);
    d.dt_u = {-rate * s.u[0], -rate * s.u[1]};
    return d;
}

double t_half(const TaylorVortexSpec& spec)
{
    if (!(spec.nu > 0.0)) {
        throw ConfigError("t_half needs a positive viscosity");
    }
    return std::numbers::ln2 / (spec.nu * spec.alpha());
}

AnalyticInitialCondition taylor_initial_condition(const TaylorVortexSpec& spec)
{
    return [spec](double x, double y, MacroState& state, FlowDerivatives& derivs) {
        const TaylorSample s = taylor_analytic(spec, x, y, 0.0);
        state = MacroState{spec.rho0, s.u};
        derivs = euler_balance(state, taylor_derivatives(spec, x, y, 0.0), spec.rt0);
    };
}

Vec2 cell_velocity(const DistributionField& field, std::size_t cell)
{
    const auto& set = field.set();
    double rho = 0.0;
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t q = 0; q < set.size(); ++q) {
        const double f = field.at(cell, q);
        rho += f;
        mx += set.velocities[q][0] * f;
        my += set.velocities[q][1] * f;
    }
    if (!(rho > kDensityFloor)) {
        throw NonPhysicalFieldError("non-physical density " + std::to_string(rho) + " in cell " +
                                    std::to_string(cell));
    }
    return {mx / rho, my / rho};
}

double relative_l2_error(const DistributionField& field, const TaylorVortexSpec& spec, double t)
{
    double err = 0.0;
    double ref = 0.0;
    const auto& grid = field.grid();
    for (std::size_t cell = 0; cell < grid.cell_count(); ++cell) {
        const Vec2 x = grid.center(cell);
        const Vec2 u = cell_velocity(field, cell);
        const Vec2 ua = taylor_analytic(spec, x[0], x[1], t).u;
        err += (u[0] - ua[0]) * (u[0] - ua[0]) + (u[1] - ua[1]) * (u[1] - ua[1]);
        ref += ua[0] * ua[0] + ua[1] * ua[1];
    }
    if (!(ref > 0.0) || !std::isfinite(ref)) {
        throw DegenerateError("relative_l2_error: analytic velocity norm vanishes at t=" +
                              std::to_string(t));
    }
    return std::sqrt(err) / std::sqrt(ref);
}

double max_velocity(const DistributionField& field)
{
    double best = 0.0;
    for (std::size_t cell = 0; cell < field.grid().cell_count(); ++cell) {
        const Vec2 u = cell_velocity(field, cell);
        best = std::max(best, std::hypot(u[0], u[1]));
    }
    return best;
}

double fit_decay_viscosity(std::span<const DecaySample> samples, double alpha)
{
    if (samples.size() < 10) {
        throw DegenerateError("fit_decay_viscosity needs at least 10 samples, got " +
                              std::to_string(samples.size()));
    }
    if (!(alpha > 0.0)) {
        throw DegenerateError("fit_decay_viscosity needs alpha > 0");
    }
    double mean_t = 0.0;
    double mean_y = 0.0;
    for (const auto& s : samples) {
        if (!(s.max_u > 0.0)) {
            throw DegenerateError("fit_decay_viscosity: non-positive sample at t=" + std::to_string(s.t));
        }
        mean_t += s.t;
        mean_y += std::log(s.max_u);
    }
    const double count = static_cast<double>(samples.size());
    mean_t /= count;
    mean_y /= count;
    double stt = 0.0;
    double sty = 0.0;
    for (const auto& s : samples) {
        const double dt = s.t - mean_t;
        stt += dt * dt;
        sty += dt * (std::log(s.max_u) - mean_y);
    }
    if (!(stt > 0.0)) {
        throw DegenerateError("fit_decay_viscosity: samples share a single time");
    }
    return -(sty / stt) / alpha;
}

}  // namespace dugks
