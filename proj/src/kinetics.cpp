#include "dugks/kinetics.hpp"

#include <cmath>
#include <string>

#include "dugks/error.hpp"
#include "dugks/grid.hpp"

namespace dugks {

RelaxationModel::RelaxationModel(double epsilon, double tau) : epsilon_(epsilon), tau_(tau)
{
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw ConfigError("epsilon must be positive and finite, got " + std::to_string(epsilon));
    }
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw ConfigError("tau must be positive and finite, got " + std::to_string(tau));
    }
}

void equilibrium(const DiscreteVelocitySet& set, const MacroState& state, std::span<double> out)
{
    if (!(state.rho > 0.0)) {
        throw NonPhysicalFieldError("equilibrium: density must be positive, got " +
                                    std::to_string(state.rho));
    }
    if (out.size() != set.size()) {
        throw ConfigError("equilibrium: output has wrong length");
    }
    const double inv_rt0 = 1.0 / set.rt0;
    const double usq = state.u[0] * state.u[0] + state.u[1] * state.u[1];
    for (std::size_t i = 0; i < set.size(); ++i) {
        const double eu = set.velocities[i][0] * state.u[0] + set.velocities[i][1] * state.u[1];
        out[i] = set.weights[i] * state.rho *
                 (1.0 + eu * inv_rt0 + 0.5 * eu * eu * inv_rt0 * inv_rt0 - 0.5 * usq * inv_rt0);
    }
    // Close the rest population on the density so the moments hold without
    // a systematic rounding bias.
    double moving = 0.0;
    for (std::size_t i = 1; i < set.size(); ++i) {
        moving += out[i];
    }
    out[0] = state.rho - moving;
}

std::vector<double> equilibrium(const DiscreteVelocitySet& set, const MacroState& state)
{
    std::vector<double> out(set.size());
    equilibrium(set, state, out);
    return out;
}

MacroState macro_state(const DiscreteVelocitySet& set, std::span<const double> f)
{
    const Moments m = moments(set, f);
    if (!(m.rho > kDensityFloor)) {
        throw NonPhysicalFieldError("non-physical density " + std::to_string(m.rho));
    }
    return {m.rho, {m.momentum[0] / m.rho, m.momentum[1] / m.rho}};
}

std::vector<double> bgk_collision(const DiscreteVelocitySet& set, std::span<const double> f,
                                  const RelaxationModel& model)
{
    const MacroState state = macro_state(set, f);
    std::vector<double> q = equilibrium(set, state);
    const double inv_tau = 1.0 / model.tau_eff();
    for (std::size_t i = 0; i < q.size(); ++i) {
        q[i] = -(f[i] - q[i]) * inv_tau;
    }
    return q;
}

FlowDerivatives euler_balance(const MacroState& state, const FlowDerivatives& spatial, double rt0)
{
    FlowDerivatives d = spatial;
    const double div_u = spatial.grad_u[0][0] + spatial.grad_u[1][1];
    d.dt_rho = -(state.u[0] * spatial.grad_rho[0] + state.u[1] * spatial.grad_rho[1]) -
               state.rho * div_u;
    for (int a = 0; a < 2; ++a) {
        const double advect = state.u[0] * spatial.grad_u[a][0] + state.u[1] * spatial.grad_u[a][1];
        d.dt_u[a] = -advect - rt0 * spatial.grad_rho[a] / state.rho;
    }
    return d;
}

std::vector<double> chapman_enskog_f1(const DiscreteVelocitySet& set, const MacroState& state,
                                      const FlowDerivatives& derivs, const RelaxationModel& model)
{
    const std::vector<double> feq = equilibrium(set, state);
    const double theta = set.rt0;
    const double tau = model.tau();
    std::vector<double> f1(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        const Vec2& xi = set.velocities[i];
        const double eu = xi[0] * state.u[0] + xi[1] * state.u[1];
        // Material derivative along xi of rho and of each velocity component.
        const double d_rho = derivs.dt_rho + xi[0] * derivs.grad_rho[0] + xi[1] * derivs.grad_rho[1];
        double total = feq[i] / state.rho * d_rho;
        for (int a = 0; a < 2; ++a) {
            const double d_ua =
                derivs.dt_u[a] + xi[0] * derivs.grad_u[a][0] + xi[1] * derivs.grad_u[a][1];
            const double dfeq_dua = set.weights[i] * state.rho *
                                    (xi[a] / theta + eu * xi[a] / (theta * theta) - state.u[a] / theta);
            total += dfeq_dua * d_ua;
        }
        f1[i] = -tau * total;
    }
    return f1;
}

void init_ce(DistributionField& field, const AnalyticInitialCondition& analytic, double epsilon,
             double tau)
{
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
        throw ConfigError("init_ce: epsilon must be non-negative, got " + std::to_string(epsilon));
    }
    const RelaxationModel model(1.0, tau);
    const auto& grid = field.grid();
    const auto& set = field.set();
    const double eps = epsilon;
    for (std::size_t cell = 0; cell < grid.cell_count(); ++cell) {
        const Vec2 x = grid.center(cell);
        MacroState state{};
        FlowDerivatives derivs{};
        analytic(x[0], x[1], state, derivs);
        const std::vector<double> feq = equilibrium(set, state);
        const std::vector<double> f1 = chapman_enskog_f1(set, state, derivs, model);
        for (std::size_t q = 0; q < set.size(); ++q) {
            field.at(cell, q) = feq[q] + eps * f1[q];
        }
    }
}

void init_ce(DistributionField& field, const AnalyticInitialCondition& analytic,
             const RelaxationModel& model)
{
    init_ce(field, analytic, model.epsilon(), model.tau());
}

}  // namespace dugks
