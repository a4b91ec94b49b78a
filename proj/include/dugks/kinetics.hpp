#pragma once

#include <functional>
#include <span>
#include <vector>

#include "dugks/velocity_set.hpp"

namespace dugks {

/// Densities at or below this value are treated as a non-physical field.
inline constexpr double kDensityFloor = 1e-12;

struct MacroState {
    double rho;
    Vec2 u;
};

/// BGK relaxation parameters. The collision term is -(f - f_eq) / tau_eff with
/// tau_eff = epsilon * tau.
class RelaxationModel {
public:
    explicit RelaxationModel(double epsilon, double tau = 1.0);

    double epsilon() const noexcept { return epsilon_; }
    double tau() const noexcept { return tau_; }
    double tau_eff() const noexcept { return epsilon_ * tau_; }

private:
    double epsilon_;
    double tau_;
};

/// First derivatives of the macroscopic fields at a point.
/// grad_u[a][b] holds d u_a / d x_b.
struct FlowDerivatives {
    Mat2 grad_u{};
    Vec2 grad_rho{};
    Vec2 dt_u{};
    double dt_rho = 0.0;
};

/// Quadratic low-Mach equilibrium written into `out`.
void equilibrium(const DiscreteVelocitySet& set, const MacroState& state, std::span<double> out);
std::vector<double> equilibrium(const DiscreteVelocitySet& set, const MacroState& state);

/// Macroscopic state of `f`; throws NonPhysicalFieldError below kDensityFloor.
MacroState macro_state(const DiscreteVelocitySet& set, std::span<const double> f);

/// Collision term divided by epsilon: -(f - f_eq(moments of f)) / tau_eff.
std::vector<double> bgk_collision(const DiscreteVelocitySet& set, std::span<const double> f,
                                  const RelaxationModel& model);

/// Time derivatives of (rho, u) implied by the isothermal Euler equations with
/// pressure rho * rt0, given spatial gradients. These make the first-order
/// Chapman-Enskog coefficient free of conservative moments.
FlowDerivatives euler_balance(const MacroState& state, const FlowDerivatives& spatial, double rt0);

/// First-order Chapman-Enskog coefficient f1 = -tau * (d_t + xi . grad) f_eq,
/// evaluated by the chain rule through the equilibrium's (rho, u) dependence.
std::vector<double> chapman_enskog_f1(const DiscreteVelocitySet& set, const MacroState& state,
                                      const FlowDerivatives& derivs, const RelaxationModel& model);

class DistributionField;

/// Macroscopic state and derivatives at a point, supplied by a benchmark.
using AnalyticInitialCondition = std::function<void(double x, double y, MacroState& state,
                                                    FlowDerivatives& derivs)>;

/// f = f_eq + epsilon * f1 at every cell center. epsilon = 0 gives a pure
/// equilibrium initialization.
void init_ce(DistributionField& field, const AnalyticInitialCondition& analytic, double epsilon,
             double tau = 1.0);
void init_ce(DistributionField& field, const AnalyticInitialCondition& analytic,
             const RelaxationModel& model);

}  // namespace dugks
