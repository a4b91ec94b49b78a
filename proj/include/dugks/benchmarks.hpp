#pragma once

#include <span>
#include <vector>

#include "dugks/grid.hpp"
#include "dugks/kinetics.hpp"

namespace dugks {

/// Decaying Taylor vortex on the unit square.
struct TaylorVortexSpec {
    double a;
    double b;
    double u0;
    double rho0;
    double rt0;
    double nu;

    double alpha() const noexcept { return a * a + b * b; }
    double p0() const noexcept { return rho0 * rt0; }
};

/// Builds a spec with nu = epsilon * tau * rt0 and validates it.
TaylorVortexSpec make_taylor_vortex(double a, double b, double u0, double rho0, double rt0,
                                    const RelaxationModel& model);

struct TaylorSample {
    Vec2 u;
    double p;
};

TaylorSample taylor_analytic(const TaylorVortexSpec& spec, double x, double y, double t);

/// Exact spatial and time derivatives of the analytic velocity; density is
/// uniform so its derivatives are zero.
FlowDerivatives taylor_derivatives(const TaylorVortexSpec& spec, double x, double y, double t);

/// Time for the velocity amplitude to halve: ln 2 / (nu * alpha).
double t_half(const TaylorVortexSpec& spec);

/// Initial condition adapter for init_ce: uniform density rho0, analytic
/// velocity, and Euler-balanced time derivatives.
AnalyticInitialCondition taylor_initial_condition(const TaylorVortexSpec& spec);

/// Cell-center velocity from the field's moments.
Vec2 cell_velocity(const DistributionField& field, std::size_t cell);

/// Relative L2 error of the cell velocities against the analytic field at t.
double relative_l2_error(const DistributionField& field, const TaylorVortexSpec& spec, double t);

/// Largest cell velocity magnitude.
double max_velocity(const DistributionField& field);

struct DecaySample {
    double t;
    double max_u;
};

/// Least-squares slope of ln(max|u|) against t, divided by -alpha.
double fit_decay_viscosity(std::span<const DecaySample> samples, double alpha);

}  // namespace dugks
