#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace dugks {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<Vec2, 2>;

enum class VelocitySetKind : unsigned char { D1Q3 = 1, D2Q9 = 2 };

/// Discrete velocity set built from tensor-product three-point Gauss-Hermite
/// quadrature. One-dimensional sets keep the second velocity component at zero.
struct DiscreteVelocitySet {
    VelocitySetKind kind;
    int dim;
    std::vector<Vec2> velocities;
    std::vector<double> weights;
    double rt0;
    double xi_max;  // max |component| over all velocities

    std::size_t size() const noexcept { return weights.size(); }
    std::string_view name() const noexcept;
};

DiscreteVelocitySet build_d2q9(double rt0);
DiscreteVelocitySet build_d1q3(double rt0);
DiscreteVelocitySet build_velocity_set(VelocitySetKind kind, double rt0);

struct Moments {
    double rho;
    Vec2 momentum;
};

/// Density and momentum of a per-velocity distribution. Velocity is left to
/// the caller so that vanishing density stays visible.
Moments moments(const DiscreteVelocitySet& set, std::span<const double> f);

}  // namespace dugks
