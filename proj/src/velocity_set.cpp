#include "dugks/velocity_set.hpp"

#include <cmath>
#include <string>

#include "dugks/error.hpp"

namespace dugks {

namespace {

void require_positive_rt0(double rt0)
{
    if (!(rt0 > 0.0) || !std::isfinite(rt0)) {
        throw ConfigError("rt0 must be positive and finite, got " + std::to_string(rt0));
    }
}

}  // namespace

std::string_view DiscreteVelocitySet::name() const noexcept
{
    return kind == VelocitySetKind::D2Q9 ? "D2Q9" : "D1Q3";
}

DiscreteVelocitySet build_d2q9(double rt0)
{
    require_positive_rt0(rt0);
    const double c = std::sqrt(3.0 * rt0);
    DiscreteVelocitySet set{VelocitySetKind::D2Q9, 2, {}, {}, rt0, c};
    set.velocities = {
        {0.0, 0.0}, {c, 0.0}, {0.0, c},  {-c, 0.0}, {0.0, -c},
        {c, c},     {-c, c},  {-c, -c}, {c, -c},
    };
    set.weights = {
        4.0 / 9.0,  1.0 / 9.0,  1.0 / 9.0,  1.0 / 9.0, 1.0 / 9.0,
        1.0 / 36.0, 1.0 / 36.0, 1.0 / 36.0, 1.0 / 36.0,
    };
    return set;
}

DiscreteVelocitySet build_d1q3(double rt0)
{
    require_positive_rt0(rt0);
    const double c = std::sqrt(3.0 * rt0);
    DiscreteVelocitySet set{VelocitySetKind::D1Q3, 1, {}, {}, rt0, c};
    set.velocities = {{0.0, 0.0}, {c, 0.0}, {-c, 0.0}};
    set.weights = {2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0};
    return set;
}

DiscreteVelocitySet build_velocity_set(VelocitySetKind kind, double rt0)
{
    switch (kind) {
    case VelocitySetKind::D1Q3:
        return build_d1q3(rt0);
    case VelocitySetKind::D2Q9:
        return build_d2q9(rt0);
    }
    throw ConfigError("unknown velocity set identifier");
}

Moments moments(const DiscreteVelocitySet& set, std::span<const double> f)
{
    if (f.size() != set.size()) {
        throw ConfigError("moments: expected " + std::to_string(set.size()) +
                          " values, got " + std::to_string(f.size()));
    }
    Moments m{0.0, {0.0, 0.0}};
    for (std::size_t i = 0; i < f.size(); ++i) {
        m.rho += f[i];
        m.momentum[0] += set.velocities[i][0] * f[i];
        m.momentum[1] += set.velocities[i][1] * f[i];
    }
    return m;
}

}  // namespace dugks
