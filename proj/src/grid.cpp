#include "dugks/grid.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "dugks/error.hpp"

namespace dugks {

UniformPeriodicGrid::UniformPeriodicGrid(int dim, int n) : dim_(dim), n_(n), dx_(1.0 / n), cells_(0)
{
    if (dim != 1 && dim != 2) {
        throw ConfigError("grid dimension must be 1 or 2, got " + std::to_string(dim));
    }
    if (n < 4) {
        throw ConfigError("grid needs at least 4 cells per axis, got " + std::to_string(n));
    }
    cells_ = dim == 1 ? static_cast<std::size_t>(n)
                      : static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
}

std::size_t UniformPeriodicGrid::neighbor(std::size_t cell, int axis, int offset) const noexcept
{
    const int i = coord(cell, 0);
    const int k = dim_ == 2 ? coord(cell, 1) : 0;
    auto wrap = [this](int v) { return ((v % n_) + n_) % n_; };
    if (axis == 0) {
        return index(wrap(i + offset), k);
    }
    return index(i, wrap(k + offset));
}

Vec2 UniformPeriodicGrid::center(std::size_t cell) const noexcept
{
    const double x = (coord(cell, 0) + 0.5) * dx_;
    const double y = dim_ == 2 ? (coord(cell, 1) + 0.5) * dx_ : 0.0;
    return {x, y};
}

DistributionField::DistributionField(UniformPeriodicGrid grid, DiscreteVelocitySet set)
    : grid_(std::move(grid)), set_(std::move(set))
{
    if (grid_.dim() != set_.dim) {
        throw ConfigError("grid dimension " + std::to_string(grid_.dim()) +
                          " does not match velocity set " + std::string(set_.name()));
    }
    current_.assign(grid_.cell_count() * set_.size(), 0.0);
    next_.assign(current_.size(), 0.0);
}

std::vector<double> DistributionField::cell_values(std::size_t cell) const
{
    std::vector<double> f(set_.size());
    for (std::size_t q = 0; q < f.size(); ++q) {
        f[q] = at(cell, q);
    }
    return f;
}

void DistributionField::swap_buffers(double dt) noexcept
{
    current_.swap(next_);
    ++steps_;
    time_ += dt;
}

InterfaceSample interface_value_and_slope(const DistributionField& field, int axis, std::size_t cell,
                                          std::size_t q)
{
    return interface_sample(field.grid(), axis, cell, upwind_side(field.set(), q, 1 - axis),
                            [&](std::size_t c) { return field.at(c, q); });
}

void check_foot_in_stencil(const DiscreteVelocitySet& set, const UniformPeriodicGrid& grid, int axis,
                           std::size_t q, double dt)
{
    // The transverse shift must stay within the neighbouring rows as well.
    for (int a = 0; a < grid.dim(); ++a) {
        const double beta = 0.5 * set.velocities[q][a] * dt / grid.dx();
        if (!(std::abs(beta) <= 0.5)) {
            throw ConfigError("CFL violation: characteristic foot leaves the face stencil (axis " +
                              std::to_string(axis) + ", beta=" + std::to_string(beta) + ")");
        }
    }
}

double foot_point_value(const DistributionField& field, int axis, std::size_t cell, std::size_t q,
                        double dt)
{
    check_foot_in_stencil(field.set(), field.grid(), axis, q, dt);
    return foot_point(field.grid(), field.set(), axis, cell, q, dt,
                      [&](std::size_t c) { return field.at(c, q); });
}

}  // namespace dugks
