#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dugks/velocity_set.hpp"

namespace dugks {

/// Uniform periodic grid on the unit interval or unit square. Cells are
/// numbered with the x index running fastest: cell = k * n + i.
class UniformPeriodicGrid {
public:
    UniformPeriodicGrid(int dim, int n);

    int dim() const noexcept { return dim_; }
    int n() const noexcept { return n_; }
    double dx() const noexcept { return dx_; }
    std::size_t cell_count() const noexcept { return cells_; }

    std::size_t index(int i, int k = 0) const noexcept
    {
        return static_cast<std::size_t>(k) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(i);
    }
    int coord(std::size_t cell, int axis) const noexcept
    {
        return axis == 0 ? static_cast<int>(cell % n_) : static_cast<int>(cell / n_);
    }
    /// Periodic neighbour `offset` cells away along `axis`.
    std::size_t neighbor(std::size_t cell, int axis, int offset) const noexcept;
    Vec2 center(std::size_t cell) const noexcept;

private:
    int dim_;
    int n_;
    double dx_;
    std::size_t cells_;
};

/// Distribution values on a grid with an old/new buffer pair. Storage is
/// velocity-major: value(cell, q) lives at q * cell_count + cell.
class DistributionField {
public:
    DistributionField(UniformPeriodicGrid grid, DiscreteVelocitySet set);

    const UniformPeriodicGrid& grid() const noexcept { return grid_; }
    const DiscreteVelocitySet& set() const noexcept { return set_; }

    double& at(std::size_t cell, std::size_t q) noexcept { return current_[q * grid_.cell_count() + cell]; }
    double at(std::size_t cell, std::size_t q) const noexcept
    {
        return current_[q * grid_.cell_count() + cell];
    }
    std::vector<double> cell_values(std::size_t cell) const;

    std::span<double> values() noexcept { return current_; }
    std::span<const double> values() const noexcept { return current_; }
    std::span<double> next_values() noexcept { return next_; }

    double time() const noexcept { return time_; }
    void set_time(double t) noexcept { time_ = t; }
    std::size_t step_count() const noexcept { return steps_; }
    void set_step_count(std::size_t s) noexcept { steps_ = s; }

    /// Exchange old and new buffers and advance the clock by dt.
    void swap_buffers(double dt) noexcept;

private:
    UniformPeriodicGrid grid_;
    DiscreteVelocitySet set_;
    std::vector<double> current_;
    std::vector<double> next_;
    double time_ = 0.0;
    std::size_t steps_ = 0;
};

/// Linear data around the face between `cell` and its +1 neighbour along
/// `axis`, enough to evaluate the bilinear interpolant of the four cell
/// centres that surround a point near the face:
///   value + d_n * slope[axis] + d_t * slope[t] + d_n * d_t * twist
/// for offsets (d_n, d_t) from the face centre. The normal slope is the
/// central difference across the face. The transverse slope is one-sided,
/// taken towards `transverse_side` (+1 or -1) and averaged over the two
/// face cells; `twist` is its change across the face. In 1-D only the
/// normal terms are present.
struct InterfaceSample {
    double value;
    Vec2 slope;
    double twist;
};

template <class Values>
InterfaceSample interface_sample(const UniformPeriodicGrid& grid, int axis, std::size_t cell,
                                 int transverse_side, Values&& values)
{
    const std::size_t right = grid.neighbor(cell, axis, +1);
    const double fl = values(cell);
    const double fr = values(right);
    InterfaceSample s{0.5 * (fl + fr), {0.0, 0.0}, 0.0};
    s.slope[axis] = (fr - fl) / grid.dx();
    if (grid.dim() == 2) {
        const int t = 1 - axis;
        const int side = transverse_side < 0 ? -1 : 1;
        const double dl = side * (values(grid.neighbor(cell, t, side)) - fl) / grid.dx();
        const double dr = side * (values(grid.neighbor(right, t, side)) - fr) / grid.dx();
        s.slope[t] = 0.5 * (dl + dr);
        s.twist = (dr - dl) / grid.dx();
    }
    return s;
}

/// Face sample for velocity q, with the transverse side chosen upwind of q
/// (the side the characteristic foot moves towards).
InterfaceSample interface_value_and_slope(const DistributionField& field, int axis, std::size_t cell,
                                          std::size_t q);

/// Throws ConfigError when the half-step characteristic foot of velocity q
/// leaves the two face-adjacent cells.
void check_foot_in_stencil(const DiscreteVelocitySet& set, const UniformPeriodicGrid& grid, int axis,
                           std::size_t q, double dt);

/// Side of the face, along axis `a`, that a characteristic of velocity q
/// comes from.
inline int upwind_side(const DiscreteVelocitySet& set, std::size_t q, int a) noexcept
{
    return set.velocities[q][a] > 0.0 ? -1 : 1;
}

/// Value at x_face - xi_q * dt / 2 by bilinear interpolation of the four
/// cell centres around that point (linear across the face in 1-D).
template <class Values>
double foot_point(const UniformPeriodicGrid& grid, const DiscreteVelocitySet& set, int axis,
                  std::size_t cell, std::size_t q, double dt, Values&& values)
{
    const int t = 1 - axis;
    const InterfaceSample s = interface_sample(grid, axis, cell, upwind_side(set, q, t), values);
    const Vec2& xi = set.velocities[q];
    const double dn = -0.5 * dt * xi[axis];
    const double dtr = grid.dim() == 2 ? -0.5 * dt * xi[t] : 0.0;
    return s.value + dn * s.slope[axis] + dtr * s.slope[t] + dn * dtr * s.twist;
}

double foot_point_value(const DistributionField& field, int axis, std::size_t cell, std::size_t q,
                        double dt);

}  // namespace dugks
