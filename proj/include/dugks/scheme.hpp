#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

#include "dugks/grid.hpp"
#include "dugks/kinetics.hpp"

namespace dugks {

/// How the half-step interface distribution is reconstructed.
///  - Dugks: characteristic half step including the collision term.
///  - Clr: collision-less reconstruction, collision kept in the cell update.
///  - CollisionlessLw: collision dropped everywhere (Lax-Wendroff transport).
enum class Reconstruction { Dugks, Clr, CollisionlessLw };

std::string_view to_string(Reconstruction r) noexcept;
/// Accepts "dugks", "clr" and "lw".
Reconstruction parse_reconstruction(std::string_view name);

/// dt = eta * dx / xi_max with eta in (0, 1).
double compute_dt(const UniformPeriodicGrid& grid, const DiscreteVelocitySet& set, double eta);

class SchemeConfig {
public:
    SchemeConfig(RelaxationModel model, double cfl, Reconstruction reconstruction,
                 const UniformPeriodicGrid& grid, const DiscreteVelocitySet& set);

    const RelaxationModel& model() const noexcept { return model_; }
    double cfl() const noexcept { return cfl_; }
    Reconstruction reconstruction() const noexcept { return reconstruction_; }
    double dt() const noexcept { return dt_; }

private:
    RelaxationModel model_;
    double cfl_;
    Reconstruction reconstruction_;
    double dt_;
};

/// Half-step face distributions for every face and velocity. faces[axis]
/// stores the face between `cell` and its +1 neighbour along `axis` at
/// q * cell_count + cell.
struct InterfaceFluxes {
    std::size_t cell_count = 0;
    std::size_t velocity_count = 0;
    std::array<std::vector<double>, 2> faces;

    double at(int axis, std::size_t cell, std::size_t q) const noexcept
    {
        return faces[axis][q * cell_count + cell];
    }
};

// Single-face reconstructions. These are scalar reference routines; the
// stepping kernel evaluates the same formulas over whole rows.

/// f^{n+1/2} at one face from the characteristic half step with trapezoidal
/// collision, closed through the face moments.
std::vector<double> reconstruct_interface_dugks(const DistributionField& field, int axis,
                                                std::size_t cell, const RelaxationModel& model,
                                                double dt);

/// f^{n+1/2} at one face from collision-less transport of the cell values.
std::vector<double> reconstruct_interface_clr(const DistributionField& field, int axis,
                                              std::size_t cell, double dt);

InterfaceFluxes compute_fluxes(const DistributionField& field, const SchemeConfig& config);

/// Writes f^{n+1} into the field's next buffer; the current buffer is untouched.
void update_cells(DistributionField& field, const InterfaceFluxes& fluxes, const SchemeConfig& config);

/// Reusable stepping workspace. Threads only split rows, so results do not
/// depend on the thread count.
class Stepper {
public:
    explicit Stepper(const SchemeConfig& config, int threads = 1);

    /// Fused reconstruct/update sweep over rows followed by a buffer swap.
    void advance(DistributionField& field);
    const SchemeConfig& config() const noexcept { return config_; }
    int threads() const noexcept { return threads_; }

private:
    SchemeConfig config_;
    int threads_;
    std::vector<double> scratch_;  // per-thread ring of row buffers
};

/// One full time step: reconstruct faces, update cells, swap buffers.
void step(DistributionField& field, const SchemeConfig& config);

}  // namespace dugks
