#include "dugks/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>
#include <utility>

#include "dugks/error.hpp"

namespace dugks {

std::string_view to_string(Reconstruction r) noexcept
{
    switch (r) {
    case Reconstruction::Dugks:
        return "dugks";
    case Reconstruction::Clr:
        return "clr";
    case Reconstruction::CollisionlessLw:
        return "lw";
    }
    return "unknown";
}

Reconstruction parse_reconstruction(std::string_view name)
{
    if (name == "dugks") {
        return Reconstruction::Dugks;
    }
    if (name == "clr") {
        return Reconstruction::Clr;
    }
    if (name == "lw") {
        return Reconstruction::CollisionlessLw;
    }
    throw ConfigError("unknown scheme '" + std::string(name) + "' (expected dugks, clr or lw)");
}

double compute_dt(const UniformPeriodicGrid& grid, const DiscreteVelocitySet& set, double eta)
{
    if (!(eta > 0.0 && eta < 1.0)) {
        throw ConfigError("CFL number must lie in (0, 1), got " + std::to_string(eta));
    }
    return eta * grid.dx() / set.xi_max;
}

SchemeConfig::SchemeConfig(RelaxationModel model, double cfl, Reconstruction reconstruction,
                           const UniformPeriodicGrid& grid, const DiscreteVelocitySet& set)
    : model_(model), cfl_(cfl), reconstruction_(reconstruction), dt_(compute_dt(grid, set, cfl))
{
}

namespace {

void check_cfl(const DistributionField& field, int axis, double dt)
{
    for (std::size_t q = 0; q < field.set().size(); ++q) {
        check_foot_in_stencil(field.set(), field.grid(), axis, q, dt);
    }
}

// Moments of v, then v <- v + pull * (f_eq(moments of v) - v).
void relax_in_place(const DiscreteVelocitySet& set, std::vector<double>& v, double pull,
                    const char* where)
{
    const Moments m = moments(set, v);
    if (!(m.rho > kDensityFloor)) {
        throw NonPhysicalFieldError(std::string(where) + ": non-physical density " +
                                    std::to_string(m.rho));
    }
    const std::vector<double> feq =
        equilibrium(set, MacroState{m.rho, {m.momentum[0] / m.rho, m.momentum[1] / m.rho}});
    for (std::size_t q = 0; q < v.size(); ++q) {
        v[q] += pull * (feq[q] - v[q]);
    }
}

}  // namespace

std::vector<double> reconstruct_interface_clr(const DistributionField& field, int axis,
                                              std::size_t cell, double dt)
{
    check_cfl(field, axis, dt);
    std::vector<double> out(field.set().size());
    for (std::size_t q = 0; q < out.size(); ++q) {
        out[q] = foot_point_value(field, axis, cell, q, dt);
    }
    return out;
}

std::vector<double> reconstruct_interface_dugks(const DistributionField& field, int axis,
                                                std::size_t cell, const RelaxationModel& model,
                                                double dt)
{
    check_cfl(field, axis, dt);
    const auto& set = field.set();
    const auto& grid = field.grid();

    // Collision terms of every cell the face stencil touches.
    const std::size_t right = grid.neighbor(cell, axis, +1);
    std::vector<std::size_t> stencil{cell, right};
    if (grid.dim() == 2) {
        const int t = 1 - axis;
        for (std::size_t c : {cell, right}) {
            stencil.push_back(grid.neighbor(c, t, +1));
            stencil.push_back(grid.neighbor(c, t, -1));
        }
    }
    std::vector<std::pair<std::size_t, std::vector<double>>> collision;
    for (std::size_t c : stencil) {
        collision.emplace_back(c, bgk_collision(set, field.cell_values(c), model));
    }
    auto q_at = [&](std::size_t c, std::size_t q) {
        for (const auto& [idx, values] : collision) {
            if (idx == c) {
                return values[q];
            }
        }
        return 0.0;  // unreachable: every stencil cell is present
    };

    // b = f_foot + dt/4 * Q_foot / eps, both interpolated to the foot point.
    std::vector<double> b(set.size());
    for (std::size_t q = 0; q < set.size(); ++q) {
        const double f_foot = foot_point(grid, set, axis, cell, q, dt,
                                         [&](std::size_t c) { return field.at(c, q); });
        const double q_foot =
            foot_point(grid, set, axis, cell, q, dt, [&](std::size_t c) { return q_at(c, q); });
        b[q] = f_foot + 0.25 * dt * q_foot;
    }
    const double two_tau = 2.0 * model.tau_eff();
    const double denom = two_tau + 0.5 * dt;
    relax_in_place(set, b, 0.5 * dt / denom, "face reconstruction");
    return b;
}

namespace {

template <std::size_t NQ>
struct Lattice {
    std::array<double, NQ> ex{};
    std::array<double, NQ> ey{};
    std::array<double, NQ> w{};
    double inv_theta = 0.0;

    explicit Lattice(const DiscreteVelocitySet& set)
    {
        for (std::size_t q = 0; q < NQ; ++q) {
            ex[q] = set.velocities[q][0];
            ey[q] = set.velocities[q][1];
            w[q] = set.weights[q];
        }
        inv_theta = 1.0 / set.rt0;
    }
};

#define DUGKS_INLINE inline __attribute__((always_inline))

// Row-oriented stepping kernel. A "row" is n consecutive cells (the whole
// grid in 1-D). Row arguments point at the first cell of a row and `stride`
// is the distance between consecutive velocities. Loops run velocity-outer,
// cell-inner over small row buffers so that each inner loop is a plain
// vectorizable sweep. Density checks count failures instead of throwing.
template <std::size_t NQ, int DIM, Reconstruction R>
class Kernel {
public:
    static constexpr bool kHalf = R == Reconstruction::Dugks;
    static constexpr bool kCollide = R != Reconstruction::CollisionlessLw;

    Kernel(const DiscreteVelocitySet& set, const UniformPeriodicGrid& grid, const SchemeConfig& cfg)
        : lat_(set),
          n_(static_cast<std::size_t>(grid.n())),
          rows_(DIM == 2 ? grid.n() : 1),
          inv_dx_(1.0 / grid.dx()),
          dt_(cfg.dt()),
          tau_eff_(cfg.model().tau_eff())
    {
    }

    int rows() const noexcept { return rows_; }
    std::size_t row_offset(int k) const noexcept
    {
        return static_cast<std::size_t>((k % rows_ + rows_) % rows_) * n_;
    }
    /// Doubles of scratch one worker needs.
    std::size_t workspace_size() const noexcept { return (NQ + 6) * n_; }

    // half <- f + dt/4 Q/eps (Dugks only), full <- f + dt/2 Q/eps.
    int prepare_row(const double* __restrict f, std::size_t fstride, double* __restrict half,
                    double* __restrict full, std::size_t ostride, double* ws) const
    {
        const Macro m = fresh_macro(ws);
        const int bad = row_moments(f, fstride, m);
        const double a4 = 0.25 * dt_ / tau_eff_;
        const double a2 = 0.5 * dt_ / tau_eff_;
        double* __restrict sum = equilibrium_sum(ws);
        double* __restrict moved = moving_sum(ws);
        for (std::size_t r = 1; r <= NQ; ++r) {
            const std::size_t q = r % NQ;  // rest population last
            const double* __restrict fq = f + q * fstride;
            double* __restrict hq = half + q * ostride;
            double* __restrict gq = full + q * ostride;
            const double ex = lat_.ex[q] * lat_.inv_theta;
            const double ey = lat_.ey[q] * lat_.inv_theta;
            const double w = lat_.w[q];
#pragma omp simd
            for (std::size_t i = 0; i < n_; ++i) {
                double feq;
                if (q != 0) {
                    const double eu = ex * m.ux[i] + ey * m.uy[i];
                    feq = w * m.rho[i] * (m.base[i] + eu + 0.5 * eu * eu);
                    sum[i] += feq;
                } else {
                    feq = m.rho[i] - sum[i];
                }
                const double neq = feq - fq[i];
                if constexpr (kHalf) {
                    hq[i] = fq[i] + a4 * neq;
                }
                if (q != 0) {
                    gq[i] = fq[i] + a2 * neq;
                    moved[i] += gq[i];
                } else {
                    gq[i] = m.rho[i] - moved[i];
                }
            }
        }
        return bad;
    }

    // Face values are the bilinear interpolant of the four cell centres
    // around the characteristic foot: linear across the face with weights
    // (1/2 + beta, 1/2 - beta), blended with the upwind transverse neighbour
    // by tb = |xi_t| dt / (2 dx).

    // x-faces (i | i+1) of the row `mid`; `below`/`above` are its transverse neighbours.
    int x_faces_row(const double* __restrict below, const double* __restrict mid,
                    const double* __restrict above, std::size_t stride, double* __restrict out,
                    std::size_t ostride, double* ws) const
    {
        const std::size_t n = n_;
        const double hdt = 0.5 * dt_;
        double* __restrict b = ws + 4 * n;
        const Macro mac = fresh_macro(ws);
        for (std::size_t q = 0; q < NQ; ++q) {
            const double* __restrict m = mid + q * stride;
            const double ey = DIM == 2 ? lat_.ey[q] : 0.0;
            const double* __restrict t = (ey > 0.0 ? below : ey < 0.0 ? above : mid) + q * stride;
            double* __restrict bq = b + q * n;
            const double beta = hdt * lat_.ex[q] * inv_dx_;
            const double wl = 0.5 + beta;
            const double wr = 0.5 - beta;
            const double tb = hdt * std::abs(ey) * inv_dx_;
            const Accumulate acc(lat_, q, mac);
#pragma omp simd
            for (std::size_t i = 0; i < n - 1; ++i) {
                const double v = wl * (m[i] + tb * (t[i] - m[i])) + wr * (m[i + 1] + tb * (t[i + 1] - m[i + 1]));
                bq[i] = v;
                acc(i, v);
            }
            const double v = wl * (m[n - 1] + tb * (t[n - 1] - m[n - 1])) + wr * (m[0] + tb * (t[0] - m[0]));
            bq[n - 1] = v;
            acc(n - 1, v);
        }
        return close_faces(b, out, ostride, ws);
    }

    // y-faces between row `lower` and row `upper`.
    int y_faces_row(const double* __restrict lower, const double* __restrict upper, std::size_t stride,
                    double* __restrict out, std::size_t ostride, double* ws) const
    {
        const std::size_t n = n_;
        const double hdt = 0.5 * dt_;
        double* __restrict b = ws + 4 * n;
        const Macro mac = fresh_macro(ws);
        for (std::size_t q = 0; q < NQ; ++q) {
            const double* __restrict l = lower + q * stride;
            const double* __restrict u = upper + q * stride;
            double* __restrict bq = b + q * n;
            const double ex = lat_.ex[q];
            const double beta = hdt * lat_.ey[q] * inv_dx_;
            const double wl = 0.5 + beta;
            const double wr = 0.5 - beta;
            const double tb = hdt * std::abs(ex) * inv_dx_;
            const Accumulate acc(lat_, q, mac);
            // Upwind transverse neighbour of cell i along x.
            auto face = [&](std::size_t i, std::size_t j) {
                return wl * (l[i] + tb * (l[j] - l[i])) + wr * (u[i] + tb * (u[j] - u[i]));
            };
            if (ex > 0.0) {
                bq[0] = face(0, n - 1);
                acc(0, bq[0]);
#pragma omp simd
                for (std::size_t i = 1; i < n; ++i) {
                    const double v = wl * (l[i] + tb * (l[i - 1] - l[i])) + wr * (u[i] + tb * (u[i - 1] - u[i]));
                    bq[i] = v;
                    acc(i, v);
                }
            } else if (ex < 0.0) {
#pragma omp simd
                for (std::size_t i = 0; i < n - 1; ++i) {
                    const double v = wl * (l[i] + tb * (l[i + 1] - l[i])) + wr * (u[i] + tb * (u[i + 1] - u[i]));
                    bq[i] = v;
                    acc(i, v);
                }
                bq[n - 1] = face(n - 1, 0);
                acc(n - 1, bq[n - 1]);
            } else {
#pragma omp simd
                for (std::size_t i = 0; i < n; ++i) {
                    const double v = wl * l[i] + wr * u[i];
                    bq[i] = v;
                    acc(i, v);
                }
            }
        }
        return close_faces(b, out, ostride, ws);
    }

    // next row <- f^{n+1} from base (f^n + dt/2 Q^n/eps, or f^n for LW), the
    // row's x-faces, and the y-faces above (fy_up) and below (fy_down).
    int update_row(const double* __restrict base, std::size_t bstride, const double* __restrict fx,
                   std::size_t xstride, const double* __restrict fy_up, const double* __restrict fy_down,
                   std::size_t ystride, double* __restrict next, std::size_t nstride, double* ws) const
    {
        const std::size_t n = n_;
        const double dtdx = dt_ * inv_dx_;
        double* __restrict g = kCollide ? ws + 4 * n : nullptr;
        const Macro mac = fresh_macro(ws);
        for (std::size_t r = 1; r <= NQ; ++r) {
            const std::size_t q = r % NQ;  // same summation order as row_moments
            const double* __restrict bq = base + q * bstride;
            const double* __restrict xq = fx + q * xstride;
            const double* __restrict uq = fy_up + q * ystride;
            const double* __restrict dq = fy_down + q * ystride;
            double* __restrict gq = kCollide ? g + q * n : next + q * nstride;
            const double cx = dtdx * lat_.ex[q];
            const double cy = dtdx * lat_.ey[q];
            const Accumulate acc(lat_, q, mac);
            double v0 = bq[0] - cx * (xq[0] - xq[n - 1]);
            if constexpr (DIM == 2) {
                v0 -= cy * (uq[0] - dq[0]);
            }
            gq[0] = v0;
            if constexpr (kCollide) {
                acc(0, v0);
            }
#pragma omp simd
            for (std::size_t i = 1; i < n; ++i) {
                double v = bq[i] - cx * (xq[i] - xq[i - 1]);
                if constexpr (DIM == 2) {
                    v -= cy * (uq[i] - dq[i]);
                }
                gq[i] = v;
                if constexpr (kCollide) {
                    acc(i, v);
                }
            }
        }
        if constexpr (kCollide) {
            const double denom = 2.0 * tau_eff_ + dt_;
            return relax_row(g, next, nstride, dt_ / denom, ws);
        } else {
            return 0;
        }
    }

private:
    struct Macro {
        double* rho;
        double* ux;
        double* uy;
        double* base;
    };

    Macro macro(double* ws) const noexcept { return {ws, ws + n_, ws + 2 * n_, ws + 3 * n_}; }

    // Row moment buffers with density and momentum reset for accumulation.
    Macro fresh_macro(double* ws) const noexcept
    {
        std::fill_n(ws, 3 * n_, 0.0);
        return macro(ws);
    }

    // Adds velocity q's contribution to the row moments, which start zeroed
    // (see macro()).
    struct Accumulate {
        double* __restrict rho;
        double* __restrict mx;
        double* __restrict my;
        double ex;
        double ey;

        Accumulate(const Lattice<NQ>& lat, std::size_t q, const Macro& m)
            : rho(m.rho), mx(m.ux), my(m.uy), ex(lat.ex[q]), ey(lat.ey[q])
        {
        }
        DUGKS_INLINE void operator()(std::size_t i, double v) const
        {
            rho[i] += v;
            mx[i] += ex * v;
            my[i] += ey * v;
        }
    };

    // Density, velocity and 1 - |u|^2 / (2 rt0) of a row.
    DUGKS_INLINE int row_moments(const double* __restrict v, std::size_t stride, const Macro& m) const
    {
        for (std::size_t r = 1; r <= NQ; ++r) {
            const std::size_t q = r % NQ;
            const double* __restrict vq = v + q * stride;
            const Accumulate acc(lat_, q, m);
#pragma omp simd
            for (std::size_t i = 0; i < n_; ++i) {
                acc(i, vq[i]);
            }
        }
        return finish_moments(m);
    }

    // Converts accumulated momentum to velocity and fills the base term.
    DUGKS_INLINE int finish_moments(const Macro& m) const
    {
        const std::size_t n = n_;
        double* __restrict rho = m.rho;
        double* __restrict ux = m.ux;
        double* __restrict uy = m.uy;
        double* __restrict base = m.base;
        int bad = 0;
        const double h = 0.5 * lat_.inv_theta;
#pragma omp simd reduction(+ : bad)
        for (std::size_t i = 0; i < n; ++i) {
            bad += rho[i] > kDensityFloor ? 0 : 1;
            const double inv = 1.0 / rho[i];
            ux[i] *= inv;
            uy[i] *= inv;
            base[i] = 1.0 - h * (ux[i] * ux[i] + uy[i] * uy[i]);
        }
        return bad;
    }

    // out <- v + pull * (f_eq - v), where the producing loop already
    // accumulated the raw moments of v into the workspace.
    DUGKS_INLINE int relax_row(const double* __restrict v, double* __restrict out, std::size_t ostride,
                               double pull, double* ws) const
    {
        const Macro m = macro(ws);
        const int bad = finish_moments(m);
        double* __restrict moved = moving_sum(ws);
        for (std::size_t r = 1; r <= NQ; ++r) {
            const std::size_t q = r % NQ;  // rest population last
            const double* __restrict vq = v + q * n_;
            double* __restrict oq = out + q * ostride;
            const double ex = lat_.ex[q] * lat_.inv_theta;
            const double ey = lat_.ey[q] * lat_.inv_theta;
            const double w = lat_.w[q];
#pragma omp simd
            for (std::size_t i = 0; i < n_; ++i) {
                if (q != 0) {
                    const double eu = ex * m.ux[i] + ey * m.uy[i];
                    const double feq = w * m.rho[i] * (m.base[i] + eu + 0.5 * eu * eu);
                    oq[i] = vq[i] + pull * (feq - vq[i]);
                    moved[i] += oq[i];
                } else {
                    oq[i] = m.rho[i] - moved[i];
                }
            }
        }
        return bad;
    }

    // Zeroed row buffer for the sum of the moving equilibria. The rest
    // population (q = 0) is closed last as rho minus that sum, so the
    // equilibrium carries exactly the row density instead of a rounding bias
    // that the stiff collision terms would amplify into a mass drift.
    double* equilibrium_sum(double* ws) const noexcept
    {
        double* sum = ws + (NQ + 4) * n_;
        std::fill_n(sum, n_, 0.0);
        return sum;
    }

    // Zeroed row buffer for the sum of the moving populations of a relaxed
    // state. Its rest population is closed the same way, as the input density
    // minus that sum. Moments are accumulated in the same order (rest last),
    // so while the moving populations hold at least half the mass the
    // subtraction is exact and the next density sum reproduces the input
    // density bit for bit.
    double* moving_sum(double* ws) const noexcept
    {
        double* sum = ws + (NQ + 5) * n_;
        std::fill_n(sum, n_, 0.0);
        return sum;
    }

    DUGKS_INLINE int close_faces(const double* __restrict b, double* __restrict out, std::size_t ostride,
                                 double* ws) const
    {
        if constexpr (R == Reconstruction::Dugks) {
            const double denom = 2.0 * tau_eff_ + 0.5 * dt_;
            return relax_row(b, out, ostride, 0.5 * dt_ / denom, ws);
        } else {
            for (std::size_t q = 0; q < NQ; ++q) {
                std::copy_n(b + q * n_, n_, out + q * ostride);
            }
            return 0;
        }
    }

    Lattice<NQ> lat_;
    std::size_t n_;
    int rows_;
    double inv_dx_;
    double dt_;
    double tau_eff_;
};

template <std::size_t NQ, int DIM, class Fn>
void dispatch_recon(const DiscreteVelocitySet& set, const UniformPeriodicGrid& grid,
                    const SchemeConfig& cfg, Fn&& fn)
{
    switch (cfg.reconstruction()) {
    case Reconstruction::Dugks:
        fn(Kernel<NQ, DIM, Reconstruction::Dugks>(set, grid, cfg));
        break;
    case Reconstruction::Clr:
        fn(Kernel<NQ, DIM, Reconstruction::Clr>(set, grid, cfg));
        break;
    case Reconstruction::CollisionlessLw:
        fn(Kernel<NQ, DIM, Reconstruction::CollisionlessLw>(set, grid, cfg));
        break;
    }
}

template <class Fn>
void dispatch(const DiscreteVelocitySet& set, const UniformPeriodicGrid& grid, const SchemeConfig& cfg,
              Fn&& fn)
{
    if (set.kind == VelocitySetKind::D2Q9) {
        dispatch_recon<9, 2>(set, grid, cfg, fn);
    } else {
        dispatch_recon<3, 1>(set, grid, cfg, fn);
    }
}

void throw_if_bad(int bad, const char* what)
{
    if (bad != 0) {
        throw NonPhysicalFieldError(std::string("non-physical density in ") + what);
    }
}

}  // namespace

InterfaceFluxes compute_fluxes(const DistributionField& field, const SchemeConfig& config)
{
    check_cfl(field, 0, config.dt());
    const std::size_t cells = field.grid().cell_count();
    const std::size_t nq = field.set().size();
    InterfaceFluxes fluxes{cells, nq, {}};
    fluxes.faces[0].assign(cells * nq, 0.0);
    fluxes.faces[1].assign(field.grid().dim() == 2 ? cells * nq : 0, 0.0);
    const auto recon = config.reconstruction();
    std::vector<double> half(recon == Reconstruction::Dugks ? cells * nq : 0);
    std::vector<double> full(cells * nq);
    dispatch(field.set(), field.grid(), config, [&](const auto& kernel) {
        std::vector<double> ws(kernel.workspace_size());
        const double* f = field.values().data();
        int bad = 0;
        if (recon == Reconstruction::Dugks) {
            for (int k = 0; k < kernel.rows(); ++k) {
                const std::size_t o = kernel.row_offset(k);
                bad += kernel.prepare_row(f + o, cells, half.data() + o, full.data() + o, cells,
                                          ws.data());
            }
            throw_if_bad(bad, "cell state");
        }
        const double* src = recon == Reconstruction::Dugks ? half.data() : f;
        for (int k = 0; k < kernel.rows(); ++k) {
            const std::size_t row = kernel.row_offset(k);
            const std::size_t up = kernel.row_offset(k + 1);
            const std::size_t down = kernel.row_offset(k - 1);
            bad += kernel.x_faces_row(src + down, src + row, src + up, cells,
                                      fluxes.faces[0].data() + row, cells, ws.data());
            if (field.grid().dim() == 2) {
                bad += kernel.y_faces_row(src + row, src + up, cells, fluxes.faces[1].data() + row,
                                          cells, ws.data());
            }
        }
        throw_if_bad(bad, "face reconstruction");
    });
    return fluxes;
}

void update_cells(DistributionField& field, const InterfaceFluxes& fluxes, const SchemeConfig& config)
{
    const std::size_t cells = field.grid().cell_count();
    const std::size_t nq = field.set().size();
    if (fluxes.cell_count != cells || fluxes.velocity_count != nq) {
        throw ConfigError("update_cells: flux extents do not match the field");
    }
    const auto recon = config.reconstruction();
    std::vector<double> half(recon == Reconstruction::Dugks ? cells * nq : 0);
    std::vector<double> full(recon != Reconstruction::CollisionlessLw ? cells * nq : 0);
    const double* f = field.values().data();
    double* next = field.next_values().data();
    const double* fy = fluxes.faces[1].empty() ? fluxes.faces[0].data() : fluxes.faces[1].data();
    dispatch(field.set(), field.grid(), config, [&](const auto& kernel) {
        std::vector<double> ws(kernel.workspace_size());
        int bad = 0;
        const double* base = f;
        if (recon != Reconstruction::CollisionlessLw) {
            for (int k = 0; k < kernel.rows(); ++k) {
                const std::size_t o = kernel.row_offset(k);
                bad += kernel.prepare_row(f + o, cells, half.data() + o, full.data() + o, cells,
                                          ws.data());
            }
            throw_if_bad(bad, "cell state");
            base = full.data();
        }
        for (int k = 0; k < kernel.rows(); ++k) {
            const std::size_t row = kernel.row_offset(k);
            const std::size_t down = kernel.row_offset(k - 1);
            bad += kernel.update_row(base + row, cells, fluxes.faces[0].data() + row, cells, fy + row,
                                     fy + down, cells, next + row, cells, ws.data());
        }
        throw_if_bad(bad, "cell update");
    });
}

Stepper::Stepper(const SchemeConfig& config, int threads)
    : config_(config), threads_(threads < 1 ? 1 : threads)
{
}

void Stepper::advance(DistributionField& field)
{
    check_cfl(field, 0, config_.dt());
    const std::size_t cells = field.grid().cell_count();
    const std::size_t nq = field.set().size();
    const int dim = field.grid().dim();
    const std::size_t rowlen = dim == 2 ? static_cast<std::size_t>(field.grid().n()) : cells;
    const double* f = field.values().data();
    double* next = field.next_values().data();

    dispatch(field.set(), field.grid(), config_, [&](const auto& kernel) {
        using K = std::decay_t<decltype(kernel)>;
        // Per worker: 3 half rows, 3 full rows, one x-face row, two y-face
        // rows, then the kernel workspace.
        const std::size_t block = rowlen * nq;
        const std::size_t per_worker = 9 * block + kernel.workspace_size();
        const int rows = kernel.rows();
        const int workers = std::min(threads_, rows);
        if (scratch_.size() < per_worker * static_cast<std::size_t>(workers)) {
            scratch_.assign(per_worker * static_cast<std::size_t>(workers), 0.0);
        }
        int bad = 0;
#pragma omp parallel for num_threads(workers) reduction(+ : bad) schedule(static, 1)
        for (int w = 0; w < workers; ++w) {
            const int k0 = rows * w / workers;
            const int k1 = rows * (w + 1) / workers;
            double* mine = scratch_.data() + per_worker * static_cast<std::size_t>(w);
            // Row k lives in ring slot (k - k0 + 1) mod 3.
            auto half = [&](int k) { return mine + block * static_cast<std::size_t>((k - k0 + 1) % 3); };
            auto full = [&](int k) {
                return mine + block * (3 + static_cast<std::size_t>((k - k0 + 1) % 3));
            };
            double* fx = mine + 6 * block;
            double* fy_down = mine + 7 * block;
            double* fy_up = mine + 8 * block;
            double* ws = mine + 9 * block;
            auto prepare = [&](int k) {
                return kernel.prepare_row(f + kernel.row_offset(k), cells, half(k), full(k), rowlen, ws);
            };
            auto source = [&](int k) -> const double* {
                if constexpr (K::kHalf) {
                    return half(k);
                } else {
                    return f + kernel.row_offset(k);
                }
            };
            const std::size_t sstride = K::kHalf ? rowlen : cells;
            if constexpr (K::kCollide) {
                bad += prepare(k0 - 1);
                bad += prepare(k0);
            }
            if (dim == 2) {
                bad += kernel.y_faces_row(source(k0 - 1), source(k0), sstride, fy_down, rowlen, ws);
            }
            for (int k = k0; k < k1; ++k) {
                if constexpr (K::kCollide) {
                    bad += prepare(k + 1);
                }
                bad += kernel.x_faces_row(source(k - 1), source(k), source(k + 1), sstride, fx, rowlen,
                                          ws);
                if (dim == 2) {
                    bad += kernel.y_faces_row(source(k), source(k + 1), sstride, fy_up, rowlen, ws);
                }
                const double* base = K::kCollide ? full(k) : f + kernel.row_offset(k);
                const std::size_t bstride = K::kCollide ? rowlen : cells;
                bad += kernel.update_row(base, bstride, fx, rowlen, fy_up, fy_down, rowlen,
                                         next + kernel.row_offset(k), cells, ws);
                std::swap(fy_up, fy_down);
            }
        }
        throw_if_bad(bad, "time step");
    });
    field.swap_buffers(config_.dt());
}

void step(DistributionField& field, const SchemeConfig& config)
{
    Stepper stepper(config);
    stepper.advance(field);
}

}  // namespace dugks
