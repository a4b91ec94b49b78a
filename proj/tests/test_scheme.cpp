#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "dugks/benchmarks.hpp"
#include "dugks/error.hpp"
#include "dugks/scheme.hpp"
#include "oracles.hpp"

using namespace dugks;

namespace {

DistributionField random_field(const DiscreteVelocitySet& set, int dim, int n, unsigned seed, double spread = 0.3)
{
    DistributionField f(UniformPeriodicGrid(dim, n), set);
    std::mt19937_64 rng(seed);
    oracle::randomize(f, rng, spread);
    return f;
}

double total_mass(const DistributionField& f)
{
    double m = 0.0;
    for (double v : f.values()) {
        m += v;
    }
    return m;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b)
{
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d = std::max(d, std::abs(a[i] - b[i]));
    }
    return d;
}

}  // namespace

TEST_SUITE("scheme")
{
    TEST_CASE("time step from the CFL number")
    {
        const auto set = build_d2q9(0.5);
        const UniformPeriodicGrid g(2, 25);
        CHECK(compute_dt(g, set, 0.5) == doctest::Approx(0.01632993161855452).epsilon(1e-15));
        CHECK(compute_dt(g, set, 0.25) == doctest::Approx(0.5 * compute_dt(g, set, 0.5)).epsilon(1e-15));
        CHECK(compute_dt(UniformPeriodicGrid(2, 50), set, 0.5) ==
              doctest::Approx(0.5 * compute_dt(g, set, 0.5)).epsilon(1e-15));
        CHECK_THROWS_AS(compute_dt(g, set, 0.0), ConfigError);
        CHECK_THROWS_AS(compute_dt(g, set, 1.0), ConfigError);
        CHECK_THROWS_AS(compute_dt(g, set, -0.3), ConfigError);
    }

    TEST_CASE("scheme names round-trip")
    {
        for (auto r : {Reconstruction::Dugks, Reconstruction::Clr, Reconstruction::CollisionlessLw}) {
            CHECK(parse_reconstruction(to_string(r)) == r);
        }
        CHECK_THROWS_AS(parse_reconstruction("upwind"), ConfigError);
    }

    TEST_CASE("a uniform equilibrium is a fixed point of every scheme")
    {
        const auto set = build_d2q9(0.5);
        DistributionField f(UniformPeriodicGrid(2, 8), set);
        const auto feq = oracle::equilibrium(set, 1.05, 0.03, -0.02);
        for (std::size_t c = 0; c < f.grid().cell_count(); ++c) {
            for (std::size_t q = 0; q < 9; ++q) {
                f.at(c, q) = feq[q];
            }
        }
        const RelaxationModel model(1e-3);
        const double dt = compute_dt(f.grid(), set, 0.5);
        const auto face = reconstruct_interface_dugks(f, 1, 5, model, dt);
        for (std::size_t q = 0; q < 9; ++q) {
            CHECK(face[q] == doctest::Approx(feq[q]).epsilon(1e-14));
        }
        for (auto r : {Reconstruction::Dugks, Reconstruction::Clr, Reconstruction::CollisionlessLw}) {
            DistributionField g = f;
            step(g, SchemeConfig(model, 0.5, r, g.grid(), set));
            CHECK(max_abs_diff(g.values(), f.values()) < 1e-15);
        }
    }

    TEST_CASE("face reconstructions agree with the independent oracle")
    {
        const auto set = build_d2q9(0.5);
        const auto f = random_field(set, 2, 6, 21);
        const double dt = compute_dt(f.grid(), set, 0.6);
        for (double tau_eff : {0.5 * dt, 5.0 * dt, 1e-1}) {
            const RelaxationModel model(tau_eff);
            for (int axis = 0; axis < 2; ++axis) {
                for (std::size_t cell = 0; cell < f.grid().cell_count(); cell += 5) {
                    const auto got = reconstruct_interface_dugks(f, axis, cell, model, dt);
                    const auto ref = oracle::face_distribution(f, axis, cell, tau_eff, dt, true);
                    for (std::size_t q = 0; q < 9; ++q) {
                        CHECK(got[q] == doctest::Approx(ref[q]).epsilon(1e-13));
                    }
                    const auto clr = reconstruct_interface_clr(f, axis, cell, dt);
                    const auto raw = oracle::face_distribution(f, axis, cell, tau_eff, dt, false);
                    for (std::size_t q = 0; q < 9; ++q) {
                        CHECK(clr[q] == doctest::Approx(raw[q]).epsilon(1e-14));
                    }
                }
            }
        }
    }

    TEST_CASE("hand-sized one-dimensional face")
    {
        const auto set = build_d1q3(0.5);
        DistributionField f(UniformPeriodicGrid(1, 4), set);
        const double vals[4][3] = {{0.6, 0.2, 0.25}, {0.7, 0.1, 0.2}, {0.5, 0.3, 0.15}, {0.65, 0.2, 0.2}};
        for (std::size_t c = 0; c < 4; ++c) {
            for (std::size_t q = 0; q < 3; ++q) {
                f.at(c, q) = vals[c][q];
            }
        }
        const double dt = 0.1;
        const auto got = reconstruct_interface_dugks(f, 0, 1, RelaxationModel(1.0), dt);
        const auto ref = oracle::face_distribution(f, 0, 1, 1.0, dt, true);
        for (std::size_t q = 0; q < 3; ++q) {
            CHECK(got[q] == doctest::Approx(ref[q]).epsilon(1e-14));
        }
    }

    TEST_CASE("dugks faces tend to collision-less faces as tau_eff grows")
    {
        const auto set = build_d2q9(0.5);
        const auto f = random_field(set, 2, 6, 4);
        const double dt = compute_dt(f.grid(), set, 0.5);
        for (double tau_eff : {1e6, 1e9, 1e12}) {
            const RelaxationModel model(tau_eff);
            for (std::size_t cell = 0; cell < f.grid().cell_count(); ++cell) {
                const auto a = reconstruct_interface_dugks(f, 0, cell, model, dt);
                const auto b = reconstruct_interface_clr(f, 0, cell, dt);
                for (std::size_t q = 0; q < 9; ++q) {
                    CHECK(std::abs(a[q] - b[q]) <= 10.0 / tau_eff * std::abs(b[q]));
                }
            }
        }
    }

    TEST_CASE("batched fluxes and the fused stepper match the single-face routines and the oracle")
    {
        for (const auto& set : {build_d2q9(0.5), build_d1q3(0.5)}) {
            const int dim = set.dim;
            const auto f0 = random_field(set, dim, dim == 2 ? 6 : 9, 17);
            const double dt = compute_dt(f0.grid(), set, 0.5);
            for (double tau_eff : {0.3 * dt, 4.0 * dt}) {
                const RelaxationModel model(tau_eff);
                const Reconstruction kinds[] = {Reconstruction::Dugks, Reconstruction::Clr,
                                                Reconstruction::CollisionlessLw};
                for (int mode = 0; mode < 3; ++mode) {
                    const SchemeConfig cfg(model, 0.5, kinds[mode], f0.grid(), set);
                    const auto fluxes = compute_fluxes(f0, cfg);
                    for (int axis = 0; axis < dim; ++axis) {
                        for (std::size_t cell = 0; cell < f0.grid().cell_count(); ++cell) {
                            const auto ref = mode == 0 ? reconstruct_interface_dugks(f0, axis, cell, model, dt)
                                                       : reconstruct_interface_clr(f0, axis, cell, dt);
                            for (std::size_t q = 0; q < set.size(); ++q) {
                                CHECK(fluxes.at(axis, cell, q) == doctest::Approx(ref[q]).epsilon(1e-13));
                            }
                        }
                    }
                    DistributionField split = f0;
                    update_cells(split, fluxes, cfg);
                    split.swap_buffers(cfg.dt());
                    DistributionField fused = f0;
                    Stepper(cfg).advance(fused);
                    CHECK(max_abs_diff(split.values(), fused.values()) < 1e-14);
                    const auto oracle_next = oracle::cell_update(f0, tau_eff, dt, mode);
                    CHECK(max_abs_diff(fused.values(), oracle_next) < 1e-13);
                    CHECK(fused.time() == doctest::Approx(dt).epsilon(1e-15));
                    CHECK(fused.step_count() == 1);
                }
            }
        }
    }

    TEST_CASE("collision-less transport of one population is the Lax-Wendroff stencil")
    {
        const auto set = build_d1q3(0.5);
        DistributionField f(UniformPeriodicGrid(1, 16), set);
        std::vector<double> u(16);
        for (int j = 0; j < 16; ++j) {
            u[j] = 1.0 + 0.3 * std::sin(2 * std::numbers::pi * (j + 0.5) / 16) + 0.1 * ((j * 7) % 5);
        }
        for (std::size_t c = 0; c < 16; ++c) {
            f.at(c, 0) = 1.0;
            f.at(c, 1) = u[c];
            f.at(c, 2) = 1.0;
        }
        const SchemeConfig cfg(RelaxationModel(1.0), 0.7, Reconstruction::CollisionlessLw, f.grid(), set);
        const double nu = set.velocities[1][0] * cfg.dt() / f.grid().dx();
        auto expect = u;
        Stepper stepper(cfg);
        for (int k = 0; k < 5; ++k) {
            stepper.advance(f);
            expect = oracle::lax_wendroff(expect, nu);
        }
        for (std::size_t c = 0; c < 16; ++c) {
            CHECK(f.at(c, 1) == doctest::Approx(expect[c]).epsilon(1e-14));
            CHECK(f.at(c, 0) == doctest::Approx(1.0).epsilon(1e-15));
        }
    }

    TEST_CASE("mass is conserved by every scheme on random data")
    {
        const auto set = build_d2q9(0.5);
        for (auto r : {Reconstruction::Dugks, Reconstruction::Clr, Reconstruction::CollisionlessLw}) {
            auto f = random_field(set, 2, 12, 33);
            const double m0 = total_mass(f);
            Stepper s(SchemeConfig(RelaxationModel(1e-3), 0.5, r, f.grid(), set));
            for (int k = 0; k < 20; ++k) {
                s.advance(f);
            }
            CHECK(std::abs(total_mass(f) - m0) <= 1e-13 * m0);
        }
    }

    TEST_CASE("results do not depend on the thread count")
    {
        const auto set = build_d2q9(0.5);
        const auto f0 = random_field(set, 2, 16, 2);
        const SchemeConfig cfg(RelaxationModel(1e-2), 0.5, Reconstruction::Dugks, f0.grid(), set);
        DistributionField a = f0;
        DistributionField b = f0;
        Stepper one(cfg, 1);
        Stepper many(cfg, 3);
        for (int k = 0; k < 10; ++k) {
            one.advance(a);
            many.advance(b);
        }
        CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
    }

    TEST_CASE("time bookkeeping over many steps")
    {
        const auto set = build_d1q3(0.5);
        auto f = random_field(set, 1, 8, 1, 0.0);
        const SchemeConfig cfg(RelaxationModel(0.1), 0.5, Reconstruction::Dugks, f.grid(), set);
        Stepper s(cfg);
        for (int k = 0; k < 40; ++k) {
            s.advance(f);
        }
        CHECK(f.step_count() == 40);
        CHECK(f.time() == doctest::Approx(40 * cfg.dt()).epsilon(1e-14));
    }

    TEST_CASE("stiff Taylor vortex stays bounded over ten decay times")
    {
        const auto set = build_d2q9(0.5);
        const RelaxationModel model(1e-4);
        const double two_pi = 2 * std::numbers::pi;
        const auto spec = make_taylor_vortex(two_pi, two_pi, 0.01, 1.0, 0.5, model);
        DistributionField f(UniformPeriodicGrid(2, 16), set);
        init_ce(f, taylor_initial_condition(spec), model);
        const SchemeConfig cfg(model, 0.5, Reconstruction::Dugks, f.grid(), set);
        const double t_c = 1.0 / (spec.nu * spec.alpha());
        const auto steps = static_cast<std::size_t>(std::llround(10.0 * t_c / cfg.dt()));
        Stepper s(cfg);
        const double m0 = total_mass(f);
        for (std::size_t k = 0; k < steps; ++k) {
            s.advance(f);
        }
        CHECK(max_velocity(f) < 0.01);
        CHECK(std::abs(total_mass(f) - m0) <= 1e-12 * m0);
    }

    TEST_CASE("non-physical data is rejected")
    {
        const auto set = build_d2q9(0.5);
        DistributionField f(UniformPeriodicGrid(2, 4), set);
        const SchemeConfig cfg(RelaxationModel(1e-2), 0.5, Reconstruction::Dugks, f.grid(), set);
        CHECK_THROWS_AS(step(f, cfg), NonPhysicalFieldError);
        for (std::size_t c = 0; c < f.grid().cell_count(); ++c) {
            for (std::size_t q = 0; q < 9; ++q) {
                f.at(c, q) = set.weights[q];
            }
        }
        CHECK_NOTHROW(step(f, cfg));
        f.values()[3] = std::nan("");
        CHECK_THROWS_AS(step(f, cfg), NonPhysicalFieldError);
    }
}
