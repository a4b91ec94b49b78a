#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "dugks/benchmarks.hpp"
#include "dugks/error.hpp"
#include "oracles.hpp"

using namespace dugks;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

TaylorVortexSpec standard(double eps = 1e-4)
{
    return make_taylor_vortex(kTwoPi, kTwoPi, 0.01, 1.0, 0.5, RelaxationModel(eps));
}

}  // namespace

TEST_SUITE("benchmarks")
{
    TEST_CASE("analytic field golden values")
    {
        const auto s = standard();
        CHECK(s.nu == doctest::Approx(5e-5).epsilon(1e-15));
        CHECK(s.alpha() == doctest::Approx(8 * std::numbers::pi * std::numbers::pi).epsilon(1e-15));
        const auto origin = taylor_analytic(s, 0.0, 0.0, 0.0);
        CHECK(origin.u[0] == 0.0);
        CHECK(origin.u[1] == 0.0);
        const auto p = taylor_analytic(s, 0.0, 0.125, 0.0);
        CHECK(p.u[0] == doctest::Approx(-0.0011253953951963826).epsilon(1e-15));
        CHECK(p.u[1] == 0.0);
        const auto late = taylor_analytic(s, 0.3, 0.7, 1e9);
        CHECK(late.p == doctest::Approx(s.p0()).epsilon(1e-15));
        CHECK(std::abs(late.u[0]) < 1e-300);
    }

    TEST_CASE("derivatives agree with central differences and the field is divergence free")
    {
        const auto s = standard(1e-2);
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double h = 1e-6;
        for (int trial = 0; trial < 40; ++trial) {
            const double x = u(rng), y = u(rng), t = 10.0 * u(rng);
            const auto d = taylor_derivatives(s, x, y, t);
            const auto xp = taylor_analytic(s, x + h, y, t).u, xm = taylor_analytic(s, x - h, y, t).u;
            const auto yp = taylor_analytic(s, x, y + h, t).u, ym = taylor_analytic(s, x, y - h, t).u;
            const auto tp = taylor_analytic(s, x, y, t + h).u, tm = taylor_analytic(s, x, y, t - h).u;
            for (int a = 0; a < 2; ++a) {
                CHECK(d.grad_u[a][0] == doctest::Approx((xp[a] - xm[a]) / (2 * h)).epsilon(1e-8).scale(0.01));
                CHECK(d.grad_u[a][1] == doctest::Approx((yp[a] - ym[a]) / (2 * h)).epsilon(1e-8).scale(0.01));
                CHECK(d.dt_u[a] == doctest::Approx((tp[a] - tm[a]) / (2 * h)).epsilon(1e-8).scale(1e-4));
            }
            CHECK(std::abs(d.grad_u[0][0] + d.grad_u[1][1]) < 1e-15);
            CHECK(d.grad_rho == Vec2{0.0, 0.0});
        }
        const auto d0 = taylor_derivatives(s, 0.2, 0.4, 0.0);
        const auto u0 = taylor_analytic(s, 0.2, 0.4, 0.0).u;
        CHECK(d0.dt_u[0] == doctest::Approx(-s.nu * s.alpha() * u0[0]).epsilon(1e-15));
    }

    TEST_CASE("half-life of the amplitude")
    {
        const auto s = standard();
        CHECK(t_half(s) == doctest::Approx(std::numbers::ln2 / (5e-5 * s.alpha())).epsilon(1e-15));
        CHECK(t_half(standard(2e-4)) == doctest::Approx(0.5 * t_half(s)).epsilon(1e-15));
        const auto swapped = make_taylor_vortex(2 * kTwoPi, kTwoPi, 0.01, 1.0, 0.5, RelaxationModel(1e-4));
        const auto other = make_taylor_vortex(kTwoPi, 2 * kTwoPi, 0.01, 1.0, 0.5, RelaxationModel(1e-4));
        CHECK(t_half(swapped) == t_half(other));
    }

    TEST_CASE("spec validation")
    {
        const RelaxationModel m(1e-4);
        CHECK_THROWS_AS(make_taylor_vortex(0.0, kTwoPi, 0.01, 1.0, 0.5, m), ConfigError);
        CHECK_THROWS_AS(make_taylor_vortex(kTwoPi, kTwoPi, 0.01, 0.0, 0.5, m), ConfigError);
        CHECK_THROWS_AS(make_taylor_vortex(kTwoPi, kTwoPi, 1.0, 1.0, 0.5, m), ConfigError);
    }

    TEST_CASE("relative L2 error: exact field, doubled field, vanishing reference")
    {
        const auto set = build_d2q9(0.5);
        const auto s = standard();
        DistributionField f(UniformPeriodicGrid(2, 12), set);
        init_ce(f, taylor_initial_condition(s), 0.0);
        CHECK(relative_l2_error(f, s, 0.0) < 1e-12);

        for (std::size_t c = 0; c < f.grid().cell_count(); ++c) {
            const auto x = f.grid().center(c);
            const auto ua = taylor_analytic(s, x[0], x[1], 0.0).u;
            const auto feq = oracle::equilibrium(set, 1.0, 2 * ua[0], 2 * ua[1]);
            for (std::size_t q = 0; q < 9; ++q) {
                f.at(c, q) = feq[q];
            }
        }
        CHECK(relative_l2_error(f, s, 0.0) == doctest::Approx(1.0).epsilon(1e-12));

        auto still = s;
        still.u0 = 0.0;
        CHECK_THROWS_AS(relative_l2_error(f, still, 0.0), DegenerateError);
    }

    TEST_CASE("max velocity and cell velocity")
    {
        const auto set = build_d2q9(0.5);
        DistributionField f(UniformPeriodicGrid(2, 4), set);
        for (std::size_t c = 0; c < f.grid().cell_count(); ++c) {
            const double ux = c == 5 ? 0.03 : 0.01;
            const auto feq = oracle::equilibrium(set, 1.0, ux, -0.04);
            for (std::size_t q = 0; q < 9; ++q) {
                f.at(c, q) = feq[q];
            }
        }
        CHECK(max_velocity(f) == doctest::Approx(0.05).epsilon(1e-13));
        CHECK(cell_velocity(f, 0)[1] == doctest::Approx(-0.04).epsilon(1e-13));
    }

    TEST_CASE("decay fit")
    {
        const double alpha = 8 * std::numbers::pi * std::numbers::pi;
        const double nu = 5e-5;
        std::vector<DecaySample> exact;
        for (int k = 0; k <= 20; ++k) {
            const double t = 100.0 * k;
            exact.push_back({t, 0.01 * std::exp(-nu * alpha * t)});
        }
        CHECK(fit_decay_viscosity(exact, alpha) == doctest::Approx(nu).epsilon(1e-12));

        std::mt19937_64 rng(13);
        std::normal_distribution<double> noise(0.0, 1e-3);
        auto noisy = exact;
        for (auto& s : noisy) {
            s.max_u *= 1.0 + noise(rng);
        }
        CHECK(fit_decay_viscosity(noisy, alpha) == doctest::Approx(nu).epsilon(1e-2));

        auto flat = exact;
        for (auto& s : flat) {
            s.max_u = 0.01;
        }
        CHECK(std::abs(fit_decay_viscosity(flat, alpha)) < 1e-18);

        auto bad = exact;
        bad[4].max_u = 0.0;
        CHECK_THROWS_AS(fit_decay_viscosity(bad, alpha), DegenerateError);
        CHECK_THROWS_AS(fit_decay_viscosity(std::span(exact).first(9), alpha), DegenerateError);
        CHECK_THROWS_AS(fit_decay_viscosity(exact, 0.0), DegenerateError);
    }
}
