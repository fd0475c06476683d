#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "spde2d/exact_langevin.hpp"
#include "spde2d/magnus.hpp"

using namespace spde2d;

namespace {

const LangevinParams kPaperParams{1.1, 1.0 / std::sqrt(10.0)};

GridSpec square_grid(std::size_t d) {
    return GridSpec{build_grid(-4.0, 4.0, d), build_grid(-4.0, 4.0, d)};
}

double quad_solution(const GridSpec&, double t, const LangevinParams& p,
                     const PathFunctionalsForExact& path, double x, double v) {
    auto integrand = [&](double xi, double eta) {
        const double sx = x - (xi + t * eta - p.sigma * path.IW);
        const double sv = v - (eta - p.sigma * path.W);
        return gamma0(t, sx, sv, p) * std::exp(-(xi * xi + eta * eta) / 2.0);
    };
    return oracle::quad2d(integrand, -10.0, 10.0, -10.0, 10.0, 1e-12);
}

} // namespace

TEST_CASE("gamma0 value, symmetry and mass") {
    const LangevinParams unit{1.1, std::sqrt(0.1)}; // gap 1
    CHECK(gamma0(1.0, 0.0, 0.0, unit) ==
          doctest::Approx(std::numbers::sqrt3 / std::numbers::pi).epsilon(1e-14));

    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> uni(-2.0, 2.0);
    for (int rep = 0; rep < 10; ++rep) {
        const double x = uni(rng), v = uni(rng), t = 0.3 + 0.4 * (rep % 3);
        CHECK(gamma0(t, x, v, unit) == gamma0(t, -x, -v, unit));
    }

    const double mass = oracle::quad2d(
        [&](double x, double v) { return gamma0(1.0, x, v, unit); }, -12.0, 12.0, -12.0,
        12.0, 1e-10);
    CHECK(std::abs(mass - 1.0) <= 1e-6);

    CHECK_THROWS_AS((void)gamma0(0.0, 0.0, 0.0, unit), ConfigError);
    CHECK_THROWS_AS((void)gamma0(-1.0, 0.0, 0.0, unit), ConfigError);
    CHECK_THROWS_AS((void)gamma0(1.0, 0.0, 0.0, LangevinParams{0.1, 1.0}), ConfigError);
}

TEST_CASE("gaussian datum") {
    const GridSpec g = square_grid(7); // odd count: node at the origin
    const Field phi = gaussian_datum(g);
    CHECK(phi(3, 3) == doctest::Approx(1.0));
    for (std::size_t i = 0; i < 7; ++i) {
        for (std::size_t j = 0; j < 7; ++j) {
            CHECK(phi(i, j) == doctest::Approx(phi(j, i)).epsilon(1e-15));
            CHECK(phi(i, j) == doctest::Approx(phi(6 - i, 6 - j)).epsilon(1e-15));
        }
    }
    double best = 0.0;
    for (double v : phi.data()) best = std::max(best, v);
    CHECK(best == phi(3, 3));
}

TEST_CASE("closed form equals 2-D quadrature") {
    const GridSpec g = square_grid(20);
    std::mt19937_64 rng(62);
    std::uniform_int_distribution<std::size_t> pick(0, 19);
    const PathFunctionalsForExact path{0.41, -0.17};
    double worst = 0.0;
    for (double t : {0.25, 1.0}) {
        const Field field = exact_langevin_field(g, t, kPaperParams, path);
        for (int rep = 0; rep < 6; ++rep) {
            const std::size_t i = pick(rng), j = pick(rng);
            const double want =
                quad_solution(g, t, kPaperParams, path, g.x.node(i), g.v.node(j));
            worst = std::max(worst, std::abs(field(i, j) - want) / std::abs(want));
        }
    }
    CHECK(worst <= 1e-8);
}

TEST_CASE("short-time field approaches the datum") {
    const GridSpec g = square_grid(24);
    const Field phi = gaussian_datum(g);
    const Field field = exact_langevin_field(g, 1e-3, kPaperParams, {0.0, 0.0});
    double sup = 0.0;
    for (std::size_t i = 0; i < g.x.n * g.v.n; ++i) {
        sup = std::max(sup, std::abs(field.data()[i] - phi.data()[i]));
    }
    CHECK(sup <= 1e-2);
}

TEST_CASE("field is strictly positive") {
    const GridSpec g = square_grid(16);
    const Field field = exact_langevin_field(g, 0.5, kPaperParams, {0.8, 0.3});
    for (double v : field.data()) CHECK(v > 0.0);
}

TEST_CASE("zero path matches the deterministic solution via order-1 Magnus") {
    const std::size_t d = 120;
    const GridSpec g = square_grid(d);
    const LangevinParams det{1.1, 0.0};
    const Field exact = exact_langevin_field(g, 1.0, det, {0.0, 0.0});

    const CoefficientFields f =
        sample_coefficients(CoefficientFamily::langevin_constant(1.1, 0.0), g);
    const CommutatorSet comms =
        precompute_commutators(assemble_diffusion(f, g), assemble_drift(f, g), 1);
    const BrownianBatch batch = simulate_brownian(1.0, 1e-2, 1, 1);
    MagnusConfig cfg;
    cfg.order = 1;
    cfg.dt = 1.0;
    const auto out =
        solve_iterated_magnus(cfg, comms, vectorize(gaussian_datum(g)), batch, 1.0, g);
    REQUIRE(out.back().status[0] == TrajectoryStatus::Ok);

    // compare on the central region to keep boundary truncation out of it
    const std::size_t lo = d / 2 - d / 8, hi = d / 2 + d / 8;
    double num = 0.0, den = 0.0;
    const Field got = devectorize(out.back().states[0], d, d);
    for (std::size_t j = lo; j <= hi; ++j) {
        for (std::size_t i = lo; i <= hi; ++i) {
            num = std::max(num, std::abs(got(i, j) - exact(i, j)));
            den = std::max(den, std::abs(exact(i, j)));
        }
    }
    CHECK(num / den <= 5e-3);
}

TEST_CASE("sigma -> 0 continuity of the closed form") {
    const GridSpec g = square_grid(12);
    const Field a = exact_langevin_field(g, 0.7, LangevinParams{1.1, 1e-8}, {0.33, 0.21});
    const Field b = exact_langevin_field(g, 0.7, LangevinParams{1.1, 0.0}, {0.33, 0.21});
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.data()[i] == doctest::Approx(b.data()[i]).epsilon(1e-6));
    }
}

TEST_CASE("reference ensemble couples to the batch functionals") {
    const GridSpec g = square_grid(10);
    const BrownianBatch batch = simulate_brownian(0.5, 1e-3, 3, 44);
    const SolutionEnsemble ref = exact_reference(g, 0.5, kPaperParams, batch);
    REQUIRE(ref.trajectories() == 3);
    for (std::size_t m = 0; m < 3; ++m) {
        const ItoFunctionals f = lebesgue_functionals(window(batch, 0.0, 0.5, m));
        const Field want =
            exact_langevin_field(g, 0.5, kPaperParams, PathFunctionalsForExact{f.W, f.IW});
        CHECK(ref.states[m] == vectorize(want));
    }
}
