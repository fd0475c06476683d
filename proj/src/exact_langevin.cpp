#include "spde2d/exact_langevin.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <string>

namespace spde2d {

namespace {

void check_params(const LangevinParams& p) {
    if (!(p.a > 0.0) || p.sigma < 0.0 || !(p.gap() > 0.0)) {
        throw ConfigError("exact Langevin solution needs a > 0 and a - sigma^2 > 0");
    }
}

} // namespace

double gamma0(double t, double x, double v, const LangevinParams& p) {
    check_params(p);
    if (!(t > 0.0)) throw ConfigError("gamma0: t must be positive");
    const double c = p.gap();
    const double quad = v * v / t - 3.0 * v * x / (t * t) + 3.0 * x * x / (t * t * t);
    return std::numbers::sqrt3 / (std::numbers::pi * t * t * c) *
           std::exp(-(2.0 / c) * quad);
}

Field gaussian_datum(const GridSpec& grid) {
    Field f(grid.x.n, grid.v.n);
    for (std::size_t j = 0; j < grid.v.n; ++j) {
        const double v = grid.v.node(j);
        for (std::size_t i = 0; i < grid.x.n; ++i) {
            const double x = grid.x.node(i);
            f(i, j) = std::exp(-(x * x + v * v) / 2.0);
        }
    }
    return f;
}

// The solution is the integral of Gamma0(t, z - m_t(zeta)) against the
// Gaussian datum over zeta = (xi, eta) with the affine shift
// m_t = (xi + t eta - sigma IW, eta - sigma W). Writing the combined
// exponent as the quadratic Q = A xi^2 + B eta^2 + C xi eta + D xi
// + E eta + F, the double integral collapses to the standard Gaussian
// value 2 pi / sqrt(4AB - C^2) * exp((B D^2 + A E^2 - C D E)/(4AB - C^2) - F).
Field exact_langevin_field(const GridSpec& grid, double t, const LangevinParams& p,
                           const PathFunctionalsForExact& path) {
    check_params(p);
    if (!(t > 0.0)) throw ConfigError("exact_langevin_field: t must be positive");
    const double c2 = 2.0 / p.gap();
    const double t2 = t * t;
    const double t3 = t2 * t;

    const double qa = 3.0 * c2 / t3 + 0.5;
    const double qb = c2 / t + 0.5;
    const double qc = 3.0 * c2 / t2;
    const double det = 4.0 * qa * qb - qc * qc;
    const double pref = std::numbers::sqrt3 / (std::numbers::pi * t2 * p.gap()) * 2.0 *
                        std::numbers::pi / std::sqrt(det);

    Field f(grid.x.n, grid.v.n);
    for (std::size_t j = 0; j < grid.v.n; ++j) {
        const double beta = grid.v.node(j) + p.sigma * path.W;
        for (std::size_t i = 0; i < grid.x.n; ++i) {
            const double alpha = grid.x.node(i) + p.sigma * path.IW;
            const double qd = 3.0 * c2 * beta / t2 - 6.0 * c2 * alpha / t3;
            const double qe = c2 * beta / t - 3.0 * c2 * alpha / t2;
            const double qf =
                c2 * (beta * beta / t - 3.0 * alpha * beta / t2 + 3.0 * alpha * alpha / t3);
            f(i, j) = pref * std::exp((qb * qd * qd + qa * qe * qe - qc * qd * qe) / det - qf);
        }
    }
    return f;
}

SolutionEnsemble exact_reference(const GridSpec& grid, double t,
                                 const LangevinParams& params, const BrownianBatch& batch) {
    SolutionEnsemble out;
    out.grid = grid;
    out.t = t;
    out.seed = batch.seed;
    out.states.resize(batch.M);
    out.status.assign(batch.M, TrajectoryStatus::Ok);
    out.seconds.assign(batch.M, 0.0);
    for (std::size_t m = 0; m < batch.M; ++m) {
        const auto start = std::chrono::steady_clock::now();
        const ItoFunctionals f = lebesgue_functionals(window(batch, 0.0, t, m));
        const PathFunctionalsForExact pf{f.W, f.IW};
        out.states[m] = vectorize(exact_langevin_field(grid, t, params, pf));
        out.seconds[m] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    return out;
}

} // namespace spde2d
