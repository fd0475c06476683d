#pragma once

#include "spde2d/grid.hpp"
#include "spde2d/magnus.hpp"
#include "spde2d/stochastics.hpp"

namespace spde2d {

/// Parameters of the constant-coefficient kinetic Langevin equation with an
/// explicit fundamental solution; requires a - sigma^2 > 0.
struct LangevinParams {
    double a = 1.1;
    double sigma = 0.0;

    double gap() const { return a - sigma * sigma; }
};

/// Path data the exact solution depends on: the terminal Brownian value and
/// the left-Riemann integral of the path over [0, t], both taken from the
/// same batch the solvers consume.
struct PathFunctionalsForExact {
    double W = 0.0;
    double IW = 0.0;
};

/// Fundamental-solution kernel at the origin,
/// Gamma0(t,(x,v)) = sqrt(3) / (pi t^2 (a - s^2))
///                   * exp(-(2/(a - s^2)) (v^2/t - 3 v x/t^2 + 3 x^2/t^3)).
double gamma0(double t, double x, double v, const LangevinParams& params);

/// Gaussian initial datum phi(x, v) = exp(-(x^2 + v^2)/2) at interior nodes.
Field gaussian_datum(const GridSpec& grid);

/// Exact pathwise solution field at time t: the convolution of the shifted
/// fundamental solution with the Gaussian datum, reduced in closed form to a
/// bivariate Gaussian integral. Validated against 2-D quadrature in the test
/// suite before any use as a reference.
Field exact_langevin_field(const GridSpec& grid, double t, const LangevinParams& params,
                           const PathFunctionalsForExact& path);

/// Per-trajectory exact fields packaged as a reference ensemble, with the
/// path functionals computed from the batch by the same left-Riemann rule
/// the solvers use.
SolutionEnsemble exact_reference(const GridSpec& grid, double t,
                                 const LangevinParams& params, const BrownianBatch& batch);

} // namespace spde2d
