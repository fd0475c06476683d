#pragma once

#include <vector>

#include "spde2d/grid.hpp"
#include "spde2d/magnus.hpp"
#include "spde2d/operators.hpp"
#include "spde2d/stochastics.hpp"

namespace spde2d {

struct EulerConfig {
    double dt = 1e-4;                 // an integer multiple of dt_leb
    int threads = 0;
    std::vector<double> record_times; // empty: terminal time only
};

/// Precomputed stencil scales for the matrix-form step.
struct EulerStencils {
    double inv2dx = 0.0;
    double invdx2 = 0.0;
    double inv2dv = 0.0;
    double invdv2 = 0.0;
    double inv4dxdv = 0.0;

    static EulerStencils from_grid(const GridSpec& grid);
};

/// One explicit step in the matrix (stencil/elementwise) formulation:
///   U+ = U + [H.U + F^x.(D^x U) + F^v.(U D^v') + 1/2 G^xx.(D^xx U)
///             + G^xv.(D^x U D^v') + 1/2 G^vv.(U D^vv')] dt
///          + [S.U + S^x.(D^x U) + S^v.(U D^v')] dW
/// where . is the elementwise product and zero boundary data is implicit.
Field euler_step(const CoefficientFields& fields, const Field& u, double dW,
                 double dt, const EulerStencils& stencils);

/// Same update written into caller storage; returns the max-abs of the
/// output so the solver can detect blow-up without another pass.
double euler_step_into(const CoefficientFields& fields, const Field& u, Field& out,
                       double dW, double dt, const EulerStencils& stencils);

/// Time-steps every trajectory with increments summed from the shared
/// Lebesgue-grid paths (never fresh randomness), flags blow-up on non-finite
/// values, and records per-trajectory wall time. Returns one ensemble per
/// record time.
std::vector<SolutionEnsemble> solve_euler(const EulerConfig& cfg,
                                          const CoefficientFields& fields,
                                          const GridSpec& grid, const Field& phi,
                                          const BrownianBatch& batch, double T);

} // namespace spde2d
