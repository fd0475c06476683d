#pragma once

#include <cstddef>

#include "spde2d/grid.hpp"
#include "spde2d/magnus.hpp"

namespace spde2d {

/// Central index window of a d-by-d solution matrix used to keep boundary
/// artifacts out of the error norms: the 1-based index set
/// { floor(d/2 - d/2^(kappa+1)), ..., floor(d/2 + d/2^(kappa+1)) },
/// exposed 0-based and clamped to the grid. kappa = 0 covers the full grid.
struct CentralRegion {
    std::size_t d = 0;
    int kappa = 0;
    std::size_t lo = 0; // first 0-based index
    std::size_t hi = 0; // last 0-based index, inclusive

    std::size_t size() const { return hi - lo + 1; }
};

/// Throws ConfigError when the region is empty (2^kappa exceeds d).
CentralRegion central_region(std::size_t d, int kappa);

/// Mean absolute error matrix plus the count of trajectory pairs excluded
/// because the approximation blew up.
struct MeanAbsError {
    Field me; // |region| x |region|
    std::size_t excluded = 0;
};

/// Entrywise mean over trajectories of |ref - app| on region x region.
/// Requires matching grids, trajectory counts and seeds.
MeanAbsError mean_abs_error(const SolutionEnsemble& ref, const SolutionEnsemble& app,
                            const CentralRegion& region);

/// Arithmetic mean of the ME entries (normalization |region|^2).
double avg_mean_abs_error(const Field& me);

struct RelError {
    double err = 0.0; // infinity when any approximation trajectory blew up
    std::size_t blowups = 0;
};

/// Mean over trajectories of ||ref - app||_F / ||ref||_F on the region.
/// Blown-up approximation trajectories force err = infinity with the count
/// reported; a zero reference norm or blown-up reference is an error.
RelError mean_rel_error(const SolutionEnsemble& ref, const SolutionEnsemble& app,
                        const CentralRegion& region);

} // namespace spde2d
