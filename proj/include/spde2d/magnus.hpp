#pragma once

#include <memory>
#include <vector>

#include "spde2d/grid.hpp"
#include "spde2d/operators.hpp"
#include "spde2d/sparse.hpp"
#include "spde2d/stochastics.hpp"

namespace spde2d {

struct AdaptiveConfig {
    bool enabled = false;
    double tolerance = 1e-4; // accepted order-2/order-3 relative gap
    double shrink = 0.5;     // window shrink factor in (0, 1)
};

struct MagnusConfig {
    int order = 3;
    double dt = 0.1;             // window length, an integer multiple of dt_leb
    double expmv_tol = 1e-10;
    double expmv_theta = 1.0;
    double blowup_norm_cap = 1e10;
    AdaptiveConfig adaptive;
    int threads = 0;                  // 0: runtime default
    std::vector<double> record_times; // empty: terminal time only
};

enum class TrajectoryStatus { Ok, BlownUp };

/// Per-trajectory terminal fields at one evaluation time. Blown-up
/// trajectories carry an empty state vector and are never averaged silently.
struct SolutionEnsemble {
    GridSpec grid;
    double t = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::vector<double>> states;
    std::vector<TrajectoryStatus> status;
    std::vector<double> seconds; // wall-clock per trajectory

    std::size_t trajectories() const { return status.size(); }
    std::size_t blowup_count() const;
};

/// Magnus logarithm of the propagator over a window of length f.h:
///   order 1: Y = B h + A W
///   order 2: Y += -1/2 A^2 h + [B,A] (IW - 1/2 h W)
///   order 3: Y += [[B,A],A] (1/2 IW2 - 1/2 W IW + 1/12 h W^2)
///            + [[B,A],B] (IsW - 1/2 h IW - 1/12 h^2 W)
SparseMatrix magnus_log(int order, const CommutatorSet& comms, const ItoFunctionals& f);

/// One propagator application u -> exp(Y) u. Throws ExpmvError on overflow;
/// the iterated solvers translate that into a blow-up flag.
std::vector<double> magnus_step(const SparseMatrix& y, std::span<const double> u, double tol);

/// Fast path for the iterated scheme: the union sparsity pattern of all
/// matrices entering the logarithm is precomputed once, and each window only
/// refills the value array. Thread-safe for concurrent fill() calls with
/// distinct output buffers.
class MagnusLogBuilder {
public:
    MagnusLogBuilder(const CommutatorSet& comms, int order);

    std::size_t dim() const { return rows_; }
    std::size_t nnz() const { return col_.size(); }

    /// Fills `values` (resized to nnz()) with the order-`order` logarithm for
    /// functionals f; order must not exceed the construction order.
    void fill(int order, const ItoFunctionals& f, std::vector<double>& values) const;

    SparseView view_with(std::span<const double> values) const;

private:
    std::size_t rows_ = 0;
    int order_ = 1;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::int32_t> col_;
    struct Source {
        int min_order;                    // smallest order using this matrix
        const SparseMatrix* matrix;
        std::vector<std::size_t> scatter; // source entry -> union position
    };
    std::vector<Source> sources_;
};

/// Advances every trajectory over [0, T] in windows of length cfg.dt: on
/// each window the rebased path functionals feed the logarithm, expmv
/// applies it, and the terminal vector seeds the next window. A trajectory
/// is flagged blown-up when expmv overflows, fails its tolerance budget, or
/// the state norm passes cfg.blowup_norm_cap. Returns one ensemble per
/// record time (default: terminal T only).
std::vector<SolutionEnsemble> solve_iterated_magnus(const MagnusConfig& cfg,
                                                    const CommutatorSet& comms,
                                                    std::span<const double> phi,
                                                    const BrownianBatch& batch,
                                                    double T, const GridSpec& grid);

/// Step-size-controlled variant: each window is solved at orders 2 and 3
/// (one shared logarithm build); when the relative gap exceeds
/// cfg.adaptive.tolerance the window shrinks by cfg.adaptive.shrink and is
/// retried. Accepted windows advance with the order-3 result. Shrinking
/// below dt_leb marks the trajectory failed.
std::vector<SolutionEnsemble> solve_adaptive_magnus(const MagnusConfig& cfg,
                                                    const CommutatorSet& comms,
                                                    std::span<const double> phi,
                                                    const BrownianBatch& batch,
                                                    double T, const GridSpec& grid);

} // namespace spde2d
