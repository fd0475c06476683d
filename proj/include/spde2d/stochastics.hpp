#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "spde2d/errors.hpp"

namespace spde2d {

/// Deterministic per-trajectory normal stream. Splitting rule: the stream
/// for trajectory m is seeded by feeding (seed, m+1) through splitmix64 to
/// initialize an xoshiro256++ state; normals come from Box-Muller pairs.
/// A trajectory therefore draws the same numbers no matter how many threads
/// run or in which order trajectories are processed.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t trajectory);
    double next();

private:
    std::uint64_t next_u64();
    std::uint64_t s_[4];
    double cached_ = 0.0;
    bool has_cached_ = false;
};

/// M seeded Brownian paths sampled on the Lebesgue grid of spacing dt_leb.
/// Stores the N(0, dt_leb) increments and their prefix sums (path values,
/// values[m][0] == 0), so every window quantity is an exact difference of
/// the same prefix array and sub-interval sums telescope exactly.
struct BrownianBatch {
    double T = 0.0;
    double dt_leb = 0.0;
    std::size_t M = 0;
    std::uint64_t seed = 0;
    std::size_t steps = 0;
    std::vector<std::vector<double>> increments; // [m][k], k < steps
    std::vector<std::vector<double>> values;     // [m][k], k <= steps

    /// Lebesgue index of time t; throws ConfigError when t is off-grid.
    std::size_t index_of(double t) const;
};

BrownianBatch simulate_brownian(double T, double dt_leb, std::size_t M, std::uint64_t seed);

/// Rebased view of one trajectory over [t0, t1]: value(j) = W(t0 + j dt) - W(t0).
struct PathSegment {
    const std::vector<double>* path = nullptr; // prefix values of one trajectory
    std::size_t k0 = 0;
    std::size_t k1 = 0;
    double dt_leb = 0.0;

    std::size_t steps() const { return k1 - k0; }
    double length() const { return static_cast<double>(k1 - k0) * dt_leb; }
    double value(std::size_t j) const { return (*path)[k0 + j] - (*path)[k0]; }
    double terminal() const { return (*path)[k1] - (*path)[k0]; }
};

PathSegment window(const BrownianBatch& batch, double t0, double t1, std::size_t m);

/// Window functionals entering the Magnus logarithm, all left-endpoint
/// Riemann sums on the Lebesgue sub-grid: W = rebased terminal value,
/// IW = int_0^h W ds, IsW = int_0^h s W ds, IW2 = int_0^h W^2 ds.
struct ItoFunctionals {
    double h = 0.0;
    double W = 0.0;
    double IW = 0.0;
    double IsW = 0.0;
    double IW2 = 0.0;
};

ItoFunctionals lebesgue_functionals(const PathSegment& segment);

/// The three polynomial Brownian-integral identities used as Monte-Carlo
/// oracles. Exponents irrelevant to the selected identity are ignored.
enum class ItoIdentity { A, B, C };

struct ItoExponents {
    int p = 0, p1 = 0, p2 = 0;
    int q = 0, q1 = 0, q2 = 0;
};

/// Pathwise left-side minus right-side of the selected identity, with Ito
/// integrals discretized as non-anticipating left-endpoint sums and Lebesgue
/// integrals as left Riemann sums.
double ito_identity_residual(ItoIdentity identity, const ItoExponents& e,
                             const PathSegment& segment);

/// Debug dump: one "t W" line per Lebesgue grid time.
void dump_path(const BrownianBatch& batch, std::size_t m, std::ostream& os);

} // namespace spde2d
