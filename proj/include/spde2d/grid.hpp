#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "spde2d/errors.hpp"

namespace spde2d {

/// One homogeneous grid axis over [a, b] with n interior nodes.
/// Node i (0-based, 0 <= i < n) sits at a + (i+1)*delta; the boundary
/// points a and b carry implicit zero-Dirichlet data and are never stored.
struct Grid1D {
    double a = 0.0;
    double b = 0.0;
    std::size_t n = 0;
    double delta = 0.0;

    double node(std::size_t i) const { return a + static_cast<double>(i + 1) * delta; }
};

/// Builds a homogeneous grid with spacing (b - a)/(n + 1).
Grid1D build_grid(double a, double b, std::size_t n);

/// Position/velocity grid pair. The vectorized state has dimension x.n * v.n.
struct GridSpec {
    Grid1D x;
    Grid1D v;

    std::size_t dim() const { return x.n * v.n; }

    /// Common size alias, set only for square grids.
    std::optional<std::size_t> d() const {
        if (x.n == v.n) return x.n;
        return std::nullopt;
    }
};

/// Dense nx-by-nv scalar samples in column-major order, i.e. entry (i, j)
/// lives at j*nx + i. This matches the column-stacking vectorization, so a
/// Field's storage and its vectorized form coincide elementwise.
class Field {
public:
    Field() = default;
    Field(std::size_t nx, std::size_t nv, double fill = 0.0)
        : nx_(nx), nv_(nv), data_(nx * nv, fill) {}

    std::size_t nx() const { return nx_; }
    std::size_t nv() const { return nv_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[j * nx_ + i]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[j * nx_ + i]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    /// True when every entry is exactly zero.
    bool all_zero() const;

private:
    std::size_t nx_ = 0;
    std::size_t nv_ = 0;
    std::vector<double> data_;
};

/// Column-stacks a field into a vector of length nx*nv: output index
/// j*nx + i holds entry (i, j).
std::vector<double> vectorize(const Field& field);

/// Inverse of vectorize. Throws DimensionError on length mismatch.
Field devectorize(std::span<const double> vec, std::size_t nx, std::size_t nv);

} // namespace spde2d
