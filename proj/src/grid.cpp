#include "spde2d/grid.hpp"

#include <algorithm>
#include <string>

namespace spde2d {

Grid1D build_grid(double a, double b, std::size_t n) {
    if (!(b > a)) {
        throw ConfigError("grid bounds must satisfy b > a, got [" + std::to_string(a) +
                          ", " + std::to_string(b) + "]");
    }
    if (n == 0) {
        throw ConfigError("grid needs at least one interior node");
    }
    Grid1D g;
    g.a = a;
    g.b = b;
    g.n = n;
    g.delta = (b - a) / static_cast<double>(n + 1);
    return g;
}

bool Field::all_zero() const {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return x == 0.0; });
}

std::vector<double> vectorize(const Field& field) {
    return std::vector<double>(field.data().begin(), field.data().end());
}

Field devectorize(std::span<const double> vec, std::size_t nx, std::size_t nv) {
    if (vec.size() != nx * nv) {
        throw DimensionError("devectorize: vector length " + std::to_string(vec.size()) +
                             " does not match " + std::to_string(nx) + "x" + std::to_string(nv));
    }
    Field f(nx, nv);
    std::copy(vec.begin(), vec.end(), f.data().begin());
    return f;
}

} // namespace spde2d
