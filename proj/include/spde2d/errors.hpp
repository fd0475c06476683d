#pragma once

#include <stdexcept>
#include <string>

namespace spde2d {

/// Invalid user-facing configuration: bad grids, family parameters,
/// incommensurate step sizes and the like.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Shape mismatch between library objects (vector lengths, matrix dims).
class DimensionError : public std::runtime_error {
public:
    explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace spde2d
