#include "spde2d/analysis.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace spde2d {

CentralRegion central_region(std::size_t d, int kappa) {
    if (d < 2) throw ConfigError("central_region: need d >= 2");
    if (kappa < 0) throw ConfigError("central_region: kappa must be non-negative");
    // The 2^-kappa central part is empty once 2^kappa exceeds d.
    if (kappa >= 63 || (static_cast<std::size_t>(1) << kappa) > d) {
        throw ConfigError("central_region: empty region, kappa too large for d=" +
                          std::to_string(d));
    }
    const double half = static_cast<double>(d) / 2.0;
    const double width = static_cast<double>(d) / std::pow(2.0, kappa + 1);
    // 1-based index window per the floor display, exposed 0-based and
    // clamped to the grid.
    const auto lo1 = static_cast<std::int64_t>(std::floor(half - width));
    const auto hi1 = static_cast<std::int64_t>(std::floor(half + width));
    CentralRegion r;
    r.d = d;
    r.kappa = kappa;
    r.lo = static_cast<std::size_t>(std::max<std::int64_t>(lo1 - 1, 0));
    r.hi = static_cast<std::size_t>(
        std::min<std::int64_t>(hi1 - 1, static_cast<std::int64_t>(d) - 1));
    if (r.hi < r.lo) throw ConfigError("central_region: empty region");
    return r;
}

namespace {

void check_pairing(const SolutionEnsemble& ref, const SolutionEnsemble& app,
                   const CentralRegion& region) {
    if (ref.grid.x.n != app.grid.x.n || ref.grid.v.n != app.grid.v.n) {
        throw DimensionError("error norms: grids differ");
    }
    if (ref.trajectories() != app.trajectories()) {
        throw DimensionError("error norms: trajectory counts differ");
    }
    if (ref.seed != app.seed) {
        throw ConfigError("error norms: ensembles were built from different seeds");
    }
    if (region.hi >= ref.grid.x.n || region.hi >= ref.grid.v.n) {
        throw DimensionError("error norms: region exceeds the grid");
    }
}

} // namespace

MeanAbsError mean_abs_error(const SolutionEnsemble& ref, const SolutionEnsemble& app,
                            const CentralRegion& region) {
    check_pairing(ref, app, region);
    const std::size_t nx = ref.grid.x.n;
    const std::size_t w = region.size();
    MeanAbsError result;
    result.me = Field(w, w);
    std::size_t used = 0;
    for (std::size_t m = 0; m < ref.trajectories(); ++m) {
        if (app.status[m] != TrajectoryStatus::Ok) {
            ++result.excluded;
            continue;
        }
        if (ref.status[m] != TrajectoryStatus::Ok) {
            throw ConfigError("mean_abs_error: reference trajectory blew up");
        }
        ++used;
        const auto& rs = ref.states[m];
        const auto& as = app.states[m];
        for (std::size_t j = 0; j < w; ++j) {
            const std::size_t col = (region.lo + j) * nx;
            for (std::size_t i = 0; i < w; ++i) {
                const std::size_t idx = col + region.lo + i;
                result.me(i, j) += std::abs(rs[idx] - as[idx]);
            }
        }
    }
    if (used > 0) {
        const double inv = 1.0 / static_cast<double>(used);
        for (double& v : result.me.data()) v *= inv;
    }
    return result;
}

double avg_mean_abs_error(const Field& me) {
    double sum = 0.0;
    for (double v : me.data()) sum += v;
    return me.size() > 0 ? sum / static_cast<double>(me.size()) : 0.0;
}

RelError mean_rel_error(const SolutionEnsemble& ref, const SolutionEnsemble& app,
                        const CentralRegion& region) {
    check_pairing(ref, app, region);
    const std::size_t nx = ref.grid.x.n;
    RelError out;
    double sum = 0.0;
    for (std::size_t m = 0; m < ref.trajectories(); ++m) {
        if (ref.status[m] != TrajectoryStatus::Ok) {
            throw ConfigError("mean_rel_error: reference trajectory blew up");
        }
        if (app.status[m] != TrajectoryStatus::Ok) {
            ++out.blowups;
            continue;
        }
        const auto& rs = ref.states[m];
        const auto& as = app.states[m];
        double num = 0.0, den = 0.0;
        for (std::size_t j = region.lo; j <= region.hi; ++j) {
            const std::size_t col = j * nx;
            for (std::size_t i = region.lo; i <= region.hi; ++i) {
                const double r = rs[col + i];
                const double d = r - as[col + i];
                num += d * d;
                den += r * r;
            }
        }
        if (den == 0.0) {
            throw ConfigError("mean_rel_error: reference Frobenius norm is zero");
        }
        sum += std::sqrt(num) / std::sqrt(den);
    }
    if (out.blowups > 0) {
        out.err = std::numeric_limits<double>::infinity();
    } else {
        out.err = sum / static_cast<double>(ref.trajectories());
    }
    return out;
}

} // namespace spde2d
