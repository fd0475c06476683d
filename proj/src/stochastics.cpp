#include "spde2d/stochastics.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <string>

namespace spde2d {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

} // namespace

NormalStream::NormalStream(std::uint64_t seed, std::uint64_t trajectory) {
    std::uint64_t mix = seed;
    (void)splitmix64(mix);
    mix ^= (trajectory + 1) * 0xD1B54A32D192ED03ULL;
    for (auto& s : s_) s = splitmix64(mix);
}

std::uint64_t NormalStream::next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double NormalStream::next() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    // Box-Muller on uniforms in (0,1]; u1 > 0 keeps the log finite.
    const double u1 =
        (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(angle);
    has_cached_ = true;
    return r * std::cos(angle);
}

namespace {

std::size_t commensurate_steps(double total, double dt, const char* what) {
    if (!(dt > 0.0)) throw ConfigError(std::string(what) + ": step must be positive");
    if (!(total > 0.0)) throw ConfigError(std::string(what) + ": horizon must be positive");
    const double ratio = total / dt;
    const auto steps = static_cast<std::int64_t>(std::llround(ratio));
    if (steps < 1 || std::abs(total - static_cast<double>(steps) * dt) >
                         1e-12 * std::max(1.0, std::abs(total))) {
        throw ConfigError(std::string(what) + ": " + std::to_string(total) +
                          " is not an integer multiple of " + std::to_string(dt));
    }
    return static_cast<std::size_t>(steps);
}

} // namespace

BrownianBatch simulate_brownian(double T, double dt_leb, std::size_t M, std::uint64_t seed) {
    if (M == 0) throw ConfigError("simulate_brownian: need at least one trajectory");
    BrownianBatch batch;
    batch.T = T;
    batch.dt_leb = dt_leb;
    batch.M = M;
    batch.seed = seed;
    batch.steps = commensurate_steps(T, dt_leb, "simulate_brownian");

    const double scale = std::sqrt(dt_leb);
    batch.increments.resize(M);
    batch.values.resize(M);
    for (std::size_t m = 0; m < M; ++m) {
        NormalStream stream(seed, m);
        auto& inc = batch.increments[m];
        auto& val = batch.values[m];
        inc.resize(batch.steps);
        val.resize(batch.steps + 1);
        val[0] = 0.0;
        for (std::size_t k = 0; k < batch.steps; ++k) {
            inc[k] = scale * stream.next();
            val[k + 1] = val[k] + inc[k];
        }
    }
    return batch;
}

std::size_t BrownianBatch::index_of(double t) const {
    const double ratio = t / dt_leb;
    const auto k = static_cast<std::int64_t>(std::llround(ratio));
    if (k < 0 || static_cast<std::size_t>(k) > steps ||
        std::abs(t - static_cast<double>(k) * dt_leb) > 1e-12 * std::max(1.0, std::abs(t))) {
        throw ConfigError("time " + std::to_string(t) + " is not on the Lebesgue grid");
    }
    return static_cast<std::size_t>(k);
}

PathSegment window(const BrownianBatch& batch, double t0, double t1, std::size_t m) {
    if (m >= batch.M) throw ConfigError("window: trajectory index out of range");
    const std::size_t k0 = batch.index_of(t0);
    const std::size_t k1 = batch.index_of(t1);
    if (k0 >= k1) throw ConfigError("window: need t0 < t1 on the grid");
    return PathSegment{&batch.values[m], k0, k1, batch.dt_leb};
}

ItoFunctionals lebesgue_functionals(const PathSegment& segment) {
    if (segment.steps() == 0) throw ConfigError("lebesgue_functionals: empty segment");
    const auto& p = *segment.path;
    const double base = p[segment.k0];
    const double dt = segment.dt_leb;
    double iw = 0.0, isw = 0.0, iw2 = 0.0;
    for (std::size_t j = 0; j < segment.steps(); ++j) {
        const double w = p[segment.k0 + j] - base;
        const double s = static_cast<double>(j) * dt;
        iw += w;
        isw += s * w;
        iw2 += w * w;
    }
    ItoFunctionals f;
    f.h = segment.length();
    f.W = segment.terminal();
    f.IW = iw * dt;
    f.IsW = isw * dt;
    f.IW2 = iw2 * dt;
    return f;
}

namespace {

double ipow(double x, int n) {
    if (n == 0) return 1.0;
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
}

} // namespace

double ito_identity_residual(ItoIdentity identity, const ItoExponents& e,
                             const PathSegment& seg) {
    if (e.p < 0 || e.p1 < 0 || e.p2 < 0 || e.q < 0 || e.q1 < 0 || e.q2 < 0) {
        throw ConfigError("ito_identity_residual: exponents must be non-negative");
    }
    const std::size_t n = seg.steps();
    if (n == 0) throw ConfigError("ito_identity_residual: empty segment");
    const auto& p = *seg.path;
    const double base = p[seg.k0];
    const double dt = seg.dt_leb;
    const double t = seg.length();
    const double wt = seg.terminal();

    auto w_at = [&](std::size_t j) { return p[seg.k0 + j] - base; };
    auto dw_at = [&](std::size_t j) { return p[seg.k0 + j + 1] - p[seg.k0 + j]; };

    switch (identity) {
    case ItoIdentity::A: {
        // int s^p W^q dW = (t^p W_t^{q+1} - int [q(q+1)/2 s^p W^{q-1}
        //                  + p W^{q+1} s^{p-1}] ds) / (q+1)
        double lhs = 0.0, ds = 0.0;
        const double cq = 0.5 * e.q * (e.q + 1);
        for (std::size_t j = 0; j < n; ++j) {
            const double s = static_cast<double>(j) * dt;
            const double w = w_at(j);
            lhs += ipow(s, e.p) * ipow(w, e.q) * dw_at(j);
            double integrand = 0.0;
            if (e.q > 0) integrand += cq * ipow(s, e.p) * ipow(w, e.q - 1);
            if (e.p > 0) integrand += e.p * ipow(w, e.q + 1) * ipow(s, e.p - 1);
            ds += integrand;
        }
        const double rhs = (ipow(t, e.p) * ipow(wt, e.q + 1) - ds * dt) / (e.q + 1);
        return lhs - rhs;
    }
    case ItoIdentity::B: {
        // int s^{p1} (int r^{p2} W^q dr) ds
        //   = (t^{1+p1} int s^{p2} W^q ds - int s^{1+p1+p2} W^q ds) / (1+p1)
        double lhs = 0.0, inner = 0.0, i1 = 0.0, i2 = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double s = static_cast<double>(j) * dt;
            const double w = w_at(j);
            lhs += ipow(s, e.p1) * inner;
            inner += ipow(s, e.p2) * ipow(w, e.q) * dt;
            i1 += ipow(s, e.p2) * ipow(w, e.q);
            i2 += ipow(s, 1 + e.p1 + e.p2) * ipow(w, e.q);
        }
        lhs *= dt;
        const double rhs = (ipow(t, 1 + e.p1) * i1 * dt - i2 * dt) / (1 + e.p1);
        return lhs - rhs;
    }
    case ItoIdentity::C: {
        // int s^{p1} W^{q1} (int r^{p2} W^{q2} dr) dW, see the matching
        // rearrangement with three Lebesgue remainder integrals.
        double lhs = 0.0, inner = 0.0, i1 = 0.0, i2 = 0.0, i3 = 0.0, i4 = 0.0;
        const double cq = 0.5 * e.q1 * (e.q1 + 1);
        for (std::size_t j = 0; j < n; ++j) {
            const double s = static_cast<double>(j) * dt;
            const double w = w_at(j);
            lhs += ipow(s, e.p1) * ipow(w, e.q1) * inner * dw_at(j);
            i1 += ipow(s, e.p2) * ipow(w, e.q2);
            i2 += ipow(s, e.p1 + e.p2) * ipow(w, e.q1 + e.q2 + 1);
            if (e.q1 > 0) i3 += ipow(s, e.p1) * ipow(w, e.q1 - 1) * inner;
            if (e.p1 > 0) i4 += ipow(s, e.p1 - 1) * ipow(w, e.q1 + 1) * inner;
            inner += ipow(s, e.p2) * ipow(w, e.q2) * dt;
        }
        double rhs = ipow(t, e.p1) * ipow(wt, e.q1 + 1) * i1 * dt - i2 * dt;
        if (e.q1 > 0) rhs -= cq * i3 * dt;
        if (e.p1 > 0) rhs -= e.p1 * i4 * dt;
        rhs /= (e.q1 + 1);
        return lhs - rhs;
    }
    }
    throw ConfigError("ito_identity_residual: unsupported identity tag");
}

void dump_path(const BrownianBatch& batch, std::size_t m, std::ostream& os) {
    if (m >= batch.M) throw ConfigError("dump_path: trajectory index out of range");
    char buf[96];
    for (std::size_t k = 0; k <= batch.steps; ++k) {
        std::snprintf(buf, sizeof buf, "%.12g %.17g\n",
                      static_cast<double>(k) * batch.dt_leb, batch.values[m][k]);
        os << buf;
    }
}

} // namespace spde2d
