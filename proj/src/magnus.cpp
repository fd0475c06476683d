#include "spde2d/magnus.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace spde2d {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Scalar weights of the six matrices entering the logarithm, in the fixed
// order B, A, A^2, [B,A], [[B,A],A], [[B,A],B].
std::array<double, 6> log_coefficients(int order, const ItoFunctionals& f) {
    const double h = f.h;
    std::array<double, 6> c{};
    c[0] = h;
    c[1] = f.W;
    if (order >= 2) {
        c[2] = -0.5 * h;
        c[3] = f.IW - 0.5 * h * f.W;
    }
    if (order >= 3) {
        c[4] = 0.5 * f.IW2 - 0.5 * f.W * f.IW + h * f.W * f.W / 12.0;
        c[5] = f.IsW - 0.5 * h * f.IW - h * h * f.W / 12.0;
    }
    return c;
}

const SparseMatrix* source_matrix(const CommutatorSet& comms, int slot) {
    switch (slot) {
    case 0: return &comms.B;
    case 1: return &comms.A;
    case 2: return &comms.A2;
    case 3: return &comms.BA;
    case 4: return &comms.BAA;
    case 5: return &comms.BAB;
    default: return nullptr;
    }
}

int slot_min_order(int slot) { return slot <= 1 ? 1 : (slot <= 3 ? 2 : 3); }

} // namespace

std::size_t SolutionEnsemble::blowup_count() const {
    return static_cast<std::size_t>(
        std::count(status.begin(), status.end(), TrajectoryStatus::BlownUp));
}

SparseMatrix magnus_log(int order, const CommutatorSet& comms, const ItoFunctionals& f) {
    if (order < 1 || order > 3) {
        throw ConfigError("magnus_log: order must be in {1, 2, 3}");
    }
    if (order > comms.order) {
        throw ConfigError("magnus_log: commutator set only covers order " +
                          std::to_string(comms.order));
    }
    const auto c = log_coefficients(order, f);
    SparseMatrix y = sparse_add(sparse_scale(comms.B, c[0]), sparse_scale(comms.A, c[1]));
    if (order >= 2) {
        y = sparse_add(y, sparse_scale(comms.A2, c[2]));
        y = sparse_add(y, sparse_scale(comms.BA, c[3]));
    }
    if (order >= 3) {
        y = sparse_add(y, sparse_scale(comms.BAA, c[4]));
        y = sparse_add(y, sparse_scale(comms.BAB, c[5]));
    }
    return y;
}

std::vector<double> magnus_step(const SparseMatrix& y, std::span<const double> u, double tol) {
    return expmv(y, u, tol);
}

MagnusLogBuilder::MagnusLogBuilder(const CommutatorSet& comms, int order) : order_(order) {
    if (order < 1 || order > 3 || order > comms.order) {
        throw ConfigError("MagnusLogBuilder: unsupported order");
    }
    rows_ = comms.B.rows();

    // Union pattern over all participating matrices, then one scatter map
    // per source so a window build is a handful of axpy passes.
    std::vector<const SparseMatrix*> mats;
    std::vector<int> slots;
    for (int slot = 0; slot < 6; ++slot) {
        if (slot_min_order(slot) <= order) {
            mats.push_back(source_matrix(comms, slot));
            slots.push_back(slot);
        }
    }

    row_ptr_.assign(rows_ + 1, 0);
    std::vector<std::int32_t> merged;
    std::vector<std::int32_t> scratch;
    for (std::size_t r = 0; r < rows_; ++r) {
        scratch.clear();
        for (const SparseMatrix* m : mats) {
            const auto rp = m->row_ptr();
            const auto ci = m->col_idx();
            scratch.insert(scratch.end(), ci.begin() + rp[r], ci.begin() + rp[r + 1]);
        }
        std::sort(scratch.begin(), scratch.end());
        scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
        merged.insert(merged.end(), scratch.begin(), scratch.end());
        row_ptr_[r + 1] = merged.size();
    }
    col_ = std::move(merged);

    sources_.resize(mats.size());
    for (std::size_t s = 0; s < mats.size(); ++s) {
        const SparseMatrix* m = mats[s];
        sources_[s].min_order = slot_min_order(slots[s]);
        sources_[s].matrix = m;
        auto& scatter = sources_[s].scatter;
        scatter.resize(m->nnz());
        const auto rp = m->row_ptr();
        const auto ci = m->col_idx();
        for (std::size_t r = 0; r < rows_; ++r) {
            std::size_t u = row_ptr_[r];
            for (std::size_t k = rp[r]; k < rp[r + 1]; ++k) {
                while (col_[u] != ci[k]) ++u;
                scatter[k] = u;
            }
        }
    }
}

void MagnusLogBuilder::fill(int order, const ItoFunctionals& f,
                            std::vector<double>& values) const {
    if (order < 1 || order > order_) {
        throw ConfigError("MagnusLogBuilder::fill: order exceeds builder order");
    }
    const auto c = log_coefficients(order, f);
    values.assign(col_.size(), 0.0);
    std::size_t idx = 0;
    for (int s = 0; s < 6; ++s) {
        if (slot_min_order(s) > order_) continue;
        const Source& src = sources_[idx++];
        if (slot_min_order(s) > order) continue;
        const double coef = c[s];
        if (coef == 0.0) continue;
        const auto v = src.matrix->values();
        for (std::size_t k = 0; k < v.size(); ++k) {
            values[src.scatter[k]] += coef * v[k];
        }
    }
}

SparseView MagnusLogBuilder::view_with(std::span<const double> values) const {
    return SparseView{rows_, rows_, row_ptr_, col_, values};
}

namespace {

struct WindowPlan {
    std::size_t dt_steps = 0;      // window length in Lebesgue steps
    std::size_t total_steps = 0;   // horizon in Lebesgue steps
    std::vector<std::size_t> record_steps; // ascending, last == total_steps
};

WindowPlan plan_windows(double dt, double T, const BrownianBatch& batch,
                        const std::vector<double>& record_times) {
    WindowPlan plan;
    plan.total_steps = batch.index_of(T);
    plan.dt_steps = batch.index_of(dt);
    if (plan.dt_steps == 0) throw ConfigError("solver: dt must be at least dt_leb");
    if (plan.total_steps % plan.dt_steps != 0) {
        throw ConfigError("solver: T must be an integer multiple of dt");
    }
    if (record_times.empty()) {
        plan.record_steps.push_back(plan.total_steps);
    } else {
        for (double t : record_times) {
            const std::size_t k = batch.index_of(t);
            if (k == 0 || k > plan.total_steps || k % plan.dt_steps != 0) {
                throw ConfigError("solver: record time " + std::to_string(t) +
                                  " is not a positive multiple of dt within [0, T]");
            }
            plan.record_steps.push_back(k);
        }
        std::sort(plan.record_steps.begin(), plan.record_steps.end());
        if (plan.record_steps.back() != plan.total_steps) {
            plan.record_steps.push_back(plan.total_steps);
        }
    }
    return plan;
}

std::vector<SolutionEnsemble> make_ensembles(const GridSpec& grid, const BrownianBatch& batch,
                                             const std::vector<std::size_t>& record_steps) {
    std::vector<SolutionEnsemble> out(record_steps.size());
    for (std::size_t r = 0; r < record_steps.size(); ++r) {
        out[r].grid = grid;
        out[r].t = static_cast<double>(record_steps[r]) * batch.dt_leb;
        out[r].seed = batch.seed;
        out[r].states.resize(batch.M);
        out[r].status.assign(batch.M, TrajectoryStatus::BlownUp);
        out[r].seconds.assign(batch.M, 0.0);
    }
    return out;
}

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

int resolve_threads(int requested) {
#ifdef _OPENMP
    return requested > 0 ? requested : omp_get_max_threads();
#else
    (void)requested;
    return 1;
#endif
}

ItoFunctionals window_functionals(const BrownianBatch& batch, std::size_t m,
                                  std::size_t k0, std::size_t k1) {
    PathSegment seg{&batch.values[m], k0, k1, batch.dt_leb};
    return lebesgue_functionals(seg);
}

} // namespace

std::vector<SolutionEnsemble> solve_iterated_magnus(const MagnusConfig& cfg,
                                                    const CommutatorSet& comms,
                                                    std::span<const double> phi,
                                                    const BrownianBatch& batch,
                                                    double T, const GridSpec& grid) {
    if (cfg.order < 1 || cfg.order > 3 || cfg.order > comms.order) {
        throw ConfigError("solve_iterated_magnus: unsupported order");
    }
    if (phi.size() != grid.dim() || comms.B.rows() != grid.dim()) {
        throw DimensionError("solve_iterated_magnus: dimension mismatch");
    }
    for (double v : phi) {
        if (!std::isfinite(v)) throw ConfigError("solve_iterated_magnus: non-finite datum");
    }
    const WindowPlan plan = plan_windows(cfg.dt, T, batch, cfg.record_times);
    auto out = make_ensembles(grid, batch, plan.record_steps);
    const MagnusLogBuilder builder(comms, cfg.order);
    const int nthreads = resolve_threads(cfg.threads);

#pragma omp parallel num_threads(nthreads)
    {
        ExpmvWorkspace ws;
        std::vector<double> yvals;
        std::vector<double> u, unext;
#pragma omp for schedule(dynamic)
        for (std::int64_t mi = 0; mi < static_cast<std::int64_t>(batch.M); ++mi) {
            const auto m = static_cast<std::size_t>(mi);
            const auto start = Clock::now();
            u.assign(phi.begin(), phi.end());
            bool blown = false;
            std::size_t rec = 0;
            for (std::size_t k0 = 0; k0 < plan.total_steps && !blown;
                 k0 += plan.dt_steps) {
                const std::size_t k1 = k0 + plan.dt_steps;
                const ItoFunctionals f = window_functionals(batch, m, k0, k1);
                builder.fill(cfg.order, f, yvals);
                const ExpmvReport rep = expmv_into(builder.view_with(yvals), u, unext,
                                                   cfg.expmv_tol, cfg.expmv_theta, ws);
                if (rep.status != ExpmvStatus::Ok) {
                    blown = true;
                    break;
                }
                u.swap(unext);
                const double norm = max_abs(u);
                if (!std::isfinite(norm) || norm > cfg.blowup_norm_cap) {
                    blown = true;
                    break;
                }
                while (rec < plan.record_steps.size() && plan.record_steps[rec] == k1) {
                    out[rec].states[m] = u;
                    out[rec].status[m] = TrajectoryStatus::Ok;
                    ++rec;
                }
            }
            const double elapsed = seconds_since(start);
            for (auto& ensemble : out) ensemble.seconds[m] = elapsed;
            if (blown) {
                for (std::size_t r = rec; r < out.size(); ++r) {
                    out[r].states[m].clear();
                    out[r].status[m] = TrajectoryStatus::BlownUp;
                }
            }
        }
    }
    return out;
}

std::vector<SolutionEnsemble> solve_adaptive_magnus(const MagnusConfig& cfg,
                                                    const CommutatorSet& comms,
                                                    std::span<const double> phi,
                                                    const BrownianBatch& batch,
                                                    double T, const GridSpec& grid) {
    if (!cfg.adaptive.enabled) {
        throw ConfigError("solve_adaptive_magnus: adaptive flag not set");
    }
    if (!(cfg.adaptive.shrink > 0.0 && cfg.adaptive.shrink < 1.0)) {
        throw ConfigError("solve_adaptive_magnus: shrink factor must lie in (0, 1)");
    }
    if (comms.order < 3) {
        throw ConfigError("solve_adaptive_magnus: needs order-3 commutators");
    }
    if (phi.size() != grid.dim() || comms.B.rows() != grid.dim()) {
        throw DimensionError("solve_adaptive_magnus: dimension mismatch");
    }
    const WindowPlan plan = plan_windows(cfg.dt, T, batch, cfg.record_times);
    auto out = make_ensembles(grid, batch, plan.record_steps);
    const MagnusLogBuilder builder(comms, 3);
    const int nthreads = resolve_threads(cfg.threads);
    const double tau = cfg.adaptive.tolerance;

#pragma omp parallel num_threads(nthreads)
    {
        ExpmvWorkspace ws2, ws3;
        std::vector<double> y2vals, y3vals;
        std::vector<double> u, u2, u3;
#pragma omp for schedule(dynamic)
        for (std::int64_t mi = 0; mi < static_cast<std::int64_t>(batch.M); ++mi) {
            const auto m = static_cast<std::size_t>(mi);
            const auto start = Clock::now();
            u.assign(phi.begin(), phi.end());
            bool blown = false;
            std::size_t rec = 0;
            std::size_t k0 = 0;
            while (k0 < plan.total_steps && !blown) {
                // never step across the next record boundary
                const std::size_t next_rec = plan.record_steps[rec];
                std::size_t len = std::min(plan.dt_steps, next_rec - k0);
                bool accepted = false;
                while (!accepted) {
                    const std::size_t k1 = k0 + len;
                    const ItoFunctionals f = window_functionals(batch, m, k0, k1);
                    builder.fill(3, f, y3vals);
                    builder.fill(2, f, y2vals);
                    const ExpmvReport rep3 = expmv_into(builder.view_with(y3vals), u, u3,
                                                        cfg.expmv_tol, cfg.expmv_theta, ws3);
                    const ExpmvReport rep2 = expmv_into(builder.view_with(y2vals), u, u2,
                                                        cfg.expmv_tol, cfg.expmv_theta, ws2);
                    bool ok = rep3.status == ExpmvStatus::Ok && rep2.status == ExpmvStatus::Ok;
                    double gap = std::numeric_limits<double>::infinity();
                    if (ok) {
                        double diff = 0.0;
                        for (std::size_t i = 0; i < u3.size(); ++i) {
                            diff = std::max(diff, std::abs(u3[i] - u2[i]));
                        }
                        const double scale = max_abs(u3);
                        gap = scale > 0.0 ? diff / scale : diff;
                        ok = std::isfinite(gap);
                    }
                    if (ok && gap <= tau) {
                        u.swap(u3);
                        const double norm = max_abs(u);
                        if (!std::isfinite(norm) || norm > cfg.blowup_norm_cap) {
                            blown = true;
                        }
                        k0 = k1;
                        accepted = true;
                    } else {
                        const auto shrunk = static_cast<std::size_t>(
                            static_cast<double>(len) * cfg.adaptive.shrink);
                        if (shrunk < 1) {
                            blown = true; // cannot refine below the Lebesgue grid
                            accepted = true;
                        } else {
                            len = shrunk;
                        }
                    }
                }
                while (!blown && rec < plan.record_steps.size() &&
                       plan.record_steps[rec] == k0) {
                    out[rec].states[m] = u;
                    out[rec].status[m] = TrajectoryStatus::Ok;
                    ++rec;
                }
            }
            const double elapsed = seconds_since(start);
            for (auto& ensemble : out) ensemble.seconds[m] = elapsed;
            if (blown) {
                for (std::size_t r = rec; r < out.size(); ++r) {
                    out[r].states[m].clear();
                    out[r].status[m] = TrajectoryStatus::BlownUp;
                }
            }
        }
    }
    return out;
}

} // namespace spde2d
