#include "spde2d/euler.hpp"

#include <chrono>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace spde2d {

namespace {

using Clock = std::chrono::steady_clock;

} // namespace

EulerStencils EulerStencils::from_grid(const GridSpec& grid) {
    EulerStencils s;
    s.inv2dx = 1.0 / (2.0 * grid.x.delta);
    s.invdx2 = 1.0 / (grid.x.delta * grid.x.delta);
    s.inv2dv = 1.0 / (2.0 * grid.v.delta);
    s.invdv2 = 1.0 / (grid.v.delta * grid.v.delta);
    s.inv4dxdv = 1.0 / (4.0 * grid.x.delta * grid.v.delta);
    return s;
}

double euler_step_into(const CoefficientFields& f, const Field& u, Field& out,
                       double dW, double dt, const EulerStencils& st) {
    const std::size_t nx = u.nx();
    const std::size_t nv = u.nv();
    if (out.nx() != nx || out.nv() != nv) {
        throw DimensionError("euler_step: output shape mismatch");
    }
    const double* base = u.data().data();
    double* dst = out.data().data();
    double maxabs = 0.0;

    for (std::size_t j = 0; j < nv; ++j) {
        const double* c = base + j * nx;
        const double* cm = j > 0 ? c - nx : nullptr;
        const double* cp = j + 1 < nv ? c + nx : nullptr;
        double* o = dst + j * nx;
        for (std::size_t i = 0; i < nx; ++i) {
            const double uc = c[i];
            const double uxm = i > 0 ? c[i - 1] : 0.0;
            const double uxp = i + 1 < nx ? c[i + 1] : 0.0;
            const double uvm = cm ? cm[i] : 0.0;
            const double uvp = cp ? cp[i] : 0.0;

            const double dxu = (uxp - uxm) * st.inv2dx;
            const double dvu = (uvp - uvm) * st.inv2dv;

            double drift = 0.0;
            if (!f.zero_h) drift += f.h(i, j) * uc;
            if (!f.zero_fx) drift += f.fx(i, j) * dxu;
            if (!f.zero_fv) drift += f.fv(i, j) * dvu;
            if (!f.zero_gxx) {
                const double dxxu = (uxp - 2.0 * uc + uxm) * st.invdx2;
                drift += 0.5 * f.gxx(i, j) * dxxu;
            }
            if (!f.zero_gxv) {
                const double upp = (cp && i + 1 < nx) ? cp[i + 1] : 0.0;
                const double upm = (cp && i > 0) ? cp[i - 1] : 0.0;
                const double ump = (cm && i + 1 < nx) ? cm[i + 1] : 0.0;
                const double umm = (cm && i > 0) ? cm[i - 1] : 0.0;
                const double dxvu = (upp - upm - ump + umm) * st.inv4dxdv;
                drift += f.gxv(i, j) * dxvu;
            }
            if (!f.zero_gvv) {
                const double dvvu = (uvp - 2.0 * uc + uvm) * st.invdv2;
                drift += 0.5 * f.gvv(i, j) * dvvu;
            }

            double noise = 0.0;
            if (!f.zero_sig) noise += f.sig(i, j) * uc;
            if (!f.zero_sigx) noise += f.sigx(i, j) * dxu;
            if (!f.zero_sigv) noise += f.sigv(i, j) * dvu;

            const double next = uc + drift * dt + noise * dW;
            o[i] = next;
            maxabs = std::max(maxabs, std::abs(next));
        }
    }
    return maxabs;
}

Field euler_step(const CoefficientFields& fields, const Field& u, double dW,
                 double dt, const EulerStencils& stencils) {
    Field out(u.nx(), u.nv());
    euler_step_into(fields, u, out, dW, dt, stencils);
    return out;
}

std::vector<SolutionEnsemble> solve_euler(const EulerConfig& cfg,
                                          const CoefficientFields& fields,
                                          const GridSpec& grid, const Field& phi,
                                          const BrownianBatch& batch, double T) {
    if (phi.nx() != grid.x.n || phi.nv() != grid.v.n) {
        throw DimensionError("solve_euler: datum shape mismatch");
    }
    const std::size_t total_steps = batch.index_of(T);
    const std::size_t step_leb = batch.index_of(cfg.dt);
    if (step_leb == 0) throw ConfigError("solve_euler: dt must be at least dt_leb");
    if (total_steps % step_leb != 0) {
        throw ConfigError("solve_euler: T must be an integer multiple of dt");
    }

    std::vector<std::size_t> record_steps;
    if (cfg.record_times.empty()) {
        record_steps.push_back(total_steps);
    } else {
        for (double t : cfg.record_times) {
            const std::size_t k = batch.index_of(t);
            if (k == 0 || k > total_steps || k % step_leb != 0) {
                throw ConfigError("solve_euler: record time must be a positive multiple of dt");
            }
            record_steps.push_back(k);
        }
        std::sort(record_steps.begin(), record_steps.end());
        if (record_steps.back() != total_steps) record_steps.push_back(total_steps);
    }

    std::vector<SolutionEnsemble> out(record_steps.size());
    for (std::size_t r = 0; r < record_steps.size(); ++r) {
        out[r].grid = grid;
        out[r].t = static_cast<double>(record_steps[r]) * batch.dt_leb;
        out[r].seed = batch.seed;
        out[r].states.resize(batch.M);
        out[r].status.assign(batch.M, TrajectoryStatus::BlownUp);
        out[r].seconds.assign(batch.M, 0.0);
    }

    const EulerStencils st = EulerStencils::from_grid(grid);
    const std::size_t nsteps = total_steps / step_leb;
#ifdef _OPENMP
    const int nthreads = cfg.threads > 0 ? cfg.threads : omp_get_max_threads();
#else
    const int nthreads = 1;
#endif

#pragma omp parallel num_threads(nthreads)
    {
        Field cur(grid.x.n, grid.v.n), nxt(grid.x.n, grid.v.n);
#pragma omp for schedule(dynamic)
        for (std::int64_t mi = 0; mi < static_cast<std::int64_t>(batch.M); ++mi) {
            const auto m = static_cast<std::size_t>(mi);
            const auto start = Clock::now();
            std::copy(phi.data().begin(), phi.data().end(), cur.data().begin());
            const auto& path = batch.values[m];
            bool blown = false;
            std::size_t rec = 0;
            for (std::size_t k = 0; k < nsteps; ++k) {
                // increment over the step, an exact difference of Lebesgue
                // prefix sums so all methods consume the same paths
                const double dW = path[(k + 1) * step_leb] - path[k * step_leb];
                const double norm = euler_step_into(fields, cur, nxt, dW, cfg.dt, st);
                std::swap(cur, nxt);
                if (!std::isfinite(norm)) {
                    blown = true;
                    break;
                }
                const std::size_t done = (k + 1) * step_leb;
                while (rec < record_steps.size() && record_steps[rec] == done) {
                    out[rec].states[m] = vectorize(cur);
                    out[rec].status[m] = TrajectoryStatus::Ok;
                    ++rec;
                }
            }
            const double elapsed =
                std::chrono::duration<double>(Clock::now() - start).count();
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
