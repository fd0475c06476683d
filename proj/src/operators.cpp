#include "spde2d/operators.hpp"

#include <cmath>
#include <string>

namespace spde2d {

void CoefficientFields::refresh_zero_flags() {
    zero_h = h.all_zero();
    zero_fx = fx.all_zero();
    zero_fv = fv.all_zero();
    zero_gxx = gxx.all_zero();
    zero_gxv = gxv.all_zero();
    zero_gvv = gvv.all_zero();
    zero_sig = sig.all_zero();
    zero_sigx = sigx.all_zero();
    zero_sigv = sigv.all_zero();
}

CoefficientFamily CoefficientFamily::langevin_constant(double a, double sigma) {
    if (!(a > 0.0) || sigma < 0.0 || !(a - sigma * sigma > 0.0)) {
        throw ConfigError("langevin-constant requires a > 0 and a - sigma^2 > 0, got a=" +
                          std::to_string(a) + " sigma=" + std::to_string(sigma));
    }
    CoefficientEvaluators e;
    e.fx = [](double, double v) { return -v; };
    e.gvv = [a](double, double) { return a; };
    e.sigv = [sigma](double, double) { return sigma; };
    return CoefficientFamily(FamilyTag::LangevinConstant, a, sigma, std::move(e));
}

CoefficientFamily CoefficientFamily::langevin_variable(double a, double sigma) {
    if (!(a > 0.0) || sigma < 0.0 || !(a - sigma * sigma > 0.0)) {
        throw ConfigError("langevin-variable requires a > 0 and a - sigma^2 > 0, got a=" +
                          std::to_string(a) + " sigma=" + std::to_string(sigma));
    }
    CoefficientEvaluators e;
    e.fx = [](double, double v) { return -v; };
    e.gvv = [a](double x, double) { return a * (1.0 + 1.0 / (x * x + 1.0)); };
    e.sigv = [sigma](double x, double) { return sigma * std::sqrt(1.0 + 1.0 / (x * x + 1.0)); };
    return CoefficientFamily(FamilyTag::LangevinVariable, a, sigma, std::move(e));
}

CoefficientFamily CoefficientFamily::custom(CoefficientEvaluators evals) {
    return CoefficientFamily(FamilyTag::Custom, 0.0, 0.0, std::move(evals));
}

namespace {

Field sample_one(const CoefficientEvaluators::Fn& fn, const GridSpec& grid) {
    Field f(grid.x.n, grid.v.n);
    if (!fn) return f;
    for (std::size_t j = 0; j < grid.v.n; ++j) {
        const double vj = grid.v.node(j);
        for (std::size_t i = 0; i < grid.x.n; ++i) {
            f(i, j) = fn(grid.x.node(i), vj);
        }
    }
    return f;
}

} // namespace

CoefficientFields sample_coefficients(const CoefficientFamily& family, const GridSpec& grid) {
    const auto& e = family.evaluators();
    CoefficientFields f;
    f.h = sample_one(e.h, grid);
    f.fx = sample_one(e.fx, grid);
    f.fv = sample_one(e.fv, grid);
    f.gxx = sample_one(e.gxx, grid);
    f.gxv = sample_one(e.gxv, grid);
    f.gvv = sample_one(e.gvv, grid);
    f.sig = sample_one(e.sig, grid);
    f.sigx = sample_one(e.sigx, grid);
    f.sigv = sample_one(e.sigv, grid);
    f.refresh_zero_flags();

    if (family.tag() != FamilyTag::Custom) {
        for (std::size_t j = 0; j < grid.v.n; ++j) {
            for (std::size_t i = 0; i < grid.x.n; ++i) {
                const double s = f.sigv(i, j);
                if (!(f.gvv(i, j) - s * s > 0.0)) {
                    throw ConfigError("coefficient positivity violated: g^vv - (sigma^v)^2 <= 0 "
                                      "at node (" + std::to_string(i) + ", " + std::to_string(j) +
                                      ")");
                }
            }
        }
    }
    return f;
}

namespace {

void check_field_shapes(const CoefficientFields& f, const GridSpec& grid) {
    const Field* all[] = {&f.h, &f.fx, &f.fv, &f.gxx, &f.gxv, &f.gvv,
                          &f.sig, &f.sigx, &f.sigv};
    for (const Field* fld : all) {
        if (fld->nx() != grid.x.n || fld->nv() != grid.v.n) {
            throw DimensionError("coefficient field shape does not match the grid");
        }
    }
}

// diag(vec Z) * K realized as a row scaling of K.
SparseMatrix row_scaled(const Field& z, const SparseMatrix& k) {
    std::vector<std::size_t> rp(k.rows() + 1, 0);
    std::vector<std::int32_t> ci;
    std::vector<double> vals;
    ci.reserve(k.nnz());
    vals.reserve(k.nnz());
    const auto krp = k.row_ptr();
    const auto kci = k.col_idx();
    const auto kv = k.values();
    const auto zv = z.data();
    for (std::size_t r = 0; r < k.rows(); ++r) {
        const double s = zv[r];
        if (s != 0.0) {
            for (std::size_t e = krp[r]; e < krp[r + 1]; ++e) {
                const double v = s * kv[e];
                if (v != 0.0) {
                    ci.push_back(kci[e]);
                    vals.push_back(v);
                }
            }
        }
        rp[r + 1] = ci.size();
    }
    return SparseMatrix(k.rows(), k.cols(), std::move(rp), std::move(ci), std::move(vals));
}

} // namespace

SparseMatrix assemble_drift(const CoefficientFields& f, const GridSpec& grid) {
    check_field_shapes(f, grid);
    const std::size_t nx = grid.x.n;
    const std::size_t nv = grid.v.n;
    const SparseMatrix ix = SparseMatrix::identity(nx);
    const SparseMatrix iv = SparseMatrix::identity(nv);

    SparseMatrix b = SparseMatrix::zero(nx * nv, nx * nv);
    if (!f.zero_h) {
        b = sparse_add(b, diag_of(f.h.data()));
    }
    if (!f.zero_fx) {
        const SparseMatrix dx = tridiag(nx, -1.0, 0.0, 1.0, 1.0 / (2.0 * grid.x.delta));
        b = sparse_add(b, row_scaled(f.fx, kron(iv, dx)));
    }
    if (!f.zero_fv) {
        const SparseMatrix dv = tridiag(nv, -1.0, 0.0, 1.0, 1.0 / (2.0 * grid.v.delta));
        b = sparse_add(b, row_scaled(f.fv, kron(dv, ix)));
    }
    if (!f.zero_gxx) {
        const SparseMatrix dxx =
            tridiag(nx, 1.0, -2.0, 1.0, 1.0 / (grid.x.delta * grid.x.delta));
        b = sparse_add(b, sparse_scale(row_scaled(f.gxx, kron(iv, dxx)), 0.5));
    }
    if (!f.zero_gxv) {
        const SparseMatrix dx = tridiag(nx, -1.0, 0.0, 1.0, 1.0 / (2.0 * grid.x.delta));
        const SparseMatrix dv = tridiag(nv, -1.0, 0.0, 1.0, 1.0 / (2.0 * grid.v.delta));
        b = sparse_add(b, row_scaled(f.gxv, kron(dv, dx)));
    }
    if (!f.zero_gvv) {
        const SparseMatrix dvv =
            tridiag(nv, 1.0, -2.0, 1.0, 1.0 / (grid.v.delta * grid.v.delta));
        b = sparse_add(b, sparse_scale(row_scaled(f.gvv, kron(dvv, ix)), 0.5));
    }
    return b;
}

SparseMatrix assemble_diffusion(const CoefficientFields& f, const GridSpec& grid) {
    check_field_shapes(f, grid);
    const std::size_t nx = grid.x.n;
    const std::size_t nv = grid.v.n;

    SparseMatrix a = SparseMatrix::zero(nx * nv, nx * nv);
    if (!f.zero_sig) {
        a = sparse_add(a, diag_of(f.sig.data()));
    }
    if (!f.zero_sigx) {
        const SparseMatrix dx = tridiag(nx, -1.0, 0.0, 1.0, 1.0 / (2.0 * grid.x.delta));
        a = sparse_add(a, row_scaled(f.sigx, kron(SparseMatrix::identity(nv), dx)));
    }
    if (!f.zero_sigv) {
        const SparseMatrix dv = tridiag(nv, -1.0, 0.0, 1.0, 1.0 / (2.0 * grid.v.delta));
        a = sparse_add(a, row_scaled(f.sigv, kron(dv, SparseMatrix::identity(nx))));
    }
    return a;
}

CommutatorSet precompute_commutators(const SparseMatrix& a, const SparseMatrix& b, int order) {
    if (order < 1 || order > 3) {
        throw ConfigError("commutator order must be in {1, 2, 3}, got " + std::to_string(order));
    }
    CommutatorSet set;
    set.order = order;
    set.A = a;
    set.B = b;
    if (order >= 2) {
        set.A2 = spmm(a, a);
        set.BA = commutator(b, a);
    }
    if (order >= 3) {
        set.BAA = commutator(set.BA, a);
        set.BAB = commutator(set.BA, b);
    }
    return set;
}

} // namespace spde2d
