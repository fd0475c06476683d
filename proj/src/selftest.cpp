#include <cmath>
#include <random>
#include <sstream>

#include "spde2d/experiment.hpp"

namespace spde2d {

namespace {

// Small dense helpers, independent of the sparse kernels they check.
using Dense = std::vector<std::vector<double>>;

Dense dense_zero(std::size_t r, std::size_t c) {
    return Dense(r, std::vector<double>(c, 0.0));
}

Dense to_dense(const SparseMatrix& m) {
    Dense d = dense_zero(m.rows(), m.cols());
    const auto rp = m.row_ptr();
    const auto ci = m.col_idx();
    const auto v = m.values();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t k = rp[r]; k < rp[r + 1]; ++k) {
            d[r][static_cast<std::size_t>(ci[k])] = v[k];
        }
    }
    return d;
}

Dense dense_mm(const Dense& a, const Dense& b) {
    Dense c = dense_zero(a.size(), b[0].size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t k = 0; k < b.size(); ++k) {
            const double av = a[i][k];
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < b[0].size(); ++j) c[i][j] += av * b[k][j];
        }
    }
    return c;
}

std::vector<double> dense_mv(const Dense& a, const std::vector<double>& x) {
    std::vector<double> y(a.size(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < x.size(); ++j) y[i] += a[i][j] * x[j];
    }
    return y;
}

double dense_norm_inf(const Dense& a) {
    double best = 0.0;
    for (const auto& row : a) {
        double s = 0.0;
        for (double v : row) s += std::abs(v);
        best = std::max(best, s);
    }
    return best;
}

// Scaling-and-squaring Taylor exponential, accurate to machine precision for
// the small matrices used here.
Dense dense_expm(Dense a) {
    const std::size_t n = a.size();
    int squarings = 0;
    double norm = dense_norm_inf(a);
    while (norm > 0.5) {
        for (auto& row : a)
            for (double& v : row) v *= 0.5;
        norm *= 0.5;
        ++squarings;
    }
    Dense result = dense_zero(n, n);
    for (std::size_t i = 0; i < n; ++i) result[i][i] = 1.0;
    Dense term = result;
    for (int k = 1; k <= 30; ++k) {
        term = dense_mm(term, a);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) term[i][j] /= k;
        double tmax = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                result[i][j] += term[i][j];
                tmax = std::max(tmax, std::abs(term[i][j]));
            }
        if (tmax < 1e-20) break;
    }
    for (int s = 0; s < squarings; ++s) result = dense_mm(result, result);
    return result;
}

SparseMatrix random_sparse(std::size_t n, double density, double scale, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, scale);
    std::vector<Triplet> trips;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            if (uni(rng) < density) trips.push_back({r, c, gauss(rng)});
        }
    }
    return SparseMatrix::from_triplets(n, n, std::move(trips));
}

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = gauss(rng);
    return v;
}

double rel_diff(std::span<const double> a, std::span<const double> b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num = std::max(num, std::abs(a[i] - b[i]));
        den = std::max(den, std::abs(b[i]));
    }
    return den > 0.0 ? num / den : num;
}

struct Check {
    std::vector<SelftestResult>* out;
    void operator()(const std::string& name, bool pass, const std::string& detail) const {
        out->push_back(SelftestResult{name, pass, detail});
    }
};

void check_grid(const Check& check) {
    std::mt19937_64 rng(101);
    Field u(5, 7);
    for (double& v : u.data()) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    const Field back = devectorize(vectorize(u), 5, 7);
    bool ok = true;
    for (std::size_t i = 0; i < u.size(); ++i) ok &= u.data()[i] == back.data()[i];
    const Grid1D g = build_grid(-4.0, 4.0, 3);
    ok &= g.delta == 2.0 && g.node(0) == -2.0 && g.node(1) == 0.0 && g.node(2) == 2.0;
    check("grid-roundtrip", ok, "vectorize/devectorize bijection and node placement");
}

void check_vec_kron(const Check& check) {
    std::mt19937_64 rng(102);
    double worst = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
        const SparseMatrix d1 = random_sparse(3, 1.0, 1.0, rng);
        const SparseMatrix d2 = random_sparse(3, 1.0, 1.0, rng);
        Field u(3, 3);
        for (double& v : u.data()) v = std::normal_distribution<double>()(rng);
        // lhs: vec(D1 U D2) via dense products
        const Dense dd1 = to_dense(d1), dd2 = to_dense(d2);
        Dense du = dense_zero(3, 3);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) du[i][j] = u(i, j);
        const Dense prod = dense_mm(dense_mm(dd1, du), dd2);
        Field lhs_f(3, 3);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) lhs_f(i, j) = prod[i][j];
        const auto lhs = vectorize(lhs_f);
        // rhs: (D2^T x D1) vec(U)
        std::vector<Triplet> tt;
        const Dense d2d = to_dense(d2);
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t c = 0; c < 3; ++c)
                if (d2d[c][r] != 0.0) tt.push_back({r, c, d2d[c][r]});
        const SparseMatrix d2t = SparseMatrix::from_triplets(3, 3, std::move(tt));
        const auto rhs = spmv(kron(d2t, d1), vectorize(u));
        worst = std::max(worst, rel_diff(lhs, rhs));
    }
    check("vec-kron-identity", worst <= 1e-13,
          "vec(D1 U D2) vs (D2' x D1) vec(U), max rel " + std::to_string(worst));
}

void check_commutator_algebra(const Check& check) {
    std::mt19937_64 rng(103);
    double worst = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
        const SparseMatrix a = random_sparse(8, 0.4, 1.0, rng);
        const SparseMatrix b = random_sparse(8, 0.4, 1.0, rng);
        const SparseMatrix c = random_sparse(8, 0.4, 1.0, rng);
        const SparseMatrix anti = sparse_add(commutator(a, b), commutator(b, a));
        for (double v : anti.values()) worst = std::max(worst, std::abs(v));
        const SparseMatrix jacobi = sparse_add(
            sparse_add(commutator(a, commutator(b, c)), commutator(b, commutator(c, a))),
            commutator(c, commutator(a, b)));
        for (double v : jacobi.values()) worst = std::max(worst, std::abs(v));
    }
    check("commutator-algebra", worst <= 1e-12,
          "antisymmetry and Jacobi identity, max residual " + std::to_string(worst));
}

void check_expmv(const Check& check) {
    std::mt19937_64 rng(104);
    double worst = 0.0, worst_semi = 0.0, worst_inv = 0.0;
    const double tol = 1e-10;
    for (int rep = 0; rep < 20; ++rep) {
        const SparseMatrix m = random_sparse(6, 0.5, 1.0, rng);
        const auto v = random_vec(6, rng);
        const auto fast = expmv(m, v, tol);
        const auto ref = dense_mv(dense_expm(to_dense(m)), v);
        worst = std::max(worst, rel_diff(fast, ref));

        const auto twice = expmv(m, expmv(m, v, tol), tol);
        const auto once = expmv(sparse_scale(m, 2.0), v, tol);
        worst_semi = std::max(worst_semi, rel_diff(twice, once));

        const auto round = expmv(sparse_scale(m, -1.0), expmv(m, v, tol), tol);
        worst_inv = std::max(worst_inv, rel_diff(round, v));
    }
    check("expmv-dense-oracle", worst <= 1e-10,
          "max rel error vs dense exponential " + std::to_string(worst));
    check("expmv-semigroup", worst_semi <= 10 * tol && worst_inv <= 10 * tol,
          "semigroup " + std::to_string(worst_semi) + ", inverse " + std::to_string(worst_inv));
}

void check_functionals(const Check& check) {
    // Injected ramp path W(s) = s on a fine grid.
    const double dt = 1e-4;
    const std::size_t n = 10000;
    std::vector<double> ramp(n + 1);
    for (std::size_t k = 0; k <= n; ++k) ramp[k] = static_cast<double>(k) * dt;
    PathSegment seg{&ramp, 0, n, dt};
    const ItoFunctionals f = lebesgue_functionals(seg);
    const bool ok = std::abs(f.IW - 0.5) <= 1e-4 && std::abs(f.IsW - 1.0 / 3.0) <= 1e-3 &&
                    std::abs(f.IW2 - 1.0 / 3.0) <= 1e-3 && f.W == 1.0;
    check("riemann-functionals", ok, "ramp-path Riemann sums against polynomial integrals");
}

void check_ito_identities(const Check& check) {
    const BrownianBatch batch = simulate_brownian(1.0, 1e-3, 8, 2024);
    double worst_a = 0.0, worst_b = 0.0;
    for (std::size_t m = 0; m < batch.M; ++m) {
        const PathSegment seg = window(batch, 0.0, 1.0, m);
        ItoExponents e;
        worst_a = std::max(worst_a,
                           std::abs(ito_identity_residual(ItoIdentity::A, e, seg)));
        worst_b = std::max(worst_b,
                           std::abs(ito_identity_residual(ItoIdentity::B, e, seg)));
    }
    check("ito-identity-base-cases", worst_a <= 1e-12 && worst_b <= 1e-3,
          "identity (a) p=q=0 exact, identity (b) Fubini residual " + std::to_string(worst_b));
}

void check_brownian_law(const Check& check) {
    const BrownianBatch batch = simulate_brownian(1.0, 1e-2, 4000, 7);
    const BrownianBatch again = simulate_brownian(1.0, 1e-2, 4000, 7);
    bool identical = true;
    for (std::size_t m = 0; m < 5; ++m) {
        identical &= batch.values[m] == again.values[m];
    }
    double var = 0.0;
    for (std::size_t m = 0; m < batch.M; ++m) {
        const double w = batch.values[m].back();
        var += w * w;
    }
    var /= static_cast<double>(batch.M);
    check("brownian-determinism-and-law", identical && std::abs(var - 1.0) <= 0.05,
          "bit-identical reseeding; sample Var(W_1) = " + std::to_string(var));
}

void check_scalar_exactness(const Check& check) {
    std::mt19937_64 rng(106);
    std::uniform_real_distribution<double> uni(-1.5, 1.5);
    double worst_log = 0.0, worst_exp = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const double b = uni(rng), a = uni(rng);
        const SparseMatrix bm = SparseMatrix::from_triplets(1, 1, {{0, 0, b}});
        const SparseMatrix am = SparseMatrix::from_triplets(1, 1, {{0, 0, a}});
        const CommutatorSet comms = precompute_commutators(am, bm, 3);
        const BrownianBatch batch = simulate_brownian(1.0, 1e-2, 1, 1000 + rep);
        const ItoFunctionals f = lebesgue_functionals(window(batch, 0.0, 1.0, 0));
        for (int order = 2; order <= 3; ++order) {
            const SparseMatrix y = magnus_log(order, comms, f);
            const double expected = b * f.h + a * f.W - 0.5 * (a * a) * f.h;
            const double got = y.nnz() > 0 ? y.values()[0] : 0.0;
            worst_log = std::max(worst_log,
                                 std::abs(got - expected) / std::max(1.0, std::abs(expected)));
            const std::vector<double> one{1.0};
            const double stepped = expmv(y, one, 1e-13)[0];
            worst_exp = std::max(worst_exp, std::abs(stepped - std::exp(expected)) /
                                                std::abs(std::exp(expected)));
        }
    }
    check("scalar-exactness", worst_log <= 1e-14 && worst_exp <= 1e-12,
          "orders 2/3 reduce to the scalar geometric-Brownian logarithm");
}

void check_formula_freeze(const Check& check) {
    // The logarithm must equal the independently recombined sum of its six
    // ingredient matrices with the frozen scalar weights.
    std::mt19937_64 rng(107);
    const SparseMatrix a = random_sparse(6, 0.5, 0.8, rng);
    const SparseMatrix b = random_sparse(6, 0.5, 0.8, rng);
    const CommutatorSet comms = precompute_commutators(a, b, 3);
    ItoFunctionals f;
    f.h = 0.37;
    f.W = -0.81;
    f.IW = 0.12;
    f.IsW = -0.05;
    f.IW2 = 0.21;
    const SparseMatrix y = magnus_log(3, comms, f);
    const auto x = random_vec(6, rng);
    const auto got = spmv(y, x);

    const double cB = f.h;
    const double cA = f.W;
    const double cA2 = -0.5 * f.h;
    const double cBA = f.IW - 0.5 * f.h * f.W;
    const double cBAA = 0.5 * f.IW2 - 0.5 * f.W * f.IW + f.h * f.W * f.W / 12.0;
    const double cBAB = f.IsW - 0.5 * f.h * f.IW - f.h * f.h * f.W / 12.0;
    std::vector<double> want(6, 0.0);
    auto axpy = [&](double c, const SparseMatrix& m) {
        const auto y2 = spmv(m, x);
        for (std::size_t i = 0; i < want.size(); ++i) want[i] += c * y2[i];
    };
    axpy(cB, comms.B);
    axpy(cA, comms.A);
    axpy(cA2, comms.A2);
    axpy(cBA, comms.BA);
    axpy(cBAA, comms.BAA);
    axpy(cBAB, comms.BAB);
    const double diff = rel_diff(got, want);
    check("order3-weights-frozen", diff <= 1e-13,
          "logarithm equals the recombined weighted sum, rel " + std::to_string(diff));
}

void check_noise_only_exactness(const Check& check) {
    // Drift-free system: the order-2 logarithm is the whole series, so the
    // propagator must match the dense exponential of (A W - A^2 t / 2).
    const GridSpec grid{build_grid(-4, 4, 8), build_grid(-4, 4, 8)};
    CoefficientEvaluators evals;
    evals.sigv = [](double, double) { return 0.31622776601683794; };
    const CoefficientFields fields = sample_coefficients(CoefficientFamily::custom(evals), grid);
    const SparseMatrix a = assemble_diffusion(fields, grid);
    const SparseMatrix b = assemble_drift(fields, grid); // zero
    const CommutatorSet comms = precompute_commutators(a, b, 2);
    const BrownianBatch batch = simulate_brownian(0.25, 1e-3, 1, 99);
    const ItoFunctionals f = lebesgue_functionals(window(batch, 0.0, 0.25, 0));
    const auto phi = vectorize(gaussian_datum(grid));

    const SparseMatrix y = magnus_log(2, comms, f);
    const auto via_log = expmv(y, phi, 1e-12);
    Dense closed = to_dense(sparse_add(sparse_scale(a, f.W),
                                       sparse_scale(comms.A2, -0.5 * f.h)));
    const auto exact = dense_mv(dense_expm(closed), phi);
    const double diff = rel_diff(via_log, exact);
    check("noise-only-exactness", diff <= 1e-10,
          "order 2 equals the closed noise-only propagator, rel " + std::to_string(diff));
}

void check_deterministic_windows(const Check& check) {
    const GridSpec grid{build_grid(-4, 4, 30), build_grid(-4, 4, 30)};
    const CoefficientFields fields =
        sample_coefficients(CoefficientFamily::langevin_constant(1.1, 0.0), grid);
    const SparseMatrix a = assemble_diffusion(fields, grid);
    const SparseMatrix b = assemble_drift(fields, grid);
    const CommutatorSet comms = precompute_commutators(a, b, 1);
    const BrownianBatch batch = simulate_brownian(0.5, 1e-3, 1, 5);
    const auto phi = vectorize(gaussian_datum(grid));
    MagnusConfig one;
    one.order = 1;
    one.dt = 0.5;
    MagnusConfig many = one;
    many.dt = 0.1;
    const auto u1 = solve_iterated_magnus(one, comms, phi, batch, 0.5, grid);
    const auto u5 = solve_iterated_magnus(many, comms, phi, batch, 0.5, grid);
    const double diff = rel_diff(u1.back().states[0], u5.back().states[0]);
    check("deterministic-window-invariance", diff <= 1e-8,
          "noise-free order 1: 1 window vs 5 windows, rel " + std::to_string(diff));
}

void check_analysis_norms(const Check& check) {
    const CentralRegion r = central_region(300, 4);
    bool ok = r.lo == 139 && r.hi == 158 && r.size() == 20;
    const CentralRegion full = central_region(4, 0);
    ok &= full.lo == 0 && full.hi == 3;
    bool thrown = false;
    try {
        central_region(2, 3);
    } catch (const ConfigError&) {
        thrown = true;
    }
    ok &= thrown;

    GridSpec grid{build_grid(-1, 1, 4), build_grid(-1, 1, 4)};
    SolutionEnsemble ref;
    ref.grid = grid;
    ref.t = 1.0;
    ref.seed = 3;
    ref.states = {std::vector<double>(16, 2.0), std::vector<double>(16, 2.0)};
    ref.status = {TrajectoryStatus::Ok, TrajectoryStatus::Ok};
    ref.seconds = {0, 0};
    SolutionEnsemble app = ref;
    for (double& v : app.states[0]) v += 0.5;
    for (double& v : app.states[1]) v -= 0.5;
    const CentralRegion whole = central_region(4, 0);
    const MeanAbsError me = mean_abs_error(ref, app, whole);
    ok &= std::abs(avg_mean_abs_error(me.me) - 0.5) <= 1e-15;
    SolutionEnsemble scaled = ref;
    for (double& v : scaled.states[0]) v *= 1.25;
    for (double& v : scaled.states[1]) v *= 1.25;
    const RelError rel = mean_rel_error(ref, scaled, whole);
    ok &= std::abs(rel.err - 0.25) <= 1e-12;
    check("error-norms", ok, "region indices, ME offsets and Err homogeneity");
}

} // namespace

std::vector<SelftestResult> run_selftest() {
    std::vector<SelftestResult> results;
    const Check check{&results};
    check_grid(check);
    check_vec_kron(check);
    check_commutator_algebra(check);
    check_expmv(check);
    check_functionals(check);
    check_ito_identities(check);
    check_brownian_law(check);
    check_scalar_exactness(check);
    check_formula_freeze(check);
    check_noise_only_exactness(check);
    check_deterministic_windows(check);
    check_analysis_norms(check);
    return results;
}

} // namespace spde2d
