#include <doctest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "spde2d/sparse.hpp"

using namespace spde2d;

namespace {

double dense_entry(const SparseMatrix& m, std::size_t r, std::size_t c) {
    const auto rp = m.row_ptr();
    const auto ci = m.col_idx();
    const auto v = m.values();
    for (std::size_t k = rp[r]; k < rp[r + 1]; ++k) {
        if (static_cast<std::size_t>(ci[k]) == c) return v[k];
    }
    return 0.0;
}

} // namespace

TEST_CASE("tridiag builds the difference stencils") {
    // first-derivative stencil at unit spacing, scale 1/2
    const SparseMatrix dx = tridiag(3, -1.0, 0.0, 1.0, 0.5);
    CHECK(dense_entry(dx, 0, 1) == 0.5);
    CHECK(dense_entry(dx, 1, 0) == -0.5);
    CHECK(dense_entry(dx, 1, 2) == 0.5);
    CHECK(dense_entry(dx, 2, 1) == -0.5);
    CHECK(dense_entry(dx, 1, 1) == 0.0);
    CHECK(dx.nnz() == 4);

    const SparseMatrix dxx = tridiag(2, 1.0, -2.0, 1.0, 1.0);
    CHECK(dense_entry(dxx, 0, 0) == -2.0);
    CHECK(dense_entry(dxx, 0, 1) == 1.0);
    CHECK(dense_entry(dxx, 1, 0) == 1.0);
    CHECK(dense_entry(dxx, 1, 1) == -2.0);

    for (std::size_t n : {2, 5, 17}) {
        CHECK(tridiag(n, -1.0, 0.0, 1.0, 3.25).nonzero_diagonals() == 2);
    }
    CHECK_THROWS_AS(tridiag(0, 1, 1, 1, 1), ConfigError);
}

TEST_CASE("kron matches the dense definition") {
    std::mt19937_64 rng(21);
    const SparseMatrix m = oracle::random_sparse(3, 0.7, 1.0, rng);
    const SparseMatrix i2 = SparseMatrix::identity(2);
    const SparseMatrix block = kron(i2, m);
    CHECK(block.rows() == 6);
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(dense_entry(block, r, c) == dense_entry(m, r, c));
            CHECK(dense_entry(block, r + 3, c + 3) == dense_entry(m, r, c));
            CHECK(dense_entry(block, r, c + 3) == 0.0);
        }
    }

    for (int rep = 0; rep < 5; ++rep) {
        const SparseMatrix a = oracle::random_sparse(3, 0.6, 1.0, rng);
        const SparseMatrix b = oracle::random_sparse(3, 0.6, 1.0, rng);
        const SparseMatrix k = kron(a, b);
        const oracle::Dense want = oracle::kron(oracle::to_dense(a), oracle::to_dense(b));
        for (std::size_t r = 0; r < 9; ++r)
            for (std::size_t c = 0; c < 9; ++c)
                CHECK(dense_entry(k, r, c) == doctest::Approx(want[r][c]).epsilon(1e-15));
        CHECK(k.nnz() == a.nnz() * b.nnz());
    }
}

TEST_CASE("diag_of realizes elementwise products") {
    const std::vector<double> d{1.0, 2.0, 3.0};
    const SparseMatrix m = diag_of(d);
    CHECK(m.nnz() == 3);
    CHECK(dense_entry(m, 1, 1) == 2.0);

    std::mt19937_64 rng(22);
    Field f(3, 4), u(3, 4);
    for (double& x : f.data()) x = std::normal_distribution<double>()(rng);
    for (double& x : u.data()) x = std::normal_distribution<double>()(rng);
    const auto got = spmv(diag_of(vectorize(f)), vectorize(u));
    std::vector<double> want(12);
    for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t i = 0; i < 3; ++i) want[j * 3 + i] = f(i, j) * u(i, j);
    CHECK(oracle::max_rel_diff(got, want) == 0.0);

    const std::vector<double> ones(7, 1.0);
    std::vector<double> v(7);
    for (double& x : v) x = std::normal_distribution<double>()(rng);
    CHECK(spmv(diag_of(ones), v) == v);
}

TEST_CASE("spmm matches the dense product") {
    std::mt19937_64 rng(23);
    for (int rep = 0; rep < 8; ++rep) {
        const SparseMatrix a = oracle::random_sparse(6, 0.5, 1.0, rng);
        const SparseMatrix b = oracle::random_sparse(6, 0.5, 1.0, rng);
        const SparseMatrix c = spmm(a, b);
        const oracle::Dense want = oracle::mm(oracle::to_dense(a), oracle::to_dense(b));
        for (std::size_t r = 0; r < 6; ++r)
            for (std::size_t col = 0; col < 6; ++col)
                CHECK(dense_entry(c, r, col) ==
                      doctest::Approx(want[r][col]).epsilon(1e-13));
    }
    const SparseMatrix a = oracle::random_sparse(5, 0.6, 1.0, rng);
    const SparseMatrix same = spmm(a, SparseMatrix::identity(5));
    CHECK(same.nnz() == a.nnz());
    for (std::size_t r = 0; r < 5; ++r)
        for (std::size_t c = 0; c < 5; ++c)
            CHECK(dense_entry(same, r, c) == dense_entry(a, r, c));

    // composed first-derivative stencils against the dense composition
    const SparseMatrix dx = tridiag(5, -1.0, 0.0, 1.0, 0.5);
    const SparseMatrix dx2 = spmm(dx, dx);
    const oracle::Dense want = oracle::mm(oracle::to_dense(dx), oracle::to_dense(dx));
    for (std::size_t r = 0; r < 5; ++r)
        for (std::size_t c = 0; c < 5; ++c)
            CHECK(dense_entry(dx2, r, c) == doctest::Approx(want[r][c]).epsilon(1e-15));

    CHECK_THROWS_AS(spmm(oracle::random_sparse(3, 1, 1, rng), SparseMatrix::identity(4)),
                    DimensionError);
}

TEST_CASE("spmv basics and dense oracle") {
    std::mt19937_64 rng(24);
    std::vector<double> v = oracle::random_vec(8, rng);
    CHECK(spmv(SparseMatrix::identity(8), v) == v);
    CHECK(spmv(SparseMatrix::zero(8, 8), v) == std::vector<double>(8, 0.0));

    const SparseMatrix m = oracle::random_sparse(8, 0.4, 1.0, rng);
    const auto got = spmv(m, v);
    const auto want = oracle::mv(oracle::to_dense(m), v);
    CHECK(oracle::max_rel_diff(got, want) <= 1e-14);
}

TEST_CASE("commutator algebra") {
    std::mt19937_64 rng(25);
    const SparseMatrix a = oracle::random_sparse(7, 0.5, 1.0, rng);
    CHECK(commutator(a, a).nnz() == 0);
    CHECK(commutator(SparseMatrix::identity(7), a).nnz() == 0);

    for (int rep = 0; rep < 5; ++rep) {
        const SparseMatrix x = oracle::random_sparse(9, 0.4, 1.0, rng);
        const SparseMatrix y = oracle::random_sparse(9, 0.4, 1.0, rng);
        const SparseMatrix z = oracle::random_sparse(9, 0.4, 1.0, rng);
        // antisymmetry, exactly
        const SparseMatrix anti = sparse_add(commutator(x, y), commutator(y, x));
        for (double val : anti.values()) CHECK(val == 0.0);
        // Jacobi identity against zero, dense-oracle tolerance
        const SparseMatrix jac = sparse_add(
            sparse_add(commutator(x, commutator(y, z)), commutator(y, commutator(z, x))),
            commutator(z, commutator(x, y)));
        for (double val : jac.values()) CHECK(std::abs(val) <= 1e-12);
    }
}

TEST_CASE("one_norm equals the max absolute column sum") {
    CHECK(one_norm(SparseMatrix::identity(9)) == 1.0);
    const std::vector<double> d{1.0, -3.0, 2.0};
    CHECK(one_norm(diag_of(d)) == 3.0);

    std::mt19937_64 rng(26);
    const SparseMatrix m = oracle::random_sparse(10, 0.4, 2.0, rng);
    const oracle::Dense dm = oracle::to_dense(m);
    double want = 0.0;
    for (std::size_t c = 0; c < 10; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < 10; ++r) s += std::abs(dm[r][c]);
        want = std::max(want, s);
    }
    CHECK(one_norm(m) == doctest::Approx(want).epsilon(1e-15));
}

TEST_CASE("expmv matches a dense exponential") {
    std::mt19937_64 rng(27);
    const std::vector<double> v = oracle::random_vec(6, rng);
    CHECK(expmv(SparseMatrix::zero(6, 6), v, 1e-12) == v);

    const SparseMatrix half = sparse_scale(SparseMatrix::identity(6), std::log(2.0));
    const auto doubled = expmv(half, v, 1e-12);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(doubled[i] == doctest::Approx(2.0 * v[i]).epsilon(1e-11));
    }

    double worst = 0.0;
    for (int rep = 0; rep < 30; ++rep) {
        const SparseMatrix m = oracle::random_sparse(6, 0.5, 1.0, rng);
        const auto x = oracle::random_vec(6, rng);
        const auto got = expmv(m, x, 1e-10);
        const auto want = oracle::mv(oracle::expm(oracle::to_dense(m)), x);
        worst = std::max(worst, oracle::max_rel_diff(got, want));
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("expmv semigroup and inverse properties") {
    std::mt19937_64 rng(28);
    const double tol = 1e-10;
    for (int rep = 0; rep < 5; ++rep) {
        const SparseMatrix m = oracle::random_sparse(12, 0.3, 0.8, rng);
        const auto v = oracle::random_vec(12, rng);
        const auto twice = expmv(m, expmv(m, v, tol), tol);
        const auto once = expmv(sparse_scale(m, 2.0), v, tol);
        CHECK(oracle::max_rel_diff(twice, once) <= 10 * tol);
        const auto back = expmv(sparse_scale(m, -1.0), expmv(m, v, tol), tol);
        CHECK(oracle::max_rel_diff(back, v) <= 10 * tol);
    }
}

TEST_CASE("expmv flags overflow") {
    // A positive diagonal blowing far past the double range overflows the
    // segmented series deterministically.
    const SparseMatrix hot = sparse_scale(SparseMatrix::identity(4), 2000.0);
    const std::vector<double> v(4, 1.0);
    ExpmvWorkspace ws;
    std::vector<double> y;
    const ExpmvReport rep = expmv_into(hot.view(), v, y, 1e-10, 1.0, ws);
    CHECK(rep.status == ExpmvStatus::Overflow);
    CHECK_THROWS_AS((void)expmv(hot, v, 1e-10), ExpmvError);
}

TEST_CASE("triplet export is sorted row-major") {
    std::vector<Triplet> trips{{1, 0, 3.5}, {0, 1, -2.0}, {0, 0, 1.0}};
    const SparseMatrix m = SparseMatrix::from_triplets(2, 2, std::move(trips));
    std::ostringstream os;
    write_triplets(m, os);
    CHECK(os.str() == "0 0 1\n0 1 -2\n1 0 3.5\n");
}

TEST_CASE("from_triplets sums duplicates and prunes zeros") {
    std::vector<Triplet> trips{{0, 0, 1.0}, {0, 0, -1.0}, {1, 1, 2.0}};
    const SparseMatrix m = SparseMatrix::from_triplets(2, 2, std::move(trips));
    CHECK(m.nnz() == 1);
    CHECK(dense_entry(m, 1, 1) == 2.0);
}
