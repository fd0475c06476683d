#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "spde2d/errors.hpp"

namespace spde2d {

struct Triplet {
    std::size_t row = 0;
    std::size_t col = 0;
    double value = 0.0;
};

/// Non-owning CSR view, the interface every kernel works against.
struct SparseView {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::span<const std::size_t> row_ptr;
    std::span<const std::int32_t> col_idx;
    std::span<const double> values;

    std::size_t nnz() const { return values.size(); }
};

/// Immutable sparse matrix over 64-bit floats in compressed sparse row
/// layout. Column indices are sorted and duplicate-free within each row;
/// exact zeros are pruned at construction time (no drop tolerance), so the
/// stored pattern is a deterministic function of the arithmetic that
/// produced the values.
class SparseMatrix {
public:
    SparseMatrix() = default;
    SparseMatrix(std::size_t rows, std::size_t cols,
                 std::vector<std::size_t> row_ptr,
                 std::vector<std::int32_t> col_idx,
                 std::vector<double> values);

    /// Builds from an unordered triplet list; duplicates are summed in
    /// (row, col) order and exact zeros pruned.
    static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                      std::vector<Triplet> entries);

    static SparseMatrix identity(std::size_t n);
    static SparseMatrix zero(std::size_t rows, std::size_t cols);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const { return values_.size(); }

    /// Number of diagonals (indexed by col - row) holding at least one
    /// stored entry.
    std::size_t nonzero_diagonals() const;

    std::span<const std::size_t> row_ptr() const { return row_ptr_; }
    std::span<const std::int32_t> col_idx() const { return col_idx_; }
    std::span<const double> values() const { return values_; }

    SparseView view() const {
        return SparseView{rows_, cols_, row_ptr_, col_idx_, values_};
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::int32_t> col_idx_;
    std::vector<double> values_;
};

/// n-by-n matrix with sub/main/super-diagonal (lo, mid, hi), all scaled.
SparseMatrix tridiag(std::size_t n, double lo, double mid, double hi, double scale);

/// Kronecker product; rejects results whose dimensions would overflow the
/// 32-bit column index space.
SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b);

/// Square diagonal matrix with v on the main diagonal.
SparseMatrix diag_of(std::span<const double> v);

/// Exact sparse product with exact-zero pruning.
SparseMatrix spmm(const SparseMatrix& a, const SparseMatrix& b);

/// y = A x. The span overload writes into caller storage.
void spmv(const SparseView& a, std::span<const double> x, std::span<double> y);
std::vector<double> spmv(const SparseMatrix& a, std::span<const double> x);

/// a*b - b*a for square matrices of equal size.
SparseMatrix commutator(const SparseMatrix& a, const SparseMatrix& b);

/// Induced 1-norm (maximum absolute column sum).
double one_norm(const SparseView& m);
inline double one_norm(const SparseMatrix& m) { return one_norm(m.view()); }

SparseMatrix sparse_scale(const SparseMatrix& a, double s);
SparseMatrix sparse_add(const SparseMatrix& a, const SparseMatrix& b);
SparseMatrix sparse_sub(const SparseMatrix& a, const SparseMatrix& b);

/// Plain-text triplet export: one "row col value" line per entry, 0-based,
/// sorted row-major.
void write_triplets(const SparseMatrix& m, std::ostream& os);

enum class ExpmvStatus {
    Ok,
    Overflow,            // non-finite intermediate: the action blew up
    ToleranceNotReached, // term budget exhausted before the stopping rule
};

struct ExpmvReport {
    ExpmvStatus status = ExpmvStatus::Ok;
    double residual = 0.0; // achieved last-term/result ratio
    int segments = 0;
    int max_terms = 0; // largest Taylor-term count over all segments
};

/// Scratch buffers reused across expmv calls; also caches the diagonal-major
/// kernel layout built per input matrix.
struct ExpmvWorkspace {
    std::vector<double> term;
    std::vector<double> next;
    std::vector<double> accum;
    // diagonal-major form: per diagonal offset, a contiguous value run
    std::vector<std::int64_t> dia_offset;
    std::vector<std::size_t> dia_begin; // into dia_values, size dia_offset.size()+1
    std::vector<double> dia_values;
    bool use_dia = false;
};

class ExpmvError : public std::runtime_error {
public:
    ExpmvError(ExpmvStatus status, double residual, const std::string& what)
        : std::runtime_error(what), status_(status), residual_(residual) {}
    ExpmvStatus status() const { return status_; }
    double residual() const { return residual_; }

private:
    ExpmvStatus status_;
    double residual_;
};

/// Computes y ~= exp(M) x without forming exp(M), by segmented truncated
/// Taylor series: the series for exp(M/s) is applied s times with
/// s = max(1, ceil(one_norm(M)/theta)). Within a segment, terms accumulate
/// until the last two term norms both drop below tol times the running
/// result norm, capped at 55 terms per segment.
ExpmvReport expmv_into(const SparseView& m, std::span<const double> x,
                       std::vector<double>& y, double tol, double theta,
                       ExpmvWorkspace& ws);

/// Throwing convenience wrapper around expmv_into.
std::vector<double> expmv(const SparseMatrix& m, std::span<const double> v,
                          double tol, double theta = 1.0);

} // namespace spde2d
