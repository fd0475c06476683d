#include "spde2d/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <string>

namespace spde2d {

namespace {

void check_same_shape(const SparseMatrix& a, const SparseMatrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(op) + ": shape mismatch " +
                             std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                             std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
}

} // namespace

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols,
                           std::vector<std::size_t> row_ptr,
                           std::vector<std::int32_t> col_idx,
                           std::vector<double> values)
    : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)), values_(std::move(values)) {}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<Triplet> entries) {
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    std::vector<std::size_t> rp(rows + 1, 0);
    std::vector<std::int32_t> ci;
    std::vector<double> vals;
    ci.reserve(entries.size());
    vals.reserve(entries.size());
    std::size_t i = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        while (i < entries.size() && entries[i].row == r) {
            std::size_t c = entries[i].col;
            if (c >= cols) throw DimensionError("from_triplets: column out of range");
            double v = entries[i].value;
            ++i;
            while (i < entries.size() && entries[i].row == r && entries[i].col == c) {
                v += entries[i].value;
                ++i;
            }
            if (v != 0.0) {
                ci.push_back(static_cast<std::int32_t>(c));
                vals.push_back(v);
            }
        }
        rp[r + 1] = ci.size();
    }
    if (i != entries.size()) throw DimensionError("from_triplets: row out of range");
    return SparseMatrix(rows, cols, std::move(rp), std::move(ci), std::move(vals));
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
    std::vector<std::size_t> rp(n + 1);
    std::vector<std::int32_t> ci(n);
    std::vector<double> vals(n, 1.0);
    for (std::size_t r = 0; r < n; ++r) {
        rp[r + 1] = r + 1;
        ci[r] = static_cast<std::int32_t>(r);
    }
    return SparseMatrix(n, n, std::move(rp), std::move(ci), std::move(vals));
}

SparseMatrix SparseMatrix::zero(std::size_t rows, std::size_t cols) {
    return SparseMatrix(rows, cols, std::vector<std::size_t>(rows + 1, 0), {}, {});
}

std::size_t SparseMatrix::nonzero_diagonals() const {
    if (rows_ == 0 && cols_ == 0) return 0;
    std::vector<char> seen(rows_ + cols_ - 1, 0);
    std::size_t count = 0;
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            // shift by rows-1 so the index is non-negative
            std::size_t dia = static_cast<std::size_t>(
                static_cast<std::int64_t>(col_idx_[k]) - static_cast<std::int64_t>(r) +
                static_cast<std::int64_t>(rows_) - 1);
            if (!seen[dia]) {
                seen[dia] = 1;
                ++count;
            }
        }
    }
    return count;
}

SparseMatrix tridiag(std::size_t n, double lo, double mid, double hi, double scale) {
    if (n == 0) throw ConfigError("tridiag: n must be positive");
    const double l = lo * scale;
    const double m = mid * scale;
    const double h = hi * scale;
    std::vector<std::size_t> rp(n + 1, 0);
    std::vector<std::int32_t> ci;
    std::vector<double> vals;
    ci.reserve(3 * n);
    vals.reserve(3 * n);
    for (std::size_t r = 0; r < n; ++r) {
        if (r > 0 && l != 0.0) {
            ci.push_back(static_cast<std::int32_t>(r - 1));
            vals.push_back(l);
        }
        if (m != 0.0) {
            ci.push_back(static_cast<std::int32_t>(r));
            vals.push_back(m);
        }
        if (r + 1 < n && h != 0.0) {
            ci.push_back(static_cast<std::int32_t>(r + 1));
            vals.push_back(h);
        }
        rp[r + 1] = ci.size();
    }
    return SparseMatrix(n, n, std::move(rp), std::move(ci), std::move(vals));
}

SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b) {
    const std::size_t rows = a.rows() * b.rows();
    const std::size_t cols = a.cols() * b.cols();
    if (a.rows() != 0 && rows / a.rows() != b.rows())
        throw DimensionError("kron: row dimension overflow");
    if (a.cols() != 0 && cols / a.cols() != b.cols())
        throw DimensionError("kron: column dimension overflow");
    if (cols > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max()))
        throw DimensionError("kron: column dimension exceeds index range");

    const auto arp = a.row_ptr();
    const auto aci = a.col_idx();
    const auto av = a.values();
    const auto brp = b.row_ptr();
    const auto bci = b.col_idx();
    const auto bv = b.values();

    std::vector<std::size_t> rp(rows + 1, 0);
    std::vector<std::int32_t> ci;
    std::vector<double> vals;
    ci.reserve(a.nnz() * b.nnz());
    vals.reserve(a.nnz() * b.nnz());

    for (std::size_t ia = 0; ia < a.rows(); ++ia) {
        for (std::size_t ib = 0; ib < b.rows(); ++ib) {
            const std::size_t r = ia * b.rows() + ib;
            for (std::size_t ka = arp[ia]; ka < arp[ia + 1]; ++ka) {
                const std::size_t cbase = static_cast<std::size_t>(aci[ka]) * b.cols();
                const double va = av[ka];
                for (std::size_t kb = brp[ib]; kb < brp[ib + 1]; ++kb) {
                    const double v = va * bv[kb];
                    if (v != 0.0) {
                        ci.push_back(static_cast<std::int32_t>(cbase + bci[kb]));
                        vals.push_back(v);
                    }
                }
            }
            rp[r + 1] = ci.size();
        }
    }
    return SparseMatrix(rows, cols, std::move(rp), std::move(ci), std::move(vals));
}

SparseMatrix diag_of(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> rp(n + 1, 0);
    std::vector<std::int32_t> ci;
    std::vector<double> vals;
    ci.reserve(n);
    vals.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        if (v[r] != 0.0) {
            ci.push_back(static_cast<std::int32_t>(r));
            vals.push_back(v[r]);
        }
        rp[r + 1] = ci.size();
    }
    return SparseMatrix(n, n, std::move(rp), std::move(ci), std::move(vals));
}

SparseMatrix spmm(const SparseMatrix& a, const SparseMatrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("spmm: inner dimensions disagree, " + std::to_string(a.cols()) +
                             " vs " + std::to_string(b.rows()));
    }
    const std::size_t rows = a.rows();
    const std::size_t cols = b.cols();
    const auto arp = a.row_ptr();
    const auto aci = a.col_idx();
    const auto av = a.values();
    const auto brp = b.row_ptr();
    const auto bci = b.col_idx();
    const auto bv = b.values();

    std::vector<double> acc(cols, 0.0);
    std::vector<char> mark(cols, 0);
    std::vector<std::int32_t> touched;

    std::vector<std::size_t> rp(rows + 1, 0);
    std::vector<std::int32_t> ci;
    std::vector<double> vals;

    for (std::size_t r = 0; r < rows; ++r) {
        touched.clear();
        for (std::size_t ka = arp[r]; ka < arp[r + 1]; ++ka) {
            const std::size_t k = static_cast<std::size_t>(aci[ka]);
            const double va = av[ka];
            for (std::size_t kb = brp[k]; kb < brp[k + 1]; ++kb) {
                const std::int32_t c = bci[kb];
                if (!mark[c]) {
                    mark[c] = 1;
                    acc[c] = 0.0;
                    touched.push_back(c);
                }
                acc[c] += va * bv[kb];
            }
        }
        std::sort(touched.begin(), touched.end());
        for (std::int32_t c : touched) {
            if (acc[c] != 0.0) {
                ci.push_back(c);
                vals.push_back(acc[c]);
            }
            mark[c] = 0;
        }
        rp[r + 1] = ci.size();
    }
    return SparseMatrix(rows, cols, std::move(rp), std::move(ci), std::move(vals));
}

void spmv(const SparseView& a, std::span<const double> x, std::span<double> y) {
    if (x.size() != a.cols || y.size() != a.rows) {
        throw DimensionError("spmv: vector length mismatch");
    }
    for (std::size_t r = 0; r < a.rows; ++r) {
        double s = 0.0;
        for (std::size_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) {
            s += a.values[k] * x[static_cast<std::size_t>(a.col_idx[k])];
        }
        y[r] = s;
    }
}

std::vector<double> spmv(const SparseMatrix& a, std::span<const double> x) {
    std::vector<double> y(a.rows());
    spmv(a.view(), x, y);
    return y;
}

SparseMatrix commutator(const SparseMatrix& a, const SparseMatrix& b) {
    if (a.rows() != a.cols() || b.rows() != b.cols()) {
        throw DimensionError("commutator: matrices must be square");
    }
    check_same_shape(a, b, "commutator");
    return sparse_sub(spmm(a, b), spmm(b, a));
}

double one_norm(const SparseView& m) {
    std::vector<double> colsum(m.cols, 0.0);
    for (std::size_t k = 0; k < m.values.size(); ++k) {
        colsum[static_cast<std::size_t>(m.col_idx[k])] += std::abs(m.values[k]);
    }
    double best = 0.0;
    for (double s : colsum) best = std::max(best, s);
    return best;
}

SparseMatrix sparse_scale(const SparseMatrix& a, double s) {
    std::vector<std::size_t> rp(a.rows() + 1, 0);
    std::vector<std::int32_t> ci;
    std::vector<double> vals;
    ci.reserve(a.nnz());
    vals.reserve(a.nnz());
    const auto arp = a.row_ptr();
    const auto aci = a.col_idx();
    const auto av = a.values();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t k = arp[r]; k < arp[r + 1]; ++k) {
            const double v = av[k] * s;
            if (v != 0.0) {
                ci.push_back(aci[k]);
                vals.push_back(v);
            }
        }
        rp[r + 1] = ci.size();
    }
    return SparseMatrix(a.rows(), a.cols(), std::move(rp), std::move(ci), std::move(vals));
}

namespace {

template <typename Combine>
SparseMatrix merge(const SparseMatrix& a, const SparseMatrix& b, Combine&& comb) {
    std::vector<std::size_t> rp(a.rows() + 1, 0);
    std::vector<std::int32_t> ci;
    std::vector<double> vals;
    ci.reserve(a.nnz() + b.nnz());
    vals.reserve(a.nnz() + b.nnz());
    const auto arp = a.row_ptr();
    const auto aci = a.col_idx();
    const auto av = a.values();
    const auto brp = b.row_ptr();
    const auto bci = b.col_idx();
    const auto bv = b.values();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        std::size_t ka = arp[r], kb = brp[r];
        const std::size_t ea = arp[r + 1], eb = brp[r + 1];
        while (ka < ea || kb < eb) {
            std::int32_t c;
            double v;
            if (kb >= eb || (ka < ea && aci[ka] < bci[kb])) {
                c = aci[ka];
                v = comb(av[ka], 0.0);
                ++ka;
            } else if (ka >= ea || bci[kb] < aci[ka]) {
                c = bci[kb];
                v = comb(0.0, bv[kb]);
                ++kb;
            } else {
                c = aci[ka];
                v = comb(av[ka], bv[kb]);
                ++ka;
                ++kb;
            }
            if (v != 0.0) {
                ci.push_back(c);
                vals.push_back(v);
            }
        }
        rp[r + 1] = ci.size();
    }
    return SparseMatrix(a.rows(), a.cols(), std::move(rp), std::move(ci), std::move(vals));
}

} // namespace

SparseMatrix sparse_add(const SparseMatrix& a, const SparseMatrix& b) {
    check_same_shape(a, b, "sparse_add");
    return merge(a, b, [](double x, double y) { return x + y; });
}

SparseMatrix sparse_sub(const SparseMatrix& a, const SparseMatrix& b) {
    check_same_shape(a, b, "sparse_sub");
    return merge(a, b, [](double x, double y) { return x - y; });
}

void write_triplets(const SparseMatrix& m, std::ostream& os) {
    const auto rp = m.row_ptr();
    const auto ci = m.col_idx();
    const auto vals = m.values();
    char buf[96];
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t k = rp[r]; k < rp[r + 1]; ++k) {
            std::snprintf(buf, sizeof buf, "%zu %d %.17g\n", r, ci[k], vals[k]);
            os << buf;
        }
    }
}

// ---------------------------------------------------------------------------
// expmv
// ---------------------------------------------------------------------------

namespace {

// Diagonal-major layout pays off when the pattern is a handful of full
// diagonals, which is what the assembled operators look like.
constexpr std::size_t kMaxDiaDiagonals = 64;

bool build_dia(const SparseView& m, ExpmvWorkspace& ws) {
    const std::size_t n = m.rows;
    std::vector<std::int64_t> offsets;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k) {
            const std::int64_t off =
                static_cast<std::int64_t>(m.col_idx[k]) - static_cast<std::int64_t>(r);
            offsets.push_back(off);
        }
    }
    std::sort(offsets.begin(), offsets.end());
    offsets.erase(std::unique(offsets.begin(), offsets.end()), offsets.end());
    if (offsets.size() > kMaxDiaDiagonals) return false;

    ws.dia_offset = offsets;
    ws.dia_begin.assign(offsets.size() + 1, 0);
    std::size_t total = 0;
    for (std::size_t d = 0; d < offsets.size(); ++d) {
        ws.dia_begin[d] = total;
        total += n - static_cast<std::size_t>(std::llabs(offsets[d]));
    }
    ws.dia_begin[offsets.size()] = total;
    ws.dia_values.assign(total, 0.0);

    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k) {
            const std::int64_t off =
                static_cast<std::int64_t>(m.col_idx[k]) - static_cast<std::int64_t>(r);
            const std::size_t d = static_cast<std::size_t>(
                std::lower_bound(offsets.begin(), offsets.end(), off) - offsets.begin());
            const std::size_t r0 = off < 0 ? static_cast<std::size_t>(-off) : 0;
            ws.dia_values[ws.dia_begin[d] + (r - r0)] = m.values[k];
        }
    }
    return true;
}

void dia_mv(const ExpmvWorkspace& ws, std::size_t n, const double* x, double* y) {
    std::fill(y, y + n, 0.0);
    for (std::size_t d = 0; d + 1 < ws.dia_begin.size(); ++d) {
        const std::int64_t off = ws.dia_offset[d];
        const std::size_t r0 = off < 0 ? static_cast<std::size_t>(-off) : 0;
        const std::size_t len = ws.dia_begin[d + 1] - ws.dia_begin[d];
        const double* v = ws.dia_values.data() + ws.dia_begin[d];
        const double* xs = x + static_cast<std::size_t>(static_cast<std::int64_t>(r0) + off);
        double* ys = y + r0;
        for (std::size_t i = 0; i < len; ++i) ys[i] += v[i] * xs[i];
    }
}

} // namespace

ExpmvReport expmv_into(const SparseView& m, std::span<const double> x,
                       std::vector<double>& y, double tol, double theta,
                       ExpmvWorkspace& ws) {
    if (m.rows != m.cols) throw DimensionError("expmv: matrix must be square");
    if (x.size() != m.cols) throw DimensionError("expmv: vector length mismatch");
    if (!(tol > 0.0)) throw ConfigError("expmv: tol must be positive");
    if (!(theta > 0.0)) throw ConfigError("expmv: theta must be positive");

    constexpr int kMaxTerms = 55;
    const std::size_t n = m.rows;
    const double norm = one_norm(m);
    const int segments = std::max(1, static_cast<int>(std::ceil(norm / theta)));

    ws.use_dia = build_dia(m, ws);
    ws.term.resize(n);
    ws.next.resize(n);
    ws.accum.resize(n);

    y.assign(x.begin(), x.end());
    ExpmvReport report;
    report.segments = segments;

    if (norm == 0.0 || n == 0) return report;

    for (int seg = 0; seg < segments; ++seg) {
        std::copy(y.begin(), y.end(), ws.term.begin());
        std::copy(y.begin(), y.end(), ws.accum.begin());
        double prev_tnorm = std::numeric_limits<double>::infinity();
        double last_ratio = std::numeric_limits<double>::infinity();
        bool converged = false;
        for (int k = 1; k <= kMaxTerms; ++k) {
            if (ws.use_dia) {
                dia_mv(ws, n, ws.term.data(), ws.next.data());
            } else {
                spmv(m, ws.term, ws.next);
            }
            const double inv = 1.0 / (static_cast<double>(segments) * k);
            double tnorm = 0.0, snorm = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double t = ws.next[i] * inv;
                ws.term[i] = t;
                const double s = ws.accum[i] + t;
                ws.accum[i] = s;
                tnorm = std::max(tnorm, std::abs(t));
                snorm = std::max(snorm, std::abs(s));
            }
            if (!std::isfinite(tnorm) || !std::isfinite(snorm)) {
                report.status = ExpmvStatus::Overflow;
                report.residual = std::numeric_limits<double>::infinity();
                return report;
            }
            report.max_terms = std::max(report.max_terms, k);
            const double gate = tol * snorm;
            last_ratio = snorm > 0.0 ? tnorm / snorm : 0.0;
            if (tnorm <= gate && prev_tnorm <= gate) {
                report.residual = std::max(report.residual, last_ratio);
                converged = true;
                break;
            }
            prev_tnorm = tnorm;
        }
        if (!converged) {
            report.status = ExpmvStatus::ToleranceNotReached;
            report.residual = last_ratio;
            return report;
        }
        std::swap(y, ws.accum);
    }
    for (double v : y) {
        if (!std::isfinite(v)) {
            report.status = ExpmvStatus::Overflow;
            report.residual = std::numeric_limits<double>::infinity();
            return report;
        }
    }
    return report;
}

std::vector<double> expmv(const SparseMatrix& m, std::span<const double> v,
                          double tol, double theta) {
    ExpmvWorkspace ws;
    std::vector<double> y;
    const ExpmvReport rep = expmv_into(m.view(), v, y, tol, theta, ws);
    if (rep.status == ExpmvStatus::Overflow) {
        throw ExpmvError(rep.status, rep.residual, "expmv: overflow (non-finite intermediate)");
    }
    if (rep.status == ExpmvStatus::ToleranceNotReached) {
        throw ExpmvError(rep.status, rep.residual,
                         "expmv: tolerance not reached within term budget, residual " +
                             std::to_string(rep.residual));
    }
    return y;
}

} // namespace spde2d
