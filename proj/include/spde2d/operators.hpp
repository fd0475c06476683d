#pragma once

#include <functional>
#include <string>

#include "spde2d/grid.hpp"
#include "spde2d/sparse.hpp"

namespace spde2d {

/// Grid samples of the SPDE coefficients. Drift side: h, f^x, f^v, g^xx,
/// g^xv, g^vv; noise side: sigma, sigma^x, sigma^v. All nine share the grid
/// shape; identically-zero fields are flagged so assembly and stepping can
/// skip them.
struct CoefficientFields {
    Field h, fx, fv, gxx, gxv, gvv;
    Field sig, sigx, sigv;

    bool zero_h = true, zero_fx = true, zero_fv = true;
    bool zero_gxx = true, zero_gxv = true, zero_gvv = true;
    bool zero_sig = true, zero_sigx = true, zero_sigv = true;

    void refresh_zero_flags();
};

enum class FamilyTag { LangevinConstant, LangevinVariable, Custom };

/// Pointwise evaluators for a custom coefficient family.
struct CoefficientEvaluators {
    using Fn = std::function<double(double, double)>;
    Fn h, fx, fv, gxx, gxv, gvv, sig, sigx, sigv; // unset means identically zero
};

/// A named coefficient family. The two Langevin families are
///   constant: f^x = -v, g^vv = a, sigma^v = sigma, all others zero;
///   variable: g^vv = a(1 + 1/(x^2+1)), sigma^v = sigma sqrt(1 + 1/(x^2+1)),
///             f^x = -v, all others zero.
/// Both require a - sigma^2 > 0.
class CoefficientFamily {
public:
    static CoefficientFamily langevin_constant(double a, double sigma);
    static CoefficientFamily langevin_variable(double a, double sigma);
    static CoefficientFamily custom(CoefficientEvaluators evals);

    FamilyTag tag() const { return tag_; }
    double a() const { return a_; }
    double sigma() const { return sigma_; }
    const CoefficientEvaluators& evaluators() const { return evals_; }

private:
    CoefficientFamily(FamilyTag tag, double a, double sigma, CoefficientEvaluators evals)
        : tag_(tag), a_(a), sigma_(sigma), evals_(std::move(evals)) {}

    FamilyTag tag_;
    double a_ = 0.0;
    double sigma_ = 0.0;
    CoefficientEvaluators evals_;
};

/// Evaluates the family at the interior nodes. For the Langevin families the
/// entrywise positivity g^vv - (sigma^v)^2 > 0 is enforced.
CoefficientFields sample_coefficients(const CoefficientFamily& family, const GridSpec& grid);

/// Drift matrix of the vectorized system:
/// B = diag(vec H) + diag(vec F^x)(I x D^x) + diag(vec F^v)(D^v x I)
///   + 1/2 diag(vec G^xx)(I x D^xx) + diag(vec G^xv)(D^v x D^x)
///   + 1/2 diag(vec G^vv)(D^vv x I).
SparseMatrix assemble_drift(const CoefficientFields& fields, const GridSpec& grid);

/// Noise matrix of the vectorized system:
/// A = diag(vec S) + diag(vec S^x)(I x D^x) + diag(vec S^v)(D^v x I).
SparseMatrix assemble_diffusion(const CoefficientFields& fields, const GridSpec& grid);

/// The matrices the Magnus logarithm is built from, materialized once per
/// experiment and shared read-only across trajectories. Population depends
/// on the requested order: order 1 carries A and B only; order 2 adds A^2
/// and [B,A]; order 3 adds [[B,A],A] and [[B,A],B].
struct CommutatorSet {
    int order = 1;
    SparseMatrix A;
    SparseMatrix B;
    SparseMatrix A2;  // order >= 2
    SparseMatrix BA;  // [B,A], order >= 2
    SparseMatrix BAA; // [[B,A],A], order 3
    SparseMatrix BAB; // [[B,A],B], order 3
};

CommutatorSet precompute_commutators(const SparseMatrix& a, const SparseMatrix& b, int order);

} // namespace spde2d
