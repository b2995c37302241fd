#pragma once

#include "sparsequad/compression.hpp"
#include "sparsequad/sparse_rule.hpp"

#include <functional>

namespace sparsequad::focuss {

/// Settings for the regularized FOCUSS iteration. The iteration reweights by
/// W = diag(y^q), which corresponds to minimizing the l^p quasi-norm with
/// p = 2(1 - q); 0.5 < q < 1 keeps 0 < p < 1.
struct FocussConfig {
    double q = 0.75;
    double eps1 = 0.0;  // target l2 residual ||B y - c||_2
    int max_iters = 300;
    double conv_tol = 1e-9;
    double prune_rel = 1e-10;
    double svd_cutoff = 1e-14;
    bool reduce_support = true;  // drop dependent support columns after the iteration
    double support_rank_tol = 1e-12;

    double p() const { return 2.0 * (1.0 - q); }
    void validate() const;
};

/// Thin SVD M = U diag(sigma) V^T with singular values below
/// svd_cutoff * sigma_1 discarded (rank r = sigma.size()).
struct SvdFactors {
    Matrix U;      // rows(M) x r
    Vector sigma;  // r, descending, > 0
    Matrix V;      // cols(M) x r
};

SvdFactors factorize(const Eigen::Ref<const Matrix>& m, double svd_cutoff);

/// ||c - M x(lambda)||_2 for the Tikhonov solution x(lambda) of M x = c:
/// sqrt(sum_n (lambda / (sigma_n^2 + lambda) <u_n, c>)^2 + ||c_perp||^2), where
/// c_perp is the part of c outside the column span of M. lambda may be +inf.
double residual_norm_for_lambda(const SvdFactors& svd, const Eigen::Ref<const Vector>& c, double lambda);

struct LambdaCalibration {
    double lambda = 0.0;
    double residual = 0.0;       // predicted residual at lambda
    bool saturated = false;      // even lambda = 0 leaves a residual above eps1
    bool constraints_dropped = false;  // eps1 >= ||c||: lambda pinned at the bracket top
};

/// Bracket used by calibrate_lambda, in units of sigma_1^2.
inline constexpr double kLambdaBracketLow = 1e-16;
inline constexpr double kLambdaBracketHigh = 1e6;

/// Finds lambda >= 0 with residual_norm_for_lambda(lambda) == eps1, to
/// 1e-10 * max(eps1, ||c||), approaching from below (the returned residual
/// never exceeds eps1 unless saturated).
LambdaCalibration calibrate_lambda(const SvdFactors& svd, const Eigen::Ref<const Vector>& c, double eps1);

/// One regularized FOCUSS update:
/// y_next = W sum_n sigma_n / (sigma_n^2 + lambda) <u_n, c> v_n with (u, sigma, v)
/// the SVD of B W and W = diag(y^q). Zero entries of y stay exactly zero.
Vector regularized_step(const Eigen::Ref<const Matrix>& B, const Eigen::Ref<const Vector>& c,
                        const Eigen::Ref<const Vector>& y, double q, double lambda,
                        double svd_cutoff = 1e-14);

/// Same update given the factors of B W and the diagonal of W.
Vector regularized_step(const SvdFactors& svd_of_bw, const Eigen::Ref<const Vector>& w_diag,
                        const Eigen::Ref<const Vector>& c, double lambda);

struct Relaxation {
    Vector y;
    double alpha = 1.0;
    bool stagnated = false;  // alpha == 0: no admissible step toward y_new
};

/// alpha * y_new + (1 - alpha) * y_prev with the largest alpha in (0, 1] that
/// keeps every entry non-negative. Entries that pin alpha land exactly on 0.
Relaxation enforce_nonnegativity(const Eigen::Ref<const Vector>& y_new, const Eigen::Ref<const Vector>& y_prev);

/// While the columns of B on the support of y are linearly dependent, moves y
/// along a null direction of those columns until a weight reaches zero. B y is
/// unchanged by each move up to rounding; of the two segment endpoints the one
/// with the smaller sum y_i^p is taken (the objective is concave on the segment).
/// A move that would push ||B y - c|| above residual_limit is not taken.
/// rank_tol is relative to the largest singular value of the support columns.
Vector reduce_support(const Eigen::Ref<const Matrix>& B, const Eigen::Ref<const Vector>& c,
                      const Eigen::Ref<const Vector>& y, double p, double rank_tol, double residual_limit);

struct IterationRecord {
    int iteration = 0;
    const Vector* y = nullptr;  // relaxed iterate
    double lambda = 0.0;
    double alpha = 1.0;
    double residual = 0.0;      // ||B y - c||_2, computed directly
    double relative_change = 0.0;
    bool saturated = false;
};

using IterationObserver = std::function<void(const IterationRecord&)>;

/// Runs the iteration from y_0 = system.full_weights, then prunes and extracts
/// the rule. `rule` supplies node coordinates and must match the column count.
SparseRule solve(const CompressedSystem& system, const FullRule& rule, const FocussConfig& config,
                 const IterationObserver& observer = {});

}  // namespace sparsequad::focuss
