#pragma once

#include "sparsequad/compression.hpp"
#include "sparsequad/sparse_rule.hpp"

namespace sparsequad::lp {

/// minimize sum(y) subject to |(B y - c)_n| <= eps1 for every row n, y >= 0.
struct LpProblem {
    Matrix B;
    Vector c;
    double eps1 = 0.0;

    void validate() const;
};

enum class SimplexStatus { optimal, infeasible, unbounded, iteration_limit };

struct SimplexResult {
    SimplexStatus status = SimplexStatus::optimal;
    Vector x;                    // all structural + slack columns
    std::vector<Index> basis;    // basic column per row
    double objective = 0.0;
    long pivots = 0;
};

/// Two-phase dense revised simplex for min cost^T x s.t. A x = b, x >= 0.
///
/// Pricing and the ratio test both follow Bland's rule (lowest eligible
/// column, lowest basic index on ties), so the method terminates on
/// degenerate problems. The basis inverse is kept explicitly and refreshed
/// from an LU factorization every `refactor_every` pivots.
SimplexResult simplex(const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Vector>& b,
                      const Eigen::Ref<const Vector>& cost, long max_pivots = 1'000'000,
                      int refactor_every = 50);

struct LpSolution {
    Vector y;
    double objective = 0.0;
    long pivots = 0;
};

/// Solves the per-row tolerance LP in slack form (2R rows: upper and lower bound per row).
LpSolution solve_lp(const LpProblem& problem);

/// l1 baseline rule: basic optimal y of the LP above, extracted with prune_rel = 1e-12.
SparseRule solve_l1(const CompressedSystem& system, const FullRule& rule, double eps1);

}  // namespace sparsequad::lp
