#include "sparsequad/lp_baseline.hpp"

#include "sparsequad/errors.hpp"

#include <Eigen/LU>

#include <cmath>
#include <sstream>

namespace sparsequad::lp {

void LpProblem::validate() const {
    if (B.rows() != c.size()) throw ValidationError("lp: B and c disagree on the row count");
    if (B.cols() < 1) throw ValidationError("lp: no variables");
    if (!(eps1 >= 0.0) || !std::isfinite(eps1)) throw ValidationError("lp: eps1 must be finite and >= 0");
    if (!B.allFinite() || !c.allFinite()) throw NumericalError("lp: non-finite problem data");
}

namespace {

constexpr double kReducedCostTol = 1e-9;
constexpr double kPivotTol = 1e-9;

class RevisedSimplex {
public:
    RevisedSimplex(Matrix A, Vector b, std::vector<Index> basis, long max_pivots, int refactor_every)
        : A_(std::move(A)), b_(std::move(b)), basis_(std::move(basis)),
          is_basic_(A_.cols(), false), max_pivots_(max_pivots), refactor_every_(refactor_every) {
        for (Index j : basis_) is_basic_[j] = true;
        refactor();
    }

    // Runs until optimal/unbounded/limit for the given costs. Columns with
    // allowed[j] == false never enter the basis.
    SimplexStatus run(const Vector& cost, const std::vector<bool>& allowed) {
        const Index m = A_.rows();
        while (true) {
            if (since_refactor_ >= refactor_every_) refactor();
            if (pivots_ >= max_pivots_) return SimplexStatus::iteration_limit;

            Vector cb(m);
            for (Index i = 0; i < m; ++i) cb[i] = cost[basis_[i]];
            const Vector pi = binv_.transpose() * cb;

            Index enter = -1;
            for (Index j = 0; j < A_.cols(); ++j) {
                if (is_basic_[j] || !allowed[j]) continue;
                if (cost[j] - pi.dot(A_.col(j)) < -kReducedCostTol) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0) return SimplexStatus::optimal;

            const Vector u = binv_ * A_.col(enter);
            Index leave = -1;
            double best = 0.0;
            for (Index i = 0; i < m; ++i) {
                if (u[i] <= kPivotTol) continue;
                const double ratio = xb_[i] / u[i];
                const double slack = 1e-12 * (1.0 + std::abs(best));
                if (leave < 0 || ratio < best - slack) {
                    best = ratio;
                    leave = i;
                } else if (ratio <= best + slack && basis_[i] < basis_[leave]) {
                    leave = i;
                }
            }
            if (leave < 0) return SimplexStatus::unbounded;
            pivot(enter, leave, u);
        }
    }

    // Pivots basic artificial columns (index >= first_artificial) out where
    // the row still has a usable structural entry.
    void drive_out(Index first_artificial) {
        for (Index r = 0; r < A_.rows(); ++r) {
            if (basis_[r] < first_artificial) continue;
            const Eigen::RowVectorXd row = binv_.row(r) * A_.leftCols(first_artificial);
            for (Index j = 0; j < first_artificial; ++j) {
                if (is_basic_[j] || std::abs(row[j]) <= kPivotTol) continue;
                pivot(j, r, binv_ * A_.col(j));
                break;
            }
        }
    }

    void refactor() {
        const Index m = A_.rows();
        Matrix basis_matrix(m, m);
        for (Index i = 0; i < m; ++i) basis_matrix.col(i) = A_.col(basis_[i]);
        Eigen::PartialPivLU<Matrix> lu(basis_matrix);
        binv_ = lu.inverse();
        if (!binv_.allFinite()) throw NumericalError("simplex: singular basis");
        xb_ = binv_ * b_;
        for (Index i = 0; i < m; ++i)
            if (xb_[i] < 0.0 && xb_[i] > -1e-9 * (1.0 + b_.cwiseAbs().maxCoeff())) xb_[i] = 0.0;
        since_refactor_ = 0;
    }

    Vector solution() const {
        Vector x = Vector::Zero(A_.cols());
        for (Index i = 0; i < A_.rows(); ++i) x[basis_[i]] = std::max(0.0, xb_[i]);
        return x;
    }

    const std::vector<Index>& basis() const { return basis_; }
    long pivots() const { return pivots_; }

private:
    void pivot(Index enter, Index leave, const Vector& u) {
        const double pivot_value = u[leave];
        const double theta = xb_[leave] / pivot_value;
        binv_.row(leave) /= pivot_value;
        for (Index i = 0; i < A_.rows(); ++i) {
            if (i == leave || u[i] == 0.0) continue;
            binv_.row(i) -= u[i] * binv_.row(leave);
            xb_[i] -= theta * u[i];
            if (xb_[i] < 0.0) xb_[i] = 0.0;
        }
        xb_[leave] = theta;
        is_basic_[basis_[leave]] = false;
        is_basic_[enter] = true;
        basis_[leave] = enter;
        ++pivots_;
        ++since_refactor_;
    }

    Matrix A_;
    Vector b_;
    std::vector<Index> basis_;
    std::vector<bool> is_basic_;
    Matrix binv_;
    Vector xb_;
    long max_pivots_;
    int refactor_every_;
    long pivots_ = 0;
    int since_refactor_ = 0;
};

}  // namespace

SimplexResult simplex(const Eigen::Ref<const Matrix>& A_in, const Eigen::Ref<const Vector>& b_in,
                      const Eigen::Ref<const Vector>& cost, long max_pivots, int refactor_every) {
    const Index m = A_in.rows();
    const Index n = A_in.cols();
    if (b_in.size() != m || cost.size() != n) throw ValidationError("simplex: dimension mismatch");
    if (refactor_every < 1) throw ValidationError("simplex: refactor_every must be >= 1");

    Matrix A = A_in;
    Vector b = b_in;
    for (Index i = 0; i < m; ++i) {
        if (b[i] < 0.0) {
            A.row(i) *= -1.0;
            b[i] = -b[i];
        }
    }

    // Unit columns give a free starting basis; artificials cover the rest.
    std::vector<Index> basis(m, -1);
    for (Index j = 0; j < n; ++j) {
        Index hit = -1;
        bool unit = true;
        for (Index i = 0; i < m && unit; ++i) {
            if (A(i, j) == 0.0) continue;
            if (A(i, j) == 1.0 && hit < 0) hit = i;
            else unit = false;
        }
        if (unit && hit >= 0 && basis[hit] < 0) basis[hit] = j;
    }
    Index n_art = 0;
    for (Index i = 0; i < m; ++i) n_art += (basis[i] < 0);

    Matrix ext(m, n + n_art);
    ext.leftCols(n) = A;
    ext.rightCols(n_art).setZero();
    Index next = n;
    for (Index i = 0; i < m; ++i) {
        if (basis[i] >= 0) continue;
        ext(i, next) = 1.0;
        basis[i] = next++;
    }

    RevisedSimplex solver(std::move(ext), b, std::move(basis), max_pivots, refactor_every);
    SimplexResult result;

    if (n_art > 0) {
        Vector phase1 = Vector::Zero(n + n_art);
        phase1.tail(n_art).setOnes();
        std::vector<bool> allowed(n + n_art, true);
        const SimplexStatus st = solver.run(phase1, allowed);
        if (st == SimplexStatus::iteration_limit) {
            result.status = st;
            result.pivots = solver.pivots();
            return result;
        }
        solver.refactor();
        const Vector x = solver.solution();
        const double infeasibility = x.tail(n_art).sum();
        if (infeasibility > 1e-9 * (1.0 + b.cwiseAbs().maxCoeff())) {
            result.status = SimplexStatus::infeasible;
            result.pivots = solver.pivots();
            return result;
        }
        solver.drive_out(n);
    }

    Vector phase2 = Vector::Zero(n + n_art);
    phase2.head(n) = cost;
    std::vector<bool> allowed(n + n_art, true);
    for (Index j = n; j < n + n_art; ++j) allowed[j] = false;
    result.status = solver.run(phase2, allowed);
    solver.refactor();
    result.x = solver.solution().head(n);
    result.basis = solver.basis();
    result.objective = cost.dot(result.x);
    result.pivots = solver.pivots();
    return result;
}

LpSolution solve_lp(const LpProblem& problem) {
    problem.validate();
    const Index R = problem.B.rows();
    const Index N = problem.B.cols();

    // Row scaling to unit max-abs; the feasible set is unchanged.
    Vector scale(R);
    for (Index r = 0; r < R; ++r) {
        const double mx = problem.B.row(r).cwiseAbs().maxCoeff();
        scale[r] = mx > 0.0 ? 1.0 / mx : 1.0;
    }

    Matrix A = Matrix::Zero(2 * R, N + 2 * R);
    Vector b(2 * R);
    for (Index r = 0; r < R; ++r) {
        A.row(r).head(N) = scale[r] * problem.B.row(r);
        A(r, N + r) = 1.0;
        b[r] = scale[r] * (problem.c[r] + problem.eps1);
        A.row(R + r).head(N) = scale[r] * problem.B.row(r);
        A(R + r, N + R + r) = -1.0;
        b[R + r] = scale[r] * (problem.c[r] - problem.eps1);
    }
    Vector cost = Vector::Zero(N + 2 * R);
    cost.head(N).setOnes();

    const SimplexResult res = simplex(A, b, cost);
    switch (res.status) {
        case SimplexStatus::optimal: break;
        case SimplexStatus::infeasible:
            throw NumericalError("lp: solver reported infeasibility (cannot happen when the full weights are feasible)");
        case SimplexStatus::unbounded:
            throw NumericalError("lp: solver reported an unbounded objective (solver fault)");
        case SimplexStatus::iteration_limit:
            throw NumericalError("lp: pivot limit reached");
    }
    LpSolution out;
    out.y = res.x.head(N);
    out.objective = out.y.sum();
    out.pivots = res.pivots;
    return out;
}

SparseRule solve_l1(const CompressedSystem& system, const FullRule& rule, double eps1) {
    if (system.B.cols() != rule.size()) throw ValidationError("lp: system columns and rule size differ");
    LpProblem problem{system.B, system.c, eps1};
    const LpSolution sol = solve_lp(problem);

    SparseRule out = extract_rule(sol.y, rule, 1e-12);
    out.method = "l1-lp";
    out.iterations_used = static_cast<int>(sol.pivots);
    out.converged = true;
    out.prune_rel_used = 1e-12;
    const Vector residual = system.B * out.expand(rule.size()) - system.c;
    out.residual_norm = residual.norm();
    out.max_row_residual = residual.size() ? residual.cwiseAbs().maxCoeff() : 0.0;
    out.measure_deviation = std::abs(out.weights.sum() - system.full_weights.sum());
    if (out.count() > 2 * system.rows()) {
        out.support_warning = true;
        std::ostringstream os;
        os << "basic solution has " << out.count() << " nonzeros, more than 2R = " << 2 * system.rows();
        out.warnings.push_back(os.str());
    }
    return out;
}

}  // namespace sparsequad::lp
