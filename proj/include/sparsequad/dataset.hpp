#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sparsequad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// A family of integrands f_k(x; mu), k = 0..K-1, over a domain of measure |Omega|.
///
/// The evaluator must be pure: assembly calls it from several threads and
/// relies on identical arguments giving bit-identical results.
struct FunctionFamily {
    using Evaluator = std::function<double(int k, const Eigen::Ref<const Vector>& x,
                                           const Eigen::Ref<const Vector>& mu)>;

    int K = 1;
    int param_dim = 1;
    double domain_measure = 1.0;
    Evaluator eval;
    std::string name;

    void validate() const;
};

/// Full-order rule: one node per row of `nodes` (N x d) and its weight.
struct FullRule {
    Matrix nodes;
    Vector weights;

    Index size() const { return weights.size(); }
    Index dim() const { return nodes.cols(); }
    double measure() const { return weights.sum(); }

    /// Checks w >= 0 and sum(w) == expected_measure to 1e-12 relative.
    void validate(double expected_measure) const;
};

/// Training (or test) parameters, one per row, with an optional box D.
struct TrainingSet {
    Matrix params;
    std::optional<Matrix> box;  // 2 x p: row 0 lower, row 1 upper

    Index size() const { return params.rows(); }
    Index dim() const { return params.cols(); }

    void validate() const;
};

/// Rows of A are ordered k-major then m: row = k * Ntrain + m. The measure
/// row (all ones, rhs |Omega|) is last.
struct ConstraintSystem {
    Matrix A;
    Vector b;
    Index measure_row_index = 0;
    Vector full_weights;
    int K = 0;
    Index n_train = 0;

    Index rows() const { return A.rows(); }
    Index cols() const { return A.cols(); }
    Index row_of(int k, Index m) const { return static_cast<Index>(k) * n_train + m; }
};

/// Entry (k, m) = sum_i w_i f_k(x_i; mu_m).
Matrix full_integrals(const FunctionFamily& family, const FullRule& rule,
                      const TrainingSet& params);

ConstraintSystem assemble_system(const FunctionFamily& family, const FullRule& rule,
                                 const TrainingSet& train);

/// Composite trapezoid rule with n >= 2 equally spaced nodes on [a, b].
FullRule trapezoid_rule(double a, double b, Index n);

/// Tensor grid of `per_dim[j]` equally spaced points on [lo_j, hi_j]; the
/// last coordinate varies fastest. The box is attached to the result.
TrainingSet tensor_grid(const Vector& lo, const Vector& hi, const std::vector<Index>& per_dim);

/// Number of worker threads for embarrassingly parallel loops. Reads
/// SPARSEQUAD_THREADS, defaulting to the hardware concurrency.
unsigned worker_count();

/// Runs body(i) for i in [0, n) over worker_count() threads. Each index is
/// visited exactly once; callers write to disjoint slots.
void parallel_for(Index n, const std::function<void(Index)>& body);

}  // namespace sparsequad
