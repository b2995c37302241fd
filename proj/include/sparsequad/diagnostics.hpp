#pragma once

#include "sparsequad/compression.hpp"
#include "sparsequad/dataset.hpp"
#include "sparsequad/sparse_rule.hpp"

#include <string>

namespace sparsequad::diagnostics {

/// Computable ingredients of the a-priori bound
///   (||w|| + ||w_hat||) sqrt(tail) + eps1 S_f + 2 |Omega| L_f Delta.
struct BoundInputs {
    double w_norm = 0.0;
    double what_norm = 0.0;
    double tail_energy = 0.0;
    double eps1 = 0.0;
    double Sf = 0.0;
    double Lf = 0.0;
    double measure = 0.0;
    double Delta = 0.0;
    bool Lf_estimated = false;

    void validate() const;
};

struct ErrorReport {
    double svd_term = 0.0;
    double eps1_term = 0.0;
    double interpolation_term = 0.0;
    double bound_total = 0.0;
    bool Lf_estimated = false;

    double empirical_max_error = 0.0;
    Matrix test_params;  // Ntest x p
    Matrix errors;       // Ntest x K, |I_full - I_sparse|

    std::string to_json() const;
    /// CSV with header "mu0,...,mu{p-1},err_k0,...": one row per test parameter.
    void write_error_table_csv(const std::string& path) const;
};

/// max over probe points of the distance to the nearest training point.
double fill_distance(const TrainingSet& train, const TrainingSet& probe);

/// Tensor probe grid over the training box (per_dim points per dimension).
TrainingSet probe_grid(const TrainingSet& train, Index per_dim = 50);

/// max over snapshot rows of sum_n |<phi_{k,m}, zeta_n>|.
double sf_constant(const Eigen::Ref<const Matrix>& projections);
double sf_constant(const ConstraintSystem& system, const CompressedSystem& compressed);

/// Fills the three addends and their sum; leaves the empirical part untouched.
ErrorReport apriori_bound(const BoundInputs& inputs);

/// |I_k^full(mu) - I_k^sparse(mu)| for every test parameter (rows) and k (columns).
Matrix error_table(const SparseRule& rule, const FunctionFamily& family, const FullRule& full,
                   const TrainingSet& test);

/// max over test parameters and k of |I_k^full - I_k^sparse|.
double empirical_error(const SparseRule& rule, const FunctionFamily& family, const FullRule& full,
                       const TrainingSet& test);

/// max over training pairs of ||f_k(., mu') - f_k(., mu'')||_inf / ||mu' - mu''||_2,
/// with the sup norm taken over the full-rule nodes. A crude lower estimate of L_f.
double estimate_lipschitz(const FunctionFamily& family, const FullRule& full, const TrainingSet& train);

}  // namespace sparsequad::diagnostics
