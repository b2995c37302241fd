#pragma once

#include "sparsequad/dataset.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace sparsequad {

/// A reduced rule: a subset of the full-rule nodes with strictly positive weights,
/// plus whatever the solver that produced it has to say about the run.
struct SparseRule {
    std::vector<Index> indices;  // into the full rule, ascending
    Matrix nodes;                // count() x d
    Vector weights;              // count(), all > 0

    std::string method;          // "focuss" or "l1-lp"
    double residual_norm = 0.0;  // ||B y - c||_2 of the returned weights
    double max_row_residual = 0.0;  // max_n |(B y - c)_n|
    int iterations_used = 0;
    std::vector<double> lambda_history;
    double prune_rel_used = 0.0;
    double measure_deviation = 0.0;  // |sum(w_hat) - sum(w_full)|

    bool converged = false;
    bool saturated = false;            // lambda calibration hit the pseudoinverse floor
    bool stagnated = false;            // non-negativity relaxation collapsed twice in a row
    bool constraints_dropped = false;  // eps1 >= ||c||, the zero vector was admissible
    bool support_warning = false;      // count() > rank + 2
    std::vector<std::string> warnings;

    Index count() const { return static_cast<Index>(indices.size()); }

    /// Scatters the weights back into a length-n vector (zeros elsewhere).
    Vector expand(Index n) const;
};

/// Keeps every i with y_i > 0 and y_i >= prune_rel * max(y).
SparseRule extract_rule(const Eigen::Ref<const Vector>& y, const FullRule& rule, double prune_rel);

/// CSV with a header line "index,x0,...,x{d-1},weight" and one row per node.
void write_rule_csv(const std::filesystem::path& path, const SparseRule& rule);
SparseRule read_rule_csv(const std::filesystem::path& path);

/// Diagnostics (iterations, lambda history, residual, count, flags) as JSON text.
std::string rule_report_json(const SparseRule& rule);

}  // namespace sparsequad
