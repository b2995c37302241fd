#pragma once

#include "sparsequad/compression.hpp"
#include "sparsequad/dataset.hpp"
#include "sparsequad/diagnostics.hpp"
#include "sparsequad/sparse_rule.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sparsequad::experiment {

/// Real part of the Gaussian-data Schroedinger kernel, even in y:
/// (cos(-x y / 2t) cos(y^2 / 4t) - sin(-x y / 2t) sin(y^2 / 4t)) exp(-y^2 / 2).
/// mu = (x, t); t must be positive.
double schrodinger_integrand(double y, double x, double t);

/// K = 1, mu = (x, t), domain [0, y_max].
FunctionFamily schrodinger_family(double y_max);

/// f_k(x; mu) = x^k for k = 0..degree on [a, b]; the single parameter is ignored.
FunctionFamily monomial_family(int degree, double a = 0.0, double b = 1.0);

enum class Method { focuss, lp, both };

struct ExperimentConfig {
    std::string family_id = "schrodinger";  // "schrodinger" | "monomials" | "external-csv"
    int J = 40;
    std::vector<double> eps_list{1e-2};
    double eps1_factor = 0.25;   // eps1 = eps1_factor * eps
    double eps2_factor = 0.25;   // SVD tail term budget = eps2_factor * eps
    double y_max = 4.0;
    int N_full = 1200;
    int test_grid = 50;
    bool full_test_grid = false;  // 200 per dimension
    Method method = Method::both;
    std::string output_dir = "sparsequad_out";
    unsigned seed = 0;
    double q = 0.75;
    int max_iters = 300;
    double conv_tol = 1e-9;
    int timing_repeats = 3;
    bool compress = true;         // false: eps2 = 0 (lossless rank reduction only)

    // Schroedinger parameter box: x in [x_min, x_max], t in [t_max / J, t_max].
    double x_min = 0.2;
    double x_max = 2.0;
    double t_max = 4.0;

    // monomials
    int degree = 2;

    // external-csv: matrices in the dataset CSV format; rule_csv holds
    // nodes and weights as an N x (d + 1) matrix.
    std::string a_csv, b_csv, rule_csv;

    void validate() const;
    int test_points_per_dim() const { return full_test_grid ? 200 : test_grid; }
};

ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);

struct Dataset {
    FunctionFamily family;
    FullRule rule;
    TrainingSet train;
    TrainingSet test;
    ConstraintSystem system;
    bool has_family = true;  // false for external-csv input
};

/// Trapezoid rule on [0, y_max] with N_full nodes and a J x J training grid
/// over (x, t) in [x_min, x_max] x [t_max / J, t_max].
Dataset build_schrodinger_dataset(const ExperimentConfig& cfg);
Dataset build_dataset(const ExperimentConfig& cfg);

/// eps2 such that (||w|| + |Omega|) sqrt(tail) <= eps2_factor * eps, as an
/// energy fraction of ||A||_F^2. ||w_hat|| <= |Omega| stands in for the
/// unknown sparse weights.
double eps2_for(const ExperimentConfig& cfg, double eps, const ConstraintSystem& system);

struct MethodOutcome {
    SparseRule rule;
    double error = 0.0;       // empirical error on the test grid
    double time_ms = 0.0;     // median wall clock of compress + solve
};

struct ComparisonRow {
    double eps = 0.0;
    double eps1 = 0.0;
    double eps2 = 0.0;
    Index rank = 0;
    double tail_energy = 0.0;
    std::optional<MethodOutcome> focuss;
    std::optional<MethodOutcome> lp;
};

struct ComparisonReport {
    std::vector<ComparisonRow> rows;
    std::string metadata_json;
};

/// Runs the eps sweep. When output_dir is non-empty, writes report.csv,
/// report.json and one rule CSV (+ JSON diagnostics) per eps and method.
ComparisonReport run_comparison(const ExperimentConfig& cfg);

/// Header + rows with eps,K_focuss,K_lp,E_focuss,E_lp,t_focuss_ms,t_lp_ms (blank when absent).
std::string comparison_csv(const ComparisonReport& report);

/// Stable 64-bit FNV-1a hash, used to fingerprint configs in report metadata.
std::uint64_t fnv1a(const std::string& text);

}  // namespace sparsequad::experiment
