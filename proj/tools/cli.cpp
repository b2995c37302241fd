#include "cli.hpp"

#include "sparsequad/csv_io.hpp"
#include "sparsequad/diagnostics.hpp"
#include "sparsequad/errors.hpp"
#include "sparsequad/experiment.hpp"
#include "sparsequad/focuss.hpp"
#include "sparsequad/lp_baseline.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace sparsequad::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GenerateArgs {
    std::string family = "schrodinger";
    int J = 40;
    int n_full = 1200;
    double y_max = 4.0;
    int degree = 2;
    std::string out_dir = ".";
};

struct SolveArgs {
    std::string input;
    std::string rule_csv;
    double eps1 = 0.0;
    double eps2 = -1.0;
    double q = 0.75;
    std::string method = "focuss";
    int max_iters = 300;
    double conv_tol = 1e-9;
    double prune_rel = 1e-10;
    bool keep_support = false;
    std::string out_dir = ".";
};

struct CompareArgs {
    std::string config;
    std::string output_dir;
    bool full = false;
    bool timing = false;
};

struct BoundArgs {
    diagnostics::BoundInputs in;
    std::string json_out;
};

std::string read_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ValidationError("cannot open " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int run_generate(const GenerateArgs& a, std::ostream& out) {
    experiment::ExperimentConfig cfg;
    cfg.family_id = a.family;
    cfg.J = a.J;
    cfg.N_full = a.n_full;
    cfg.y_max = a.y_max;
    cfg.degree = a.degree;
    if (a.family == "external-csv") throw ValidationError("generate: external-csv data is already generated");
    const experiment::Dataset d = experiment::build_dataset(cfg);

    fs::create_directories(a.out_dir);
    const fs::path dir(a.out_dir);
    write_matrix_csv(dir / "A.csv", d.system.A);
    write_matrix_csv(dir / "b.csv", d.system.b);
    Matrix rule(d.rule.size(), d.rule.dim() + 1);
    rule.leftCols(d.rule.dim()) = d.rule.nodes;
    rule.col(d.rule.dim()) = d.rule.weights;
    write_matrix_csv(dir / "rule.csv", rule);
    write_matrix_csv(dir / "train.csv", d.train.params);
    json meta = {{"family", a.family},
                 {"K", d.system.K},
                 {"n_train", d.system.n_train},
                 {"N", d.rule.size()},
                 {"measure", d.family.domain_measure},
                 {"measure_row_index", d.system.measure_row_index},
                 {"row_order", "k-major then m, measure row last"}};
    std::ofstream(dir / "meta.json") << meta.dump(2);
    out << "wrote " << d.system.rows() << " x " << d.system.cols() << " system to " << dir.string() << '\n';
    return 0;
}

int run_solve(const SolveArgs& a, std::ostream& out) {
    const auto comma = a.input.find(',');
    if (comma == std::string::npos) throw ValidationError("solve: --input expects A.csv,b.csv");
    ConstraintSystem sys;
    sys.A = read_matrix_csv(fs::path(a.input.substr(0, comma)));
    sys.b = read_vector_csv(a.input.substr(comma + 1));
    if (sys.A.rows() != sys.b.size() || sys.A.rows() < 1 || sys.A.cols() < 1)
        throw ValidationError("solve: A and b dimensions disagree");
    sys.measure_row_index = sys.A.rows() - 1;
    sys.K = static_cast<int>(sys.A.rows() - 1);
    sys.n_train = 1;

    FullRule rule;
    if (!a.rule_csv.empty()) {
        const Matrix r = read_matrix_csv(fs::path(a.rule_csv));
        if (r.rows() != sys.A.cols() || r.cols() < 2)
            throw ValidationError("solve: rule file must be N x (d + 1) with N = columns of A");
        rule.nodes = r.leftCols(r.cols() - 1);
        rule.weights = r.col(r.cols() - 1);
        rule.validate(sys.b[sys.measure_row_index]);
    } else {
        // No full rule: start from uniform weights with the measure of the last row,
        // and label nodes by column index.
        const Index n = sys.A.cols();
        rule.nodes.resize(n, 1);
        for (Index i = 0; i < n; ++i) rule.nodes(i, 0) = static_cast<double>(i);
        rule.weights = Vector::Constant(n, sys.b[sys.measure_row_index] / static_cast<double>(n));
        if (!(sys.b[sys.measure_row_index] > 0.0)) throw ValidationError("solve: last entry of b must be the positive domain measure");
    }
    sys.full_weights = rule.weights;

    const CompressedSystem comp = a.eps2 >= 0.0 ? compress(sys, a.eps2) : identity_projection(sys);
    SparseRule result;
    if (a.method == "focuss") {
        focuss::FocussConfig fc;
        fc.q = a.q;
        fc.eps1 = a.eps1;
        fc.max_iters = a.max_iters;
        fc.conv_tol = a.conv_tol;
        fc.prune_rel = a.prune_rel;
        fc.reduce_support = !a.keep_support;
        result = focuss::solve(comp, rule, fc);
    } else {
        result = lp::solve_l1(comp, rule, a.eps1);
    }

    fs::create_directories(a.out_dir);
    const fs::path dir(a.out_dir);
    const std::string stem = a.method == "focuss" ? "rule_focuss" : "rule_lp";
    write_rule_csv(dir / (stem + ".csv"), result);
    std::ofstream(dir / (stem + ".json")) << rule_report_json(result);
    out << result.method << ": K = " << result.count() << ", residual = " << result.residual_norm
        << ", sum(w) = " << result.weights.sum() << '\n';
    for (const auto& w : result.warnings) out << "warning: " << w << '\n';
    return 0;
}

int run_compare(const CompareArgs& a, std::ostream& out) {
    experiment::ExperimentConfig cfg = experiment::config_from_json(read_file(a.config));
    if (!a.output_dir.empty()) cfg.output_dir = a.output_dir;
    if (a.full) cfg.full_test_grid = true;
    if (a.timing) cfg.timing_repeats = std::max(cfg.timing_repeats, 3);
    const experiment::ComparisonReport rep = experiment::run_comparison(cfg);
    out << experiment::comparison_csv(rep);
    return 0;
}

int run_bound(const BoundArgs& a, std::ostream& out) {
    const diagnostics::ErrorReport rep = diagnostics::apriori_bound(a.in);
    const std::string text = rep.to_json();
    if (!a.json_out.empty()) std::ofstream(a.json_out) << text;
    out << text << '\n';
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sparse non-negative quadrature rules via regularized FOCUSS (l^p, 0 < p < 1) "
                 "with an l1 / LP baseline"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Build a dataset and write A.csv, b.csv, rule.csv, train.csv, meta.json");
    g->add_option("--family", gen.family, "Integrand family")->check(CLI::IsMember({"schrodinger", "monomials"}))
        ->capture_default_str();
    g->add_option("--J", gen.J, "Training grid points per parameter dimension")->capture_default_str();
    g->add_option("--n-full", gen.n_full, "Number of full-rule (trapezoid) nodes")->capture_default_str();
    g->add_option("--y-max", gen.y_max, "Truncation point of the Schroedinger integration domain")->capture_default_str();
    g->add_option("--degree", gen.degree, "Highest monomial degree (monomials family)")->capture_default_str();
    g->add_option("--out-dir", gen.out_dir, "Output directory")->capture_default_str();

    SolveArgs sol;
    auto* s = app.add_subcommand("solve", "Recover a sparse rule from a CSV dataset");
    s->add_option("--input", sol.input, "A.csv,b.csv (measure row last)")->required();
    s->add_option("--rule", sol.rule_csv, "Full rule as an N x (d+1) matrix CSV (nodes..., weight); "
                                          "defaults to uniform weights");
    s->add_option("--eps1", sol.eps1, "Residual tolerance (l2 for focuss, per row for lp)")->capture_default_str();
    s->add_option("--eps2", sol.eps2, "SVD energy tolerance; omit to solve the uncompressed system");
    s->add_option("--q", sol.q, "FOCUSS reweighting exponent in (0.5, 1)")->capture_default_str();
    s->add_option("--method", sol.method, "focuss or lp")->check(CLI::IsMember({"focuss", "lp"}))->capture_default_str();
    s->add_option("--max-iters", sol.max_iters, "FOCUSS iteration cap")->capture_default_str();
    s->add_option("--conv-tol", sol.conv_tol, "FOCUSS relative-change stopping threshold")->capture_default_str();
    s->add_option("--prune-rel", sol.prune_rel, "Relative pruning threshold")->capture_default_str();
    s->add_flag("--keep-support", sol.keep_support,
                "Skip the post-iteration step that drops linearly dependent support columns");
    s->add_option("--out-dir", sol.out_dir, "Output directory")->capture_default_str();

    CompareArgs cmp;
    auto* c = app.add_subcommand("compare", "Run a FOCUSS vs LP tolerance sweep from a JSON config");
    c->add_option("--config", cmp.config, "Experiment config JSON")->required()->check(CLI::ExistingFile);
    c->add_option("--output-dir", cmp.output_dir, "Override the config's output_dir");
    c->add_flag("--full", cmp.full, "Use the 200 x 200 test grid");
    c->add_flag("--timing", cmp.timing, "Median of at least 3 timed runs per solve (rows always run one at a time)");

    BoundArgs bnd;
    auto* b = app.add_subcommand("bound", "Evaluate the a-priori error bound from its ingredients");
    b->add_option("--w-norm", bnd.in.w_norm, "||w||_2 of the full rule")->capture_default_str();
    b->add_option("--what-norm", bnd.in.what_norm, "||w_hat||_2 of the sparse rule")->capture_default_str();
    b->add_option("--tail-energy", bnd.in.tail_energy, "Sum of discarded squared singular values")->capture_default_str();
    b->add_option("--eps1", bnd.in.eps1, "Residual tolerance")->capture_default_str();
    b->add_option("--sf", bnd.in.Sf, "Projection-sum constant S_f")->capture_default_str();
    b->add_option("--lf", bnd.in.Lf, "Lipschitz constant L_f")->capture_default_str();
    b->add_flag("--lf-estimated", bnd.in.Lf_estimated, "Mark L_f as estimated rather than certified");
    b->add_option("--measure", bnd.in.measure, "Domain measure |Omega|")->capture_default_str();
    b->add_option("--delta", bnd.in.Delta, "Fill distance of the training set")->capture_default_str();
    b->add_option("--json", bnd.json_out, "Also write the report to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        if (code != 0) err << '\n' << app.help();
        return code == 0 ? 0 : 1;
    }

    try {
        if (*g) return run_generate(gen, out);
        if (*s) return run_solve(sol, out);
        if (*c) return run_compare(cmp, out);
        if (*b) return run_bound(bnd, out);
    } catch (const ValidationError& e) {
        err << "validation error: " << e.what() << '\n';
        return 1;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

}  // namespace sparsequad::cli
