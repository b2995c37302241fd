#include "sparsequad/compression.hpp"
#include "sparsequad/diagnostics.hpp"
#include "sparsequad/errors.hpp"
#include "sparsequad/experiment.hpp"
#include "sparsequad/focuss.hpp"
#include "sparsequad/lp_baseline.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace sparsequad;

namespace {

// Nodes are labelled by column index when the caller has no coordinates at hand.
FullRule index_rule(const Vector& w0) {
    FullRule r;
    r.nodes.resize(w0.size(), 1);
    for (Index i = 0; i < w0.size(); ++i) r.nodes(i, 0) = static_cast<double>(i);
    r.weights = w0;
    return r;
}

CompressedSystem raw(const Matrix& B, const Vector& c, const Vector& w0) {
    if (B.rows() != c.size() || B.cols() != w0.size()) throw ValidationError("B, c and w0 dimensions disagree");
    CompressedSystem s;
    s.B = B;
    s.c = c;
    s.full_weights = w0;
    s.rank = B.rows();
    return s;
}

py::dict rule_dict(const SparseRule& r) {
    py::dict d;
    d["indices"] = r.indices;
    d["weights"] = r.weights;
    d["method"] = r.method;
    d["count"] = r.count();
    d["residual_norm"] = r.residual_norm;
    d["max_row_residual"] = r.max_row_residual;
    d["iterations"] = r.iterations_used;
    d["lambda_history"] = r.lambda_history;
    d["measure_deviation"] = r.measure_deviation;
    d["converged"] = r.converged;
    d["saturated"] = r.saturated;
    d["stagnated"] = r.stagnated;
    d["constraints_dropped"] = r.constraints_dropped;
    d["support_warning"] = r.support_warning;
    d["warnings"] = r.warnings;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Sparse non-negative quadrature rules (C++ core)";

    static py::exception<ValidationError> validation(m, "ValidationError", PyExc_ValueError);
    static py::exception<NumericalError> numerical(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ValidationError& e) {
            py::set_error(validation, e.what());
        } catch (const NumericalError& e) {
            py::set_error(numerical, e.what());
        }
    });

    m.def("trapezoid_rule", [](double a, double b, Index n) {
        const FullRule r = trapezoid_rule(a, b, n);
        return py::make_tuple(Vector(r.nodes.col(0)), r.weights);
    }, py::arg("a"), py::arg("b"), py::arg("n"), "Nodes and weights of the composite trapezoid rule.");

    m.def("schrodinger_integrand", &experiment::schrodinger_integrand, py::arg("y"), py::arg("x"), py::arg("t"));

    m.def("build_dataset", [](const std::string& config_json) {
        const experiment::Dataset d = experiment::build_dataset(experiment::config_from_json(config_json));
        py::dict out;
        out["A"] = d.system.A;
        out["b"] = d.system.b;
        out["nodes"] = d.rule.nodes;
        out["weights"] = d.rule.weights;
        out["train"] = d.train.params;
        out["test"] = d.test.params;
        out["measure"] = d.system.b[d.system.measure_row_index];
        return out;
    }, py::arg("config_json") = "{}", "Builds A, b, the full rule and the parameter grids from a config JSON string.");

    m.def("select_rank", [](const Vector& s, double eps2) { return select_rank(s, eps2); },
          py::arg("singulars"), py::arg("eps2"));

    m.def("compress", [](const Matrix& A, const Vector& b, const Vector& w, double eps2) {
        ConstraintSystem sys;
        sys.A = A;
        sys.b = b;
        sys.full_weights = w;
        sys.measure_row_index = A.rows() - 1;
        const CompressedSystem cs = compress(sys, eps2);
        py::dict out;
        out["B"] = cs.B;
        out["c"] = cs.c;
        out["rank"] = cs.rank;
        out["tail_energy"] = cs.tail_energy;
        out["singulars"] = cs.all_singulars;
        out["modes"] = cs.modes;
        return out;
    }, py::arg("A"), py::arg("b"), py::arg("w"), py::arg("eps2"));

    m.def("residual_norm_for_lambda", [](const Matrix& M, const Vector& c, double lambda) {
        return focuss::residual_norm_for_lambda(focuss::factorize(M, 1e-14), c, lambda);
    }, py::arg("M"), py::arg("c"), py::arg("lam"), "||c - M x(lam)|| for the Tikhonov solution of M x = c.");

    m.def("calibrate_lambda", [](const Matrix& M, const Vector& c, double eps1) {
        const auto cal = focuss::calibrate_lambda(focuss::factorize(M, 1e-14), c, eps1);
        py::dict out;
        out["lambda"] = cal.lambda;
        out["residual"] = cal.residual;
        out["saturated"] = cal.saturated;
        out["constraints_dropped"] = cal.constraints_dropped;
        return out;
    }, py::arg("M"), py::arg("c"), py::arg("eps1"));

    m.def("focuss_solve", [](const Matrix& B, const Vector& c, const Vector& w0, double eps1, double q, int max_iters,
                             double conv_tol, double prune_rel, bool reduce_support) {
        focuss::FocussConfig cfg;
        cfg.eps1 = eps1;
        cfg.q = q;
        cfg.max_iters = max_iters;
        cfg.conv_tol = conv_tol;
        cfg.prune_rel = prune_rel;
        cfg.reduce_support = reduce_support;
        return rule_dict(focuss::solve(raw(B, c, w0), index_rule(w0), cfg));
    }, py::arg("B"), py::arg("c"), py::arg("w0"), py::arg("eps1") = 0.0, py::arg("q") = 0.75,
       py::arg("max_iters") = 300, py::arg("conv_tol") = 1e-9, py::arg("prune_rel") = 1e-10,
       py::arg("reduce_support") = true, "Regularized FOCUSS from the start weights w0.");

    m.def("lp_solve", [](const Matrix& B, const Vector& c, const Vector& w0, double eps1) {
        return rule_dict(lp::solve_l1(raw(B, c, w0), index_rule(w0), eps1));
    }, py::arg("B"), py::arg("c"), py::arg("w0"), py::arg("eps1") = 0.0,
       "min sum(y) subject to |B y - c| <= eps1 per row, y >= 0.");

    m.def("apriori_bound", [](double w_norm, double what_norm, double tail_energy, double eps1, double Sf, double Lf,
                              double measure, double Delta) {
        const auto r = diagnostics::apriori_bound({w_norm, what_norm, tail_energy, eps1, Sf, Lf, measure, Delta, false});
        py::dict out;
        out["svd_term"] = r.svd_term;
        out["eps1_term"] = r.eps1_term;
        out["interpolation_term"] = r.interpolation_term;
        out["total"] = r.bound_total;
        return out;
    }, py::arg("w_norm") = 0.0, py::arg("what_norm") = 0.0, py::arg("tail_energy") = 0.0, py::arg("eps1") = 0.0,
       py::arg("Sf") = 0.0, py::arg("Lf") = 0.0, py::arg("measure") = 0.0, py::arg("Delta") = 0.0);

    m.def("fill_distance", [](const Matrix& train, const Matrix& probe) {
        TrainingSet t, p;
        t.params = train;
        p.params = probe;
        return diagnostics::fill_distance(t, p);
    }, py::arg("train"), py::arg("probe"));

    m.def("run_comparison", [](const std::string& config_json) {
        const auto rep = experiment::run_comparison(experiment::config_from_json(config_json));
        return py::make_tuple(experiment::comparison_csv(rep), rep.metadata_json);
    }, py::arg("config_json"), "Runs the eps sweep; returns (report CSV text, metadata JSON text).");
}
