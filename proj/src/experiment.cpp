#include "sparsequad/experiment.hpp"

#include "sparsequad/csv_io.hpp"
#include "sparsequad/errors.hpp"
#include "sparsequad/focuss.hpp"
#include "sparsequad/lp_baseline.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sparsequad::experiment {

using nlohmann::json;

double schrodinger_integrand(double y, double x, double t) {
    if (!(t > 0.0)) throw ValidationError("schrodinger integrand: t must be positive");
    const double a = -x * y / (2.0 * t);
    const double b = y * y / (4.0 * t);
    return (std::cos(a) * std::cos(b) - std::sin(a) * std::sin(b)) * std::exp(-0.5 * y * y);
}

FunctionFamily schrodinger_family(double y_max) {
    FunctionFamily f;
    f.K = 1;
    f.param_dim = 2;
    f.domain_measure = y_max;
    f.name = "schrodinger";
    f.eval = [](int, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& mu) {
        return schrodinger_integrand(x[0], mu[0], mu[1]);
    };
    return f;
}

FunctionFamily monomial_family(int degree, double a, double b) {
    if (degree < 0) throw ValidationError("monomial family: degree must be >= 0");
    FunctionFamily f;
    f.K = degree + 1;
    f.param_dim = 1;
    f.domain_measure = b - a;
    f.name = "monomials";
    f.eval = [](int k, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>&) {
        return std::pow(x[0], k);
    };
    return f;
}

void ExperimentConfig::validate() const {
    auto bad = [](const std::string& what) { throw ValidationError("experiment config: " + what); };
    if (family_id != "schrodinger" && family_id != "monomials" && family_id != "external-csv")
        bad("family_id must be schrodinger, monomials or external-csv");
    if (J < 2) bad("J must be >= 2");
    if (eps_list.empty()) bad("eps_list must be non-empty");
    for (double e : eps_list)
        if (!(e > 0.0) || !std::isfinite(e)) bad("every eps must be positive");
    if (!(eps1_factor >= 0.0)) bad("eps1_factor must be >= 0");
    if (!(eps2_factor >= 0.0)) bad("eps2_factor must be >= 0");
    if (N_full < 2) bad("N_full must be >= 2");
    if (!(y_max > 0.0)) bad("y_max must be positive");
    if (test_grid < 1) bad("test_grid must be >= 1");
    if (!(q > 0.5 && q < 1.0)) bad("q must lie in (0.5, 1)");
    if (max_iters < 1) bad("max_iters must be >= 1");
    if (timing_repeats < 1) bad("timing_repeats must be >= 1");
    if (!(x_max >= x_min)) bad("x_max must be >= x_min");
    if (!(t_max > 0.0)) bad("t_max must be positive");
    if (degree < 0) bad("degree must be >= 0");
    if (family_id == "external-csv" && (a_csv.empty() || b_csv.empty() || rule_csv.empty()))
        bad("external-csv needs a_csv, b_csv and rule_csv");
}

namespace {

const char* method_name(Method m) {
    switch (m) {
        case Method::focuss: return "focuss";
        case Method::lp: return "lp";
        case Method::both: return "both";
    }
    return "both";
}

Method method_from(const std::string& s) {
    if (s == "focuss") return Method::focuss;
    if (s == "lp") return Method::lp;
    if (s == "both") return Method::both;
    throw ValidationError("experiment config: method must be focuss, lp or both");
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("experiment config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("experiment config: top level must be an object");

    static const char* known[] = {"family_id", "J", "eps_list", "eps1_factor", "eps2_factor", "y_max",
                                  "N_full", "test_grid", "full_test_grid", "method", "output_dir", "seed",
                                  "q", "max_iters", "conv_tol", "timing_repeats", "compress", "x_min",
                                  "x_max", "t_max", "degree", "a_csv", "b_csv", "rule_csv"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return it.key() == k; }) ==
            std::end(known))
            throw ValidationError("experiment config: unknown key '" + it.key() + "'");
    }

    ExperimentConfig cfg;
    try {
        read_opt(j, "family_id", cfg.family_id);
        read_opt(j, "J", cfg.J);
        read_opt(j, "eps_list", cfg.eps_list);
        read_opt(j, "eps1_factor", cfg.eps1_factor);
        read_opt(j, "eps2_factor", cfg.eps2_factor);
        read_opt(j, "y_max", cfg.y_max);
        read_opt(j, "N_full", cfg.N_full);
        read_opt(j, "test_grid", cfg.test_grid);
        read_opt(j, "full_test_grid", cfg.full_test_grid);
        if (j.contains("method")) cfg.method = method_from(j.at("method").get<std::string>());
        read_opt(j, "output_dir", cfg.output_dir);
        read_opt(j, "seed", cfg.seed);
        read_opt(j, "q", cfg.q);
        read_opt(j, "max_iters", cfg.max_iters);
        read_opt(j, "conv_tol", cfg.conv_tol);
        read_opt(j, "timing_repeats", cfg.timing_repeats);
        read_opt(j, "compress", cfg.compress);
        read_opt(j, "x_min", cfg.x_min);
        read_opt(j, "x_max", cfg.x_max);
        read_opt(j, "t_max", cfg.t_max);
        read_opt(j, "degree", cfg.degree);
        read_opt(j, "a_csv", cfg.a_csv);
        read_opt(j, "b_csv", cfg.b_csv);
        read_opt(j, "rule_csv", cfg.rule_csv);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("experiment config: wrong value type: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json j = {{"family_id", cfg.family_id},     {"J", cfg.J},
              {"eps_list", cfg.eps_list},       {"eps1_factor", cfg.eps1_factor},
              {"eps2_factor", cfg.eps2_factor}, {"y_max", cfg.y_max},
              {"N_full", cfg.N_full},           {"test_grid", cfg.test_grid},
              {"full_test_grid", cfg.full_test_grid}, {"method", method_name(cfg.method)},
              {"output_dir", cfg.output_dir},   {"seed", cfg.seed},
              {"q", cfg.q},                     {"max_iters", cfg.max_iters},
              {"conv_tol", cfg.conv_tol},       {"timing_repeats", cfg.timing_repeats},
              {"compress", cfg.compress},       {"x_min", cfg.x_min},
              {"x_max", cfg.x_max},             {"t_max", cfg.t_max},
              {"degree", cfg.degree},           {"a_csv", cfg.a_csv},
              {"b_csv", cfg.b_csv},             {"rule_csv", cfg.rule_csv}};
    return j.dump(2);
}

Dataset build_schrodinger_dataset(const ExperimentConfig& cfg) {
    cfg.validate();
    Dataset d;
    d.family = schrodinger_family(cfg.y_max);
    d.rule = trapezoid_rule(0.0, cfg.y_max, cfg.N_full);
    Vector lo(2), hi(2);
    lo << cfg.x_min, cfg.t_max / cfg.J;
    hi << cfg.x_max, cfg.t_max;
    d.train = tensor_grid(lo, hi, {cfg.J, cfg.J});
    const Index per_dim = cfg.test_points_per_dim();
    d.test = tensor_grid(lo, hi, {per_dim, per_dim});
    d.system = assemble_system(d.family, d.rule, d.train);
    return d;
}

Dataset build_dataset(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.family_id == "schrodinger") return build_schrodinger_dataset(cfg);

    Dataset d;
    if (cfg.family_id == "monomials") {
        d.family = monomial_family(cfg.degree);
        d.rule = trapezoid_rule(0.0, 1.0, cfg.N_full);
        Vector lo(1), hi(1);
        lo << 0.0;
        hi << 1.0;
        d.train = tensor_grid(lo, hi, {1});
        d.test = d.train;
        d.system = assemble_system(d.family, d.rule, d.train);
        return d;
    }

    // external-csv: no evaluator; errors are measured on the training rows.
    d.has_family = false;
    const Matrix A = read_matrix_csv(std::filesystem::path(cfg.a_csv));
    const Vector b = read_vector_csv(cfg.b_csv);
    const Matrix r = read_matrix_csv(std::filesystem::path(cfg.rule_csv));
    if (r.cols() < 2) throw ValidationError("external-csv: rule matrix needs node and weight columns");
    if (A.rows() != b.size() || A.cols() != r.rows() || A.rows() < 2)
        throw ValidationError("external-csv: A, b and rule dimensions disagree");
    d.rule.nodes = r.leftCols(r.cols() - 1);
    d.rule.weights = r.col(r.cols() - 1);
    d.rule.validate(b[b.size() - 1]);
    d.system.A = A;
    d.system.b = b;
    d.system.measure_row_index = A.rows() - 1;
    d.system.full_weights = d.rule.weights;
    d.system.K = static_cast<int>(A.rows() - 1);
    d.system.n_train = 1;
    return d;
}

double eps2_for(const ExperimentConfig& cfg, double eps, const ConstraintSystem& system) {
    if (!cfg.compress) return 0.0;
    const double measure = system.b[system.measure_row_index];
    const double amplifier = system.full_weights.norm() + measure;
    const double tail_allowed = std::pow(cfg.eps2_factor * eps / amplifier, 2);
    const double total = system.A.squaredNorm();
    return std::clamp(tail_allowed / total, 0.0, 0.999);
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Training-row error for datasets without an evaluator.
double training_error(const SparseRule& rule, const ConstraintSystem& system) {
    const Vector y = rule.expand(system.cols());
    const Vector diff = system.A * (system.full_weights - y);
    double worst = 0.0;
    for (Index r = 0; r < diff.size(); ++r)
        if (r != system.measure_row_index) worst = std::max(worst, std::abs(diff[r]));
    return worst;
}

template <typename Solve>
MethodOutcome timed(const ExperimentConfig& cfg, const Dataset& data, double eps2, Solve&& solve) {
    std::vector<double> times;
    MethodOutcome out;
    for (int rep = 0; rep < cfg.timing_repeats; ++rep) {
        const auto start = std::chrono::steady_clock::now();
        const CompressedSystem comp = compress(data.system, eps2);
        SparseRule rule = solve(comp);
        const auto stop = std::chrono::steady_clock::now();
        times.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
        if (rep == 0) out.rule = std::move(rule);
    }
    out.time_ms = median(times);
    out.error = data.has_family ? diagnostics::empirical_error(out.rule, data.family, data.rule, data.test)
                                : training_error(out.rule, data.system);
    return out;
}

std::string fmt_g(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

json rule_summary(const SparseRule& r, const MethodOutcome& m) {
    return {{"K", r.count()},
            {"E", m.error},
            {"time_ms", m.time_ms},
            {"iterations", r.iterations_used},
            {"residual_norm", r.residual_norm},
            {"max_row_residual", r.max_row_residual},
            {"measure_deviation", r.measure_deviation},
            {"converged", r.converged},
            {"saturated", r.saturated},
            {"stagnated", r.stagnated},
            {"support_warning", r.support_warning},
            {"warnings", r.warnings}};
}

}  // namespace

ComparisonReport run_comparison(const ExperimentConfig& cfg) {
    cfg.validate();
    const Dataset data = build_dataset(cfg);

    std::vector<double> eps_sorted = cfg.eps_list;
    std::sort(eps_sorted.begin(), eps_sorted.end(), std::greater<>());

    ComparisonReport report;
    json rows_meta = json::array();
    const bool write = !cfg.output_dir.empty();
    if (write) std::filesystem::create_directories(cfg.output_dir);
    const std::filesystem::path out_dir(cfg.output_dir);

    for (size_t idx = 0; idx < eps_sorted.size(); ++idx) {
        const double eps = eps_sorted[idx];
        ComparisonRow row;
        row.eps = eps;
        row.eps1 = cfg.eps1_factor * eps;
        row.eps2 = eps2_for(cfg, eps, data.system);
        std::string stage = "compress";
        try {
            const CompressedSystem comp = compress(data.system, row.eps2);
            row.rank = comp.rank;
            row.tail_energy = comp.tail_energy;

            focuss::FocussConfig fc;
            fc.q = cfg.q;
            fc.eps1 = row.eps1;
            fc.max_iters = cfg.max_iters;
            fc.conv_tol = cfg.conv_tol;

            if (cfg.method != Method::lp) {
                stage = "focuss";
                row.focuss = timed(cfg, data, row.eps2, [&](const CompressedSystem& c) {
                    return focuss::solve(c, data.rule, fc);
                });
            }
            if (cfg.method != Method::focuss) {
                stage = "lp";
                row.lp = timed(cfg, data, row.eps2, [&](const CompressedSystem& c) {
                    return lp::solve_l1(c, data.rule, row.eps1);
                });
            }

            json meta = {{"eps", eps},   {"eps1", row.eps1}, {"eps2", row.eps2},
                         {"rank", row.rank}, {"tail_energy", row.tail_energy}};
            if (comp.is_projection() && data.system.K * data.system.n_train > 0)
                meta["Sf"] = diagnostics::sf_constant(data.system, comp);
            if (row.focuss) meta["focuss"] = rule_summary(row.focuss->rule, *row.focuss);
            if (row.lp) meta["lp"] = rule_summary(row.lp->rule, *row.lp);
            rows_meta.push_back(meta);

            if (write) {
                const std::string tag = "eps" + std::to_string(idx);
                if (row.focuss) {
                    write_rule_csv(out_dir / ("rule_focuss_" + tag + ".csv"), row.focuss->rule);
                    std::ofstream(out_dir / ("rule_focuss_" + tag + ".json")) << rule_report_json(row.focuss->rule);
                }
                if (row.lp) {
                    write_rule_csv(out_dir / ("rule_lp_" + tag + ".csv"), row.lp->rule);
                    std::ofstream(out_dir / ("rule_lp_" + tag + ".json")) << rule_report_json(row.lp->rule);
                }
            }
        } catch (const ValidationError& e) {
            throw ValidationError("eps=" + fmt_g(eps) + " stage=" + stage + ": " + e.what());
        } catch (const NumericalError& e) {
            throw NumericalError("eps=" + fmt_g(eps) + " stage=" + stage + ": " + e.what());
        }
        report.rows.push_back(std::move(row));
    }

    const std::string cfg_text = config_to_json(cfg);
    json meta = {{"config", json::parse(cfg_text)},
                 {"config_hash", fnv1a(cfg_text)},
                 {"version", "sparsequad 1.0.0"},
                 {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                               std::to_string(EIGEN_MINOR_VERSION)},
                 {"full_rule", {{"N", data.rule.size()}, {"measure", data.system.b[data.system.measure_row_index]}}},
                 {"constraints", data.system.rows()},
                 {"test_size", data.test.size()},
                 {"rows", rows_meta}};
    report.metadata_json = meta.dump(2);

    if (write) {
        std::ofstream(out_dir / "report.csv") << comparison_csv(report);
        std::ofstream(out_dir / "report.json") << report.metadata_json;
    }
    return report;
}

std::string comparison_csv(const ComparisonReport& report) {
    std::ostringstream os;
    os.precision(17);
    os << "eps,K_focuss,K_lp,E_focuss,E_lp,t_focuss_ms,t_lp_ms\n";
    for (const auto& r : report.rows) {
        os << r.eps << ',';
        os << (r.focuss ? std::to_string(r.focuss->rule.count()) : "") << ',';
        os << (r.lp ? std::to_string(r.lp->rule.count()) : "") << ',';
        if (r.focuss) os << r.focuss->error;
        os << ',';
        if (r.lp) os << r.lp->error;
        os << ',';
        if (r.focuss) os << r.focuss->time_ms;
        os << ',';
        if (r.lp) os << r.lp->time_ms;
        os << '\n';
    }
    return os.str();
}

}  // namespace sparsequad::experiment
