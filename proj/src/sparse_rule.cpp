#include "sparsequad/sparse_rule.hpp"

#include "sparsequad/errors.hpp"

#include "json.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sparsequad {

Vector SparseRule::expand(Index n) const {
    Vector y = Vector::Zero(n);
    for (Index k = 0; k < count(); ++k) {
        if (indices[k] < 0 || indices[k] >= n) throw ValidationError("sparse rule: index out of range");
        y[indices[k]] = weights[k];
    }
    return y;
}

SparseRule extract_rule(const Eigen::Ref<const Vector>& y, const FullRule& rule, double prune_rel) {
    if (y.size() != rule.size()) throw ValidationError("extract_rule: weight vector length differs from rule size");
    if (!(prune_rel >= 0.0)) throw ValidationError("extract_rule: prune_rel must be non-negative");
    if (!y.allFinite()) throw NumericalError("extract_rule: non-finite weights");
    if (y.size() == 0 || y.minCoeff() < 0.0) throw ValidationError("extract_rule: weights must be non-negative");

    const double threshold = prune_rel * y.maxCoeff();
    SparseRule out;
    out.prune_rel_used = prune_rel;
    for (Index i = 0; i < y.size(); ++i)
        if (y[i] > 0.0 && y[i] >= threshold) out.indices.push_back(i);
    if (out.indices.empty()) throw NumericalError("extract_rule: every weight was pruned (empty rule)");

    out.nodes.resize(out.count(), rule.dim());
    out.weights.resize(out.count());
    for (Index k = 0; k < out.count(); ++k) {
        out.nodes.row(k) = rule.nodes.row(out.indices[k]);
        out.weights[k] = y[out.indices[k]];
    }
    return out;
}

void write_rule_csv(const std::filesystem::path& path, const SparseRule& rule) {
    std::ofstream os(path);
    if (!os) throw ValidationError("cannot open " + path.string() + " for writing");
    os << "index";
    for (Index j = 0; j < rule.nodes.cols(); ++j) os << ",x" << j;
    os << ",weight\n";
    char buf[32];
    auto put = [&](double v) {
        const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
        os << ',';
        os.write(buf, res.ptr - buf);
    };
    for (Index k = 0; k < rule.count(); ++k) {
        os << rule.indices[k];
        for (Index j = 0; j < rule.nodes.cols(); ++j) put(rule.nodes(k, j));
        put(rule.weights[k]);
        os << '\n';
    }
}

SparseRule read_rule_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ValidationError("cannot open " + path.string());
    std::string line;
    if (!std::getline(is, line) || line.rfind("index", 0) != 0)
        throw ValidationError(path.string() + ": missing 'index,...,weight' header");
    Index cols = 1;
    for (char ch : line) cols += (ch == ',');
    if (cols < 2) throw ValidationError(path.string() + ": header needs at least index and weight");
    const Index dim = cols - 2;

    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        std::vector<double> vals;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                vals.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw ValidationError(path.string() + ": cannot parse '" + tok + "'");
            }
        }
        if (static_cast<Index>(vals.size()) != cols)
            throw ValidationError(path.string() + ": row with wrong column count");
        rows.push_back(std::move(vals));
    }

    SparseRule rule;
    rule.nodes.resize(static_cast<Index>(rows.size()), dim);
    rule.weights.resize(static_cast<Index>(rows.size()));
    for (Index k = 0; k < static_cast<Index>(rows.size()); ++k) {
        rule.indices.push_back(static_cast<Index>(std::llround(rows[k][0])));
        for (Index j = 0; j < dim; ++j) rule.nodes(k, j) = rows[k][1 + j];
        rule.weights[k] = rows[k][cols - 1];
    }
    return rule;
}

std::string rule_report_json(const SparseRule& rule) {
    nlohmann::json j;
    j["method"] = rule.method;
    j["count"] = rule.count();
    j["iterations"] = rule.iterations_used;
    j["residual_norm"] = rule.residual_norm;
    j["max_row_residual"] = rule.max_row_residual;
    j["lambda_history"] = rule.lambda_history;
    j["prune_rel_used"] = rule.prune_rel_used;
    j["measure_deviation"] = rule.measure_deviation;
    j["weight_sum"] = rule.weights.sum();
    j["flags"] = {{"converged", rule.converged},
                  {"saturated", rule.saturated},
                  {"stagnated", rule.stagnated},
                  {"constraints_dropped", rule.constraints_dropped},
                  {"support_warning", rule.support_warning}};
    j["warnings"] = rule.warnings;
    return j.dump(2);
}

}  // namespace sparsequad
