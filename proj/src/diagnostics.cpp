#include "sparsequad/diagnostics.hpp"

#include "sparsequad/errors.hpp"

#include "json.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

namespace sparsequad::diagnostics {

void BoundInputs::validate() const {
    const double fields[] = {w_norm, what_norm, tail_energy, eps1, Sf, Lf, measure, Delta};
    for (double v : fields)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ValidationError("bound inputs must be finite and non-negative");
}

std::string ErrorReport::to_json() const {
    nlohmann::json j;
    j["bound"] = {{"total", bound_total},
                  {"svd_term", svd_term},
                  {"eps1_term", eps1_term},
                  {"interpolation_term", interpolation_term},
                  {"Lf_estimated", Lf_estimated}};
    j["empirical_max_error"] = empirical_max_error;
    j["test_size"] = test_params.rows();
    return j.dump(2);
}

void ErrorReport::write_error_table_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw ValidationError("cannot open " + path + " for writing");
    for (Index j = 0; j < test_params.cols(); ++j) os << (j ? "," : "") << "mu" << j;
    for (Index k = 0; k < errors.cols(); ++k) os << ",err_k" << k;
    os << '\n';
    char buf[32];
    auto put = [&](double v, bool first) {
        const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
        if (!first) os << ',';
        os.write(buf, res.ptr - buf);
    };
    for (Index r = 0; r < test_params.rows(); ++r) {
        for (Index j = 0; j < test_params.cols(); ++j) put(test_params(r, j), j == 0);
        for (Index k = 0; k < errors.cols(); ++k) put(errors(r, k), false);
        os << '\n';
    }
}

double fill_distance(const TrainingSet& train, const TrainingSet& probe) {
    if (train.size() < 1 || probe.size() < 1) throw ValidationError("fill_distance: empty point set");
    if (train.dim() != probe.dim()) throw ValidationError("fill_distance: dimension mismatch");
    double worst = 0.0;
    for (Index p = 0; p < probe.size(); ++p) {
        double nearest = std::numeric_limits<double>::infinity();
        for (Index m = 0; m < train.size(); ++m)
            nearest = std::min(nearest, (probe.params.row(p) - train.params.row(m)).squaredNorm());
        worst = std::max(worst, nearest);
    }
    return std::sqrt(worst);
}

TrainingSet probe_grid(const TrainingSet& train, Index per_dim) {
    Vector lo, hi;
    if (train.box) {
        lo = train.box->row(0).transpose();
        hi = train.box->row(1).transpose();
    } else {
        lo = train.params.colwise().minCoeff().transpose();
        hi = train.params.colwise().maxCoeff().transpose();
    }
    return tensor_grid(lo, hi, std::vector<Index>(static_cast<size_t>(train.dim()), per_dim));
}

double sf_constant(const Eigen::Ref<const Matrix>& projections) {
    if (projections.rows() == 0) return 0.0;
    return projections.cwiseAbs().rowwise().sum().maxCoeff();
}

double sf_constant(const ConstraintSystem& system, const CompressedSystem& compressed) {
    return sf_constant(snapshot_projections(system, compressed));
}

ErrorReport apriori_bound(const BoundInputs& in) {
    in.validate();
    ErrorReport r;
    r.svd_term = (in.w_norm + in.what_norm) * std::sqrt(in.tail_energy);
    r.eps1_term = in.eps1 * in.Sf;
    r.interpolation_term = 2.0 * in.measure * in.Lf * in.Delta;
    r.bound_total = r.svd_term + r.eps1_term + r.interpolation_term;
    r.Lf_estimated = in.Lf_estimated;
    return r;
}

Matrix error_table(const SparseRule& rule, const FunctionFamily& family, const FullRule& full,
                   const TrainingSet& test) {
    family.validate();
    test.validate();
    if (test.dim() != family.param_dim) throw ValidationError("error_table: parameter dimension mismatch");
    for (Index idx : rule.indices)
        if (idx < 0 || idx >= full.size()) throw ValidationError("error_table: rule index outside the full rule");
    if (rule.nodes.rows() != rule.count() || rule.weights.size() != rule.count())
        throw ValidationError("error_table: malformed sparse rule");

    Matrix errors(test.size(), family.K);
    parallel_for(test.size(), [&](Index m) {
        const Vector mu = test.params.row(m).transpose();
        for (int k = 0; k < family.K; ++k) {
            double full_sum = 0.0;
            for (Index i = 0; i < full.size(); ++i) {
                const double v = family.eval(k, full.nodes.row(i).transpose(), mu);
                if (!std::isfinite(v)) throw NumericalError("error_table: non-finite integrand value");
                full_sum += full.weights[i] * v;
            }
            double sparse_sum = 0.0;
            for (Index j = 0; j < rule.count(); ++j) {
                const double v = family.eval(k, rule.nodes.row(j).transpose(), mu);
                if (!std::isfinite(v)) throw NumericalError("error_table: non-finite integrand value");
                sparse_sum += rule.weights[j] * v;
            }
            errors(m, k) = std::abs(full_sum - sparse_sum);
        }
    });
    return errors;
}

double empirical_error(const SparseRule& rule, const FunctionFamily& family, const FullRule& full,
                       const TrainingSet& test) {
    const Matrix errors = error_table(rule, family, full, test);
    return errors.size() ? errors.maxCoeff() : 0.0;
}

double estimate_lipschitz(const FunctionFamily& family, const FullRule& full, const TrainingSet& train) {
    family.validate();
    train.validate();
    if (train.dim() != family.param_dim) throw ValidationError("estimate_lipschitz: parameter dimension mismatch");
    const Index n_train = train.size();
    double best = 0.0;
    for (int k = 0; k < family.K; ++k) {
        Matrix values(n_train, full.size());
        parallel_for(n_train, [&](Index m) {
            const Vector mu = train.params.row(m).transpose();
            for (Index i = 0; i < full.size(); ++i)
                values(m, i) = family.eval(k, full.nodes.row(i).transpose(), mu);
        });
        for (Index a = 0; a < n_train; ++a) {
            for (Index b = a + 1; b < n_train; ++b) {
                const double dist = (train.params.row(a) - train.params.row(b)).norm();
                if (dist == 0.0) continue;
                const double sup = (values.row(a) - values.row(b)).cwiseAbs().maxCoeff();
                best = std::max(best, sup / dist);
            }
        }
    }
    return best;
}

}  // namespace sparsequad::diagnostics
