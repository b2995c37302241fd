#include "sparsequad/dataset.hpp"

#include "sparsequad/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <sstream>
#include <thread>

namespace sparsequad {

void FunctionFamily::validate() const {
    if (K < 1) throw ValidationError("function family: K must be >= 1");
    if (param_dim < 1) throw ValidationError("function family: param_dim must be >= 1");
    if (!(domain_measure > 0.0) || !std::isfinite(domain_measure))
        throw ValidationError("function family: domain measure must be positive and finite");
    if (!eval) throw ValidationError("function family: missing evaluator");
}

void FullRule::validate(double expected_measure) const {
    if (weights.size() < 1) throw ValidationError("full rule: no nodes");
    if (nodes.rows() != weights.size())
        throw ValidationError("full rule: node count does not match weight count");
    for (Index i = 0; i < weights.size(); ++i) {
        if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
            std::ostringstream os;
            os << "full rule: weight " << i << " is negative or non-finite (" << weights[i] << ")";
            throw ValidationError(os.str());
        }
    }
    const double total = weights.sum();
    if (std::abs(total - expected_measure) > 1e-12 * std::abs(expected_measure)) {
        std::ostringstream os;
        os.precision(17);
        os << "full rule: weights sum to " << total << ", domain measure is " << expected_measure;
        throw ValidationError(os.str());
    }
}

void TrainingSet::validate() const {
    if (params.rows() < 1) throw ValidationError("training set: empty");
    if (params.cols() < 1) throw ValidationError("training set: zero-dimensional parameters");
    if (!box) return;
    if (box->rows() != 2 || box->cols() != params.cols())
        throw ValidationError("training set: box must be 2 x param_dim");
    for (Index m = 0; m < params.rows(); ++m) {
        for (Index j = 0; j < params.cols(); ++j) {
            const double v = params(m, j);
            if (!(v >= (*box)(0, j) && v <= (*box)(1, j))) {
                std::ostringstream os;
                os << "training set: parameter " << m << " coordinate " << j << " = " << v
                   << " lies outside [" << (*box)(0, j) << ", " << (*box)(1, j) << "]";
                throw ValidationError(os.str());
            }
        }
    }
}

unsigned worker_count() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("SPARSEQUAD_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1) return static_cast<unsigned>(std::min<long>(v, 1024));
    }
    return hw;
}

void parallel_for(Index n, const std::function<void(Index)>& body) {
    if (n <= 0) return;
    const Index workers = std::min<Index>(worker_count(), n);
    if (workers == 1) {
        for (Index i = 0; i < n; ++i) body(i);
        return;
    }
    // Contiguous chunks; each stops at its first failure, so the smallest
    // failing index over all chunks is the one a serial loop would hit.
    std::vector<std::exception_ptr> errors(workers);
    std::vector<Index> error_at(workers, n);
    std::vector<std::thread> threads;
    threads.reserve(workers);
    const Index chunk = (n + workers - 1) / workers;
    for (Index t = 0; t < workers; ++t) {
        threads.emplace_back([&, t] {
            const Index begin = t * chunk;
            const Index end = std::min(n, begin + chunk);
            for (Index i = begin; i < end; ++i) {
                try {
                    body(i);
                } catch (...) {
                    errors[t] = std::current_exception();
                    error_at[t] = i;
                    return;
                }
            }
        });
    }
    for (auto& th : threads) th.join();
    const auto first = std::min_element(error_at.begin(), error_at.end());
    if (*first < n) std::rethrow_exception(errors[first - error_at.begin()]);
}

namespace {

void check_inputs(const FunctionFamily& family, const FullRule& rule, const TrainingSet& params) {
    family.validate();
    params.validate();
    if (params.dim() != family.param_dim) {
        std::ostringstream os;
        os << "parameter dimension mismatch: family expects " << family.param_dim
           << ", training set has " << params.dim();
        throw ValidationError(os.str());
    }
    rule.validate(family.domain_measure);
}

// Fills out.row(row_offset + k * Ntrain + m) with f_k(x_i; mu_m).
void evaluate_snapshots(const FunctionFamily& family, const FullRule& rule,
                        const TrainingSet& params, Matrix& out) {
    const Index n_train = params.size();
    const Index n_nodes = rule.size();
    parallel_for(static_cast<Index>(family.K) * n_train, [&](Index row) {
        const int k = static_cast<int>(row / n_train);
        const Index m = row % n_train;
        const Vector mu = params.params.row(m).transpose();
        for (Index i = 0; i < n_nodes; ++i) {
            const Vector x = rule.nodes.row(i).transpose();
            const double v = family.eval(k, x, mu);
            if (!std::isfinite(v)) {
                std::ostringstream os;
                os << "non-finite integrand value at (k=" << k << ", m=" << m << ", i=" << i << ")";
                throw NumericalError(os.str());
            }
            out(row, i) = v;
        }
    });
}

}  // namespace

Matrix full_integrals(const FunctionFamily& family, const FullRule& rule,
                      const TrainingSet& params) {
    check_inputs(family, rule, params);
    Matrix snapshots(static_cast<Index>(family.K) * params.size(), rule.size());
    evaluate_snapshots(family, rule, params, snapshots);
    const Vector flat = snapshots * rule.weights;
    Matrix out(family.K, params.size());
    for (int k = 0; k < family.K; ++k)
        for (Index m = 0; m < params.size(); ++m) out(k, m) = flat[k * params.size() + m];
    return out;
}

ConstraintSystem assemble_system(const FunctionFamily& family, const FullRule& rule,
                                 const TrainingSet& train) {
    check_inputs(family, rule, train);
    ConstraintSystem sys;
    sys.K = family.K;
    sys.n_train = train.size();
    const Index rows = static_cast<Index>(family.K) * train.size() + 1;
    sys.A.resize(rows, rule.size());
    evaluate_snapshots(family, rule, train, sys.A);
    sys.measure_row_index = rows - 1;
    sys.A.row(sys.measure_row_index).setOnes();
    sys.b = sys.A * rule.weights;
    sys.b[sys.measure_row_index] = family.domain_measure;
    sys.full_weights = rule.weights;
    return sys;
}

FullRule trapezoid_rule(double a, double b, Index n) {
    if (n < 2) throw ValidationError("trapezoid rule needs at least 2 nodes");
    if (!(b > a)) throw ValidationError("trapezoid rule needs a < b");
    FullRule rule;
    rule.nodes.resize(n, 1);
    rule.weights.resize(n);
    const double h = (b - a) / static_cast<double>(n - 1);
    for (Index i = 0; i < n; ++i) {
        rule.nodes(i, 0) = (i == n - 1) ? b : a + h * static_cast<double>(i);
        rule.weights[i] = h;
    }
    rule.weights[0] = rule.weights[n - 1] = 0.5 * h;
    return rule;
}

TrainingSet tensor_grid(const Vector& lo, const Vector& hi, const std::vector<Index>& per_dim) {
    const Index p = lo.size();
    if (p < 1 || hi.size() != p || static_cast<Index>(per_dim.size()) != p)
        throw ValidationError("tensor grid: inconsistent dimensions");
    Index total = 1;
    for (Index j = 0; j < p; ++j) {
        if (per_dim[j] < 1) throw ValidationError("tensor grid: need at least one point per dimension");
        if (hi[j] < lo[j]) throw ValidationError("tensor grid: empty interval");
        total *= per_dim[j];
    }
    TrainingSet set;
    set.params.resize(total, p);
    for (Index r = 0; r < total; ++r) {
        Index rem = r;
        for (Index j = p - 1; j >= 0; --j) {
            const Index i = rem % per_dim[j];
            rem /= per_dim[j];
            const double v = per_dim[j] == 1
                                 ? lo[j]
                                 : lo[j] + (hi[j] - lo[j]) * static_cast<double>(i) /
                                               static_cast<double>(per_dim[j] - 1);
            set.params(r, j) = (i == per_dim[j] - 1) ? hi[j] : v;
        }
    }
    Matrix box(2, p);
    box.row(0) = lo.transpose();
    box.row(1) = hi.transpose();
    set.box = box;
    return set;
}

}  // namespace sparsequad
