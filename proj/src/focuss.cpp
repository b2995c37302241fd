#include "sparsequad/focuss.hpp"

#include "sparsequad/errors.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace sparsequad::focuss {

void FocussConfig::validate() const {
    auto bad = [](const std::string& what) { throw ValidationError("focuss config: " + what); };
    if (!(q > 0.5 && q < 1.0)) bad("q must lie in (0.5, 1)");
    if (!(eps1 >= 0.0) || !std::isfinite(eps1)) bad("eps1 must be finite and >= 0");
    if (max_iters < 1) bad("max_iters must be >= 1");
    if (!(conv_tol > 0.0 && conv_tol < 1.0)) bad("conv_tol must lie in (0, 1)");
    if (!(prune_rel > 0.0 && prune_rel < 1.0)) bad("prune_rel must lie in (0, 1)");
    if (!(svd_cutoff > 0.0 && svd_cutoff < 1.0)) bad("svd_cutoff must lie in (0, 1)");
    if (!(support_rank_tol > 0.0 && support_rank_tol < 1.0)) bad("support_rank_tol must lie in (0, 1)");
}

SvdFactors factorize(const Eigen::Ref<const Matrix>& m, double svd_cutoff) {
    if (!m.allFinite()) throw NumericalError("focuss: non-finite entries in B W");
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericalError("focuss: SVD of B W failed");
    const Vector& s = svd.singularValues();
    Index r = 0;
    if (s.size() > 0 && s[0] > 0.0) {
        const double cut = svd_cutoff * s[0];
        while (r < s.size() && s[r] > cut) ++r;
    }
    SvdFactors f;
    f.U = svd.matrixU().leftCols(r);
    f.sigma = s.head(r);
    f.V = svd.matrixV().leftCols(r);
    return f;
}

namespace {

// Residual from precomputed coefficients beta = U^T c and ||c_perp||^2.
double residual_from(const Vector& sigma, const Vector& beta, double perp_sq, double lambda) {
    double acc = perp_sq;
    for (Index n = 0; n < sigma.size(); ++n) {
        // lambda / (sigma^2 + lambda), written to stay exact at lambda = 0 and +inf.
        const double filter = 1.0 / (1.0 + sigma[n] * sigma[n] / lambda);
        const double t = filter * beta[n];
        acc += t * t;
    }
    return std::sqrt(acc);
}

void check_lambda(double lambda) {
    if (!(lambda >= 0.0)) throw ValidationError("focuss: lambda must be >= 0");
}

}  // namespace

double residual_norm_for_lambda(const SvdFactors& svd, const Eigen::Ref<const Vector>& c, double lambda) {
    check_lambda(lambda);
    if (c.size() != svd.U.rows()) throw ValidationError("residual_norm_for_lambda: c has the wrong length");
    const Vector beta = svd.U.transpose() * c;
    const double perp_sq = (c - svd.U * beta).squaredNorm();
    return residual_from(svd.sigma, beta, perp_sq, lambda);
}

LambdaCalibration calibrate_lambda(const SvdFactors& svd, const Eigen::Ref<const Vector>& c, double eps1) {
    if (!(eps1 >= 0.0) || !std::isfinite(eps1)) throw ValidationError("calibrate_lambda: eps1 must be finite and >= 0");
    if (c.size() != svd.U.rows()) throw ValidationError("calibrate_lambda: c has the wrong length");

    const Vector beta = svd.U.transpose() * c;
    const double perp_sq = (c - svd.U * beta).squaredNorm();
    const double c_norm = c.norm();
    auto residual = [&](double lambda) { return residual_from(svd.sigma, beta, perp_sq, lambda); };

    LambdaCalibration out;
    const double floor_residual = std::sqrt(perp_sq);
    if (eps1 == 0.0 || floor_residual >= eps1) {
        out.lambda = 0.0;
        out.residual = floor_residual;
        out.saturated = floor_residual > eps1;
        return out;
    }

    const double scale = svd.sigma.size() ? svd.sigma[0] * svd.sigma[0] : 1.0;
    double hi = kLambdaBracketHigh * scale;
    if (eps1 >= c_norm) {
        out.lambda = hi;
        out.residual = residual(hi);
        out.constraints_dropped = true;
        return out;
    }
    if (residual(hi) <= eps1) {
        out.lambda = hi;
        out.residual = residual(hi);
        return out;
    }

    // Invariant: residual(lo) <= eps1 < residual(hi).
    double lo = kLambdaBracketLow * scale;
    bool geometric = true;
    if (residual(lo) > eps1) {
        hi = lo;
        lo = 0.0;
        geometric = false;
    }
    const double tol = 1e-10 * eps1;
    double res_lo = residual(lo);
    for (int step = 0; step < 200 && eps1 - res_lo > tol; ++step) {
        const double mid = geometric ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
        if (!(mid > lo && mid < hi)) break;
        const double r = residual(mid);
        if (r <= eps1) {
            lo = mid;
            res_lo = r;
        } else {
            hi = mid;
        }
    }
    out.lambda = lo;
    out.residual = res_lo;
    return out;
}

Vector regularized_step(const SvdFactors& svd_of_bw, const Eigen::Ref<const Vector>& w_diag,
                        const Eigen::Ref<const Vector>& c, double lambda) {
    check_lambda(lambda);
    if (c.size() != svd_of_bw.U.rows() || w_diag.size() != svd_of_bw.V.rows())
        throw ValidationError("regularized_step: dimension mismatch");
    Vector coeff = svd_of_bw.U.transpose() * c;
    for (Index n = 0; n < coeff.size(); ++n) {
        const double s = svd_of_bw.sigma[n];
        // sigma / (sigma^2 + lambda); tends to 0 as lambda -> inf.
        coeff[n] *= std::isinf(lambda) ? 0.0 : s / (s * s + lambda);
    }
    Vector y_next = w_diag.cwiseProduct(svd_of_bw.V * coeff);
    if (!y_next.allFinite()) throw NumericalError("regularized_step: non-finite update");
    return y_next;
}

Vector regularized_step(const Eigen::Ref<const Matrix>& B, const Eigen::Ref<const Vector>& c,
                        const Eigen::Ref<const Vector>& y, double q, double lambda, double svd_cutoff) {
    if (B.rows() != c.size() || B.cols() != y.size()) throw ValidationError("regularized_step: dimension mismatch");
    if (y.size() > 0 && y.minCoeff() < 0.0) throw ValidationError("regularized_step: y must be non-negative");
    check_lambda(lambda);
    const Vector w_diag = y.array().pow(q).matrix();
    const SvdFactors f = factorize(B * w_diag.asDiagonal(), svd_cutoff);
    return regularized_step(f, w_diag, c, lambda);
}

Relaxation enforce_nonnegativity(const Eigen::Ref<const Vector>& y_new, const Eigen::Ref<const Vector>& y_prev) {
    if (y_new.size() != y_prev.size()) throw ValidationError("enforce_nonnegativity: length mismatch");
    if (y_prev.size() > 0 && y_prev.minCoeff() < 0.0)
        throw ValidationError("enforce_nonnegativity: previous iterate has a negative entry");

    Relaxation out;
    double alpha = 1.0;
    for (Index i = 0; i < y_new.size(); ++i) {
        if (y_new[i] < 0.0) alpha = std::min(alpha, y_prev[i] / (y_prev[i] - y_new[i]));
    }
    out.alpha = alpha;
    if (alpha == 1.0) {
        // A negative entry can still get here when y_prev_i / (y_prev_i - y_new_i)
        // rounds to 1; it is below rounding level relative to y_prev_i.
        out.y = y_new.cwiseMax(0.0);
        return out;
    }
    if (alpha <= 0.0) {
        out.alpha = 0.0;
        out.y = y_prev;
        out.stagnated = true;
        return out;
    }
    out.y = alpha * y_new + (1.0 - alpha) * y_prev;
    for (Index i = 0; i < out.y.size(); ++i) {
        if (y_new[i] < 0.0 && y_prev[i] / (y_prev[i] - y_new[i]) == alpha) out.y[i] = 0.0;
        if (out.y[i] < 0.0) out.y[i] = 0.0;
    }
    return out;
}

Vector reduce_support(const Eigen::Ref<const Matrix>& B, const Eigen::Ref<const Vector>& c,
                      const Eigen::Ref<const Vector>& y_in, double p, double rank_tol, double residual_limit) {
    if (B.cols() != y_in.size() || B.rows() != c.size()) throw ValidationError("reduce_support: dimension mismatch");
    Vector y = y_in;
    auto objective = [p](const Vector& v) { return v.array().pow(p).sum(); };
    while (true) {
        std::vector<Index> support;
        for (Index i = 0; i < y.size(); ++i)
            if (y[i] > 0.0) support.push_back(i);
        const Index k = static_cast<Index>(support.size());
        if (k < 2) return y;
        Matrix bs(B.rows(), k);
        Vector ys(k);
        for (Index j = 0; j < k; ++j) {
            bs.col(j) = B.col(support[j]);
            ys[j] = y[support[j]];
        }
        Eigen::JacobiSVD<Matrix> svd(bs, Eigen::ComputeFullV);
        const Vector& s = svd.singularValues();
        Index rank = 0;
        for (Index i = 0; i < s.size(); ++i)
            if (s[i] > rank_tol * s[0]) ++rank;
        if (rank >= k) return y;
        const Vector z = svd.matrixV().col(k - 1);

        // Largest steps along +z and -z that keep every weight non-negative.
        double t_up = std::numeric_limits<double>::infinity(), t_down = t_up;
        Index pin_up = -1, pin_down = -1;
        for (Index j = 0; j < k; ++j) {
            if (z[j] < 0.0 && ys[j] / -z[j] < t_up) {
                t_up = ys[j] / -z[j];
                pin_up = j;
            } else if (z[j] > 0.0 && ys[j] / z[j] < t_down) {
                t_down = ys[j] / z[j];
                pin_down = j;
            }
        }
        Vector best;
        Index pin = -1;
        double best_obj = std::numeric_limits<double>::infinity();
        for (int side = 0; side < 2; ++side) {
            const Index pj = side == 0 ? pin_up : pin_down;
            if (pj < 0) continue;
            const double t = side == 0 ? t_up : -t_down;
            Vector cand = (ys + t * z).cwiseMax(0.0);
            cand[pj] = 0.0;
            const double obj = objective(cand);
            if (obj < best_obj) {
                best_obj = obj;
                best = std::move(cand);
                pin = pj;
            }
        }
        if (pin < 0) return y;

        Vector next = y;
        for (Index j = 0; j < k; ++j) next[support[j]] = best[j];
        if ((B * next - c).norm() > residual_limit) return y;
        y = std::move(next);
    }
}

namespace {

double row_residual_max(const Vector& r) { return r.size() ? r.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

SparseRule solve(const CompressedSystem& system, const FullRule& rule, const FocussConfig& config,
                 const IterationObserver& observer) {
    config.validate();
    const Matrix& B = system.B;
    const Vector& c = system.c;
    if (B.rows() != c.size()) throw ValidationError("focuss: B and c disagree on the row count");
    if (B.cols() != rule.size() || system.full_weights.size() != rule.size())
        throw ValidationError("focuss: system columns, initial weights and rule size must agree");
    if (!B.allFinite() || !c.allFinite()) throw NumericalError("focuss: non-finite system entries");

    Vector y = system.full_weights;
    if (y.size() == 0 || y.minCoeff() < 0.0 || !y.allFinite())
        throw ValidationError("focuss: initial weights must be finite and non-negative");

    SparseRule out;
    int zero_alpha_streak = 0;
    int it = 0;
    for (it = 1; it <= config.max_iters; ++it) {
        const Vector w_diag = y.array().pow(config.q).matrix();
        const SvdFactors f = factorize(B * w_diag.asDiagonal(), config.svd_cutoff);
        const LambdaCalibration cal = calibrate_lambda(f, c, config.eps1);
        out.saturated = out.saturated || cal.saturated;
        out.constraints_dropped = out.constraints_dropped || cal.constraints_dropped;
        out.lambda_history.push_back(cal.lambda);

        const Vector y_step = regularized_step(f, w_diag, c, cal.lambda);
        Relaxation relaxed = enforce_nonnegativity(y_step, y);
        if (!relaxed.y.allFinite()) throw NumericalError("focuss: non-finite iterate");

        const double y_norm = y.norm();
        const double change = y_norm > 0.0 ? (relaxed.y - y).norm() / y_norm : 0.0;
        y = std::move(relaxed.y);

        if (observer) {
            IterationRecord rec;
            rec.iteration = it;
            rec.y = &y;
            rec.lambda = cal.lambda;
            rec.alpha = relaxed.alpha;
            rec.residual = (B * y - c).norm();
            rec.relative_change = change;
            rec.saturated = cal.saturated;
            observer(rec);
        }

        zero_alpha_streak = relaxed.stagnated ? zero_alpha_streak + 1 : 0;
        if (zero_alpha_streak >= 2) {
            out.stagnated = true;
            out.warnings.push_back("non-negativity relaxation stagnated (alpha = 0 twice); returning last iterate");
            break;
        }
        if (change < config.conv_tol) {
            out.converged = true;
            break;
        }
    }
    out.iterations_used = std::min(it, config.max_iters);
    if (y.maxCoeff() <= 0.0) throw NumericalError("focuss: iterate collapsed to zero");

    // Prune; halve the threshold while the pruned weights break the residual target.
    const double limit = config.eps1 * (1.0 + 1e-8);
    if (config.reduce_support) {
        const double before = (B * y - c).norm();
        // each move may shift B y by rounding in |B| |y|
        const double rounding = 1e-12 * (c.norm() + (B.cwiseAbs() * y).norm());
        y = reduce_support(B, c, y, config.p(), config.support_rank_tol,
                           std::max(limit, before * (1.0 + 1e-10) + rounding));
    }
    const double unpruned_residual = (B * y - c).norm();
    double prune_rel = config.prune_rel;
    bool accepted = false;
    SparseRule extracted;
    for (int attempt = 0; attempt <= 10; ++attempt, prune_rel *= 0.5) {
        extracted = extract_rule(y, rule, prune_rel);
        const double res = (B * extracted.expand(y.size()) - c).norm();
        if (res <= limit || res <= unpruned_residual) {
            accepted = true;
            break;
        }
    }
    if (!accepted) {
        prune_rel = 0.0;
        extracted = extract_rule(y, rule, 0.0);
        out.warnings.push_back("pruning broke the residual target; kept every positive weight");
    }

    extracted.method = "focuss";
    extracted.iterations_used = out.iterations_used;
    extracted.lambda_history = std::move(out.lambda_history);
    extracted.converged = out.converged;
    extracted.saturated = out.saturated;
    extracted.stagnated = out.stagnated;
    extracted.constraints_dropped = out.constraints_dropped;
    extracted.warnings = std::move(out.warnings);
    extracted.prune_rel_used = accepted ? prune_rel : 0.0;

    const Vector residual = B * extracted.expand(y.size()) - c;
    extracted.residual_norm = residual.norm();
    extracted.max_row_residual = row_residual_max(residual);
    extracted.measure_deviation = std::abs(extracted.weights.sum() - system.full_weights.sum());
    if (extracted.residual_norm > limit && !extracted.saturated) {
        std::ostringstream os;
        os.precision(3);
        os << "residual " << extracted.residual_norm << " exceeds eps1 " << config.eps1;
        extracted.warnings.push_back(os.str());
    }
    if (extracted.count() > system.rows() + 2) {
        extracted.support_warning = true;
        std::ostringstream os;
        os << "support size " << extracted.count() << " exceeds rank " << system.rows() << " + 2";
        extracted.warnings.push_back(os.str());
    }
    return extracted;
}

}  // namespace sparsequad::focuss
