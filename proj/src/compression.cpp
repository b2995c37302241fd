#include "sparsequad/compression.hpp"

#include "sparsequad/csv_io.hpp"
#include "sparsequad/errors.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace sparsequad {

Index select_rank(const Eigen::Ref<const Vector>& singulars, double eps2) {
    const Index n = singulars.size();
    if (n == 0) throw ValidationError("select_rank: empty spectrum");
    if (!(eps2 >= 0.0 && eps2 < 1.0)) throw ValidationError("select_rank: eps2 must lie in [0, 1)");
    for (Index i = 0; i < n; ++i) {
        if (!(singulars[i] >= 0.0) || !std::isfinite(singulars[i]))
            throw ValidationError("select_rank: singular values must be finite and non-negative");
        if (i > 0 && singulars[i] > singulars[i - 1])
            throw ValidationError("select_rank: singular values must be descending");
    }
    // Tail sums accumulated from the small end so that eps2 = 0 is decided by
    // exact zeros rather than by the rounding of 1 - kept / total.
    Vector tail(n + 1);
    tail[n] = 0.0;
    for (Index i = n - 1; i >= 0; --i) tail[i] = tail[i + 1] + singulars[i] * singulars[i];
    const double total = tail[0];
    if (!(total > 0.0)) throw NumericalError("select_rank: all singular values are zero (degenerate dataset)");
    for (Index r = 1; r <= n; ++r)
        if (tail[r] <= eps2 * total) return r;
    return n;
}

CompressedSystem compress(const ConstraintSystem& system, double eps2) {
    if (!system.A.allFinite() || !system.b.allFinite())
        throw NumericalError("compress: constraint system has non-finite entries");
    if (system.A.cols() != system.full_weights.size() || system.A.rows() != system.b.size())
        throw ValidationError("compress: inconsistent constraint system dimensions");

    // A = P S Q^T, hence A^T = Q S P^T: the left vectors of A^T are Q.
    Eigen::BDCSVD<Matrix> svd(system.A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericalError("compress: SVD failed");
    Vector sigma = svd.singularValues();
    if (!sigma.allFinite()) throw NumericalError("compress: SVD produced non-finite singular values");

    Vector guarded = sigma;
    const double cutoff = kRankGuard * (sigma.size() ? sigma[0] : 0.0);
    for (Index i = 0; i < guarded.size(); ++i)
        if (guarded[i] < cutoff) guarded[i] = 0.0;

    const Index rank = select_rank(guarded, eps2);

    CompressedSystem out;
    out.rank = rank;
    out.all_singulars = sigma;
    out.kept_singulars = sigma.head(rank);
    out.tail_energy = sigma.tail(sigma.size() - rank).squaredNorm();
    out.modes = svd.matrixV().leftCols(rank);
    out.data_basis = svd.matrixU().leftCols(rank);
    out.B = out.kept_singulars.asDiagonal() * out.modes.transpose();
    out.c = out.data_basis.transpose() * system.b;
    out.full_weights = system.full_weights;
    return out;
}

CompressedSystem identity_projection(const ConstraintSystem& system) {
    CompressedSystem out;
    out.B = system.A;
    out.c = system.b;
    out.rank = system.A.rows();
    out.full_weights = system.full_weights;
    return out;
}

Matrix snapshot_projections(const ConstraintSystem& system, const CompressedSystem& compressed) {
    if (!compressed.is_projection())
        throw ValidationError("snapshot_projections: system was not compressed (no modes)");
    if (compressed.modes.rows() != system.cols())
        throw ValidationError("snapshot_projections: mode length does not match node count");
    const Index n_snap = static_cast<Index>(system.K) * system.n_train;
    return system.A.topRows(n_snap) * compressed.modes;
}

void write_compressed_csv(const std::filesystem::path& dir, const std::string& stem,
                          const CompressedSystem& compressed) {
    write_matrix_csv(dir / (stem + "_B.csv"), compressed.B);
    write_matrix_csv(dir / (stem + "_c.csv"), compressed.c);
    write_matrix_csv(dir / (stem + "_singulars.csv"), compressed.kept_singulars);
}

}  // namespace sparsequad
