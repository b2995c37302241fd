#pragma once

#include "sparsequad/dataset.hpp"

#include <filesystem>

namespace sparsequad {

/// Rank-R projection of Aw = b onto the leading singular directions of A^T.
///
/// With A^T = U S V^T, the projected system is B y = c where
/// B = S(1:R,1:R) U(:,1:R)^T and c = V(:,1:R)^T b. Equivalently B = V_R^T A,
/// so every exact solution of the full system (in particular the full-rule
/// weights) solves the projected one.
struct CompressedSystem {
    Matrix B;                // R x N
    Vector c;                // R
    Vector kept_singulars;   // sigma_1 >= ... >= sigma_R > 0
    Vector all_singulars;    // full spectrum of A^T, descending
    double tail_energy = 0;  // sum_{i > R} sigma_i^2
    Index rank = 0;
    Matrix modes;            // N x R, left singular vectors of A^T (zeta_n at the nodes)
    Matrix data_basis;       // rows(A) x R, right singular vectors of A^T
    Vector full_weights;

    Index rows() const { return B.rows(); }
    Index cols() const { return B.cols(); }
    bool is_projection() const { return modes.size() > 0; }
};

/// Singular values below this fraction of sigma_1 count as zero for rank purposes.
inline constexpr double kRankGuard = 1e-14;

/// Smallest R with (sum_{i<=R} s_i^2) / (sum_i s_i^2) >= 1 - eps2.
Index select_rank(const Eigen::Ref<const Vector>& singulars, double eps2);

CompressedSystem compress(const ConstraintSystem& system, double eps2);

/// The unprojected system wrapped as B = A, c = b (no SVD, no modes).
CompressedSystem identity_projection(const ConstraintSystem& system);

/// <phi_{k,m}, zeta_n> for every snapshot row of A (the measure row excluded):
/// a (K * Ntrain) x R matrix in the row order of the constraint system.
Matrix snapshot_projections(const ConstraintSystem& system, const CompressedSystem& compressed);

/// Writes <stem>_B.csv, <stem>_c.csv and <stem>_singulars.csv into dir.
void write_compressed_csv(const std::filesystem::path& dir, const std::string& stem,
                          const CompressedSystem& compressed);

}  // namespace sparsequad
