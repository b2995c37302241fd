#include "doctest.h"

#include "sparsequad/compression.hpp"
#include "sparsequad/csv_io.hpp"
#include "sparsequad/errors.hpp"

#include "oracles.hpp"

#include <filesystem>

using namespace sparsequad;

namespace {

// A system with a given A; the "full weights" are any positive vector, b = A w.
ConstraintSystem system_from(const Matrix& A, const Vector& w) {
    ConstraintSystem s;
    s.A = A;
    s.full_weights = w;
    s.b = A * w;
    s.measure_row_index = A.rows() - 1;
    s.K = 1;
    s.n_train = A.rows() - 1;
    return s;
}

}  // namespace

TEST_SUITE("compression") {

TEST_CASE("select_rank examples") {
    CHECK(select_rank(Eigen::Vector3d(2, 1, 1e-8), 1e-6) == 2);
    CHECK(select_rank(Eigen::Vector3d(2, 1, 1e-8), 0.0) == 3);
    CHECK(select_rank(Eigen::Vector4d(3, 2, 0, 0), 0.0) == 2);
    Vector single(1);
    single << 5.0;
    CHECK(select_rank(single, 0.0) == 1);
    CHECK(select_rank(single, 0.9) == 1);

    CHECK_THROWS_AS(select_rank(Eigen::Vector2d(0, 0), 0.1), NumericalError);
    CHECK_THROWS_AS(select_rank(Eigen::Vector2d(1, 2), 0.1), ValidationError);
    CHECK_THROWS_AS(select_rank(Eigen::Vector2d(2, 1), 1.0), ValidationError);
    CHECK_THROWS_AS(select_rank(Eigen::Vector2d(2, 1), -0.1), ValidationError);
}

TEST_CASE("select_rank agrees with the cumulative-sum oracle and is monotone in eps2") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> len(1, 30);
    std::uniform_real_distribution<double> logu(-12.0, 0.0);
    for (int trial = 0; trial < 100; ++trial) {
        Vector s(len(rng));
        for (Index i = 0; i < s.size(); ++i) s[i] = std::pow(10.0, 3.0 * logu(rng) / 4.0);
        std::sort(s.begin(), s.end(), std::greater<>());
        const double eps2 = std::pow(10.0, logu(rng));
        CHECK(select_rank(s, eps2) == oracle::cumulative_rank(s, eps2));
        CHECK(select_rank(s, eps2 / 10.0) >= select_rank(s, eps2));
    }
}

TEST_CASE("eps2 = 0 on full-rank A is an orthogonal re-parametrization") {
    std::mt19937_64 rng(5);
    const Matrix A = oracle::random_matrix(rng, 4, 9);
    const Vector w = oracle::random_positive(rng, 9);
    const ConstraintSystem sys = system_from(A, w);
    const CompressedSystem cs = compress(sys, 0.0);
    REQUIRE(cs.rank == 4);
    CHECK(cs.tail_energy == doctest::Approx(0.0));

    // Same solution set: B = V^T A with V orthogonal, so Ay = b <=> By = c.
    for (int t = 0; t < 5; ++t) {
        const Vector y = A.completeOrthogonalDecomposition().solve(sys.b)
                         + (Matrix::Identity(9, 9) - A.completeOrthogonalDecomposition().pseudoInverse() * A)
                               * oracle::random_matrix(rng, 9, 1);
        CHECK((A * y - sys.b).norm() <= 1e-10 * sys.b.norm());
        CHECK((cs.B * y - cs.c).norm() <= 1e-10 * cs.c.norm());
    }
    for (int t = 0; t < 5; ++t) {
        const Vector y = oracle::random_matrix(rng, 9, 1);
        CHECK((A * y - sys.b).norm() == doctest::Approx((cs.B * y - cs.c).norm()).epsilon(1e-10));
    }
}

TEST_CASE("duplicate rows reduce the rank (Gram determinant oracle)") {
    Matrix A(3, 3);
    A << 1, 2, 3,
         1, 2, 3,
         1, 1, 1;
    const ConstraintSystem sys = system_from(A, Eigen::Vector3d(0.2, 0.3, 0.5));
    const CompressedSystem cs = compress(sys, 0.0);
    CHECK(oracle::gram_rank(A) == 2);
    CHECK(cs.rank == 2);
    CHECK(cs.rows() == 2);
}

TEST_CASE("full weights stay feasible and the energy identity holds") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        std::uniform_int_distribution<int> rd(2, 12), nd(3, 30);
        const Index rows = rd(rng), cols = nd(rng);
        const Matrix A = oracle::random_matrix(rng, rows, cols);
        const Vector w = oracle::random_positive(rng, cols);
        const ConstraintSystem sys = system_from(A, w);
        const double eps2 = std::pow(10.0, -1.0 - trial % 6);
        const CompressedSystem cs = compress(sys, eps2);
        CHECK((cs.B * w - cs.c).norm() <= 1e-10 * std::max(1.0, cs.c.norm()));
        CHECK(cs.kept_singulars.squaredNorm() + cs.tail_energy
              == doctest::Approx(A.squaredNorm()).epsilon(1e-10));
        CHECK(cs.modes.rows() == cols);
        CHECK(cs.modes.cols() == cs.rank);
        CHECK((cs.modes.transpose() * cs.modes - Matrix::Identity(cs.rank, cs.rank)).norm() < 1e-10);
    }
}

TEST_CASE("residual splits exactly into kept and discarded parts") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix A = oracle::random_matrix(rng, 7, 15) * oracle::random_positive(rng, 15).asDiagonal();
        const ConstraintSystem sys = system_from(A, oracle::random_positive(rng, 15));
        const CompressedSystem cs = compress(sys, 0.05);
        const Vector y = oracle::random_matrix(rng, 15, 1);
        const Vector r = A * y - sys.b;
        // Tail projection computed independently from a fresh SVD of A.
        Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeFullU);
        const Matrix Ut = svd.matrixU().rightCols(A.rows() - cs.rank);
        const double tail = (Ut.transpose() * r).squaredNorm();
        CHECK(r.squaredNorm() == doctest::Approx((cs.B * y - cs.c).squaredNorm() + tail).epsilon(1e-10));
    }
}

TEST_CASE("compress rejects non-finite input") {
    Matrix A = Matrix::Ones(2, 3);
    A(0, 1) = std::numeric_limits<double>::infinity();
    ConstraintSystem sys;
    sys.A = A;
    sys.b = Vector::Ones(2);
    sys.full_weights = Vector::Ones(3);
    sys.measure_row_index = 1;
    CHECK_THROWS_AS(compress(sys, 0.1), NumericalError);
}

TEST_CASE("identity projection and CSV export") {
    std::mt19937_64 rng(2);
    const ConstraintSystem sys = system_from(oracle::random_matrix(rng, 3, 5), oracle::random_positive(rng, 5));
    const CompressedSystem id = identity_projection(sys);
    CHECK(id.B == sys.A);
    CHECK(id.c == sys.b);
    CHECK_FALSE(id.is_projection());

    const CompressedSystem cs = compress(sys, 0.0);
    const auto dir = std::filesystem::temp_directory_path() / "sparsequad_test_compress";
    std::filesystem::create_directories(dir);
    write_compressed_csv(dir, "sys", cs);
    CHECK(read_matrix_csv(dir / "sys_B.csv") == cs.B);
    CHECK(read_vector_csv(dir / "sys_c.csv") == cs.c);
    std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
