#include "doctest.h"

#include "sparsequad/csv_io.hpp"
#include "sparsequad/dataset.hpp"
#include "sparsequad/errors.hpp"

#include "oracles.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace sparsequad;

namespace {

FunctionFamily linear_family() {
    FunctionFamily f;
    f.K = 1;
    f.param_dim = 1;
    f.domain_measure = 1.0;
    f.eval = [](int, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& mu) { return mu[0] * x[0]; };
    return f;
}

TrainingSet params_1d(std::initializer_list<double> values) {
    TrainingSet t;
    t.params.resize(static_cast<Index>(values.size()), 1);
    Index i = 0;
    for (double v : values) t.params(i++, 0) = v;
    return t;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("assemble_system on mu*x with the three-point trapezoid rule") {
    const FullRule rule = trapezoid_rule(0.0, 1.0, 3);
    CHECK(rule.weights[0] == 0.25);
    CHECK(rule.weights[1] == 0.5);
    CHECK(rule.weights[2] == 0.25);

    const ConstraintSystem sys = assemble_system(linear_family(), rule, params_1d({1.0, 2.0}));
    REQUIRE(sys.rows() == 3);
    REQUIRE(sys.cols() == 3);
    CHECK(sys.measure_row_index == 2);
    CHECK(sys.A.row(2) == Eigen::RowVector3d(1, 1, 1));

    // Direct summation: sum_i w_i mu x_i.
    for (int m = 0; m < 2; ++m) {
        const double mu = m + 1.0;
        double expected = 0.0;
        for (Index i = 0; i < 3; ++i) expected += rule.weights[i] * mu * rule.nodes(i, 0);
        CHECK(sys.b[m] == doctest::Approx(expected).epsilon(1e-15));
    }
    CHECK(sys.b[0] == doctest::Approx(0.5));
    CHECK(sys.b[1] == doctest::Approx(1.0));
    CHECK(sys.b[2] == 1.0);
}

TEST_CASE("constant family gives all-ones rows and measure right-hand sides") {
    FunctionFamily f;
    f.K = 2;
    f.param_dim = 1;
    f.domain_measure = 3.0;
    f.eval = [](int, const Eigen::Ref<const Vector>&, const Eigen::Ref<const Vector>&) { return 1.0; };
    const FullRule rule = trapezoid_rule(-1.0, 2.0, 7);
    const ConstraintSystem sys = assemble_system(f, rule, params_1d({0.1, 0.2, 0.3}));
    CHECK(sys.rows() == 2 * 3 + 1);
    CHECK((sys.A.array() == 1.0).all());
    for (Index r = 0; r < sys.rows(); ++r) CHECK(sys.b[r] == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("b rows agree with full_integrals in k-major order") {
    FunctionFamily f;
    f.K = 3;
    f.param_dim = 2;
    f.domain_measure = 2.0;
    f.eval = [](int k, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& mu) {
        return std::cos((k + 1) * mu[0] * x[0]) + mu[1] * x[0] * x[0];
    };
    const FullRule rule = trapezoid_rule(0.0, 2.0, 31);
    const TrainingSet train = tensor_grid(Eigen::Vector2d(0.0, 1.0), Eigen::Vector2d(1.0, 2.0), {3, 2});
    const ConstraintSystem sys = assemble_system(f, rule, train);
    const Matrix I = full_integrals(f, rule, train);
    REQUIRE(sys.rows() == 3 * 6 + 1);
    for (int k = 0; k < 3; ++k)
        for (Index m = 0; m < train.size(); ++m) CHECK(sys.b[sys.row_of(k, m)] == I(k, m));
}

TEST_CASE("full_integrals against analytic antiderivatives") {
    FunctionFamily one;
    one.domain_measure = 1.0;
    one.eval = [](int, const Eigen::Ref<const Vector>&, const Eigen::Ref<const Vector>&) { return 1.0; };
    const Matrix ones = full_integrals(one, trapezoid_rule(0.0, 1.0, 5), params_1d({0.0, 3.0}));
    CHECK(ones(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(ones(0, 1) == doctest::Approx(1.0).epsilon(1e-15));

    FunctionFamily sq = one;
    sq.eval = [](int, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>&) { return x[0] * x[0]; };
    const double x2 = full_integrals(sq, trapezoid_rule(0.0, 1.0, 1201), params_1d({0.0}))(0, 0);
    CHECK(std::abs(x2 - 1.0 / 3.0) <= 1e-6);

    FunctionFamily sine;
    sine.domain_measure = std::numbers::pi;
    sine.eval = [](int, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& mu) {
        return mu[0] * std::sin(x[0]);
    };
    // mu * (1 - cos(pi)) = 2 mu
    const double s = full_integrals(sine, trapezoid_rule(0.0, std::numbers::pi, 4001), params_1d({2.0}))(0, 0);
    CHECK(std::abs(s - 4.0) <= 1e-6);
}

TEST_CASE("A times the full weights reproduces b row by row") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        std::uniform_int_distribution<int> kd(1, 3), md(1, 5), nd(2, 60);
        FunctionFamily f;
        f.K = kd(rng);
        f.param_dim = 1;
        f.domain_measure = 1.5;
        f.eval = [](int k, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& mu) {
            return std::exp(-mu[0] * x[0]) * std::pow(x[0], k) - 0.3;
        };
        const Index n_train = md(rng);
        TrainingSet t;
        t.params = oracle::random_positive(rng, n_train, 0.0, 5.0);
        const FullRule rule = trapezoid_rule(0.0, 1.5, nd(rng));
        const ConstraintSystem sys = assemble_system(f, rule, t);
        CHECK(sys.rows() == f.K * n_train + 1);
        const Vector Aw = sys.A * sys.full_weights;
        for (Index r = 0; r < sys.rows(); ++r)
            CHECK(std::abs(Aw[r] - sys.b[r]) <= 1e-12 * std::max(1.0, std::abs(sys.b[r])));
    }
}

TEST_CASE("assembly rejects bad inputs with locations") {
    const FullRule rule = trapezoid_rule(0.0, 1.0, 4);
    TrainingSet two_d;
    two_d.params = Matrix::Zero(2, 2);
    CHECK_THROWS_AS(assemble_system(linear_family(), rule, two_d), ValidationError);

    FunctionFamily bad = linear_family();
    bad.eval = [](int, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& mu) {
        return (mu[0] > 1.5 && x[0] > 0.5) ? std::nan("") : 1.0;
    };
    try {
        assemble_system(bad, rule, params_1d({1.0, 2.0}));
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("k=0, m=1, i=2") != std::string::npos);
    }
    CHECK_THROWS_AS(full_integrals(bad, rule, params_1d({2.0})), NumericalError);

    FullRule negative = rule;
    negative.weights[1] = -0.1;
    negative.weights[2] += 0.1 + 1.0 / 3.0;
    CHECK_THROWS_AS(assemble_system(linear_family(), negative, params_1d({1.0})), ValidationError);

    FullRule wrong_measure = rule;
    wrong_measure.weights *= 2.0;
    CHECK_THROWS_AS(assemble_system(linear_family(), wrong_measure, params_1d({1.0})), ValidationError);

    TrainingSet boxed = params_1d({0.5, 3.0});
    Matrix box(2, 1);
    box << 0.0, 1.0;
    boxed.box = box;
    CHECK_THROWS_AS(boxed.validate(), ValidationError);
}

TEST_CASE("tensor grid ordering and endpoints") {
    const TrainingSet g = tensor_grid(Eigen::Vector2d(0.0, 10.0), Eigen::Vector2d(1.0, 20.0), {2, 3});
    REQUIRE(g.size() == 6);
    CHECK(g.params(0, 0) == 0.0);
    CHECK(g.params(0, 1) == 10.0);
    CHECK(g.params(1, 1) == 15.0);
    CHECK(g.params(2, 1) == 20.0);
    CHECK(g.params(3, 0) == 1.0);
    CHECK_NOTHROW(g.validate());
}

TEST_CASE("assembly does not depend on the thread count") {
    FunctionFamily f = linear_family();
    f.K = 2;
    f.eval = [](int k, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& mu) {
        return std::sin((k + 1) * mu[0] * x[0]);
    };
    const FullRule rule = trapezoid_rule(0.0, 1.0, 101);
    TrainingSet t;
    t.params = Eigen::VectorXd::LinSpaced(37, 0.1, 9.0);
    setenv("SPARSEQUAD_THREADS", "1", 1);
    const ConstraintSystem serial = assemble_system(f, rule, t);
    setenv("SPARSEQUAD_THREADS", "4", 1);
    const ConstraintSystem threaded = assemble_system(f, rule, t);
    unsetenv("SPARSEQUAD_THREADS");
    CHECK(serial.A == threaded.A);
    CHECK(serial.b == threaded.b);
}

TEST_CASE("matrix CSV round trip is exact") {
    std::mt19937_64 rng(3);
    const Matrix m = oracle::random_matrix(rng, 5, 4) * 1e-7;
    std::stringstream ss;
    write_matrix_csv(ss, m);
    std::string header;
    std::getline(ss, header);
    CHECK(header == "5,4");
    ss.seekg(0);
    CHECK(read_matrix_csv(ss) == m);

    std::stringstream bad("2,2\n1,2\n3\n");
    CHECK_THROWS_AS(read_matrix_csv(bad), ValidationError);
    std::stringstream junk("1,1\nabc\n");
    CHECK_THROWS_AS(read_matrix_csv(junk), ValidationError);
}

}  // TEST_SUITE
