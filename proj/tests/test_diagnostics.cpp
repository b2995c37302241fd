#include "doctest.h"

#include "sparsequad/compression.hpp"
#include "sparsequad/diagnostics.hpp"
#include "sparsequad/errors.hpp"
#include "sparsequad/focuss.hpp"

#include "json.hpp"
#include "oracles.hpp"

#include <filesystem>
#include <fstream>

using namespace sparsequad;
using namespace sparsequad::diagnostics;

namespace {

TrainingSet points(std::initializer_list<std::initializer_list<double>> rows) {
    TrainingSet t;
    t.params.resize(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
    Index i = 0;
    for (const auto& r : rows) {
        Index j = 0;
        for (double v : r) t.params(i, j++) = v;
        ++i;
    }
    return t;
}

FunctionFamily smooth_family() {
    FunctionFamily f;
    f.K = 2;
    f.param_dim = 1;
    f.domain_measure = 1.0;
    f.eval = [](int k, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& mu) {
        return std::exp(-(k + 1) * mu[0] * x[0]);
    };
    return f;
}

}  // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("fill distance examples") {
    // max over probes of the distance to the nearest training point: the probe
    // at 0.5 is 0.5 away from both ends.
    const TrainingSet train = points({{0.0}, {1.0}});
    const TrainingSet probe = points({{0.0}, {0.25}, {0.5}, {0.75}, {1.0}});
    CHECK(fill_distance(train, probe) == 0.5);
    CHECK(fill_distance(points({{0.0}, {0.5}, {1.0}}), probe) == 0.25);
    CHECK(fill_distance(probe, train) == 0.0);
    CHECK(fill_distance(probe, probe) == 0.0);

    const TrainingSet centre = points({{0.5, 0.5}});
    const TrainingSet square = tensor_grid(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1), {50, 50});
    CHECK(fill_distance(centre, square) == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-14));

    CHECK_THROWS_AS(fill_distance(train, centre), ValidationError);
}

TEST_CASE("probe grid covers the training box") {
    TrainingSet train = tensor_grid(Eigen::Vector2d(0.2, 0.1), Eigen::Vector2d(2.0, 4.0), {4, 4});
    const TrainingSet probe = probe_grid(train, 50);
    CHECK(probe.size() == 2500);
    CHECK(probe.params.col(0).minCoeff() == 0.2);
    CHECK(probe.params.col(1).maxCoeff() == 4.0);
    // Grid of 4 points per axis: the worst probe sits halfway between neighbours in both axes.
    const double hx = 1.8 / 3 / 2, ht = 3.9 / 3 / 2;
    CHECK(fill_distance(train, probe) <= std::hypot(hx, ht) + 1e-12);
}

TEST_CASE("S_f examples") {
    Matrix one(1, 2);
    one << 1, 0;
    CHECK(sf_constant(one) == 1.0);
    Matrix two(1, 2);
    two << 2, 1;
    CHECK(sf_constant(two) == 3.0);
    Matrix mixed(2, 3);
    mixed << 1, -1, 0.5,
             -3, 0, 0;
    CHECK(sf_constant(mixed) == 3.0);

    // Through a real compression: the snapshot 2 zeta_1 + zeta_2 built from the modes.
    std::mt19937_64 rng(8);
    ConstraintSystem sys;
    sys.A = oracle::random_matrix(rng, 3, 6);
    sys.A.row(2).setOnes();
    sys.full_weights = Vector::Constant(6, 1.0 / 6);
    sys.b = sys.A * sys.full_weights;
    sys.measure_row_index = 2;
    sys.K = 1;
    sys.n_train = 2;
    CompressedSystem cs = compress(sys, 0.0);
    ConstraintSystem snap = sys;
    snap.A.row(0) = (2.0 * cs.modes.col(0) + cs.modes.col(1)).transpose();
    snap.A.row(1) = cs.modes.col(0).transpose();
    CHECK(sf_constant(snap, cs) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("apriori bound arithmetic") {
    BoundInputs zero;
    const ErrorReport z = apriori_bound(zero);
    CHECK(z.bound_total == 0.0);

    BoundInputs single;
    single.Sf = 2.0;
    single.eps1 = 1e-4;
    single.measure = 4.0;
    single.Delta = 0.1;
    CHECK(apriori_bound(single).bound_total == 2e-4);

    BoundInputs full;
    full.w_norm = 0.3;
    full.what_norm = 0.5;
    full.tail_energy = 0.04;
    full.eps1 = 1e-3;
    full.Sf = 1.5;
    full.Lf = 2.0;
    full.measure = 1.0;
    full.Delta = 0.01;
    const ErrorReport r = apriori_bound(full);
    CHECK(r.svd_term == (0.3 + 0.5) * 0.2);
    CHECK(r.eps1_term == 1e-3 * 1.5);
    CHECK(r.interpolation_term == 2.0 * 1.0 * 2.0 * 0.01);
    CHECK(r.bound_total == r.svd_term + r.eps1_term + r.interpolation_term);

    BoundInputs bad;
    bad.eps1 = -1.0;
    CHECK_THROWS_AS(apriori_bound(bad), ValidationError);
    bad.eps1 = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(apriori_bound(bad), ValidationError);

    full.Lf_estimated = true;
    const auto j = nlohmann::json::parse(apriori_bound(full).to_json());
    CHECK(j.at("bound").at("Lf_estimated") == true);
    CHECK(j.at("bound").at("total").get<double>() == r.bound_total);
}

TEST_CASE("apriori bound is nondecreasing in every input") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (int t = 0; t < 100; ++t) {
        BoundInputs in{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), false};
        const double base = apriori_bound(in).bound_total;
        for (int field = 0; field < 8; ++field) {
            BoundInputs up = in;
            double* f[] = {&up.w_norm, &up.what_norm, &up.tail_energy, &up.eps1, &up.Sf, &up.Lf, &up.measure, &up.Delta};
            *f[field] += 0.1;
            CHECK(apriori_bound(up).bound_total >= base);
        }
    }
}

TEST_CASE("empirical error examples") {
    const FullRule full = trapezoid_rule(0.0, 1.0, 21);
    const FunctionFamily fam = smooth_family();
    const TrainingSet test = points({{0.5}, {1.0}, {2.0}});
    const SparseRule all = extract_rule(full.weights, full, 0.0);
    CHECK(empirical_error(all, fam, full, test) == 0.0);

    FunctionFamily one = fam;
    one.K = 1;
    one.eval = [](int, const Eigen::Ref<const Vector>&, const Eigen::Ref<const Vector>&) { return 1.0; };
    SparseRule bumped = all;
    bumped.weights[3] += 1.0 / 1024;
    CHECK(empirical_error(bumped, one, full, test) == 1.0 / 1024);

    FunctionFamily nan = one;
    nan.eval = [](int, const Eigen::Ref<const Vector>&, const Eigen::Ref<const Vector>& mu) {
        return mu[0] > 1.5 ? std::nan("") : 1.0;
    };
    CHECK_THROWS_AS(empirical_error(all, nan, full, test), NumericalError);
}

TEST_CASE("empirical error is invariant under permuting test parameters") {
    const FullRule full = trapezoid_rule(0.0, 1.0, 41);
    const FunctionFamily fam = smooth_family();
    Vector w = full.weights;
    w.head(10) *= 1.01;
    const SparseRule r = extract_rule(w, full, 0.0);
    TrainingSet test;
    test.params = Vector::LinSpaced(30, 0.1, 5.0);
    TrainingSet shuffled = test;
    std::mt19937_64 rng(1);
    std::shuffle(shuffled.params.data(), shuffled.params.data() + shuffled.params.size(), rng);
    CHECK(empirical_error(r, fam, full, test) == empirical_error(r, fam, full, shuffled));
}

TEST_CASE("training error stays within ten times eps1 S_f plus the tail term") {
    const FullRule full = trapezoid_rule(0.0, 1.0, 200);
    const FunctionFamily fam = smooth_family();
    TrainingSet train;
    train.params = Vector::LinSpaced(12, 0.1, 4.0);
    const ConstraintSystem sys = assemble_system(fam, full, train);
    for (double eps2 : {0.0, 1e-12, 1e-9}) {
        const CompressedSystem cs = compress(sys, eps2);
        focuss::FocussConfig cfg;
        cfg.eps1 = 1e-6;
        const SparseRule r = focuss::solve(cs, full, cfg);
        BoundInputs in;
        in.w_norm = full.weights.norm();
        in.what_norm = r.weights.norm();
        in.tail_energy = cs.tail_energy;
        in.eps1 = cfg.eps1;
        in.Sf = sf_constant(sys, cs);
        const ErrorReport b = apriori_bound(in);
        CHECK(empirical_error(r, fam, full, train) <= 10.0 * (b.eps1_term + b.svd_term));
    }
}

TEST_CASE("Lipschitz estimate on a family with a known constant") {
    // f(x; mu) = mu x on [0, 1]: sup_x |f(mu') - f(mu'')| = |mu' - mu''|, so L = 1.
    FunctionFamily f;
    f.K = 1;
    f.param_dim = 1;
    f.domain_measure = 1.0;
    f.eval = [](int, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& mu) { return mu[0] * x[0]; };
    TrainingSet train;
    train.params = Vector::LinSpaced(5, 0.0, 2.0);
    CHECK(estimate_lipschitz(f, trapezoid_rule(0.0, 1.0, 11), train) == doctest::Approx(1.0));
}

TEST_CASE("error table CSV") {
    const FullRule full = trapezoid_rule(0.0, 1.0, 21);
    const TrainingSet test = points({{0.5}, {1.0}});
    ErrorReport rep;
    rep.test_params = test.params;
    rep.errors = error_table(extract_rule(full.weights, full, 0.0), smooth_family(), full, test);
    CHECK(rep.errors.rows() == 2);
    CHECK(rep.errors.cols() == 2);
    const auto path = std::filesystem::temp_directory_path() / "sparsequad_err_table.csv";
    rep.write_error_table_csv(path.string());
    std::ifstream is(path);
    std::string header;
    std::getline(is, header);
    CHECK(header == "mu0,err_k0,err_k1");
    std::filesystem::remove(path);
}

}  // TEST_SUITE
