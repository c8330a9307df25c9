#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "llrma/local_model.hpp"
#include "support/synthetic.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace llrma;

namespace {

// Features placed on the unit circle; index gaps translate directly into
// arccos distances.
DistanceModel circle_features(const std::vector<double>& row_angles,
                              const std::vector<double>& col_angles) {
    auto mat = [](const std::vector<double>& a) {
        Eigen::MatrixXd f(static_cast<int>(a.size()), 2);
        for (std::size_t i = 0; i < a.size(); ++i) {
            f(static_cast<int>(i), 0) = std::cos(a[i]);
            f(static_cast<int>(i), 1) = std::sin(a[i]);
        }
        return f;
    };
    return DistanceModel::from_features(mat(row_angles), mat(col_angles));
}

DistanceModel same_point_features(int rows, int cols) {
    return circle_features(std::vector<double>(rows, 0.0), std::vector<double>(cols, 0.0));
}

}  // namespace

TEST_CASE("sample_anchors draws distinct observed entries") {
    Rng rng(1);
    const auto dense = testing::gaussian_matrix(rng, 5, 5);
    const auto m = testing::observe_sample(dense, 12, rng, testing::wide_scale());

    SUBCASE("q = m enumerates every entry") {
        const auto anchors = sample_anchors(m, 12, 7);
        CHECK(anchors.size() == 12);
        std::set<std::pair<int, int>> got;
        for (const auto& a : anchors) got.emplace(a.row, a.col);
        CHECK(got.size() == 12);
        for (const auto& a : anchors) CHECK(m.contains(a.row, a.col));
    }
    SUBCASE("q = 1 yields an observed entry") {
        const auto anchors = sample_anchors(m, 1, 7);
        REQUIRE(anchors.size() == 1);
        CHECK(m.contains(anchors[0].row, anchors[0].col));
    }
    SUBCASE("fixed seed reproduces the list") {
        CHECK(sample_anchors(m, 5, 42) == sample_anchors(m, 5, 42));
        CHECK(sample_anchors(m, 5, 42) != sample_anchors(m, 5, 43));
    }
    SUBCASE("bad counts") {
        CHECK_THROWS_AS(sample_anchors(m, 0, 7), ConfigError);
        CHECK_THROWS_AS(sample_anchors(m, 13, 7), InsufficientEntriesError);
    }
}

TEST_CASE("an all-ones kernel makes the local fit identical to the global one") {
    Rng rng(2);
    const auto dense = testing::gaussian_low_rank(rng, 9, 8, 2);
    const auto m = testing::observe_sample(dense, 50, rng, testing::wide_scale());
    const DistanceModel dm = same_point_features(9, 8);
    KernelConfig kcfg;
    kcfg.kind = KernelKind::Uniform;  // value exactly 1.0 inside the support
    kcfg.h1 = kcfg.h2 = 10.0;         // support covers everything

    TrainConfig tcfg;
    tcfg.rank = 2;
    tcfg.seed = 77;
    for (Solver solver : {Solver::Als, Solver::Sgd}) {
        tcfg.solver = solver;
        const Anchor anchor{m.entries()[0].row, m.entries()[0].col};
        const LocalModel local = train_local(m, anchor, dm, kcfg, tcfg);
        const FactorPair global = train_global(m, tcfg);
        CHECK(local.factors.U == global.U);
        CHECK(local.factors.V == global.V);
    }
}

TEST_CASE("a single-point neighborhood reproduces the anchor value") {
    // row/col features far apart: only the anchor's own row and column are
    // inside any kernel support
    const DistanceModel dm = circle_features({0.0, 1.5, 3.0}, {0.0, 1.5, 3.0});
    const auto m = ObservedMatrix::from_triples(3, 3,
                                                {{0, 0, 2.5},
                                                 {1, 1, 4.0},
                                                 {2, 2, 1.5},
                                                 {1, 2, 3.0}},
                                                RatingScale::movielens());
    KernelConfig kcfg;  // h = 0.8 < 1.5 gap
    TrainConfig tcfg;
    tcfg.rank = 1;
    tcfg.lambda = 0.0;
    tcfg.seed = 5;
    const LocalModel local = train_local(m, {0, 0}, dm, kcfg, tcfg);
    CHECK(std::abs(local.factors.raw_prediction(0, 0) - 2.5) < 1e-3);
}

TEST_CASE("a local model confined to one block beats a global rank-1 fit there") {
    // two disjoint rank-1 blocks with incompatible structure
    Rng rng(3);
    const int n = 12, half = 6;
    Eigen::VectorXd u1(half), v1(half), u2(half), v2(half);
    for (int i = 0; i < half; ++i) {
        u1[i] = 1.0 + rng.uniform();
        v1[i] = 1.0 + rng.uniform();
        u2[i] = -2.0 + rng.uniform();
        v2[i] = 1.5 + rng.uniform();
    }
    // fully observed: off-block cells are zero, so the union is rank 2 and a
    // single global rank-1 direction cannot serve both blocks
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
    dense.topLeftCorner(half, half) = u1 * v1.transpose();
    dense.bottomRightCorner(half, half) = u2 * v2.transpose();
    const auto m = testing::observe_all(dense, testing::wide_scale());

    std::vector<double> row_angles(n), col_angles(n);
    for (int i = 0; i < n; ++i) {
        row_angles[i] = i < half ? 0.1 : 2.0;  // block gap 1.9 > h
        col_angles[i] = i < half ? 0.1 : 2.0;
    }
    const DistanceModel dm = circle_features(row_angles, col_angles);
    KernelConfig kcfg;
    TrainConfig tcfg;
    tcfg.rank = 1;
    tcfg.lambda = 0.0;
    tcfg.seed = 9;
    tcfg.max_epochs = 300;
    tcfg.tolerance = 1e-10;

    const LocalModel local = train_local(m, {0, 0}, dm, kcfg, tcfg);
    double local_se = 0.0;
    for (int i = 0; i < half; ++i) {
        for (int j = 0; j < half; ++j) {
            const double d = local.factors.raw_prediction(i, j) - u1[i] * v1[j];
            local_se += d * d;
        }
    }
    const double local_rmse = std::sqrt(local_se / (half * half));

    const FactorPair global = train_global(m, tcfg);
    const double global_rmse =
        rmse([&](int i, int j) { return global.raw_prediction(i, j); }, m);

    CHECK(local_rmse < 1e-2);
    CHECK(global_rmse > 0.1);
}

TEST_CASE("weighted objective handles degenerate weight vectors") {
    Rng rng(4);
    const auto dense = testing::gaussian_matrix(rng, 3, 3);
    const auto m = testing::observe_sample(dense, 6, rng, testing::wide_scale());
    const Eigen::MatrixXd u = testing::gaussian_matrix(rng, 3, 2);
    const Eigen::MatrixXd v = testing::gaussian_matrix(rng, 3, 2);

    SUBCASE("all-zero weights give zero loss and gradients at lambda 0") {
        const std::vector<double> zeros(m.size(), 0.0);
        const ObjectiveValue o = weighted_objective_and_gradient(u, v, m, zeros, 0.0);
        CHECK(o.loss == 0.0);
        CHECK(o.grad_u.isZero(0.0));
        CHECK(o.grad_v.isZero(0.0));
    }
    SUBCASE("unit weights equal the unweighted objective") {
        const std::vector<double> ones(m.size(), 1.0);
        const ObjectiveValue a = weighted_objective_and_gradient(u, v, m, ones, 0.2);
        const ObjectiveValue b = objective_and_gradient(u, v, m, 0.2);
        CHECK(a.loss == b.loss);
        CHECK(a.grad_u == b.grad_u);
        CHECK(a.grad_v == b.grad_v);
    }
    SUBCASE("weight vector must align with the entries") {
        const std::vector<double> bad(m.size() + 1, 1.0);
        CHECK_THROWS_AS(weighted_objective_and_gradient(u, v, m, bad, 0.0), ShapeError);
    }
}

TEST_CASE("weighted analytic gradients match finite differences") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(100 + seed);
        const Eigen::MatrixXd u = testing::gaussian_matrix(rng, 4, 2);
        const Eigen::MatrixXd v = testing::gaussian_matrix(rng, 4, 2);
        const auto dense = testing::gaussian_matrix(rng, 4, 4);
        const auto m = testing::observe_sample(dense, 11, rng, testing::wide_scale());
        std::vector<double> w(m.size());
        for (auto& x : w) x = rng.uniform();
        const double lambda = 0.15;
        const ObjectiveValue o = weighted_objective_and_gradient(u, v, m, w, lambda);

        const double h = 1e-5;
        auto loss_at = [&](const Eigen::MatrixXd& uu, const Eigen::MatrixXd& vv) {
            return weighted_objective_and_gradient(uu, vv, m, w, lambda).loss;
        };
        double err2 = 0.0, ref2 = 0.0;
        for (int i = 0; i < 4; ++i) {
            for (int k = 0; k < 2; ++k) {
                Eigen::MatrixXd up = u, dn = u;
                up(i, k) += h;
                dn(i, k) -= h;
                const double g = (loss_at(up, v) - loss_at(dn, v)) / (2 * h);
                err2 += std::pow(g - o.grad_u(i, k), 2);
                ref2 += g * g;
                Eigen::MatrixXd vp = v, vn = v;
                vp(i, k) += h;
                vn(i, k) -= h;
                const double gv = (loss_at(u, vp) - loss_at(u, vn)) / (2 * h);
                err2 += std::pow(gv - o.grad_v(i, k), 2);
                ref2 += gv * gv;
            }
        }
        CHECK(std::sqrt(err2) / std::max(1.0, std::sqrt(ref2)) < 1e-5);
    }
}

TEST_CASE("perturbing an entry outside the kernel support leaves the fit unchanged") {
    Rng rng(6);
    const DistanceModel dm = circle_features({0.0, 0.1, 2.5}, {0.0, 0.1, 2.5});
    std::vector<RatingTriple> entries{{0, 0, 3.0}, {0, 1, 2.0}, {1, 0, 4.0},
                                      {1, 1, 3.5}, {2, 2, 1.0}};
    const auto m1 = ObservedMatrix::from_triples(3, 3, entries, RatingScale::movielens());
    entries[4].value = 5.0;  // (2,2) has zero weight for an anchor at (0,0)
    const auto m2 = ObservedMatrix::from_triples(3, 3, entries, RatingScale::movielens());

    KernelConfig kcfg;
    TrainConfig tcfg;
    tcfg.rank = 1;
    tcfg.seed = 13;
    const LocalModel a = train_local(m1, {0, 0}, dm, kcfg, tcfg);
    const LocalModel b = train_local(m2, {0, 0}, dm, kcfg, tcfg);
    CHECK(a.factors.U == b.factors.U);
    CHECK(a.factors.V == b.factors.V);
}

TEST_CASE("an anchor with an empty neighborhood is an error") {
    // the anchor's own row/column features are zero, so even the anchor cell
    // has zero weight
    Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(2, 2);
    rows(1, 0) = 1.0;
    Eigen::MatrixXd cols = Eigen::MatrixXd::Identity(2, 2);
    const auto dm = DistanceModel::from_features(rows, cols);
    const auto m = ObservedMatrix::from_triples(
        2, 2, {{0, 0, 3.0}, {1, 1, 2.0}}, RatingScale::movielens());
    KernelConfig kcfg;
    TrainConfig tcfg;
    tcfg.rank = 1;
    CHECK_THROWS_AS(train_local(m, {0, 0}, dm, kcfg, tcfg), EmptyNeighborhoodError);
}

TEST_CASE("the anchor must be an observed training entry") {
    const auto m = ObservedMatrix::from_triples(
        2, 2, {{0, 0, 3.0}}, RatingScale::movielens());
    const DistanceModel dm = same_point_features(2, 2);
    CHECK_THROWS_AS(train_local(m, {1, 1}, dm, KernelConfig{}, TrainConfig{}), ConfigError);
}

TEST_CASE("batch training is schedule independent") {
    Rng rng(7);
    const auto dense = testing::gaussian_low_rank(rng, 10, 10, 2);
    const auto m = testing::observe_sample(dense, 60, rng, testing::wide_scale());
    const DistanceModel dm = same_point_features(10, 10);
    KernelConfig kcfg;
    TrainConfig tcfg;
    tcfg.rank = 2;
    tcfg.seed = 21;
    const auto anchors = sample_anchors(m, 6, 3);

#ifdef _OPENMP
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
#endif
    const auto serial = train_local_batch(m, anchors, dm, kcfg, tcfg);
#ifdef _OPENMP
    omp_set_num_threads(4);
#endif
    const auto parallel = train_local_batch(m, anchors, dm, kcfg, tcfg);
#ifdef _OPENMP
    omp_set_num_threads(saved);
#endif
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].anchor == parallel[i].anchor);
        CHECK(serial[i].factors.U == parallel[i].factors.U);
        CHECK(serial[i].factors.V == parallel[i].factors.V);
    }
    // per-anchor seeds differ from each other
    CHECK(serial[0].factors.U != serial[1].factors.U);
}
