#include <cmath>

#include "doctest.h"
#include "llrma/global_factor.hpp"
#include "support/synthetic.hpp"

using namespace llrma;

namespace {

// Central finite differences of the regularized loss, the reference the
// analytic gradients are checked against.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> fd_gradient(const Eigen::MatrixXd& u,
                                                        const Eigen::MatrixXd& v,
                                                        const ObservedMatrix& train,
                                                        double lambda, double h = 1e-5) {
    auto loss_at = [&](const Eigen::MatrixXd& uu, const Eigen::MatrixXd& vv) {
        return objective_and_gradient(uu, vv, train, lambda).loss;
    };
    Eigen::MatrixXd gu(u.rows(), u.cols()), gv(v.rows(), v.cols());
    for (int i = 0; i < u.rows(); ++i) {
        for (int k = 0; k < u.cols(); ++k) {
            Eigen::MatrixXd up = u, dn = u;
            up(i, k) += h;
            dn(i, k) -= h;
            gu(i, k) = (loss_at(up, v) - loss_at(dn, v)) / (2 * h);
        }
    }
    for (int j = 0; j < v.rows(); ++j) {
        for (int k = 0; k < v.cols(); ++k) {
            Eigen::MatrixXd up = v, dn = v;
            up(j, k) += h;
            dn(j, k) -= h;
            gv(j, k) = (loss_at(u, up) - loss_at(u, dn)) / (2 * h);
        }
    }
    return {gu, gv};
}

double train_rmse(const FactorPair& fp, const ObservedMatrix& m) {
    return rmse([&](int i, int j) { return fp.raw_prediction(i, j); }, m);
}

}  // namespace

TEST_CASE("a fully observed rank-1 matrix is recovered") {
    Eigen::Vector3d u(1, 2, 3), v(1, 1, 2);
    const Eigen::MatrixXd truth = u * v.transpose();
    const auto m = testing::observe_all(truth, testing::wide_scale());
    TrainConfig cfg;
    cfg.rank = 1;
    cfg.lambda = 0.0;
    cfg.seed = 5;
    const FactorPair fp = train_global(m, cfg);
    CHECK(train_rmse(fp, m) < 1e-3);
}

TEST_CASE("rank-1 completion forces the missing corner of a 2x2") {
    // observed {M11=1, M12=2, M21=2}: any rank-1 fit gives M22 = M12 M21 / M11 = 4
    const auto m = ObservedMatrix::from_triples(
        2, 2, {{0, 0, 1.0}, {0, 1, 2.0}, {1, 0, 2.0}}, testing::wide_scale());
    TrainConfig cfg;
    cfg.rank = 1;
    cfg.lambda = 0.0;
    cfg.seed = 3;
    const FactorPair fp = train_global(m, cfg);
    CHECK(fp.raw_prediction(1, 1) == doctest::Approx(4.0).epsilon(0.0125));
}

TEST_CASE("a constant matrix is fit by rank 1") {
    const Eigen::MatrixXd truth = Eigen::MatrixXd::Constant(6, 4, 3.0);
    const auto m = testing::observe_all(truth, RatingScale::movielens());
    TrainConfig cfg;
    cfg.rank = 1;
    cfg.seed = 11;
    const FactorPair fp = train_global(m, cfg);
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 4; ++j) {
            CHECK(std::abs(fp.raw_prediction(i, j) - 3.0) < 0.05);
        }
    }
}

TEST_CASE("predict_entry clamps to the rating scale") {
    FactorPair fp;
    fp.U = Eigen::MatrixXd(3, 2);
    fp.V = Eigen::MatrixXd(1, 2);
    fp.U << 1, 0, 3, 3, 0, 0;
    fp.V << 3, 7;
    const RatingScale scale = RatingScale::movielens();
    SUBCASE("in range") {
        fp.V << 3, 7;
        CHECK(predict_entry(fp, 0, 0, scale) == 3.0);
    }
    SUBCASE("clamped at max") {
        fp.V << 3, 3;
        CHECK(predict_entry(fp, 1, 0, scale) == 5.0);  // raw 18
    }
    SUBCASE("clamped at min") {
        fp.V << 3, 7;
        CHECK(predict_entry(fp, 2, 0, scale) == 1.0);  // raw 0
    }
    SUBCASE("index errors") {
        CHECK_THROWS_AS(predict_entry(fp, 3, 0, scale), IndexError);
        CHECK_THROWS_AS(predict_entry(fp, 0, 1, scale), IndexError);
        CHECK_THROWS_AS(predict_entry(fp, -1, 0, scale), IndexError);
    }
}

TEST_CASE("objective is zero with zero gradient at an exact fit") {
    Rng rng(2);
    const Eigen::MatrixXd u = testing::gaussian_matrix(rng, 4, 2);
    const Eigen::MatrixXd v = testing::gaussian_matrix(rng, 3, 2);
    const auto m = testing::observe_all(u * v.transpose(), testing::wide_scale());
    const ObjectiveValue o = objective_and_gradient(u, v, m, 0.0);
    CHECK(o.loss == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(o.grad_u.cwiseAbs().maxCoeff() < 1e-9);
    CHECK(o.grad_v.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("gradient vanishes at zero factors despite a residual") {
    const auto m =
        ObservedMatrix::from_triples(2, 2, {{0, 1, 4.0}}, RatingScale::movielens());
    const Eigen::MatrixXd z2 = Eigen::MatrixXd::Zero(2, 2);
    const ObjectiveValue o = objective_and_gradient(z2, z2, m, 0.0);
    CHECK(o.loss == 16.0);
    CHECK(o.grad_u.isZero(0.0));
    CHECK(o.grad_v.isZero(0.0));
}

TEST_CASE("analytic gradients match central finite differences") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        const Eigen::MatrixXd u = testing::gaussian_matrix(rng, 4, 2);
        const Eigen::MatrixXd v = testing::gaussian_matrix(rng, 4, 2);
        const auto dense = testing::gaussian_matrix(rng, 4, 4);
        const auto m = testing::observe_sample(dense, 10, rng, testing::wide_scale());
        const double lambda = seed % 2 == 0 ? 0.0 : 0.3;
        const ObjectiveValue o = objective_and_gradient(u, v, m, lambda);
        const auto [fu, fv] = fd_gradient(u, v, m, lambda);
        const double denom = std::max(1.0, std::hypot(fu.norm(), fv.norm()));
        const double err = std::hypot((o.grad_u - fu).norm(), (o.grad_v - fv).norm()) / denom;
        CHECK(err < 1e-5);
    }
}

TEST_CASE("objective rejects mismatched shapes") {
    const auto m = ObservedMatrix::from_triples(2, 2, {{0, 0, 3.0}}, RatingScale::movielens());
    const Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 2);
    const Eigen::MatrixXd b = Eigen::MatrixXd::Zero(2, 2);
    CHECK_THROWS_AS(objective_and_gradient(a, b, m, 0.0), ShapeError);
}

TEST_CASE("als loss never increases across epochs") {
    Rng rng(8);
    const auto dense = testing::gaussian_low_rank(rng, 12, 9, 3);
    const auto m = testing::observe_sample(dense, 70, rng, testing::wide_scale());
    TrainConfig cfg;
    cfg.rank = 3;
    cfg.lambda = 0.05;
    cfg.seed = 4;
    std::vector<double> history;
    train_global(m, cfg, &history);
    REQUIRE(history.size() >= 2);
    for (std::size_t i = 1; i < history.size(); ++i) {
        CHECK(history[i] <= history[i - 1] + cfg.tolerance * std::max(1.0, history[i - 1]));
    }
}

TEST_CASE("identical seeds give bitwise identical factors") {
    Rng rng(9);
    const auto dense = testing::gaussian_low_rank(rng, 10, 11, 2);
    const auto m = testing::observe_sample(dense, 60, rng, testing::wide_scale());
    TrainConfig cfg;
    cfg.rank = 2;
    cfg.seed = 1234;
    for (Solver solver : {Solver::Als, Solver::Sgd}) {
        cfg.solver = solver;
        const FactorPair a = train_global(m, cfg);
        const FactorPair b = train_global(m, cfg);
        CHECK(a.U == b.U);
        CHECK(a.V == b.V);
    }
}

TEST_CASE("sgd reduces the objective on an easy instance") {
    Rng rng(10);
    const auto dense = testing::gaussian_low_rank(rng, 10, 10, 2);
    const auto m = testing::observe_all(dense, testing::wide_scale());
    TrainConfig cfg;
    cfg.rank = 2;
    cfg.solver = Solver::Sgd;
    cfg.learning_rate = 0.05;
    cfg.max_epochs = 300;
    cfg.tolerance = 1e-7;
    cfg.seed = 2;
    std::vector<double> history;
    train_global(m, cfg, &history);
    REQUIRE(!history.empty());
    CHECK(history.back() < history.front());
}

TEST_CASE("divergence is reported with the epoch") {
    Rng rng(11);
    const auto dense = testing::gaussian_low_rank(rng, 8, 8, 2);
    const auto m = testing::observe_all(dense, testing::wide_scale());
    TrainConfig cfg;
    cfg.rank = 2;
    cfg.solver = Solver::Sgd;
    cfg.learning_rate = 50.0;  // far beyond stable
    cfg.seed = 2;
    CHECK_THROWS_AS(train_global(m, cfg), DivergenceError);
}

TEST_CASE("training rejects empty input and infeasible rank") {
    ObservedMatrix empty;
    TrainConfig cfg;
    CHECK_THROWS_AS(train_global(empty, cfg), EmptyInputError);
    const auto m = ObservedMatrix::from_triples(2, 2, {{0, 0, 3.0}}, RatingScale::movielens());
    cfg.rank = 3;
    CHECK_THROWS_AS(train_global(m, cfg), ConfigError);
}

TEST_CASE("rmse of simple predictors") {
    const auto test = ObservedMatrix::from_triples(
        2, 2, {{0, 0, 4.0}, {1, 1, 2.0}}, RatingScale::movielens());
    CHECK(rmse([&](int i, int j) { return i == 0 && j == 0 ? 4.0 : 2.0; }, test) == 0.0);
    CHECK(rmse([&](int i, int j) {
              return (i == 0 && j == 0 ? 4.0 : 2.0) + 0.5;
          },
               test) == doctest::Approx(0.5));
    // predictions (3, 4) against truths (4, 2)
    CHECK(rmse([&](int i, int) { return i == 0 ? 3.0 : 4.0; }, test) ==
          doctest::Approx(std::sqrt(2.5)).epsilon(1e-12));
    ObservedMatrix empty;
    CHECK_THROWS_AS(rmse([](int, int) { return 0.0; }, empty), EmptyInputError);
}
