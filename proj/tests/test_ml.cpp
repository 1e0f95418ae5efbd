#include "doctest.h"
#include "gravbench/learners.hpp"
#include "gravbench/gravity.hpp"
#include "test_util.hpp"

#include <cmath>
#include <numeric>

using namespace gravbench;

namespace {

std::vector<std::int32_t> all_rows(std::size_t n) {
    std::vector<std::int32_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    return rows;
}

}  // namespace

TEST_CASE("feature construction") {
    const auto generated = gravbench::testing::small_gravity_panel(51);
    const TradePanel& panel = generated.panel;
    const auto rows = all_rows(panel.size());

    SUBCASE("base features only") {
        const FeatureSet fs = build_features(panel, rows, nullptr, false);
        CHECK(fs.X.cols() == 10);
        CHECK(fs.names.size() == 10);
        CHECK(!fs.standardized);
    }
    SUBCASE("standardization moments and the hand-computed example") {
        Eigen::MatrixXd X(3, 2);
        X << 1, 5, 2, 5, 3, 5;
        const Scaler scaler = fit_scaler(X);
        const Eigen::MatrixXd Z = apply_scaler(scaler, X);
        CHECK(Z(0, 0) == doctest::Approx(-1.224745).epsilon(1e-6));
        CHECK(Z(1, 0) == doctest::Approx(0.0));
        CHECK(Z(2, 0) == doctest::Approx(1.224745).epsilon(1e-6));
        // constant column: dropped from scaling, passed as zeros
        CHECK(Z(0, 1) == 0.0);
        CHECK(Z(2, 1) == 0.0);
    }
    SUBCASE("fixed-effect augmentation and training-statistics reuse") {
        const GravityModel threeway = GravityModel::fit({GravityKind::ThreeWay, {}}, panel);
        const FeatureSet fs = build_features(panel, rows, &threeway.fit_result(), true);
        CHECK(fs.X.cols() == 13);
        CHECK(fs.names.back() == "fe_pair");
        for (Eigen::Index j = 0; j < fs.X.cols(); ++j) {
            if (fs.scaler->constant[static_cast<std::size_t>(j)]) continue;
            CHECK(std::fabs(fs.X.col(j).mean()) < 1e-10);
        }
        // a test row identical to a training row gets identical features
        const std::vector<std::int32_t> one{rows[7]};
        const FeatureSet test_fs = build_features_like(fs, panel, one, &threeway.fit_result());
        for (Eigen::Index j = 0; j < fs.X.cols(); ++j)
            CHECK(test_fs.X(0, j) == fs.X(7, j));
    }
    SUBCASE("unidentified group from a foreign fit") {
        const GravityModel threeway = GravityModel::fit({GravityKind::ThreeWay, {}}, panel);
        const auto other = gravbench::testing::small_gravity_panel(52, 8, 8, 6);
        const std::vector<std::int32_t> one{static_cast<std::int32_t>(other.panel.size() - 1)};
        CHECK_THROWS_AS(build_features(other.panel, one, &threeway.fit_result(), false),
                        UnidentifiedGroupError);
    }
}

TEST_CASE("random forest") {
    SUBCASE("constant outcome gives constant predictions") {
        Eigen::MatrixXd X(6, 2);
        X << 1, 0, 2, 1, 3, 0, 4, 1, 5, 0, 6, 1;
        const Eigen::VectorXd y = Eigen::VectorXd::Constant(6, 3.25);
        RandomForestParams params;
        params.n_trees = 10;
        const auto model = RandomForestModel::fit(X, y, params, 1);
        const Eigen::VectorXd out = model.predict(X);
        for (Eigen::Index i = 0; i < out.size(); ++i) CHECK(out[i] == 3.25);
    }
    SUBCASE("single stump on a separating binary feature gives group means") {
        Eigen::MatrixXd X(8, 1);
        Eigen::VectorXd y(8);
        for (int i = 0; i < 8; ++i) {
            X(i, 0) = i < 4 ? 0.0 : 1.0;
            y[i] = i < 4 ? 2.0 : 10.0;
        }
        TreeParams params;
        params.max_depth = 1;
        RegressionTree tree;
        tree.fit(X, y, all_rows(8), params, nullptr);
        Eigen::RowVectorXd left(1), right(1);
        left << 0.0;
        right << 1.0;
        CHECK(tree.predict_row(left) == 2.0);
        CHECK(tree.predict_row(right) == 10.0);
    }
    SUBCASE("out-of-bag error beats the constant predictor on gravity data") {
        const auto generated = gravbench::testing::small_gravity_panel(60, 5, 5, 8);  // 200 rows
        const TradePanel& panel = generated.panel;
        const auto rows = all_rows(panel.size());
        const FeatureSet fs = build_features(panel, rows, nullptr, false);
        Eigen::VectorXd y(panel.size());
        for (std::size_t i = 0; i < panel.size(); ++i) y[static_cast<Eigen::Index>(i)] = panel.trade(i);
        RandomForestParams params;
        params.compute_oob = true;
        const auto model = RandomForestModel::fit(fs.X, y, params, 7);
        const Eigen::VectorXd& oob = *model.oob_predictions();
        double forest_sse = 0.0, constant_sse = 0.0;
        const double ybar = y.mean();
        int used = 0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            if (!std::isfinite(oob[i])) continue;
            forest_sse += (oob[i] - y[i]) * (oob[i] - y[i]);
            constant_sse += (ybar - y[i]) * (ybar - y[i]);
            ++used;
        }
        REQUIRE(used > 150);
        CHECK(forest_sse <= constant_sse);
    }
    SUBCASE("identical seeds and thread counts give identical fits") {
        const auto generated = gravbench::testing::small_gravity_panel(61, 5, 5, 4);
        const auto rows = all_rows(generated.panel.size());
        const FeatureSet fs = build_features(generated.panel, rows, nullptr, false);
        Eigen::VectorXd y(fs.X.rows());
        for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = generated.panel.trade(static_cast<std::size_t>(i));
        RandomForestParams params;
        params.n_trees = 16;
        auto serial = RandomForestModel::fit(fs.X, y, params, 3);
        params.threads = 2;
        auto threaded = RandomForestModel::fit(fs.X, y, params, 3);
        const Eigen::VectorXd a = serial.predict(fs.X);
        const Eigen::VectorXd b = threaded.predict(fs.X);
        for (Eigen::Index i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    }
}

TEST_CASE("gradient boosting") {
    Eigen::MatrixXd X(6, 1);
    Eigen::VectorXd y(6);
    for (int i = 0; i < 6; ++i) {
        X(i, 0) = i;
        y[i] = i % 2 == 0 ? 2.0 * i : -i;
    }
    SUBCASE("zero stages collapse to the mean") {
        GradientBoostingParams params;
        params.n_stages = 0;
        const auto model = GradientBoostingModel::fit(X, y, params);
        const Eigen::VectorXd out = model.predict(X);
        for (Eigen::Index i = 0; i < out.size(); ++i)
            CHECK(out[i] == doctest::Approx(y.mean()));
    }
    SUBCASE("one full-memorization stage reproduces the outcomes") {
        GradientBoostingParams params;
        params.n_stages = 1;
        params.learning_rate = 1.0;
        params.depth = 10;  // enough to isolate every distinct row
        const auto model = GradientBoostingModel::fit(X, y, params);
        const Eigen::VectorXd out = model.predict(X);
        for (Eigen::Index i = 0; i < out.size(); ++i)
            CHECK(out[i] == doctest::Approx(y[i]).epsilon(1e-12));
    }
    SUBCASE("training loss never increases across stages") {
        const auto generated = gravbench::testing::small_gravity_panel(62, 5, 5, 4);
        const auto rows = all_rows(generated.panel.size());
        const FeatureSet fs = build_features(generated.panel, rows, nullptr, false);
        Eigen::VectorXd target(fs.X.rows());
        for (Eigen::Index i = 0; i < target.size(); ++i)
            target[i] = generated.panel.trade(static_cast<std::size_t>(i));
        GradientBoostingParams params;
        params.n_stages = 60;
        const auto model = GradientBoostingModel::fit(fs.X, target, params);
        const auto& loss = model.training_loss();
        REQUIRE(loss.size() == 61);
        for (std::size_t s = 1; s < loss.size(); ++s) CHECK(loss[s] <= loss[s - 1] + 1e-9);
    }
}

TEST_CASE("poisson network") {
    SUBCASE("zero hidden weights predict exp(output bias)") {
        MlpWeights weights;
        weights.w1 = Eigen::MatrixXd::Zero(4, 3);
        weights.b1 = Eigen::VectorXd::Zero(4);
        weights.w2 = Eigen::VectorXd::Zero(4);
        weights.b2 = 1.3;
        PoissonMlpModel model;
        const Eigen::VectorXd flat = pack_weights(weights);
        const MlpWeights back = unpack_weights(flat, 3, 4);
        CHECK(back.b2 == 1.3);
        Eigen::MatrixXd X = Eigen::MatrixXd::Random(5, 3);
        Eigen::MatrixXd hidden;
        // route through the public loss to confirm eta == b2 everywhere
        Eigen::VectorXd y = Eigen::VectorXd::Zero(5);
        const double nll = mlp_poisson_nll(back, X, y);
        CHECK(nll == doctest::Approx(std::exp(1.3)));
    }
    SUBCASE("constant outcome is learned within one percent") {
        const Eigen::Index n = 80;
        Eigen::MatrixXd X(n, 2);
        Rng rng(5);
        for (Eigen::Index i = 0; i < n; ++i) {
            X(i, 0) = rng.normal();
            X(i, 1) = rng.normal();
        }
        FeatureSet fs;
        fs.names = {"a", "b"};
        fs.scaler = fit_scaler(X);
        fs.X = apply_scaler(*fs.scaler, X);
        fs.standardized = true;
        const Eigen::VectorXd y = Eigen::VectorXd::Constant(n, 3.0);
        MlpParams params;
        params.hidden = 8;
        params.max_epochs = 4000;  // train to convergence
        params.learning_rate = 3e-3;
        params.tol = 1e-12;
        const auto model = PoissonMlpModel::fit(fs, y, params, 11);
        const Eigen::VectorXd out = model.predict(fs.X);
        for (Eigen::Index i = 0; i < n; ++i) CHECK(out[i] == doctest::Approx(3.0).epsilon(0.01));
        CHECK((out.array() > 0.0).all());
    }
    SUBCASE("standardization is enforced") {
        FeatureSet fs;
        fs.X = Eigen::MatrixXd::Random(10, 2);
        const Eigen::VectorXd y = Eigen::VectorXd::Ones(10);
        CHECK_THROWS_WITH_AS(PoissonMlpModel::fit(fs, y, {}, 1),
                             doctest::Contains("standardized"), Error);
    }
    SUBCASE("analytic gradient matches central finite differences") {
        Rng rng(77);
        const Eigen::Index n = 20, p = 4, hidden = 10;
        Eigen::MatrixXd X(n, p);
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < p; ++j) X(i, j) = rng.normal();
            y[i] = static_cast<double>(rng.poisson(2.0));
        }
        MlpWeights weights;
        weights.w1.resize(hidden, p);
        weights.b1.resize(hidden);
        weights.w2.resize(hidden);
        // resample until no pre-activation sits near the rectifier kink
        for (int attempt = 0; attempt < 100; ++attempt) {
            for (Eigen::Index h = 0; h < hidden; ++h) {
                for (Eigen::Index j = 0; j < p; ++j) weights.w1(h, j) = rng.normal(0.0, 0.4);
                weights.b1[h] = rng.normal(0.0, 0.4);
                weights.w2[h] = rng.normal(0.0, 0.4);
            }
            weights.b2 = rng.normal(0.0, 0.3);
            const Eigen::MatrixXd pre =
                (X * weights.w1.transpose()).rowwise() + weights.b1.transpose();
            if (pre.cwiseAbs().minCoeff() > 1e-3) break;
        }
        const Eigen::VectorXd theta = pack_weights(weights);
        const Eigen::VectorXd analytic = mlp_poisson_nll_grad(weights, X, y);
        const double h = 1e-6;
        for (Eigen::Index k = 0; k < theta.size(); ++k) {
            Eigen::VectorXd plus = theta, minus = theta;
            plus[k] += h;
            minus[k] -= h;
            const double f_plus = mlp_poisson_nll(unpack_weights(plus, p, hidden), X, y);
            const double f_minus = mlp_poisson_nll(unpack_weights(minus, p, hidden), X, y);
            const double numeric = (f_plus - f_minus) / (2.0 * h);
            const double scale = std::max({1.0, std::fabs(analytic[k]), std::fabs(numeric)});
            CHECK(std::fabs(analytic[k] - numeric) / scale < 1e-5);
        }
    }
}

TEST_CASE("simplex least squares") {
    SUBCASE("single learner gets weight one") {
        Eigen::MatrixXd P(4, 1);
        P << 1, 2, 3, 4;
        Eigen::VectorXd y(4);
        y << 2, 3, 4, 5;
        const auto w = simplex_least_squares(P, y);
        CHECK(w.w[0] == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("identical learners give an invariant prediction") {
        Eigen::MatrixXd P(5, 2);
        Rng rng(13);
        for (Eigen::Index i = 0; i < 5; ++i) P(i, 0) = P(i, 1) = rng.uniform(1.0, 4.0);
        Eigen::VectorXd y(5);
        for (Eigen::Index i = 0; i < 5; ++i) y[i] = rng.uniform(1.0, 4.0);
        const auto w = simplex_least_squares(P, y);
        CHECK(w.w.sum() == doctest::Approx(1.0).epsilon(1e-10));
        const Eigen::VectorXd blended = P * w.w;
        for (Eigen::Index i = 0; i < 5; ++i)
            CHECK(blended[i] == doctest::Approx(P(i, 0)).epsilon(1e-10));
    }
    SUBCASE("matches an exhaustive simplex grid on three learners") {
        Rng rng(99);
        const Eigen::Index n = 60;
        Eigen::MatrixXd P(n, 3);
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double base = rng.uniform(1.0, 10.0);
            P(i, 0) = base + rng.normal(0.0, 1.0);
            P(i, 1) = base + rng.normal(0.5, 1.5);
            P(i, 2) = base + rng.normal(-0.4, 0.7);
            y[i] = base + rng.normal(0.0, 0.5);
        }
        const auto solved = simplex_least_squares(P, y);
        CHECK(solved.w.minCoeff() >= -1e-8);
        CHECK(solved.w.sum() == doctest::Approx(1.0).epsilon(1e-8));

        double best = std::numeric_limits<double>::infinity();
        Eigen::Vector3d best_w;
        const int grid = 1000;
        for (int i = 0; i <= grid; ++i) {
            for (int j = 0; j <= grid - i; ++j) {
                Eigen::Vector3d w(i / 1000.0, j / 1000.0, (grid - i - j) / 1000.0);
                const double objective = (y - P * w).squaredNorm();
                if (objective < best) {
                    best = objective;
                    best_w = w;
                }
            }
        }
        for (int k = 0; k < 3; ++k)
            CHECK(std::fabs(solved.w[k] - best_w[k]) <= 2e-3);
        CHECK(solved.objective <= best + 1e-8);
        // no vertex beats the stack
        for (int m = 0; m < 3; ++m)
            CHECK(solved.objective <= (y - P.col(m)).squaredNorm() + 1e-8);
    }
}

TEST_CASE("pair-clustered folds") {
    std::vector<std::int32_t> pair_ids;
    for (int p = 0; p < 23; ++p)
        for (int t = 0; t < 4; ++t) pair_ids.push_back(p);
    const auto folds = pair_clustered_folds(pair_ids, 5, 7);
    REQUIRE(folds.size() == pair_ids.size());
    std::map<std::int32_t, int> fold_of_pair;
    for (std::size_t i = 0; i < folds.size(); ++i) {
        CHECK(folds[i] >= 0);
        CHECK(folds[i] < 5);
        const auto it = fold_of_pair.find(pair_ids[i]);
        if (it == fold_of_pair.end()) {
            fold_of_pair[pair_ids[i]] = folds[i];
        } else {
            CHECK(it->second == folds[i]);  // all rows of a pair share a fold
        }
    }
}

TEST_CASE("stacked regressor combines shared learners") {
    const auto generated = gravbench::testing::small_gravity_panel(63, 5, 5, 6);
    const TradePanel& panel = generated.panel;
    const auto rows = all_rows(panel.size());
    MlHyperparams hp;
    hp.rf.n_trees = 15;
    hp.gb.n_stages = 15;
    hp.nn.hidden = 6;
    hp.nn.max_epochs = 40;

    const std::vector<BaseLearnerKind> kinds = {BaseLearnerKind::RandomForest,
                                                BaseLearnerKind::GradientBoosting,
                                                BaseLearnerKind::PoissonMlp};
    const StackWeights weights = fit_stack_weights(kinds, panel, rows, nullptr, hp, 321);
    CHECK(weights.w.size() == 3);
    CHECK(weights.w.minCoeff() >= -1e-8);
    CHECK(weights.w.sum() == doctest::Approx(1.0).epsilon(1e-8));

    std::vector<std::shared_ptr<const MlRegressor>> learners;
    for (std::size_t m = 0; m < kinds.size(); ++m)
        learners.push_back(MlRegressor::fit(kinds[m], panel, rows, nullptr, hp, 900 + m));
    const StackedRegressor stack(learners, weights);
    const auto combined = stack.predict(panel, rows);
    REQUIRE(combined.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double expected = 0.0;
        for (std::size_t m = 0; m < learners.size(); ++m)
            expected += weights.w[static_cast<Eigen::Index>(m)] *
                        learners[m]->predict(panel, rows)[i];
        CHECK(combined[i] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("ml regressor determinism and naming") {
    const auto generated = gravbench::testing::small_gravity_panel(64, 5, 5, 4);
    const auto rows = all_rows(generated.panel.size());
    MlHyperparams hp;
    hp.rf.n_trees = 10;
    hp.nn.hidden = 5;
    hp.nn.max_epochs = 30;
    for (BaseLearnerKind kind : {BaseLearnerKind::RandomForest, BaseLearnerKind::GradientBoosting,
                                 BaseLearnerKind::PoissonMlp}) {
        const auto a = MlRegressor::fit(kind, generated.panel, rows, nullptr, hp, 42);
        const auto b = MlRegressor::fit(kind, generated.panel, rows, nullptr, hp, 42);
        const auto pa = a->predict(generated.panel, rows);
        const auto pb = b->predict(generated.panel, rows);
        for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == pb[i]);
        for (double v : pa) CHECK(std::isfinite(v));
    }
    const auto rf = MlRegressor::fit(BaseLearnerKind::RandomForest, generated.panel, rows,
                                     nullptr, hp, 1);
    CHECK(rf->name() == "rf");
}
