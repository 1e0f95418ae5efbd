#include "doctest.h"
#include "gravbench/gravity.hpp"
#include "gravbench/rng.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace gravbench;

namespace {

bool has_name(const std::vector<std::string>& names, const std::string& name) {
    return std::find(names.begin(), names.end(), name) != names.end();
}

std::vector<std::int32_t> all_rows(const TradePanel& panel) {
    std::vector<std::int32_t> rows(panel.size());
    std::iota(rows.begin(), rows.end(), 0);
    return rows;
}

}  // namespace

TEST_CASE("design column sets per specification") {
    const auto generated = gravbench::testing::small_gravity_panel(1);
    const TradePanel& panel = generated.panel;

    const auto trad = build_design({GravityKind::Traditional, {}}, panel);
    CHECK(trad.names.size() == 11);
    CHECK(trad.names.front() == "const");
    CHECK(trad.fe.empty());

    const auto twoway = build_design({GravityKind::TwoWay, {}}, panel);
    CHECK(!has_name(twoway.names, "ln_gdp_o"));  // absorbed by the fixed effects
    CHECK(!has_name(twoway.names, "ln_gdp_d"));
    CHECK(has_name(twoway.names, "ln_dist"));
    CHECK(twoway.fe.size() == 2);

    const auto oneway = build_design({GravityKind::OneWay, {}}, panel);
    CHECK(has_name(oneway.names, "ln_gdp_o"));
    CHECK(!has_name(oneway.names, "ln_dist"));
    CHECK(!has_name(oneway.names, "contig"));
    CHECK(oneway.fe.size() == 1);
    CHECK(oneway.fe[0].name == "pair");

    const auto threeway = build_design({GravityKind::ThreeWay, {}}, panel);
    CHECK(!has_name(threeway.names, "ln_dist"));  // collinear with pair effects
    CHECK(threeway.names == std::vector<std::string>{"eu", "cu", "rta", "sanction"});
    CHECK(threeway.fe.size() == 3);

    CHECK_THROWS_AS(build_design({GravityKind::ThreeWayMl, {}}, panel), Error);
}

TEST_CASE("three-way-ml with a unit augmentation drops the log column") {
    const auto generated = gravbench::testing::small_gravity_panel(2);
    GravitySpec spec{GravityKind::ThreeWayMl,
                     [](const TradePanel&, std::span<const std::int32_t> rows) {
                         return Eigen::VectorXd::Ones(static_cast<Eigen::Index>(rows.size()));
                     }};
    const GravityModel model = GravityModel::fit(spec, generated.panel);
    CHECK(has_name(model.fit_result().dropped_names, "ln_aug"));
}

TEST_CASE("fitting twice is bit-identical") {
    const auto generated = gravbench::testing::small_gravity_panel(3);
    const GravityModel a = GravityModel::fit({GravityKind::ThreeWay, {}}, generated.panel);
    const GravityModel b = GravityModel::fit({GravityKind::ThreeWay, {}}, generated.panel);
    REQUIRE(a.fit_result().beta.size() == b.fit_result().beta.size());
    for (Eigen::Index j = 0; j < a.fit_result().beta.size(); ++j)
        CHECK(a.fit_result().beta[j] == b.fit_result().beta[j]);
}

TEST_CASE("in-sample predictions reproduce fitted means") {
    const auto generated = gravbench::testing::small_gravity_panel(4);
    const TradePanel& panel = generated.panel;
    for (GravityKind kind : {GravityKind::Traditional, GravityKind::OneWay, GravityKind::TwoWay,
                             GravityKind::ThreeWay}) {
        const GravityModel model = GravityModel::fit({kind, {}}, panel);
        const auto& fit = model.fit_result();
        REQUIRE(fit.active_rows.size() == panel.size());
        const auto rows = all_rows(panel);
        const auto predictions = model.predict(panel, rows);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            CHECK(predictions[i] ==
                  doctest::Approx(fit.fitted_mu[static_cast<Eigen::Index>(i)]).epsilon(1e-7));
            CHECK(predictions[i] > 0.0);
            CHECK(std::isfinite(predictions[i]));
        }
    }
}

TEST_CASE("sum preservation holds for nested specifications without effects") {
    DgpParams params;
    params.n_exporters = 6;
    params.n_importers = 6;
    params.n_years = 4;
    params.intercept = 1.0;
    params.beta = {0.3, 0.3, -0.4, 0.0, 0.0, 0.2, 0.0, 0.0, 0.0, 0.0};
    params.seed = 12;
    const auto generated = generate_panel(params);
    for (GravityKind kind : {GravityKind::Traditional, GravityKind::ThreeWay}) {
        const GravityModel model = GravityModel::fit({kind, {}}, generated.panel);
        const auto& fit = model.fit_result();
        CHECK(std::fabs(fit.sum_mu - fit.sum_y) / fit.sum_y < 1e-8);
    }
}

TEST_CASE("held-out prediction uses training fixed effects") {
    const auto generated = gravbench::testing::small_gravity_panel(6, 6, 6, 8);
    const TradePanel& panel = generated.panel;
    // hold out the last year of one pair; all groups remain identified
    std::vector<std::int32_t> train, test;
    for (std::size_t i = 0; i < panel.size(); ++i) {
        if (panel.pair_id(i) == 0 && panel.year(i) == panel.year_max()) {
            test.push_back(static_cast<std::int32_t>(i));
        } else {
            train.push_back(static_cast<std::int32_t>(i));
        }
    }
    REQUIRE(test.size() == 1);
    const TradePanel training_panel = panel.subset(train);
    const GravityModel model = GravityModel::fit({GravityKind::ThreeWay, {}}, training_panel);
    const auto predictions = model.predict(panel, test);
    CHECK(predictions.size() == 1);
    CHECK(predictions[0] > 0.0);

    // a pair absent from training is reported with its identity
    const TradePanel no_pair_zero = panel.subset(std::vector<std::int32_t>(
        train.begin() + static_cast<long>(panel.pair_positions(0).size()) - 1, train.end()));
    const GravityModel model2 = GravityModel::fit({GravityKind::ThreeWay, {}}, no_pair_zero);
    CHECK_THROWS_AS(model2.predict(panel, test), UnidentifiedGroupError);
}

TEST_CASE("normalization shift invariance of three-way predictions") {
    const auto generated = gravbench::testing::small_gravity_panel(21);
    const TradePanel& panel = generated.panel;
    GravityModel model = GravityModel::fit({GravityKind::ThreeWay, {}}, panel);
    const auto rows = all_rows(panel);
    const auto base = model.predict(panel, rows);

    // re-normalize: move a constant between the country-year dimensions
    GravityModel shifted = model;
    const_cast<PpmlFit&>(shifted.fit_result()).fe[0].values.array() += 1.37;
    const_cast<PpmlFit&>(shifted.fit_result()).fe[1].values.array() -= 1.37;
    const auto moved = shifted.predict(panel, rows);
    for (std::size_t i = 0; i < rows.size(); ++i)
        CHECK(moved[i] == doctest::Approx(base[i]).epsilon(1e-12));
}

TEST_CASE("traditional recovers the generating coefficients on average") {
    // no fixed effects in the truth, so the traditional design is correct
    const int n_seeds = 40;
    DgpParams params;
    params.n_exporters = 8;
    params.n_importers = 8;
    params.n_years = 4;
    params.intercept = 0.5;
    params.beta = {0.35, 0.25, -0.45, 0.3, 0.0, 0.25, 0.1, 0.15, 0.0, -0.3};
    std::vector<Eigen::VectorXd> estimates;
    for (int s = 0; s < n_seeds; ++s) {
        params.seed = 1000 + static_cast<std::uint64_t>(s);
        const auto generated = generate_panel(params);
        const GravityModel model = GravityModel::fit({GravityKind::Traditional, {}},
                                                     generated.panel);
        // a dummy can come out all-zero on a small draw and get dropped;
        // skip those seeds so columns stay comparable
        if (model.fit_result().kept_names.size() != 11) continue;
        estimates.push_back(model.fit_result().beta);
    }
    const double used = static_cast<double>(estimates.size());
    REQUIRE(used >= 25);
    Eigen::VectorXd truth(11);
    truth << params.intercept, 0.35, 0.25, -0.45, 0.3, 0.0, 0.25, 0.1, 0.15, 0.0, -0.3;
    for (int j = 0; j < 11; ++j) {
        double mean = 0.0;
        for (const auto& beta : estimates) mean += beta[j];
        mean /= used;
        double var = 0.0;
        for (const auto& beta : estimates) var += (beta[j] - mean) * (beta[j] - mean);
        var /= used - 1.0;
        const double mc_error = std::sqrt(var / used);
        CHECK(std::fabs(mean - truth[j]) < 3.0 * mc_error + 1e-9);
    }
}
