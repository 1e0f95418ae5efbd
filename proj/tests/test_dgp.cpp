#include "doctest.h"
#include "gravbench/dgp.hpp"
#include "test_util.hpp"

#include <cmath>
#include <numeric>

using namespace gravbench;

TEST_CASE("fixed seed gives a bit-identical panel") {
    const auto a = gravbench::testing::small_gravity_panel(123);
    const auto b = gravbench::testing::small_gravity_panel(123);
    REQUIRE(a.panel.size() == b.panel.size());
    for (std::size_t i = 0; i < a.panel.size(); ++i) {
        CHECK(a.panel.trade(i) == b.panel.trade(i));
        for (int c = 0; c < kNumCovariates; ++c)
            CHECK(a.panel.covariate(i, c) == b.panel.covariate(i, c));
    }
    const auto c = gravbench::testing::small_gravity_panel(124);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.panel.size() && !any_diff; ++i)
        any_diff = a.panel.trade(i) != c.panel.trade(i);
    CHECK(any_diff);
}

TEST_CASE("unit-mean poisson outcome under the null parameters") {
    DgpParams params;
    params.n_exporters = 10;
    params.n_importers = 10;
    params.n_years = 10;
    params.seed = 9;
    const auto generated = generate_panel(params);
    const std::size_t n = generated.panel.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += generated.panel.trade(i);
    const double mean = sum / static_cast<double>(n);
    CHECK(std::fabs(mean - 1.0) < 5.0 / std::sqrt(static_cast<double>(n)));
    for (Eigen::Index i = 0; i < generated.truth.mu.size(); ++i)
        CHECK(generated.truth.mu[i] == 1.0);
}

TEST_CASE("treatment effect shows up in the treated-sum ratio") {
    DgpParams params;
    params.n_exporters = 25;
    params.n_importers = 25;
    params.n_years = 8;  // 5000 rows
    params.intercept = 2.0;
    params.tau = std::log(2.0);
    params.treat_prob = 0.5;
    params.sd_pair = 0.3;
    params.seed = 17;
    const auto generated = generate_panel(params);

    std::vector<std::int32_t> treated_rows;
    for (std::size_t i = 0; i < generated.truth.treated.size(); ++i)
        if (generated.truth.treated[i]) treated_rows.push_back(static_cast<std::int32_t>(i));
    REQUIRE(treated_rows.size() > 1000);

    const Eigen::VectorXd baseline = true_counterfactual(generated.truth, treated_rows);
    double y_sum = 0.0;
    for (std::int32_t row : treated_rows) y_sum += generated.panel.trade(row);
    const double ratio = y_sum / baseline.sum();
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.10));
}

TEST_CASE("true_counterfactual equals mu without the treatment term") {
    DgpParams params;
    params.n_exporters = 5;
    params.n_importers = 5;
    params.n_years = 4;
    params.tau = std::log(2.0);
    params.treat_prob = 0.4;
    params.sd_exporter_year = 0.2;
    params.sd_pair = 0.4;
    params.seed = 3;
    const auto generated = generate_panel(params);
    std::vector<std::int32_t> rows(generated.panel.size());
    std::iota(rows.begin(), rows.end(), 0);
    const Eigen::VectorXd baseline = true_counterfactual(generated.truth, rows);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        // independent recomputation from stored components and covariates
        double link = generated.truth.intercept;
        for (int c = 0; c < kNumCovariates; ++c)
            link += generated.truth.beta[c] * generated.panel.covariate(i, c);
        link += generated.truth.alpha_row[static_cast<Eigen::Index>(i)] +
                generated.truth.gamma_row[static_cast<Eigen::Index>(i)] +
                generated.truth.eta_row[static_cast<Eigen::Index>(i)];
        CHECK(baseline[static_cast<Eigen::Index>(i)] ==
              doctest::Approx(std::exp(link)).epsilon(1e-12));
        if (generated.truth.treated[i]) {
            CHECK(generated.truth.mu[static_cast<Eigen::Index>(i)] ==
                  doctest::Approx(2.0 * baseline[static_cast<Eigen::Index>(i)]).epsilon(1e-12));
        } else {
            CHECK(generated.truth.mu[static_cast<Eigen::Index>(i)] ==
                  baseline[static_cast<Eigen::Index>(i)]);
        }
    }
}

TEST_CASE("lognormal errors keep the conditional mean") {
    DgpParams params;
    params.n_exporters = 30;
    params.n_importers = 30;
    params.n_years = 6;
    params.intercept = 1.5;
    params.error_kind = DgpParams::ErrorKind::Lognormal;
    params.lognormal_sigma = 0.8;
    params.seed = 41;
    const auto generated = generate_panel(params);
    double ratio_sum = 0.0;
    for (std::size_t i = 0; i < generated.panel.size(); ++i)
        ratio_sum += generated.panel.trade(i) / generated.truth.mu[static_cast<Eigen::Index>(i)];
    const double mean_ratio = ratio_sum / static_cast<double>(generated.panel.size());
    CHECK(mean_ratio == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("parameter validation") {
    DgpParams params;
    params.n_exporters = 2;
    params.n_importers = 2;
    params.n_years = 2;
    CHECK_THROWS_AS(generate_panel(params), Error);  // too few cells
    params.n_years = 50;
    params.intercept = 800.0;
    CHECK_THROWS_WITH_AS(generate_panel(params), doctest::Contains("overflow"), Error);
    params.intercept = 0.0;
    params.sd_pair = -1.0;
    CHECK_THROWS_AS(generate_panel(params), Error);
}

TEST_CASE("selection_link ties pair effects to distance") {
    DgpParams params;
    params.n_exporters = 20;
    params.n_importers = 20;
    params.n_years = 2;
    params.sd_pair = 1.0;
    params.selection_link = 0.9;
    params.seed = 8;
    const auto generated = generate_panel(params);
    double cov = 0.0, var_d = 0.0, var_e = 0.0, mean_d = 0.0, mean_e = 0.0;
    const std::size_t n = generated.panel.size();
    for (std::size_t i = 0; i < n; ++i) {
        mean_d += generated.panel.covariate(i, 2);
        mean_e += generated.truth.eta_row[static_cast<Eigen::Index>(i)];
    }
    mean_d /= static_cast<double>(n);
    mean_e /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = generated.panel.covariate(i, 2) - mean_d;
        const double e = generated.truth.eta_row[static_cast<Eigen::Index>(i)] - mean_e;
        cov += d * e;
        var_d += d * d;
        var_e += e * e;
    }
    const double corr = cov / std::sqrt(var_d * var_e);
    CHECK(corr < -0.7);  // closer pairs carry larger effects
}
