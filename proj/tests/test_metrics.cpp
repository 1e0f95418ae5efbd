#include "doctest.h"
#include "gravbench/common.hpp"
#include "gravbench/metrics.hpp"
#include "gravbench/rng.hpp"

#include <cmath>
#include <vector>

using namespace gravbench;

namespace {

// Brute-force recomputations, kept deliberately naive and separate from the
// production code paths.
double brute_ie(const std::vector<double>& y, const std::vector<double>& p) {
    double a = 0, b = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        a += y[i];
        b += p[i];
    }
    return a / b;
}

double brute_rmae(const std::vector<RepVectors>& reps) {
    double abs_sum = 0, y_sum = 0;
    long n = 0;
    for (const auto& rep : reps)
        for (std::size_t i = 0; i < rep.observed.size(); ++i) {
            abs_sum += std::fabs(rep.predicted[i] - rep.observed[i]);
            y_sum += rep.observed[i];
            ++n;
        }
    return (abs_sum / n) / (y_sum / n);
}

double brute_rrmse(const std::vector<RepVectors>& reps) {
    double sq_sum = 0, y_sum = 0;
    long n = 0;
    for (const auto& rep : reps)
        for (std::size_t i = 0; i < rep.observed.size(); ++i) {
            const double e = rep.predicted[i] - rep.observed[i];
            sq_sum += e * e;
            y_sum += rep.observed[i];
            ++n;
        }
    return std::sqrt(sq_sum / n) / (y_sum / n);
}

double brute_corr2(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double saa = 0, sbb = 0, sab = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
        sab += (a[i] - ma) * (b[i] - mb);
    }
    return sab * sab / (saa * sbb);
}

std::vector<RepVectors> random_reps(Rng& rng, int k) {
    std::vector<RepVectors> reps(k);
    for (auto& rep : reps) {
        const int n = 3 + static_cast<int>(rng.uniform_int(40));
        for (int i = 0; i < n; ++i) {
            rep.observed.push_back(rng.uniform(0.0, 50.0));
            rep.predicted.push_back(rng.uniform(-5.0, 45.0));
        }
    }
    return reps;
}

}  // namespace

TEST_CASE("imputation estimator basics") {
    CHECK(*imputation_estimator(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}) ==
          1.0);
    CHECK(*imputation_estimator(std::vector<double>{2, 4}, std::vector<double>{1, 2}) == 2.0);
    // over- and under-predictions net out inside the sums
    CHECK(*imputation_estimator(std::vector<double>{1, 1}, std::vector<double>{2, 0}) == 1.0);
    CHECK(!imputation_estimator(std::vector<double>{1, 1}, std::vector<double>{1, -1}));
    CHECK_THROWS_AS(imputation_estimator({}, {}), Error);
}

TEST_CASE("aggregate_ie moments and the mse identity") {
    const auto flat = aggregate_ie(std::vector<double>{1, 1, 1});
    CHECK(flat.mean == 1.0);
    CHECK(flat.se == 0.0);
    CHECK(flat.mse == 0.0);

    const auto two = aggregate_ie(std::vector<double>{1.1, 0.9});
    CHECK(two.mean == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(two.se == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(two.mse == doctest::Approx(0.01).epsilon(1e-12));

    Rng rng(21);
    for (int round = 0; round < 20; ++round) {
        std::vector<double> ies;
        const int k = 2 + static_cast<int>(rng.uniform_int(60));
        for (int i = 0; i < k; ++i) ies.push_back(rng.uniform(0.3, 2.0));
        const auto s = aggregate_ie(ies, SdConvention::Population);
        CHECK(std::fabs(s.mse - (s.se * s.se + (s.mean - 1.0) * (s.mean - 1.0))) < 1e-12);
        const auto sample = aggregate_ie(ies, SdConvention::Sample);
        CHECK(sample.se >= s.se);
    }
    CHECK_THROWS_AS(aggregate_ie(std::vector<double>{1.0}), Error);
}

TEST_CASE("pooled mae and rrmse hand values") {
    std::vector<RepVectors> reps{{{2, 4}, {1, 2}}};
    const auto mae = pooled_mae(reps);
    CHECK(mae.mae == doctest::Approx(1.5));
    CHECK(mae.rmae == doctest::Approx(0.5));
    CHECK(pooled_rrmse(reps) == doctest::Approx(std::sqrt(2.5) / 3.0).epsilon(1e-12));

    std::vector<RepVectors> perfect{{{2, 4}, {2, 4}}};
    CHECK(pooled_mae(perfect).mae == 0.0);
    CHECK(pooled_rrmse(perfect) == 0.0);
}

TEST_CASE("metrics match brute force on random instances") {
    Rng rng(4711);
    for (int round = 0; round < 50; ++round) {
        const auto reps = random_reps(rng, 2 + static_cast<int>(rng.uniform_int(6)));
        CHECK(pooled_mae(reps).rmae == doctest::Approx(brute_rmae(reps)).epsilon(1e-12));
        CHECK(pooled_rrmse(reps) == doctest::Approx(brute_rrmse(reps)).epsilon(1e-12));
        CHECK(pooled_rrmse(reps) >= pooled_mae(reps).rmae);  // quadratic >= arithmetic mean

        std::vector<double> ies;
        for (const auto& rep : reps) {
            const auto ie = imputation_estimator(rep.observed, rep.predicted);
            if (ie) {
                ies.push_back(*ie);
                CHECK(*ie == doctest::Approx(brute_ie(rep.observed, rep.predicted))
                                 .epsilon(1e-12));
            }
        }

        double mean_r2 = 0.0;
        std::vector<double> all_obs, all_pred;
        for (const auto& rep : reps) {
            mean_r2 += brute_corr2(rep.observed, rep.predicted);
            all_obs.insert(all_obs.end(), rep.observed.begin(), rep.observed.end());
            all_pred.insert(all_pred.end(), rep.predicted.begin(), rep.predicted.end());
        }
        mean_r2 /= static_cast<double>(reps.size());
        const auto per_rep = oos_r2(reps, R2Mode::PerRepMean);
        CHECK(per_rep.skipped == 0);
        CHECK(per_rep.value == doctest::Approx(mean_r2).epsilon(1e-12));
        CHECK(oos_r2(reps, R2Mode::Pooled).value ==
              doctest::Approx(brute_corr2(all_obs, all_pred)).epsilon(1e-12));
        CHECK(per_rep.value >= 0.0);
        CHECK(per_rep.value <= 1.0);
    }
}

TEST_CASE("r2 corner cases") {
    std::vector<RepVectors> affine{{{1, 2, 3, 4}, {5, 7, 9, 11}}};  // 2y + 3
    CHECK(oos_r2(affine).value == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<RepVectors> orthogonal{{{-1, 0, 1}, {1, 0, 1}}};
    CHECK(oos_r2(orthogonal).value == doctest::Approx(0.0).epsilon(1e-12));

    std::vector<RepVectors> degenerate{{{1, 1}, {1, 2}}, {{-1, 0, 1}, {2, 4, 6}}};
    const auto result = oos_r2(degenerate, R2Mode::PerRepMean);
    CHECK(result.skipped == 1);
    CHECK(result.value == doctest::Approx(1.0));
}

TEST_CASE("mean ie of identical repetitions equals the single-rep ie") {
    std::vector<double> y{3, 1, 4}, p{2, 2, 2};
    const double single = *imputation_estimator(y, p);
    const auto agg = aggregate_ie(std::vector<double>{single, single, single});
    CHECK(agg.mean == single);
    CHECK(agg.se == 0.0);
}
