#include "gravbench/metrics.hpp"

#include <cmath>

#include "gravbench/common.hpp"

namespace gravbench {

std::optional<double> imputation_estimator(std::span<const double> observed,
                                           std::span<const double> predicted) {
    if (observed.size() != predicted.size() || observed.empty())
        throw Error("imputation_estimator: length mismatch or empty input");
    double sum_observed = 0.0, sum_predicted = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        sum_observed += observed[i];
        sum_predicted += predicted[i];
    }
    if (!(sum_predicted > 0.0)) return std::nullopt;
    return sum_observed / sum_predicted;
}

IeSummary aggregate_ie(std::span<const double> ie, SdConvention convention) {
    const std::size_t k = ie.size();
    if (k < 2) throw Error("aggregate_ie: need at least 2 repetitions");
    IeSummary out;
    for (double value : ie) out.mean += value;
    out.mean /= static_cast<double>(k);
    double var = 0.0;
    for (double value : ie) var += (value - out.mean) * (value - out.mean);
    var /= convention == SdConvention::Population ? static_cast<double>(k)
                                                  : static_cast<double>(k - 1);
    out.se = std::sqrt(var);
    for (double value : ie) out.mse += (value - 1.0) * (value - 1.0);
    out.mse /= static_cast<double>(k);
    return out;
}

MaeSummary pooled_mae(std::span<const RepVectors> reps) {
    double abs_error = 0.0, observed_sum = 0.0;
    std::size_t count = 0;
    for (const auto& rep : reps) {
        for (std::size_t i = 0; i < rep.observed.size(); ++i) {
            abs_error += std::fabs(rep.predicted[i] - rep.observed[i]);
            observed_sum += rep.observed[i];
        }
        count += rep.observed.size();
    }
    if (count == 0) throw Error("pooled_mae: no observations");
    MaeSummary out;
    out.mae = abs_error / static_cast<double>(count);
    const double mean_observed = observed_sum / static_cast<double>(count);
    if (mean_observed == 0.0) throw Error("pooled_mae: zero mean observed value");
    out.rmae = out.mae / mean_observed;
    return out;
}

double pooled_rrmse(std::span<const RepVectors> reps) {
    double sq_error = 0.0, observed_sum = 0.0;
    std::size_t count = 0;
    for (const auto& rep : reps) {
        for (std::size_t i = 0; i < rep.observed.size(); ++i) {
            const double e = rep.predicted[i] - rep.observed[i];
            sq_error += e * e;
            observed_sum += rep.observed[i];
        }
        count += rep.observed.size();
    }
    if (count == 0) throw Error("pooled_rrmse: no observations");
    const double mean_observed = observed_sum / static_cast<double>(count);
    if (mean_observed == 0.0) throw Error("pooled_rrmse: zero mean observed value");
    return std::sqrt(sq_error / static_cast<double>(count)) / mean_observed;
}

namespace {

// Squared Pearson correlation; nullopt when either vector is constant.
std::optional<double> squared_correlation(std::span<const double> a, std::span<const double> b) {
    const double n = static_cast<double>(a.size());
    double mean_a = 0.0, mean_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        mean_a += a[i];
        mean_b += b[i];
    }
    mean_a /= n;
    mean_b /= n;
    double var_a = 0.0, var_b = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        var_a += (a[i] - mean_a) * (a[i] - mean_a);
        var_b += (b[i] - mean_b) * (b[i] - mean_b);
        cov += (a[i] - mean_a) * (b[i] - mean_b);
    }
    if (var_a <= 0.0 || var_b <= 0.0) return std::nullopt;
    return (cov * cov) / (var_a * var_b);
}

}  // namespace

R2Summary oos_r2(std::span<const RepVectors> reps, R2Mode mode) {
    R2Summary out;
    if (mode == R2Mode::Pooled) {
        std::vector<double> observed, predicted;
        for (const auto& rep : reps) {
            observed.insert(observed.end(), rep.observed.begin(), rep.observed.end());
            predicted.insert(predicted.end(), rep.predicted.begin(), rep.predicted.end());
        }
        const auto r2 = squared_correlation(observed, predicted);
        if (!r2) throw Error("oos_r2: zero variance in pooled sample");
        out.value = *r2;
        return out;
    }
    double total = 0.0;
    int used = 0;
    for (const auto& rep : reps) {
        const auto r2 = squared_correlation(rep.observed, rep.predicted);
        if (!r2) {
            ++out.skipped;
            continue;
        }
        total += *r2;
        ++used;
    }
    if (used == 0) throw Error("oos_r2: every repetition had zero variance");
    out.value = total / used;
    return out;
}

}  // namespace gravbench
