#pragma once

#include <optional>
#include <span>
#include <vector>

namespace gravbench {

// Observed and predicted outcomes over one repetition's test rows.
struct RepVectors {
    std::vector<double> observed;
    std::vector<double> predicted;
};

enum class SdConvention { Population, Sample };
enum class R2Mode { PerRepMean, Pooled };

struct IeSummary {
    double mean = 0.0;
    double se = 0.0;   // standard deviation of IE_k across repetitions
    double mse = 0.0;  // mean of (IE_k - 1)^2
};

struct MaeSummary {
    double mae = 0.0;
    double rmae = 0.0;
};

struct R2Summary {
    double value = 0.0;
    int skipped = 0;  // zero-variance repetitions (per-rep mode)
};

// sum(observed) / sum(predicted); empty when the denominator is not
// strictly positive (possible with tree-based predictions).
std::optional<double> imputation_estimator(std::span<const double> observed,
                                           std::span<const double> predicted);

// With the population convention, mse = se^2 + (mean - 1)^2 exactly.
IeSummary aggregate_ie(std::span<const double> ie, SdConvention convention = SdConvention::Population);

MaeSummary pooled_mae(std::span<const RepVectors> reps);
double pooled_rrmse(std::span<const RepVectors> reps);

// Squared Pearson correlation of observed and predicted values, either
// averaged per repetition (skipping zero-variance ones) or pooled.
R2Summary oos_r2(std::span<const RepVectors> reps, R2Mode mode = R2Mode::PerRepMean);

}  // namespace gravbench
