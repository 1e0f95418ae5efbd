#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "gravbench/panel.hpp"
#include "gravbench/rng.hpp"

namespace gravbench {

// Logistic pair-selection design: a controls the test-set size, b the
// dependence of selection on the (standardized) bilateral fixed effect.
struct SelectionParams {
    double a = 5.0;
    double b = 1.0;
};

// Partition of a panel into training rows and a held-out test set. Test
// rows are the latest years of the selected pairs, so every test pair keeps
// strictly earlier training years.
struct SplitPlan {
    std::vector<std::int32_t> test_rows;
    std::vector<std::int32_t> train_rows;
    int repaired_rows = 0;  // moved back to training for group coverage
    std::size_t n_k() const { return test_rows.size(); }
};

// Affine rescale to mean zero, population standard deviation one.
// Throws on fewer than 2 pairs or zero variance.
std::map<std::int32_t, double> standardize_pair_fe(const std::map<std::int32_t, double>& eta);

// p = 1 / (1 + exp(a - b * eta_std)); in (0, 1), increasing in eta when b > 0.
double selection_prob(double eta_std, double a, double b);

// One independent uniform draw per pair, in ascending pair-id order.
std::vector<std::int32_t> select_pairs(const std::map<std::int32_t, double>& probs, Rng& rng);

// 1-based count of training positions: ceil(0.6 T) + delta, clamped so that
// at least one training and one test year remain.
int year_cut_position(int total_years, int delta);

// Test years of a pair: positions after the shifted 6th-decile cut, with
// delta drawn uniformly on {-2,...,2}. Requires at least 5 years.
std::vector<int> select_years(std::span<const int> years, Rng& rng);

// Full split for one repetition. Draw order per pair: selection uniform,
// then (for selected pairs) the year-cut shift. An empty test draw is
// retried once, then an error. Coverage of every test row's exporter-year
// and importer-year group in training is enforced; violating rows are moved
// back to training and counted in repaired_rows.
SplitPlan make_split(const TradePanel& panel, const SelectionParams& params,
                     const std::map<std::int32_t, double>& eta_std, Rng& rng);

}  // namespace gravbench
