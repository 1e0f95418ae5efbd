#include "gravbench/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "gravbench/gravity.hpp"

namespace gravbench {

std::map<std::int32_t, double> standardize_pair_fe(const std::map<std::int32_t, double>& eta) {
    if (eta.size() < 2) throw Error("standardize_pair_fe: need at least 2 pairs");
    double mean = 0.0;
    for (const auto& [pid, value] : eta) mean += value;
    mean /= static_cast<double>(eta.size());
    double var = 0.0;
    for (const auto& [pid, value] : eta) var += (value - mean) * (value - mean);
    var /= static_cast<double>(eta.size());
    if (var <= 0.0) throw Error("standardize_pair_fe: zero variance");
    const double sd = std::sqrt(var);
    std::map<std::int32_t, double> out;
    for (const auto& [pid, value] : eta) out[pid] = (value - mean) / sd;
    return out;
}

double selection_prob(double eta_std, double a, double b) {
    return 1.0 / (1.0 + std::exp(a - b * eta_std));
}

std::vector<std::int32_t> select_pairs(const std::map<std::int32_t, double>& probs, Rng& rng) {
    std::vector<std::int32_t> selected;
    for (const auto& [pid, p] : probs) {
        if (rng.uniform() < p) selected.push_back(pid);
    }
    return selected;
}

int year_cut_position(int total_years, int delta) {
    const int decile = static_cast<int>(std::ceil(0.6 * total_years));
    return std::clamp(decile + delta, 1, total_years - 1);
}

std::vector<int> select_years(std::span<const int> years, Rng& rng) {
    const int total = static_cast<int>(years.size());
    if (total < 5) throw Error("select_years: need at least 5 years");
    const int delta = static_cast<int>(rng.uniform_int(-2, 2));
    const int cut = year_cut_position(total, delta);
    std::vector<int> test_years;
    for (int pos = cut; pos < total; ++pos) test_years.push_back(years[pos]);
    return test_years;
}

namespace {

SplitPlan draw_split(const TradePanel& panel, const SelectionParams& params,
                     const std::map<std::int32_t, double>& eta_std, Rng& rng) {
    SplitPlan plan;
    std::vector<char> is_test(panel.size(), 0);
    for (const auto& [pid, eta] : eta_std) {
        const auto positions = panel.pair_positions(pid);
        if (positions.empty()) continue;
        const double p = selection_prob(eta, params.a, params.b);
        if (!(rng.uniform() < p)) continue;
        const int total = static_cast<int>(positions.size());
        if (total < 5)
            throw Error("make_split: pair " + panel.pair_label(pid) + " has fewer than 5 years");
        const int delta = static_cast<int>(rng.uniform_int(-2, 2));
        const int cut = year_cut_position(total, delta);
        for (int pos = cut; pos < total; ++pos) is_test[positions[pos]] = 1;
    }

    // Identifiability repair: every test row's exporter-year and
    // importer-year group must also appear among training rows.
    int repaired = 0;
    for (;;) {
        std::unordered_set<std::int64_t> train_groups;
        for (std::size_t i = 0; i < panel.size(); ++i) {
            if (is_test[i]) continue;
            train_groups.insert(country_year_key(panel.exporter_id(i), panel.year(i)));
            train_groups.insert(~country_year_key(panel.importer_id(i), panel.year(i)));
        }
        bool changed = false;
        for (std::size_t i = 0; i < panel.size(); ++i) {
            if (!is_test[i]) continue;
            const bool covered =
                train_groups.count(country_year_key(panel.exporter_id(i), panel.year(i))) &&
                train_groups.count(~country_year_key(panel.importer_id(i), panel.year(i)));
            if (!covered) {
                is_test[i] = 0;
                ++repaired;
                changed = true;
            }
        }
        if (!changed) break;
    }

    for (std::size_t i = 0; i < panel.size(); ++i) {
        if (is_test[i]) {
            plan.test_rows.push_back(static_cast<std::int32_t>(i));
        } else {
            plan.train_rows.push_back(static_cast<std::int32_t>(i));
        }
    }
    plan.repaired_rows = repaired;
    return plan;
}

}  // namespace

SplitPlan make_split(const TradePanel& panel, const SelectionParams& params,
                     const std::map<std::int32_t, double>& eta_std, Rng& rng) {
    for (std::int32_t pid = 0; pid < static_cast<std::int32_t>(panel.num_pairs()); ++pid) {
        if (!panel.pair_positions(pid).empty() && !eta_std.count(pid))
            throw Error("make_split: no selection value for pair " + panel.pair_label(pid));
    }
    SplitPlan plan = draw_split(panel, params, eta_std, rng);
    if (plan.test_rows.empty()) plan = draw_split(panel, params, eta_std, rng);
    if (plan.test_rows.empty()) throw Error("make_split: empty test set after one redraw");
    return plan;
}

}  // namespace gravbench
