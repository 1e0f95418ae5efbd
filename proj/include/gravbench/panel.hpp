#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gravbench/common.hpp"

namespace gravbench {

// Base gravity covariates, in the column order used throughout.
inline constexpr std::array<const char*, 10> kCovariateNames = {
    "ln_gdp_o", "ln_gdp_d", "ln_dist", "eu",     "cu",
    "rta",      "contig",   "comlang", "colony", "sanction"};
inline constexpr int kNumCovariates = 10;
inline constexpr int kFirstIndicator = 3;  // eu..sanction are 0/1

// One bilateral observation, fully materialized (row-level API).
struct Observation {
    std::string exporter;
    std::string importer;
    int year = 0;
    double trade = 0.0;
    std::array<double, kNumCovariates> covariates{};  // kCovariateNames order
};

// Column-name map for CSV ingestion. `values_in_levels` means gdp and dist
// columns hold levels and are log-transformed at load; trade is never logged.
struct Schema {
    std::string exporter = "exporter";
    std::string importer = "importer";
    std::string year = "year";
    std::string trade = "trade";
    std::array<std::string, kNumCovariates> covariates = {
        "ln_gdp_o", "ln_gdp_d", "ln_dist", "eu",     "cu",
        "rta",      "contig",   "comlang", "colony", "sanction"};
    bool values_in_levels = false;
};

struct LoadReport {
    std::size_t rows_read = 0;
    std::size_t rows_kept = 0;
    std::size_t rejected_missing_value = 0;
    std::size_t rejected_self_flow = 0;
    std::size_t rejected_bad_indicator = 0;
    std::size_t rejected() const {
        return rejected_missing_value + rejected_self_flow + rejected_bad_indicator;
    }
};

// Immutable bilateral trade panel, stored columnar. Country and pair ids are
// assigned once at construction; subset() preserves them so fixed-effect
// group keys stay valid across train/test views of the same panel.
class TradePanel {
public:
    TradePanel() = default;
    static TradePanel from_observations(std::vector<Observation> rows);

    std::size_t size() const { return trade_.size(); }
    bool empty() const { return trade_.empty(); }

    std::int32_t exporter_id(std::size_t i) const { return exporter_[i]; }
    std::int32_t importer_id(std::size_t i) const { return importer_[i]; }
    int year(std::size_t i) const { return year_[i]; }
    double trade(std::size_t i) const { return trade_[i]; }
    double covariate(std::size_t i, int c) const { return covariates_[c][i]; }
    std::span<const double> covariate_column(int c) const { return covariates_[c]; }
    std::span<const double> trade_column() const { return trade_; }

    const std::string& country(std::int32_t id) const { return countries_[id]; }
    std::size_t num_countries() const { return countries_.size(); }

    std::int32_t pair_id(std::size_t i) const { return pair_[i]; }
    std::size_t num_pairs() const { return pair_obs_.size(); }
    // Pairs with no observations in this view have empty position lists.
    std::size_t num_present_pairs() const;
    const std::pair<std::int32_t, std::int32_t>& pair_countries(std::int32_t pid) const {
        return pair_defs_[pid];
    }
    std::string pair_label(std::int32_t pid) const;
    // Observation positions of a pair, strictly year-sorted.
    std::span<const std::int32_t> pair_positions(std::int32_t pid) const { return pair_obs_[pid]; }

    int year_min() const { return year_min_; }
    int year_max() const { return year_max_; }

    Observation at(std::size_t i) const;

    // New panel holding `rows` (positions into this panel) in the given
    // order; country and pair ids are carried over unchanged.
    TradePanel subset(std::span<const std::int32_t> rows) const;

    std::size_t zero_flow_count() const;
    std::string summary() const;

    // Consistency check used by tests: duplicate triples, index agreement,
    // strictly sorted pair years. Throws on violation.
    void validate() const;

private:
    void rebuild_indexes();

    std::vector<std::string> countries_;
    std::vector<std::pair<std::int32_t, std::int32_t>> pair_defs_;
    std::vector<std::int32_t> exporter_, importer_, pair_;
    std::vector<int> year_;
    std::vector<double> trade_;
    std::array<std::vector<double>, kNumCovariates> covariates_;
    std::vector<std::vector<std::int32_t>> pair_obs_;
    int year_min_ = 0, year_max_ = 0;
};

// Loads a delimited-text panel. Structural problems (missing file or column,
// unparseable or negative trade, duplicate (exporter, importer, year)) throw
// with the offending row number. Rows with missing or invalid covariates are
// rejected and counted in `report`.
TradePanel load_panel(const std::string& path, const Schema& schema = {},
                      LoadReport* report = nullptr);

// Writes the panel back in the schema's column layout; reals carry enough
// digits to round-trip.
void write_panel_csv(const TradePanel& panel, const std::string& path,
                     const Schema& schema = {});

// Keeps exactly the pairs with `required_count` observations inside the
// year window, restricted to the window. Throws if the result is empty.
TradePanel balance_panel(const TradePanel& panel, int window_lo, int window_hi,
                         int required_count);

}  // namespace gravbench
