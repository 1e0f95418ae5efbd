#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gravbench/panel.hpp"
#include "gravbench/ppml.hpp"

namespace gravbench {

// Per-column training statistics. Constant columns (sd = 0) are recorded and
// map to all-zero standardized columns.
struct Scaler {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;  // population convention
    std::vector<char> constant;
};

Scaler fit_scaler(const Eigen::MatrixXd& X);
Eigen::MatrixXd apply_scaler(const Scaler& scaler, const Eigen::MatrixXd& X);

struct FeatureSet {
    Eigen::MatrixXd X;  // rows x features
    std::vector<std::string> names;
    bool standardized = false;
    std::optional<Scaler> scaler;  // present when standardized
};

// Base gravity covariates, optionally augmented with the three fixed-effect
// values looked up from a fitted three-way model (which must have dimensions
// exporter-year, importer-year, pair). With `standardize`, columns are
// scaled to mean 0, sd 1 using these rows' statistics.
FeatureSet build_features(const TradePanel& panel, std::span<const std::int32_t> rows,
                          const PpmlFit* fe_fit, bool standardize);

// Features for further rows (e.g. a test set) reusing the training scaler.
FeatureSet build_features_like(const FeatureSet& train, const TradePanel& panel,
                               std::span<const std::int32_t> rows, const PpmlFit* fe_fit);

}  // namespace gravbench
