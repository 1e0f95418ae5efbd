#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "gravbench/panel.hpp"
#include "gravbench/rng.hpp"

namespace gravbench {

// Ground-truth generator for multiplicative trade panels:
//   E[y] = exp(intercept + x'beta + alpha_it + gamma_jt + eta_ij + tau D).
struct DgpParams {
    int n_exporters = 10;
    int n_importers = 10;
    int n_years = 10;
    int first_year = 2000;
    double intercept = 0.0;
    std::array<double, kNumCovariates> beta{};  // kCovariateNames order
    double tau = 0.0;
    double treat_prob = 0.0;  // rows drawn treated with this probability
    double sd_exporter_year = 0.0;
    double sd_importer_year = 0.0;
    double sd_pair = 0.0;
    enum class ErrorKind { Poisson, Lognormal } error_kind = ErrorKind::Poisson;
    double lognormal_sigma = 0.5;
    // Correlation between the pair effect and (negative, standardized)
    // log distance; ties selection on pair effects to observable levels.
    double selection_link = 0.0;
    std::uint64_t seed = 1;
};

struct DgpTruth {
    Eigen::VectorXd mu;  // conditional mean including the treatment term
    std::vector<std::uint8_t> treated;
    Eigen::VectorXd alpha_row, gamma_row, eta_row;  // per-row effect values
    double intercept = 0.0;
    std::array<double, kNumCovariates> beta{};
    double tau = 0.0;
};

struct GeneratedPanel {
    TradePanel panel;
    DgpTruth truth;
};

GeneratedPanel generate_panel(const DgpParams& params);

// Conditional means with the treatment term removed.
Eigen::VectorXd true_counterfactual(const DgpTruth& truth, std::span<const std::int32_t> rows);

}  // namespace gravbench
