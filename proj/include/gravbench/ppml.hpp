#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gravbench/common.hpp"

namespace gravbench {

// One fixed-effect dimension, with the group key of every design row
// materialized. `label` renders keys in error messages.
struct FeDimension {
    std::string name;
    std::vector<std::int64_t> keys;
    std::function<std::string(std::int64_t)> label;

    std::string key_label(std::int64_t key) const {
        return label ? label(key) : std::to_string(key);
    }
};

struct PpmlOptions {
    double tol_dev = 1e-9;        // relative deviance change
    int max_iterations = 200;
    double tol_project = 1e-10;   // max weighted group mean, per scaled column
    int max_project_sweeps = 10000;
    double tol_rank = 1e-9;       // collinearity threshold (squared-norm ratio)
    double tol_recover = 1e-8;    // max |log mu - x*beta - sum fe| allowed
    int max_recover_sweeps = 50000;
    bool keep_trace = false;
};

// Recovered values of one fixed-effect dimension.
struct FeValues {
    std::string name;
    std::unordered_map<std::int64_t, std::int32_t> group_of;
    std::vector<std::int64_t> group_key;
    Eigen::VectorXd values;
    std::function<std::string(std::int64_t)> label;

    double value_for(std::int64_t key) const {
        const auto it = group_of.find(key);
        if (it == group_of.end())
            throw UnidentifiedGroupError(name, label ? label(key) : std::to_string(key));
        return values[it->second];
    }
};

struct CollinearityResult {
    std::vector<int> kept;
    std::vector<int> dropped;
};

struct PpmlFit {
    Eigen::VectorXd beta;                 // over kept columns
    std::vector<int> kept_columns;        // indices into the input design
    std::vector<int> dropped_columns;
    std::vector<std::string> kept_names;
    std::vector<std::string> dropped_names;
    std::vector<FeValues> fe;
    std::vector<std::int32_t> active_rows;  // rows used for estimation
    Eigen::VectorXd fitted_mu;              // per active row, strictly positive
    std::size_t separated_rows = 0;         // rows excluded: all-zero groups
    int iterations = 0;
    bool converged = false;
    double final_deviance = 0.0;
    double final_deviance_change = 0.0;
    int components = 1;
    double max_score_regressor = 0.0;  // |sum (y-mu) x| / sum mu|x|, worst kept column
    double max_score_group = 0.0;      // |sum_g (y-mu)| / sum_g mu, worst group
    double sum_y = 0.0;
    double sum_mu = 0.0;
    std::vector<std::string> trace;

    // exp(x'beta + sum of fixed effects). `full_row` is over the original
    // design columns; kept ones are selected internally. Throws
    // UnidentifiedGroupError when a key was not seen in training.
    double predict_mu(std::span<const double> full_row,
                      std::span<const std::int64_t> keys) const;
};

// A column is dropped iff, after unweighted alternating projection against
// the fixed effects, it has (relative) within variance below tol_rank or
// lies in the span of previously kept transformed columns. Scale-invariant.
CollinearityResult drop_collinear(const Eigen::MatrixXd& X,
                                  const std::vector<FeDimension>& fe,
                                  double tol_rank,
                                  std::span<const std::int32_t> rows = {});

// Poisson pseudo-maximum likelihood with fixed effects absorbed by weighted
// alternating projections inside each IRLS step. Throws on non-convergence,
// an all-zero outcome, or dimension mismatches.
PpmlFit fit_ppml(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                 const std::vector<std::string>& names,
                 const std::vector<FeDimension>& fe, const PpmlOptions& opts = {});

// Re-derives per-group values from a converged fit so that
// exp(x'beta + sum_d fe_d) reproduces fitted_mu on every active row. Values
// of every dimension after the first are mean-zero per connected component,
// with the compensating constants folded into the first dimension.
std::vector<FeValues> recover_fixed_effects(const PpmlFit& fit, const Eigen::MatrixXd& X,
                                            const std::vector<FeDimension>& fe,
                                            const PpmlOptions& opts = {});

double poisson_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu);

}  // namespace gravbench
