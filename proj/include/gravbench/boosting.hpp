#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gravbench/tree.hpp"

namespace gravbench {

struct GradientBoostingParams {
    int n_stages = 100;
    int depth = 3;
    double learning_rate = 0.1;
    int min_leaf = 1;
};

// Stagewise additive trees on squared loss: start from the sample mean, fit
// each shallow tree to the current residuals, add learning_rate times its
// output. Deterministic (all rows, all features at every split).
class GradientBoostingModel {
public:
    static GradientBoostingModel fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                     const GradientBoostingParams& params);

    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;

    // Mean squared training error after each stage (element 0: base value only).
    const std::vector<double>& training_loss() const { return train_loss_; }

private:
    double base_value_ = 0.0;
    double learning_rate_ = 0.1;
    std::vector<RegressionTree> trees_;
    std::vector<double> train_loss_;
};

}  // namespace gravbench
