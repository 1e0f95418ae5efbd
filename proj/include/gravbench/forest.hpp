#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "gravbench/rng.hpp"
#include "gravbench/tree.hpp"

namespace gravbench {

struct RandomForestParams {
    int n_trees = 100;
    int max_depth = -1;
    int min_leaf = 1;
    int mtry = 0;  // 0: max(1, p/3)
    bool compute_oob = false;
    int threads = 1;
};

// Bagged regression trees; prediction is the mean over trees. Tree t draws
// its bootstrap sample and split features from substream (seed, t), so a
// fit is reproducible and independent of the thread schedule.
class RandomForestModel {
public:
    static RandomForestModel fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 const RandomForestParams& params, std::uint64_t seed);

    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;

    // Mean prediction of trees whose bootstrap sample missed the row; NaN
    // for rows that every tree saw.
    const std::optional<Eigen::VectorXd>& oob_predictions() const { return oob_; }

private:
    std::vector<RegressionTree> trees_;
    std::optional<Eigen::VectorXd> oob_;
};

}  // namespace gravbench
