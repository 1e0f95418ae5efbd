#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "gravbench/rng.hpp"

namespace gravbench {

struct TreeParams {
    int max_depth = -1;  // -1: unlimited
    int min_leaf = 1;
    int mtry = 0;  // 0 or >= p: consider every feature (no rng draw)
};

// CART regression tree with exact greedy squared-error splits. Sorting uses
// row-index tie-breaks, so fits are deterministic for a given rng state.
class RegressionTree {
public:
    void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
             std::span<const std::int32_t> rows, const TreeParams& params, Rng* rng);

    double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
    bool empty() const { return nodes_.empty(); }

private:
    struct Node {
        int feature = -1;  // -1: leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0;
    };

    int build(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
              std::vector<std::int32_t>& rows, int begin, int end, int depth,
              const TreeParams& params, Rng* rng);

    std::vector<Node> nodes_;
};

}  // namespace gravbench
