#include "gravbench/boosting.hpp"

#include <numeric>

#include "gravbench/common.hpp"

namespace gravbench {

GradientBoostingModel GradientBoostingModel::fit(const Eigen::MatrixXd& X,
                                                 const Eigen::VectorXd& y,
                                                 const GradientBoostingParams& params) {
    const Eigen::Index n = X.rows();
    if (n < 2) throw Error("gradient boosting: need at least 2 rows");
    if (params.n_stages < 0) throw Error("gradient boosting: negative stage count");

    GradientBoostingModel model;
    model.base_value_ = y.mean();
    model.learning_rate_ = params.learning_rate;

    Eigen::VectorXd residual = y.array() - model.base_value_;
    model.train_loss_.push_back(residual.squaredNorm() / static_cast<double>(n));

    TreeParams tree_params;
    tree_params.max_depth = params.depth;
    tree_params.min_leaf = params.min_leaf;

    std::vector<std::int32_t> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), 0);
    Eigen::RowVectorXd row(X.cols());
    for (int stage = 0; stage < params.n_stages; ++stage) {
        RegressionTree tree;
        tree.fit(X, residual, rows, tree_params, nullptr);
        for (Eigen::Index i = 0; i < n; ++i) {
            row = X.row(i);
            residual[i] -= params.learning_rate * tree.predict_row(row);
        }
        model.trees_.push_back(std::move(tree));
        model.train_loss_.push_back(residual.squaredNorm() / static_cast<double>(n));
    }
    return model;
}

Eigen::VectorXd GradientBoostingModel::predict(const Eigen::MatrixXd& X) const {
    Eigen::VectorXd out = Eigen::VectorXd::Constant(X.rows(), base_value_);
    Eigen::RowVectorXd row(X.cols());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        row = X.row(i);
        for (const auto& tree : trees_) out[i] += learning_rate_ * tree.predict_row(row);
    }
    return out;
}

}  // namespace gravbench
