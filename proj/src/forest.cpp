#include "gravbench/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gravbench/common.hpp"
#include "gravbench/parallel.hpp"

namespace gravbench {

RandomForestModel RandomForestModel::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                         const RandomForestParams& params, std::uint64_t seed) {
    const Eigen::Index n = X.rows();
    if (n < 2) throw Error("random forest: need at least 2 rows");
    if (params.n_trees < 1) throw Error("random forest: need at least 1 tree");

    TreeParams tree_params;
    tree_params.max_depth = params.max_depth;
    tree_params.min_leaf = params.min_leaf;
    tree_params.mtry = params.mtry > 0
                           ? params.mtry
                           : std::max(1, static_cast<int>(X.cols()) / 3);

    RandomForestModel model;
    model.trees_.resize(static_cast<std::size_t>(params.n_trees));
    std::vector<std::vector<char>> in_bag;
    if (params.compute_oob)
        in_bag.assign(static_cast<std::size_t>(params.n_trees),
                      std::vector<char>(static_cast<std::size_t>(n), 0));

    parallel_for(static_cast<std::size_t>(params.n_trees), params.threads, [&](std::size_t t) {
        Rng rng = Rng::from(seed, {0x7265656eULL, t});
        std::vector<std::int32_t> sample(static_cast<std::size_t>(n));
        for (auto& row : sample)
            row = static_cast<std::int32_t>(rng.uniform_int(static_cast<std::uint64_t>(n)));
        std::sort(sample.begin(), sample.end());
        if (params.compute_oob)
            for (std::int32_t row : sample) in_bag[t][static_cast<std::size_t>(row)] = 1;
        model.trees_[t].fit(X, y, sample, tree_params, &rng);
    });

    if (params.compute_oob) {
        Eigen::VectorXd sums = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(n);
        Eigen::RowVectorXd row(X.cols());
        for (Eigen::Index i = 0; i < n; ++i) {
            row = X.row(i);
            for (std::size_t t = 0; t < model.trees_.size(); ++t) {
                if (!in_bag[t][static_cast<std::size_t>(i)]) {
                    sums[i] += model.trees_[t].predict_row(row);
                    counts[i] += 1.0;
                }
            }
        }
        Eigen::VectorXd oob(n);
        for (Eigen::Index i = 0; i < n; ++i)
            oob[i] = counts[i] > 0 ? sums[i] / counts[i]
                                   : std::numeric_limits<double>::quiet_NaN();
        model.oob_ = std::move(oob);
    }
    return model;
}

Eigen::VectorXd RandomForestModel::predict(const Eigen::MatrixXd& X) const {
    Eigen::VectorXd out(X.rows());
    Eigen::RowVectorXd row(X.cols());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        row = X.row(i);
        double sum = 0.0;
        for (const auto& tree : trees_) sum += tree.predict_row(row);
        out[i] = sum / static_cast<double>(trees_.size());
    }
    return out;
}

}  // namespace gravbench
