#include "gravbench/tree.hpp"

#include <algorithm>
#include <numeric>

#include "gravbench/common.hpp"

namespace gravbench {

namespace {

struct BestSplit {
    int feature = -1;
    double threshold = 0.0;
    double gain = -1.0;
};

}  // namespace

void RegressionTree::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         std::span<const std::int32_t> rows, const TreeParams& params,
                         Rng* rng) {
    if (rows.empty()) throw Error("RegressionTree: no rows");
    nodes_.clear();
    std::vector<std::int32_t> work(rows.begin(), rows.end());
    build(X, y, work, 0, static_cast<int>(work.size()), 0, params, rng);
}

int RegressionTree::build(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          std::vector<std::int32_t>& rows, int begin, int end, int depth,
                          const TreeParams& params, Rng* rng) {
    const int n = end - begin;
    double sum = 0.0;
    for (int i = begin; i < end; ++i) sum += y[rows[i]];
    const double mean = sum / n;

    const int node_index = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{});
    nodes_[node_index].value = mean;

    const bool depth_ok = params.max_depth < 0 || depth < params.max_depth;
    if (!depth_ok || n < 2 * params.min_leaf || n < 2) return node_index;

    bool constant = true;
    for (int i = begin + 1; i < end && constant; ++i)
        if (y[rows[i]] != y[rows[begin]]) constant = false;
    if (constant) return node_index;

    const int p = static_cast<int>(X.cols());
    std::vector<int> features(static_cast<std::size_t>(p));
    std::iota(features.begin(), features.end(), 0);
    int n_try = p;
    if (params.mtry > 0 && params.mtry < p) {
        if (!rng) throw Error("RegressionTree: mtry < p requires an rng");
        n_try = params.mtry;
        for (int k = 0; k < n_try; ++k) {
            const int j = k + static_cast<int>(rng->uniform_int(
                                  static_cast<std::uint64_t>(p - k)));
            std::swap(features[k], features[j]);
        }
    }

    // (value, row) pairs sorted by value with row tie-break.
    std::vector<std::pair<double, std::int32_t>> order(static_cast<std::size_t>(n));
    BestSplit best;
    for (int f = 0; f < n_try; ++f) {
        const int feature = features[f];
        for (int i = 0; i < n; ++i) {
            const std::int32_t row = rows[begin + i];
            order[static_cast<std::size_t>(i)] = {X(row, feature), row};
        }
        std::sort(order.begin(), order.end());

        double left_sum = 0.0;
        for (int i = 0; i + 1 < n; ++i) {
            left_sum += y[order[static_cast<std::size_t>(i)].second];
            const int left_n = i + 1;
            const int right_n = n - left_n;
            if (left_n < params.min_leaf || right_n < params.min_leaf) continue;
            const double lo = order[static_cast<std::size_t>(i)].first;
            const double hi = order[static_cast<std::size_t>(i + 1)].first;
            if (lo == hi) continue;
            const double right_sum = sum - left_sum;
            const double gain =
                left_sum * left_sum / left_n + right_sum * right_sum / right_n;
            if (gain > best.gain) {
                best.gain = gain;
                best.feature = feature;
                best.threshold = lo + (hi - lo) / 2.0;
            }
        }
    }

    const double parent_score = sum * sum / n;
    if (best.feature < 0 || best.gain <= parent_score + 1e-12 * std::fabs(parent_score))
        return node_index;

    const auto middle = std::stable_partition(
        rows.begin() + begin, rows.begin() + end,
        [&](std::int32_t row) { return X(row, best.feature) <= best.threshold; });
    const int split = static_cast<int>(middle - rows.begin());
    if (split == begin || split == end) return node_index;  // numeric guard

    nodes_[node_index].feature = best.feature;
    nodes_[node_index].threshold = best.threshold;
    const int left = build(X, y, rows, begin, split, depth + 1, params, rng);
    nodes_[node_index].left = left;
    const int right = build(X, y, rows, split, end, depth + 1, params, rng);
    nodes_[node_index].right = right;
    return node_index;
}

double RegressionTree::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    int node = 0;
    while (nodes_[node].feature >= 0) {
        node = x[nodes_[node].feature] <= nodes_[node].threshold ? nodes_[node].left
                                                                 : nodes_[node].right;
    }
    return nodes_[node].value;
}

}  // namespace gravbench
