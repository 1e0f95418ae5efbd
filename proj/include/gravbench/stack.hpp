#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

namespace gravbench {

struct StackWeights {
    Eigen::VectorXd w;       // >= 0, sums to one
    double objective = 0.0;  // ||y - P w||^2 at the solution
};

// argmin ||y - P w||^2 subject to w >= 0, sum w = 1, solved exactly by
// active-set enumeration over supports (columns are few). With degenerate P
// several supports can tie; the first optimal support in enumeration order
// is returned.
StackWeights simplex_least_squares(const Eigen::MatrixXd& P, const Eigen::VectorXd& y);

// Fold index per row such that all rows of a pair share a fold.
std::vector<int> pair_clustered_folds(std::span<const std::int32_t> pair_ids, int folds,
                                      std::uint64_t seed);

}  // namespace gravbench
