#include "gravbench/stack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "gravbench/common.hpp"
#include "gravbench/rng.hpp"

namespace gravbench {

StackWeights simplex_least_squares(const Eigen::MatrixXd& P, const Eigen::VectorXd& y) {
    const Eigen::Index m = P.cols();
    if (m < 1) throw Error("simplex_least_squares: no columns");
    if (m > 20) throw Error("simplex_least_squares: too many columns for enumeration");
    if (P.rows() != y.size()) throw Error("simplex_least_squares: size mismatch");

    const Eigen::MatrixXd gram = P.transpose() * P;
    const Eigen::VectorXd cross = P.transpose() * y;

    StackWeights best;
    best.objective = std::numeric_limits<double>::infinity();

    std::vector<int> support;
    for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
        support.clear();
        for (Eigen::Index j = 0; j < m; ++j)
            if (mask & (1u << j)) support.push_back(static_cast<int>(j));
        const Eigen::Index s = static_cast<Eigen::Index>(support.size());

        // Equality-constrained stationarity on the support:
        // [2 G_S  1; 1' 0] [w; lambda] = [2 c_S; 1]
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(s + 1, s + 1);
        Eigen::VectorXd rhs(s + 1);
        for (Eigen::Index a = 0; a < s; ++a) {
            for (Eigen::Index b = 0; b < s; ++b)
                kkt(a, b) = 2.0 * gram(support[a], support[b]);
            kkt(a, s) = 1.0;
            kkt(s, a) = 1.0;
            rhs[a] = 2.0 * cross[support[a]];
        }
        rhs[s] = 1.0;
        const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
        if (!sol.allFinite()) continue;
        if ((kkt * sol - rhs).cwiseAbs().maxCoeff() > 1e-8 * (1.0 + rhs.cwiseAbs().maxCoeff()))
            continue;  // inconsistent system (cannot hit the constraint)

        Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
        bool feasible = true;
        for (Eigen::Index a = 0; a < s; ++a) {
            if (sol[a] < -1e-10) {
                feasible = false;
                break;
            }
            w[support[a]] = std::max(0.0, sol[a]);
        }
        if (!feasible) continue;
        const double total = w.sum();
        if (total <= 0.0) continue;
        w /= total;

        const double objective = (y - P * w).squaredNorm();
        if (best.w.size() == 0 || objective < best.objective - 1e-12 * (1.0 + objective)) {
            best.objective = objective;
            best.w = w;
        }
    }
    if (best.w.size() == 0) throw Error("simplex_least_squares: no feasible support");
    return best;
}

std::vector<int> pair_clustered_folds(std::span<const std::int32_t> pair_ids, int folds,
                                      std::uint64_t seed) {
    if (folds < 2) throw Error("pair_clustered_folds: need at least 2 folds");
    std::vector<std::int32_t> unique_pairs(pair_ids.begin(), pair_ids.end());
    std::sort(unique_pairs.begin(), unique_pairs.end());
    unique_pairs.erase(std::unique(unique_pairs.begin(), unique_pairs.end()),
                       unique_pairs.end());

    Rng rng = Rng::from(seed, {0x666f6c64ULL});
    rng.shuffle(unique_pairs);
    std::unordered_map<std::int32_t, int> fold_of;
    fold_of.reserve(unique_pairs.size());
    for (std::size_t i = 0; i < unique_pairs.size(); ++i)
        fold_of[unique_pairs[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));

    std::vector<int> out;
    out.reserve(pair_ids.size());
    for (std::int32_t pid : pair_ids) out.push_back(fold_of[pid]);
    return out;
}

}  // namespace gravbench
