#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "gravbench/boosting.hpp"
#include "gravbench/features.hpp"
#include "gravbench/forest.hpp"
#include "gravbench/mlp.hpp"
#include "gravbench/regressor.hpp"
#include "gravbench/stack.hpp"

namespace gravbench {

enum class BaseLearnerKind { RandomForest, GradientBoosting, PoissonMlp };

const char* base_learner_name(BaseLearnerKind kind);

struct MlHyperparams {
    RandomForestParams rf;
    GradientBoostingParams gb;
    MlpParams nn;
    int stack_folds = 5;
};

// One machine-learning learner bound to its feature context: base gravity
// covariates plus, when `fe_fit` is given, the three fixed-effect columns
// looked up from that fit. The Poisson network standardizes internally with
// statistics of its training rows and reuses them at prediction time.
class MlRegressor : public Regressor {
public:
    static std::shared_ptr<const MlRegressor> fit(BaseLearnerKind kind, const TradePanel& panel,
                                                  std::span<const std::int32_t> rows,
                                                  std::shared_ptr<const PpmlFit> fe_fit,
                                                  const MlHyperparams& hp, std::uint64_t seed);

    std::vector<double> predict(const TradePanel& panel,
                                std::span<const std::int32_t> rows) const override;
    std::string name() const override;
    BaseLearnerKind kind() const { return kind_; }

    Eigen::VectorXd predict_features(const Eigen::MatrixXd& raw_features) const;

private:
    BaseLearnerKind kind_ = BaseLearnerKind::RandomForest;
    std::shared_ptr<const PpmlFit> fe_fit_;
    std::variant<RandomForestModel, GradientBoostingModel, PoissonMlpModel> model_;
    std::optional<Scaler> scaler_;  // Poisson network only
    std::vector<std::string> feature_names_;
};

// Simplex weights from pair-clustered cross-fitting: every row of P is
// predicted by learners trained without that row's fold.
StackWeights fit_stack_weights(std::span<const BaseLearnerKind> kinds, const TradePanel& panel,
                               std::span<const std::int32_t> rows,
                               std::shared_ptr<const PpmlFit> fe_fit, const MlHyperparams& hp,
                               std::uint64_t seed);

// Convex combination of base learners refit on the full training rows.
class StackedRegressor : public Regressor {
public:
    StackedRegressor(std::vector<std::shared_ptr<const MlRegressor>> learners,
                     StackWeights weights);

    std::vector<double> predict(const TradePanel& panel,
                                std::span<const std::int32_t> rows) const override;
    std::string name() const override { return "stack"; }
    const StackWeights& weights() const { return weights_; }

private:
    std::vector<std::shared_ptr<const MlRegressor>> learners_;
    StackWeights weights_;
};

}  // namespace gravbench
