#include "gravbench/learners.hpp"

#include "gravbench/rng.hpp"

namespace gravbench {

const char* base_learner_name(BaseLearnerKind kind) {
    switch (kind) {
        case BaseLearnerKind::RandomForest: return "rf";
        case BaseLearnerKind::GradientBoosting: return "gb";
        case BaseLearnerKind::PoissonMlp: return "nn";
    }
    return "ml";
}

std::shared_ptr<const MlRegressor> MlRegressor::fit(BaseLearnerKind kind,
                                                    const TradePanel& panel,
                                                    std::span<const std::int32_t> rows,
                                                    std::shared_ptr<const PpmlFit> fe_fit,
                                                    const MlHyperparams& hp,
                                                    std::uint64_t seed) {
    auto model = std::make_shared<MlRegressor>();
    model->kind_ = kind;
    model->fe_fit_ = std::move(fe_fit);

    const FeatureSet features = build_features(panel, rows, model->fe_fit_.get(), false);
    model->feature_names_ = features.names;
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        y[static_cast<Eigen::Index>(i)] = panel.trade(rows[i]);

    switch (kind) {
        case BaseLearnerKind::RandomForest:
            model->model_ = RandomForestModel::fit(features.X, y, hp.rf, seed);
            break;
        case BaseLearnerKind::GradientBoosting:
            model->model_ = GradientBoostingModel::fit(features.X, y, hp.gb);
            break;
        case BaseLearnerKind::PoissonMlp: {
            FeatureSet standardized;
            standardized.names = features.names;
            standardized.scaler = fit_scaler(features.X);
            standardized.X = apply_scaler(*standardized.scaler, features.X);
            standardized.standardized = true;
            model->scaler_ = standardized.scaler;
            model->model_ = PoissonMlpModel::fit(standardized, y, hp.nn, seed);
            break;
        }
    }
    return model;
}

Eigen::VectorXd MlRegressor::predict_features(const Eigen::MatrixXd& raw_features) const {
    if (std::holds_alternative<RandomForestModel>(model_))
        return std::get<RandomForestModel>(model_).predict(raw_features);
    if (std::holds_alternative<GradientBoostingModel>(model_))
        return std::get<GradientBoostingModel>(model_).predict(raw_features);
    const Eigen::MatrixXd scaled = apply_scaler(*scaler_, raw_features);
    return std::get<PoissonMlpModel>(model_).predict(scaled);
}

std::vector<double> MlRegressor::predict(const TradePanel& panel,
                                         std::span<const std::int32_t> rows) const {
    const FeatureSet features = build_features(panel, rows, fe_fit_.get(), false);
    if (features.names != feature_names_) throw Error("MlRegressor: feature layout changed");
    const Eigen::VectorXd out = predict_features(features.X);
    return {out.data(), out.data() + out.size()};
}

std::string MlRegressor::name() const {
    std::string base = base_learner_name(kind_);
    return fe_fit_ ? base + "-fe" : base;
}

StackWeights fit_stack_weights(std::span<const BaseLearnerKind> kinds, const TradePanel& panel,
                               std::span<const std::int32_t> rows,
                               std::shared_ptr<const PpmlFit> fe_fit, const MlHyperparams& hp,
                               std::uint64_t seed) {
    if (kinds.empty()) throw Error("fit_stack_weights: no learners");
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());

    std::vector<std::int32_t> pair_ids;
    pair_ids.reserve(rows.size());
    for (std::int32_t row : rows) pair_ids.push_back(panel.pair_id(row));
    const std::vector<int> fold_of =
        pair_clustered_folds(pair_ids, hp.stack_folds, derive_seed(seed, {0x73666f6cULL}));

    Eigen::MatrixXd cross_fitted(n, static_cast<Eigen::Index>(kinds.size()));
    for (int fold = 0; fold < hp.stack_folds; ++fold) {
        std::vector<std::int32_t> fit_rows, held_rows;
        std::vector<Eigen::Index> held_slots;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (fold_of[static_cast<std::size_t>(i)] == fold) {
                held_rows.push_back(rows[static_cast<std::size_t>(i)]);
                held_slots.push_back(i);
            } else {
                fit_rows.push_back(rows[static_cast<std::size_t>(i)]);
            }
        }
        if (held_rows.empty()) continue;
        if (fit_rows.empty()) throw Error("fit_stack_weights: a fold holds every row");
        for (std::size_t m = 0; m < kinds.size(); ++m) {
            const auto learner =
                MlRegressor::fit(kinds[m], panel, fit_rows, fe_fit, hp,
                                 derive_seed(seed, {m, static_cast<std::uint64_t>(fold)}));
            const auto preds = learner->predict(panel, held_rows);
            for (std::size_t i = 0; i < held_slots.size(); ++i)
                cross_fitted(held_slots[i], static_cast<Eigen::Index>(m)) = preds[i];
        }
    }

    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = panel.trade(rows[static_cast<std::size_t>(i)]);
    return simplex_least_squares(cross_fitted, y);
}

StackedRegressor::StackedRegressor(std::vector<std::shared_ptr<const MlRegressor>> learners,
                                   StackWeights weights)
    : learners_(std::move(learners)), weights_(std::move(weights)) {
    if (learners_.empty() ||
        static_cast<Eigen::Index>(learners_.size()) != weights_.w.size())
        throw Error("StackedRegressor: learner/weight count mismatch");
}

std::vector<double> StackedRegressor::predict(const TradePanel& panel,
                                              std::span<const std::int32_t> rows) const {
    std::vector<double> out(rows.size(), 0.0);
    for (std::size_t m = 0; m < learners_.size(); ++m) {
        const auto preds = learners_[m]->predict(panel, rows);
        const double weight = weights_.w[static_cast<Eigen::Index>(m)];
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += weight * preds[i];
    }
    return out;
}

}  // namespace gravbench
