#include "gravbench/harness.hpp"

#include <algorithm>
#include <cmath>

#include "gravbench/parallel.hpp"
#include "gravbench/rng.hpp"

namespace gravbench {

namespace {

constexpr std::uint64_t kTagSplit = 0x73706c69ULL;
constexpr std::uint64_t kTagThreeWay = 0x33776179ULL;
constexpr std::uint64_t kTagStack = 0x73746b00ULL;

struct MethodInfo {
    Method method;
    const char* name;
    const char* label;
};

constexpr MethodInfo kMethods[] = {
    {Method::Trad, "trad", "Trad"},
    {Method::TwoWay, "twoway", "2-way"},
    {Method::OneWay, "oneway", "1-way"},
    {Method::ThreeWay, "threeway", "3-way"},
    {Method::Ens, "ens", "Ens"},
    {Method::Rf, "rf", "RF"},
    {Method::Gb, "gb", "GB"},
    {Method::Nn, "nn", "NN"},
    {Method::EFe, "e-fe", "E-FE"},
    {Method::RfFe, "rf-fe", "RF-FE"},
    {Method::GbFe, "gb-fe", "GB-FE"},
    {Method::NnFe, "nn-fe", "NN-FE"},
    {Method::ThreeWayMl, "threeway-ml", "3-way-ML"},
};

std::uint64_t learner_tag(BaseLearnerKind kind, bool with_fe) {
    return static_cast<std::uint64_t>(kind) * 2 + (with_fe ? 1 : 0) + 0x6c726eULL;
}

// Shared per-repetition components, built lazily with roster-independent
// seeds so enabling one method never changes another's results.
struct RepWorkspace {
    const PreparedContext& context;
    const TradePanel& panel;
    TradePanel train;
    std::vector<std::int32_t> train_rows_full;  // positions in `train`
    const std::vector<std::int32_t>& test_rows;
    std::uint64_t rep_seed;

    std::shared_ptr<const GravityModel> threeway;
    std::shared_ptr<const PpmlFit> threeway_fit;
    std::map<std::pair<BaseLearnerKind, bool>, std::shared_ptr<const MlRegressor>> learners;

    RepWorkspace(const PreparedContext& ctx, const SplitPlan& plan, std::uint64_t seed)
        : context(ctx),
          panel(ctx.panel),
          train(ctx.panel.subset(plan.train_rows)),
          test_rows(plan.test_rows),
          rep_seed(seed) {
        train_rows_full.resize(train.size());
        for (std::size_t i = 0; i < train.size(); ++i)
            train_rows_full[i] = static_cast<std::int32_t>(i);
    }

    const std::shared_ptr<const GravityModel>& training_threeway() {
        if (!threeway) {
            GravitySpec spec{GravityKind::ThreeWay, {}};
            threeway = std::make_shared<const GravityModel>(
                GravityModel::fit(spec, train, context.config.ppml));
            threeway_fit =
                std::shared_ptr<const PpmlFit>(threeway, &threeway->fit_result());
        }
        return threeway;
    }

    // Rows of `train` usable for fixed-effect feature lookups: the three-way
    // fit's estimation sample (separation can exclude rows).
    std::vector<std::int32_t> fe_train_rows() {
        training_threeway();
        return threeway_fit->active_rows;
    }

    std::shared_ptr<const MlRegressor> learner(BaseLearnerKind kind, bool with_fe) {
        const auto key = std::make_pair(kind, with_fe);
        auto it = learners.find(key);
        if (it != learners.end()) return it->second;
        std::shared_ptr<const PpmlFit> fe_fit;
        std::vector<std::int32_t> rows = train_rows_full;
        if (with_fe) {
            training_threeway();
            fe_fit = threeway_fit;
            rows = fe_train_rows();
        }
        auto model = MlRegressor::fit(kind, train, rows, fe_fit, context.config.hyper,
                                      derive_seed(rep_seed, {learner_tag(kind, with_fe)}));
        learners.emplace(key, model);
        return model;
    }

    std::vector<double> stacked_predictions(bool with_fe) {
        const std::vector<BaseLearnerKind> kinds = {BaseLearnerKind::RandomForest,
                                                    BaseLearnerKind::GradientBoosting,
                                                    BaseLearnerKind::PoissonMlp};
        std::shared_ptr<const PpmlFit> fe_fit;
        std::vector<std::int32_t> rows = train_rows_full;
        if (with_fe) {
            training_threeway();
            fe_fit = threeway_fit;
            rows = fe_train_rows();
        }
        const StackWeights weights =
            fit_stack_weights(kinds, train, rows, fe_fit, context.config.hyper,
                              derive_seed(rep_seed, {kTagStack, with_fe ? 1ULL : 0ULL}));
        std::vector<std::shared_ptr<const MlRegressor>> final_learners;
        for (BaseLearnerKind kind : kinds) final_learners.push_back(learner(kind, with_fe));
        StackedRegressor stack(std::move(final_learners), weights);
        return stack.predict(panel, test_rows);
    }

    std::vector<double> predictions(Method method) {
        switch (method) {
            case Method::Trad:
            case Method::TwoWay:
            case Method::OneWay: {
                const GravityKind kind = method == Method::Trad ? GravityKind::Traditional
                                         : method == Method::TwoWay ? GravityKind::TwoWay
                                                                    : GravityKind::OneWay;
                GravitySpec spec{kind, {}};
                const GravityModel model = GravityModel::fit(spec, train, context.config.ppml);
                return model.predict(panel, test_rows);
            }
            case Method::ThreeWay:
                return training_threeway()->predict(panel, test_rows);
            case Method::ThreeWayMl: {
                const auto network = learner(BaseLearnerKind::PoissonMlp, false);
                GravitySpec spec{GravityKind::ThreeWayMl,
                                 [network](const TradePanel& p,
                                           std::span<const std::int32_t> rows) {
                                     const auto values = network->predict(p, rows);
                                     Eigen::VectorXd out(
                                         static_cast<Eigen::Index>(values.size()));
                                     for (std::size_t i = 0; i < values.size(); ++i)
                                         out[static_cast<Eigen::Index>(i)] = values[i];
                                     return out;
                                 }};
                const GravityModel model = GravityModel::fit(spec, train, context.config.ppml);
                return model.predict(panel, test_rows);
            }
            case Method::Rf:
                return learner(BaseLearnerKind::RandomForest, false)->predict(panel, test_rows);
            case Method::Gb:
                return learner(BaseLearnerKind::GradientBoosting, false)
                    ->predict(panel, test_rows);
            case Method::Nn:
                return learner(BaseLearnerKind::PoissonMlp, false)->predict(panel, test_rows);
            case Method::RfFe:
                return learner(BaseLearnerKind::RandomForest, true)->predict(panel, test_rows);
            case Method::GbFe:
                return learner(BaseLearnerKind::GradientBoosting, true)
                    ->predict(panel, test_rows);
            case Method::NnFe:
                return learner(BaseLearnerKind::PoissonMlp, true)->predict(panel, test_rows);
            case Method::Ens:
                return stacked_predictions(false);
            case Method::EFe:
                return stacked_predictions(true);
        }
        throw Error("unknown method");
    }
};

}  // namespace

const std::vector<Method>& full_method_roster() {
    static const std::vector<Method> roster = [] {
        std::vector<Method> out;
        for (const auto& info : kMethods) out.push_back(info.method);
        return out;
    }();
    return roster;
}

std::string method_name(Method method) {
    for (const auto& info : kMethods)
        if (info.method == method) return info.name;
    throw Error("unknown method");
}

std::string method_label(Method method) {
    for (const auto& info : kMethods)
        if (info.method == method) return info.label;
    throw Error("unknown method");
}

Method parse_method(const std::string& name) {
    for (const auto& info : kMethods)
        if (name == info.name) return info.method;
    throw Error("unknown method '" + name + "'");
}

Scenario scenario_preset(const std::string& name) {
    if (name == "endogenous") return {"endogenous", 5.0, 1.0};
    if (name == "exogenous") return {"exogenous", 4.6, 0.0};
    if (name == "small-endogenous") return {"small-endogenous", 7.5, 1.0};
    throw Error("unknown scenario '" + name + "'");
}

PreparedContext prepare(const ExperimentConfig& config) {
    if (config.reps < 1) throw Error("prepare: reps must be >= 1");
    if (config.methods.empty()) throw Error("prepare: no methods configured");

    PreparedContext context;
    context.config = config;

    TradePanel raw;
    if (config.synth) {
        raw = generate_panel(*config.synth).panel;
    } else if (!config.data_path.empty()) {
        raw = load_panel(config.data_path, config.schema);
    } else {
        throw Error("prepare: either a data path or synthetic parameters are required");
    }
    context.rows_before_balance = raw.size();

    if (config.balance.enabled) {
        const int lo = config.synth ? raw.year_min() : config.balance.window_lo;
        const int hi = config.synth ? raw.year_max() : config.balance.window_hi;
        const int count = config.synth ? hi - lo + 1 : config.balance.count;
        context.panel = balance_panel(raw, lo, hi, count);
    } else {
        context.panel = std::move(raw);
    }
    context.zero_flows = context.panel.zero_flow_count();

    GravitySpec spec{GravityKind::ThreeWay, {}};
    const GravityModel full_fit = GravityModel::fit(spec, context.panel, config.ppml);
    context.full_fit_separated_rows = full_fit.fit_result().separated_rows;
    context.full_fit_iterations = full_fit.fit_result().iterations;

    const FeValues& pair_fe = full_fit.fit_result().fe.back();
    std::map<std::int32_t, double> eta;
    for (std::size_t g = 0; g < pair_fe.group_key.size(); ++g)
        eta[static_cast<std::int32_t>(pair_fe.group_key[g])] =
            pair_fe.values[static_cast<Eigen::Index>(g)];
    context.eta_std = standardize_pair_fe(eta);
    return context;
}

RepetitionOutcome run_repetition(const PreparedContext& context, int k) {
    const auto& config = context.config;
    RepetitionOutcome outcome;
    outcome.k = k;

    Rng split_rng = Rng::from(config.seed, {kTagSplit, static_cast<std::uint64_t>(k)});
    SelectionParams selection{config.scenario.a, config.scenario.b};
    const SplitPlan plan = make_split(context.panel, selection, context.eta_std, split_rng);
    outcome.n_k = plan.n_k();
    outcome.repaired_rows = plan.repaired_rows;

    outcome.observed.reserve(plan.test_rows.size());
    for (std::int32_t row : plan.test_rows) outcome.observed.push_back(context.panel.trade(row));

    RepWorkspace workspace(context, plan,
                           derive_seed(config.seed, {kTagThreeWay, static_cast<std::uint64_t>(k)}));
    for (Method method : config.methods) {
        MethodRepResult result;
        try {
            result.predicted = workspace.predictions(method);
            if (result.predicted.size() != plan.test_rows.size())
                throw Error("prediction length mismatch");
            for (double value : result.predicted)
                if (!std::isfinite(value)) throw Error("non-finite prediction");
            result.ie = imputation_estimator(outcome.observed, result.predicted);
            result.ok = true;
        } catch (const std::exception& e) {
            result.ok = false;
            result.error = e.what();
            result.predicted.clear();
        }
        outcome.methods.emplace(method, std::move(result));
    }
    return outcome;
}

MetricsReport run_experiment(const PreparedContext& context,
                             std::vector<RepetitionOutcome>* outcomes_out) {
    const auto& config = context.config;
    std::vector<RepetitionOutcome> outcomes(static_cast<std::size_t>(config.reps));
    parallel_for(static_cast<std::size_t>(config.reps), config.jobs, [&](std::size_t i) {
        outcomes[i] = run_repetition(context, static_cast<int>(i + 1));
    });
    // Outcomes are indexed by repetition, so aggregation order is fixed
    // regardless of the worker count.

    MetricsReport report;
    report.scenario = config.scenario;
    report.reps = config.reps;
    report.methods = config.methods;
    report.r2_mode = config.r2_mode;

    report.n_min = outcomes.front().n_k;
    report.n_max = outcomes.front().n_k;
    double n_sum = 0.0;
    for (const auto& outcome : outcomes) {
        report.n_min = std::min(report.n_min, outcome.n_k);
        report.n_max = std::max(report.n_max, outcome.n_k);
        n_sum += static_cast<double>(outcome.n_k);
    }
    report.n_mean = n_sum / static_cast<double>(config.reps);

    for (Method method : config.methods) {
        MethodMetrics metrics;
        std::vector<double> ies;
        std::vector<RepVectors> reps;
        for (const auto& outcome : outcomes) {
            const auto& result = outcome.methods.at(method);
            if (!result.ok) {
                ++metrics.failures;
                continue;
            }
            reps.push_back(RepVectors{outcome.observed, result.predicted});
            if (result.ie) {
                ies.push_back(*result.ie);
            } else {
                ++metrics.ie_excluded;
            }
        }
        if (metrics.failures * 10 > config.reps) {
            throw Error("method " + method_name(method) + " failed in " +
                        std::to_string(metrics.failures) + " of " +
                        std::to_string(config.reps) + " repetitions");
        }
        if (ies.size() >= 2) metrics.ie = aggregate_ie(ies, config.sd_convention);
        metrics.ie_used = static_cast<int>(ies.size());
        if (!reps.empty()) {
            metrics.mae = pooled_mae(reps);
            metrics.rrmse = pooled_rrmse(reps);
            metrics.r2 = oos_r2(reps, config.r2_mode);
        }
        report.per_method.emplace(method, std::move(metrics));
    }

    if (outcomes_out) *outcomes_out = std::move(outcomes);
    return report;
}

}  // namespace gravbench
