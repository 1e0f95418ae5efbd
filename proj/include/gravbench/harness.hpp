#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gravbench/dgp.hpp"
#include "gravbench/gravity.hpp"
#include "gravbench/learners.hpp"
#include "gravbench/metrics.hpp"
#include "gravbench/panel.hpp"
#include "gravbench/sampling.hpp"

namespace gravbench {

enum class Method {
    Trad,
    TwoWay,
    OneWay,
    ThreeWay,
    Ens,
    Rf,
    Gb,
    Nn,
    EFe,
    RfFe,
    GbFe,
    NnFe,
    ThreeWayMl,
};

// Column order of the emitted tables.
const std::vector<Method>& full_method_roster();
std::string method_name(Method method);   // CLI name, e.g. "threeway-ml"
std::string method_label(Method method);  // table head, e.g. "3-way-ML"
Method parse_method(const std::string& name);

struct Scenario {
    std::string name = "exogenous";
    double a = 4.6;
    double b = 0.0;
};

Scenario scenario_preset(const std::string& name);  // endogenous | exogenous | small-endogenous

struct BalanceConfig {
    bool enabled = true;
    int window_lo = 1994;
    int window_hi = 2023;
    int count = 30;
};

struct ExperimentConfig {
    std::string data_path;            // CSV panel, or
    std::optional<DgpParams> synth;   // synthetic generator parameters
    Schema schema;
    BalanceConfig balance;
    Scenario scenario;
    int reps = 100;
    std::vector<Method> methods = full_method_roster();
    std::uint64_t seed = 12345;
    int jobs = 1;
    R2Mode r2_mode = R2Mode::PerRepMean;
    SdConvention sd_convention = SdConvention::Population;
    MlHyperparams hyper;
    PpmlOptions ppml;
    std::string out_dir;
    std::string format = "markdown";
};

struct PreparedContext {
    ExperimentConfig config;
    TradePanel panel;  // balanced
    std::map<std::int32_t, double> eta_std;
    std::size_t rows_before_balance = 0;
    std::size_t zero_flows = 0;
    std::size_t full_fit_separated_rows = 0;
    int full_fit_iterations = 0;
};

struct MethodRepResult {
    bool ok = false;
    std::string error;
    std::vector<double> predicted;
    std::optional<double> ie;
};

struct RepetitionOutcome {
    int k = 0;
    std::size_t n_k = 0;
    int repaired_rows = 0;
    std::vector<double> observed;
    std::map<Method, MethodRepResult> methods;
};

struct MethodMetrics {
    IeSummary ie;
    int ie_used = 0;
    int ie_excluded = 0;  // repetitions with non-positive predicted totals
    MaeSummary mae;
    double rrmse = 0.0;
    R2Summary r2;
    int failures = 0;
};

struct MetricsReport {
    Scenario scenario;
    int reps = 0;
    std::vector<Method> methods;
    std::map<Method, MethodMetrics> per_method;
    std::size_t n_min = 0, n_max = 0;
    double n_mean = 0.0;
    R2Mode r2_mode = R2Mode::PerRepMean;
};

// Loads or generates the panel, applies the balance filter, fits the
// full-sample three-way model once, and standardizes its pair effects.
PreparedContext prepare(const ExperimentConfig& config);

// One repetition: split, fit every configured method on the training rows,
// predict the test rows. Per-method failures are recorded, not thrown.
RepetitionOutcome run_repetition(const PreparedContext& context, int k);

// K repetitions (parallel across repetitions when config.jobs > 1) with a
// deterministic reduction; aborts when any method fails in more than 10% of
// repetitions. Outcomes are optionally exposed for the per-repetition log.
MetricsReport run_experiment(const PreparedContext& context,
                             std::vector<RepetitionOutcome>* outcomes = nullptr);

}  // namespace gravbench
