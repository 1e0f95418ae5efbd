#include "gravbench/config.hpp"

#include <fstream>
#include <set>

#include "json.hpp"

namespace gravbench {

namespace {

using nlohmann::json;

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path);
    json value;
    try {
        in >> value;
    } catch (const json::parse_error& e) {
        throw Error("config parse error in " + path + ": " + e.what());
    }
    return value;
}

void check_keys(const json& object, const std::set<std::string>& allowed,
                const std::string& where) {
    for (const auto& [key, _] : object.items()) {
        if (!allowed.count(key)) throw Error("unknown key '" + key + "' in " + where);
    }
}

DgpParams parse_dgp(const json& value) {
    check_keys(value,
               {"n_exporters", "n_importers", "n_years", "first_year", "intercept", "beta",
                "tau", "treat_prob", "sd_exporter_year", "sd_importer_year", "sd_pair",
                "error", "lognormal_sigma", "selection_link", "seed"},
               "synth parameters");
    DgpParams params;
    params.n_exporters = value.value("n_exporters", params.n_exporters);
    params.n_importers = value.value("n_importers", params.n_importers);
    params.n_years = value.value("n_years", params.n_years);
    params.first_year = value.value("first_year", params.first_year);
    params.intercept = value.value("intercept", params.intercept);
    if (value.contains("beta")) {
        const auto& beta = value.at("beta");
        if (!beta.is_array() || beta.size() != kNumCovariates)
            throw Error("synth beta must be an array of " + std::to_string(kNumCovariates));
        for (int c = 0; c < kNumCovariates; ++c) params.beta[c] = beta.at(c).get<double>();
    }
    params.tau = value.value("tau", params.tau);
    params.treat_prob = value.value("treat_prob", params.treat_prob);
    params.sd_exporter_year = value.value("sd_exporter_year", params.sd_exporter_year);
    params.sd_importer_year = value.value("sd_importer_year", params.sd_importer_year);
    params.sd_pair = value.value("sd_pair", params.sd_pair);
    if (value.contains("error")) {
        const std::string kind = value.at("error").get<std::string>();
        if (kind == "poisson") {
            params.error_kind = DgpParams::ErrorKind::Poisson;
        } else if (kind == "lognormal") {
            params.error_kind = DgpParams::ErrorKind::Lognormal;
        } else {
            throw Error("synth error kind must be poisson or lognormal");
        }
    }
    params.lognormal_sigma = value.value("lognormal_sigma", params.lognormal_sigma);
    params.selection_link = value.value("selection_link", params.selection_link);
    params.seed = value.value("seed", params.seed);
    return params;
}

void parse_hyper(const json& value, MlHyperparams* hyper) {
    check_keys(value, {"rf", "gb", "nn", "stack_folds"}, "hyper");
    if (value.contains("rf")) {
        const auto& rf = value.at("rf");
        check_keys(rf, {"n_trees", "max_depth", "min_leaf", "mtry"}, "hyper.rf");
        hyper->rf.n_trees = rf.value("n_trees", hyper->rf.n_trees);
        hyper->rf.max_depth = rf.value("max_depth", hyper->rf.max_depth);
        hyper->rf.min_leaf = rf.value("min_leaf", hyper->rf.min_leaf);
        hyper->rf.mtry = rf.value("mtry", hyper->rf.mtry);
    }
    if (value.contains("gb")) {
        const auto& gb = value.at("gb");
        check_keys(gb, {"n_stages", "depth", "learning_rate", "min_leaf"}, "hyper.gb");
        hyper->gb.n_stages = gb.value("n_stages", hyper->gb.n_stages);
        hyper->gb.depth = gb.value("depth", hyper->gb.depth);
        hyper->gb.learning_rate = gb.value("learning_rate", hyper->gb.learning_rate);
        hyper->gb.min_leaf = gb.value("min_leaf", hyper->gb.min_leaf);
    }
    if (value.contains("nn")) {
        const auto& nn = value.at("nn");
        check_keys(nn, {"hidden", "max_epochs", "learning_rate", "batch_size", "tol"},
                   "hyper.nn");
        hyper->nn.hidden = nn.value("hidden", hyper->nn.hidden);
        hyper->nn.max_epochs = nn.value("max_epochs", hyper->nn.max_epochs);
        hyper->nn.learning_rate = nn.value("learning_rate", hyper->nn.learning_rate);
        hyper->nn.batch_size = nn.value("batch_size", hyper->nn.batch_size);
        hyper->nn.tol = nn.value("tol", hyper->nn.tol);
    }
    hyper->stack_folds = value.value("stack_folds", hyper->stack_folds);
}

}  // namespace

ExperimentConfig load_config_file(const std::string& path) {
    const json value = read_json(path);
    check_keys(value,
               {"data", "synth", "scenario", "a", "b", "reps", "methods", "seed", "out",
                "format", "jobs", "r2_mode", "se_convention", "balance", "hyper", "ppml",
                "schema"},
               "config");
    ExperimentConfig config;
    config.data_path = value.value("data", "");
    if (value.contains("synth")) config.synth = parse_dgp(value.at("synth"));
    if (value.contains("scenario")) {
        config.scenario = scenario_preset(value.at("scenario").get<std::string>());
    }
    if (value.contains("a") || value.contains("b")) {
        config.scenario.name = "custom";
        config.scenario.a = value.value("a", config.scenario.a);
        config.scenario.b = value.value("b", config.scenario.b);
    }
    config.reps = value.value("reps", config.reps);
    if (value.contains("methods")) {
        config.methods.clear();
        for (const auto& name : value.at("methods"))
            config.methods.push_back(parse_method(name.get<std::string>()));
    }
    config.seed = value.value("seed", config.seed);
    config.out_dir = value.value("out", config.out_dir);
    config.format = value.value("format", config.format);
    config.jobs = value.value("jobs", config.jobs);
    if (value.contains("r2_mode")) {
        const std::string mode = value.at("r2_mode").get<std::string>();
        if (mode == "per-rep") {
            config.r2_mode = R2Mode::PerRepMean;
        } else if (mode == "pooled") {
            config.r2_mode = R2Mode::Pooled;
        } else {
            throw Error("r2_mode must be per-rep or pooled");
        }
    }
    if (value.contains("se_convention")) {
        const std::string convention = value.at("se_convention").get<std::string>();
        if (convention == "population") {
            config.sd_convention = SdConvention::Population;
        } else if (convention == "sample") {
            config.sd_convention = SdConvention::Sample;
        } else {
            throw Error("se_convention must be population or sample");
        }
    }
    if (value.contains("balance")) {
        const auto& balance = value.at("balance");
        check_keys(balance, {"enabled", "window", "count"}, "balance");
        config.balance.enabled = balance.value("enabled", config.balance.enabled);
        if (balance.contains("window")) {
            const auto& window = balance.at("window");
            if (!window.is_array() || window.size() != 2)
                throw Error("balance.window must be [lo, hi]");
            config.balance.window_lo = window.at(0).get<int>();
            config.balance.window_hi = window.at(1).get<int>();
        }
        config.balance.count = balance.value("count", config.balance.count);
    }
    if (value.contains("hyper")) parse_hyper(value.at("hyper"), &config.hyper);
    if (value.contains("ppml")) {
        const auto& ppml = value.at("ppml");
        check_keys(ppml, {"tol_dev", "max_iterations", "tol_project", "tol_rank"}, "ppml");
        config.ppml.tol_dev = ppml.value("tol_dev", config.ppml.tol_dev);
        config.ppml.max_iterations = ppml.value("max_iterations", config.ppml.max_iterations);
        config.ppml.tol_project = ppml.value("tol_project", config.ppml.tol_project);
        config.ppml.tol_rank = ppml.value("tol_rank", config.ppml.tol_rank);
    }
    if (value.contains("schema")) {
        const auto& schema = value.at("schema");
        if (schema.contains("values_in_levels"))
            config.schema.values_in_levels = schema.at("values_in_levels").get<bool>();
        if (schema.contains("exporter")) config.schema.exporter = schema.at("exporter");
        if (schema.contains("importer")) config.schema.importer = schema.at("importer");
        if (schema.contains("year")) config.schema.year = schema.at("year");
        if (schema.contains("trade")) config.schema.trade = schema.at("trade");
        if (schema.contains("covariates")) {
            const auto& columns = schema.at("covariates");
            if (!columns.is_array() || columns.size() != kNumCovariates)
                throw Error("schema.covariates must list all covariate columns");
            for (int c = 0; c < kNumCovariates; ++c)
                config.schema.covariates[c] = columns.at(c).get<std::string>();
        }
    }
    return config;
}

DgpParams load_dgp_params(const std::string& path) { return parse_dgp(read_json(path)); }

}  // namespace gravbench
