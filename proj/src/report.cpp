#include "gravbench/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace gravbench {

namespace {

std::string format_number(double value) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", value);
    return buf;
}

struct ReportRows {
    std::vector<std::string> labels;
    std::vector<std::vector<std::string>> cells;  // per row, per method
    std::vector<int> section_start;               // row index beginning a section
};

ReportRows collect_rows(const MetricsReport& report) {
    ReportRows rows;
    rows.labels = {"Mean IE", "SE_IE", "MSE_IE x10", "RMAE", "RRMSE", "R2"};
    rows.section_start = {0, 3};
    rows.cells.assign(rows.labels.size(), {});
    for (Method method : report.methods) {
        const MethodMetrics& metrics = report.per_method.at(method);
        const bool has_ie = metrics.ie_used >= 2;
        rows.cells[0].push_back(has_ie ? format_number(metrics.ie.mean) : "-");
        rows.cells[1].push_back(has_ie ? format_number(metrics.ie.se) : "-");
        rows.cells[2].push_back(has_ie ? format_number(metrics.ie.mse * 10.0) : "-");
        const bool has_pred = metrics.failures < report.reps;
        rows.cells[3].push_back(has_pred ? format_number(metrics.mae.rmae) : "-");
        rows.cells[4].push_back(has_pred ? format_number(metrics.rrmse) : "-");
        rows.cells[5].push_back(has_pred ? format_number(metrics.r2.value) : "-");
    }
    return rows;
}

std::string counts_note(const MetricsReport& report) {
    std::ostringstream out;
    for (Method method : report.methods) {
        const MethodMetrics& metrics = report.per_method.at(method);
        if (metrics.failures > 0)
            out << method_label(method) << ": " << metrics.failures
                << " failed repetition(s). ";
        if (metrics.ie_excluded > 0)
            out << method_label(method) << ": " << metrics.ie_excluded
                << " repetition(s) with non-positive predicted totals excluded from IE. ";
        if (metrics.r2.skipped > 0)
            out << method_label(method) << ": " << metrics.r2.skipped
                << " zero-variance repetition(s) skipped in R2. ";
    }
    return out.str();
}

std::string emit_markdown(const MetricsReport& report) {
    const ReportRows rows = collect_rows(report);
    std::ostringstream out;
    out << "# Out-of-sample evaluation\n\n";
    out << "scenario: " << report.scenario.name << " (a=" << format_number(report.scenario.a)
        << ", b=" << format_number(report.scenario.b) << ")\n";
    out << "repetitions: " << report.reps << "\n";
    out << "n_k: min " << report.n_min << ", mean " << format_number(report.n_mean) << ", max "
        << report.n_max << "\n";

    auto header = [&] {
        out << "| |";
        for (Method method : report.methods) out << ' ' << method_label(method) << " |";
        out << "\n|---|";
        for (std::size_t i = 0; i < report.methods.size(); ++i) out << "---|";
        out << '\n';
    };
    const char* sections[] = {"Estimation", "Prediction"};
    for (int s = 0; s < 2; ++s) {
        out << "\n## " << sections[s] << "\n\n";
        header();
        const int begin = rows.section_start[s];
        const int end = s + 1 < 2 ? rows.section_start[s + 1]
                                  : static_cast<int>(rows.labels.size());
        for (int r = begin; r < end; ++r) {
            out << "| " << rows.labels[r] << " |";
            for (const auto& cell : rows.cells[r]) out << ' ' << cell << " |";
            out << '\n';
        }
    }
    const std::string note = counts_note(report);
    if (!note.empty()) out << "\nnotes: " << note << '\n';
    return out.str();
}

std::string emit_csv(const MetricsReport& report) {
    const ReportRows rows = collect_rows(report);
    std::ostringstream out;
    out << "section,metric";
    for (Method method : report.methods) out << ',' << method_label(method);
    out << '\n';
    for (std::size_t r = 0; r < rows.labels.size(); ++r) {
        out << (static_cast<int>(r) < rows.section_start[1] ? "estimation" : "prediction");
        out << ',' << rows.labels[r];
        for (const auto& cell : rows.cells[r]) out << ',' << cell;
        out << '\n';
    }
    return out.str();
}

}  // namespace

std::string emit_report(const MetricsReport& report, const std::string& format) {
    if (format == "markdown") return emit_markdown(report);
    if (format == "csv") return emit_csv(report);
    throw Error("emit_report: unknown format '" + format + "'");
}

std::string emit_repetition_log(const MetricsReport& report,
                                const std::vector<RepetitionOutcome>& outcomes) {
    std::ostringstream out;
    out << "k,n_k,repaired";
    for (Method method : report.methods) out << ',' << method_name(method) << "_ie";
    out << '\n';
    for (const auto& outcome : outcomes) {
        out << outcome.k << ',' << outcome.n_k << ',' << outcome.repaired_rows;
        for (Method method : report.methods) {
            out << ',';
            const auto& result = outcome.methods.at(method);
            if (result.ok && result.ie) out << format_number(*result.ie);
        }
        out << '\n';
    }
    return out.str();
}

std::string emit_manifest(const ExperimentConfig& config) {
    nlohmann::json manifest;
    manifest["version"] = kVersion;
    manifest["seed"] = config.seed;
    manifest["reps"] = config.reps;
    manifest["jobs"] = config.jobs;
    manifest["scenario"] = {{"name", config.scenario.name},
                            {"a", config.scenario.a},
                            {"b", config.scenario.b}};
    std::vector<std::string> methods;
    for (Method method : config.methods) methods.push_back(method_name(method));
    manifest["methods"] = methods;
    manifest["r2_mode"] = config.r2_mode == R2Mode::PerRepMean ? "per-rep" : "pooled";
    manifest["se_convention"] =
        config.sd_convention == SdConvention::Population ? "population" : "sample";
    if (!config.data_path.empty()) manifest["data"] = config.data_path;
    if (config.synth) {
        manifest["synth"] = {{"n_exporters", config.synth->n_exporters},
                             {"n_importers", config.synth->n_importers},
                             {"n_years", config.synth->n_years},
                             {"seed", config.synth->seed}};
    }
    manifest["balance"] = {{"enabled", config.balance.enabled},
                           {"window", {config.balance.window_lo, config.balance.window_hi}},
                           {"count", config.balance.count}};
    return manifest.dump(2) + "\n";
}

void write_outputs(const MetricsReport& report, const std::vector<RepetitionOutcome>& outcomes,
                   const ExperimentConfig& config, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const std::string ext = config.format == "csv" ? "csv" : "md";
    {
        std::ofstream out(fs::path(out_dir) / ("report." + ext));
        out << emit_report(report, config.format);
    }
    {
        std::ofstream out(fs::path(out_dir) / "reps.csv");
        out << emit_repetition_log(report, outcomes);
    }
    {
        std::ofstream out(fs::path(out_dir) / "manifest.json");
        out << emit_manifest(config);
    }
}

}  // namespace gravbench
