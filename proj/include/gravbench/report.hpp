#pragma once

#include <string>
#include <vector>

#include "gravbench/harness.hpp"

namespace gravbench {

// Rows: Mean IE, SE_IE, MSE_IE x10 (estimation section), then RMAE, RRMSE,
// R2 (prediction section); one column per configured method; numbers with 6
// significant digits. csv and markdown carry identical values.
std::string emit_report(const MetricsReport& report, const std::string& format);

// k, n_k, and per-method IE_k for every repetition.
std::string emit_repetition_log(const MetricsReport& report,
                                const std::vector<RepetitionOutcome>& outcomes);

// Config echo (JSON) for reproducibility: seed, scenario, methods, versions.
std::string emit_manifest(const ExperimentConfig& config);

// Writes report.<ext>, reps.csv and manifest.json into the directory.
void write_outputs(const MetricsReport& report, const std::vector<RepetitionOutcome>& outcomes,
                   const ExperimentConfig& config, const std::string& out_dir);

}  // namespace gravbench
