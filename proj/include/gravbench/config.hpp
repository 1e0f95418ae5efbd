#pragma once

#include <string>

#include "gravbench/harness.hpp"

namespace gravbench {

// JSON config mirroring the CLI flags; unknown keys are rejected.
ExperimentConfig load_config_file(const std::string& path);

// Synthetic-generator parameter file for `--synth` / the gen subcommand.
DgpParams load_dgp_params(const std::string& path);

}  // namespace gravbench
