#pragma once

#include "liquidtop/experiments.hpp"
#include "liquidtop/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace liquidtop {

/// Initial-condition specification for `simulate`.
struct SimulateSettings {
    std::string u0_kind = "random";   // zero | kernel | random | eigenvector
    double magnitude = 1e-3;
    double z_fraction = 0.3;
    bool linear_only = false;
    double horizon = 10.0;
};

/// Schema-validated run configuration (unknown keys rejected).
struct RunConfig {
    BodyParams params;
    int degree = 2;
    std::optional<std::string> table_file;  // cache of the exact basis tables

    double horizon = 10.0;
    double rtol = 1e-8;
    double atol = 1e-10;
    int samples = 401;
    double alpha = 0.8;

    std::uint64_t seed = 2024;

    // experiment blocks (filled with defaults when the section is present)
    std::optional<double> threshold_lambda2_min, threshold_lambda2_max;
    double threshold_rel_bracket = 1e-4;

    std::optional<StabilityRunSettings> stability;
    std::optional<InstabilityRunSettings> instability;
    std::optional<std::vector<int>> converge_degrees;
    std::optional<SimulateSettings> simulate;
};

/// Parses and validates a JSON config file.  Throws ConfigError on malformed
/// JSON, unknown keys, missing required fields, or type mismatches.
RunConfig load_run_config(const std::string& path);

}  // namespace liquidtop
