#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ergoid/dynamics.hpp"

namespace ergoid {

/// Region over which the empirical density lower bound is screened.
enum class ScreenRegion {
    /// Minimum bin density over the whole circle (the xi_h of the theory).
    circle,
    /// Minimum bin density over the bins inside [min orbit, max orbit],
    /// renormalized to that interval. Rejects collapsed or periodic orbits of
    /// maps whose range cannot cover the circle.
    orbit_hull,
};

/// Everything an identification run or a phase diagram needs. Every field has
/// a default; see README.md for the TOML layout.
struct ExperimentConfig {
    // [map]
    int max_freq = 15;
    double dc_value = 0.5;
    double amplitude_budget = 0.49;
    std::size_t grid_points = 4096;
    double xi_threshold = default_xi_threshold;
    ScreenRegion screen = ScreenRegion::circle;
    std::size_t max_retries = 200;

    // [dynamics]
    std::size_t burn_in = default_burn_in;
    std::size_t density_length = default_density_length;
    std::size_t density_bins = default_density_bins;
    std::string sampling = "consecutive";
    std::size_t stride = 1;

    // [grid]
    std::vector<std::size_t> sparsity{3};
    std::vector<std::size_t> samples{1024};
    std::vector<double> sigma{0.05};
    std::size_t trials = 10;

    // [solver]
    double lambda_constant = 4.0;
    bool enforce_admissible_constant = true;
    /// Replaces lambda_rule when set.
    std::optional<double> lambda;
    /// Used when the rule gives 0 (sigma = 0) and no override is set.
    double noiseless_lambda = 1e-8;
    double tolerance = 1e-10;
    std::size_t max_iterations = 100000;
    bool symmetrize = false;

    // [theory]
    double c2 = 1.0;

    // top level
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    std::string output = "results";
    bool record_timing = false;

    SamplingStrategy strategy() const { return SamplingStrategy::parse(sampling, stride); }

    /// Throws ParameterError on inconsistent values.
    void validate() const;
};

/// Parses TOML text. Unknown keys, wrong types and invalid values raise UsageError.
ExperimentConfig parse_config(const std::string& toml_text);
ExperimentConfig load_config(const std::filesystem::path& path);

std::string to_string(ScreenRegion region);

}  // namespace ergoid
