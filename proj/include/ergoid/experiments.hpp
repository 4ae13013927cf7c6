#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ergoid/config.hpp"
#include "ergoid/dynamics.hpp"
#include "ergoid/lasso.hpp"
#include "ergoid/trigpoly.hpp"

namespace ergoid {

/// One point of the (s, M, sigma) grid.
struct CellSpec {
    std::size_t sparsity = 3;
    std::size_t samples = 1024;
    double sigma = 0.0;
};

/// Outcome of one seeded identification. When `failed` is set only the
/// identifying fields (cell, trial, seed) and `failure` are meaningful.
struct TrialResult {
    std::size_t cell_index = 0;
    std::size_t trial_index = 0;
    std::uint64_t seed = 0;
    CellSpec cell;

    std::optional<TrigPoly> map;
    /// Generator attempts spent before a map passed the screen.
    std::size_t map_attempts = 0;
    /// Minimum bin density over the whole circle.
    double xi_h = 0.0;
    /// The value compared against the screening threshold.
    double screen_value = 0.0;

    double lambda = 0.0;
    LassoSolution solution;
    double l1_error = 0.0;
    /// Sum of coefficient moduli of f_L - f; identical to l1_error by definition.
    double wiener_error = 0.0;
    /// Support of {|a_n| > lambda} equals the true support.
    bool support_recovered = false;
    /// Noiseless: support recovered and l1_error <= 1e-4. Noisy: support recovered.
    bool success = false;
    double wall_ms = 0.0;

    bool failed = false;
    std::string failure;
};

inline constexpr double noiseless_error_tolerance = 1e-4;

/// Screening statistic of a density estimate over the given region.
/// For orbit_hull the bins lying inside [lo, hi] are rescaled to a density
/// on that interval; no such bin gives 0.
double screen_statistic(const DensityEstimate& est, ScreenRegion region, double lo, double hi);

/// The lambda a trial uses: the configured override, else lambda_rule with
/// the configured constant, and noiseless_lambda when that gives 0.
double trial_lambda(const ExperimentConfig& cfg, const CellSpec& cell);

/// A screened map and the observations drawn from its orbit.
struct TrialInstance {
    std::optional<TrigPoly> map;
    std::size_t map_attempts = 0;
    double xi_h = 0.0;
    double screen_value = 0.0;
    ObservationSet observations;
    double lambda = 0.0;
};

/// The generate, simulate, screen and sample steps of run_identification.
/// Throws ExperimentError like it does.
TrialInstance prepare_trial(const ExperimentConfig& cfg, const CellSpec& cell, std::uint64_t seed);

LassoConfig solver_config(const ExperimentConfig& cfg, double lambda);

/// Generate map, simulate, screen, sample, solve, score. Deterministic in
/// (cfg, cell, seed). Throws ExperimentError when no generated map passes
/// the screen within cfg.max_retries attempts.
TrialResult run_identification(const ExperimentConfig& cfg, const CellSpec& cell, std::uint64_t seed);

/// Solve from given observations, without ground truth.
LassoSolution identify_from_observations(const ObservationSet& obs, const ExperimentConfig& cfg);

struct CellSummary {
    std::size_t cell_index = 0;
    CellSpec cell;
    std::size_t trials = 0;
    std::size_t failures = 0;
    double success_rate = 0.0;
    /// NaN when every trial failed.
    double median_l1_error = 0.0;
    /// Median of l1_error / (s sigma sqrt(log N / M) / xi_h); NaN when sigma = 0.
    double c3_empirical = 0.0;
};

struct PhaseDiagram {
    std::vector<CellSpec> cells;
    std::vector<TrialResult> trials;  // cell-major, then trial index
    std::vector<CellSummary> summaries;
};

/// Cells in order s, then M, then sigma (sigma fastest).
std::vector<CellSpec> grid_cells(const ExperimentConfig& cfg);

/// Runs every (cell, trial) with seed trial_seed(cfg.seed, cell, trial).
/// Trial failures are recorded, not thrown.
PhaseDiagram run_phase_diagram(const ExperimentConfig& cfg);

CellSummary summarize_cell(std::size_t cell_index, const CellSpec& cell,
                           const std::vector<TrialResult>& trials, std::size_t n_cols);

enum class FitAxis { samples, sigma, sparsity };

struct ScalingFit {
    FitAxis axis = FitAxis::samples;
    double slope = 0.0;
    double intercept = 0.0;
    /// Half-width of the 95% t-interval on the slope.
    double half_width = 0.0;
    std::size_t points = 0;
};

/// Ordinary least squares of log(median error) on log(axis value) across
/// cells that differ only along `axis`. Throws FitError on fewer than four
/// points, nonpositive errors, or cells that vary along another axis.
ScalingFit fit_error_scaling(const std::vector<CellSummary>& cells, FitAxis axis);

std::string to_string(FitAxis axis);
FitAxis parse_fit_axis(const std::string& name);

inline constexpr const char* trials_csv_header =
    "s,M,sigma,trial,seed,l1_error,wiener_error,support_recovered,kkt_residual,xi_h,lambda,wall_ms";

void write_trials_csv(std::ostream& os, const std::vector<TrialResult>& trials);
void write_cells_csv(std::ostream& os, const std::vector<CellSummary>& cells);
nlohmann::json to_json(const TrialResult& trial);
nlohmann::json to_json(const CellSummary& cell);

}  // namespace ergoid
