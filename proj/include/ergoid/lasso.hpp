#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <json.hpp>

#include "ergoid/sensing.hpp"
#include "ergoid/types.hpp"

namespace ergoid {

/// Proximal map of t|.| on the complex plane: 0 if |c| <= t, else c (1 - t/|c|).
cplx soft_threshold_complex(cplx c, double t);

inline constexpr double default_lambda_constant = 4.0;

/// lambda = A sigma sqrt(log N / M), natural log.
double lambda_rule(double sigma, std::size_t n_cols, std::size_t m_rows,
                   double constant = default_lambda_constant);

struct LassoConfig {
    double lambda = 0.0;
    std::size_t max_iterations = 100000;
    /// Convergence threshold on the max-norm of the coefficient change per sweep.
    double tolerance = 1e-10;
    bool symmetrize_output = false;
    /// Initial point; the solve skips the lambda continuation when present.
    std::optional<CVector> warm_start;
    /// Approach the target lambda through a geometric sequence starting at
    /// lambda_max, warm-starting each stage from the previous one.
    bool continuation = true;
    double continuation_ratio = 0.5;
    /// Record the objective after every sweep (see LassoSolution::trace).
    bool record_objective = false;
};

struct SweepRecord {
    double lambda;
    double objective;
};

struct LassoSolution {
    CVector coeffs;
    double lambda = 0.0;
    double objective_value = 0.0;
    double kkt_residual = 0.0;
    std::size_t iterations_used = 0;
    bool converged = false;
    /// Objective at the stage lambda after each sweep, when recorded. The
    /// first entry of each stage is the objective of its starting point.
    std::vector<SweepRecord> trace;
};

/// (1/M) ||y - G a||^2 + 2 lambda ||a||_1.
double lasso_objective(const MeasurementSystem& sys, const CVector& coeffs, double lambda);

/// Cyclic coordinate descent for the complex Lasso. Columns have squared
/// norm M, so each update is a_n <- S(a_n + g_n^* r / M, lambda). Sweeps
/// alternate between all coordinates and the current nonzero set; a solve
/// converges when a full sweep moves no coefficient by more than the
/// tolerance and the KKT residual is at most 10 * tolerance.
/// Running out of sweeps returns converged = false.
LassoSolution solve_lasso(const MeasurementSystem& sys, const LassoConfig& cfg);

/// Max over n of the subgradient-condition violation at a, with
/// c_n = g_n^* (y - G a) / M: (|c_n| - lambda)_+ where a_n = 0 and
/// |c_n - lambda a_n / |a_n|| otherwise.
double kkt_residual(const MeasurementSystem& sys, const CVector& coeffs, double lambda);

/// Least-squares refit restricted to `support` (column indices). Returns a
/// full-length coefficient vector that vanishes off the support. Throws
/// NumericalRankError when the restricted columns are linearly dependent.
CVector debias_on_support(const MeasurementSystem& sys, const std::vector<std::size_t>& support);

inline constexpr std::size_t default_enumeration_budget = 1000000;

struct L0Result {
    CVector coeffs;
    std::vector<std::size_t> support;
    double residual_norm = 0.0;
    std::size_t supports_examined = 0;
};

/// Exhaustive search over all supports of size <= s. Residual norms within
/// a relative 1e-10 of each other count as ties, resolved towards the
/// smaller support and then the lexicographically smallest one.
L0Result l0_oracle(const MeasurementSystem& sys, std::size_t sparsity,
                   std::size_t enumeration_budget = default_enumeration_budget);

/// Indices n with a_n != 0 (or |a_n| > threshold when given).
std::vector<std::size_t> support_of(const CVector& coeffs, double threshold = 0.0);

nlohmann::json to_json(const LassoSolution& sol, const FrequencySet& freqs);

}  // namespace ergoid
