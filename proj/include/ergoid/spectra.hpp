#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "ergoid/sensing.hpp"
#include "ergoid/types.hpp"

namespace ergoid {

/// Principal square root of a Hermitian PSD matrix via V = U diag(w) U^*.
/// Eigenvalues in [-1e-10, 0) are clamped to zero; more negative ones throw
/// NumericalError.
CMatrix hermitian_sqrt(const CMatrix& v);

/// Smallest eigenvalue of a Hermitian matrix.
double min_eigenvalue(const CMatrix& hermitian);

struct SparseEigenReport {
    enum class Method { exhaustive, lower_bound };

    std::size_t s = 0;
    double rho_min = 0.0;
    /// Empty for the lower-bound method.
    std::vector<std::size_t> attaining_support;
    Method method = Method::exhaustive;
};

/// rho_min(s, X) = min over supports |S| = s of lambda_min(X_S^* X_S).
/// Throws ParameterError when C(N, s) exceeds the enumeration budget.
SparseEigenReport sparse_eigenvalue_min(const CMatrix& x, std::size_t s,
                                        std::size_t enumeration_budget = 1000000);

/// Gershgorin bound valid for every support of size s:
/// min_i (A_ii - sum of the s-1 largest |A_ij|, j != i) with A = X^* X.
SparseEigenReport sparse_eigenvalue_lower_bound(const CMatrix& x, std::size_t s);

struct REEstimate {
    enum class Method { cone_sampling, lemma1_certificate };

    std::size_t s0 = 0;
    double p = 0.0;
    /// +infinity when some sampled vector has Xv = 0.
    double kappa_estimate = 0.0;
    Method method = Method::cone_sampling;
    std::size_t samples_used = 0;
    bool certified = false;
    bool violated = false;
};

/// Monte-Carlo estimate of the RE parameter kappa(s0, p, X): the largest
/// ||v_I|| / ||X v|| over sampled supports |I| <= s0 and cone-feasible v
/// (||v_{I^c}||_1 <= p ||v_I||_1). Every basis vector is probed first, and
/// every fourth random sample is supported on I. Sampling a minimum from
/// inside the feasible set under-estimates the true kappa, so the result is
/// never certified.
REEstimate re_estimate_monte_carlo(const CMatrix& x, std::size_t s0, double p,
                                   std::size_t num_samples, std::uint64_t seed);

struct Lemma1Certificate {
    bool holds = false;
    double lambda_min = 0.0;
    /// lambda_min^{-1/2}; an RE parameter of V^{1/2} for every (s0, p).
    double kappa_bound = 0.0;
};

/// lambda_min(V) >= xi_h - 1e-9 certifies RE(V^{1/2}) with kappa <= lambda_min^{-1/2}.
Lemma1Certificate lemma1_certificate(const CMatrix& v, double xi_h);

struct Lemma2Certificate {
    bool holds = false;
    double rho_min = 0.0;
    std::vector<std::size_t> attaining_support;
};

/// rho_min(s, V^{1/2}) >= xi_h - 1e-9, by exhaustive enumeration.
Lemma2Certificate lemma2_certificate(const CMatrix& v, double xi_h, std::size_t s,
                                     std::size_t enumeration_budget = 1000000);

/// ceil(t log t) with t = C2 s log(N) / xi_h^{3/2}; ceil(t) when log t <= 1.
std::size_t sample_size_bound(std::size_t s, std::size_t n_cols, double xi_h, double c2 = 1.0);

/// ell = s0 + s0 * 16 (3p)^2 (3p + 1) / (sqrt(xi_h) delta^2).
double corollary1_ell(std::size_t s0, double p, double xi_h, double delta);

/// Everything `certify` reports about one covariance matrix.
struct CertificationReport {
    std::size_t n_cols = 0;
    double xi_h = 0.0;
    Lemma1Certificate lemma1;
    std::vector<SparseEigenReport> rho_table;
    bool lemma2_holds = true;
    std::vector<REEstimate> kappa_estimates;
    std::size_t sparsity = 0;
    double c2 = 1.0;
    std::optional<std::size_t> sample_size;
    double delta = 0.5;
    double p = 3.0;
    double ell = 0.0;
    bool ell_feasible = false;
};

nlohmann::json to_json(const CertificationReport& report);

}  // namespace ergoid
