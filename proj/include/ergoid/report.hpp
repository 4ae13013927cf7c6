#pragma once

#include <cstddef>
#include <cstdint>

#include "ergoid/spectra.hpp"

namespace ergoid {

struct CertifyOptions {
    /// rho_min is tabulated for s = 1 .. max_s.
    std::size_t max_s = 3;
    /// s for the sample-size bound, s0 for the RE estimate and ell.
    std::size_t sparsity = 3;
    double p = 3.0;
    double delta = 0.5;
    double c2 = 1.0;
    std::size_t kappa_samples = 2000;
    std::uint64_t seed = 0;
    std::size_t enumeration_budget = 1000000;
};

/// Runs every check on a covariance matrix V with density floor xi_h:
/// lambda_min(V) >= xi_h, the rho_min table of V^{1/2} (exhaustive while the
/// support count fits the budget, Gershgorin bound beyond), a Monte-Carlo
/// RE estimate next to the certified bound, and the sample-size quantities.
CertificationReport certify_covariance(const CMatrix& v, double xi_h, const CertifyOptions& opts);

}  // namespace ergoid
