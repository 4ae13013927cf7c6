#include "ergoid/report.hpp"

#include <cmath>
#include <limits>

#include "ergoid/combinatorics.hpp"
#include "ergoid/errors.hpp"

namespace ergoid {

CertificationReport certify_covariance(const CMatrix& v, double xi_h, const CertifyOptions& opts) {
    if (v.rows() != v.cols() || v.rows() < 2) throw ParameterError("covariance must be square with N >= 2");
    if (opts.sparsity < 1 || opts.max_s < 1) throw ParameterError("sparsity levels must be positive");
    const auto n_cols = static_cast<std::size_t>(v.rows());

    CertificationReport r;
    r.n_cols = n_cols;
    r.xi_h = xi_h;
    r.sparsity = opts.sparsity;
    r.c2 = opts.c2;
    r.delta = opts.delta;
    r.p = opts.p;
    r.lemma1 = lemma1_certificate(v, xi_h);

    const CMatrix root = hermitian_sqrt(v);
    r.lemma2_holds = true;
    for (std::size_t s = 1; s <= std::min(opts.max_s, n_cols); ++s) {
        const bool exhaustive = binomial(n_cols, s) <= opts.enumeration_budget;
        auto row = exhaustive ? sparse_eigenvalue_min(root, s, opts.enumeration_budget)
                              : sparse_eigenvalue_lower_bound(root, s);
        r.lemma2_holds = r.lemma2_holds && row.rho_min >= xi_h - 1e-9;
        r.rho_table.push_back(std::move(row));
    }

    REEstimate certified;
    certified.s0 = opts.sparsity;
    certified.p = opts.p;
    certified.kappa_estimate = r.lemma1.kappa_bound;
    certified.method = REEstimate::Method::lemma1_certificate;
    certified.certified = r.lemma1.lambda_min > 0.0;
    certified.violated = !certified.certified;
    r.kappa_estimates.push_back(certified);
    if (opts.sparsity < n_cols && opts.kappa_samples > 0) {
        r.kappa_estimates.push_back(re_estimate_monte_carlo(root, opts.sparsity, opts.p, opts.kappa_samples, opts.seed));
    }

    if (xi_h > 0.0) {
        r.sample_size = sample_size_bound(opts.sparsity, n_cols, xi_h, opts.c2);
        r.ell = corollary1_ell(opts.sparsity, opts.p, xi_h, opts.delta);
    } else {
        r.ell = std::numeric_limits<double>::infinity();
    }
    r.ell_feasible = r.ell <= static_cast<double>(n_cols);
    return r;
}

}  // namespace ergoid
