#include "ergoid/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "ergoid/combinatorics.hpp"
#include "ergoid/errors.hpp"
#include "ergoid/format.hpp"

namespace ergoid {

namespace {

constexpr double clamp_floor = -1e-10;
constexpr double certificate_slack = 1e-9;

CMatrix gram_of(const CMatrix& x) { return x.adjoint() * x; }

const char* method_name(SparseEigenReport::Method m) {
    return m == SparseEigenReport::Method::exhaustive ? "exhaustive" : "lower_bound";
}

const char* method_name(REEstimate::Method m) {
    return m == REEstimate::Method::cone_sampling ? "exhaustive_cone_sampling" : "lemma1_certificate";
}

}  // namespace

CMatrix hermitian_sqrt(const CMatrix& v) {
    if (v.rows() != v.cols()) throw ParameterError("hermitian_sqrt needs a square matrix");
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(v);
    if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    RVector w = eig.eigenvalues();
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (w(i) < clamp_floor) {
            throw NumericalError("matrix is not positive semidefinite: eigenvalue " + format_double(w(i)));
        }
        w(i) = std::sqrt(std::max(w(i), 0.0));
    }
    const CMatrix& u = eig.eigenvectors();
    return u * w.asDiagonal() * u.adjoint();
}

double min_eigenvalue(const CMatrix& hermitian) {
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(hermitian, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    return eig.eigenvalues()(0);
}

SparseEigenReport sparse_eigenvalue_min(const CMatrix& x, std::size_t s, std::size_t enumeration_budget) {
    const auto n_cols = static_cast<std::size_t>(x.cols());
    if (s < 1 || s > n_cols) throw ParameterError("sparse eigenvalue needs 1 <= s <= N");
    if (binomial(n_cols, s) > enumeration_budget) {
        throw ParameterError("C(" + std::to_string(n_cols) + ", " + std::to_string(s) +
                             ") supports exceed the enumeration budget of " +
                             std::to_string(enumeration_budget));
    }
    const CMatrix gram = gram_of(x);
    SparseEigenReport report;
    report.s = s;
    report.method = SparseEigenReport::Method::exhaustive;
    report.rho_min = std::numeric_limits<double>::infinity();
    CMatrix sub(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s));
    for_each_combination(n_cols, s, [&](const std::vector<std::size_t>& support) {
        for (std::size_t a = 0; a < s; ++a) {
            for (std::size_t b = 0; b < s; ++b) {
                sub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                    gram(static_cast<Eigen::Index>(support[a]), static_cast<Eigen::Index>(support[b]));
            }
        }
        const double value = s == 1 ? sub(0, 0).real() : min_eigenvalue(sub);
        // Enumeration is lexicographic; values within rounding of the current best
        // count as ties, so the lexicographically smallest minimizer is kept.
        if (value < report.rho_min - 1e-12 * std::max(1.0, std::abs(value))) {
            report.rho_min = value;
            report.attaining_support = support;
        }
    });
    report.rho_min = std::max(report.rho_min, 0.0);
    return report;
}

SparseEigenReport sparse_eigenvalue_lower_bound(const CMatrix& x, std::size_t s) {
    const auto n_cols = static_cast<std::size_t>(x.cols());
    if (s < 1 || s > n_cols) throw ParameterError("sparse eigenvalue needs 1 <= s <= N");
    const CMatrix gram = gram_of(x);
    double bound = std::numeric_limits<double>::infinity();
    std::vector<double> off(n_cols > 0 ? n_cols - 1 : 0);
    for (std::size_t i = 0; i < n_cols; ++i) {
        std::size_t k = 0;
        for (std::size_t j = 0; j < n_cols; ++j) {
            if (j != i) off[k++] = std::abs(gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
        std::partial_sort(off.begin(), off.begin() + static_cast<std::ptrdiff_t>(s - 1), off.end(),
                          std::greater<>());
        const double radius = std::accumulate(off.begin(), off.begin() + static_cast<std::ptrdiff_t>(s - 1), 0.0);
        bound = std::min(bound, gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real() - radius);
    }
    return {s, std::max(bound, 0.0), {}, SparseEigenReport::Method::lower_bound};
}

REEstimate re_estimate_monte_carlo(const CMatrix& x, std::size_t s0, double p, std::size_t num_samples,
                                   std::uint64_t seed) {
    const auto n_cols = static_cast<std::size_t>(x.cols());
    if (num_samples < 1) throw ParameterError("RE estimate needs at least one sample");
    if (s0 < 1 || s0 >= n_cols) throw ParameterError("RE estimate needs 0 < s0 < N");
    if (!(p > 0.0)) throw ParameterError("RE cone parameter p must be positive");

    REEstimate est;
    est.s0 = s0;
    est.p = p;
    est.method = REEstimate::Method::cone_sampling;
    est.certified = false;
    double kappa = 0.0;

    auto consider = [&](const CVector& v, double v_i_norm) {
        ++est.samples_used;
        const double xv = (x * v).norm();
        if (xv <= 1e-14 * v.norm()) {
            est.violated = true;
            return false;
        }
        kappa = std::max(kappa, v_i_norm / xv);
        return true;
    };

    const auto n = static_cast<Eigen::Index>(n_cols);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!consider(CVector::Unit(n, i), 1.0)) {
            est.kappa_estimate = std::numeric_limits<double>::infinity();
            return est;
        }
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::size_t> order(n_cols);
    std::iota(order.begin(), order.end(), std::size_t{0});
    CVector v(n);
    for (std::size_t k = 0; k < num_samples; ++k) {
        std::shuffle(order.begin(), order.end(), rng);
        const std::size_t size = 1 + static_cast<std::size_t>(unit(rng) * static_cast<double>(s0)) % s0;
        v.setZero();
        double l1_inside = 0.0;
        for (std::size_t a = 0; a < size; ++a) {
            const cplx z{gauss(rng), gauss(rng)};
            v(static_cast<Eigen::Index>(order[a])) = z;
            l1_inside += std::abs(z);
        }
        const double v_i_norm = v.norm();
        if (k % 4 != 0) {
            // Off-support mass on a random subset of I^c, scaled into the cone.
            const std::size_t rest = n_cols - size;
            const std::size_t used = 1 + static_cast<std::size_t>(unit(rng) * static_cast<double>(rest)) % rest;
            CVector w = CVector::Zero(n);
            double l1_outside = 0.0;
            for (std::size_t a = 0; a < used; ++a) {
                const cplx z{gauss(rng), gauss(rng)};
                w(static_cast<Eigen::Index>(order[size + a])) = z;
                l1_outside += std::abs(z);
            }
            const double target = unit(rng) * p * l1_inside;
            v += (target / l1_outside) * w;
        }
        if (!consider(v, v_i_norm)) {
            est.kappa_estimate = std::numeric_limits<double>::infinity();
            return est;
        }
    }
    est.kappa_estimate = kappa;
    return est;
}

Lemma1Certificate lemma1_certificate(const CMatrix& v, double xi_h) {
    Lemma1Certificate cert;
    cert.lambda_min = min_eigenvalue(v);
    cert.holds = cert.lambda_min >= xi_h - certificate_slack;
    cert.kappa_bound = cert.lambda_min > 0.0 ? 1.0 / std::sqrt(cert.lambda_min)
                                             : std::numeric_limits<double>::infinity();
    return cert;
}

Lemma2Certificate lemma2_certificate(const CMatrix& v, double xi_h, std::size_t s,
                                     std::size_t enumeration_budget) {
    const auto report = sparse_eigenvalue_min(hermitian_sqrt(v), s, enumeration_budget);
    return {report.rho_min >= xi_h - certificate_slack, report.rho_min, report.attaining_support};
}

std::size_t sample_size_bound(std::size_t s, std::size_t n_cols, double xi_h, double c2) {
    if (n_cols < 2) throw ParameterError("sample size bound needs N >= 2");
    if (!(xi_h > 0.0)) throw ParameterError("sample size bound needs xi_h > 0");
    if (!(c2 > 0.0)) throw ParameterError("sample size bound needs C2 > 0");
    const double t = c2 * static_cast<double>(s) * std::log(static_cast<double>(n_cols)) / std::pow(xi_h, 1.5);
    const double lt = std::log(t);
    return static_cast<std::size_t>(std::ceil(lt <= 1.0 ? t : t * lt));
}

double corollary1_ell(std::size_t s0, double p, double xi_h, double delta) {
    // delta = 1 is admitted as a boundary probe of the formula.
    if (!(delta > 0.0 && delta <= 1.0)) throw ParameterError("corollary1_ell needs 0 < delta <= 1");
    if (!(p > 0.0)) throw ParameterError("corollary1_ell needs p > 0");
    if (s0 < 1) throw ParameterError("corollary1_ell needs s0 > 0");
    if (!(xi_h > 0.0)) throw ParameterError("corollary1_ell needs xi_h > 0");
    const double s = static_cast<double>(s0);
    const double three_p = 3.0 * p;
    return s + s * 16.0 * three_p * three_p * (three_p + 1.0) / (std::sqrt(xi_h) * delta * delta);
}

nlohmann::json to_json(const CertificationReport& r) {
    nlohmann::json rho = nlohmann::json::array();
    for (const auto& row : r.rho_table) {
        rho.push_back({{"s", row.s},
                       {"rho_min", row.rho_min},
                       {"method", method_name(row.method)},
                       {"attaining_support", row.attaining_support},
                       {"holds", row.rho_min >= r.xi_h - certificate_slack}});
    }
    nlohmann::json kappa = nlohmann::json::array();
    for (const auto& k : r.kappa_estimates) {
        nlohmann::json entry{{"s0", k.s0},
                             {"p", k.p},
                             {"method", method_name(k.method)},
                             {"samples_used", k.samples_used},
                             {"certified", k.certified},
                             {"violated", k.violated}};
        if (std::isfinite(k.kappa_estimate)) {
            entry["kappa"] = k.kappa_estimate;
        } else {
            entry["kappa"] = nullptr;
        }
        kappa.push_back(std::move(entry));
    }
    nlohmann::json out{{"N", r.n_cols},
                       {"xi_h", r.xi_h},
                       {"lambda_min", r.lemma1.lambda_min},
                       {"kappa_bound", std::isfinite(r.lemma1.kappa_bound) ? nlohmann::json(r.lemma1.kappa_bound)
                                                                            : nlohmann::json(nullptr)},
                       {"lemma1_holds", r.lemma1.holds},
                       {"rho_min", std::move(rho)},
                       {"lemma2_holds", r.lemma2_holds},
                       {"kappa_estimates", std::move(kappa)},
                       {"sample_size_bound",
                        {{"s", r.sparsity},
                         {"C2", r.c2},
                         {"M", r.sample_size ? nlohmann::json(*r.sample_size) : nlohmann::json(nullptr)}}},
                       {"corollary1", {{"s0", r.sparsity}, {"p", r.p}, {"delta", r.delta}, {"ell", r.ell},
                                       {"ell_le_N", r.ell_feasible}}}};
    return out;
}

}  // namespace ergoid
