#include "ergoid/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "ergoid/combinatorics.hpp"
#include "ergoid/errors.hpp"
#include "ergoid/trigpoly.hpp"

namespace ergoid {

cplx soft_threshold_complex(cplx c, double t) {
    const double mod = std::abs(c);
    if (mod <= t) return {};
    return c * (1.0 - t / mod);
}

double lambda_rule(double sigma, std::size_t n_cols, std::size_t m_rows, double constant) {
    if (n_cols < 2) throw ParameterError("lambda rule needs N >= 2");
    if (m_rows < 1) throw ParameterError("lambda rule needs M >= 1");
    if (!(sigma >= 0.0)) throw ParameterError("lambda rule needs sigma >= 0");
    return constant * sigma * std::sqrt(std::log(static_cast<double>(n_cols)) / static_cast<double>(m_rows));
}

namespace {

double objective_from_residual(const CVector& residual, const CVector& coeffs, double lambda,
                               double m_rows) {
    return residual.squaredNorm() / m_rows + 2.0 * lambda * coeffs.cwiseAbs().sum();
}

CVector residual_of(const MeasurementSystem& sys, const CVector& coeffs) {
    return sys.y().cast<cplx>() - sys.apply(coeffs);
}

/// Owns the iterate and its residual for one solve.
class CoordinateDescent {
public:
    CoordinateDescent(const MeasurementSystem& sys, CVector start)
        : sys_(sys), m_(static_cast<double>(sys.rows())), a_(std::move(start)) {
        reset_residual();
    }

    void reset_residual() { r_ = residual_of(sys_, a_); }

    /// One cyclic pass over `coords`; returns the max coefficient change.
    double sweep(const std::vector<std::size_t>& coords, double lambda) {
        double max_change = 0.0;
        for (std::size_t n : coords) {
            const auto idx = static_cast<Eigen::Index>(n);
            const cplx old = a_(idx);
            cplx updated;
            if (sys_.is_dense()) {
                const auto g = sys_.dense_column(n);
                updated = soft_threshold_complex(old + g.dot(r_) / m_, lambda);
                if (updated != old) r_.noalias() -= (updated - old) * g;
            } else {
                sys_.column(n, col_);
                updated = soft_threshold_complex(old + col_.dot(r_) / m_, lambda);
                if (updated != old) r_.noalias() -= (updated - old) * col_;
            }
            a_(idx) = updated;
            max_change = std::max(max_change, std::abs(updated - old));
        }
        return max_change;
    }

    double objective(double lambda) const { return objective_from_residual(r_, a_, lambda, m_); }
    const CVector& coeffs() const { return a_; }

    /// Replaces the iterate when it lowers the objective at `lambda`.
    bool try_replace(CVector candidate, double lambda) {
        CVector r = residual_of(sys_, candidate);
        if (objective_from_residual(r, candidate, lambda, m_) >= objective(lambda)) return false;
        a_ = std::move(candidate);
        r_ = std::move(r);
        return true;
    }

    double kkt(double lambda) const {
        const CVector c = sys_.apply_adjoint(r_) / m_;
        double worst = 0.0;
        for (Eigen::Index n = 0; n < a_.size(); ++n) {
            const cplx an = a_(n);
            const double v = an == cplx{} ? std::max(std::abs(c(n)) - lambda, 0.0)
                                          : std::abs(c(n) - lambda * an / std::abs(an));
            worst = std::max(worst, v);
        }
        return worst;
    }

private:
    const MeasurementSystem& sys_;
    double m_;
    CVector a_;
    CVector r_;
    CVector col_;
};

struct StageOutcome {
    bool converged;
};

constexpr std::size_t anderson_depth = 5;

/// Anderson extrapolation from consecutive iterates restricted to `coords`:
/// the affine combination of the last iterates whose successive differences
/// have the smallest norm.
std::optional<CVector> anderson_extrapolate(const std::vector<CVector>& history,
                                            const std::vector<std::size_t>& coords,
                                            const CVector& base) {
    const auto k = static_cast<Eigen::Index>(history.size() - 1);
    const auto dim = static_cast<Eigen::Index>(coords.size());
    Eigen::MatrixXd diffs(2 * dim, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        for (Eigen::Index i = 0; i < dim; ++i) {
            const cplx d = history[static_cast<std::size_t>(j + 1)](i) - history[static_cast<std::size_t>(j)](i);
            diffs(i, j) = d.real();
            diffs(dim + i, j) = d.imag();
        }
    }
    const Eigen::MatrixXd gram = diffs.transpose() * diffs;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success) return std::nullopt;
    const Eigen::VectorXd z = ldlt.solve(Eigen::VectorXd::Ones(k));
    const double total = z.sum();
    if (!std::isfinite(total) || total == 0.0) return std::nullopt;
    CVector extrapolated = base;
    for (Eigen::Index i = 0; i < dim; ++i) {
        cplx v{};
        for (Eigen::Index j = 0; j < k; ++j) v += (z(j) / total) * history[static_cast<std::size_t>(j + 1)](i);
        extrapolated(static_cast<Eigen::Index>(coords[static_cast<std::size_t>(i)])) = v;
    }
    if (!extrapolated.allFinite()) return std::nullopt;
    return extrapolated;
}

CVector restrict_to(const CVector& a, const std::vector<std::size_t>& coords) {
    CVector out(static_cast<Eigen::Index>(coords.size()));
    for (std::size_t i = 0; i < coords.size(); ++i) out(static_cast<Eigen::Index>(i)) = a(static_cast<Eigen::Index>(coords[i]));
    return out;
}

/// Runs sweeps at a fixed lambda until convergence or the shared sweep budget is spent.
StageOutcome run_stage(CoordinateDescent& cd, double lambda, const LassoConfig& cfg,
                       std::size_t& sweeps, std::vector<SweepRecord>* trace) {
    const std::size_t n_cols = static_cast<std::size_t>(cd.coeffs().size());
    std::vector<std::size_t> all(n_cols);
    for (std::size_t n = 0; n < n_cols; ++n) all[n] = n;

    cd.reset_residual();
    if (trace) trace->push_back({lambda, cd.objective(lambda)});
    auto record = [&] {
        ++sweeps;
        if (trace) trace->push_back({lambda, cd.objective(lambda)});
    };

    while (sweeps < cfg.max_iterations) {
        const double change = cd.sweep(all, lambda);
        record();
        if (change <= cfg.tolerance) {
            cd.reset_residual();
            if (cd.kkt(lambda) <= 10.0 * cfg.tolerance) return {true};
        }
        std::vector<std::size_t> active;
        for (std::size_t n = 0; n < n_cols; ++n) {
            if (cd.coeffs()(static_cast<Eigen::Index>(n)) != cplx{}) active.push_back(n);
        }
        if (active.empty()) continue;
        std::vector<CVector> history{restrict_to(cd.coeffs(), active)};
        while (sweeps < cfg.max_iterations) {
            const double active_change = cd.sweep(active, lambda);
            record();
            if (active_change <= cfg.tolerance) break;
            history.push_back(restrict_to(cd.coeffs(), active));
            if (history.size() == anderson_depth + 1) {
                if (auto candidate = anderson_extrapolate(history, active, cd.coeffs())) {
                    if (cd.try_replace(std::move(*candidate), lambda) && trace) {
                        trace->push_back({lambda, cd.objective(lambda)});
                    }
                }
                history.assign(1, restrict_to(cd.coeffs(), active));
            }
        }
    }
    return {false};
}

CVector hermitian_symmetrize_dense(const CVector& a, const FrequencySet& freqs) {
    CoeffMap sparse;
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        const cplx v = a(static_cast<Eigen::Index>(i));
        if (v != cplx{}) sparse.emplace(freqs.frequency(i), v);
    }
    return TrigPoly(freqs, hermitian_symmetrize(sparse), true).dense();
}

}  // namespace

double lasso_objective(const MeasurementSystem& sys, const CVector& coeffs, double lambda) {
    return objective_from_residual(residual_of(sys, coeffs), coeffs, lambda,
                                   static_cast<double>(sys.rows()));
}

LassoSolution solve_lasso(const MeasurementSystem& sys, const LassoConfig& cfg) {
    if (!(cfg.lambda >= 0.0)) throw ParameterError("lasso lambda must be nonnegative");
    if (!(cfg.tolerance > 0.0)) throw ParameterError("lasso tolerance must be positive");
    if (cfg.max_iterations < 1) throw ParameterError("lasso needs max_iterations >= 1");
    if (!(cfg.continuation_ratio > 0.0 && cfg.continuation_ratio < 1.0)) {
        throw ParameterError("continuation ratio must lie in (0, 1)");
    }
    const auto n_cols = static_cast<Eigen::Index>(sys.cols());
    CVector start = CVector::Zero(n_cols);
    if (cfg.warm_start) {
        if (cfg.warm_start->size() != n_cols) throw ParameterError("warm start has wrong length");
        start = *cfg.warm_start;
    }

    std::vector<double> stages;
    if (cfg.continuation && !cfg.warm_start) {
        const double m = static_cast<double>(sys.rows());
        const double lambda_max = (sys.apply_adjoint(sys.y().cast<cplx>()) / m).cwiseAbs().maxCoeff();
        // The floor keeps the stage count finite when the target is 0.
        const double floor = std::max(cfg.lambda, lambda_max * 1e-12);
        for (double l = lambda_max * cfg.continuation_ratio; l > floor; l *= cfg.continuation_ratio) {
            stages.push_back(l);
        }
    }
    stages.push_back(cfg.lambda);

    LassoSolution sol;
    sol.lambda = cfg.lambda;
    CoordinateDescent cd(sys, std::move(start));
    std::size_t sweeps = 0;
    bool converged = false;
    for (double l : stages) {
        converged = run_stage(cd, l, cfg, sweeps, cfg.record_objective ? &sol.trace : nullptr).converged;
        if (!converged) break;
    }

    sol.coeffs = cd.coeffs();
    if (cfg.symmetrize_output) sol.coeffs = hermitian_symmetrize_dense(sol.coeffs, sys.freqs());
    sol.iterations_used = sweeps;
    sol.converged = converged;
    sol.objective_value = lasso_objective(sys, sol.coeffs, cfg.lambda);
    sol.kkt_residual = kkt_residual(sys, sol.coeffs, cfg.lambda);
    return sol;
}

double kkt_residual(const MeasurementSystem& sys, const CVector& coeffs, double lambda) {
    const CVector c = sys.apply_adjoint(residual_of(sys, coeffs)) / static_cast<double>(sys.rows());
    double worst = 0.0;
    for (Eigen::Index n = 0; n < coeffs.size(); ++n) {
        const cplx an = coeffs(n);
        const double v = an == cplx{} ? std::max(std::abs(c(n)) - lambda, 0.0)
                                      : std::abs(c(n) - lambda * an / std::abs(an));
        worst = std::max(worst, v);
    }
    return worst;
}

CVector debias_on_support(const MeasurementSystem& sys, const std::vector<std::size_t>& support) {
    const auto n_cols = static_cast<Eigen::Index>(sys.cols());
    CVector out = CVector::Zero(n_cols);
    if (support.empty()) return out;
    if (support.size() > sys.rows()) {
        throw NumericalRankError("support of size " + std::to_string(support.size()) +
                                 " exceeds the " + std::to_string(sys.rows()) + " samples");
    }
    CMatrix restricted(static_cast<Eigen::Index>(sys.rows()), static_cast<Eigen::Index>(support.size()));
    CVector col;
    for (std::size_t k = 0; k < support.size(); ++k) {
        if (support[k] >= sys.cols()) throw ParameterError("support index out of range");
        sys.column(support[k], col);
        restricted.col(static_cast<Eigen::Index>(k)) = col;
    }
    Eigen::ColPivHouseholderQR<CMatrix> qr(restricted);
    qr.setThreshold(1e-10);
    if (qr.rank() < restricted.cols()) {
        throw NumericalRankError("restricted design matrix has numerical rank " +
                                 std::to_string(qr.rank()) + " < " + std::to_string(restricted.cols()));
    }
    const CVector fit = qr.solve(sys.y().cast<cplx>());
    for (std::size_t k = 0; k < support.size(); ++k) {
        out(static_cast<Eigen::Index>(support[k])) = fit(static_cast<Eigen::Index>(k));
    }
    return out;
}

L0Result l0_oracle(const MeasurementSystem& sys, std::size_t sparsity, std::size_t enumeration_budget) {
    const std::size_t n_cols = sys.cols();
    const std::size_t max_size = std::min(sparsity, n_cols);
    std::size_t total = 0;
    for (std::size_t k = 0; k <= max_size; ++k) {
        const std::size_t c = binomial(n_cols, k);
        if (c > enumeration_budget || total > enumeration_budget - c) {
            throw ParameterError("l0 oracle would enumerate more than " +
                                 std::to_string(enumeration_budget) + " supports");
        }
        total += c;
    }

    const CVector y = sys.y().cast<cplx>();
    const double tie_tol = 1e-10 * std::max(y.norm(), 1e-300);
    L0Result best;
    best.coeffs = CVector::Zero(static_cast<Eigen::Index>(n_cols));
    best.residual_norm = y.norm();
    best.supports_examined = 1;
    for (std::size_t k = 1; k <= max_size; ++k) {
        for_each_combination(n_cols, k, [&](const std::vector<std::size_t>& support) {
            ++best.supports_examined;
            CVector fit;
            try {
                fit = debias_on_support(sys, support);
            } catch (const NumericalRankError&) {
                // A dependent support fits no better than one of its subsets.
                return;
            }
            const double res = (y - sys.apply(fit)).norm();
            if (res < best.residual_norm - tie_tol) {
                best.residual_norm = res;
                best.coeffs = std::move(fit);
                best.support = support;
            }
        });
    }
    return best;
}

std::vector<std::size_t> support_of(const CVector& coeffs, double threshold) {
    std::vector<std::size_t> out;
    for (Eigen::Index n = 0; n < coeffs.size(); ++n) {
        const double mod = std::abs(coeffs(n));
        if (threshold > 0.0 ? mod > threshold : mod != 0.0) out.push_back(static_cast<std::size_t>(n));
    }
    return out;
}

nlohmann::json to_json(const LassoSolution& sol, const FrequencySet& freqs) {
    nlohmann::json coeffs = nlohmann::json::array();
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        const cplx a = sol.coeffs(static_cast<Eigen::Index>(i));
        if (a != cplx{}) coeffs.push_back({freqs.frequency(i), a.real(), a.imag()});
    }
    return {{"lambda", sol.lambda},
            {"converged", sol.converged},
            {"kkt_residual", sol.kkt_residual},
            {"objective", sol.objective_value},
            {"iterations", sol.iterations_used},
            {"coeffs", std::move(coeffs)}};
}

}  // namespace ergoid
