#include "ergoid/trigpoly.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "ergoid/errors.hpp"

namespace ergoid {

FrequencySet::FrequencySet(int max_freq) : max_freq_(max_freq) {
    if (max_freq < 1) {
        throw ParameterError("frequency set needs max_freq >= 1, got " + std::to_string(max_freq));
    }
}

std::size_t FrequencySet::index_of(int n) const {
    if (!contains(n)) {
        throw ParameterError("frequency " + std::to_string(n) + " outside [-" +
                             std::to_string(max_freq_) + ", " + std::to_string(max_freq_) + "]");
    }
    return static_cast<std::size_t>(n - min());
}

std::vector<int> FrequencySet::indices() const {
    std::vector<int> out(size());
    std::iota(out.begin(), out.end(), min());
    return out;
}

bool is_hermitian(const CoeffMap& coeffs) {
    for (const auto& [n, a] : coeffs) {
        if (n == 0) {
            if (a.imag() != 0.0) return false;
            continue;
        }
        const auto it = coeffs.find(-n);
        if (it == coeffs.end() || it->second != std::conj(a)) return false;
    }
    return true;
}

TrigPoly::TrigPoly(FrequencySet freqs, CoeffMap coeffs, bool real_valued)
    : freqs_(freqs), real_valued_(real_valued) {
    for (const auto& [n, a] : coeffs) {
        if (!freqs_.contains(n)) {
            throw ParameterError("coefficient at frequency " + std::to_string(n) +
                                 " outside the frequency set");
        }
        if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
            throw ParameterError("non-finite coefficient at frequency " + std::to_string(n));
        }
        if (a != cplx{}) coeffs_.emplace(n, a);
    }
    if (real_valued_ && !is_hermitian(coeffs_)) {
        throw ParameterError("coefficients are not Hermitian-symmetric but the polynomial is "
                             "flagged real-valued");
    }
}

TrigPoly TrigPoly::from_dense(FrequencySet freqs, const CVector& dense, bool real_valued) {
    if (static_cast<std::size_t>(dense.size()) != freqs.size()) {
        throw ParameterError("dense coefficient vector has wrong length");
    }
    CoeffMap coeffs;
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        const cplx a = dense(static_cast<Eigen::Index>(i));
        if (a != cplx{}) coeffs.emplace(freqs.frequency(i), a);
    }
    return TrigPoly(freqs, std::move(coeffs), real_valued);
}

cplx TrigPoly::coeff(int n) const {
    const auto it = coeffs_.find(n);
    return it == coeffs_.end() ? cplx{} : it->second;
}

CVector TrigPoly::dense() const {
    CVector out = CVector::Zero(static_cast<Eigen::Index>(freqs_.size()));
    for (const auto& [n, a] : coeffs_) out(static_cast<Eigen::Index>(freqs_.index_of(n))) = a;
    return out;
}

cplx TrigPoly::operator()(double x) const {
    cplx sum{};
    for (const auto& [n, a] : coeffs_) sum += a * fourier_atom(n, x);
    return sum;
}

cplx evaluate(const TrigPoly& poly, double x) { return poly(x); }

CoeffMap hermitian_symmetrize(const CoeffMap& coeffs) {
    CoeffMap out;
    auto get = [&](int n) {
        const auto it = coeffs.find(n);
        return it == coeffs.end() ? cplx{} : it->second;
    };
    for (const auto& [n, a] : coeffs) {
        for (int m : {n, -n}) {
            if (out.contains(m)) continue;
            // (a + conj b)/2 and (b + conj a)/2 are exact conjugates of each other.
            const cplx b = 0.5 * (get(m) + std::conj(get(-m)));
            const cplx v = m == 0 ? cplx{b.real(), 0.0} : b;
            if (v != cplx{}) out.emplace(m, v);
        }
    }
    return out;
}

double wiener_norm(const TrigPoly& poly) {
    double sum = 0.0;
    for (const auto& [n, a] : poly.coeffs()) sum += std::abs(a);
    return sum;
}

CircleMapVerdict validate_circle_map(const TrigPoly& poly, std::size_t grid_points) {
    if (grid_points == 0) throw ParameterError("validate_circle_map needs at least one grid point");
    CircleMapVerdict verdict;
    double bound = std::abs(poly.coeff(0) - cplx{0.5, 0.0});
    for (const auto& [n, a] : poly.coeffs()) {
        if (n != 0) bound += std::abs(a);
    }
    verdict.analytic_bound = bound;
    verdict.analytic_bound_holds = bound < 0.5;

    verdict.valid = true;
    for (std::size_t k = 0; k < grid_points; ++k) {
        const double x = static_cast<double>(k) / static_cast<double>(grid_points);
        const double v = poly(x).real();
        if (!(v > 0.0 && v < 1.0)) {
            verdict.valid = false;
            verdict.violation_x = x;
            verdict.violation_value = v;
            break;
        }
    }
    return verdict;
}

TrigPoly random_sparse_map(std::size_t sparsity, const FrequencySet& freqs, double dc_value,
                           double amplitude_budget, std::uint64_t seed) {
    if (!(dc_value > 0.0 && dc_value < 1.0)) {
        throw ParameterError("dc_value must lie in (0, 1)");
    }
    if (sparsity == 0 || sparsity % 2 == 0) {
        throw ParameterError("sparsity " + std::to_string(sparsity) +
                             " is infeasible: the DC term is always present and conjugate pairs "
                             "contribute two coefficients, so sparsity must be odd");
    }
    const std::size_t pairs = (sparsity - 1) / 2;
    if (pairs > static_cast<std::size_t>(freqs.max_freq())) {
        throw ParameterError("sparsity " + std::to_string(sparsity) + " exceeds the " +
                             std::to_string(freqs.size()) + " available frequencies");
    }
    if (!(amplitude_budget >= 0.0) || amplitude_budget >= std::min(dc_value, 1.0 - dc_value)) {
        std::ostringstream msg;
        msg << "amplitude_budget " << amplitude_budget << " must lie in [0, min(dc, 1 - dc)) = [0, "
            << std::min(dc_value, 1.0 - dc_value) << ")";
        throw ParameterError(msg.str());
    }
    if (pairs > 0 && amplitude_budget == 0.0) {
        throw ParameterError("nonzero conjugate pairs need a positive amplitude_budget");
    }

    std::mt19937_64 rng(seed);
    std::vector<int> positive(static_cast<std::size_t>(freqs.max_freq()));
    std::iota(positive.begin(), positive.end(), 1);
    std::vector<int> chosen;
    chosen.reserve(pairs);
    std::sample(positive.begin(), positive.end(), std::back_inserter(chosen), pairs, rng);

    std::uniform_real_distribution<double> weight_dist(0.5, 1.0);
    std::uniform_real_distribution<double> phase_dist(0.0, two_pi);
    std::vector<double> weights(pairs);
    for (auto& w : weights) w = weight_dist(rng);
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);

    CoeffMap coeffs{{0, cplx{dc_value, 0.0}}};
    for (std::size_t i = 0; i < pairs; ++i) {
        // Each pair spends 2|a_k| of the budget.
        const double modulus = 0.5 * amplitude_budget * weights[i] / total;
        const cplx a = std::polar(modulus, phase_dist(rng));
        coeffs.emplace(chosen[i], a);
        coeffs.emplace(-chosen[i], std::conj(a));
    }
    return TrigPoly(freqs, std::move(coeffs), true);
}

nlohmann::json to_json(const TrigPoly& poly) {
    nlohmann::json coeffs = nlohmann::json::array();
    for (const auto& [n, a] : poly.coeffs()) coeffs.push_back({n, a.real(), a.imag()});
    return {{"max_freq", poly.freqs().max_freq()}, {"coeffs", std::move(coeffs)}};
}

TrigPoly trigpoly_from_json(const nlohmann::json& j, bool real_valued) {
    try {
        const FrequencySet freqs(j.at("max_freq").get<int>());
        CoeffMap coeffs;
        for (const auto& entry : j.at("coeffs")) {
            if (!entry.is_array() || entry.size() != 3) {
                throw ParameterError("each coefficient entry must be [n, re, im]");
            }
            const int n = entry[0].get<int>();
            if (!coeffs.emplace(n, cplx{entry[1].get<double>(), entry[2].get<double>()}).second) {
                throw ParameterError("duplicate frequency " + std::to_string(n));
            }
        }
        return TrigPoly(freqs, std::move(coeffs), real_valued);
    } catch (const nlohmann::json::exception& e) {
        throw ParameterError(std::string("malformed polynomial JSON: ") + e.what());
    }
}

}  // namespace ergoid
