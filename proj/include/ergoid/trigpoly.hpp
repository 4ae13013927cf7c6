#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ergoid/types.hpp"

namespace ergoid {

/// Symmetric frequency range {-max_freq, ..., max_freq}. Column n of every
/// design matrix corresponds to frequency min() + n.
class FrequencySet {
public:
    explicit FrequencySet(int max_freq);

    int max_freq() const noexcept { return max_freq_; }
    int min() const noexcept { return -max_freq_; }
    int max() const noexcept { return max_freq_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(2 * max_freq_ + 1); }

    bool contains(int n) const noexcept { return n >= -max_freq_ && n <= max_freq_; }
    int frequency(std::size_t index) const noexcept { return min() + static_cast<int>(index); }
    std::size_t index_of(int n) const;
    std::vector<int> indices() const;

    bool operator==(const FrequencySet&) const = default;

private:
    int max_freq_;
};

using CoeffMap = std::map<int, cplx>;

/// Sparse trigonometric polynomial f(x) = sum_n a_n e^{2 pi i n x}.
///
/// Coefficients are stored sparsely; exact zeros are never stored, so the
/// number of stored entries is the sparsity ||a||_0. When flagged
/// real-valued the coefficients must satisfy a_{-n} = conj(a_n) exactly.
class TrigPoly {
public:
    TrigPoly(FrequencySet freqs, CoeffMap coeffs, bool real_valued = true);

    static TrigPoly zero(FrequencySet freqs) { return TrigPoly(freqs, {}, true); }
    static TrigPoly from_dense(FrequencySet freqs, const CVector& dense, bool real_valued);

    const FrequencySet& freqs() const noexcept { return freqs_; }
    const CoeffMap& coeffs() const noexcept { return coeffs_; }
    bool real_valued() const noexcept { return real_valued_; }
    std::size_t sparsity() const noexcept { return coeffs_.size(); }
    cplx coeff(int n) const;

    /// Dense coefficient vector in ascending frequency order.
    CVector dense() const;

    cplx operator()(double x) const;

private:
    FrequencySet freqs_;
    CoeffMap coeffs_;
    bool real_valued_;
};

bool is_hermitian(const CoeffMap& coeffs);

cplx evaluate(const TrigPoly& poly, double x);

/// b(n) = (a(n) + conj(a(-n))) / 2. Entries that cancel exactly are dropped.
CoeffMap hermitian_symmetrize(const CoeffMap& coeffs);

/// Norm of f in the Wiener algebra: sum of coefficient moduli.
double wiener_norm(const TrigPoly& poly);

struct CircleMapVerdict {
    bool valid = false;
    /// |a_0 - 1/2| + sum_{n != 0} |a_n| < 1/2, which forces 0 < f < 1.
    bool analytic_bound_holds = false;
    double analytic_bound = 0.0;
    /// First offending grid point when the grid check failed.
    std::optional<double> violation_x;
    std::optional<double> violation_value;
};

inline constexpr std::size_t default_grid_points = 4096;

/// Checks 0 < Re f(x) < 1 on the grid x_k = k / grid_points. The grid is the
/// binding verdict; the triangle-inequality bound is recorded alongside.
CircleMapVerdict validate_circle_map(const TrigPoly& poly,
                                     std::size_t grid_points = default_grid_points);

/// Random Hermitian map with exactly `sparsity` nonzero coefficients: the
/// DC term `dc_value` plus (sparsity - 1) / 2 conjugate pairs at distinct
/// frequencies. The off-DC moduli sum to exactly `amplitude_budget`.
TrigPoly random_sparse_map(std::size_t sparsity, const FrequencySet& freqs, double dc_value,
                           double amplitude_budget, std::uint64_t seed);

nlohmann::json to_json(const TrigPoly& poly);
TrigPoly trigpoly_from_json(const nlohmann::json& j, bool real_valued = true);

}  // namespace ergoid
