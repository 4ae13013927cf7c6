#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ergoid/dynamics.hpp"
#include "ergoid/trigpoly.hpp"
#include "ergoid/types.hpp"

namespace ergoid {

/// The linear system y = G a (+ noise) with G_{m,n} = e^{2 pi i f_n x_m},
/// columns in ascending frequency order.
///
/// Dense mode stores G. Implicit mode keeps only the sample points and
/// generates columns on demand, which is what the solver needs for large N.
class MeasurementSystem {
public:
    enum class Storage { dense, implicit };

    MeasurementSystem(std::vector<double> sample_points, RVector y, FrequencySet freqs,
                      Storage storage = Storage::dense);

    std::size_t rows() const noexcept { return points_.size(); }
    std::size_t cols() const noexcept { return freqs_.size(); }
    const FrequencySet& freqs() const noexcept { return freqs_; }
    const std::vector<double>& sample_points() const noexcept { return points_; }
    const RVector& y() const noexcept { return y_; }
    Storage storage() const noexcept { return storage_; }
    bool is_dense() const noexcept { return storage_ == Storage::dense; }

    /// Dense G. Materializes it in implicit mode.
    CMatrix matrix() const;
    /// Column n written into `out` (resized to rows()).
    void column(std::size_t n, CVector& out) const;
    /// Reference to column n; only valid in dense mode.
    Eigen::Ref<const CVector> dense_column(std::size_t n) const;

    CVector apply(const CVector& a) const;             // G a
    CVector apply_adjoint(const CVector& r) const;     // G^* r

    /// Copy with the same sample points and a new observation vector.
    MeasurementSystem with_observations(RVector y) const;

private:
    std::vector<double> points_;
    RVector y_;
    FrequencySet freqs_;
    Storage storage_;
    std::optional<CMatrix> g_;
};

MeasurementSystem build_measurement(const ObservationSet& obs, const FrequencySet& freqs,
                                    MeasurementSystem::Storage storage = MeasurementSystem::Storage::dense);

/// Fourier coefficients h^(m) = int_0^1 e^{2 pi i m x} h(x) dx of a density.
using FourierCoefficients = std::function<cplx(int)>;

/// h^(m) for the piecewise-constant density of a histogram, integrated
/// exactly over each bin.
cplx histogram_fourier_coefficient(const DensityEstimate& est, int m);

enum class CovarianceSource { exact_density, histogram };

struct CovarianceMatrix {
    CMatrix V;
    CovarianceSource source = CovarianceSource::exact_density;
};

/// V_{jk} = h^(f_j - f_k). The closed form must satisfy h^(0) = 1 and
/// h^(-m) = conj(h^(m)); only m >= 0 is queried.
CovarianceMatrix covariance_from_density(const FourierCoefficients& fourier, const FrequencySet& freqs);
CovarianceMatrix covariance_from_density(const DensityEstimate& est, const FrequencySet& freqs);

/// G^* G / M. For orbit samples this estimates conj(V) = V^T (same spectrum as V).
CMatrix empirical_gram(const MeasurementSystem& sys);

/// Diagnostic export: header `M,N,freq_min,freq_max`, then one line per row
/// with interleaved real and imaginary parts.
void write_matrix_csv(std::ostream& os, const MeasurementSystem& sys);

}  // namespace ergoid
