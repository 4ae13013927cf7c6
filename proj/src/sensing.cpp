#include "ergoid/sensing.hpp"

#include <cmath>
#include <ostream>

#include "ergoid/errors.hpp"
#include "ergoid/format.hpp"

namespace ergoid {

MeasurementSystem::MeasurementSystem(std::vector<double> sample_points, RVector y,
                                     FrequencySet freqs, Storage storage)
    : points_(std::move(sample_points)), y_(std::move(y)), freqs_(freqs), storage_(storage) {
    if (points_.empty()) throw ParameterError("measurement system needs at least one sample");
    if (static_cast<std::size_t>(y_.size()) != points_.size()) {
        throw ParameterError("observation vector length does not match the sample count");
    }
    if (storage_ == Storage::dense) {
        g_ = CMatrix(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols()));
        for (std::size_t m = 0; m < rows(); ++m) {
            for (std::size_t n = 0; n < cols(); ++n) {
                (*g_)(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) =
                    fourier_atom(freqs_.frequency(n), points_[m]);
            }
        }
    }
}

CMatrix MeasurementSystem::matrix() const {
    if (g_) return *g_;
    CMatrix g(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols()));
    CVector col;
    for (std::size_t n = 0; n < cols(); ++n) {
        column(n, col);
        g.col(static_cast<Eigen::Index>(n)) = col;
    }
    return g;
}

void MeasurementSystem::column(std::size_t n, CVector& out) const {
    if (g_) {
        out = g_->col(static_cast<Eigen::Index>(n));
        return;
    }
    out.resize(static_cast<Eigen::Index>(rows()));
    const int f = freqs_.frequency(n);
    for (std::size_t m = 0; m < rows(); ++m) out(static_cast<Eigen::Index>(m)) = fourier_atom(f, points_[m]);
}

Eigen::Ref<const CVector> MeasurementSystem::dense_column(std::size_t n) const {
    if (!g_) throw ParameterError("dense_column called on an implicit measurement system");
    return g_->col(static_cast<Eigen::Index>(n));
}

CVector MeasurementSystem::apply(const CVector& a) const {
    if (g_) return *g_ * a;
    CVector out = CVector::Zero(static_cast<Eigen::Index>(rows()));
    CVector col;
    for (std::size_t n = 0; n < cols(); ++n) {
        const cplx an = a(static_cast<Eigen::Index>(n));
        if (an == cplx{}) continue;
        column(n, col);
        out += an * col;
    }
    return out;
}

CVector MeasurementSystem::apply_adjoint(const CVector& r) const {
    if (g_) return g_->adjoint() * r;
    CVector out(static_cast<Eigen::Index>(cols()));
    CVector col;
    for (std::size_t n = 0; n < cols(); ++n) {
        column(n, col);
        out(static_cast<Eigen::Index>(n)) = col.dot(r);
    }
    return out;
}

MeasurementSystem MeasurementSystem::with_observations(RVector y) const {
    if (static_cast<std::size_t>(y.size()) != rows()) {
        throw ParameterError("observation vector length does not match the sample count");
    }
    MeasurementSystem copy = *this;
    copy.y_ = std::move(y);
    return copy;
}

MeasurementSystem build_measurement(const ObservationSet& obs, const FrequencySet& freqs,
                                    MeasurementSystem::Storage storage) {
    if (obs.size() == 0) throw ParameterError("cannot build a measurement system from no observations");
    RVector y = Eigen::Map<const RVector>(obs.y.data(), static_cast<Eigen::Index>(obs.y.size()));
    return MeasurementSystem(obs.x, std::move(y), freqs, storage);
}

cplx histogram_fourier_coefficient(const DensityEstimate& est, int m) {
    const auto masses = est.masses();
    if (m == 0) {
        double total = 0.0;
        for (double w : masses) total += w;
        return {total, 0.0};
    }
    // int over [l, r] of h_b e^{2 pi i m x} = h_b (e(r) - e(l)) / (2 pi i m), h_b = B * mass_b.
    const auto bins = static_cast<double>(masses.size());
    const cplx scale = bins / cplx(0.0, two_pi * m);
    cplx sum{};
    cplx left = fourier_atom(m, 0.0);
    for (std::size_t b = 0; b < masses.size(); ++b) {
        const cplx right = fourier_atom(m, static_cast<double>(b + 1) / bins);
        sum += masses[b] * (right - left);
        left = right;
    }
    return scale * sum;
}

namespace {

CMatrix toeplitz_from_coefficients(const std::vector<cplx>& hhat, const FrequencySet& freqs) {
    const auto n = static_cast<Eigen::Index>(freqs.size());
    CMatrix v(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = 0; k < n; ++k) {
            const Eigen::Index d = j - k;
            v(j, k) = d >= 0 ? hhat[static_cast<std::size_t>(d)] : std::conj(hhat[static_cast<std::size_t>(-d)]);
        }
    }
    return v;
}

constexpr double normalization_tolerance = 1e-9;

}  // namespace

CovarianceMatrix covariance_from_density(const FourierCoefficients& fourier, const FrequencySet& freqs) {
    const cplx mass = fourier(0);
    if (std::abs(mass - cplx{1.0, 0.0}) > normalization_tolerance) {
        throw ParameterError("density is not normalized: integral = " + format_double(mass.real()));
    }
    std::vector<cplx> hhat(freqs.size());
    hhat[0] = cplx{1.0, 0.0};
    for (std::size_t m = 1; m < hhat.size(); ++m) hhat[m] = fourier(static_cast<int>(m));
    return {toeplitz_from_coefficients(hhat, freqs), CovarianceSource::exact_density};
}

CovarianceMatrix covariance_from_density(const DensityEstimate& est, const FrequencySet& freqs) {
    const double mass = histogram_fourier_coefficient(est, 0).real();
    if (std::abs(mass - 1.0) > normalization_tolerance) {
        throw ParameterError("histogram is not normalized: total mass = " + format_double(mass));
    }
    std::vector<cplx> hhat(freqs.size());
    hhat[0] = cplx{1.0, 0.0};
    for (std::size_t m = 1; m < hhat.size(); ++m) {
        hhat[m] = histogram_fourier_coefficient(est, static_cast<int>(m));
    }
    return {toeplitz_from_coefficients(hhat, freqs), CovarianceSource::histogram};
}

CMatrix empirical_gram(const MeasurementSystem& sys) {
    const CMatrix g = sys.matrix();
    CMatrix gram = CMatrix::Zero(g.cols(), g.cols());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(g.adjoint());
    // Mirror the lower triangle so the result is exactly Hermitian.
    for (Eigen::Index j = 0; j < gram.cols(); ++j) {
        gram(j, j) = gram(j, j).real();
        for (Eigen::Index i = j + 1; i < gram.rows(); ++i) gram(j, i) = std::conj(gram(i, j));
    }
    return gram / static_cast<double>(sys.rows());
}

void write_matrix_csv(std::ostream& os, const MeasurementSystem& sys) {
    os << sys.rows() << ',' << sys.cols() << ',' << sys.freqs().min() << ',' << sys.freqs().max() << '\n';
    const CMatrix g = sys.matrix();
    for (Eigen::Index m = 0; m < g.rows(); ++m) {
        for (Eigen::Index n = 0; n < g.cols(); ++n) {
            if (n > 0) os << ',';
            // Adding 0.0 turns -0 into 0.
            os << format_double(g(m, n).real() + 0.0) << ',' << format_double(g(m, n).imag() + 0.0);
        }
        os << '\n';
    }
}

}  // namespace ergoid
