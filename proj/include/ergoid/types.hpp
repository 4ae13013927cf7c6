#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>

namespace ergoid {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// e^{2 pi i n x}. The phase |n|*x is reduced mod 1 before scaling, and negative
/// frequencies are the exact conjugates of the positive ones.
inline cplx fourier_atom(int n, double x) {
    const int k = n < 0 ? -n : n;
    double phase = static_cast<double>(k) * x;
    phase -= std::floor(phase);
    const cplx z = std::polar(1.0, two_pi * phase);
    return n < 0 ? std::conj(z) : z;
}

}  // namespace ergoid
