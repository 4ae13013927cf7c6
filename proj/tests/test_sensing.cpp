#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "ergoid/errors.hpp"
#include "ergoid/sensing.hpp"

using namespace ergoid;

namespace {

const FrequencySet f1(1);

ObservationSet single(double x, double y) {
    ObservationSet obs;
    obs.x = {x};
    obs.y = {y};
    return obs;
}

bool near(cplx a, cplx b, double tol = 1e-15) { return std::abs(a - b) <= tol; }

std::vector<double> random_masses(std::mt19937_64& rng, std::size_t bins) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::vector<double> m(bins);
    double total = 0.0;
    for (auto& v : m) total += (v = u(rng));
    for (auto& v : m) v /= total;
    return m;
}

}  // namespace

TEST_CASE("build_measurement rows") {
    SUBCASE("x = 0") {
        const auto sys = build_measurement(single(0.0, 0.9), f1);
        const auto g = sys.matrix();
        CHECK(g.rows() == 1);
        for (int n = 0; n < 3; ++n) CHECK(near(g(0, n), 1.0));
        CHECK(sys.y()(0) == 0.9);
    }
    SUBCASE("x = 1/2") {
        const auto g = build_measurement(single(0.5, 0.1), f1).matrix();
        CHECK(near(g(0, 0), -1.0));
        CHECK(near(g(0, 1), 1.0));
        CHECK(near(g(0, 2), -1.0));
    }
    SUBCASE("x = 1/4") {
        const auto g = build_measurement(single(0.25, 0.1), f1).matrix();
        CHECK(near(g(0, 0), cplx(0, -1)));
        CHECK(near(g(0, 1), 1.0));
        CHECK(near(g(0, 2), cplx(0, 1)));
    }
    CHECK_THROWS_AS(build_measurement(ObservationSet{}, f1), ParameterError);
}

TEST_CASE("entries have unit modulus and conjugate pairs are exact") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ObservationSet obs;
    for (int i = 0; i < 200; ++i) {
        obs.x.push_back(u(rng));
        obs.y.push_back(u(rng));
    }
    const FrequencySet f(20);
    const auto g = build_measurement(obs, f).matrix();
    for (Eigen::Index m = 0; m < g.rows(); ++m) {
        for (int n = 1; n <= 20; ++n) {
            CHECK(std::abs(std::abs(g(m, f.index_of(n))) - 1.0) <= 1e-12);
            CHECK(g(m, f.index_of(-n)) == std::conj(g(m, f.index_of(n))));
        }
    }
}

TEST_CASE("dense and implicit storage agree") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ObservationSet obs;
    for (int i = 0; i < 40; ++i) {
        obs.x.push_back(u(rng));
        obs.y.push_back(u(rng));
    }
    const FrequencySet f(6);
    const auto dense = build_measurement(obs, f, MeasurementSystem::Storage::dense);
    const auto lazy = build_measurement(obs, f, MeasurementSystem::Storage::implicit);
    CHECK(dense.is_dense());
    CHECK_FALSE(lazy.is_dense());
    CHECK((dense.matrix() - lazy.matrix()).cwiseAbs().maxCoeff() == 0.0);
    CVector a = CVector::Random(f.size());
    CHECK((dense.apply(a) - lazy.apply(a)).norm() <= 1e-12);
    CVector r = CVector::Random(40);
    CHECK((dense.apply_adjoint(r) - lazy.apply_adjoint(r)).norm() <= 1e-12);
    CVector col;
    lazy.column(3, col);
    CHECK((col - dense.dense_column(3)).norm() == 0.0);
    CHECK_THROWS(lazy.dense_column(0));
    const auto swapped = dense.with_observations(RVector::Zero(40));
    CHECK(swapped.y().norm() == 0.0);
    CHECK(swapped.sample_points() == dense.sample_points());
}

TEST_CASE("covariance from closed-form densities") {
    SUBCASE("uniform density gives the identity") {
        const auto v = covariance_from_density([](int m) { return m == 0 ? cplx(1) : cplx(0); }, FrequencySet(4));
        CHECK(v.V.isApprox(CMatrix::Identity(9, 9)));
        CHECK(v.source == CovarianceSource::exact_density);
    }
    SUBCASE("1 + cos(2 pi x)/2 gives off-diagonal 1/4") {
        const auto v = covariance_from_density(
            [](int m) { return m == 0 ? cplx(1) : (std::abs(m) == 1 ? cplx(0.25) : cplx(0)); }, f1);
        CMatrix expected(3, 3);
        expected << 1, 0.25, 0, 0.25, 1, 0.25, 0, 0.25, 1;
        CHECK((v.V - expected).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("non-normalized density is rejected") {
        CHECK_THROWS_AS(covariance_from_density([](int) { return cplx(0.5); }, f1), ParameterError);
    }
}

TEST_CASE("covariance from histograms") {
    SUBCASE("two equal bins give the identity") {
        const auto v = covariance_from_density(DensityEstimate({0.5, 0.5}, 2), f1);
        CHECK((v.V - CMatrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-15);
        CHECK(v.source == CovarianceSource::histogram);
    }
    SUBCASE("exact bin integrals") {
        // Bin [0, 1/2) with mass 1: h^(1) = 2 int_0^{1/2} e^{2 pi i x} dx = 2i/pi.
        const DensityEstimate est({1.0, 0.0}, 2);
        CHECK(near(histogram_fourier_coefficient(est, 1), cplx(0, 2.0 / std::acos(-1.0)), 1e-15));
        CHECK(near(histogram_fourier_coefficient(est, 0), 1.0));
        CHECK(near(histogram_fourier_coefficient(est, 2), 0.0, 1e-15));
    }
    SUBCASE("unnormalized histogram is rejected") {
        CHECK_THROWS_AS(covariance_from_density(DensityEstimate({0.5, 0.6}, 2), f1), ParameterError);
    }
    SUBCASE("random histograms give hermitian toeplitz psd matrices above their floor") {
        std::mt19937_64 rng(8);
        const FrequencySet f(6);
        for (int trial = 0; trial < 100; ++trial) {
            const DensityEstimate est(random_masses(rng, 32), 0);
            const auto v = covariance_from_density(est, f).V;
            CHECK((v - v.adjoint()).cwiseAbs().maxCoeff() == 0.0);
            for (Eigen::Index j = 1; j < v.rows(); ++j) {
                for (Eigen::Index k = 1; k < v.cols(); ++k) CHECK(v(j, k) == v(j - 1, k - 1));
            }
            for (Eigen::Index j = 0; j < v.rows(); ++j) CHECK(std::abs(v(j, j) - 1.0) <= 1e-12);
            const double lmin = Eigen::SelfAdjointEigenSolver<CMatrix>(v).eigenvalues().minCoeff();
            CHECK(lmin >= density_lower_bound(est) - 1e-12);
        }
    }
}

TEST_CASE("empirical gram") {
    SUBCASE("single sample at 0 gives all ones") {
        const auto gram = empirical_gram(build_measurement(single(0.0, 0.5), f1));
        CHECK((gram - CMatrix::Ones(3, 3)).cwiseAbs().maxCoeff() <= 1e-15);
    }
    SUBCASE("equispaced samples give the identity") {
        ObservationSet obs;
        for (int m = 0; m < 16; ++m) {
            obs.x.push_back(m / 16.0);
            obs.y.push_back(0.0);
        }
        const auto gram = empirical_gram(build_measurement(obs, FrequencySet(5)));
        CHECK((gram - CMatrix::Identity(11, 11)).cwiseAbs().maxCoeff() <= 1e-14);
    }
    SUBCASE("uniform samples approach the identity") {
        std::mt19937_64 rng(10);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        ObservationSet obs;
        for (int m = 0; m < 10000; ++m) {
            obs.x.push_back(u(rng));
            obs.y.push_back(0.0);
        }
        const auto gram = empirical_gram(build_measurement(obs, FrequencySet(5)));
        CHECK((gram - CMatrix::Identity(11, 11)).cwiseAbs().maxCoeff() <= 0.05);
        for (Eigen::Index n = 0; n < 11; ++n) CHECK(std::abs(gram(n, n) - 1.0) <= 1e-12);
    }
    SUBCASE("orbit samples approach the histogram covariance") {
        const auto map = random_sparse_map(3, FrequencySet(15), 0.5, 0.49, 12);
        const auto traj = simulate(map, 0.4, 1000, 100000);
        const auto obs = sample_observations(traj, 10000, SamplingStrategy::consecutive(), 0.0, 1);
        const FrequencySet f(5);
        const auto gram = empirical_gram(build_measurement(obs, f));
        // With G_{m,n} = e^{2 pi i n x_m}, (G^* G / M)_{jk} averages e^{2 pi i (k - j) x},
        // which estimates h^(k - j) = conj(V_{jk}).
        const auto v = covariance_from_density(estimate_density(traj, 64), f).V;
        CHECK((gram - v.conjugate()).cwiseAbs().maxCoeff() <= 0.1);
    }
}

TEST_CASE("matrix csv export") {
    ObservationSet obs;
    obs.x = {0.0, 0.25};
    obs.y = {0.0, 0.0};
    std::ostringstream os;
    write_matrix_csv(os, build_measurement(obs, f1));
    std::istringstream in(os.str());
    std::string header, row0, row1;
    std::getline(in, header);
    std::getline(in, row0);
    std::getline(in, row1);
    CHECK(header == "2,3,-1,1");
    CHECK(row0 == "1,0,1,0,1,0");
    CHECK(row1.substr(row1.size() - 2) == ",1");
}
