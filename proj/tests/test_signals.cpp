#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mssrc/signals.hpp"

#include <cmath>

using namespace mssrc;
using Eigen::Index;
using Eigen::MatrixXd;

namespace {

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    const Eigen::ArrayXd x = a.array() - a.mean();
    const Eigen::ArrayXd y = b.array() - b.mean();
    return (x * y).sum() / std::sqrt(x.square().sum() * y.square().sum());
}

TimeSeriesMatrix unit_sinusoids(Index n, Index p)
{
    return generate_sinusoid(SinusoidParams::defaults(p, n));
}

}  // namespace

TEST_CASE("KS from the zero state stays at zero")
{
    KsParams ks;
    ks.initial_amplitude = 0.0;
    ks.n_steps = 500;
    ks.transient_steps = 100;
    const auto out = generate_ks(ks);
    CHECK(out.values.rows() == 500);
    CHECK(out.values.cols() == 50);
    CHECK(out.values.isZero(0.0));
}

TEST_CASE("KS attractor has order-one amplitude")
{
    const auto out = generate_ks(KsParams{});
    REQUIRE(out.length() == 10000);
    const double mean = out.values.mean();
    const double sd = std::sqrt((out.values.array() - mean).square().mean());
    CHECK(sd >= 0.5);
    CHECK(sd <= 3.0);
    CHECK(out.values.allFinite());
}

TEST_CASE("KS is deterministic in its seed")
{
    KsParams ks;
    ks.n_steps = 300;
    ks.transient_steps = 200;
    CHECK(generate_ks(ks).values == generate_ks(ks).values);
    KsParams other = ks;
    other.seed = ks.seed + 1;
    CHECK(generate_ks(ks).values != generate_ks(other).values);
}

TEST_CASE("KS blow-up is reported")
{
    KsParams ks;
    ks.initial_amplitude = 1e8;
    ks.transient_steps = 0;
    ks.n_steps = 50;
    CHECK_THROWS_AS(generate_ks(ks), IntegrationDiverged);
}

TEST_CASE("KS sampling positions are evenly spaced")
{
    const auto idx = ks_sample_indices(128, 4);
    CHECK(idx == std::vector<Index>{0, 32, 64, 96});
    KsParams bad;
    bad.grid_points = 100;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("quarter-period sinusoid")
{
    SinusoidParams s;
    s.frequencies = {0.25};
    s.amplitudes = {1.0};
    s.phases = {0.0};
    s.n_samples = 8;
    const auto x = generate_sinusoid(s);
    const double expected[] = {0, 1, 0, -1, 0, 1, 0, -1};
    for (Index i = 0; i < 8; ++i) CHECK(x.values(i, 0) == doctest::Approx(expected[i]).epsilon(1e-12));

    s.phases = {M_PI / 2};
    const auto c = generate_sinusoid(s);
    for (Index i = 0; i < 8; ++i) CHECK(c.values(i, 0) == doctest::Approx(std::cos(M_PI * i / 2.0)).epsilon(1e-12));
}

TEST_CASE("unit sinusoid variance over many periods")
{
    const auto x = unit_sinusoids(10000, 10);
    for (Index c = 0; c < 10; ++c) {
        const Eigen::ArrayXd col = x.values.col(c).array();
        const double var = (col - col.mean()).square().mean();
        CHECK(var == doctest::Approx(0.5).epsilon(0.02));
    }
}

TEST_CASE("sinusoid above Nyquist is rejected")
{
    auto s = SinusoidParams::defaults(2, 100);
    s.frequencies[1] = 0.5;
    CHECK_THROWS_AS(generate_sinusoid(s), InvalidArgument);
    s.frequencies[1] = 0.49;
    CHECK_NOTHROW(generate_sinusoid(s));
}

TEST_CASE("uncorrelated noise has negligible cross-correlation")
{
    NoiseParams np;
    np.correlation = 0.0;
    const auto noisy = add_correlated_noise(unit_sinusoids(100000, 3), np);
    CHECK(std::abs(correlation(noisy.noise.values.col(0), noisy.noise.values.col(1))) < 0.02);
    CHECK(std::abs(correlation(noisy.noise.values.col(1), noisy.noise.values.col(2))) < 0.02);
}

TEST_CASE("AR(1) noise correlation structure")
{
    NoiseParams np;
    np.correlation = 0.5;
    const auto noisy = add_correlated_noise(unit_sinusoids(100000, 3), np);
    const double r01 = correlation(noisy.noise.values.col(0), noisy.noise.values.col(1));
    const double r02 = correlation(noisy.noise.values.col(0), noisy.noise.values.col(2));
    CHECK(r01 >= 0.47);
    CHECK(r01 <= 0.53);
    CHECK(r02 >= 0.22);
    CHECK(r02 <= 0.28);
}

TEST_CASE("sample noise covariance approaches s^2 Sigma")
{
    NoiseParams np;
    np.correlation = 0.5;
    const auto noisy = add_correlated_noise(unit_sinusoids(100000, 4), np);
    const MatrixXd& n = noisy.noise.values;
    const MatrixXd cov = n.transpose() * n / static_cast<double>(n.rows());
    const MatrixXd expected = noisy.noise_scale * noisy.noise_scale * ar1_correlation(4, 0.5);
    CHECK((cov - expected).norm() <= 0.05 * expected.norm());
}

TEST_CASE("noise hits the target input SNR")
{
    const auto clean = unit_sinusoids(2000, 5);
    for (double target : {-10.0, -5.0, 0.0, 5.0, 10.0}) {
        NoiseParams np;
        np.target_input_snr_db = target;
        const auto noisy = add_correlated_noise(clean, np);
        CHECK(noisy.realized_input_snr_db == doctest::Approx(target).epsilon(1e-9));
        CHECK(((noisy.noisy.values - noisy.noise.values) - clean.values).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("zero-power clean signal cannot be targeted")
{
    CHECK_THROWS_AS(add_correlated_noise(TimeSeriesMatrix(MatrixXd::Zero(100, 2)), NoiseParams{}), CannotTargetSnr);
}

TEST_CASE("noise is deterministic in its seed")
{
    const auto clean = unit_sinusoids(500, 3);
    NoiseParams np;
    CHECK(add_correlated_noise(clean, np).noisy.values == add_correlated_noise(clean, np).noisy.values);
    NoiseParams other = np;
    other.seed = np.seed + 1;
    CHECK(add_correlated_noise(clean, np).noisy.values != add_correlated_noise(clean, other).noisy.values);
}
