#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mssrc/metrics.hpp"
#include "mssrc/signals.hpp"

#include <cmath>

using namespace mssrc;
using Eigen::Index;
using Eigen::MatrixXd;

namespace {

TimeSeriesMatrix unit_sinusoid(Index n)
{
    MatrixXd x(n, 1);
    for (Index i = 0; i < n; ++i) x(i, 0) = std::sin(2.0 * M_PI * i / 20.0);
    return TimeSeriesMatrix(x);
}

}  // namespace

TEST_CASE("exact estimate reports the cap")
{
    const auto q = unit_sinusoid(200);
    const auto r = snr_db(q, q);
    CHECK(r.average_db == snr_cap_db);
    CHECK(r.n_samples_used == 200);
}

TEST_CASE("error as strong as the signal is 0 dB")
{
    const auto q = unit_sinusoid(200);
    const TimeSeriesMatrix zero(MatrixXd::Zero(200, 1));
    CHECK(snr_db(q, zero).average_db == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("constant offset of 0.1 on a unit sinusoid")
{
    const auto q = unit_sinusoid(2000);
    const TimeSeriesMatrix shifted(q.values.array() + 0.1);
    const double oracle = 10.0 * std::log10(q.values.squaredNorm() / (2000 * 0.01));
    CHECK(snr_db(q, shifted).average_db == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(snr_db(q, shifted).average_db == doctest::Approx(16.99).epsilon(1e-3));
}

TEST_CASE("common scaling leaves the SNR unchanged")
{
    const auto clean = generate_sinusoid(SinusoidParams::defaults(4, 500));
    const auto noisy = add_correlated_noise(clean, NoiseParams{});
    for (double k : {0.5, 2.0, 1024.0}) {
        const TimeSeriesMatrix a(clean.values * k), b(noisy.noisy.values * k);
        CHECK(snr_db(a, b).average_db == snr_db(clean, noisy.noisy).average_db);
    }
}

TEST_CASE("injected SNR is read back")
{
    const auto clean = generate_sinusoid(SinusoidParams::defaults(5, 3000));
    for (double target : {-10.0, 0.0, 7.5}) {
        NoiseParams np;
        np.target_input_snr_db = target;
        const auto noisy = add_correlated_noise(clean, np);
        CHECK(std::abs(snr_db(clean, noisy.noisy).average_db - target) <= 0.05);
    }
}

TEST_CASE("offset series are aligned on absolute indices")
{
    const auto q = unit_sinusoid(300);
    const TimeSeriesMatrix tail(q.values.bottomRows(200));
    const auto r = snr_db(q, 0, tail, 100, 0, 299);
    CHECK(r.average_db == snr_cap_db);
    CHECK(r.first_index == 100);
    CHECK(r.last_index == 299);
    CHECK(r.n_samples_used == 200);
}

TEST_CASE("empty range and channel mismatch are errors")
{
    const auto q = unit_sinusoid(50);
    CHECK_THROWS_AS(snr_db(q, q, 30, 20), InvalidArgument);
    CHECK_THROWS_AS(snr_db(q, 0, q, 100, 0, 49), InvalidArgument);
    CHECK_THROWS_AS(snr_db(q, TimeSeriesMatrix(MatrixXd::Zero(50, 2))), InvalidArgument);
}

TEST_CASE("zero-power channels are excluded from the average")
{
    MatrixXd q(100, 2);
    q.col(0) = unit_sinusoid(100).values.col(0);
    q.col(1).setZero();
    const TimeSeriesMatrix clean(q);
    const TimeSeriesMatrix estimate(MatrixXd::Zero(100, 2));
    const auto r = snr_db(clean, estimate);
    CHECK(r.undefined[1]);
    CHECK_FALSE(r.undefined[0]);
    CHECK(std::isnan(r.per_channel_db(1)));
    CHECK(r.average_db == doctest::Approx(0.0).epsilon(1e-12));

    const TimeSeriesMatrix silent(MatrixXd::Zero(100, 2));
    CHECK_FALSE(snr_db(silent, estimate).average_defined());
}
