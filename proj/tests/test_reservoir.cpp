#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mssrc/reservoir.hpp"

#include <cmath>
#include <random>

using namespace mssrc;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Gelfand estimate: average log growth of a power iteration.
double power_iteration_radius(const MatrixXd& a, int burn_in = 300, int steps = 4000)
{
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal;
    VectorXd v(a.rows());
    for (Index i = 0; i < v.size(); ++i) v(i) = normal(rng);
    v.normalize();
    for (int k = 0; k < burn_in; ++k) v = (a * v).normalized();
    double log_growth = 0.0;
    for (int k = 0; k < steps; ++k) {
        VectorXd w = a * v;
        log_growth += std::log(w.norm());
        v = w / w.norm();
    }
    return std::exp(log_growth / steps);
}

// Normal equations solved with an explicit inverse.
MatrixXd ridge_oracle(const MatrixXd& r, const MatrixXd& y, double ridge)
{
    const MatrixXd gram = r * r.transpose() + ridge * MatrixXd::Identity(r.rows(), r.rows());
    return y.transpose() * r.transpose() * gram.fullPivLu().inverse();
}

double ridge_objective(const MatrixXd& w, const MatrixXd& r, const MatrixXd& y, double ridge)
{
    return (y.transpose() - w * r).squaredNorm() + ridge * w.squaredNorm();
}

Eigen::SparseMatrix<double> sparse(const MatrixXd& m)
{
    return m.sparseView();
}

EsnConfig small_config(Index size, double connectivity, double radius, std::uint64_t seed = 42)
{
    EsnConfig cfg;
    cfg.reservoir_size = size;
    cfg.connectivity = connectivity;
    cfg.spectral_radius = radius;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("single-node reservoir carries exactly the requested radius")
{
    auto cfg = small_config(1, 1.0, 0.9);
    Reservoir<double> res(cfg, 1);
    REQUIRE(res.internal_weights().nonZeros() == 1);
    CHECK(std::abs(MatrixXd(res.internal_weights())(0, 0)) == doctest::Approx(0.9).epsilon(1e-14));
}

TEST_CASE("spectral radius agrees with an independent power iteration")
{
    auto cfg = small_config(200, 0.05, 0.95);
    Reservoir<double> res(cfg, 3);
    const MatrixXd a = res.internal_weights();
    const double estimate = power_iteration_radius(a);
    CHECK(estimate >= 0.94);
    CHECK(estimate <= 0.96);
    CHECK(spectral_radius(a) == doctest::Approx(0.95).epsilon(1e-10));
}

TEST_CASE("nonzero count matches connectivity")
{
    for (double c : {0.01, 0.02, 0.1, 0.5}) {
        auto cfg = small_config(150, c, 0.9);
        Reservoir<double> res(cfg, 2);
        const double expected = c * 150.0 * 150.0;
        CHECK(static_cast<double>(res.internal_weights().nonZeros()) >= 0.8 * expected);
        CHECK(static_cast<double>(res.internal_weights().nonZeros()) <= 1.2 * expected);
    }
}

TEST_CASE("construction is deterministic in the seed")
{
    auto cfg = small_config(80, 0.1, 0.8, 5);
    Reservoir<double> a(cfg, 3), b(cfg, 3);
    CHECK(MatrixXd(a.internal_weights()) == MatrixXd(b.internal_weights()));
    CHECK(a.input_weights() == b.input_weights());
    cfg.seed = 6;
    Reservoir<double> c(cfg, 3);
    CHECK(MatrixXd(a.internal_weights()) != MatrixXd(c.internal_weights()));
}

TEST_CASE("input weights lie within the input scaling")
{
    auto cfg = small_config(60, 0.1, 0.9);
    cfg.input_scaling = 0.25;
    Reservoir<double> res(cfg, 4);
    CHECK(res.input_weights().cwiseAbs().maxCoeff() <= 0.25);
}

TEST_CASE("empty random draw is a construction error")
{
    auto topo = ReservoirTopology<double>::draw(3, 1.0 / 9.0, 1, 1);
    topo.internal.setZero();
    topo.internal_radius = 0.0;
    auto cfg = small_config(3, 1.0 / 9.0, 0.9, 1);
    CHECK_THROWS_AS(Reservoir<double>(cfg, topo), ConstructionError);
}

TEST_CASE("leaky update examples")
{
    const MatrixXd a = MatrixXd::Random(4, 4);
    const MatrixXd w = MatrixXd::Random(4, 2);
    const VectorXd zero = VectorXd::Zero(4);
    const VectorXd u0 = VectorXd::Zero(2);
    CHECK(leaky_update(zero, u0, a, w, 1.0).isZero(0.0));

    const VectorXd v = VectorXd::Random(4);
    const VectorXd u = VectorXd::Random(2);
    CHECK(leaky_update(v, u, a, w, 0.0) == v);

    MatrixXd a2(2, 2);
    a2 << 0, 0.5, 0.5, 0;
    MatrixXd w2(2, 1);
    w2 << 1, 1;
    const VectorXd r = leaky_update(VectorXd::Zero(2).eval(), VectorXd::Ones(1).eval(), a2, w2, 0.5);
    CHECK(r(0) == doctest::Approx(0.380797).epsilon(1e-6));
    CHECK(r(1) == doctest::Approx(0.380797).epsilon(1e-6));
}

TEST_CASE("drive advances the held state")
{
    MatrixXd a2(2, 2);
    a2 << 0, 0.5, 0.5, 0;
    MatrixXd w2(2, 1);
    w2 << 1, 1;
    EsnConfig cfg;
    cfg.leak_rate = 0.5;
    Reservoir<double> res(cfg, sparse(a2), w2);
    const VectorXd one = VectorXd::Ones(1);
    const VectorXd first = res.drive(one);
    CHECK(first(0) == doctest::Approx(0.5 * std::tanh(1.0)));
    const VectorXd expected = leaky_update(first, one, a2, w2, 0.5);
    CHECK((res.drive(one) - expected).norm() < 1e-15);
    CHECK_THROWS_AS(res.drive(VectorXd::Ones(2)), InvalidArgument);
}

TEST_CASE("collect_states matches a step-by-step refold")
{
    auto cfg = small_config(30, 0.2, 0.9);
    cfg.leak_rate = 0.4;
    Reservoir<double> res(cfg, 2);
    const MatrixXd x = MatrixXd::Random(50, 2);
    const MatrixXd states = res.collect_states(x);
    REQUIRE(states.rows() == 30);
    REQUIRE(states.cols() == 49);

    const MatrixXd a = res.internal_weights();
    VectorXd r = VectorXd::Zero(30);
    for (Index i = 0; i < 49; ++i) {
        r = leaky_update(r, x.row(i).transpose().eval(), a, res.input_weights(), 0.4);
        CHECK((states.col(i) - r).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("collect_states on a two-sample series is one drive step")
{
    auto cfg = small_config(20, 0.2, 0.9);
    Reservoir<double> res(cfg, 3);
    const MatrixXd x = MatrixXd::Random(2, 3);
    const MatrixXd states = res.collect_states(x);
    res.reset();
    const VectorXd r = res.drive(x.row(0).transpose());
    CHECK(states.cols() == 1);
    CHECK((states.col(0) - r).norm() < 1e-15);
}

TEST_CASE("zero leak rate freezes the zero state")
{
    EsnConfig cfg;
    cfg.leak_rate = 0.0;
    Reservoir<double> res(cfg, sparse(MatrixXd::Random(5, 5)), MatrixXd::Random(5, 2));
    CHECK(res.collect_states(MatrixXd::Random(40, 2)).isZero(0.0));
}

TEST_CASE("states stay inside the unit box")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> big(-50.0, 50.0);
    for (int trial = 0; trial < 20; ++trial) {
        auto cfg = small_config(40, 0.1, 0.5 + 0.05 * trial, trial);
        cfg.leak_rate = 0.05 + 0.047 * trial;
        cfg.input_scaling = 0.1 + trial;
        Reservoir<double> res(cfg, 3);
        MatrixXd x(100, 3);
        for (Index i = 0; i < x.size(); ++i) x(i) = big(rng);
        CHECK(res.collect_states(x).cwiseAbs().maxCoeff() <= 1.0);
    }
}

TEST_CASE("collect_states rejects mismatched input")
{
    auto cfg = small_config(10, 0.2, 0.9);
    Reservoir<double> res(cfg, 2);
    CHECK_THROWS_AS(res.collect_states(MatrixXd::Random(10, 3)), InvalidArgument);
    CHECK_THROWS_AS(res.collect_states(MatrixXd::Random(1, 2)), InvalidArgument);
}

TEST_CASE("ridge readout examples")
{
    MatrixXd r(1, 1), y(1, 1);
    r << 1;
    y << 1;
    CHECK(train_readout(r, y, 1.0, 0).weights(0, 0) == doctest::Approx(0.5));

    const MatrixXd states = MatrixXd::Random(6, 30);
    CHECK(train_readout(states, MatrixXd::Zero(30, 2), 1e-3, 0).weights.isZero(0.0));
}

TEST_CASE("unregularized readout equals the normal-equations solution")
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const Index l = 3 + trial % 6;
        const MatrixXd r = MatrixXd::Random(l, 40 + trial);
        const MatrixXd y = MatrixXd::Random(40 + trial, 2);
        const MatrixXd w = train_readout(r, y, 0.0, 0).weights;
        const MatrixXd oracle = ridge_oracle(r, y, 0.0);
        CHECK((w - oracle).norm() <= 1e-8 * oracle.norm());
    }
}

TEST_CASE("readout ignores the washout columns")
{
    const MatrixXd r = MatrixXd::Random(4, 60);
    const MatrixXd y = MatrixXd::Random(60, 2);
    const MatrixXd w = train_readout(r, y, 1e-2, 15).weights;
    const MatrixXd oracle = ridge_oracle(r.rightCols(45), y.bottomRows(45), 1e-2);
    CHECK((w - oracle).norm() <= 1e-10 * oracle.norm());
}

TEST_CASE("readout minimizes the ridge objective")
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal;
    const MatrixXd r = MatrixXd::Random(8, 100);
    const MatrixXd y = MatrixXd::Random(100, 3);
    const double ridge = 0.1;
    const MatrixXd w = train_readout(r, y, ridge, 0).weights;
    const double best = ridge_objective(w, r, y, ridge);
    for (int k = 0; k < 100; ++k) {
        MatrixXd d(w.rows(), w.cols());
        for (Index i = 0; i < d.size(); ++i) d(i) = 1e-3 * normal(rng);
        CHECK(ridge_objective(w + d, r, y, ridge) >= best);
    }
}

TEST_CASE("larger ridge never increases the readout norm")
{
    const MatrixXd r = MatrixXd::Random(10, 80);
    const MatrixXd y = MatrixXd::Random(80, 2);
    double previous = std::numeric_limits<double>::infinity();
    for (double ridge : {1e-8, 1e-4, 1e-2, 1.0, 10.0, 1e3}) {
        const double norm = train_readout(r, y, ridge, 0).weights.norm();
        CHECK(norm <= previous * (1.0 + 1e-12));
        previous = norm;
    }
}

TEST_CASE("rank deficient unregularized readout is reported")
{
    MatrixXd r = MatrixXd::Random(4, 30);
    r.row(3) = r.row(1);
    CHECK_THROWS_AS(train_readout(r, MatrixXd::Random(30, 1), 0.0, 0), RankDeficiency);
    CHECK_NOTHROW(train_readout(r, MatrixXd::Random(30, 1), 1e-6, 0));
}

TEST_CASE("readout argument checks")
{
    const MatrixXd r = MatrixXd::Random(4, 30);
    CHECK_THROWS_AS(train_readout(r, MatrixXd::Random(29, 1), 1.0, 0), InvalidArgument);
    CHECK_THROWS_AS(train_readout(r, MatrixXd::Random(30, 1), 1.0, 30), InvalidArgument);
    CHECK_THROWS_AS(train_readout(r, MatrixXd::Random(30, 1), -1.0, 0), InvalidArgument);
}

TEST_CASE("reconstruct examples")
{
    const MatrixXd states = MatrixXd::Random(5, 20);
    Readout<double> zero{MatrixXd::Zero(2, 5)};
    CHECK(reconstruct(zero, states).values.isZero(0.0));
    Readout<double> identity{MatrixXd::Identity(5, 5)};
    CHECK(reconstruct(identity, states).values == states.transpose());
    CHECK_THROWS_AS(reconstruct(zero, MatrixXd::Random(4, 20)), InvalidArgument);
}

TEST_CASE("teacher-forced fit of a slow sinusoid")
{
    const Index n = 2000;
    MatrixXd x(n, 1);
    for (Index i = 0; i < n; ++i) x(i, 0) = std::sin(2.0 * M_PI * static_cast<double>(i) / 100.0);
    auto cfg = small_config(100, 0.1, 0.9);
    Reservoir<double> res(cfg, 1);
    const MatrixXd states = res.collect_states(x);
    const auto readout = train_readout(states, x.bottomRows(n - 1), 1e-10, 100);
    const auto fit = reconstruct(readout, states);
    const double err = (fit.values.bottomRows(n - 101) - x.bottomRows(n - 101)).cwiseAbs().maxCoeff();
    CHECK(err < 1e-3);
}

TEST_CASE("single precision instantiation")
{
    auto cfg = small_config(30, 0.2, 0.9);
    Reservoir<float> res(cfg, 2);
    const Eigen::MatrixXf x = Eigen::MatrixXf::Random(20, 2);
    const Eigen::MatrixXf states = res.collect_states(x);
    CHECK(states.cwiseAbs().maxCoeff() <= 1.0f);
    const auto readout = train_readout(states, x.bottomRows(19), 1e-3f, 2);
    CHECK(reconstruct(readout, states).values.rows() == 19);
}

TEST_CASE("configuration validation")
{
    EsnConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.leak_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.connectivity = 1.5;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.ridge = -1.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}
