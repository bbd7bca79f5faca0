#pragma once

// Leaky-integrator echo state network: random reservoir construction,
// teacher-forced state collection and the closed-form ridge readout.

#include "mssrc/error.hpp"
#include "mssrc/time_series.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace mssrc {

struct EsnConfig
{
    Eigen::Index reservoir_size = 500;
    double leak_rate = 0.3;
    double spectral_radius = 0.9;
    double input_scaling = 0.5;
    double connectivity = 0.02;
    double ridge = 1e-6;
    Eigen::Index washout = 100;
    std::uint64_t seed = 42;

    void validate() const
    {
        if (reservoir_size < 1) throw InvalidArgument("reservoir_size must be positive");
        if (!(leak_rate > 0.0 && leak_rate <= 1.0)) throw InvalidArgument("leak_rate must lie in (0, 1]");
        if (!(spectral_radius > 0.0)) throw InvalidArgument("spectral_radius must be positive");
        if (!(input_scaling > 0.0)) throw InvalidArgument("input_scaling must be positive");
        if (!(connectivity > 0.0 && connectivity <= 1.0))
            throw InvalidArgument("connectivity must lie in (0, 1]");
        if (!(ridge >= 0.0)) throw InvalidArgument("ridge must be non-negative");
        if (washout < 0) throw InvalidArgument("washout must be non-negative");
    }
};

/// Largest absolute eigenvalue of a square matrix, from the full spectrum.
template <typename Derived>
typename Derived::RealScalar spectral_radius(const Eigen::MatrixBase<Derived>& m)
{
    using Real = typename Derived::RealScalar;
    if (m.rows() == 0) return Real(0);
    Eigen::EigenSolver<Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>> solver(
      m.template cast<Real>(), /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) throw ConstructionError("eigenvalue iteration did not converge");
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

/// Unscaled random weights shared by every reservoir with the same
/// (size, connectivity, input dimension, seed). Rescaling to a particular
/// spectral radius or input scaling is cheap; drawing and measuring is not.
template <typename Scalar = double>
struct ReservoirTopology
{
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using SparseMatrix = Eigen::SparseMatrix<Scalar>;

    SparseMatrix internal;  // entries uniform in [-1, 1]
    Matrix input;           // entries uniform in [-1, 1]
    Scalar internal_radius = Scalar(0);
    double connectivity = 0.0;
    std::uint64_t seed = 0;

    Eigen::Index size() const { return internal.rows(); }
    Eigen::Index input_dim() const { return input.cols(); }

    bool matches(const EsnConfig& cfg, Eigen::Index p) const
    {
        return size() == cfg.reservoir_size && input_dim() == p && connectivity == cfg.connectivity
               && seed == cfg.seed;
    }

    static ReservoirTopology draw(Eigen::Index size, double connectivity, Eigen::Index p, std::uint64_t seed)
    {
        if (size < 1) throw InvalidArgument("reservoir size must be positive");
        if (p < 1) throw InvalidArgument("input dimension must be positive");
        if (!(connectivity > 0.0 && connectivity <= 1.0))
            throw InvalidArgument("connectivity must lie in (0, 1]");

        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> uniform(-1.0, 1.0);

        // exact nonzero count, positions drawn without replacement
        const auto total = static_cast<std::size_t>(size) * static_cast<std::size_t>(size);
        const auto nnz = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::llround(connectivity * static_cast<double>(total))));
        std::vector<std::size_t> cells(total);
        std::iota(cells.begin(), cells.end(), std::size_t{0});
        std::vector<std::size_t> picked;
        picked.reserve(nnz);
        std::sample(cells.begin(), cells.end(), std::back_inserter(picked), nnz, rng);

        std::vector<Eigen::Triplet<Scalar>> triplets;
        triplets.reserve(nnz);
        for (auto cell : picked)
            triplets.emplace_back(static_cast<Eigen::Index>(cell / size), static_cast<Eigen::Index>(cell % size),
                                  static_cast<Scalar>(uniform(rng)));

        ReservoirTopology t;
        t.internal.resize(size, size);
        t.internal.setFromTriplets(triplets.begin(), triplets.end());
        t.internal.makeCompressed();

        t.input.resize(size, p);
        for (Eigen::Index j = 0; j < p; ++j)
            for (Eigen::Index i = 0; i < size; ++i) t.input(i, j) = static_cast<Scalar>(uniform(rng));

        t.internal_radius = static_cast<Scalar>(spectral_radius(Eigen::MatrixXd(t.internal.template cast<double>())));
        t.connectivity = connectivity;
        t.seed = seed;
        return t;
    }
};

/// One leaky-integrator step: (1 - alpha) r + alpha tanh(A r + W_in u).
template <typename Scalar, typename InternalMatrix, typename InputMatrix, typename StateVec, typename InputVec>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> leaky_update(const StateVec& r, const InputVec& u, const InternalMatrix& a,
                                                      const InputMatrix& w_in, Scalar alpha)
{
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> pre = a * r + w_in * u;
    return (Scalar(1) - alpha) * r + alpha * pre.array().tanh().matrix();
}

template <typename Scalar = double>
class Reservoir
{
  public:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using SparseMatrix = Eigen::SparseMatrix<Scalar>;

    /// Draws a fresh random reservoir for a p-dimensional input.
    Reservoir(const EsnConfig& config, Eigen::Index p)
      : Reservoir(config, ReservoirTopology<Scalar>::draw(config.reservoir_size, config.connectivity, p, config.seed))
    {}

    /// Scales a pre-drawn topology to the config's spectral radius and input scaling.
    Reservoir(const EsnConfig& config, const ReservoirTopology<Scalar>& topology) : config_(config)
    {
        config.validate();
        if (!topology.matches(config, topology.input_dim()))
            throw InvalidArgument("reservoir topology does not match the configuration");
        if (!(topology.internal_radius > Scalar(0)))
            throw ConstructionError("random internal weights have zero spectral radius (reservoir_size="
                                    + std::to_string(config.reservoir_size)
                                    + ", connectivity=" + std::to_string(config.connectivity)
                                    + "); increase either");
        internal_ = topology.internal * static_cast<Scalar>(config.spectral_radius / topology.internal_radius);
        input_ = topology.input * static_cast<Scalar>(config.input_scaling);
        state_ = Vector::Zero(config.reservoir_size);
    }

    /// Explicit weights, for hand-built networks.
    Reservoir(const EsnConfig& config, SparseMatrix internal, Matrix input)
      : config_(config), internal_(std::move(internal)), input_(std::move(input))
    {
        if (internal_.rows() != internal_.cols()) throw InvalidArgument("internal weights must be square");
        if (input_.rows() != internal_.rows()) throw InvalidArgument("input weights must have one row per node");
        config_.reservoir_size = internal_.rows();
        state_ = Vector::Zero(internal_.rows());
    }

    const EsnConfig& config() const { return config_; }
    Eigen::Index size() const { return internal_.rows(); }
    Eigen::Index input_dim() const { return input_.cols(); }
    const SparseMatrix& internal_weights() const { return internal_; }
    const Matrix& input_weights() const { return input_; }
    const Vector& state() const { return state_; }

    void set_state(const Vector& r)
    {
        if (r.size() != size()) throw InvalidArgument("state has wrong length");
        state_ = r;
    }
    void reset() { state_.setZero(); }

    /// Advances the state by one step with the given input and returns it.
    template <typename InputVec>
    const Vector& drive(const InputVec& input)
    {
        if (input.size() != input_dim())
            throw InvalidArgument("input has length " + std::to_string(input.size()) + ", reservoir expects "
                                  + std::to_string(input_dim()));
        state_ = leaky_update(state_, input, internal_, input_, static_cast<Scalar>(config_.leak_rate));
        return state_;
    }

    /// Teacher-forced state matrix (L x N) for a series with rows 0..N.
    /// Column i-1 holds the state after driving with x_{i-1}; it predicts x_i.
    Matrix collect_states(const TimeSeries<Scalar>& series)
    {
        return collect_states(series.values);
    }

    template <typename Derived>
    Matrix collect_states(const Eigen::MatrixBase<Derived>& values)
    {
        if (values.rows() < 2) throw InvalidArgument("state collection needs at least two samples");
        if (values.cols() != input_dim())
            throw InvalidArgument("series has " + std::to_string(values.cols()) + " channels, reservoir expects "
                                  + std::to_string(input_dim()));
        reset();
        const Eigen::Index steps = values.rows() - 1;
        const auto alpha = static_cast<Scalar>(config_.leak_rate);
        Matrix states(size(), steps);
        Vector pre(size());
        Vector input(input_dim());
        for (Eigen::Index i = 0; i < steps; ++i) {
            input = values.row(i).transpose();
            pre.noalias() = internal_ * state_;
            pre.noalias() += input_ * input;
            state_ = (Scalar(1) - alpha) * state_ + alpha * pre.array().tanh().matrix();
            states.col(i) = state_;
        }
        return states;
    }

  private:
    EsnConfig config_;
    SparseMatrix internal_;
    Matrix input_;
    Vector state_;
};

/// Trained linear map from reservoir state to signal (p x L).
template <typename Scalar = double>
struct Readout
{
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> weights;

    Eigen::Index output_dim() const { return weights.rows(); }
};

/// Ridge readout on state columns [washout, K) against target rows [washout, K).
/// Solves (R R^T + ridge I) W^T = R Y with a Cholesky factorization, falling
/// back to a pivoted QR when the system is not numerically positive definite.
template <typename StatesDerived, typename TargetsDerived>
Readout<typename StatesDerived::Scalar> train_readout(const Eigen::MatrixBase<StatesDerived>& states,
                                                      const Eigen::MatrixBase<TargetsDerived>& targets,
                                                      typename StatesDerived::Scalar ridge, Eigen::Index washout)
{
    using Scalar = typename StatesDerived::Scalar;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    if (states.cols() != targets.rows())
        throw InvalidArgument("state columns (" + std::to_string(states.cols()) + ") and target rows ("
                              + std::to_string(targets.rows()) + ") differ");
    if (washout < 0 || washout >= states.cols())
        throw InvalidArgument("washout " + std::to_string(washout) + " leaves no training samples out of "
                              + std::to_string(states.cols()));
    if (ridge < Scalar(0)) throw InvalidArgument("ridge must be non-negative");

    const Eigen::Index n = states.cols() - washout;
    const auto used = states.rightCols(n);
    const Eigen::Index size = states.rows();

    Matrix gram = Matrix::Zero(size, size);
    gram.template selfadjointView<Eigen::Lower>().rankUpdate(used);
    gram = gram.template selfadjointView<Eigen::Lower>();
    gram.diagonal().array() += ridge;
    const Matrix rhs = used * targets.bottomRows(n);

    Readout<Scalar> readout;
    Eigen::LLT<Matrix> llt(gram);
    const bool ill_posed = ridge == Scalar(0) && llt.info() == Eigen::Success
                           && llt.rcond() < std::numeric_limits<Scalar>::epsilon() * static_cast<Scalar>(size);
    if (llt.info() == Eigen::Success && !ill_posed) {
        readout.weights = llt.solve(rhs).transpose();
    } else {
        Eigen::ColPivHouseholderQR<Matrix> qr(gram);
        if (qr.rank() < size)
            throw RankDeficiency("readout system is rank deficient (rank " + std::to_string(qr.rank()) + " of "
                                 + std::to_string(size) + "); use a ridge parameter > 0");
        readout.weights = qr.solve(rhs).transpose();
    }
    if (!readout.weights.allFinite()) throw RankDeficiency("readout solve produced non-finite weights; use ridge > 0");
    return readout;
}

/// Applies the readout to every state column; row i of the result is W_out r(i).
template <typename Scalar, typename StatesDerived>
TimeSeries<Scalar> reconstruct(const Readout<Scalar>& readout, const Eigen::MatrixBase<StatesDerived>& states)
{
    if (readout.weights.cols() != states.rows())
        throw InvalidArgument("readout expects " + std::to_string(readout.weights.cols()) + " nodes, states have "
                              + std::to_string(states.rows()));
    return TimeSeries<Scalar>((readout.weights * states).transpose());
}

}  // namespace mssrc
