#pragma once

// Unsupervised multivariate denoising by self-prediction.
//
// A reservoir is trained to predict the noisy series one step ahead; its
// prediction is the tentative signal and the remainder the tentative noise.
// The principal directions of that noise, weighted by how much predictable
// signal each direction carries, define a calibrated basis in which the
// reconstruction is repeated.
//
// All noise statistics (NoiseEstimate, CalibrationMatrix) are expressed in
// the standardized coordinates of the input: every non-constant channel is
// shifted to zero mean and scaled to unit variance before it reaches the
// reservoir. Constant channels are passed through untouched.

#include "mssrc/error.hpp"
#include "mssrc/reservoir.hpp"
#include "mssrc/time_series.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace mssrc {

struct DenoiseConfig
{
    EsnConfig esn;
    double train_fraction = 0.8;
    double weight_floor = 1e-3;
    int calibration_passes = 1;

    void validate() const
    {
        esn.validate();
        if (!(train_fraction > 0.0 && train_fraction < 1.0))
            throw InvalidArgument("train_fraction must lie in (0, 1)");
        if (!(weight_floor > 0.0 && weight_floor <= 1.0)) throw InvalidArgument("weight_floor must lie in (0, 1]");
        if (calibration_passes < 0) throw InvalidArgument("calibration_passes must be non-negative");
    }

    /// Last training index K for a series with rows 0..N.
    Eigen::Index training_end(Eigen::Index last_index) const
    {
        return static_cast<Eigen::Index>(std::floor(train_fraction * static_cast<double>(last_index)));
    }

    /// Smallest series length (N + 1) this configuration can process.
    Eigen::Index minimum_length() const
    {
        Eigen::Index last = 2 * (esn.washout + 1) - 1;
        while (training_end(last) < esn.washout + 1) ++last;
        return last + 1;
    }
};

/// Per-channel affine standardization.
template <typename Scalar = double>
struct ChannelScaler
{
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

    RowVector mean;
    RowVector scale;
    std::vector<bool> constant;

    static ChannelScaler fit(const Matrix& values)
    {
        ChannelScaler s;
        const auto p = values.cols();
        s.mean = values.colwise().mean();
        s.scale = RowVector::Ones(p);
        s.constant.assign(static_cast<std::size_t>(p), false);
        for (Eigen::Index c = 0; c < p; ++c) {
            const Scalar var = (values.col(c).array() - s.mean(c)).square().mean();
            const Scalar magnitude = std::max(Scalar(1), std::abs(s.mean(c)));
            if (!(var > Scalar(1e-24) * magnitude * magnitude)) {
                s.constant[static_cast<std::size_t>(c)] = true;
            } else {
                s.scale(c) = std::sqrt(var);
            }
        }
        return s;
    }

    bool all_constant() const { return std::all_of(constant.begin(), constant.end(), [](bool b) { return b; }); }

    /// Constant channels map to zero.
    Matrix forward(const Matrix& values) const
    {
        Matrix z = (values.rowwise() - mean).array().rowwise() / scale.array();
        for (std::size_t c = 0; c < constant.size(); ++c)
            if (constant[c]) z.col(static_cast<Eigen::Index>(c)).setZero();
        return z;
    }

    Matrix inverse(const Matrix& z) const
    {
        return (z.array().rowwise() * scale.array()).matrix().rowwise() + mean;
    }
};

struct NoiseEstimate
{
    TimeSeriesMatrix residuals;
    Eigen::MatrixXd covariance;
    Eigen::MatrixXd basis;             // columns are principal directions
    Eigen::VectorXd noise_variances;   // descending
    Eigen::RowVectorXd residual_mean;  // subtracted before forming the covariance
    bool rank_deficient = false;       // fewer than p + 1 residual rows
};

struct CalibrationMatrix
{
    Eigen::VectorXd weights;
    Eigen::VectorXd signal_variances;
    /// Scalar applied on top of the weights so the calibrated input keeps the
    /// power of the standardized input; 1 when every weight is 1. Set by the
    /// calibrated pass.
    double input_gain = 1.0;
};

struct TentativeResult
{
    TimeSeriesMatrix q_hat;   // rows cover indices first_index..N
    TimeSeriesMatrix xi_hat;  // x - q_hat on the same rows
    double training_error = 0.0;
    Eigen::Index first_index = 0;
};

struct DenoiseResult
{
    TimeSeriesMatrix q_hat;
    TimeSeriesMatrix xi_hat;
    TimeSeriesMatrix tentative_q_hat;
    NoiseEstimate noise_estimate;                  // from the residual that fed the last calibration
    std::optional<CalibrationMatrix> calibration;  // empty when no calibration pass ran
    double training_error = 0.0;
    double tentative_training_error = 0.0;
    Eigen::Index first_index = 0;
    int passes_applied = 0;
};

namespace detail {

/// Outcome of training a reservoir on a (standardized) series.
struct Reproduction
{
    Eigen::MatrixXd predicted;  // rows for indices washout+1..N
    double validation_mse = 0.0;
};

inline void check_length(const TimeSeriesMatrix& x, const DenoiseConfig& cfg)
{
    const auto needed = cfg.minimum_length();
    if (x.length() < needed)
        throw InvalidArgument("series of length " + std::to_string(x.length()) + " is too short for washout "
                              + std::to_string(cfg.esn.washout) + " and train_fraction "
                              + std::to_string(cfg.train_fraction) + "; at least " + std::to_string(needed)
                              + " samples required");
}

inline ReservoirTopology<double> topology_for(const EsnConfig& esn, Eigen::Index p)
{
    return ReservoirTopology<double>::draw(esn.reservoir_size, esn.connectivity, p, esn.seed);
}

/// Trains on rows 0..K, predicts every row washout+1..N.
inline Reproduction reproduce(const Eigen::MatrixXd& values, const DenoiseConfig& cfg,
                              const ReservoirTopology<double>& topology)
{
    const Eigen::Index last = values.rows() - 1;
    const Eigen::Index k = cfg.training_end(last);
    const Eigen::Index washout = cfg.esn.washout;

    Reservoir<double> reservoir(cfg.esn, topology);
    const Eigen::MatrixXd states = reservoir.collect_states(values);
    const auto readout = train_readout(states.leftCols(k), values.middleRows(1, k), cfg.esn.ridge, washout);

    Reproduction out;
    out.predicted = (readout.weights * states.rightCols(last - washout)).transpose();
    if (k < last) {
        const auto validation = out.predicted.bottomRows(last - k);
        out.validation_mse = (values.bottomRows(last - k) - validation).squaredNorm()
                             / static_cast<double>((last - k) * values.cols());
    }
    return out;
}

inline Eigen::MatrixXd reproduce_standardized(const Eigen::MatrixXd& z, const ChannelScaler<double>& scaler,
                                              const DenoiseConfig& cfg, const ReservoirTopology<double>& topology)
{
    Eigen::MatrixXd z_hat;
    if (scaler.all_constant()) {
        z_hat = Eigen::MatrixXd::Zero(z.rows() - 1 - cfg.esn.washout, z.cols());
    } else {
        z_hat = reproduce(z, cfg, topology).predicted;
    }
    for (std::size_t c = 0; c < scaler.constant.size(); ++c)
        if (scaler.constant[c]) z_hat.col(static_cast<Eigen::Index>(c)).setZero();
    return z_hat;
}

/// Maps a standardized reconstruction back to the input's units and splits x.
inline void finish(const TimeSeriesMatrix& x, const ChannelScaler<double>& scaler, const Eigen::MatrixXd& z_hat,
                   const DenoiseConfig& cfg, TimeSeriesMatrix& q_hat, TimeSeriesMatrix& xi_hat,
                   double& training_error)
{
    const Eigen::Index first = cfg.esn.washout + 1;
    const Eigen::Index rows = z_hat.rows();
    Eigen::MatrixXd q = scaler.inverse(z_hat);
    const auto observed = x.values.bottomRows(rows);
    for (std::size_t c = 0; c < scaler.constant.size(); ++c)
        if (scaler.constant[c]) q.col(static_cast<Eigen::Index>(c)) = observed.col(static_cast<Eigen::Index>(c));
    xi_hat = TimeSeriesMatrix(observed - q, x.dt);
    q_hat = TimeSeriesMatrix(std::move(q), x.dt);

    const Eigen::Index k = cfg.training_end(x.last());
    const Eigen::Index train_rows = k - first + 1;
    training_error = xi_hat.values.topRows(train_rows).rowwise().squaredNorm().mean();
}

}  // namespace detail

/// Residual PCA: covariance of the mean-centred residuals (divisor M) and its
/// eigendecomposition with eigenvalues sorted descending.
inline NoiseEstimate estimate_noise_pca(const TimeSeriesMatrix& residuals)
{
    const Eigen::Index m = residuals.length();
    const Eigen::Index p = residuals.channels();
    if (m < 1 || p < 1) throw InvalidArgument("noise estimation needs a non-empty residual series");
    if (!residuals.values.allFinite()) throw DataError("residuals contain NaN or Inf");

    NoiseEstimate est;
    est.residuals = residuals;
    est.rank_deficient = m < p + 1;
    est.residual_mean = residuals.values.colwise().mean();
    const Eigen::MatrixXd centred = residuals.values.rowwise() - est.residual_mean;
    est.covariance = (centred.transpose() * centred) / static_cast<double>(m);
    est.covariance = 0.5 * (est.covariance + est.covariance.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(est.covariance);
    if (solver.info() != Eigen::Success) throw Error("eigendecomposition of the noise covariance failed");
    est.noise_variances = solver.eigenvalues().reverse().cwiseMax(0.0);
    est.basis = solver.eigenvectors().rowwise().reverse();
    // sign convention: the largest-magnitude entry of each direction is positive
    for (Eigen::Index k = 0; k < p; ++k) {
        Eigen::Index arg = 0;
        est.basis.col(k).cwiseAbs().maxCoeff(&arg);
        if (est.basis(arg, k) < 0.0) est.basis.col(k) *= -1.0;
    }
    return est;
}

/// Variance (divisor M) of the reconstruction projected on each basis column.
inline Eigen::VectorXd directional_signal_variance(const TimeSeriesMatrix& q_hat, const Eigen::MatrixXd& basis)
{
    if (basis.rows() != q_hat.channels() || basis.cols() != q_hat.channels())
        throw InvalidArgument("basis must be p x p for a p-channel signal");
    const Eigen::MatrixXd projected = q_hat.values * basis;
    const Eigen::MatrixXd centred = projected.rowwise() - projected.colwise().mean();
    return centred.colwise().squaredNorm().transpose() / static_cast<double>(q_hat.length());
}

/// w_k = 1 / (1 + sigma_k / sigma^S_k), clamped to [floor, 1].
inline CalibrationMatrix calibration_weights(const Eigen::VectorXd& noise_variances,
                                             const Eigen::VectorXd& signal_variances, double floor)
{
    if (noise_variances.size() != signal_variances.size())
        throw InvalidArgument("noise and signal variance vectors differ in length");
    if (!(floor > 0.0 && floor <= 1.0)) throw InvalidArgument("weight floor must lie in (0, 1]");
    CalibrationMatrix cal;
    cal.signal_variances = signal_variances;
    cal.weights.resize(noise_variances.size());
    for (Eigen::Index k = 0; k < noise_variances.size(); ++k) {
        const double noise = noise_variances(k);
        const double signal = signal_variances(k);
        if (!(noise >= 0.0) || !(signal >= 0.0))
            throw InvalidArgument("variances must be non-negative (direction " + std::to_string(k) + ")");
        double w;
        if (signal == 0.0)
            w = noise == 0.0 ? 1.0 : floor;
        else
            w = 1.0 / (1.0 + noise / signal);
        cal.weights(k) = std::clamp(w, floor, 1.0);
    }
    return cal;
}

/// y = Lambda V^T z, applied row-wise (rows are time steps).
inline Eigen::MatrixXd to_calibrated_basis(const Eigen::MatrixXd& z, const Eigen::MatrixXd& basis,
                                           const Eigen::VectorXd& weights)
{
    return (z * basis) * weights.asDiagonal();
}

/// z = V Lambda^-1 y, applied row-wise.
inline Eigen::MatrixXd from_calibrated_basis(const Eigen::MatrixXd& y, const Eigen::MatrixXd& basis,
                                             const Eigen::VectorXd& weights)
{
    return (y * weights.cwiseInverse().asDiagonal()) * basis.transpose();
}

namespace detail {

/// Reconstruction of standardized z through y = g Lambda V^T z and back.
/// The gain g restores the power of z V lost to the weights; it is stored in cal.
inline Eigen::MatrixXd calibrated_pass(const Eigen::MatrixXd& z, const Eigen::MatrixXd& basis,
                                       CalibrationMatrix& cal, const DenoiseConfig& cfg,
                                       const ReservoirTopology<double>& topology)
{
    const Eigen::MatrixXd rotated = z * basis;
    Eigen::MatrixXd y = rotated * cal.weights.asDiagonal();
    const double weighted_power = y.squaredNorm();
    cal.input_gain = weighted_power > 0.0 ? std::sqrt(rotated.squaredNorm() / weighted_power) : 1.0;
    y *= cal.input_gain;
    const Eigen::MatrixXd y_hat = reproduce(y, cfg, topology).predicted;
    return from_calibrated_basis(y_hat, basis, cal.input_gain * cal.weights);
}

}  // namespace detail

inline TentativeResult tentative_denoise(const TimeSeriesMatrix& x, const DenoiseConfig& cfg,
                                         const ReservoirTopology<double>& topology)
{
    cfg.validate();
    x.validate("input series");
    detail::check_length(x, cfg);

    const auto scaler = ChannelScaler<double>::fit(x.values);
    const Eigen::MatrixXd z = scaler.forward(x.values);
    const Eigen::MatrixXd z_hat = detail::reproduce_standardized(z, scaler, cfg, topology);

    TentativeResult out;
    out.first_index = cfg.esn.washout + 1;
    detail::finish(x, scaler, z_hat, cfg, out.q_hat, out.xi_hat, out.training_error);
    return out;
}

inline TentativeResult tentative_denoise(const TimeSeriesMatrix& x, const DenoiseConfig& cfg)
{
    cfg.validate();
    x.validate("input series");
    return tentative_denoise(x, cfg, detail::topology_for(cfg.esn, x.channels()));
}

/// Second reconstruction in the calibrated basis. The noise estimate and the
/// calibration must be expressed in the standardized coordinates of x.
inline DenoiseResult calibrated_denoise(const TimeSeriesMatrix& x, const NoiseEstimate& est,
                                        const CalibrationMatrix& cal, const DenoiseConfig& cfg,
                                        const ReservoirTopology<double>& topology)
{
    cfg.validate();
    x.validate("input series");
    detail::check_length(x, cfg);
    const Eigen::Index p = x.channels();
    if (est.basis.rows() != p || est.basis.cols() != p || cal.weights.size() != p)
        throw InvalidArgument("calibration dimensions do not match the series");
    if ((cal.weights.array() < cfg.weight_floor).any())
        throw Error("internal error: calibration weight below the configured floor");

    const auto scaler = ChannelScaler<double>::fit(x.values);
    const Eigen::MatrixXd z = scaler.forward(x.values);
    CalibrationMatrix applied = cal;
    Eigen::MatrixXd z_hat = scaler.all_constant() ? Eigen::MatrixXd::Zero(z.rows() - 1 - cfg.esn.washout, p)
                                                  : detail::calibrated_pass(z, est.basis, applied, cfg, topology);
    for (std::size_t c = 0; c < scaler.constant.size(); ++c)
        if (scaler.constant[c]) z_hat.col(static_cast<Eigen::Index>(c)).setZero();

    DenoiseResult out;
    out.first_index = cfg.esn.washout + 1;
    detail::finish(x, scaler, z_hat, cfg, out.q_hat, out.xi_hat, out.training_error);
    out.noise_estimate = est;
    out.calibration = std::move(applied);
    out.passes_applied = 1;
    return out;
}

inline DenoiseResult calibrated_denoise(const TimeSeriesMatrix& x, const NoiseEstimate& est,
                                        const CalibrationMatrix& cal, const DenoiseConfig& cfg)
{
    cfg.validate();
    x.validate("input series");
    return calibrated_denoise(x, est, cal, cfg, detail::topology_for(cfg.esn, x.channels()));
}

/// Full pipeline: tentative split, then calibration_passes rounds of
/// residual PCA, weighting and calibrated re-reconstruction.
inline DenoiseResult mssrc(const TimeSeriesMatrix& x, const DenoiseConfig& cfg,
                           const ReservoirTopology<double>& topology)
{
    cfg.validate();
    x.validate("input series");
    detail::check_length(x, cfg);

    const auto scaler = ChannelScaler<double>::fit(x.values);
    const Eigen::MatrixXd z = scaler.forward(x.values);
    const Eigen::Index first = cfg.esn.washout + 1;
    const Eigen::Index rows = x.length() - first;
    const Eigen::MatrixXd z_observed = z.bottomRows(rows);

    Eigen::MatrixXd z_hat = detail::reproduce_standardized(z, scaler, cfg, topology);

    DenoiseResult out;
    out.first_index = first;
    detail::finish(x, scaler, z_hat, cfg, out.q_hat, out.xi_hat, out.training_error);
    out.tentative_q_hat = out.q_hat;
    out.tentative_training_error = out.training_error;

    out.noise_estimate = estimate_noise_pca(TimeSeriesMatrix(z_observed - z_hat, x.dt));
    for (int pass = 0; pass < cfg.calibration_passes; ++pass) {
        if (pass > 0) out.noise_estimate = estimate_noise_pca(TimeSeriesMatrix(z_observed - z_hat, x.dt));
        const Eigen::VectorXd signal_var =
          directional_signal_variance(TimeSeriesMatrix(z_hat, x.dt), out.noise_estimate.basis);
        auto cal = calibration_weights(out.noise_estimate.noise_variances, signal_var, cfg.weight_floor);

        if (!scaler.all_constant()) {
            z_hat = detail::calibrated_pass(z, out.noise_estimate.basis, cal, cfg, topology);
            for (std::size_t c = 0; c < scaler.constant.size(); ++c)
                if (scaler.constant[c]) z_hat.col(static_cast<Eigen::Index>(c)).setZero();
        }
        detail::finish(x, scaler, z_hat, cfg, out.q_hat, out.xi_hat, out.training_error);
        out.calibration = std::move(cal);
        out.passes_applied = pass + 1;
    }
    return out;
}

inline DenoiseResult mssrc(const TimeSeriesMatrix& x, const DenoiseConfig& cfg)
{
    cfg.validate();
    x.validate("input series");
    return mssrc(x, cfg, detail::topology_for(cfg.esn, x.channels()));
}

}  // namespace mssrc
