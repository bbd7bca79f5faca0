#pragma once

#include "mssrc/error.hpp"

#include <Eigen/Dense>

#include <string>

namespace mssrc {

/// p-channel real time series. Rows are time indices 0..N, columns channels.
template <typename Scalar = double>
struct TimeSeries
{
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    Matrix values;
    Scalar dt = Scalar(1);

    TimeSeries() = default;
    explicit TimeSeries(Matrix v, Scalar sample_interval = Scalar(1))
      : values(std::move(v)), dt(sample_interval)
    {}

    Eigen::Index length() const { return values.rows(); }
    Eigen::Index channels() const { return values.cols(); }
    /// Index of the last sample (N).
    Eigen::Index last() const { return values.rows() - 1; }

    /// Throws DataError unless the series has N >= 1, p >= 1, finite entries and dt > 0.
    void validate(const std::string& what = "time series") const
    {
        if (values.rows() < 2)
            throw DataError(what + ": needs at least 2 samples, got " + std::to_string(values.rows()));
        if (values.cols() < 1) throw DataError(what + ": needs at least one channel");
        if (!values.allFinite()) throw DataError(what + ": contains NaN or Inf");
        if (!(dt > Scalar(0))) throw DataError(what + ": sample interval must be positive");
    }
};

using TimeSeriesMatrix = TimeSeries<double>;

}  // namespace mssrc
