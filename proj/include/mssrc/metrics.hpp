#pragma once

#include "mssrc/error.hpp"
#include "mssrc/time_series.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace mssrc {

/// Reported for channels whose estimate is exact.
inline constexpr double snr_cap_db = 200.0;

struct SnrReport
{
    Eigen::VectorXd per_channel_db;  // NaN where the clean channel has zero power
    std::vector<bool> undefined;     // zero-power channels, excluded from the average
    double average_db = std::numeric_limits<double>::quiet_NaN();
    Eigen::Index n_samples_used = 0;
    Eigen::Index first_index = 0;
    Eigen::Index last_index = 0;

    bool average_defined() const { return std::isfinite(average_db); }
};

/// Per channel 10 log10(sum q^2 / sum (q - q_hat)^2) over time indices
/// [first, last] of both series. Each series' first row sits at its own
/// offset, so the estimate may cover a shorter range than the clean signal.
template <typename Scalar>
SnrReport snr_db(const TimeSeries<Scalar>& clean, Eigen::Index clean_offset, const TimeSeries<Scalar>& estimate,
                 Eigen::Index estimate_offset, Eigen::Index first, Eigen::Index last)
{
    if (clean.channels() != estimate.channels())
        throw InvalidArgument("clean and estimate channel counts differ");
    first = std::max({first, clean_offset, estimate_offset});
    last = std::min({last, clean_offset + clean.length() - 1, estimate_offset + estimate.length() - 1});
    if (last < first) throw InvalidArgument("SNR comparison range is empty");

    const Eigen::Index n = last - first + 1;
    const auto q = clean.values.middleRows(first - clean_offset, n);
    const auto q_hat = estimate.values.middleRows(first - estimate_offset, n);

    SnrReport report;
    report.first_index = first;
    report.last_index = last;
    report.n_samples_used = n;
    report.per_channel_db.resize(clean.channels());
    report.undefined.assign(static_cast<std::size_t>(clean.channels()), false);
    double sum = 0.0;
    int used = 0;
    for (Eigen::Index c = 0; c < clean.channels(); ++c) {
        const double signal = static_cast<double>(q.col(c).squaredNorm());
        const double error = static_cast<double>((q.col(c) - q_hat.col(c)).squaredNorm());
        double db;
        if (signal == 0.0) {
            report.undefined[static_cast<std::size_t>(c)] = true;
            report.per_channel_db(c) = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        db = error == 0.0 ? snr_cap_db : std::min(snr_cap_db, 10.0 * std::log10(signal / error));
        report.per_channel_db(c) = db;
        sum += db;
        ++used;
    }
    if (used > 0) report.average_db = sum / used;
    return report;
}

/// Both series start at index 0; compares indices [first, last].
template <typename Scalar>
SnrReport snr_db(const TimeSeries<Scalar>& clean, const TimeSeries<Scalar>& estimate, Eigen::Index first,
                 Eigen::Index last)
{
    return snr_db(clean, 0, estimate, 0, first, last);
}

/// Full overlap of two series that both start at index 0.
template <typename Scalar>
SnrReport snr_db(const TimeSeries<Scalar>& clean, const TimeSeries<Scalar>& estimate)
{
    return snr_db(clean, 0, estimate, 0, 0, std::numeric_limits<Eigen::Index>::max());
}

}  // namespace mssrc
