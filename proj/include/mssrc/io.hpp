#pragma once

// CSV time series files: header "t,ch1,...,chp", one row per sample, the
// integer time index first, values printed with 17 significant digits.

#include "mssrc/time_series.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace mssrc {

struct IndexedSeries
{
    TimeSeriesMatrix series;
    Eigen::Index first_index = 0;
};

std::string format_double(double value);

void write_csv(std::ostream& out, const TimeSeriesMatrix& series, Eigen::Index first_index = 0);
std::string to_csv(const TimeSeriesMatrix& series, Eigen::Index first_index = 0);

/// Throws DataError with the offending line number on malformed input.
IndexedSeries read_csv(std::istream& in, const std::string& source = "<stream>");
IndexedSeries read_csv(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace mssrc
