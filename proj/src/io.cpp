#include "mssrc/io.hpp"

#include "mssrc/error.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

namespace mssrc {

std::string format_double(double value)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void write_csv(std::ostream& out, const TimeSeriesMatrix& series, Eigen::Index first_index)
{
    out << 't';
    for (Eigen::Index c = 0; c < series.channels(); ++c) out << ",ch" << (c + 1);
    out << '\n';
    for (Eigen::Index i = 0; i < series.length(); ++i) {
        out << (first_index + i);
        for (Eigen::Index c = 0; c < series.channels(); ++c) out << ',' << format_double(series.values(i, c));
        out << '\n';
    }
}

std::string to_csv(const TimeSeriesMatrix& series, Eigen::Index first_index)
{
    std::ostringstream out;
    write_csv(out, series, first_index);
    return out.str();
}

namespace {

std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

}  // namespace

IndexedSeries read_csv(std::istream& in, const std::string& source)
{
    auto fail = [&](std::size_t line, const std::string& what) {
        throw DataError(source + ":" + std::to_string(line) + ": " + what);
    };

    std::string line;
    if (!std::getline(in, line)) fail(1, "empty file, expected header 't,ch1,...'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split(line);
    if (header.size() < 2 || header[0] != "t") fail(1, "header must be 't,ch1,...,chp'");
    for (std::size_t c = 1; c < header.size(); ++c)
        if (header[c] != "ch" + std::to_string(c))
            fail(1, "column " + std::to_string(c + 1) + " must be named ch" + std::to_string(c));
    const std::size_t p = header.size() - 1;

    std::vector<double> values;
    long first = 0;
    long rows = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split(line);
        if (fields.size() != p + 1)
            fail(line_no, "expected " + std::to_string(p + 1) + " fields, found " + std::to_string(fields.size()));
        long t = 0;
        auto [tp, tec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), t);
        if (tec != std::errc{} || tp != fields[0].data() + fields[0].size())
            fail(line_no, "time index '" + std::string(fields[0]) + "' is not an integer");
        if (rows == 0)
            first = t;
        else if (t != first + rows)
            fail(line_no, "time index " + std::to_string(t) + " is not consecutive");
        for (std::size_t c = 1; c <= p; ++c) {
            double v = 0.0;
            auto [vp, vec] = std::from_chars(fields[c].data(), fields[c].data() + fields[c].size(), v);
            if (vec != std::errc{} || vp != fields[c].data() + fields[c].size())
                fail(line_no, "value '" + std::string(fields[c]) + "' in column ch" + std::to_string(c)
                                + " is not a number");
            if (!std::isfinite(v)) fail(line_no, "non-finite value in column ch" + std::to_string(c));
            values.push_back(v);
        }
        ++rows;
    }
    if (rows == 0) fail(line_no, "no data rows");

    IndexedSeries out;
    out.first_index = first;
    out.series.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), rows, static_cast<Eigen::Index>(p));
    return out;
}

IndexedSeries read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return read_csv(in, path.string());
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw DataError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw DataError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

}  // namespace mssrc
