#pragma once

// JSON run configuration shared by every CLI command. Each section is
// optional and falls back to library defaults; unknown keys are rejected.

#include "mssrc/denoiser.hpp"
#include "mssrc/hyperopt.hpp"
#include "mssrc/signals.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mssrc {

inline constexpr int schema_version = 1;

enum class SignalFamily
{
    sinusoid,
    ks,
};

std::string to_string(SignalFamily family);
SignalFamily parse_family(const std::string& name);

struct SignalConfig
{
    SignalFamily family = SignalFamily::sinusoid;
    SinusoidParams sinusoid = SinusoidParams::defaults();
    KsParams ks;

    Eigen::Index channels() const;
    Eigen::Index length() const;
    /// Overrides the sample count of whichever family is active.
    void set_length(Eigen::Index n);
    TimeSeriesMatrix generate() const;
};

struct NoiseConfig
{
    bool enabled = true;
    NoiseParams params;
};

struct TuneConfig
{
    bool enabled = true;
    SearchSpace space;
    TuneOptions options;
};

struct BenchConfig
{
    std::vector<SignalFamily> families{SignalFamily::sinusoid};
    std::vector<double> input_snr_db{-10.0, 0.0, 10.0};
    std::vector<Eigen::Index> lengths{2000, 10000};
    std::vector<std::uint64_t> seeds{1, 2, 3};
};

struct RunConfig
{
    SignalConfig signal;
    bool has_signal = false;  // the document carried a "signal" section
    NoiseConfig noise;
    DenoiseConfig denoise;
    TuneConfig tune;
    BenchConfig bench;
    std::string output;  // default output path; the --out flag overrides it

    void validate() const;
};

/// Parses and validates; throws ConfigError naming the offending key.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

/// Fully resolved document, every default materialized.
nlohmann::json to_json(const RunConfig& cfg);
nlohmann::json to_json(const EsnConfig& esn);

}  // namespace mssrc
