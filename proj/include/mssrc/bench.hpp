#pragma once

// Benchmark grid: every (family, input SNR, length) cell is generated,
// corrupted, denoised and scored once per seed.

#include "mssrc/config.hpp"
#include "mssrc/metrics.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mssrc {

struct BenchCell
{
    SignalFamily family = SignalFamily::sinusoid;
    double input_snr_db = 0.0;
    Eigen::Index length = 0;
};

struct SeedOutcome
{
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double realized_input_snr_db = 0.0;
    SnrReport tentative;
    SnrReport calibrated;
    EsnConfig esn;
    Eigen::VectorXd weights;
};

struct CellResult
{
    BenchCell cell;
    std::vector<SeedOutcome> runs;
    int n_ok = 0;
    double mean_realized_input_snr_db = 0.0;
    double mean_tentative_snr_db = 0.0;
    double mean_calibrated_snr_db = 0.0;
};

/// Seeds derived for one run: the KS initial condition and ESN/tuner use
/// the bench seed itself, the noise draw a distinct stream.
std::uint64_t noise_seed_for(std::uint64_t bench_seed);

/// Runs one seed of one cell. Failures are captured in the outcome.
SeedOutcome run_bench_seed(const RunConfig& cfg, const BenchCell& cell, std::uint64_t seed);

/// All cells in config order; independent runs spread over `jobs` threads.
std::vector<CellResult> bench_grid(const RunConfig& cfg, int jobs = 1,
                                   const std::function<void(const BenchCell&, const SeedOutcome&)>& progress = {});

std::string grid_csv(const std::vector<CellResult>& cells);
nlohmann::json cell_json(const CellResult& cell);
std::string cell_file_name(const BenchCell& cell);

}  // namespace mssrc
