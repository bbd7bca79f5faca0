#pragma once

// Surrogate-assisted hyperparameter search for the reservoir.
//
// A Latin-hypercube design seeds a cubic radial-basis-function surrogate;
// each following trial is the candidate (from a random pool) that best trades
// a low surrogate value against distance from the points already evaluated.

#include "mssrc/denoiser.hpp"
#include "mssrc/reservoir.hpp"
#include "mssrc/time_series.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mssrc {

struct ParameterBounds
{
    double lower = 0.0;
    double upper = 1.0;
    bool log_scale = false;

    double from_unit(double u) const;
    double to_unit(double value) const;
};

/// Tunable EsnConfig fields. Reservoir size, connectivity, washout and seed stay fixed.
struct SearchSpace
{
    ParameterBounds leak_rate{0.05, 1.0, false};
    ParameterBounds spectral_radius{0.3, 1.4, false};
    ParameterBounds input_scaling{1e-3, 2.0, true};
    ParameterBounds ridge{1e-9, 1e2, true};

    static constexpr int dimension = 4;
    static const std::vector<std::string>& names();

    void validate() const;
    /// Maps a point of the unit cube onto the base config's tunable fields.
    EsnConfig apply(const EsnConfig& base, const Eigen::VectorXd& unit) const;
    Eigen::VectorXd to_unit(const EsnConfig& cfg) const;
};

enum class SearchMode
{
    surrogate,
    random,
};

struct TuneOptions
{
    int budget = 60;
    std::uint64_t seed = 0;
    /// Latin-hypercube trials before the surrogate is consulted; 0 means budget / 3.
    int initial_design = 0;
    SearchMode mode = SearchMode::surrogate;
    int candidates = 500;
    /// When set, the budget lower bound of 4 trials per dimension is not enforced.
    bool allow_small_budget = false;

    int initial_size(int dimension) const;
};

struct TrialRecord
{
    int index = 0;
    Eigen::VectorXd point;  // unit-cube coordinates
    EsnConfig config;
    double objective = 0.0;
    bool failed = false;
    std::string error;
    int rank = 0;  // 1 = best; failed trials rank last
};

struct SearchResult
{
    std::vector<TrialRecord> trials;
    int best_index = -1;

    const TrialRecord& best() const { return trials.at(static_cast<std::size_t>(best_index)); }
    /// Running minimum of the objective over successful trials, NaN until the first success.
    std::vector<double> best_so_far() const;
};

using UnitObjective = std::function<double(const Eigen::VectorXd&)>;

/// Minimizes an objective over the unit cube of the given dimension.
/// Trials whose objective throws or is non-finite are logged as failed.
SearchResult minimize(const UnitObjective& objective, int dimension, const TuneOptions& options);

/// Cubic RBF interpolant with a linear tail through (points[i], values[i]).
class RbfSurrogate
{
  public:
    RbfSurrogate(const std::vector<Eigen::VectorXd>& points, const Eigen::VectorXd& values);
    double operator()(const Eigen::VectorXd& x) const;

  private:
    std::vector<Eigen::VectorXd> centres_;
    Eigen::VectorXd weights_;
    Eigen::VectorXd tail_;
};

/// One-step validation MSE (standardized units, rows K+1..N) of a reservoir
/// trained on rows 0..K.
double validation_error(const TimeSeriesMatrix& x, const DenoiseConfig& cfg);

struct TuneResult
{
    EsnConfig best;
    double best_objective = 0.0;
    SearchResult search;
};

/// Searches the space for the reservoir configuration with the lowest
/// validation error on x. Fields outside the space come from base.esn.
TuneResult tune(const TimeSeriesMatrix& x, const DenoiseConfig& base, const SearchSpace& space,
                const TuneOptions& options);

/// Columns: trial, one per tuned hyperparameter, objective (nan for failed trials).
std::string trial_log_csv(const SearchResult& search);

}  // namespace mssrc
