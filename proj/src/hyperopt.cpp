#include "mssrc/hyperopt.hpp"

#include "mssrc/error.hpp"
#include "mssrc/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace mssrc {

double ParameterBounds::from_unit(double u) const
{
    u = std::clamp(u, 0.0, 1.0);
    if (log_scale) return std::exp(std::log(lower) + u * (std::log(upper) - std::log(lower)));
    return lower + u * (upper - lower);
}

double ParameterBounds::to_unit(double value) const
{
    const double u = log_scale ? (std::log(value) - std::log(lower)) / (std::log(upper) - std::log(lower))
                               : (value - lower) / (upper - lower);
    return std::clamp(u, 0.0, 1.0);
}

const std::vector<std::string>& SearchSpace::names()
{
    static const std::vector<std::string> n{"leak_rate", "spectral_radius", "input_scaling", "ridge"};
    return n;
}

void SearchSpace::validate() const
{
    const ParameterBounds* all[] = {&leak_rate, &spectral_radius, &input_scaling, &ridge};
    for (int d = 0; d < dimension; ++d) {
        const auto& b = *all[d];
        if (!(b.lower < b.upper)) throw InvalidArgument("search bounds for " + names()[d] + " need lower < upper");
        if (b.log_scale && !(b.lower > 0.0))
            throw InvalidArgument("log-scale bounds for " + names()[d] + " must be positive");
    }
    if (!(leak_rate.lower > 0.0 && leak_rate.upper <= 1.0))
        throw InvalidArgument("leak_rate bounds must lie in (0, 1]");
    if (!(spectral_radius.lower > 0.0)) throw InvalidArgument("spectral_radius bounds must be positive");
    if (!(input_scaling.lower > 0.0)) throw InvalidArgument("input_scaling bounds must be positive");
    if (ridge.lower < 0.0) throw InvalidArgument("ridge bounds must be non-negative");
}

EsnConfig SearchSpace::apply(const EsnConfig& base, const Eigen::VectorXd& unit) const
{
    if (unit.size() != dimension) throw InvalidArgument("search point has wrong dimension");
    EsnConfig cfg = base;
    cfg.leak_rate = leak_rate.from_unit(unit(0));
    cfg.spectral_radius = spectral_radius.from_unit(unit(1));
    cfg.input_scaling = input_scaling.from_unit(unit(2));
    cfg.ridge = ridge.from_unit(unit(3));
    return cfg;
}

Eigen::VectorXd SearchSpace::to_unit(const EsnConfig& cfg) const
{
    Eigen::VectorXd u(dimension);
    u << leak_rate.to_unit(cfg.leak_rate), spectral_radius.to_unit(cfg.spectral_radius),
      input_scaling.to_unit(cfg.input_scaling), ridge.to_unit(cfg.ridge);
    return u;
}

int TuneOptions::initial_size(int dimension) const
{
    const int n = initial_design > 0 ? initial_design : budget / 3;
    return std::clamp(n, std::min(budget, dimension + 1), budget);
}

std::vector<double> SearchResult::best_so_far() const
{
    std::vector<double> curve;
    double best = std::numeric_limits<double>::quiet_NaN();
    for (const auto& t : trials) {
        if (!t.failed && (std::isnan(best) || t.objective < best)) best = t.objective;
        curve.push_back(best);
    }
    return curve;
}

RbfSurrogate::RbfSurrogate(const std::vector<Eigen::VectorXd>& points, const Eigen::VectorXd& values)
  : centres_(points)
{
    const auto n = static_cast<Eigen::Index>(points.size());
    if (n == 0 || values.size() != n) throw InvalidArgument("surrogate needs matching points and values");
    const Eigen::Index d = points.front().size();
    const Eigen::Index m = n + d + 1;

    Eigen::MatrixXd system = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double r = (points[static_cast<std::size_t>(i)] - points[static_cast<std::size_t>(j)]).norm();
            system(i, j) = r * r * r;
        }
        system(i, n) = 1.0;
        system(n, i) = 1.0;
        system.block(i, n + 1, 1, d) = points[static_cast<std::size_t>(i)].transpose();
        system.block(n + 1, i, d, 1) = points[static_cast<std::size_t>(i)];
    }
    // small nugget keeps the system solvable when trial points nearly coincide
    system.topLeftCorner(n, n).diagonal().array() += 1e-10;

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    rhs.head(n) = values;
    const Eigen::VectorXd coef = system.colPivHouseholderQr().solve(rhs);
    weights_ = coef.head(n);
    tail_ = coef.tail(d + 1);
}

double RbfSurrogate::operator()(const Eigen::VectorXd& x) const
{
    double s = tail_(0) + tail_.tail(x.size()).dot(x);
    for (std::size_t i = 0; i < centres_.size(); ++i) {
        const double r = (x - centres_[i]).norm();
        s += weights_(static_cast<Eigen::Index>(i)) * r * r * r;
    }
    return s;
}

namespace {

std::vector<Eigen::VectorXd> latin_hypercube(int n, int dimension, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::vector<Eigen::VectorXd> points(static_cast<std::size_t>(n), Eigen::VectorXd(dimension));
    std::vector<int> strata(static_cast<std::size_t>(n));
    for (int d = 0; d < dimension; ++d) {
        std::iota(strata.begin(), strata.end(), 0);
        std::shuffle(strata.begin(), strata.end(), rng);
        for (int i = 0; i < n; ++i)
            points[static_cast<std::size_t>(i)](d) = (strata[static_cast<std::size_t>(i)] + uniform(rng)) / n;
    }
    return points;
}

}  // namespace

SearchResult minimize(const UnitObjective& objective, int dimension, const TuneOptions& options)
{
    if (dimension < 1) throw InvalidArgument("search dimension must be positive");
    if (options.budget < 1) throw InvalidArgument("search budget must be positive");
    if (!options.allow_small_budget && options.budget < 4 * dimension)
        throw InvalidArgument("search budget " + std::to_string(options.budget) + " is below 4 trials per dimension ("
                              + std::to_string(4 * dimension) + ")");

    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    SearchResult result;
    auto evaluate = [&](const Eigen::VectorXd& point) {
        TrialRecord t;
        t.index = static_cast<int>(result.trials.size());
        t.point = point.cwiseMax(0.0).cwiseMin(1.0);
        try {
            t.objective = objective(t.point);
            if (!std::isfinite(t.objective)) {
                t.failed = true;
                t.error = "non-finite objective";
            }
        } catch (const std::exception& e) {
            t.failed = true;
            t.error = e.what();
        }
        if (t.failed) t.objective = std::numeric_limits<double>::quiet_NaN();
        result.trials.push_back(std::move(t));
    };

    const int initial = options.mode == SearchMode::random ? options.budget : options.initial_size(dimension);
    if (options.mode == SearchMode::random) {
        for (int i = 0; i < initial; ++i) {
            Eigen::VectorXd p(dimension);
            for (int d = 0; d < dimension; ++d) p(d) = uniform(rng);
            evaluate(p);
        }
    } else {
        for (const auto& p : latin_hypercube(initial, dimension, rng)) evaluate(p);
    }

    static constexpr double score_weights[] = {0.3, 0.5, 0.8, 0.95};
    for (int iter = 0; static_cast<int>(result.trials.size()) < options.budget; ++iter) {
        std::vector<Eigen::VectorXd> points;
        std::vector<double> values;
        Eigen::Index best = -1;
        for (const auto& t : result.trials) {
            if (t.failed) continue;
            if (best < 0 || t.objective < values[static_cast<std::size_t>(best)])
                best = static_cast<Eigen::Index>(points.size());
            points.push_back(t.point);
            values.push_back(t.objective);
        }

        std::vector<Eigen::VectorXd> pool;
        pool.reserve(static_cast<std::size_t>(options.candidates));
        const double radius = 0.2 * std::pow(0.5, iter / 10);
        for (int c = 0; c < options.candidates; ++c) {
            Eigen::VectorXd p(dimension);
            if (best >= 0 && c % 2 == 0) {
                for (int d = 0; d < dimension; ++d)
                    p(d) = std::clamp(points[static_cast<std::size_t>(best)](d) + radius * normal(rng), 0.0, 1.0);
            } else {
                for (int d = 0; d < dimension; ++d) p(d) = uniform(rng);
            }
            pool.push_back(std::move(p));
        }

        if (points.size() < static_cast<std::size_t>(dimension + 2)) {
            evaluate(pool.back());
            continue;
        }

        // clip large values to the median so outliers do not flatten the fit
        std::vector<double> sorted = values;
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2), sorted.end());
        const double median = sorted[sorted.size() / 2];
        Eigen::VectorXd fitted(static_cast<Eigen::Index>(values.size()));
        for (std::size_t i = 0; i < values.size(); ++i) fitted(static_cast<Eigen::Index>(i)) = std::min(values[i], median);
        const RbfSurrogate surrogate(points, fitted);

        std::vector<double> predicted(pool.size()), distance(pool.size());
        for (std::size_t c = 0; c < pool.size(); ++c) {
            predicted[c] = surrogate(pool[c]);
            double dmin = std::numeric_limits<double>::infinity();
            for (const auto& t : result.trials) dmin = std::min(dmin, (pool[c] - t.point).norm());
            distance[c] = dmin;
        }
        const auto [smin, smax] = std::minmax_element(predicted.begin(), predicted.end());
        const auto [dlo, dhi] = std::minmax_element(distance.begin(), distance.end());
        const double w = score_weights[iter % 4];
        double best_score = std::numeric_limits<double>::infinity();
        std::size_t pick = 0;
        for (std::size_t c = 0; c < pool.size(); ++c) {
            if (distance[c] < 1e-6) continue;
            const double s = *smax > *smin ? (predicted[c] - *smin) / (*smax - *smin) : 0.0;
            const double dist = *dhi > *dlo ? (*dhi - distance[c]) / (*dhi - *dlo) : 0.0;
            const double score = w * s + (1.0 - w) * dist;
            if (score < best_score) {
                best_score = score;
                pick = c;
            }
        }
        evaluate(pool[pick]);
    }

    // rank successful trials by objective, failures last in trial order
    std::vector<std::size_t> order(result.trials.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ta = result.trials[a];
        const auto& tb = result.trials[b];
        if (ta.failed != tb.failed) return !ta.failed;
        if (ta.failed) return false;
        return ta.objective < tb.objective;
    });
    for (std::size_t r = 0; r < order.size(); ++r) result.trials[order[r]].rank = static_cast<int>(r + 1);
    if (!result.trials[order.front()].failed) result.best_index = static_cast<int>(order.front());
    return result;
}

double validation_error(const TimeSeriesMatrix& x, const DenoiseConfig& cfg)
{
    cfg.validate();
    x.validate("input series");
    detail::check_length(x, cfg);
    const auto scaler = ChannelScaler<double>::fit(x.values);
    return detail::reproduce(scaler.forward(x.values), cfg, detail::topology_for(cfg.esn, x.channels()))
      .validation_mse;
}

TuneResult tune(const TimeSeriesMatrix& x, const DenoiseConfig& base, const SearchSpace& space,
                const TuneOptions& options)
{
    base.validate();
    space.validate();
    x.validate("input series");
    detail::check_length(x, base);

    const auto scaler = ChannelScaler<double>::fit(x.values);
    const Eigen::MatrixXd z = scaler.forward(x.values);
    const auto topology = detail::topology_for(base.esn, x.channels());

    TuneResult out;
    out.search = minimize(
      [&](const Eigen::VectorXd& unit) {
          DenoiseConfig cfg = base;
          cfg.esn = space.apply(base.esn, unit);
          return detail::reproduce(z, cfg, topology).validation_mse;
      },
      SearchSpace::dimension, options);
    for (auto& t : out.search.trials) t.config = space.apply(base.esn, t.point);

    if (out.search.best_index < 0) {
        std::string log;
        for (const auto& t : out.search.trials) log += "\n  trial " + std::to_string(t.index) + ": " + t.error;
        throw TuningFailed("all " + std::to_string(out.search.trials.size()) + " tuning trials failed:" + log);
    }
    out.best = out.search.best().config;
    out.best_objective = out.search.best().objective;
    return out;
}

std::string trial_log_csv(const SearchResult& search)
{
    std::ostringstream out;
    out << "trial";
    for (const auto& name : SearchSpace::names()) out << ',' << name;
    out << ",objective\n";
    for (const auto& t : search.trials) {
        out << t.index << ',' << format_double(t.config.leak_rate) << ',' << format_double(t.config.spectral_radius)
            << ',' << format_double(t.config.input_scaling) << ',' << format_double(t.config.ridge) << ','
            << (t.failed ? std::string("nan") : format_double(t.objective)) << '\n';
    }
    return out.str();
}

}  // namespace mssrc
