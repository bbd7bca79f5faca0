#include "mssrc/bench.hpp"

#include "mssrc/denoiser.hpp"
#include "mssrc/hyperopt.hpp"
#include "mssrc/io.hpp"
#include "mssrc/signals.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <sstream>
#include <thread>

namespace mssrc {

using nlohmann::json;

std::uint64_t noise_seed_for(std::uint64_t bench_seed)
{
    return bench_seed * 1000003ULL + 17ULL;
}

SeedOutcome run_bench_seed(const RunConfig& cfg, const BenchCell& cell, std::uint64_t seed)
{
    SeedOutcome out;
    out.seed = seed;
    try {
        SignalConfig signal = cfg.signal;
        signal.family = cell.family;
        signal.set_length(cell.length);
        signal.ks.seed = seed;
        const auto clean = signal.generate();

        NoiseParams noise = cfg.noise.params;
        noise.target_input_snr_db = cell.input_snr_db;
        noise.seed = noise_seed_for(seed);
        const auto noisy = add_correlated_noise(clean, noise);
        out.realized_input_snr_db = noisy.realized_input_snr_db;

        DenoiseConfig dcfg = cfg.denoise;
        dcfg.esn.seed = seed;
        if (cfg.tune.enabled) {
            TuneOptions options = cfg.tune.options;
            options.seed = seed;
            dcfg.esn = tune(noisy.noisy, dcfg, cfg.tune.space, options).best;
        }
        out.esn = dcfg.esn;

        const auto result = mssrc::mssrc(noisy.noisy, dcfg);
        const Eigen::Index last = clean.last();
        out.tentative = snr_db(clean, 0, result.tentative_q_hat, result.first_index, result.first_index, last);
        out.calibrated = snr_db(clean, 0, result.q_hat, result.first_index, result.first_index, last);
        if (result.calibration) out.weights = result.calibration->weights;
        out.ok = true;
    } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
    }
    return out;
}

std::vector<CellResult> bench_grid(const RunConfig& cfg, int jobs,
                                   const std::function<void(const BenchCell&, const SeedOutcome&)>& progress)
{
    std::vector<CellResult> cells;
    for (auto family : cfg.bench.families)
        for (double snr : cfg.bench.input_snr_db)
            for (auto length : cfg.bench.lengths) {
                CellResult c;
                c.cell = {family, snr, length};
                c.runs.resize(cfg.bench.seeds.size());
                cells.push_back(std::move(c));
            }

    const std::size_t per_cell = cfg.bench.seeds.size();
    const std::size_t total = cells.size() * per_cell;
    std::atomic<std::size_t> next{0};
    std::mutex progress_mutex;
    auto worker = [&] {
        for (std::size_t task = next++; task < total; task = next++) {
            auto& cell = cells[task / per_cell];
            auto& slot = cell.runs[task % per_cell];
            slot = run_bench_seed(cfg, cell.cell, cfg.bench.seeds[task % per_cell]);
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(cell.cell, slot);
            }
        }
    };
    const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(total)));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (auto& c : cells) {
        double realized = 0.0, tentative = 0.0, calibrated = 0.0;
        for (const auto& r : c.runs) {
            if (!r.ok) continue;
            ++c.n_ok;
            realized += r.realized_input_snr_db;
            tentative += r.tentative.average_db;
            calibrated += r.calibrated.average_db;
        }
        const double nan = std::numeric_limits<double>::quiet_NaN();
        c.mean_realized_input_snr_db = c.n_ok ? realized / c.n_ok : nan;
        c.mean_tentative_snr_db = c.n_ok ? tentative / c.n_ok : nan;
        c.mean_calibrated_snr_db = c.n_ok ? calibrated / c.n_ok : nan;
    }
    return cells;
}

namespace {

std::string fixed(double v)
{
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

std::string grid_csv(const std::vector<CellResult>& cells)
{
    std::ostringstream out;
    out << "family,input_snr_db,length,seeds,n_ok,mean_realized_input_snr_db,mean_tentative_snr_db,"
           "mean_calibrated_snr_db\n";
    for (const auto& c : cells) {
        out << to_string(c.cell.family) << ',' << fixed(c.cell.input_snr_db) << ',' << c.cell.length << ',';
        for (std::size_t i = 0; i < c.runs.size(); ++i) out << (i ? ";" : "") << c.runs[i].seed;
        out << ',' << c.n_ok << ',' << fixed(c.mean_realized_input_snr_db) << ',' << fixed(c.mean_tentative_snr_db)
            << ',' << fixed(c.mean_calibrated_snr_db) << '\n';
    }
    return out.str();
}

namespace {

json report_json(const SnrReport& r)
{
    json per_channel = json::array();
    for (Eigen::Index c = 0; c < r.per_channel_db.size(); ++c) {
        if (r.undefined[static_cast<std::size_t>(c)])
            per_channel.push_back(nullptr);
        else
            per_channel.push_back(r.per_channel_db(c));
    }
    return json{{"average_db", r.average_defined() ? json(r.average_db) : json(nullptr)},
                {"per_channel_db", per_channel},
                {"n_samples_used", r.n_samples_used},
                {"index_range", {r.first_index, r.last_index}}};
}

}  // namespace

json cell_json(const CellResult& c)
{
    auto number = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
    json runs = json::array();
    for (const auto& r : c.runs) {
        json run = {{"seed", r.seed}, {"ok", r.ok}};
        if (!r.ok) {
            run["error"] = r.error;
        } else {
            run["realized_input_snr_db"] = r.realized_input_snr_db;
            run["tentative"] = report_json(r.tentative);
            run["calibrated"] = report_json(r.calibrated);
            run["esn"] = to_json(r.esn);
            run["weights"] = std::vector<double>(r.weights.data(), r.weights.data() + r.weights.size());
        }
        runs.push_back(std::move(run));
    }
    return json{{"schema_version", schema_version},
                {"family", to_string(c.cell.family)},
                {"input_snr_db", c.cell.input_snr_db},
                {"length", c.cell.length},
                {"n_ok", c.n_ok},
                {"mean_realized_input_snr_db", number(c.mean_realized_input_snr_db)},
                {"mean_tentative_snr_db", number(c.mean_tentative_snr_db)},
                {"mean_calibrated_snr_db", number(c.mean_calibrated_snr_db)},
                {"runs", runs}};
}

std::string cell_file_name(const BenchCell& cell)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s_snr%+g_n%ld.json", to_string(cell.family).c_str(), cell.input_snr_db,
                  static_cast<long>(cell.length));
    return buf;
}

}  // namespace mssrc
