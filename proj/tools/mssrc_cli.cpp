// mssrc: generate test signals, denoise CSV series, tune reservoirs and run
// benchmark grids.
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical
// divergence, 5 every benchmark cell failed.

#include "mssrc/bench.hpp"
#include "mssrc/config.hpp"
#include "mssrc/denoiser.hpp"
#include "mssrc/error.hpp"
#include "mssrc/hyperopt.hpp"
#include "mssrc/io.hpp"
#include "mssrc/signals.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mssrc;

namespace {

enum ExitCode
{
    exit_ok = 0,
    exit_config = 2,
    exit_data = 3,
    exit_divergence = 4,
    exit_bench_failed = 5,
};

struct Options
{
    std::string config;
    std::string in;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> calibration_passes;
    std::optional<int> jobs;
};

RunConfig load(const Options& opt)
{
    RunConfig cfg = opt.config.empty() ? parse_run_config(json::object()) : load_run_config(opt.config);
    if (opt.calibration_passes) {
        if (*opt.calibration_passes < 0) throw ConfigError("--calibration-passes must be non-negative");
        cfg.denoise.calibration_passes = *opt.calibration_passes;
    }
    if (opt.seed) {
        cfg.signal.ks.seed = *opt.seed;
        cfg.noise.params.seed = noise_seed_for(*opt.seed);
        cfg.denoise.esn.seed = *opt.seed;
        cfg.tune.options.seed = *opt.seed;
        cfg.bench.seeds = {*opt.seed};
    }
    return cfg;
}

fs::path output_path(const Options& opt, const RunConfig& cfg)
{
    const std::string out = opt.out.empty() ? cfg.output : opt.out;
    if (out.empty()) throw ConfigError("no output path: pass --out or set \"output\" in the config");
    return out;
}

/// foo.csv -> foo<suffix>
fs::path sibling(const fs::path& path, const std::string& suffix)
{
    fs::path p = path;
    p.replace_extension();
    p += suffix;
    return p;
}

/// Refuses to write over the configuration that is being read.
void check_not_config(const Options& opt, const fs::path& path)
{
    std::error_code ec;
    if (!opt.config.empty() && fs::exists(path) && fs::equivalent(path, opt.config, ec))
        throw ConfigError("output " + path.string() + " would overwrite the config file; choose another --out");
}

int jobs_from(const Options& opt)
{
    if (opt.jobs) return std::max(1, *opt.jobs);
    if (const char* env = std::getenv("MSSRC_JOBS")) {
        try {
            return std::max(1, std::stoi(env));
        } catch (const std::exception&) {
            throw ConfigError(std::string("MSSRC_JOBS is not an integer: ") + env);
        }
    }
    return 1;
}

std::vector<double> to_vector(const Eigen::VectorXd& v)
{
    return {v.data(), v.data() + v.size()};
}

int cmd_generate(const Options& opt)
{
    const RunConfig cfg = load(opt);
    const fs::path out = output_path(opt, cfg);
    check_not_config(opt, out);
    for (const char* suffix : {".noisy.csv", ".json"}) check_not_config(opt, sibling(out, suffix));
    const auto clean = cfg.signal.generate();
    write_file_atomic(out, to_csv(clean));

    json sidecar = {{"schema_version", schema_version},
                    {"command", "generate"},
                    {"config", to_json(cfg)},
                    {"channels", clean.channels()},
                    {"samples", clean.length()},
                    {"files", {{"clean", out.string()}}}};
    if (cfg.noise.enabled) {
        const auto noisy = add_correlated_noise(clean, cfg.noise.params);
        const fs::path noisy_path = sibling(out, ".noisy.csv");
        write_file_atomic(noisy_path, to_csv(noisy.noisy));
        sidecar["files"]["noisy"] = noisy_path.string();
        sidecar["realized_input_snr_db"] = noisy.realized_input_snr_db;
        sidecar["noise_scale"] = noisy.noise_scale;
    }
    write_file_atomic(sibling(out, ".json"), sidecar.dump(2) + "\n");
    std::cerr << "wrote " << out.string() << '\n';
    return exit_ok;
}

IndexedSeries read_input(const Options& opt, const RunConfig& cfg)
{
    if (opt.in.empty()) throw ConfigError("--in is required");
    auto input = read_csv(fs::path(opt.in));
    input.series.validate(opt.in);
    if (cfg.has_signal && input.series.channels() != cfg.signal.channels())
        throw DataError(opt.in + " has " + std::to_string(input.series.channels())
                        + " channels but the config describes " + std::to_string(cfg.signal.channels()));
    return input;
}

int cmd_denoise(const Options& opt)
{
    RunConfig cfg = load(opt);
    const fs::path out = output_path(opt, cfg);
    check_not_config(opt, out);
    for (const char* suffix : {".residual.csv", ".report.json"}) check_not_config(opt, sibling(out, suffix));
    const auto input = read_input(opt, cfg);

    json tuning = {{"enabled", cfg.tune.enabled}};
    if (cfg.tune.enabled) {
        const auto tuned = tune(input.series, cfg.denoise, cfg.tune.space, cfg.tune.options);
        cfg.denoise.esn = tuned.best;
        tuning["best_objective"] = tuned.best_objective;
        tuning["trials"] = tuned.search.trials.size();
    }

    const auto result = mssrc::mssrc(input.series, cfg.denoise);
    const Eigen::Index first = input.first_index + result.first_index;
    write_file_atomic(out, to_csv(result.q_hat, first));
    const fs::path residual_path = sibling(out, ".residual.csv");
    write_file_atomic(residual_path, to_csv(result.xi_hat, first));

    const auto& est = result.noise_estimate;
    json report = {
      {"schema_version", schema_version},
      {"command", "denoise"},
      {"mode", result.calibration ? "calibrated" : "tentative_only"},
      {"config", to_json(cfg)},
      {"input", opt.in},
      {"files", {{"denoised", out.string()}, {"residual", residual_path.string()}}},
      {"index_range", {first, input.first_index + input.series.last()}},
      {"passes_applied", result.passes_applied},
      {"training_error", result.training_error},
      {"tentative_training_error", result.tentative_training_error},
      {"tuned_hyperparameters", to_json(cfg.denoise.esn)},
      {"tuning", tuning},
      {"noise",
       {{"coordinates", "standardized"},
        {"noise_variances", to_vector(est.noise_variances)},
        {"residual_mean", to_vector(est.residual_mean.transpose())},
        {"rank_deficient", est.rank_deficient}}},
    };
    if (result.calibration) {
        report["signal_variances"] = to_vector(result.calibration->signal_variances);
        report["weights"] = to_vector(result.calibration->weights);
        report["input_gain"] = result.calibration->input_gain;
    }
    write_file_atomic(sibling(out, ".report.json"), report.dump(2) + "\n");
    std::cerr << "wrote " << out.string() << '\n';
    return exit_ok;
}

int cmd_tune(const Options& opt)
{
    const RunConfig cfg = load(opt);
    const fs::path out = output_path(opt, cfg);
    check_not_config(opt, out);
    for (const char* suffix : {".json"}) check_not_config(opt, sibling(out, suffix));
    const auto input = read_input(opt, cfg);
    const auto tuned = tune(input.series, cfg.denoise, cfg.tune.space, cfg.tune.options);
    write_file_atomic(out, trial_log_csv(tuned.search));
    json sidecar = {{"schema_version", schema_version},
                    {"command", "tune"},
                    {"config", to_json(cfg)},
                    {"input", opt.in},
                    {"best", to_json(tuned.best)},
                    {"best_objective", tuned.best_objective},
                    {"best_trial", tuned.search.best_index},
                    {"trials", tuned.search.trials.size()}};
    write_file_atomic(sibling(out, ".json"), sidecar.dump(2) + "\n");
    std::cerr << "best validation MSE " << tuned.best_objective << " (trial " << tuned.search.best_index << ")\n";
    return exit_ok;
}

int cmd_bench(const Options& opt)
{
    const RunConfig cfg = load(opt);
    const fs::path dir = output_path(opt, cfg);
    const auto cells = bench_grid(cfg, jobs_from(opt), [](const BenchCell& cell, const SeedOutcome& run) {
        std::cerr << to_string(cell.family) << " snr=" << cell.input_snr_db << " n=" << cell.length
                  << " seed=" << run.seed << ": ";
        if (run.ok)
            std::cerr << "tentative " << run.tentative.average_db << " dB, calibrated " << run.calibrated.average_db
                      << " dB\n";
        else
            std::cerr << "FAILED " << run.error << '\n';
    });

    write_file_atomic(dir / "grid.csv", grid_csv(cells));
    bool any_ok = false;
    for (const auto& c : cells) {
        write_file_atomic(dir / "cells" / cell_file_name(c.cell), cell_json(c).dump(2) + "\n");
        any_ok = any_ok || c.n_ok > 0;
    }
    json sidecar = {{"schema_version", schema_version}, {"command", "bench"}, {"config", to_json(cfg)},
                    {"cells", cells.size()}};
    write_file_atomic(dir / "bench.json", sidecar.dump(2) + "\n");
    if (!any_ok) {
        std::cerr << "every benchmark cell failed\n";
        return exit_bench_failed;
    }
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multivariate signal separation with reservoir computing"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "JSON run configuration");
        sub->add_option("--out", opt.out, "output path");
        sub->add_option("--seed", opt.seed, "override every seed in the configuration");
    };

    auto* generate = app.add_subcommand("generate", "generate a clean (and noisy) test signal as CSV");
    add_common(generate);

    auto* denoise = app.add_subcommand("denoise", "denoise a CSV series");
    add_common(denoise);
    denoise->add_option("--in", opt.in, "input CSV")->required();
    denoise->add_option("--calibration-passes", opt.calibration_passes, "0 = tentative pass only");

    auto* tune_cmd = app.add_subcommand("tune", "tune reservoir hyperparameters and write the trial log");
    add_common(tune_cmd);
    tune_cmd->add_option("--in", opt.in, "input CSV")->required();

    auto* bench = app.add_subcommand("bench", "run a benchmark grid; --out names a directory");
    add_common(bench);
    bench->add_option("--calibration-passes", opt.calibration_passes, "0 = tentative pass only");
    bench->add_option("--jobs", opt.jobs, "parallel runs (default: $MSSRC_JOBS or 1)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        if (*generate) return cmd_generate(opt);
        if (*denoise) return cmd_denoise(opt);
        if (*tune_cmd) return cmd_tune(opt);
        if (*bench) return cmd_bench(opt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const IntegrationDiverged& e) {
        std::cerr << "numerical divergence: " << e.what() << '\n';
        return exit_divergence;
    } catch (const Error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return exit_data;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_data;
    }
    return exit_ok;
}
