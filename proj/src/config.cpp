#include "mssrc/config.hpp"

#include "mssrc/error.hpp"

#include <fstream>
#include <set>

namespace mssrc {

using nlohmann::json;

std::string to_string(SignalFamily family)
{
    return family == SignalFamily::ks ? "ks" : "sinusoid";
}

SignalFamily parse_family(const std::string& name)
{
    if (name == "sinusoid") return SignalFamily::sinusoid;
    if (name == "ks") return SignalFamily::ks;
    throw ConfigError("unknown signal family '" + name + "' (expected 'sinusoid' or 'ks')");
}

Eigen::Index SignalConfig::channels() const
{
    return family == SignalFamily::ks ? ks.sample_channels : sinusoid.channels();
}

Eigen::Index SignalConfig::length() const
{
    return family == SignalFamily::ks ? ks.n_steps : sinusoid.n_samples;
}

void SignalConfig::set_length(Eigen::Index n)
{
    if (family == SignalFamily::ks)
        ks.n_steps = n;
    else
        sinusoid.n_samples = n;
}

TimeSeriesMatrix SignalConfig::generate() const
{
    return family == SignalFamily::ks ? generate_ks(ks) : generate_sinusoid(sinusoid);
}

void RunConfig::validate() const
{
    if (signal.family == SignalFamily::ks)
        signal.ks.validate();
    else
        signal.sinusoid.validate();
    noise.params.validate();
    denoise.validate();
    tune.space.validate();
    if (tune.enabled && tune.options.budget < 4 * SearchSpace::dimension)
        throw InvalidArgument("tune.budget must be at least " + std::to_string(4 * SearchSpace::dimension));
    if (bench.families.empty() || bench.input_snr_db.empty() || bench.lengths.empty() || bench.seeds.empty())
        throw InvalidArgument("bench lists must be nonempty");
    for (auto n : bench.lengths)
        if (n < 2) throw InvalidArgument("bench lengths must be at least 2");
}

namespace {

/// Reads one JSON object, tracking the key path and rejecting unknown keys.
class Section
{
  public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path))
    {
        if (!node_.is_object()) throw ConfigError(where() + ": expected an object");
    }

    /// Call after the last read.
    void done() const
    {
        for (const auto& [key, value] : node_.items())
            if (!seen_.count(key)) throw ConfigError("unknown key '" + child(key) + "'");
    }

    bool has(const std::string& key)
    {
        seen_.insert(key);
        return node_.contains(key);
    }

    const json& at(const std::string& key)
    {
        seen_.insert(key);
        return node_.at(key);
    }

    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    template <typename T>
    void read(const std::string& key, T& out)
    {
        if (!has(key)) return;
        try {
            out = node_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(child(key) + ": " + e.what());
        }
    }

    void read_bounds(const std::string& key, ParameterBounds& b)
    {
        if (!has(key)) return;
        const auto& v = node_.at(key);
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            throw ConfigError(child(key) + ": expected [lower, upper]");
        b.lower = v[0].get<double>();
        b.upper = v[1].get<double>();
    }

  private:
    std::string where() const { return path_.empty() ? "config" : path_; }

    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_esn(const json& node, EsnConfig& esn)
{
    Section s(node, "denoise.esn");
    s.read("reservoir_size", esn.reservoir_size);
    s.read("leak_rate", esn.leak_rate);
    s.read("spectral_radius", esn.spectral_radius);
    s.read("input_scaling", esn.input_scaling);
    s.read("connectivity", esn.connectivity);
    s.read("ridge", esn.ridge);
    s.read("washout", esn.washout);
    s.read("seed", esn.seed);
    s.done();
}

void read_signal(const json& node, SignalConfig& sig)
{
    Section s(node, "signal");
    std::string family = to_string(sig.family);
    s.read("family", family);
    sig.family = parse_family(family);

    if (s.has("sinusoid")) {
        Section sin(s.at("sinusoid"), "signal.sinusoid");
        Eigen::Index channels = sig.sinusoid.channels();
        Eigen::Index n = sig.sinusoid.n_samples;
        double dt = sig.sinusoid.dt;
        sin.read("channels", channels);
        sin.read("n_samples", n);
        sin.read("dt", dt);
        if (channels < 1) throw ConfigError("signal.sinusoid.channels must be positive");
        auto params = SinusoidParams::defaults(channels, n, dt);
        sin.read("frequencies", params.frequencies);
        sin.read("amplitudes", params.amplitudes);
        sin.read("phases", params.phases);
        sig.sinusoid = std::move(params);
        sin.done();
    }
    if (s.has("ks")) {
        Section ks(s.at("ks"), "signal.ks");
        ks.read("domain_length", sig.ks.domain_length);
        ks.read("grid_points", sig.ks.grid_points);
        ks.read("dt", sig.ks.dt);
        ks.read("n_steps", sig.ks.n_steps);
        ks.read("transient_steps", sig.ks.transient_steps);
        ks.read("sample_channels", sig.ks.sample_channels);
        ks.read("initial_amplitude", sig.ks.initial_amplitude);
        ks.read("seed", sig.ks.seed);
        ks.done();
    }
    s.done();
}

}  // namespace

RunConfig parse_run_config(const json& doc)
{
    RunConfig cfg;
    try {
        Section root(doc, "");
        if (root.has("schema_version")) {
            const auto& v = root.at("schema_version");
            if (!v.is_number_integer() || v.get<int>() != schema_version)
                throw ConfigError("schema_version must be " + std::to_string(schema_version));
        }
        if (root.has("signal")) {
            read_signal(root.at("signal"), cfg.signal);
            cfg.has_signal = true;
        }
        if (root.has("noise")) {
            Section s(root.at("noise"), "noise");
            s.read("enabled", cfg.noise.enabled);
            s.read("correlation", cfg.noise.params.correlation);
            s.read("input_snr_db", cfg.noise.params.target_input_snr_db);
            s.read("seed", cfg.noise.params.seed);
            s.done();
        }
        if (root.has("denoise")) {
            Section s(root.at("denoise"), "denoise");
            if (s.has("esn")) read_esn(s.at("esn"), cfg.denoise.esn);
            s.read("train_fraction", cfg.denoise.train_fraction);
            s.read("weight_floor", cfg.denoise.weight_floor);
            s.read("calibration_passes", cfg.denoise.calibration_passes);
            s.done();
        }
        if (root.has("tune")) {
            Section s(root.at("tune"), "tune");
            s.read("enabled", cfg.tune.enabled);
            s.read("budget", cfg.tune.options.budget);
            s.read("seed", cfg.tune.options.seed);
            s.read("initial_design", cfg.tune.options.initial_design);
            s.read("candidates", cfg.tune.options.candidates);
            std::string mode = "surrogate";
            s.read("mode", mode);
            if (mode == "surrogate")
                cfg.tune.options.mode = SearchMode::surrogate;
            else if (mode == "random")
                cfg.tune.options.mode = SearchMode::random;
            else
                throw ConfigError("tune.mode must be 'surrogate' or 'random'");
            if (s.has("bounds")) {
                Section b(s.at("bounds"), "tune.bounds");
                b.read_bounds("leak_rate", cfg.tune.space.leak_rate);
                b.read_bounds("spectral_radius", cfg.tune.space.spectral_radius);
                b.read_bounds("input_scaling", cfg.tune.space.input_scaling);
                b.read_bounds("ridge", cfg.tune.space.ridge);
                b.done();
            }
            s.done();
        }
        if (root.has("bench")) {
            Section s(root.at("bench"), "bench");
            if (s.has("families")) {
                std::vector<std::string> names;
                s.read("families", names);
                cfg.bench.families.clear();
                for (const auto& n : names) cfg.bench.families.push_back(parse_family(n));
            }
            s.read("input_snr_db", cfg.bench.input_snr_db);
            s.read("lengths", cfg.bench.lengths);
            s.read("seeds", cfg.bench.seeds);
            s.done();
        }
        if (root.has("output")) {
            const auto& v = root.at("output");
            if (!v.is_string()) throw ConfigError("output: expected a path string");
            cfg.output = v.get<std::string>();
        }
        root.done();
    } catch (const ConfigError&) {
        throw;
    } catch (const json::exception& e) {
        throw ConfigError(e.what());
    }
    try {
        cfg.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_run_config(doc);
}

json to_json(const EsnConfig& esn)
{
    return json{{"reservoir_size", esn.reservoir_size}, {"leak_rate", esn.leak_rate},
                {"spectral_radius", esn.spectral_radius}, {"input_scaling", esn.input_scaling},
                {"connectivity", esn.connectivity}, {"ridge", esn.ridge},
                {"washout", esn.washout}, {"seed", esn.seed}};
}

json to_json(const RunConfig& cfg)
{
    const auto& sin = cfg.signal.sinusoid;
    const auto& ks = cfg.signal.ks;
    const auto& space = cfg.tune.space;
    std::vector<std::string> families;
    for (auto f : cfg.bench.families) families.push_back(to_string(f));
    json doc = {
      {"schema_version", schema_version},
      {"signal",
       {{"family", to_string(cfg.signal.family)},
        {"sinusoid",
         {{"channels", sin.channels()}, {"n_samples", sin.n_samples}, {"dt", sin.dt},
          {"frequencies", sin.frequencies}, {"amplitudes", sin.amplitudes}, {"phases", sin.phases}}},
        {"ks",
         {{"domain_length", ks.domain_length}, {"grid_points", ks.grid_points}, {"dt", ks.dt},
          {"n_steps", ks.n_steps}, {"transient_steps", ks.transient_steps},
          {"sample_channels", ks.sample_channels}, {"initial_amplitude", ks.initial_amplitude},
          {"seed", ks.seed}}}}},
      {"noise",
       {{"enabled", cfg.noise.enabled}, {"correlation", cfg.noise.params.correlation},
        {"input_snr_db", cfg.noise.params.target_input_snr_db}, {"seed", cfg.noise.params.seed}}},
      {"denoise",
       {{"esn", to_json(cfg.denoise.esn)}, {"train_fraction", cfg.denoise.train_fraction},
        {"weight_floor", cfg.denoise.weight_floor}, {"calibration_passes", cfg.denoise.calibration_passes}}},
      {"tune",
       {{"enabled", cfg.tune.enabled}, {"budget", cfg.tune.options.budget}, {"seed", cfg.tune.options.seed},
        {"initial_design", cfg.tune.options.initial_size(SearchSpace::dimension)},
        {"candidates", cfg.tune.options.candidates},
        {"mode", cfg.tune.options.mode == SearchMode::random ? "random" : "surrogate"},
        {"bounds",
         {{"leak_rate", {space.leak_rate.lower, space.leak_rate.upper}},
          {"spectral_radius", {space.spectral_radius.lower, space.spectral_radius.upper}},
          {"input_scaling", {space.input_scaling.lower, space.input_scaling.upper}},
          {"ridge", {space.ridge.lower, space.ridge.upper}}}}}},
      {"bench",
       {{"families", families}, {"input_snr_db", cfg.bench.input_snr_db}, {"lengths", cfg.bench.lengths},
        {"seeds", cfg.bench.seeds}}},
      {"output", cfg.output},
    };
    return doc;
}

}  // namespace mssrc
