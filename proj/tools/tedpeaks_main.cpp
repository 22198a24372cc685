#include <array>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tedpeaks/layer_aggregation.hpp"
#include "tedpeaks/peak_detection.hpp"
#include "tedpeaks/reports.hpp"
#include "tedpeaks/signal_model.hpp"
#include "tedpeaks/synth.hpp"
#include "tedpeaks/validation_stats.hpp"

namespace {

using namespace tedpeaks;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitConfig = 3;

/// Effective run configuration after merging defaults, the config file and
/// command-line flags, in that order of increasing precedence.
struct RunConfig {
    std::size_t window = 600;
    BoundaryPolicy boundary = BoundaryPolicy::shrink;
    double h_abs = 0.335;
    double m_rel = 0.2;
    std::size_t min_run = 15;
    std::uint32_t transition_layer = 400;
    std::uint32_t total_layers = 573;
    double h_step = 0.055;
    double m_step = 0.05;
    std::optional<std::uint64_t> normalize_by;
    std::uint64_t seed = 0;

    SmoothingConfig smoothing() const { return {window, 3, boundary}; }
    DetectorConfig detector() const { return {h_abs, m_rel, min_run}; }
    SweepSpec sweep_spec() const { return {h_abs, m_rel, h_step, m_step}; }
};

/// Raw flag values; optionals stay empty unless the flag was given, so the
/// merge only overrides what the user actually set.
struct FlagValues {
    std::vector<std::string> inputs;
    std::optional<std::string> output_dir;
    std::optional<std::string> config_path;
    std::optional<std::string> preset;
    std::optional<std::string> pores_path;
    std::optional<std::string> sample_id;
    std::optional<std::size_t> window;
    std::optional<std::size_t> min_run;
    std::optional<double> h_abs;
    std::optional<double> m_rel;
    std::optional<double> h_step;
    std::optional<double> m_step;
    std::optional<std::uint32_t> transition_layer;
    std::optional<std::uint32_t> total_layers;
    std::optional<std::uint64_t> normalize_by;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> generate_n;
    bool print_config = false;
};

void add_shared_flags(CLI::App* cmd, FlagValues& f) {
    cmd->add_option("--input", f.inputs, "Input file (repeatable where noted)");
    cmd->add_option("--output-dir", f.output_dir, "Directory for output artifacts (default .)");
    cmd->add_option("--config", f.config_path, "Flat key = value config file");
    cmd->add_option("--window", f.window, "Smoothing window in samples (default 600)");
    cmd->add_option("--h-abs", f.h_abs, "Absolute deviation threshold H (default 0.335)");
    cmd->add_option("--m-rel", f.m_rel, "Relative deviation threshold M (default 0.2)");
    cmd->add_option("--min-run", f.min_run, "Minimum flagged run per peak (default 15)");
    cmd->add_option("--preset", f.preset, "Threshold preset: part or aps");
    cmd->add_option("--transition-layer", f.transition_layer,
                    "Printing-pattern transition layer (default 400)");
    cmd->add_option("--total-layers", f.total_layers, "Printed layer count (default 573)");
    cmd->add_option("--h-step", f.h_step, "Sweep step for H (default 0.055)");
    cmd->add_option("--m-step", f.m_step, "Sweep step for M (default 0.05)");
    cmd->add_option("--normalize-by", f.normalize_by,
                    "Reference pore total for sweep normalization (default: summed pores)");
    cmd->add_option("--seed", f.seed, "Seed for synthetic generation (default 0)");
    cmd->add_flag("--print-config", f.print_config,
                  "Print the effective config and exit without running");
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    std::istringstream in(value);
    in >> out;
    if (in.fail() || !in.eof())
        throw ConfigError("bad value '" + value + "' for config key '" + key + "'");
    return out;
}

void apply_preset(RunConfig& cfg, const std::string& preset) {
    if (preset == "part") {
        const DetectorConfig d = DetectorConfig::part();
        cfg.h_abs = d.h_abs;
        cfg.m_rel = d.m_rel;
    } else if (preset == "aps") {
        const DetectorConfig d = DetectorConfig::aps();
        cfg.h_abs = d.h_abs;
        cfg.m_rel = d.m_rel;
    } else {
        throw ConfigError("unknown preset '" + preset + "', expected part or aps");
    }
}

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "window")
        cfg.window = parse_number<std::size_t>(key, value);
    else if (key == "boundary")
        cfg.boundary = parse_boundary(value);
    else if (key == "h_abs")
        cfg.h_abs = parse_number<double>(key, value);
    else if (key == "m_rel")
        cfg.m_rel = parse_number<double>(key, value);
    else if (key == "min_run")
        cfg.min_run = parse_number<std::size_t>(key, value);
    else if (key == "preset")
        apply_preset(cfg, value);
    else if (key == "transition_layer")
        cfg.transition_layer = parse_number<std::uint32_t>(key, value);
    else if (key == "total_layers")
        cfg.total_layers = parse_number<std::uint32_t>(key, value);
    else if (key == "h_step")
        cfg.h_step = parse_number<double>(key, value);
    else if (key == "m_step")
        cfg.m_step = parse_number<double>(key, value);
    else if (key == "normalize_by")
        cfg.normalize_by = parse_number<std::uint64_t>(key, value);
    else if (key == "seed")
        cfg.seed = parse_number<std::uint64_t>(key, value);
    else
        throw ConfigError("unknown config key '" + key + "'");
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Applies `key = value` lines in file order. `#` starts a comment.
void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        const std::string entry = trim(line);
        if (entry.empty())
            continue;
        const auto eq = entry.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(entry.substr(0, eq));
        const std::string value = trim(entry.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
        apply_config_entry(cfg, key, value);
    }
}

RunConfig merge_config(const FlagValues& f) {
    RunConfig cfg;
    if (f.config_path)
        apply_config_file(cfg, *f.config_path);
    if (f.preset)
        apply_preset(cfg, *f.preset);
    if (f.window) cfg.window = *f.window;
    if (f.h_abs) cfg.h_abs = *f.h_abs;
    if (f.m_rel) cfg.m_rel = *f.m_rel;
    if (f.min_run) cfg.min_run = *f.min_run;
    if (f.transition_layer) cfg.transition_layer = *f.transition_layer;
    if (f.total_layers) cfg.total_layers = *f.total_layers;
    if (f.h_step) cfg.h_step = *f.h_step;
    if (f.m_step) cfg.m_step = *f.m_step;
    if (f.normalize_by) cfg.normalize_by = *f.normalize_by;
    if (f.seed) cfg.seed = *f.seed;
    return cfg;
}

std::string format_double(double v) {
    std::array<char, 32> tmp;
    const auto [ptr, ec] = std::to_chars(tmp.data(), tmp.data() + tmp.size(), v);
    (void)ec;
    return std::string(tmp.data(), ptr);
}

/// The printed form parses back through apply_config_file unchanged.
std::string render_config(const RunConfig& cfg) {
    std::string out;
    out += "window = " + std::to_string(cfg.window) + "\n";
    out += "boundary = " + std::string(boundary_name(cfg.boundary)) + "\n";
    out += "h_abs = " + format_double(cfg.h_abs) + "\n";
    out += "m_rel = " + format_double(cfg.m_rel) + "\n";
    out += "min_run = " + std::to_string(cfg.min_run) + "\n";
    out += "transition_layer = " + std::to_string(cfg.transition_layer) + "\n";
    out += "total_layers = " + std::to_string(cfg.total_layers) + "\n";
    out += "h_step = " + format_double(cfg.h_step) + "\n";
    out += "m_step = " + format_double(cfg.m_step) + "\n";
    if (cfg.normalize_by)
        out += "normalize_by = " + std::to_string(*cfg.normalize_by) + "\n";
    out += "seed = " + std::to_string(cfg.seed) + "\n";
    return out;
}

nlohmann::json config_echo(const RunConfig& cfg) {
    nlohmann::json j = {{"window", cfg.window},
                        {"boundary", boundary_name(cfg.boundary)},
                        {"h_abs", cfg.h_abs},
                        {"m_rel", cfg.m_rel},
                        {"min_run", cfg.min_run},
                        {"transition_layer", cfg.transition_layer},
                        {"total_layers", cfg.total_layers},
                        {"h_step", cfg.h_step},
                        {"m_step", cfg.m_step},
                        {"seed", cfg.seed},
                        {"normalize_by", nullptr}};
    if (cfg.normalize_by)
        j["normalize_by"] = *cfg.normalize_by;
    return j;
}

fs::path output_dir(const FlagValues& f) {
    const fs::path dir = f.output_dir.value_or(".");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw IoFailure("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

std::string single_input(const FlagValues& f) {
    if (f.inputs.size() != 1)
        throw ConfigError("expected exactly one --input, got " + std::to_string(f.inputs.size()));
    return f.inputs.front();
}

std::string stem_of(const std::string& path) {
    const std::string stem = fs::path(path).stem().string();
    return stem.empty() ? "stream" : stem;
}

std::string csv_text(std::span<const PeakInterval> intervals) {
    std::ostringstream out;
    write_intervals_csv(intervals, out);
    return std::move(out).str();
}

int cmd_detect(const FlagValues& f, const RunConfig& cfg) {
    const std::string input = single_input(f);
    const std::string sample_id = f.sample_id.value_or(stem_of(input));
    const auto samples = read_samples(fs::path(input));
    const DetectionResult result = detect(samples, cfg.smoothing(), cfg.detector());

    const fs::path dir = output_dir(f);
    write_json_file(detection_report(result, sample_id), dir / (sample_id + "_detection.json"));
    write_file_atomic(dir / (sample_id + "_intervals.csv"), csv_text(result.intervals));
    std::cout << sample_id << ": " << result.peak_count << " peaks in "
              << result.samples_processed << " samples\n";
    return kExitOk;
}

int cmd_layers(const FlagValues& f, const RunConfig& cfg) {
    const std::string input = single_input(f);
    const std::string sample_id = f.sample_id.value_or(stem_of(input));
    const auto samples = read_samples(fs::path(input));
    const DetectionResult result = detect(samples, cfg.smoothing(), cfg.detector());
    const LayerHistogram hist = per_layer_counts(result, cfg.total_layers);
    const TransitionSummary ts = transition_summary(hist, cfg.transition_layer);

    const fs::path dir = output_dir(f);
    std::ostringstream csv;
    write_histogram_csv(hist, csv);
    write_file_atomic(dir / (sample_id + "_layer_histogram.csv"), std::move(csv).str());
    nlohmann::json j = layers_report(hist, ts);
    j["sample_id"] = sample_id;
    j["config"] = config_echo(cfg);
    write_json_file(j, dir / (sample_id + "_layers.json"));
    std::cout << sample_id << ": " << hist.total() << " peaks across " << hist.total_layers
              << " layers, before/after mean " << ts.mean_before << "/" << ts.mean_after << "\n";
    return kExitOk;
}

std::vector<PoreRecord> load_pores(const FlagValues& f) {
    if (!f.pores_path)
        throw ConfigError("--pores is required for this command");
    return read_pores(fs::path(*f.pores_path));
}

int cmd_regress(const FlagValues& f, const RunConfig& cfg) {
    if (f.inputs.empty())
        throw ConfigError("regress needs detection reports via --input");
    const auto pores = load_pores(f);

    std::unordered_map<std::string, std::uint64_t> pores_by_id;
    for (const PoreRecord& p : pores)
        pores_by_id.emplace(p.sample_id, p.pore_count);

    std::vector<RegressionPoint> points;
    std::vector<double> xs, ys;
    for (const std::string& path : f.inputs) {
        std::ifstream in(path);
        if (!in)
            throw IoFailure("cannot open " + path);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw Error("bad detection report " + path + ": " + e.what());
        }
        RegressionPoint pt;
        try {
            pt.sample_id = j.at("sample_id").get<std::string>();
            pt.peaks = j.at("peak_count").get<std::uint64_t>();
        } catch (const nlohmann::json::exception& e) {
            throw Error("bad detection report " + path + ": " + e.what());
        }
        const auto it = pores_by_id.find(pt.sample_id);
        if (it == pores_by_id.end())
            throw ConfigError("no pore record for sample '" + pt.sample_id + "'");
        pt.pores = it->second;
        xs.push_back(static_cast<double>(pt.peaks));
        ys.push_back(static_cast<double>(pt.pores));
        points.push_back(std::move(pt));
    }

    const RegressionResult fit = ols_fit(xs, ys);
    nlohmann::json j = regression_report(fit, points);
    j["config"] = config_echo(cfg);
    write_json_file(j, output_dir(f) / "regression.json");
    std::cout << "slope " << fit.slope << ", intercept " << fit.intercept << ", R^2 "
              << fit.r_squared << " over " << fit.n_points << " points\n";
    return kExitOk;
}

int cmd_sweep(const FlagValues& f, const RunConfig& cfg) {
    if (f.inputs.empty())
        throw ConfigError("sweep needs stream CSVs via --input");
    const auto pores = load_pores(f);

    std::vector<SampleStream> streams;
    streams.reserve(f.inputs.size());
    for (const std::string& path : f.inputs)
        streams.push_back({stem_of(path), read_samples(fs::path(path))});

    const SweepSpec spec = cfg.sweep_spec();
    const auto cells =
        sensitivity_sweep(streams, pores, spec, cfg.smoothing(), cfg.detector(),
                          cfg.normalize_by);

    std::uint64_t reference = 0;
    if (cfg.normalize_by) {
        reference = *cfg.normalize_by;
    } else {
        for (const PoreRecord& p : pores)
            reference += p.pore_count;
    }

    nlohmann::json j = sweep_report(spec, cells, reference);
    j["config"] = config_echo(cfg);
    write_json_file(j, output_dir(f) / "sweep.json");
    std::cout << "9 cells around (H, M) = (" << spec.h_center << ", " << spec.m_center
              << "), reference pores " << reference << "\n";
    return kExitOk;
}

/// Synth spec file shares the flat config dialect; events are repeated
/// `event = start,duration,amplitude` lines.
SynthSpec parse_synth_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open synth spec " + path);

    SynthSpec spec;
    std::optional<std::uint32_t> total_layers;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        const std::string entry = trim(line);
        if (entry.empty())
            continue;
        const auto eq = entry.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(entry.substr(0, eq));
        const std::string value = trim(entry.substr(eq + 1));

        if (key == "length")
            spec.length = parse_number<std::uint64_t>(key, value);
        else if (key == "baseline_mean")
            spec.baseline_mean = parse_number<double>(key, value);
        else if (key == "drift_amplitude")
            spec.drift.amplitude = parse_number<double>(key, value);
        else if (key == "drift_period")
            spec.drift.period = parse_number<double>(key, value);
        else if (key == "noise_amplitude")
            spec.noise_amplitude = parse_number<double>(key, value);
        else if (key == "total_layers")
            total_layers = parse_number<std::uint32_t>(key, value);
        else if (key == "seed")
            spec.seed = parse_number<std::uint64_t>(key, value);
        else if (key == "event") {
            std::istringstream ev(value);
            SynthEvent e;
            char c1 = 0, c2 = 0;
            ev >> e.start >> c1 >> e.duration >> c2 >> e.amplitude;
            if (ev.fail() || !ev.eof() || c1 != ',' || c2 != ',')
                throw ConfigError(path + ":" + std::to_string(line_no) +
                                  ": expected event = start,duration,amplitude");
            spec.events.push_back(e);
        } else {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": unknown synth key '" +
                              key + "'");
        }
    }
    if (total_layers && *total_layers > 0)
        spec.layer_starts = uniform_layer_starts(spec.length, *total_layers);
    return spec;
}

int cmd_synth(const FlagValues& f, const RunConfig& cfg) {
    const std::string input = single_input(f);
    SynthSpec spec = parse_synth_spec(input);
    if (f.seed)
        spec.seed = cfg.seed;
    const std::string name = f.sample_id.value_or(stem_of(input));

    const SynthResult result = generate(spec);
    const fs::path dir = output_dir(f);
    std::ostringstream csv;
    write_samples(result.samples, csv);
    write_file_atomic(dir / (name + ".csv"), std::move(csv).str());
    write_json_file(truth_report(result.truth), dir / (name + "_truth.json"));
    std::cout << name << ": " << result.samples.size() << " samples, " << result.truth.size()
              << " injected events\n";
    return kExitOk;
}

int cmd_bench(const FlagValues& f, const RunConfig& cfg) {
    StreamingDetector detector(cfg.smoothing(), cfg.detector());
    std::uint64_t n = 0;
    std::uint64_t peaks = 0;
    double seconds = 0.0;

    if (!f.inputs.empty()) {
        const auto samples = read_samples(fs::path(single_input(f)));
        n = samples.size();
        const auto t0 = std::chrono::steady_clock::now();
        for (const TedSample& s : samples)
            peaks += detector.push(s).size();
        peaks += detector.flush().size();
        seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    } else {
        n = f.generate_n.value_or(10'000'000);
        SynthSpec spec;
        spec.length = n;
        spec.baseline_mean = 1.0;
        spec.drift = {0.05, 50000.0};
        spec.noise_amplitude = 0.12;
        spec.seed = cfg.seed;
        for (std::uint64_t start = 600; start + 40 < n; start += 1000)
            spec.events.push_back({start, 20, 0.8, 0});
        SynthStream gen(spec);

        const auto t0 = std::chrono::steady_clock::now();
        while (auto s = gen.next())
            peaks += detector.push(*s).size();
        peaks += detector.flush().size();
        seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    const double rate = seconds > 0.0 ? static_cast<double>(n) / seconds : 0.0;
    nlohmann::json j = {{"schema_version", kSchemaVersion},
                        {"samples", n},
                        {"peaks", peaks},
                        {"wall_seconds", seconds},
                        {"samples_per_second", rate},
                        {"config", config_echo(cfg)}};
    std::cout << j.dump(2) << "\n";
    if (f.output_dir)
        write_json_file(j, output_dir(f) / "bench.json");
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Streaming TED peak detection, layer aggregation and validation"};
    app.require_subcommand(1);

    FlagValues flags;
    CLI::App* detect_cmd = app.add_subcommand("detect", "Detect peaks in one TED stream CSV");
    CLI::App* layers_cmd =
        app.add_subcommand("layers", "Per-layer peak histogram and transition summary");
    CLI::App* regress_cmd =
        app.add_subcommand("regress", "Regress peak counts from detection reports on pore counts");
    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "3x3 (H, M) sensitivity sweep over stream CSVs");
    CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic stream from a spec");
    CLI::App* bench_cmd = app.add_subcommand("bench", "Measure streaming detection throughput");

    for (CLI::App* cmd : {detect_cmd, layers_cmd, regress_cmd, sweep_cmd, synth_cmd, bench_cmd})
        add_shared_flags(cmd, flags);
    for (CLI::App* cmd : {detect_cmd, layers_cmd, synth_cmd})
        cmd->add_option("--sample-id", flags.sample_id,
                        "Stream name for outputs (default: input stem)");
    for (CLI::App* cmd : {regress_cmd, sweep_cmd})
        cmd->add_option("--pores", flags.pores_path, "Pore-count CSV (sample_id,pore_count)");
    bench_cmd->add_option("--generate", flags.generate_n,
                          "Generate this many synthetic samples instead of reading --input");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        const RunConfig cfg = merge_config(flags);
        if (flags.print_config) {
            std::cout << render_config(cfg);
            return kExitOk;
        }
        cfg.smoothing().validate();
        cfg.detector().validate();

        if (detect_cmd->parsed())
            return cmd_detect(flags, cfg);
        if (layers_cmd->parsed())
            return cmd_layers(flags, cfg);
        if (regress_cmd->parsed())
            return cmd_regress(flags, cfg);
        if (sweep_cmd->parsed())
            return cmd_sweep(flags, cfg);
        if (synth_cmd->parsed())
            return cmd_synth(flags, cfg);
        if (bench_cmd->parsed())
            return cmd_bench(flags, cfg);
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
}
