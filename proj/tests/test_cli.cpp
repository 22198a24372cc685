#include <doctest.h>

#include <tedpeaks/peak_detection.hpp>
#include <tedpeaks/signal_model.hpp>
#include <tedpeaks/synth.hpp>

#include <json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace tedpeaks;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

fs::path scratch_dir() {
    static std::atomic<int> counter{0};
    const auto dir = fs::temp_directory_path() /
                     ("tedpeaks_cli_" + std::to_string(::getpid()) + "_" +
                      std::to_string(counter.fetch_add(1)));
    fs::create_directories(dir);
    return dir;
}

/// Runs the tool with the given arguments, capturing exit code and both
/// output streams. The binary location comes from TEDPEAKS_BIN.
RunResult run_cli(const std::string& args, const fs::path& dir) {
    const char* bin = std::getenv("TEDPEAKS_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "TEDPEAKS_BIN must point at the tool binary");

    const fs::path out_file = dir / "stdout.txt";
    const fs::path err_file = dir / "stderr.txt";
    const std::string command = "'" + std::string(bin) + "' " + args + " > '" +
                                out_file.string() + "' 2> '" + err_file.string() + "'";
    const int status = std::system(command.c_str());

    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = slurp(out_file);
    result.err = slurp(err_file);
    return result;
}

fs::path write_stream(const fs::path& dir, const std::string& name,
                      const std::vector<TedSample>& samples) {
    const fs::path path = dir / name;
    write_samples(samples, path);
    return path;
}

std::vector<TedSample> stream_with_events(std::uint64_t length, std::size_t n_events,
                                          std::uint64_t seed) {
    SynthSpec spec;
    spec.length = length;
    spec.baseline_mean = 1.0;
    spec.noise_amplitude = 0.05;
    spec.seed = seed;
    spec.layer_starts = uniform_layer_starts(length, 12);
    for (std::size_t k = 0; k < n_events; ++k)
        spec.events.push_back({500 + static_cast<std::uint64_t>(k) * 700, 20, 1.0, 0});
    return generate(spec).samples;
}

nlohmann::json load_json(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE_MESSAGE(in.good(), "missing artifact " << path.string());
    return nlohmann::json::parse(in);
}

} // namespace

TEST_CASE("detect writes a report that matches the library pipeline") {
    const auto dir = scratch_dir();
    const auto samples = stream_with_events(8000, 6, 21);
    const auto input = write_stream(dir, "plate7.csv", samples);

    const auto run = run_cli("detect --input '" + input.string() + "' --output-dir '" +
                                 dir.string() + "' --window 300",
                             dir);
    CHECK(run.exit_code == 0);

    const auto report = load_json(dir / "plate7_detection.json");
    CHECK(report.at("schema_version") == 1);
    CHECK(report.at("sample_id") == "plate7");
    CHECK(report.at("config").at("window") == 300);
    CHECK(report.at("config").at("h_abs") == 0.335);

    SmoothingConfig s_cfg;
    s_cfg.window = 300;
    const auto want = detect(samples, s_cfg, {});
    CHECK(report.at("peak_count") == want.peak_count);
    CHECK(report.at("samples_processed") == want.samples_processed);
    REQUIRE(report.at("intervals").size() == want.intervals.size());
    for (std::size_t k = 0; k < want.intervals.size(); ++k) {
        CHECK(report.at("intervals")[k].at("start") == want.intervals[k].start);
        CHECK(report.at("intervals")[k].at("end") == want.intervals[k].end);
        CHECK(report.at("intervals")[k].at("layer") == want.intervals[k].layer);
    }

    const auto csv = slurp(dir / "plate7_intervals.csv");
    CHECK(csv.rfind("start,end,length,max_deviation,layer\n", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("header-only input detects zero peaks") {
    const auto dir = scratch_dir();
    const fs::path input = dir / "empty.csv";
    std::ofstream(input) << kTedCsvHeader << "\n";

    const auto run = run_cli(
        "detect --input '" + input.string() + "' --output-dir '" + dir.string() + "'", dir);
    CHECK(run.exit_code == 0);
    const auto report = load_json(dir / "empty_detection.json");
    CHECK(report.at("peak_count") == 0);
    CHECK(report.at("short_input") == true);
    fs::remove_all(dir);
}

TEST_CASE("exit codes separate input and config failures") {
    const auto dir = scratch_dir();

    SUBCASE("missing input file") {
        const auto run = run_cli("detect --input '" + (dir / "nope.csv").string() + "'", dir);
        CHECK(run.exit_code == 2);
        CHECK(run.err.find("nope.csv") != std::string::npos);
    }
    SUBCASE("malformed stream") {
        const fs::path input = dir / "bad.csv";
        std::ofstream(input) << kTedCsvHeader << "\n5,1,,,not_a_number\n";
        const auto run = run_cli("detect --input '" + input.string() + "'", dir);
        CHECK(run.exit_code == 2);
    }
    SUBCASE("unusable window") {
        const fs::path input = dir / "ok.csv";
        std::ofstream(input) << kTedCsvHeader << "\n";
        const auto run =
            run_cli("detect --input '" + input.string() + "' --window 3", dir);
        CHECK(run.exit_code == 3);
    }
    SUBCASE("unknown preset") {
        const auto run = run_cli("detect --input x.csv --preset turbo", dir);
        CHECK(run.exit_code == 3);
        CHECK(run.err.find("turbo") != std::string::npos);
    }
    SUBCASE("unknown flag") {
        const auto run = run_cli("detect --frobnicate", dir);
        CHECK(run.exit_code == 3);
    }
    SUBCASE("unknown config key") {
        const fs::path cfg = dir / "bad.cfg";
        std::ofstream(cfg) << "wibble = 4\n";
        const auto run = run_cli("detect --input x.csv --config '" + cfg.string() + "'", dir);
        CHECK(run.exit_code == 3);
        CHECK(run.err.find("wibble") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("print-config round trips through a config file") {
    const auto dir = scratch_dir();
    const auto run1 = run_cli("detect --print-config --window 240 --preset aps --min-run 18", dir);
    REQUIRE(run1.exit_code == 0);
    CHECK(run1.out.find("window = 240\n") != std::string::npos);
    CHECK(run1.out.find("h_abs = 0.03\n") != std::string::npos);
    CHECK(run1.out.find("m_rel = 0.02\n") != std::string::npos);
    CHECK(run1.out.find("min_run = 18\n") != std::string::npos);

    const fs::path cfg = dir / "echo.cfg";
    std::ofstream(cfg) << run1.out;
    const auto run2 =
        run_cli("detect --print-config --config '" + cfg.string() + "'", dir);
    REQUIRE(run2.exit_code == 0);
    CHECK(run2.out == run1.out);
    fs::remove_all(dir);
}

TEST_CASE("flags override config files which override defaults") {
    const auto dir = scratch_dir();
    const fs::path cfg = dir / "run.cfg";
    std::ofstream(cfg) << "h_abs = 0.5\nwindow = 150  # trailing comment\n";

    const auto run = run_cli(
        "detect --print-config --config '" + cfg.string() + "' --h-abs 0.4", dir);
    REQUIRE(run.exit_code == 0);
    CHECK(run.out.find("h_abs = 0.4\n") != std::string::npos);
    CHECK(run.out.find("window = 150\n") != std::string::npos);

    const auto preset_run = run_cli("detect --print-config --preset aps --h-abs 0.4", dir);
    REQUIRE(preset_run.exit_code == 0);
    CHECK(preset_run.out.find("h_abs = 0.4\n") != std::string::npos);
    CHECK(preset_run.out.find("m_rel = 0.02\n") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("layers histogram conserves the detection total") {
    const auto dir = scratch_dir();
    const auto samples = stream_with_events(9000, 8, 4);
    const auto input = write_stream(dir, "build4.csv", samples);

    const auto run = run_cli("layers --input '" + input.string() + "' --output-dir '" +
                                 dir.string() +
                                 "' --window 300 --total-layers 12 --transition-layer 6",
                             dir);
    REQUIRE(run.exit_code == 0);

    const auto j = load_json(dir / "build4_layers.json");
    CHECK(j.at("total_layers") == 12);
    CHECK(j.at("transition").at("transition_layer") == 6);

    const auto csv = slurp(dir / "build4_layer_histogram.csv");
    std::istringstream rows(csv);
    std::string line;
    std::getline(rows, line);
    CHECK(line == "layer,peak_count");
    std::uint64_t total = 0;
    std::size_t n_rows = 0;
    while (std::getline(rows, line)) {
        ++n_rows;
        total += std::stoull(line.substr(line.find(',') + 1));
    }
    CHECK(n_rows == 12);
    CHECK(total == j.at("total_peaks").get<std::uint64_t>());

    SmoothingConfig s_cfg;
    s_cfg.window = 300;
    CHECK(total == detect(samples, s_cfg, {}).peak_count);
    fs::remove_all(dir);
}

TEST_CASE("regress pairs detection reports with pore counts") {
    const auto dir = scratch_dir();
    const std::uint64_t peaks[] = {10, 20, 30, 40};
    std::string inputs;
    for (std::size_t k = 0; k < 4; ++k) {
        const fs::path path = dir / ("s" + std::to_string(k) + ".json");
        std::ofstream(path) << nlohmann::json{{"sample_id", "s" + std::to_string(k)},
                                              {"peak_count", peaks[k]}}
                                   .dump();
        inputs += " --input '" + path.string() + "'";
    }
    const fs::path pores = dir / "pores.csv";
    std::ofstream(pores) << "sample_id,pore_count\ns0,1100\ns1,2100\ns2,3100\ns3,4100\n";

    SUBCASE("perfectly affine counts give unit r squared") {
        const auto run = run_cli("regress" + inputs + " --pores '" + pores.string() +
                                     "' --output-dir '" + dir.string() + "'",
                                 dir);
        REQUIRE(run.exit_code == 0);
        const auto j = load_json(dir / "regression.json");
        CHECK(j.at("r_squared").get<double>() == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(j.at("slope").get<double>() == doctest::Approx(100.0).epsilon(1e-9));
        CHECK(j.at("intercept").get<double>() == doctest::Approx(100.0).epsilon(1e-9));
        CHECK(j.at("points").size() == 4);
    }
    SUBCASE("a report without a pore record is a config error") {
        const fs::path orphan = dir / "s9.json";
        std::ofstream(orphan) << nlohmann::json{{"sample_id", "s9"}, {"peak_count", 5}}.dump();
        const auto run = run_cli("regress" + inputs + " --input '" + orphan.string() +
                                     "' --pores '" + pores.string() + "'",
                                 dir);
        CHECK(run.exit_code == 3);
        CHECK(run.err.find("s9") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("sweep emits nine cells in h major order") {
    const auto dir = scratch_dir();
    std::string inputs;
    std::string pores_text = "sample_id,pore_count\n";
    const std::size_t counts[] = {3, 7, 12};
    for (std::size_t k = 0; k < 3; ++k) {
        const std::string name = "coupon" + std::to_string(k);
        write_stream(dir, name + ".csv",
                     stream_with_events(600 + counts[k] * 700, counts[k], 50 + k));
        inputs += " --input '" + (dir / (name + ".csv")).string() + "'";
        pores_text += name + "," + std::to_string(900 + 400 * counts[k]) + "\n";
    }
    const fs::path pores = dir / "pores.csv";
    std::ofstream(pores) << pores_text;

    const auto run = run_cli("sweep" + inputs + " --pores '" + pores.string() +
                                 "' --output-dir '" + dir.string() + "' --window 300",
                             dir);
    REQUIRE_MESSAGE(run.exit_code == 0, run.err);

    const auto j = load_json(dir / "sweep.json");
    REQUIRE(j.at("cells").size() == 9);
    CHECK(j.at("cells")[0].at("h").get<double>() == doctest::Approx(0.28).epsilon(1e-12));
    CHECK(j.at("cells")[0].at("m").get<double>() == doctest::Approx(0.15).epsilon(1e-12));
    CHECK(j.at("cells")[8].at("h").get<double>() == doctest::Approx(0.39).epsilon(1e-12));
    CHECK(j.at("cells")[8].at("m").get<double>() == doctest::Approx(0.25).epsilon(1e-12));
    const auto reference = j.at("reference_pores").get<std::uint64_t>();
    std::uint64_t want_reference = 0;
    for (const std::size_t c : counts)
        want_reference += 900 + 400 * c;
    CHECK(reference == want_reference);
    for (const auto& cell : j.at("cells"))
        CHECK(cell.at("normalized_peaks").get<double>() ==
              doctest::Approx(cell.at("total_peaks").get<double>() /
                              static_cast<double>(reference))
                  .epsilon(1e-12));
    fs::remove_all(dir);
}

TEST_CASE("synth is reproducible and honors seed overrides") {
    const auto dir = scratch_dir();
    const fs::path spec = dir / "recipe.cfg";
    std::ofstream(spec) << "length = 4000\nbaseline_mean = 1\nnoise_amplitude = 0.08\n"
                        << "drift_amplitude = 0.04\ndrift_period = 900\ntotal_layers = 5\n"
                        << "seed = 11\nevent = 700,20,0.9\nevent = 2500,25,0.7\n";

    const std::string base_args = "synth --input '" + spec.string() + "'";
    const auto run1 =
        run_cli(base_args + " --output-dir '" + (dir / "a").string() + "'", dir);
    const auto run2 =
        run_cli(base_args + " --output-dir '" + (dir / "b").string() + "'", dir);
    REQUIRE(run1.exit_code == 0);
    REQUIRE(run2.exit_code == 0);
    CHECK(slurp(dir / "a" / "recipe.csv") == slurp(dir / "b" / "recipe.csv"));

    const auto truth = load_json(dir / "a" / "recipe_truth.json");
    REQUIRE(truth.at("events").size() == 2);
    CHECK(truth.at("events")[0].at("start") == 700);
    CHECK(truth.at("events")[1].at("duration") == 25);

    const auto run3 = run_cli(
        base_args + " --seed 12 --output-dir '" + (dir / "c").string() + "'", dir);
    REQUIRE(run3.exit_code == 0);
    CHECK(slurp(dir / "a" / "recipe.csv") != slurp(dir / "c" / "recipe.csv"));

    std::istringstream csv(slurp(dir / "a" / "recipe.csv"));
    const auto samples = read_samples(csv);
    CHECK(samples.size() == 4000);
    CHECK(samples.back().layer == 5);
    fs::remove_all(dir);
}

TEST_CASE("bench reports throughput on a small generated stream") {
    const auto dir = scratch_dir();
    const auto run = run_cli("bench --generate 50000 --window 200", dir);
    REQUIRE(run.exit_code == 0);
    const auto j = nlohmann::json::parse(run.out);
    CHECK(j.at("samples") == 50000);
    CHECK(j.at("peaks").get<std::uint64_t>() > 0);
    CHECK(j.at("samples_per_second").get<double>() > 0.0);
    fs::remove_all(dir);
}
