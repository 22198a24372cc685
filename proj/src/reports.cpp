#include "tedpeaks/reports.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <ostream>

namespace tedpeaks {

const char* boundary_name(BoundaryPolicy policy) {
    return policy == BoundaryPolicy::hold ? "hold" : "shrink";
}

BoundaryPolicy parse_boundary(std::string_view name) {
    if (name == "shrink")
        return BoundaryPolicy::shrink;
    if (name == "hold")
        return BoundaryPolicy::hold;
    throw ConfigError("unknown boundary policy '" + std::string(name) +
                      "', expected shrink or hold");
}

namespace {

nlohmann::json config_json(const DetectorConfig& d, const SmoothingConfig& s) {
    return {{"h_abs", d.h_abs},
            {"m_rel", d.m_rel},
            {"min_run", d.min_run},
            {"window", s.window},
            {"boundary", boundary_name(s.boundary)}};
}

void append_double(std::string& buf, double v) {
    std::array<char, 32> tmp;
    const auto [ptr, ec] = std::to_chars(tmp.data(), tmp.data() + tmp.size(), v);
    (void)ec;
    buf.append(tmp.data(), ptr);
}

} // namespace

nlohmann::json detection_report(const DetectionResult& result, const std::string& sample_id) {
    nlohmann::json intervals = nlohmann::json::array();
    for (const PeakInterval& iv : result.intervals) {
        intervals.push_back({{"start", iv.start},
                             {"end", iv.end},
                             {"length", iv.length()},
                             {"max_deviation", iv.max_deviation},
                             {"layer", iv.layer}});
    }
    return {{"schema_version", kSchemaVersion},
            {"sample_id", sample_id},
            {"config", config_json(result.detector, result.smoothing)},
            {"peak_count", result.peak_count},
            {"samples_processed", result.samples_processed},
            {"short_input", result.short_input},
            {"intervals", std::move(intervals)}};
}

nlohmann::json layers_report(const LayerHistogram& hist, const TransitionSummary& transition) {
    nlohmann::json t = {{"transition_layer", transition.transition_layer},
                        {"mean_before", transition.mean_before},
                        {"mean_after", transition.mean_after},
                        {"ratio", nullptr}};
    if (transition.ratio)
        t["ratio"] = *transition.ratio;
    return {{"schema_version", kSchemaVersion},
            {"total_layers", hist.total_layers},
            {"total_peaks", hist.total()},
            {"transition", std::move(t)}};
}

nlohmann::json regression_report(const RegressionResult& fit,
                                 std::span<const RegressionPoint> points) {
    nlohmann::json pts = nlohmann::json::array();
    for (const RegressionPoint& p : points)
        pts.push_back({{"sample_id", p.sample_id}, {"peaks", p.peaks}, {"pores", p.pores}});
    return {{"schema_version", kSchemaVersion},
            {"slope", fit.slope},
            {"intercept", fit.intercept},
            {"r_squared", fit.r_squared},
            {"n_points", fit.n_points},
            {"points", std::move(pts)}};
}

nlohmann::json sweep_report(const SweepSpec& spec, std::span<const SweepCell> cells,
                            std::uint64_t reference_pores) {
    nlohmann::json cs = nlohmann::json::array();
    for (const SweepCell& c : cells) {
        cs.push_back({{"h", c.h},
                      {"m", c.m},
                      {"r_squared", c.r_squared},
                      {"total_peaks", c.total_peaks},
                      {"normalized_peaks", c.normalized_peaks}});
    }
    return {{"schema_version", kSchemaVersion},
            {"spec",
             {{"h_center", spec.h_center},
              {"m_center", spec.m_center},
              {"h_step", spec.h_step},
              {"m_step", spec.m_step}}},
            {"reference_pores", reference_pores},
            {"cells", std::move(cs)}};
}

nlohmann::json truth_report(std::span<const SynthEvent> events) {
    nlohmann::json evs = nlohmann::json::array();
    for (const SynthEvent& e : events) {
        evs.push_back({{"start", e.start},
                       {"duration", e.duration},
                       {"amplitude", e.amplitude},
                       {"layer", e.layer}});
    }
    return {{"schema_version", kSchemaVersion}, {"events", std::move(evs)}};
}

std::size_t write_intervals_csv(std::span<const PeakInterval> intervals, std::ostream& out) {
    std::string buf = "start,end,length,max_deviation,layer\n";
    for (const PeakInterval& iv : intervals) {
        buf += std::to_string(iv.start);
        buf += ',';
        buf += std::to_string(iv.end);
        buf += ',';
        buf += std::to_string(iv.length());
        buf += ',';
        append_double(buf, iv.max_deviation);
        buf += ',';
        buf += std::to_string(iv.layer);
        buf += '\n';
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoFailure("write failed");
    return buf.size();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoFailure("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw IoFailure("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw IoFailure("cannot move " + tmp.string() + " into place: " + ec.message());
}

void write_json_file(const nlohmann::json& j, const std::filesystem::path& path) {
    write_file_atomic(path, j.dump(2) + "\n");
}

} // namespace tedpeaks
