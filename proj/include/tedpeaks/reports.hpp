#ifndef TEDPEAKS_REPORTS_HPP
#define TEDPEAKS_REPORTS_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "tedpeaks/layer_aggregation.hpp"
#include "tedpeaks/synth.hpp"
#include "tedpeaks/validation_stats.hpp"

namespace tedpeaks {

/// Present in every JSON artifact, for forward compatibility.
inline constexpr int kSchemaVersion = 1;

const char* boundary_name(BoundaryPolicy policy);
BoundaryPolicy parse_boundary(std::string_view name); // throws ConfigError

/// One regression scatter point as echoed in the regression report.
struct RegressionPoint {
    std::string sample_id;
    std::uint64_t peaks = 0;
    std::uint64_t pores = 0;
};

/// `{schema_version, sample_id, config:{h_abs,m_rel,min_run,window,boundary},
///   peak_count, samples_processed, short_input, intervals:[...]}`
nlohmann::json detection_report(const DetectionResult& result, const std::string& sample_id);

/// Histogram totals plus the embedded transition summary; the per-layer
/// series itself travels in the histogram CSV.
nlohmann::json layers_report(const LayerHistogram& hist, const TransitionSummary& transition);

/// `{schema_version, slope, intercept, r_squared, n_points, points:[...]}`
nlohmann::json regression_report(const RegressionResult& fit,
                                 std::span<const RegressionPoint> points);

/// `{schema_version, spec, reference_pores, cells:[...]}`
nlohmann::json sweep_report(const SweepSpec& spec, std::span<const SweepCell> cells,
                            std::uint64_t reference_pores);

/// `{schema_version, events:[{start,duration,amplitude,layer}]}`
nlohmann::json truth_report(std::span<const SynthEvent> events);

/// CSV with header `start,end,length,max_deviation,layer`. Returns bytes
/// written.
std::size_t write_intervals_csv(std::span<const PeakInterval> intervals, std::ostream& out);

/// Writes via a sibling temp file and rename, so readers never observe a
/// half-written artifact.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Pretty-printed JSON with a trailing newline, written atomically.
void write_json_file(const nlohmann::json& j, const std::filesystem::path& path);

} // namespace tedpeaks

#endif
