#ifndef TEDPEAKS_VALIDATION_STATS_HPP
#define TEDPEAKS_VALIDATION_STATS_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tedpeaks/peak_detection.hpp"

namespace tedpeaks {

/// Regression input with zero spread (constant xs or constant ys).
class DegenerateVariance : public Error {
public:
    using Error::Error;
};

class ZeroReference : public Error {
public:
    using Error::Error;
};

struct RegressionResult {
    double slope = 0.0;     // pores per peak
    double intercept = 0.0; // pores
    double r_squared = 0.0; // in [0, 1]
    std::size_t n_points = 0;
};

/// Ordinary least squares with intercept: minimizes sum of squared
/// residuals of ys against slope * xs + intercept. Needs >= 3 points and
/// spread in both variables.
RegressionResult ols_fit(std::span<const double> xs, std::span<const double> ys);

/// total_peaks / reference_pores. Throws ZeroReference when the reference
/// is zero.
double normalize_total(std::uint64_t total_peaks, std::uint64_t reference_pores);

/// 3x3 threshold grid around a center (H, M) point.
struct SweepSpec {
    double h_center = 0.335;
    double m_center = 0.2;
    double h_step = 0.055;
    double m_step = 0.05;

    std::array<double, 3> h_values() const;
    std::array<double, 3> m_values() const;
    void validate() const; // throws ConfigError unless all nine cells positive
};

struct SweepCell {
    double h = 0.0;
    double m = 0.0;
    double r_squared = 0.0;
    std::uint64_t total_peaks = 0;
    double normalized_peaks = 0.0; // total_peaks / reference pore total
};

/// One named sensor stream, paired with a PoreRecord by sample_id.
struct SampleStream {
    std::string sample_id;
    std::vector<TedSample> samples;
};

/// Runs the detection pipeline over every stream at each of the nine (h, m)
/// cells and regresses per-stream peak counts against pore counts. Each
/// stream is smoothed once; thresholds do not affect smoothing, so every
/// cell matches a standalone detect run bit for bit. normalize_by defaults
/// to the summed pore counts. Cells are ordered h-major.
std::vector<SweepCell> sensitivity_sweep(std::span<const SampleStream> streams,
                                         std::span<const PoreRecord> pores,
                                         const SweepSpec& spec, const SmoothingConfig& s_cfg = {},
                                         const DetectorConfig& base = {},
                                         std::optional<std::uint64_t> normalize_by = std::nullopt);

} // namespace tedpeaks

#endif
