#ifndef TEDPEAKS_PEAK_DETECTION_HPP
#define TEDPEAKS_PEAK_DETECTION_HPP

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "tedpeaks/signal_model.hpp"
#include "tedpeaks/smoothing.hpp"

namespace tedpeaks {

/// Threshold bundle for peak flagging: absolute deviation H, relative
/// deviation M, and the minimum run length that qualifies as a peak.
struct DetectorConfig {
    double h_abs = 0.335;
    double m_rel = 0.2;
    std::size_t min_run = 15;

    /// Part-scale thresholds (the defaults).
    static DetectorConfig part() { return {}; }
    /// Thresholds for the lower-magnitude APS material system.
    static DetectorConfig aps() { return {0.03, 0.02, 15}; }

    void validate() const; // throws ConfigError
};

/// Maximal run of flagged samples, closed on both ends. `layer` is the layer
/// of the start sample; `max_deviation` is the largest raw - smoothed gap
/// inside the run.
struct PeakInterval {
    std::uint64_t start = 0;
    std::uint64_t end = 0; // inclusive
    double max_deviation = 0.0;
    std::uint32_t layer = 0;

    std::uint64_t length() const { return end - start + 1; }
    bool operator==(const PeakInterval&) const = default;
};

struct DetectionResult {
    std::vector<PeakInterval> intervals; // sorted by start, non-overlapping
    std::uint64_t peak_count = 0;        // == intervals.size()
    std::uint64_t samples_processed = 0;
    SmoothingConfig smoothing;
    DetectorConfig detector;
    bool short_input = false; // series was too short to smooth
};

/// True iff d = raw - smoothed exceeds the absolute threshold, or exceeds
/// the relative threshold m_rel * smoothed. The relative test only applies
/// when smoothed > 0; only positive deviations ever flag.
bool flag(double raw, double smoothed, const DetectorConfig& cfg);

/// All maximal runs of set flags with length >= min_run, in index order.
/// Indices are positions in `flags`; max_deviation and layer stay zero
/// since a bare mask carries neither.
std::vector<PeakInterval> find_peak_intervals(std::span<const std::uint8_t> flags,
                                              std::size_t min_run);

/// Number of maximal runs of consecutive integers with length >= min_run.
/// Equals find_peak_intervals on the equivalent boolean mask. Indices must
/// be strictly increasing.
std::uint64_t count_peaks(std::span<const std::uint64_t> flagged_indices, std::size_t min_run);

/// Flagging and run grouping over an already smoothed series. `smoothed`
/// must align with `samples` element for element. Interval indices are
/// stream positions (equal to the row index for contiguous streams).
std::vector<PeakInterval> intervals_from_smoothed(std::span<const TedSample> samples,
                                                  std::span<const double> smoothed,
                                                  const DetectorConfig& cfg);

/// Full pipeline: smooth, flag, group runs, count.
DetectionResult detect(std::span<const TedSample> samples, const SmoothingConfig& s_cfg = {},
                       const DetectorConfig& d_cfg = {});

namespace detail {

/// Sequential run grouper shared by batch and streaming detection so both
/// produce bit-identical intervals. feed() takes samples in index order and
/// returns an interval when a qualifying run closes; finish() closes a run
/// still open at end of stream.
class RunTracker {
public:
    explicit RunTracker(const DetectorConfig& cfg) : cfg_(cfg) {}

    std::optional<PeakInterval> feed(std::uint64_t index, double raw, double smoothed,
                                     std::uint32_t layer);
    std::optional<PeakInterval> finish();

private:
    std::optional<PeakInterval> close();

    DetectorConfig cfg_;
    bool active_ = false;
    PeakInterval run_{};
};

} // namespace detail

/// Streaming form of detect(): feed samples in stream order, collect
/// intervals as their closing non-flagged sample is seen, then flush() at
/// end of stream. The emitted interval set is bit-identical to batch
/// detect() on the same samples.
class StreamingDetector {
public:
    explicit StreamingDetector(const SmoothingConfig& s_cfg = {},
                               const DetectorConfig& d_cfg = {});

    std::vector<PeakInterval> push(const TedSample& sample);
    std::vector<PeakInterval> flush();

    std::uint64_t samples_seen() const { return smoother_.samples_seen(); }
    std::uint64_t peaks_emitted() const { return peaks_emitted_; }
    bool flushed() const { return smoother_.flushed(); }
    bool short_input() const { return smoother_.short_input(); }
    const SmoothingConfig& smoothing() const { return s_cfg_; }
    const DetectorConfig& detector() const { return d_cfg_; }
    void reset();

private:
    void consume(std::uint64_t index, double smoothed, std::vector<PeakInterval>& out);

    SmoothingConfig s_cfg_;
    DetectorConfig d_cfg_;
    StreamingSmoother smoother_;
    detail::RunTracker tracker_;
    std::deque<std::pair<double, std::uint32_t>> pending_; // raw, layer awaiting smoothing
    std::uint64_t peaks_emitted_ = 0;
};

} // namespace tedpeaks

#endif
