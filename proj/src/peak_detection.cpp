#include "tedpeaks/peak_detection.hpp"

#include <cmath>
#include <string>

namespace tedpeaks {

void DetectorConfig::validate() const {
    if (!(h_abs > 0.0) || !std::isfinite(h_abs))
        throw ConfigError("h_abs must be positive and finite");
    if (!(m_rel > 0.0) || !std::isfinite(m_rel))
        throw ConfigError("m_rel must be positive and finite");
    if (min_run < 1)
        throw ConfigError("min_run must be >= 1");
}

bool flag(double raw, double smoothed, const DetectorConfig& cfg) {
    const double d = raw - smoothed;
    if (d > cfg.h_abs)
        return true;
    return smoothed > 0.0 && d > smoothed * cfg.m_rel;
}

std::vector<PeakInterval> find_peak_intervals(std::span<const std::uint8_t> flags,
                                              std::size_t min_run) {
    if (min_run < 1)
        throw ConfigError("min_run must be >= 1");

    std::vector<PeakInterval> out;
    std::size_t i = 0;
    const std::size_t n = flags.size();
    while (i < n) {
        if (!flags[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && flags[j + 1])
            ++j;
        if (j - i + 1 >= min_run)
            out.push_back({i, j, 0.0, 0});
        i = j + 1;
    }
    return out;
}

std::uint64_t count_peaks(std::span<const std::uint64_t> flagged_indices, std::size_t min_run) {
    if (min_run < 1)
        throw ConfigError("min_run must be >= 1");

    std::uint64_t count = 0;
    std::size_t i = 0;
    const std::size_t n = flagged_indices.size();
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n) {
            if (flagged_indices[j + 1] <= flagged_indices[j])
                throw Error("count_peaks: flagged indices must be strictly increasing");
            if (flagged_indices[j + 1] != flagged_indices[j] + 1)
                break;
            ++j;
        }
        if (j - i + 1 >= min_run)
            ++count;
        i = j + 1;
    }
    return count;
}

namespace detail {

std::optional<PeakInterval> RunTracker::close() {
    active_ = false;
    if (run_.length() >= cfg_.min_run)
        return run_;
    return std::nullopt;
}

std::optional<PeakInterval> RunTracker::feed(std::uint64_t index, double raw, double smoothed,
                                             std::uint32_t layer) {
    if (flag(raw, smoothed, cfg_)) {
        const double d = raw - smoothed;
        if (!active_) {
            active_ = true;
            run_ = {index, index, d, layer};
        } else {
            run_.end = index;
            if (d > run_.max_deviation)
                run_.max_deviation = d;
        }
        return std::nullopt;
    }
    if (active_)
        return close();
    return std::nullopt;
}

std::optional<PeakInterval> RunTracker::finish() {
    if (active_)
        return close();
    return std::nullopt;
}

} // namespace detail

std::vector<PeakInterval> intervals_from_smoothed(std::span<const TedSample> samples,
                                                  std::span<const double> smoothed,
                                                  const DetectorConfig& cfg) {
    cfg.validate();
    if (samples.size() != smoothed.size())
        throw Error("smoothed series length differs from sample count");

    std::vector<PeakInterval> out;
    detail::RunTracker tracker(cfg);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (auto iv = tracker.feed(i, samples[i].ted, smoothed[i], samples[i].layer))
            out.push_back(*iv);
    }
    if (auto iv = tracker.finish())
        out.push_back(*iv);
    return out;
}

DetectionResult detect(std::span<const TedSample> samples, const SmoothingConfig& s_cfg,
                       const DetectorConfig& d_cfg) {
    s_cfg.validate();
    d_cfg.validate();

    std::vector<double> raw;
    raw.reserve(samples.size());
    for (const TedSample& s : samples)
        raw.push_back(s.ted);

    SmoothResult sm = smooth(raw, s_cfg);

    DetectionResult result;
    result.intervals = intervals_from_smoothed(samples, sm.values, d_cfg);
    result.peak_count = result.intervals.size();
    result.samples_processed = samples.size();
    result.smoothing = s_cfg;
    result.detector = d_cfg;
    result.short_input = sm.short_input;
    return result;
}

StreamingDetector::StreamingDetector(const SmoothingConfig& s_cfg, const DetectorConfig& d_cfg)
    : s_cfg_(s_cfg), d_cfg_(d_cfg), smoother_(s_cfg), tracker_(d_cfg) {
    d_cfg_.validate();
}

void StreamingDetector::reset() {
    smoother_.reset();
    tracker_ = detail::RunTracker(d_cfg_);
    pending_.clear();
    peaks_emitted_ = 0;
}

void StreamingDetector::consume(std::uint64_t index, double smoothed,
                                std::vector<PeakInterval>& out) {
    const auto [raw, layer] = pending_.front();
    pending_.pop_front();
    if (auto iv = tracker_.feed(index, raw, smoothed, layer)) {
        out.push_back(*iv);
        ++peaks_emitted_;
    }
}

std::vector<PeakInterval> StreamingDetector::push(const TedSample& sample) {
    pending_.emplace_back(sample.ted, sample.layer);
    std::vector<PeakInterval> out;
    if (auto emitted = smoother_.push(sample.ted))
        consume(emitted->first, emitted->second, out);
    return out;
}

std::vector<PeakInterval> StreamingDetector::flush() {
    std::vector<PeakInterval> out;
    for (const auto& [index, value] : smoother_.flush())
        consume(index, value, out);
    if (auto iv = tracker_.finish()) {
        out.push_back(*iv);
        ++peaks_emitted_;
    }
    return out;
}

} // namespace tedpeaks
