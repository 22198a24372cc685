#ifndef TEDPEAKS_SYNTH_HPP
#define TEDPEAKS_SYNTH_HPP

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tedpeaks/validation_stats.hpp"

namespace tedpeaks {

/// Shortest plateau the generator will inject; collapse signatures stay
/// elevated for at least this many rows.
inline constexpr std::uint64_t kMinEventDuration = 15;

class OverlappingEvents : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class EventPastEnd : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Slow additive baseline wander: amplitude * sin(2 pi i / period).
struct DriftSpec {
    double amplitude = 0.0; // a.u.
    double period = 0.0;    // samples; required positive when amplitude > 0
};

/// One injected collapse plateau. `layer` is filled by the generator from
/// the layer boundaries; any value given in a spec is ignored.
struct SynthEvent {
    std::uint64_t start = 0;    // first plateau sample
    std::uint64_t duration = 0; // plateau samples, >= kMinEventDuration
    double amplitude = 0.0;     // a.u. above baseline
    std::uint32_t layer = 0;

    std::uint64_t end() const { return start + duration - 1; } // inclusive
};

/// Recipe for one synthetic stream: positive baseline, slow drift,
/// band-limited noise (correlation scale about 4 samples, magnitude bounded
/// by noise_amplitude), and non-overlapping plateau events with 2-sample
/// entry/exit ramps.
struct SynthSpec {
    std::uint64_t length = 0;
    double baseline_mean = 1.0;
    DriftSpec drift;
    double noise_amplitude = 0.0;
    std::vector<SynthEvent> events;           // sorted, non-overlapping
    std::vector<std::uint64_t> layer_starts;  // first sample of each layer; empty: all layer 1
    std::uint64_t seed = 0;

    void validate() const;
};

/// Evenly splits [0, length) into total_layers layers. Requires
/// length >= total_layers.
std::vector<std::uint64_t> uniform_layer_starts(std::uint64_t length, std::uint32_t total_layers);

/// Incremental generator: next() yields samples 0..length-1 in order, then
/// nullopt. Deterministic for a fixed spec (seed included). O(1) memory, so
/// arbitrarily long benchmark streams never materialize.
class SynthStream {
public:
    explicit SynthStream(const SynthSpec& spec); // validates

    std::optional<TedSample> next();

    /// spec.events with layers resolved; fixed at construction.
    const std::vector<SynthEvent>& truth() const { return truth_; }
    std::uint64_t length() const { return spec_.length; }

private:
    double bump_at(std::uint64_t i);
    std::uint32_t layer_at(std::uint64_t i);

    SynthSpec spec_;
    std::mt19937_64 rng_;
    std::vector<SynthEvent> truth_;
    std::uint64_t i_ = 0;
    std::size_t event_idx_ = 0;
    std::size_t layer_idx_ = 0;
    double ring_[4] = {0.0, 0.0, 0.0, 0.0}; // last 4 noise draws
};

struct SynthResult {
    std::vector<TedSample> samples;
    std::vector<SynthEvent> truth;
};

/// Materializes the whole stream; identical to draining a SynthStream.
SynthResult generate(const SynthSpec& spec);

/// Detection quality against injected ground truth. precision is absent
/// when nothing was detected, recall when no events were injected.
struct ScoreReport {
    std::uint64_t true_positives = 0;
    std::uint64_t false_positives = 0;
    std::uint64_t false_negatives = 0;
    std::optional<double> precision;
    std::optional<double> recall;
    std::int64_t count_error = 0; // detected - injected
};

/// Greedy one-to-one matching of detected intervals to truth events, both
/// sorted. A pair matches when the intervals overlap or both endpoints
/// differ by at most match_tolerance samples.
ScoreReport score(std::span<const PeakInterval> detected, std::span<const SynthEvent> truth,
                  std::uint64_t match_tolerance = 5);

/// Eight synthetic streams with per-stream event counts spanning an order
/// of magnitude, plus pore counts calibrated so that regressing pores on
/// the true event counts gives R^2 = target_r2 (up to integer rounding of
/// the pore counts). truth_r2 is recomputed from the rounded counts.
struct ReplaySuite {
    std::vector<SampleStream> streams;
    std::vector<PoreRecord> pores;                // aligned with streams
    std::vector<std::uint64_t> event_counts;      // injected events per stream
    std::vector<std::vector<SynthEvent>> truth;   // per-stream ground truth
    double truth_r2 = 0.0;
};

ReplaySuite make_replay_suite(std::uint64_t seed, double target_r2 = 0.94);

} // namespace tedpeaks

#endif
