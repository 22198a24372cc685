#include "tedpeaks/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace tedpeaks {

namespace {

// Uniform in [0, 1) from the top 53 bits of one engine draw; avoids the
// implementation-defined std::uniform_real_distribution so identical seeds
// give identical streams on every platform.
double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1p-53;
}

} // namespace

void SynthSpec::validate() const {
    if (length < 1)
        throw ConfigError("length must be >= 1");
    if (!(baseline_mean > 0.0) || !std::isfinite(baseline_mean))
        throw ConfigError("baseline_mean must be positive and finite");
    if (drift.amplitude < 0.0 || !std::isfinite(drift.amplitude))
        throw ConfigError("drift amplitude must be non-negative and finite");
    if (drift.amplitude > 0.0 && !(drift.period > 0.0))
        throw ConfigError("drift period must be positive when drift amplitude is");
    if (noise_amplitude < 0.0 || !std::isfinite(noise_amplitude))
        throw ConfigError("noise_amplitude must be non-negative and finite");
    if (!(baseline_mean > drift.amplitude + noise_amplitude))
        throw ConfigError("baseline_mean must exceed drift plus noise amplitude "
                          "so generated values stay positive");

    for (std::size_t k = 0; k < events.size(); ++k) {
        const SynthEvent& e = events[k];
        if (!(e.amplitude > 0.0) || !std::isfinite(e.amplitude))
            throw ConfigError("event " + std::to_string(k) + " amplitude must be positive");
        if (e.duration < kMinEventDuration)
            throw ConfigError("event " + std::to_string(k) + " duration must be >= " +
                              std::to_string(kMinEventDuration));
        if (e.duration > length || e.start > length - e.duration)
            throw EventPastEnd("event " + std::to_string(k) + " extends past sample " +
                               std::to_string(length - 1));
        if (k > 0 && e.start < events[k - 1].start + events[k - 1].duration)
            throw OverlappingEvents("events " + std::to_string(k - 1) + " and " +
                                    std::to_string(k) + " overlap or are out of order");
    }

    if (!layer_starts.empty()) {
        if (layer_starts.front() != 0)
            throw ConfigError("layer boundaries must start at sample 0");
        for (std::size_t k = 0; k < layer_starts.size(); ++k) {
            if (k > 0 && layer_starts[k] <= layer_starts[k - 1])
                throw ConfigError("layer boundaries must be strictly increasing");
            if (layer_starts[k] >= length)
                throw ConfigError("layer boundary " + std::to_string(layer_starts[k]) +
                                  " is past the stream end");
        }
    }
}

std::vector<std::uint64_t> uniform_layer_starts(std::uint64_t length, std::uint32_t total_layers) {
    if (total_layers < 1)
        throw ConfigError("total_layers must be >= 1");
    if (length < total_layers)
        throw ConfigError("need at least one sample per layer");

    const std::uint64_t base = length / total_layers;
    const std::uint64_t rem = length % total_layers;
    std::vector<std::uint64_t> starts(total_layers);
    std::uint64_t pos = 0;
    for (std::uint32_t k = 0; k < total_layers; ++k) {
        starts[k] = pos;
        pos += base + (k < rem ? 1 : 0);
    }
    return starts;
}

SynthStream::SynthStream(const SynthSpec& spec) : spec_(spec), rng_(spec.seed) {
    spec_.validate();
    // Prime three noise draws so the very first sample already averages a
    // full 4-draw window.
    for (int k = 0; k < 3; ++k)
        ring_[k] = 2.0 * unit_uniform(rng_) - 1.0;

    truth_ = spec_.events;
    for (SynthEvent& e : truth_) {
        if (spec_.layer_starts.empty()) {
            e.layer = 1;
        } else {
            const auto it = std::upper_bound(spec_.layer_starts.begin(),
                                             spec_.layer_starts.end(), e.start);
            e.layer = static_cast<std::uint32_t>(it - spec_.layer_starts.begin());
        }
    }
}

double SynthStream::bump_at(std::uint64_t i) {
    const auto& evs = spec_.events;
    while (event_idx_ < evs.size() && evs[event_idx_].end() + 2 < i)
        ++event_idx_;

    double bump = 0.0;
    for (std::size_t j = event_idx_; j < evs.size() && evs[j].start <= i + 2; ++j) {
        const SynthEvent& e = evs[j];
        if (i < e.start) {
            bump += (e.start - i == 1 ? 2.0 : 1.0) * e.amplitude / 3.0;
        } else if (i <= e.end()) {
            bump += e.amplitude;
        } else {
            bump += (i - e.end() == 1 ? 2.0 : 1.0) * e.amplitude / 3.0;
        }
    }
    return bump;
}

std::uint32_t SynthStream::layer_at(std::uint64_t i) {
    const auto& starts = spec_.layer_starts;
    if (starts.empty())
        return 1;
    while (layer_idx_ + 1 < starts.size() && starts[layer_idx_ + 1] <= i)
        ++layer_idx_;
    return static_cast<std::uint32_t>(layer_idx_ + 1);
}

std::optional<TedSample> SynthStream::next() {
    if (i_ >= spec_.length)
        return std::nullopt;
    const std::uint64_t i = i_++;

    ring_[(i + 3) & 3] = 2.0 * unit_uniform(rng_) - 1.0;
    const double noise =
        0.25 * spec_.noise_amplitude * (ring_[0] + ring_[1] + ring_[2] + ring_[3]);

    double drift = 0.0;
    if (spec_.drift.amplitude > 0.0)
        drift = spec_.drift.amplitude *
                std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / spec_.drift.period);

    TedSample s;
    s.index = i;
    s.layer = layer_at(i);
    s.ted = spec_.baseline_mean + drift + noise + bump_at(i);
    return s;
}

SynthResult generate(const SynthSpec& spec) {
    SynthStream gen(spec);
    SynthResult result;
    result.samples.reserve(spec.length);
    while (auto s = gen.next())
        result.samples.push_back(*s);
    result.truth = gen.truth();
    return result;
}

namespace {

bool interval_matches_event(const PeakInterval& d, const SynthEvent& t, std::uint64_t tol) {
    if (d.start <= t.end() && t.start <= d.end)
        return true;
    const auto gap = [](std::uint64_t a, std::uint64_t b) { return a > b ? a - b : b - a; };
    return gap(d.start, t.start) <= tol && gap(d.end, t.end()) <= tol;
}

} // namespace

ScoreReport score(std::span<const PeakInterval> detected, std::span<const SynthEvent> truth,
                  std::uint64_t match_tolerance) {
    std::size_t i = 0, t = 0;
    std::uint64_t tp = 0;
    while (i < detected.size() && t < truth.size()) {
        if (interval_matches_event(detected[i], truth[t], match_tolerance)) {
            ++tp;
            ++i;
            ++t;
        } else if (detected[i].end < truth[t].end()) {
            ++i;
        } else {
            ++t;
        }
    }

    ScoreReport r;
    r.true_positives = tp;
    r.false_positives = detected.size() - tp;
    r.false_negatives = truth.size() - tp;
    if (!detected.empty())
        r.precision = static_cast<double>(tp) / static_cast<double>(detected.size());
    if (!truth.empty())
        r.recall = static_cast<double>(tp) / static_cast<double>(truth.size());
    r.count_error = static_cast<std::int64_t>(detected.size()) -
                    static_cast<std::int64_t>(truth.size());
    return r;
}

ReplaySuite make_replay_suite(std::uint64_t seed, double target_r2) {
    if (!(target_r2 > 0.0) || !(target_r2 < 1.0))
        throw ConfigError("target R^2 must lie in (0, 1)");

    constexpr std::array<std::uint64_t, 8> kEventCounts = {40, 70, 110, 160, 220, 280, 340, 400};
    constexpr double kSlope = 180.0;
    constexpr double kIntercept = 2500.0;
    const std::size_t n = kEventCounts.size();

    std::array<double, 8> es;
    double mean_e = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        es[i] = static_cast<double>(kEventCounts[i]);
        mean_e += es[i];
    }
    mean_e /= static_cast<double>(n);

    // Residual direction orthogonal to both the constant and the event
    // counts, so the calibrated noise moves R^2 without moving the fit.
    std::array<double, 8> v;
    double swe = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = (i % 2 == 0) ? 1.0 : -1.0;
        const double ec = es[i] - mean_e;
        v[i] = w;
        swe += w * ec;
        sxx += ec * ec;
    }
    double ss_v = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        v[i] -= (swe / sxx) * (es[i] - mean_e);
        ss_v += v[i] * v[i];
    }

    const double ss_reg = kSlope * kSlope * sxx;
    const double scale = std::sqrt(ss_reg * (1.0 - target_r2) / (target_r2 * ss_v));

    ReplaySuite suite;
    std::array<double, 8> pores_d;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = kSlope * es[i] + kIntercept + scale * v[i];
        if (!(p >= 1.0))
            throw ConfigError("target R^2 pushes a pore count below 1");
        const auto rounded = static_cast<std::uint64_t>(std::llround(p));
        pores_d[i] = static_cast<double>(rounded);
        suite.pores.push_back({"sample_" + std::to_string(i + 1), rounded});
        suite.event_counts.push_back(kEventCounts[i]);
    }

    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t count = kEventCounts[i];
        SynthSpec sp;
        sp.length = count * 1000 + 1200;
        sp.baseline_mean = 1.0;
        sp.drift = {0.05, 50000.0};
        sp.noise_amplitude = 0.12;
        sp.seed = seed ^ (0x9E3779B97F4A7C15ULL * (i + 1));

        std::mt19937_64 place(sp.seed + 1);
        sp.events.reserve(count);
        for (std::uint64_t k = 0; k < count; ++k) {
            SynthEvent e;
            e.start = 600 + k * 1000 + place() % 301;
            e.duration = 18 + place() % 8;
            e.amplitude = 0.8 + 0.2 * unit_uniform(place);
            sp.events.push_back(e);
        }

        SynthResult gen = generate(sp);
        suite.streams.push_back({suite.pores[i].sample_id, std::move(gen.samples)});
        suite.truth.push_back(std::move(gen.truth));
    }

    suite.truth_r2 = ols_fit(es, pores_d).r_squared;
    return suite;
}

} // namespace tedpeaks
