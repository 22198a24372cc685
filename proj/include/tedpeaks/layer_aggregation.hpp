#ifndef TEDPEAKS_LAYER_AGGREGATION_HPP
#define TEDPEAKS_LAYER_AGGREGATION_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "tedpeaks/peak_detection.hpp"

namespace tedpeaks {

class LayerOutOfRange : public Error {
public:
    LayerOutOfRange(std::uint32_t layer, std::uint32_t total_layers);
};

class DegenerateSplit : public Error {
public:
    using Error::Error;
};

/// Dense per-layer peak tally. Layers are 1-based; every layer up to
/// total_layers is present, zero-count layers included.
struct LayerHistogram {
    std::uint32_t total_layers = 0;
    std::vector<std::uint64_t> counts; // counts[k] belongs to layer k + 1

    std::uint64_t at(std::uint32_t layer) const; // throws LayerOutOfRange
    std::uint64_t total() const;
};

/// Peaks-per-layer means on either side of a printing-pattern transition.
/// ratio is absent when no peaks occur before the transition.
struct TransitionSummary {
    std::uint32_t transition_layer = 400;
    double mean_before = 0.0; // layers < transition_layer
    double mean_after = 0.0;  // layers >= transition_layer
    std::optional<double> ratio;
};

/// Tallies detected intervals by their layer label. Throws LayerOutOfRange
/// when an interval's layer is 0 or exceeds total_layers.
LayerHistogram per_layer_counts(const DetectionResult& result, std::uint32_t total_layers);

/// Splits the histogram at transition_layer and compares mean peaks/layer
/// on each side. Requires 1 < transition_layer <= total_layers; throws
/// DegenerateSplit otherwise.
TransitionSummary transition_summary(const LayerHistogram& hist, std::uint32_t transition_layer);

/// CSV with header `layer,peak_count`, one row per layer, 1..total_layers.
/// Returns bytes written.
std::size_t write_histogram_csv(const LayerHistogram& hist, std::ostream& out);
std::size_t write_histogram_csv(const LayerHistogram& hist, const std::filesystem::path& path);

} // namespace tedpeaks

#endif
