#include "tedpeaks/layer_aggregation.hpp"

#include <fstream>
#include <numeric>
#include <ostream>
#include <string>

namespace tedpeaks {

LayerOutOfRange::LayerOutOfRange(std::uint32_t layer, std::uint32_t total_layers)
    : Error("layer " + std::to_string(layer) + " outside [1, " + std::to_string(total_layers) +
            "]") {}

std::uint64_t LayerHistogram::at(std::uint32_t layer) const {
    if (layer < 1 || layer > total_layers)
        throw LayerOutOfRange(layer, total_layers);
    return counts[layer - 1];
}

std::uint64_t LayerHistogram::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

LayerHistogram per_layer_counts(const DetectionResult& result, std::uint32_t total_layers) {
    if (total_layers < 1)
        throw ConfigError("total_layers must be >= 1");

    LayerHistogram hist;
    hist.total_layers = total_layers;
    hist.counts.assign(total_layers, 0);
    for (const PeakInterval& iv : result.intervals) {
        if (iv.layer < 1 || iv.layer > total_layers)
            throw LayerOutOfRange(iv.layer, total_layers);
        ++hist.counts[iv.layer - 1];
    }
    return hist;
}

TransitionSummary transition_summary(const LayerHistogram& hist, std::uint32_t transition_layer) {
    if (transition_layer <= 1 || transition_layer > hist.total_layers)
        throw DegenerateSplit("transition layer " + std::to_string(transition_layer) +
                              " leaves an empty side in [1, " +
                              std::to_string(hist.total_layers) + "]");

    std::uint64_t before = 0;
    std::uint64_t after = 0;
    for (std::uint32_t layer = 1; layer <= hist.total_layers; ++layer) {
        if (layer < transition_layer)
            before += hist.counts[layer - 1];
        else
            after += hist.counts[layer - 1];
    }

    const double n_before = transition_layer - 1;
    const double n_after = hist.total_layers - transition_layer + 1;

    TransitionSummary s;
    s.transition_layer = transition_layer;
    s.mean_before = static_cast<double>(before) / n_before;
    s.mean_after = static_cast<double>(after) / n_after;
    if (s.mean_before > 0.0)
        s.ratio = s.mean_after / s.mean_before;
    return s;
}

std::size_t write_histogram_csv(const LayerHistogram& hist, std::ostream& out) {
    std::string buf = "layer,peak_count\n";
    buf.reserve(hist.total_layers * 8 + 32);
    for (std::uint32_t layer = 1; layer <= hist.total_layers; ++layer) {
        buf += std::to_string(layer);
        buf += ',';
        buf += std::to_string(hist.counts[layer - 1]);
        buf += '\n';
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoFailure("write failed");
    return buf.size();
}

std::size_t write_histogram_csv(const LayerHistogram& hist, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
    return write_histogram_csv(hist, out);
}

} // namespace tedpeaks
