#include "tedpeaks/validation_stats.hpp"

#include <cmath>
#include <string>
#include <unordered_map>

#include "tedpeaks/smoothing.hpp"

namespace tedpeaks {

RegressionResult ols_fit(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size())
        throw Error("regression inputs differ in length");
    const std::size_t n = xs.size();
    if (n < 3)
        throw Error("regression needs at least 3 points, got " + std::to_string(n));

    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_x += xs[i];
        mean_y += ys[i];
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);

    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mean_x;
        const double dy = ys[i] - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0)
        throw DegenerateVariance("xs are constant");
    if (syy == 0.0)
        throw DegenerateVariance("ys are constant");

    RegressionResult r;
    r.slope = sxy / sxx;
    r.intercept = mean_y - r.slope * mean_x;
    r.r_squared = (sxy * sxy) / (sxx * syy);
    if (r.r_squared > 1.0)
        r.r_squared = 1.0;
    if (!(r.r_squared >= 0.0))
        r.r_squared = 0.0;
    r.n_points = n;
    return r;
}

double normalize_total(std::uint64_t total_peaks, std::uint64_t reference_pores) {
    if (reference_pores == 0)
        throw ZeroReference("reference pore total is zero");
    return static_cast<double>(total_peaks) / static_cast<double>(reference_pores);
}

std::array<double, 3> SweepSpec::h_values() const {
    return {h_center - h_step, h_center, h_center + h_step};
}

std::array<double, 3> SweepSpec::m_values() const {
    return {m_center - m_step, m_center, m_center + m_step};
}

void SweepSpec::validate() const {
    for (const double h : h_values())
        if (!(h > 0.0) || !std::isfinite(h))
            throw ConfigError("sweep H value " + std::to_string(h) + " is not positive");
    for (const double m : m_values())
        if (!(m > 0.0) || !std::isfinite(m))
            throw ConfigError("sweep M value " + std::to_string(m) + " is not positive");
}

std::vector<SweepCell> sensitivity_sweep(std::span<const SampleStream> streams,
                                         std::span<const PoreRecord> pores,
                                         const SweepSpec& spec, const SmoothingConfig& s_cfg,
                                         const DetectorConfig& base,
                                         std::optional<std::uint64_t> normalize_by) {
    spec.validate();
    s_cfg.validate();
    base.validate();
    if (streams.size() != pores.size())
        throw ConfigError("sweep got " + std::to_string(streams.size()) + " streams but " +
                          std::to_string(pores.size()) + " pore records");

    std::unordered_map<std::string, std::uint64_t> pores_by_id;
    for (const PoreRecord& p : pores)
        if (!pores_by_id.emplace(p.sample_id, p.pore_count).second)
            throw ConfigError("duplicate pore record for sample '" + p.sample_id + "'");

    std::vector<double> ys;
    ys.reserve(streams.size());
    std::uint64_t pore_total = 0;
    for (const SampleStream& s : streams) {
        const auto it = pores_by_id.find(s.sample_id);
        if (it == pores_by_id.end())
            throw ConfigError("no pore record for sample '" + s.sample_id + "'");
        ys.push_back(static_cast<double>(it->second));
        pore_total += it->second;
        pores_by_id.erase(it);
    }
    if (!pores_by_id.empty())
        throw ConfigError("no stream for sample '" + pores_by_id.begin()->first + "'");

    const auto hs = spec.h_values();
    const auto ms = spec.m_values();
    std::array<std::vector<double>, 9> cell_counts;
    for (auto& v : cell_counts)
        v.reserve(streams.size());

    for (const SampleStream& s : streams) {
        std::vector<double> raw;
        raw.reserve(s.samples.size());
        for (const TedSample& sample : s.samples)
            raw.push_back(sample.ted);
        const SmoothResult sm = smooth(raw, s_cfg);

        std::size_t cell = 0;
        for (const double h : hs) {
            for (const double m : ms) {
                DetectorConfig cfg = base;
                cfg.h_abs = h;
                cfg.m_rel = m;
                const auto intervals = intervals_from_smoothed(s.samples, sm.values, cfg);
                cell_counts[cell++].push_back(static_cast<double>(intervals.size()));
            }
        }
    }

    const std::uint64_t reference = normalize_by.value_or(pore_total);
    std::vector<SweepCell> cells;
    cells.reserve(9);
    std::size_t cell = 0;
    for (const double h : hs) {
        for (const double m : ms) {
            const std::vector<double>& counts = cell_counts[cell++];
            SweepCell c;
            c.h = h;
            c.m = m;
            c.r_squared = ols_fit(counts, ys).r_squared;
            std::uint64_t total = 0;
            for (const double v : counts)
                total += static_cast<std::uint64_t>(v);
            c.total_peaks = total;
            c.normalized_peaks = normalize_total(total, reference);
            cells.push_back(c);
        }
    }
    return cells;
}

} // namespace tedpeaks
