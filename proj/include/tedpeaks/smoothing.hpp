#ifndef TEDPEAKS_SMOOTHING_HPP
#define TEDPEAKS_SMOOTHING_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "tedpeaks/errors.hpp"

namespace tedpeaks {

/// Minimum points for a cubic least-squares fit (degree + 2).
inline constexpr std::size_t kMinFitPoints = 5;

enum class BoundaryPolicy {
    shrink, // fit over the largest available clamped window (>= 5 points)
    hold    // pass raw values through wherever the full window does not fit
};

struct SmoothingConfig {
    std::size_t window = 600;
    int degree = 3; // fixed; kept explicit so configs echo completely
    BoundaryPolicy boundary = BoundaryPolicy::shrink;

    void validate() const; // throws ConfigError
};

/// Cubic coefficients in the caller's x coordinates: a0 + a1 x + a2 x^2 + a3 x^3.
struct PolyCoeffs {
    double a0 = 0.0;
    double a1 = 0.0;
    double a2 = 0.0;
    double a3 = 0.0;
};

double eval_poly(const PolyCoeffs& p, double x);

class DegenerateWindow : public Error {
public:
    using Error::Error;
};

/// Least-squares cubic through (xs, ys): minimizes sum of squared residuals.
/// Requires >= 5 points and strictly increasing xs; throws DegenerateWindow
/// otherwise (or when the normal equations are numerically singular).
PolyCoeffs fit_window(std::span<const double> ys, std::span<const double> xs);

/// Inclusive index range of the fit window used at `index`, shrink policy.
/// The nominal window [index - w/2, index + w - 1 - w/2] is clamped to the
/// series and, if fewer than 5 points remain, extended (right first) back
/// to 5. Assumes series_length >= 5.
struct WindowBounds {
    std::size_t lo = 0;
    std::size_t hi = 0; // inclusive
    std::size_t size() const { return hi - lo + 1; }
};
WindowBounds smoothing_window(std::size_t index, std::size_t series_length, std::size_t window);

/// True where the full window does not fit; these indices follow the
/// boundary policy.
bool is_boundary_index(std::size_t index, std::size_t series_length, std::size_t window);

struct SmoothResult {
    std::vector<double> values;
    bool short_input = false; // series shorter than 5: raw values held
};

/// Savitzky-Golay smoothing: per-index cubic least-squares fit over the
/// sliding window, evaluated at the window position of that index. Output
/// length equals input length.
SmoothResult smooth(std::span<const double> series, const SmoothingConfig& cfg = {});

namespace detail {

/// Per-window-length normal-equation data for window-local indices 0..len-1.
/// Caching is a pure speedup: entries are built by the same arithmetic path
/// fit_window uses, so cached and fresh solves are bit-identical.
class FitCache {
public:
    struct Entry {
        std::vector<double> u;             // scaled local coordinates
        double center = 0.0;
        double half_span = 1.0;
        std::array<double, 16> chol{};     // lower Cholesky factor of the gram
    };

    const Entry& get(std::size_t len);

private:
    std::map<std::size_t, Entry> entries_;
};

/// Smoothed value for one window: fits the cubic over window_ys (local
/// indices 0..len-1) and evaluates at eval_offset. Bit-identical to
/// fit_window + eval_poly on the same window.
double smooth_window_value(std::span<const double> window_ys, std::size_t eval_offset,
                           FitCache& cache);

} // namespace detail

/// Bounded-latency streaming form of smooth(). After max(ceil(window/2), 5)
/// pushed samples, each push emits the smoothed value whose index trails the
/// input by exactly that latency; flush() drains the tail with the batch
/// boundary policy. Emitted values are bit-identical to batch smooth().
class StreamingSmoother {
public:
    explicit StreamingSmoother(const SmoothingConfig& cfg = {});

    std::optional<std::pair<std::uint64_t, double>> push(double value);
    std::vector<std::pair<std::uint64_t, double>> flush();

    std::size_t latency() const { return latency_; }
    std::uint64_t samples_seen() const { return count_; }
    bool flushed() const { return flushed_; }
    bool short_input() const { return short_input_; } // meaningful after flush
    void reset();

private:
    double emit_value(std::size_t index, std::size_t n_total);
    void maybe_compact();

    SmoothingConfig cfg_;
    std::size_t latency_ = 0;
    std::vector<double> buf_;
    std::uint64_t base_ = 0;      // global index of buf_[0]
    std::uint64_t count_ = 0;     // samples pushed
    std::uint64_t emit_next_ = 0; // next output index
    bool flushed_ = false;
    bool short_input_ = false;
    detail::FitCache cache_;
};

} // namespace tedpeaks

#endif
