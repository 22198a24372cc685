#include "tedpeaks/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tedpeaks {

void SmoothingConfig::validate() const {
    if (degree != 3)
        throw ConfigError("smoothing degree is fixed at 3");
    if (window < kMinFitPoints)
        throw ConfigError("window must be >= " + std::to_string(kMinFitPoints) +
                          ", got " + std::to_string(window));
}

double eval_poly(const PolyCoeffs& p, double x) {
    return ((p.a3 * x + p.a2) * x + p.a1) * x + p.a0;
}

namespace {

// Gram matrix G[p][q] = sum u^(p+q), accumulated in index order.
void accumulate_gram(std::span<const double> u, double g[4][4]) {
    double s[7] = {};
    for (const double x : u) {
        s[0] += 1.0;
        double xp = x;
        s[1] += xp;
        xp *= x;
        s[2] += xp;
        xp *= x;
        s[3] += xp;
        xp *= x;
        s[4] += xp;
        xp *= x;
        s[5] += xp;
        xp *= x;
        s[6] += xp;
    }
    for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 4; ++q)
            g[p][q] = s[p + q];
}

// Right-hand side b[p] = sum y * u^p, accumulated in index order.
void accumulate_rhs(const double* ys, const double* u, std::size_t n, double b[4]) {
    double b0 = 0.0, b1 = 0.0, b2 = 0.0, b3 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double y = ys[k];
        const double x = u[k];
        b0 += y;
        double yp = y * x;
        b1 += yp;
        yp *= x;
        b2 += yp;
        yp *= x;
        b3 += yp;
    }
    b[0] = b0;
    b[1] = b1;
    b[2] = b2;
    b[3] = b3;
}

// Cholesky G = L L^T for the 4x4 symmetric gram. Returns false when a pivot
// is not strictly positive (singular or indefinite system).
bool cholesky4(const double g[4][4], double l[4][4]) {
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            l[i][j] = 0.0;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j <= i; ++j) {
            double sum = g[i][j];
            for (int k = 0; k < j; ++k)
                sum -= l[i][k] * l[j][k];
            if (i == j) {
                if (!(sum > 0.0) || !std::isfinite(sum))
                    return false;
                l[i][i] = std::sqrt(sum);
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    return true;
}

// Solves L L^T beta = b.
void solve4(const double l[4][4], const double b[4], double beta[4]) {
    double y[4];
    for (int i = 0; i < 4; ++i) {
        double sum = b[i];
        for (int k = 0; k < i; ++k)
            sum -= l[i][k] * y[k];
        y[i] = sum / l[i][i];
    }
    for (int i = 3; i >= 0; --i) {
        double sum = y[i];
        for (int k = i + 1; k < 4; ++k)
            sum -= l[k][i] * beta[k];
        beta[i] = sum / l[i][i];
    }
}

// Coefficients of beta0 + beta1 u + beta2 u^2 + beta3 u^3 with
// u = (x - c) / s, expanded in powers of x.
PolyCoeffs to_caller_coords(const double beta[4], double c, double s) {
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double g1 = beta[1] / s;
    const double g2 = beta[2] / s2;
    const double g3 = beta[3] / s3;
    PolyCoeffs p;
    p.a3 = g3;
    p.a2 = g2 - 3.0 * g3 * c;
    p.a1 = g1 - 2.0 * g2 * c + 3.0 * g3 * (c * c);
    p.a0 = beta[0] - g1 * c + g2 * (c * c) - g3 * (c * c * c);
    return p;
}

void scaled_coords(std::span<const double> xs, std::vector<double>& u, double& c, double& s) {
    c = 0.5 * (xs.front() + xs.back());
    s = 0.5 * (xs.back() - xs.front());
    u.resize(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k)
        u[k] = (xs[k] - c) / s;
}

} // namespace

PolyCoeffs fit_window(std::span<const double> ys, std::span<const double> xs) {
    if (ys.size() != xs.size())
        throw DegenerateWindow("ys and xs lengths differ");
    if (ys.size() < kMinFitPoints)
        throw DegenerateWindow("need at least " + std::to_string(kMinFitPoints) +
                               " points, got " + std::to_string(ys.size()));
    for (std::size_t k = 1; k < xs.size(); ++k)
        if (!(xs[k] > xs[k - 1]))
            throw DegenerateWindow("xs must be strictly increasing");

    std::vector<double> u;
    double c, s;
    scaled_coords(xs, u, c, s);

    double g[4][4];
    accumulate_gram(u, g);
    double l[4][4];
    if (!cholesky4(g, l))
        throw DegenerateWindow("normal equations are singular");

    double b[4], beta[4];
    accumulate_rhs(ys.data(), u.data(), ys.size(), b);
    solve4(l, b, beta);
    return to_caller_coords(beta, c, s);
}

WindowBounds smoothing_window(std::size_t index, std::size_t series_length, std::size_t window) {
    const std::size_t c0 = window / 2;
    std::size_t lo = index >= c0 ? index - c0 : 0;
    std::size_t hi = std::min(series_length - 1, index + (window - 1 - c0));
    if (hi - lo + 1 < kMinFitPoints) {
        std::size_t need = kMinFitPoints - (hi - lo + 1);
        const std::size_t right = std::min(need, series_length - 1 - hi);
        hi += right;
        need -= right;
        lo -= std::min(need, lo);
    }
    return {lo, hi};
}

bool is_boundary_index(std::size_t index, std::size_t series_length, std::size_t window) {
    const std::size_t c0 = window / 2;
    return index < c0 || index + (window - 1 - c0) > series_length - 1;
}

namespace detail {

const FitCache::Entry& FitCache::get(std::size_t len) {
    auto it = entries_.find(len);
    if (it != entries_.end())
        return it->second;

    std::vector<double> xs(len);
    for (std::size_t k = 0; k < len; ++k)
        xs[k] = static_cast<double>(k);

    Entry e;
    scaled_coords(xs, e.u, e.center, e.half_span);
    double g[4][4];
    accumulate_gram(e.u, g);
    double l[4][4];
    if (!cholesky4(g, l))
        throw DegenerateWindow("normal equations are singular for window length " +
                               std::to_string(len));
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            e.chol[static_cast<std::size_t>(i * 4 + j)] = l[i][j];
    return entries_.emplace(len, std::move(e)).first->second;
}

double smooth_window_value(std::span<const double> window_ys, std::size_t eval_offset,
                           FitCache& cache) {
    const FitCache::Entry& e = cache.get(window_ys.size());
    double l[4][4];
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            l[i][j] = e.chol[static_cast<std::size_t>(i * 4 + j)];

    double b[4], beta[4];
    accumulate_rhs(window_ys.data(), e.u.data(), window_ys.size(), b);
    solve4(l, b, beta);
    const PolyCoeffs p = to_caller_coords(beta, e.center, e.half_span);
    return eval_poly(p, static_cast<double>(eval_offset));
}

} // namespace detail

SmoothResult smooth(std::span<const double> series, const SmoothingConfig& cfg) {
    cfg.validate();
    const std::size_t n = series.size();
    SmoothResult result;
    if (n < kMinFitPoints) {
        result.values.assign(series.begin(), series.end());
        result.short_input = true;
        return result;
    }

    detail::FitCache cache;
    result.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (cfg.boundary == BoundaryPolicy::hold && is_boundary_index(i, n, cfg.window)) {
            result.values[i] = series[i];
            continue;
        }
        const WindowBounds wb = smoothing_window(i, n, cfg.window);
        result.values[i] = detail::smooth_window_value(series.subspan(wb.lo, wb.size()),
                                                       i - wb.lo, cache);
    }
    return result;
}

StreamingSmoother::StreamingSmoother(const SmoothingConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    latency_ = std::max(cfg_.window - cfg_.window / 2, kMinFitPoints);
}

void StreamingSmoother::reset() {
    buf_.clear();
    base_ = 0;
    count_ = 0;
    emit_next_ = 0;
    flushed_ = false;
    short_input_ = false;
}

double StreamingSmoother::emit_value(std::size_t index, std::size_t n_total) {
    if (cfg_.boundary == BoundaryPolicy::hold && is_boundary_index(index, n_total, cfg_.window))
        return buf_[index - base_];
    const WindowBounds wb = smoothing_window(index, n_total, cfg_.window);
    const std::span<const double> win(buf_.data() + (wb.lo - base_), wb.size());
    return detail::smooth_window_value(win, index - wb.lo, cache_);
}

void StreamingSmoother::maybe_compact() {
    if (buf_.size() < 3 * cfg_.window + 64)
        return;
    // Keep everything a future window could still touch (half a window back
    // from the next output, plus shrink-extension slack).
    const std::uint64_t margin = cfg_.window / 2 + kMinFitPoints;
    const std::uint64_t keep_from = emit_next_ > margin ? emit_next_ - margin : 0;
    if (keep_from > base_) {
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(keep_from - base_));
        base_ = keep_from;
    }
}

std::optional<std::pair<std::uint64_t, double>> StreamingSmoother::push(double value) {
    if (flushed_)
        throw std::logic_error("push after flush; call reset() first");
    buf_.push_back(value);
    ++count_;
    // Output index trails the just-pushed input index by exactly latency_.
    if (emit_next_ + latency_ + 1 > count_)
        return std::nullopt;
    const std::uint64_t index = emit_next_++;
    const double v = emit_value(index, count_);
    maybe_compact();
    return std::make_pair(index, v);
}

std::vector<std::pair<std::uint64_t, double>> StreamingSmoother::flush() {
    if (flushed_)
        throw std::logic_error("flush called twice");
    flushed_ = true;
    std::vector<std::pair<std::uint64_t, double>> out;
    const std::uint64_t n = count_;
    if (n == 0)
        return out;
    if (n < kMinFitPoints) {
        // Too short for any cubic fit: hold raw values, flag it.
        short_input_ = true;
        for (std::uint64_t i = 0; i < n; ++i)
            out.emplace_back(i, buf_[i - base_]);
        return out;
    }
    out.reserve(n - emit_next_);
    for (std::uint64_t i = emit_next_; i < n; ++i)
        out.emplace_back(i, emit_value(i, n));
    emit_next_ = n;
    return out;
}

} // namespace tedpeaks
