#include <doctest.h>

#include <tedpeaks/smoothing.hpp>

#include "oracles.hpp"

#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

using namespace tedpeaks;

namespace {

std::vector<double> iota_xs(std::size_t n) {
    std::vector<double> xs(n);
    std::iota(xs.begin(), xs.end(), 0.0);
    return xs;
}

std::vector<double> random_walk(std::size_t n, std::uint64_t seed) {
    oracles::TestRng rng(seed);
    std::vector<double> ys(n);
    double level = rng.in(-2.0, 2.0);
    for (std::size_t i = 0; i < n; ++i) {
        level += rng.in(-0.1, 0.1);
        ys[i] = level;
    }
    return ys;
}

bool close_rel(double a, double b, double tol) {
    return std::fabs(a - b) <= tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

} // namespace

TEST_CASE("fit_window recovers exact polynomials") {
    SUBCASE("constant series") {
        std::vector<double> ys(41, 7.25);
        const auto xs = iota_xs(41);
        const auto p = fit_window(ys, xs);
        CHECK(p.a0 == doctest::Approx(7.25).epsilon(1e-12));
        CHECK(std::fabs(p.a1) < 1e-10);
        CHECK(std::fabs(p.a2) < 1e-12);
        CHECK(std::fabs(p.a3) < 1e-13);
    }
    SUBCASE("cubic series is reproduced coefficient for coefficient") {
        std::vector<double> xs = {-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0};
        std::vector<double> ys;
        for (const double x : xs)
            ys.push_back(2.0 * x * x * x - x + 5.0);
        const auto p = fit_window(ys, xs);
        CHECK(close_rel(p.a0, 5.0, 1e-9));
        CHECK(close_rel(p.a1, -1.0, 1e-9));
        CHECK(std::fabs(p.a2) < 1e-9);
        CHECK(close_rel(p.a3, 2.0, 1e-9));
    }
}

TEST_CASE("fit_window agrees with the elimination oracle on noisy windows") {
    oracles::TestRng rng(2024);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 5 + rng.below(700);
        const auto xs = iota_xs(n);
        std::vector<double> ys(n);
        for (auto& y : ys)
            y = rng.in(-3.0, 3.0);
        const auto p = fit_window(ys, xs);
        for (const double at : {0.0, static_cast<double>(n / 2), static_cast<double>(n - 1)}) {
            const double got = eval_poly(p, at);
            const double want = oracles::cubic_fit_value(ys, xs, at);
            CHECK_MESSAGE(close_rel(got, want, 1e-9),
                          "n=" << n << " at=" << at << " got=" << got << " want=" << want);
        }
    }
}

TEST_CASE("fit_window rejects degenerate input") {
    std::vector<double> ys = {1.0, 2.0, 3.0, 4.0};
    std::vector<double> xs = {0.0, 1.0, 2.0, 3.0};
    CHECK_THROWS_AS(fit_window(ys, xs), DegenerateWindow);

    std::vector<double> flat_xs = {0.0, 1.0, 1.0, 2.0, 3.0};
    std::vector<double> five = {1.0, 2.0, 3.0, 4.0, 5.0};
    CHECK_THROWS_AS(fit_window(five, flat_xs), DegenerateWindow);
}

TEST_CASE("smoothing_window clamps then refills to five points") {
    SUBCASE("interior index uses the nominal window") {
        const auto b = smoothing_window(500, 10000, 600);
        CHECK(b.lo == 200);
        CHECK(b.hi == 799);
        CHECK(b.size() == 600);
    }
    SUBCASE("left edge is clamped") {
        const auto b = smoothing_window(0, 10000, 600);
        CHECK(b.lo == 0);
        CHECK(b.hi == 299);
    }
    SUBCASE("clamped window below five points is extended") {
        const auto b = smoothing_window(0, 10000, 6);
        CHECK(b.lo == 0);
        CHECK(b.hi == 4);
        CHECK(b.size() == 5);
    }
    SUBCASE("short series collapses to the whole range") {
        const auto b = smoothing_window(2, 5, 600);
        CHECK(b.lo == 0);
        CHECK(b.hi == 4);
    }
    SUBCASE("window always covers the index and holds five points") {
        oracles::TestRng rng(77);
        for (int trial = 0; trial < 300; ++trial) {
            const std::size_t len = 5 + rng.below(400);
            const std::size_t window = 5 + rng.below(900);
            const std::size_t index = rng.below(len);
            const auto b = smoothing_window(index, len, window);
            CHECK(b.lo <= index);
            CHECK(index <= b.hi);
            CHECK(b.hi < len);
            CHECK(b.size() >= kMinFitPoints);
            CHECK(b.size() <= std::max(window, kMinFitPoints));
        }
    }
}

TEST_CASE("smooth reproduces polynomials everywhere under shrink") {
    std::vector<double> ys(3000);
    for (std::size_t i = 0; i < ys.size(); ++i) {
        const double x = static_cast<double>(i);
        ys[i] = 1e-9 * x * x * x - 2e-4 * x * x + 0.05 * x + 3.0;
    }
    const auto result = smooth(ys, {});
    REQUIRE(result.values.size() == ys.size());
    CHECK_FALSE(result.short_input);
    for (std::size_t i = 0; i < ys.size(); ++i)
        CHECK_MESSAGE(close_rel(result.values[i], ys[i], 1e-9), "i=" << i);
}

TEST_CASE("smooth equals a per-window refit bit for bit") {
    const auto ys = random_walk(2500, 404);
    SmoothingConfig cfg;
    cfg.window = 240;
    const auto result = smooth(ys, cfg);
    for (std::size_t i = 0; i < ys.size(); ++i) {
        const auto b = smoothing_window(i, ys.size(), cfg.window);
        const auto local_xs = iota_xs(b.size());
        const auto p = fit_window(std::span(ys).subspan(b.lo, b.size()), local_xs);
        const double want = eval_poly(p, static_cast<double>(i - b.lo));
        CHECK(result.values[i] == want);
    }
}

TEST_CASE("hold policy passes raw values through at the boundaries") {
    const auto ys = random_walk(400, 9);
    SmoothingConfig shrink_cfg;
    shrink_cfg.window = 60;
    SmoothingConfig hold_cfg = shrink_cfg;
    hold_cfg.boundary = BoundaryPolicy::hold;

    const auto shrunk = smooth(ys, shrink_cfg);
    const auto held = smooth(ys, hold_cfg);
    for (std::size_t i = 0; i < ys.size(); ++i) {
        if (is_boundary_index(i, ys.size(), shrink_cfg.window))
            CHECK(held.values[i] == ys[i]);
        else
            CHECK(held.values[i] == shrunk.values[i]);
    }
}

TEST_CASE("series shorter than five points are held raw") {
    std::vector<double> ys = {3.0, 1.0, 4.0};
    const auto result = smooth(ys, {});
    CHECK(result.short_input);
    CHECK(result.values == ys);
}

TEST_CASE("smooth is linear in its input") {
    const auto a = random_walk(800, 31);
    const auto b = random_walk(800, 32);
    std::vector<double> combo(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        combo[i] = 2.5 * a[i] - 0.75 * b[i];

    SmoothingConfig cfg;
    cfg.window = 90;
    const auto sa = smooth(a, cfg).values;
    const auto sb = smooth(b, cfg).values;
    const auto sc = smooth(combo, cfg).values;
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(close_rel(sc[i], 2.5 * sa[i] - 0.75 * sb[i], 1e-9));
}

TEST_CASE("config validation rejects unusable windows") {
    SmoothingConfig cfg;
    cfg.window = 4;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.window = 600;
    cfg.degree = 2;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("streaming smoother matches batch output exactly") {
    oracles::TestRng rng(555);
    for (int trial = 0; trial < 25; ++trial) {
        SmoothingConfig cfg;
        cfg.window = 5 + rng.below(80);
        cfg.boundary = (rng.unit() < 0.5) ? BoundaryPolicy::shrink : BoundaryPolicy::hold;
        const std::size_t len = rng.below(300);
        const auto ys = random_walk(std::max<std::size_t>(len, 1), trial + 1000);

        std::vector<double> streamed(len, 0.0);
        StreamingSmoother sm(cfg);
        for (std::size_t i = 0; i < len; ++i)
            if (const auto out = sm.push(ys[i]))
                streamed[out->first] = out->second;
        for (const auto& [idx, value] : sm.flush())
            streamed[idx] = value;

        const auto batch = smooth(std::span(ys).first(len), cfg);
        REQUIRE(batch.values.size() == len);
        for (std::size_t i = 0; i < len; ++i)
            CHECK_MESSAGE(streamed[i] == batch.values[i],
                          "trial=" << trial << " window=" << cfg.window << " len=" << len
                                   << " i=" << i);
        CHECK(sm.short_input() == batch.short_input);
    }
}

TEST_CASE("streaming smoother has fixed latency of half the window") {
    StreamingSmoother sm{SmoothingConfig{}};
    CHECK(sm.latency() == 300);
    for (int i = 0; i < 600; ++i) {
        const auto out = sm.push(4.0);
        if (i < 300) {
            CHECK_FALSE(out.has_value());
        } else {
            REQUIRE(out.has_value());
            CHECK(out->first == static_cast<std::uint64_t>(i - 300));
            CHECK(out->second == doctest::Approx(4.0).epsilon(1e-12));
        }
    }
    CHECK(sm.samples_seen() == 600);
}

TEST_CASE("streaming smoother enforces its lifecycle") {
    StreamingSmoother sm{SmoothingConfig{}};
    sm.push(1.0);
    sm.flush();
    CHECK(sm.flushed());
    CHECK_THROWS_AS(sm.push(2.0), std::logic_error);
    CHECK_THROWS_AS(sm.flush(), std::logic_error);
    sm.reset();
    CHECK(sm.samples_seen() == 0);
    CHECK_NOTHROW(sm.push(2.0));
}

TEST_CASE("streaming smoother keeps bounded memory on long streams") {
    SmoothingConfig cfg;
    cfg.window = 50;
    StreamingSmoother sm(cfg);
    oracles::TestRng rng(8);
    std::vector<double> all(200000);
    for (std::size_t i = 0; i < all.size(); ++i)
        all[i] = rng.in(0.0, 2.0);

    std::vector<double> streamed(all.size());
    for (std::size_t i = 0; i < all.size(); ++i)
        if (const auto out = sm.push(all[i]))
            streamed[out->first] = out->second;
    for (const auto& [idx, value] : sm.flush())
        streamed[idx] = value;

    const auto batch = smooth(all, cfg);
    for (std::size_t i = 0; i < all.size(); i += 977)
        CHECK(streamed[i] == batch.values[i]);
    CHECK(streamed.back() == batch.values.back());
}
