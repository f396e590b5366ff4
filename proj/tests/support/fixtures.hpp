#pragma once

// Synthetic bar builders and the labeled pattern corpus shared by unit and
// acceptance tests.

#include "quantdesk/decision.hpp"
#include "quantdesk/market_data.hpp"
#include "quantdesk/patterns.hpp"
#include "quantdesk/random.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fixtures {

using quantdesk::OhlcBar;
using quantdesk::patterns::PatternKind;

inline constexpr std::int64_t kStart = 1704067200;  // 2024-01-01T00:00:00Z
inline constexpr std::int64_t kStep = 4 * 3600;

/// Doji-like bars centred on `path`: open = close = path, high/low +/- spread.
inline std::vector<OhlcBar> bars_from_path(const std::vector<double>& path, double spread = 0.05) {
    std::vector<OhlcBar> out;
    out.reserve(path.size());
    for (std::size_t i = 0; i < path.size(); ++i) {
        OhlcBar b;
        b.timestamp = kStart + static_cast<std::int64_t>(i) * kStep;
        b.open = b.close = path[i];
        b.high = path[i] + spread;
        b.low = path[i] - spread;
        out.push_back(b);
    }
    return out;
}

/// Bars where each open is the previous close (first open = first close).
inline std::vector<OhlcBar> bars_from_closes(const std::vector<double>& closes, double wick = 0.0) {
    std::vector<OhlcBar> out;
    out.reserve(closes.size());
    for (std::size_t i = 0; i < closes.size(); ++i) {
        OhlcBar b;
        b.timestamp = kStart + static_cast<std::int64_t>(i) * kStep;
        b.open = i ? closes[i - 1] : closes[i];
        b.close = closes[i];
        b.high = std::max(b.open, b.close) + wick;
        b.low = std::min(b.open, b.close) - wick;
        out.push_back(b);
    }
    return out;
}

/// Piecewise-linear path through (t, price) knots, sampled at t = 0..n-1.
inline std::vector<double> polyline(const std::vector<std::pair<double, double>>& knots, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i);
        std::size_t k = 0;
        while (k + 2 < knots.size() && t > knots[k + 1].first) ++k;
        const auto [t0, p0] = knots[k];
        const auto [t1, p1] = knots[k + 1];
        out[i] = p0 + (p1 - p0) * (t - t0) / (t1 - t0);
    }
    return out;
}

/// Triangle wave between two boundary lines: at the upper line when
/// t = 0 (mod period), at the lower line when t = period/2 (mod period).
inline std::vector<double> zigzag(std::size_t n, const std::function<double(double)>& upper,
                                  const std::function<double(double)>& lower, std::size_t period = 12) {
    std::vector<double> out(n);
    const double half = static_cast<double>(period) / 2.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i);
        const double phase = static_cast<double>(i % period);
        const double w = std::abs(phase - half) / half;
        out[i] = lower(t) + w * (upper(t) - lower(t));
    }
    return out;
}

inline std::vector<OhlcBar> channel_bars(double u0, double u_slope, double l0, double l_slope, std::size_t n = 40) {
    return bars_from_path(zigzag(n, [=](double t) { return u0 + u_slope * t; },
                                 [=](double t) { return l0 + l_slope * t; }));
}

/// Reflects prices about `level`: highs and lows swap roles.
inline std::vector<OhlcBar> mirror(const std::vector<OhlcBar>& bars, double level) {
    std::vector<OhlcBar> out = bars;
    for (auto& b : out) {
        const OhlcBar src = b;
        b.open = 2.0 * level - src.open;
        b.close = 2.0 * level - src.close;
        b.high = 2.0 * level - src.low;
        b.low = 2.0 * level - src.high;
    }
    return out;
}

inline double mean_close(const std::vector<OhlcBar>& bars) {
    double s = 0.0;
    for (const auto& b : bars) s += b.close;
    return s / static_cast<double>(bars.size());
}

/// Multiplicative random walk with random wicks; prices stay positive.
inline std::vector<OhlcBar> random_bars(quantdesk::Rng& rng, std::size_t n, double start = 100.0) {
    std::vector<OhlcBar> bars;
    bars.reserve(n);
    double close = start;
    for (std::size_t i = 0; i < n; ++i) {
        OhlcBar b;
        b.timestamp = kStart + static_cast<std::int64_t>(i) * kStep;
        b.open = close;
        close *= 1.0 + rng.uniform(-0.02, 0.02);
        b.close = close;
        b.high = std::max(b.open, b.close) * (1.0 + rng.uniform(0.0, 0.01));
        b.low = std::min(b.open, b.close) * (1.0 - rng.uniform(0.0, 0.01));
        bars.push_back(b);
    }
    return bars;
}

inline std::vector<double> closes_of(const std::vector<OhlcBar>& bars) {
    std::vector<double> out;
    out.reserve(bars.size());
    for (const auto& b : bars) out.push_back(b.close);
    return out;
}

/// Every price multiplied by `k`.
inline std::vector<OhlcBar> scaled(std::vector<OhlcBar> bars, double k) {
    for (auto& b : bars) {
        b.open *= k;
        b.high *= k;
        b.low *= k;
        b.close *= k;
    }
    return bars;
}

struct PatternFixture {
    std::string name;
    std::vector<OhlcBar> bars;
    std::optional<PatternKind> expected;  // nullopt: no pattern should be reported
    bool triangle = false;
};

/// 40-bar windows: the default trend window covers the whole fixture.
inline std::vector<PatternFixture> pattern_corpus() {
    std::vector<PatternFixture> c;
    c.push_back({"ascending triangle", channel_bars(101.5, 0.0, 98.5, 0.05), PatternKind::AscendingTriangle, true});
    c.push_back({"descending triangle", channel_bars(101.5, -0.05, 98.5, 0.0), PatternKind::DescendingTriangle, true});
    c.push_back({"symmetrical triangle", channel_bars(101.8, -0.04, 98.2, 0.04), PatternKind::SymmetricalTriangle, true});
    c.push_back({"expanding triangle", channel_bars(100.8, 0.04, 99.2, -0.04), PatternKind::ExpandingTriangle, true});
    c.push_back({"rising wedge", channel_bars(101.0, 0.05, 99.0, 0.09), PatternKind::RisingWedge, false});
    c.push_back({"falling wedge", channel_bars(101.0, -0.09, 99.0, -0.05), PatternKind::FallingWedge, false});
    c.push_back({"rectangle", channel_bars(100.8, 0.0, 99.2, 0.0), PatternKind::Rectangle, false});

    c.push_back({"double bottom",
                 bars_from_path(polyline({{0, 101.5}, {10, 100.0}, {19, 101.5}, {28, 100.0}, {37, 101.5}, {39, 101.6}}, 40)),
                 PatternKind::DoubleBottom, false});
    c.push_back({"inverse head and shoulders",
                 bars_from_path(polyline({{0, 101.0}, {8, 100.0}, {13, 101.0}, {19, 99.0}, {25, 101.3}, {30, 100.1},
                                          {39, 102.2}},
                                         40)),
                 PatternKind::InverseHeadAndShoulders, false});
    c.push_back({"v-shaped reversal",
                 bars_from_path(polyline({{0, 103.0}, {19, 102.0}, {23, 98.0}, {27, 102.0}, {39, 103.0}}, 40)),
                 PatternKind::VShapedReversal, false});
    {
        // Small range, 5-bar impulse of +4%, then a 14-bar parallel channel drifting down.
        auto path = zigzag(40, [](double) { return 100.2; }, [](double) { return 99.8; }, 6);
        const auto trend = polyline({{0, 0.0}, {20, 0.0}, {25, 4.0}, {39, 3.0}}, 40);
        for (std::size_t i = 0; i < path.size(); ++i) path[i] += trend[i];
        c.push_back({"bullish flag", bars_from_path(path), PatternKind::BullishFlag, false});
    }
    {
        auto path = zigzag(40, [](double) { return 100.2; }, [](double) { return 99.8; }, 6);
        const auto trend = polyline({{0, 0.0}, {20, 0.0}, {25, -4.0}, {39, -3.0}}, 40);
        for (std::size_t i = 0; i < path.size(); ++i) path[i] += trend[i];
        c.push_back({"bearish flag", bars_from_path(path), PatternKind::BearishFlag, false});
    }

    c.push_back({"negative: rising parallel channel", channel_bars(101.0, 0.1, 99.5, 0.1), std::nullopt, false});
    c.push_back({"negative: falling parallel channel", channel_bars(101.0, -0.1, 99.5, -0.1), std::nullopt, false});
    c.push_back({"negative: narrow flat range", channel_bars(100.2, 0.0, 99.9, 0.0), std::nullopt, false});
    return c;
}

/// Runs the detectors the way the pipeline does: trailing channel, pivots over the whole window.
inline std::vector<quantdesk::patterns::PatternMatch> detect(const std::vector<OhlcBar>& bars,
                                                            const quantdesk::trend::TrendConfig& tc = {}) {
    const auto channel = quantdesk::trend::detect_trend(bars, tc);
    const auto pivots = quantdesk::trend::find_pivots(bars, tc.pivot_k);
    return quantdesk::patterns::detect_patterns(bars, pivots, channel);
}

/// Signal state with scores drawn uniformly from [-1, 1]; about one draw in
/// eight has an exact zero source, and the channel slope is random.
inline quantdesk::decision::SignalState random_state(quantdesk::Rng& rng) {
    quantdesk::decision::SignalState s;
    auto draw = [&] { return rng.uniform01() < 0.125 ? 0.0 : rng.uniform(-1.0, 1.0); };
    s.s_ind = draw();
    s.s_pat = draw();
    s.s_trend = draw();
    s.trend.kappa_rel = rng.uniform01() < 0.1 ? 0.0 : rng.uniform(-1e-3, 1e-3);
    s.trend.mean_close = 100.0;
    return s;
}

/// The same state with every directional quantity negated.
inline quantdesk::decision::SignalState negated(quantdesk::decision::SignalState s) {
    s.s_ind = -s.s_ind;
    s.s_pat = -s.s_pat;
    s.s_trend = -s.s_trend;
    s.trend.kappa_rel = -s.trend.kappa_rel;
    return s;
}

/// price = a + b*t + bounded noise, |noise| <= noise_frac * |b| * n (or noise_abs when b = 0).
inline std::vector<OhlcBar> linear_channel(quantdesk::Rng& rng, double a, double b, std::size_t n, double noise_frac,
                                           double noise_abs = 0.0) {
    const double amp = b != 0.0 ? noise_frac * std::abs(b) * static_cast<double>(n) : noise_abs;
    std::vector<double> closes(n);
    for (std::size_t i = 0; i < n; ++i) closes[i] = a + b * static_cast<double>(i) + rng.uniform(-amp, amp);
    std::vector<OhlcBar> bars;
    for (std::size_t i = 0; i < n; ++i) {
        OhlcBar bar;
        bar.timestamp = kStart + static_cast<std::int64_t>(i) * kStep;
        bar.open = i ? closes[i - 1] : closes[i];
        bar.close = closes[i];
        bar.high = std::max(bar.open, bar.close);
        bar.low = std::min(bar.open, bar.close);
        bars.push_back(bar);
    }
    return bars;
}

} // namespace fixtures
