#include "quantdesk/trend.hpp"

#include "quantdesk/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace quantdesk::trend {

PivotSet find_pivots(Bars bars, int k) {
    if (k < 1) throw PreconditionError("pivot neighborhood k must be >= 1");
    const auto kk = static_cast<std::size_t>(k);
    if (bars.size() < 2 * kk + 1)
        throw PreconditionError("pivot window needs at least " + std::to_string(2 * kk + 1) +
                                " bars, got " + std::to_string(bars.size()));
    PivotSet out;
    out.k = k;
    for (std::size_t i = kk; i + kk < bars.size(); ++i) {
        bool is_high = true;
        bool is_low = true;
        for (std::size_t j = i - kk; j <= i + kk && (is_high || is_low); ++j) {
            if (bars[j].high > bars[i].high) is_high = false;
            if (bars[j].low < bars[i].low) is_low = false;
        }
        if (is_high) out.highs.push_back({static_cast<double>(i), bars[i].high});
        if (is_low) out.lows.push_back({static_cast<double>(i), bars[i].low});
    }
    return out;
}

FittedLine fit_line_ols(std::span<const Point> points) {
    if (points.size() < 2) throw PreconditionError("OLS fit needs at least 2 points");
    const double n = static_cast<double>(points.size());
    double mean_x = 0.0;
    double mean_y = 0.0;
    for (const auto& p : points) {
        mean_x += p.x;
        mean_y += p.y;
    }
    mean_x /= n;
    mean_y /= n;

    // Centered sums keep the fit well conditioned at large price levels.
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (const auto& p : points) {
        const double dx = p.x - mean_x;
        const double dy = p.y - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw PreconditionError("OLS fit needs at least 2 distinct x values");

    FittedLine line;
    line.slope = sxy / sxx;
    line.intercept = mean_y - line.slope * mean_x;
    line.n_points = points.size();
    if (syy == 0.0) {
        line.r_squared = 1.0;
    } else {
        double ss_res = 0.0;
        for (const auto& p : points) {
            const double e = p.y - line.at(p.x);
            ss_res += e * e;
        }
        line.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    }
    return line;
}

std::string_view to_string(TrendLabel label) {
    switch (label) {
    case TrendLabel::Uptrend: return "Uptrend";
    case TrendLabel::Downtrend: return "Downtrend";
    case TrendLabel::Sideways: return "Sideways";
    }
    return "Sideways";
}

std::string_view to_string(Geometry geometry) {
    switch (geometry) {
    case Geometry::ParallelUp: return "ParallelUp";
    case Geometry::ParallelDown: return "ParallelDown";
    case Geometry::ConvergingWedgeUp: return "ConvergingWedgeUp";
    case Geometry::ConvergingWedgeDown: return "ConvergingWedgeDown";
    case Geometry::SymmetricConverging: return "SymmetricConverging";
    case Geometry::Diverging: return "Diverging";
    case Geometry::Flat: return "Flat";
    }
    return "Flat";
}

TrendLabel classify(double kappa_rel, double tau) {
    if (kappa_rel > tau) return TrendLabel::Uptrend;
    if (kappa_rel < -tau) return TrendLabel::Downtrend;
    return TrendLabel::Sideways;
}

GapTrend gap_trend(const TrendChannel& channel, double tolerance) {
    const double start = channel.gap_start();
    const double end = channel.gap_end();
    const double tiny = 1e-12 * std::max(1.0, std::abs(channel.mean_close));
    if (start > tiny) {
        const double ratio = end / start;
        if (ratio < 1.0 - tolerance) return GapTrend::Shrinking;
        if (ratio > 1.0 + tolerance) return GapTrend::Growing;
        return GapTrend::Stable;
    }
    // Degenerate start gap (lines touch or cross at the left edge).
    if (end - start > tiny) return GapTrend::Growing;
    if (start - end > tiny) return GapTrend::Shrinking;
    return GapTrend::Stable;
}

Geometry channel_geometry(const TrendChannel& channel, std::size_t window_length,
                          const TrendConfig& config) {
    TrendChannel c = channel;
    c.window_length = window_length;
    const double flat = config.flat_bound();
    const double rs_r = c.resistance_rel_slope();
    const double rs_s = c.support_rel_slope();

    if (std::abs(rs_r) < flat && std::abs(rs_s) < flat) return Geometry::Flat;
    if (rs_r < -flat && rs_s > flat) return Geometry::SymmetricConverging;
    if (rs_r > flat && rs_s < -flat) return Geometry::Diverging;
    switch (gap_trend(c, config.gap_tolerance)) {
    case GapTrend::Growing: return Geometry::Diverging;
    case GapTrend::Shrinking:
        return c.kappa > 0.0 ? Geometry::ConvergingWedgeUp : Geometry::ConvergingWedgeDown;
    case GapTrend::Stable: break;
    }
    if (c.kappa > 0.0) return Geometry::ParallelUp;
    if (c.kappa < 0.0) return Geometry::ParallelDown;
    return Geometry::Flat;
}

namespace {

// Equal-valued pivots within k bars of each other are one plateau; keep one
// point at its center so a flat top does not pin the line's slope to zero.
std::vector<Point> merge_plateaus(const std::vector<Point>& pivots, int k) {
    std::vector<Point> out;
    std::size_t i = 0;
    while (i < pivots.size()) {
        std::size_t j = i;
        while (j + 1 < pivots.size() && pivots[j + 1].y == pivots[i].y && pivots[j + 1].x - pivots[j].x <= k) ++j;
        out.push_back({(pivots[i].x + pivots[j].x) / 2.0, pivots[i].y});
        i = j + 1;
    }
    return out;
}

} // namespace

TrendChannel detect_trend(Bars bars, const TrendConfig& config) {
    if (config.window < 2) throw PreconditionError("trend window N must be >= 2");
    if (config.window < 2 * config.pivot_k + 1)
        throw PreconditionError("trend window N must be >= 2k+1");
    const auto n = static_cast<std::size_t>(config.window);
    if (bars.size() < n)
        throw PreconditionError("trend detection needs " + std::to_string(n) + " bars, got " +
                                std::to_string(bars.size()));

    const Bars window = bars.last(n);
    const PivotSet pivots = find_pivots(window, config.pivot_k);

    std::vector<Point> highs;
    std::vector<Point> lows;
    highs.reserve(n);
    lows.reserve(n);
    double mean_close = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        highs.push_back({static_cast<double>(i), window[i].high});
        lows.push_back({static_cast<double>(i), window[i].low});
        mean_close += window[i].close;
    }
    mean_close /= static_cast<double>(n);

    TrendChannel c;
    c.window_length = n;
    c.window_offset = bars.size() - n;
    c.mean_close = mean_close;
    const auto pivot_highs = merge_plateaus(pivots.highs, config.pivot_k);
    const auto pivot_lows = merge_plateaus(pivots.lows, config.pivot_k);
    c.resistance_from_pivots = pivot_highs.size() >= 2;
    c.support_from_pivots = pivot_lows.size() >= 2;
    c.resistance = fit_line_ols(c.resistance_from_pivots ? pivot_highs : highs);
    c.support = fit_line_ols(c.support_from_pivots ? pivot_lows : lows);
    c.kappa = (c.resistance.slope + c.support.slope) / 2.0;
    c.kappa_rel = c.kappa / mean_close;
    c.label = classify(c.kappa_rel, config.tau);
    c.geometry = channel_geometry(c, n, config);
    return c;
}

namespace {

nlohmann::json line_json(const FittedLine& line, std::size_t length, const char* color) {
    const double last = static_cast<double>(length) - 1.0;
    return {{"slope", line.slope},
            {"intercept", line.intercept},
            {"r_squared", line.r_squared},
            {"n_points", line.n_points},
            {"color", color},
            {"start", {{"x", 0.0}, {"y", line.at(0.0)}}},
            {"end", {{"x", last}, {"y", line.at(last)}}}};
}

} // namespace

nlohmann::json to_json(const TrendChannel& c) {
    return {{"label", to_string(c.label)},
            {"geometry", to_string(c.geometry)},
            {"kappa", c.kappa},
            {"kappa_rel", c.kappa_rel},
            {"mean_close", c.mean_close},
            {"window_length", c.window_length},
            {"window_offset", c.window_offset},
            {"support", line_json(c.support, c.window_length, "blue")},
            {"resistance", line_json(c.resistance, c.window_length, "red")},
            {"summary", describe(c)}};
}

std::string describe(const TrendChannel& c) {
    char buf[512];
    const auto slope_word = [](double rel) {
        if (rel > 0.0) return "rising";
        if (rel < 0.0) return "falling";
        return "flat";
    };
    std::snprintf(buf, sizeof buf,
                  "%s over the last %zu bars: resistance %s (%.4f%%/bar), support %s (%.4f%%/bar), "
                  "average slope kappa=%.6g (%.4f%%/bar), channel geometry %s.",
                  std::string(to_string(c.label)).c_str(), c.window_length,
                  slope_word(c.resistance.slope), 100.0 * c.resistance_rel_slope(),
                  slope_word(c.support.slope), 100.0 * c.support_rel_slope(), c.kappa,
                  100.0 * c.kappa_rel, std::string(to_string(c.geometry)).c_str());
    return buf;
}

} // namespace quantdesk::trend
