#pragma once

#include "quantdesk/market_data.hpp"

#include <json.hpp>

#include <span>
#include <string_view>
#include <vector>

namespace quantdesk::trend {

/// A price anchored to a bar index within the analyzed window.
struct Point {
    double x = 0.0;  // bar index
    double y = 0.0;  // price

    friend bool operator==(const Point&, const Point&) = default;
};

/// Swing highs and lows: a pivot high at i dominates highs on [i-k, i+k].
struct PivotSet {
    std::vector<Point> highs;
    std::vector<Point> lows;
    int k = 0;
};

/// Interior pivots only; the first and last k bars never qualify.
PivotSet find_pivots(Bars bars, int k);

/// y = slope * x + intercept, fitted by ordinary least squares.
struct FittedLine {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 1.0;
    std::size_t n_points = 0;

    double at(double x) const noexcept { return slope * x + intercept; }
};

FittedLine fit_line_ols(std::span<const Point> points);

enum class TrendLabel { Uptrend, Downtrend, Sideways };

enum class Geometry {
    ParallelUp,
    ParallelDown,
    ConvergingWedgeUp,
    ConvergingWedgeDown,
    SymmetricConverging,
    Diverging,
    Flat,
};

std::string_view to_string(TrendLabel label);
std::string_view to_string(Geometry geometry);

struct TrendConfig {
    int window = 40;          // N: trailing bars fitted
    double tau = 3e-4;        // threshold on kappa_rel (slope per bar / mean close)
    int pivot_k = 3;
    double gap_tolerance = 0.15;  // eta on the end/start gap ratio
    /// Relative slope below which a line counts as flat; defaults to tau / 2.
    double flat_bound() const noexcept { return tau / 2.0; }
};

/// Support/resistance pair fitted over the trailing window. Line x-coordinates
/// are indices into that trailing window (0 .. window_length-1).
struct TrendChannel {
    FittedLine resistance;
    FittedLine support;
    double kappa = 0.0;
    double kappa_rel = 0.0;
    double mean_close = 0.0;
    std::size_t window_length = 0;
    /// Offset of the channel window inside the bars passed to detect_trend.
    std::size_t window_offset = 0;
    bool resistance_from_pivots = false;
    bool support_from_pivots = false;
    TrendLabel label = TrendLabel::Sideways;
    Geometry geometry = Geometry::Flat;

    double resistance_rel_slope() const noexcept { return resistance.slope / mean_close; }
    double support_rel_slope() const noexcept { return support.slope / mean_close; }
    double gap_start() const noexcept { return resistance.at(0) - support.at(0); }
    double gap_end() const noexcept {
        const double x = static_cast<double>(window_length) - 1.0;
        return resistance.at(x) - support.at(x);
    }
};

TrendLabel classify(double kappa_rel, double tau);

/// Fits the trailing `config.window` bars and classifies the channel.
TrendChannel detect_trend(Bars bars, const TrendConfig& config = {});

/// Channel shape from the slope signs and how the gap evolves across the window.
Geometry channel_geometry(const TrendChannel& channel, std::size_t window_length,
                          const TrendConfig& config = {});

/// How the end-of-window gap compares with the start-of-window gap.
enum class GapTrend { Shrinking, Stable, Growing };
GapTrend gap_trend(const TrendChannel& channel, double tolerance);

nlohmann::json to_json(const TrendChannel& channel);
std::string describe(const TrendChannel& channel);

} // namespace quantdesk::trend
