#pragma once

#include "quantdesk/market_data.hpp"
#include "quantdesk/trend.hpp"

#include <json.hpp>

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace quantdesk::patterns {

enum class PatternKind {
    InverseHeadAndShoulders,
    DoubleBottom,
    RoundedBottom,
    HiddenBase,
    FallingWedge,
    RisingWedge,
    AscendingTriangle,
    DescendingTriangle,
    BullishFlag,
    BearishFlag,
    Rectangle,
    IslandReversal,
    VShapedReversal,
    RoundedTop,
    ExpandingTriangle,
    SymmetricalTriangle,
};

enum class Bias { Bullish, Bearish, Neutral };

struct PatternInfo {
    PatternKind kind;
    std::string_view name;
    std::string_view description;
    Bias bias;
    bool has_detector;
};

/// The pattern library, one entry per kind, in library order.
const std::array<PatternInfo, 16>& pattern_library();
const PatternInfo& info(PatternKind kind);
std::string_view to_string(PatternKind kind);
std::string_view to_string(Bias bias);
/// +1 bullish, -1 bearish, 0 neutral.
int bias_sign(Bias bias);

/// Prompt-ready text of the whole library (numbered "Name: description" lines).
std::string library_text();

struct PatternConfig {
    double price_tolerance = 0.004;   // eps_rel
    double impulse_threshold = 0.02;  // relative move over impulse_bars
    int impulse_bars = 5;
    double slope_threshold = 3e-4;    // per-bar relative slope counted as significant
    double flat_bound = 1.5e-4;       // per-bar relative slope counted as flat
    double gap_tolerance = 0.15;
    int min_span = 10;
    int min_consolidation = 5;
    int max_consolidation = 25;
};

struct PatternMatch {
    PatternKind kind = PatternKind::Rectangle;
    std::size_t span_start = 0;
    std::size_t span_end = 0;  // inclusive
    double confidence = 0.0;
    std::string structure_summary;
    std::string trend_summary;
    std::string symmetry_summary;
    std::vector<trend::Point> key_points;
};

/// All detectors, best first; at most one match per kind. Empty means no pattern.
/// `pivots` and `channel` must come from the same `bars` window.
std::vector<PatternMatch> detect_patterns(Bars bars, const trend::PivotSet& pivots,
                                          const trend::TrendChannel& channel,
                                          const PatternConfig& config = {});

std::optional<PatternMatch> detect_double_bottom(const trend::PivotSet& pivots,
                                                 const PatternConfig& config = {});

/// `window_length` is the length of the bars window the pivots came from.
std::optional<PatternMatch> detect_triangles(const trend::PivotSet& pivots,
                                             const trend::TrendChannel& channel,
                                             std::size_t window_length,
                                             const PatternConfig& config = {});

std::optional<PatternMatch> detect_flags_and_wedges(Bars bars, const trend::PivotSet& pivots,
                                                    const trend::TrendChannel& channel,
                                                    const PatternConfig& config = {});

std::optional<PatternMatch> detect_v_and_inverse_hs(Bars bars, const trend::PivotSet& pivots,
                                                    const PatternConfig& config = {});

struct PatternReport {
    std::optional<PatternKind> kind;
    std::string structure;
    std::string trend;
    std::string symmetry;
};

PatternReport pattern_report(const std::vector<PatternMatch>& matches,
                             const trend::TrendChannel& channel);

nlohmann::json to_json(const PatternMatch& match);
nlohmann::json to_json(const PatternReport& report);

} // namespace quantdesk::patterns
