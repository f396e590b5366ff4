#include "quantdesk/patterns.hpp"

#include "quantdesk/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace quantdesk::patterns {

namespace {

using trend::Point;

constexpr std::array<PatternInfo, 16> kLibrary{{
    {PatternKind::InverseHeadAndShoulders, "Inverse Head and Shoulders",
     "Three lows with the middle one being the lowest; symmetrical structure, typically precedes "
     "an upward trend.",
     Bias::Bullish, true},
    {PatternKind::DoubleBottom, "Double Bottom",
     "Two similar lows with a rebound in between, forming a \"W\".", Bias::Bullish, true},
    {PatternKind::RoundedBottom, "Rounded Bottom",
     "Gradual decline followed by a gradual rise (\"U\"-shape).", Bias::Bullish, false},
    {PatternKind::HiddenBase, "Hidden Base",
     "Horizontal consolidation followed by a sudden up-break.", Bias::Bullish, false},
    {PatternKind::FallingWedge, "Falling Wedge", "Range narrows downward, often resolves upward.",
     Bias::Bullish, true},
    {PatternKind::RisingWedge, "Rising Wedge", "Range narrows upward, often resolves downward.",
     Bias::Bearish, true},
    {PatternKind::AscendingTriangle, "Ascending Triangle",
     "Rising support, flat resistance; breakout usually up.", Bias::Bullish, true},
    {PatternKind::DescendingTriangle, "Descending Triangle",
     "Falling resistance, flat support; breakout usually down.", Bias::Bearish, true},
    {PatternKind::BullishFlag, "Bullish Flag",
     "Sharp rise then brief downward channel before continuation.", Bias::Bullish, true},
    {PatternKind::BearishFlag, "Bearish Flag",
     "Sharp drop then brief upward channel before continuation.", Bias::Bearish, true},
    {PatternKind::Rectangle, "Rectangle", "Sideways range between horizontal support/resistance.",
     Bias::Neutral, true},
    {PatternKind::IslandReversal, "Island Reversal",
     "Two gaps in opposite directions forming an \"island\".", Bias::Neutral, false},
    {PatternKind::VShapedReversal, "V-shaped Reversal",
     "Sharp decline followed by sharp recovery (or vice versa).", Bias::Bullish, true},
    {PatternKind::RoundedTop, "Rounded Top", "Gradual peaking or bottoming, arc-shaped.",
     Bias::Bearish, false},
    {PatternKind::ExpandingTriangle, "Expanding Triangle",
     "Highs and lows spread wider, volatile swings.", Bias::Neutral, true},
    {PatternKind::SymmetricalTriangle, "Symmetrical Triangle",
     "Highs and lows converge; breakout after apex.", Bias::Neutral, true},
}};

// Criterion margins in [0.5, 1]: 0.5 exactly at the threshold, 1 once the
// threshold is exceeded by a full threshold's worth (or the value reaches 0
// for upper limits). Confidence is their product.
double at_least(double value, double threshold) {
    return 0.5 + 0.5 * std::clamp(value / threshold - 1.0, 0.0, 1.0);
}

double at_most(double value, double limit) {
    return 0.5 + 0.5 * std::clamp(1.0 - value / limit, 0.0, 1.0);
}

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

std::string bias_phrase(PatternKind kind) {
    switch (kind) {
    case PatternKind::InverseHeadAndShoulders:
        return "Bullish reversal bias: an inverse head and shoulders typically precedes an upward trend "
               "once the neckline breaks.";
    case PatternKind::DoubleBottom:
        return "Bullish reversal bias: a double bottom typically resolves upward through its neckline.";
    case PatternKind::FallingWedge:
        return "Bullish bias: a falling wedge often resolves upward.";
    case PatternKind::RisingWedge:
        return "Bearish bias: a rising wedge often resolves downward.";
    case PatternKind::AscendingTriangle:
        return "Bullish breakout bias: ascending triangles usually break up through resistance.";
    case PatternKind::DescendingTriangle:
        return "Bearish breakdown bias: descending triangles usually break down through support, more "
               "likely each time support is retested.";
    case PatternKind::BullishFlag:
        return "Bullish continuation bias: the consolidation usually resolves in the impulse direction.";
    case PatternKind::BearishFlag:
        return "Bearish continuation bias: the consolidation usually resolves in the impulse direction.";
    case PatternKind::Rectangle:
        return "Neutral bias: trade the break of either horizontal boundary.";
    case PatternKind::VShapedReversal:
        return "Bullish reversal bias: the sharp recovery rejects the lows.";
    case PatternKind::ExpandingTriangle:
        return "Neutral bias: widening swings signal volatility without direction.";
    case PatternKind::SymmetricalTriangle:
        return "Neutral bias: breakout direction is decided after the apex.";
    default:
        return std::string(to_string(info(kind).bias)) + " bias.";
    }
}

PatternMatch make_match(PatternKind kind, std::size_t start, std::size_t end, double confidence,
                        std::vector<Point> key_points, std::string structure, std::string symmetry) {
    PatternMatch m;
    m.kind = kind;
    m.span_start = start;
    m.span_end = end;
    m.confidence = std::clamp(confidence, 0.0, 1.0);
    m.key_points = std::move(key_points);
    m.structure_summary = std::move(structure);
    m.trend_summary = bias_phrase(kind);
    m.symmetry_summary = std::move(symmetry);
    return m;
}

std::size_t to_index(double x) { return static_cast<std::size_t>(std::llround(x)); }

// Pivots falling inside the channel window, in bars-window coordinates.
std::vector<Point> channel_pivots(const trend::PivotSet& pivots, const trend::TrendChannel& channel) {
    std::vector<Point> out;
    const double first = static_cast<double>(channel.window_offset);
    for (const auto& p : pivots.highs)
        if (p.x >= first) out.push_back(p);
    for (const auto& p : pivots.lows)
        if (p.x >= first) out.push_back(p);
    std::sort(out.begin(), out.end(), [](const Point& a, const Point& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    return out;
}

std::vector<Point> channel_edges(const trend::TrendChannel& channel) {
    const double last = static_cast<double>(channel.window_length) - 1.0;
    const double off = static_cast<double>(channel.window_offset);
    return {{off, channel.resistance.at(0.0)},
            {off, channel.support.at(0.0)},
            {off + last, channel.resistance.at(last)},
            {off + last, channel.support.at(last)}};
}

std::vector<Point> key_points_for(const trend::PivotSet& pivots, const trend::TrendChannel& channel) {
    auto pts = channel_pivots(pivots, channel);
    return pts.empty() ? channel_edges(channel) : pts;
}

double gap_ratio(const trend::TrendChannel& channel) {
    const double start = channel.gap_start();
    return start > 0.0 ? channel.gap_end() / start : 1.0;
}

} // namespace

const std::array<PatternInfo, 16>& pattern_library() { return kLibrary; }

const PatternInfo& info(PatternKind kind) { return kLibrary[static_cast<std::size_t>(kind)]; }

std::string_view to_string(PatternKind kind) {
    switch (kind) {
    case PatternKind::InverseHeadAndShoulders: return "InverseHeadAndShoulders";
    case PatternKind::DoubleBottom: return "DoubleBottom";
    case PatternKind::RoundedBottom: return "RoundedBottom";
    case PatternKind::HiddenBase: return "HiddenBase";
    case PatternKind::FallingWedge: return "FallingWedge";
    case PatternKind::RisingWedge: return "RisingWedge";
    case PatternKind::AscendingTriangle: return "AscendingTriangle";
    case PatternKind::DescendingTriangle: return "DescendingTriangle";
    case PatternKind::BullishFlag: return "BullishFlag";
    case PatternKind::BearishFlag: return "BearishFlag";
    case PatternKind::Rectangle: return "Rectangle";
    case PatternKind::IslandReversal: return "IslandReversal";
    case PatternKind::VShapedReversal: return "VShapedReversal";
    case PatternKind::RoundedTop: return "RoundedTop";
    case PatternKind::ExpandingTriangle: return "ExpandingTriangle";
    case PatternKind::SymmetricalTriangle: return "SymmetricalTriangle";
    }
    return "Unknown";
}

std::string_view to_string(Bias bias) {
    switch (bias) {
    case Bias::Bullish: return "bullish";
    case Bias::Bearish: return "bearish";
    case Bias::Neutral: return "neutral";
    }
    return "neutral";
}

int bias_sign(Bias bias) {
    return bias == Bias::Bullish ? 1 : bias == Bias::Bearish ? -1 : 0;
}

std::string library_text() {
    std::string out;
    int i = 1;
    for (const auto& p : kLibrary) {
        out += std::to_string(i++) + ". " + std::string(p.name) + ": " + std::string(p.description) + "\n";
    }
    return out;
}

std::optional<PatternMatch> detect_double_bottom(const trend::PivotSet& pivots,
                                                 const PatternConfig& config) {
    const auto& lows = pivots.lows;
    if (lows.size() < 2 || pivots.highs.empty()) return std::nullopt;
    const Point& first = lows[lows.size() - 2];
    const Point& second = lows[lows.size() - 1];
    const double mean = (first.y + second.y) / 2.0;
    const double eps = config.price_tolerance;

    const double spread = std::abs(first.y - second.y) / mean;
    if (spread > eps) return std::nullopt;

    // A third touch of the same level is a support shelf, not a "W".
    if (lows.size() >= 3 && std::abs(lows[lows.size() - 3].y - mean) / mean <= eps) return std::nullopt;

    const Point* neck = nullptr;
    for (const auto& h : pivots.highs) {
        if (h.x > first.x && h.x < second.x && (!neck || h.y > neck->y)) neck = &h;
    }
    if (!neck) return std::nullopt;
    const double rebound = (neck->y - std::max(first.y, second.y)) / mean;
    if (rebound < 2.0 * eps) return std::nullopt;

    const double confidence = at_most(spread, eps) * at_least(rebound, 2.0 * eps);
    return make_match(
        PatternKind::DoubleBottom, to_index(first.x), to_index(second.x), confidence,
        {first, *neck, second},
        fmt("Two similar lows at %.4g (bar %zu) and %.4g (bar %zu), %.2f%% apart, with a rebound to "
            "a neckline at %.4g between them.",
            first.y, to_index(first.x), second.y, to_index(second.x), 100.0 * spread, neck->y),
        fmt("W-shaped: the two troughs sit within %.2f%% of each other around a %.2f%% neckline "
            "rebound.",
            100.0 * spread, 100.0 * rebound));
}

std::optional<PatternMatch> detect_triangles(const trend::PivotSet& pivots,
                                             const trend::TrendChannel& channel,
                                             std::size_t window_length, const PatternConfig& config) {
    const double rs_r = channel.resistance_rel_slope();
    const double rs_s = channel.support_rel_slope();
    const double thr = config.slope_threshold;
    const double flat = config.flat_bound;
    const auto gap = trend::gap_trend(channel, config.gap_tolerance);
    const std::size_t start = channel.window_offset;
    const std::size_t end = window_length - 1;
    const double g0 = channel.gap_start();
    const double g1 = channel.gap_end();
    const auto convergence = fmt("Triangular convergence: the channel gap narrows from %.4g to %.4g.", g0, g1);

    if (rs_s > thr && std::abs(rs_r) < flat) {
        return make_match(PatternKind::AscendingTriangle, start, end,
                          at_least(rs_s, thr) * at_most(std::abs(rs_r), flat),
                          key_points_for(pivots, channel),
                          fmt("Higher lows along a rising support (%+.4f%%/bar) under flat resistance "
                              "near %.4g.",
                              100.0 * rs_s, channel.resistance.at(channel.window_length - 1.0)),
                          convergence);
    }
    if (rs_r < -thr && std::abs(rs_s) < flat) {
        return make_match(PatternKind::DescendingTriangle, start, end,
                          at_least(-rs_r, thr) * at_most(std::abs(rs_s), flat),
                          key_points_for(pivots, channel),
                          fmt("Lower highs along a falling resistance (%+.4f%%/bar) over flat support "
                              "near %.4g.",
                              100.0 * rs_r, channel.support.at(channel.window_length - 1.0)),
                          convergence);
    }
    if (rs_r < -thr && rs_s > thr && gap == trend::GapTrend::Shrinking) {
        return make_match(PatternKind::SymmetricalTriangle, start, end,
                          at_least(-rs_r, thr) * at_least(rs_s, thr), key_points_for(pivots, channel),
                          fmt("Lower highs (%+.4f%%/bar) and higher lows (%+.4f%%/bar) converge toward "
                              "an apex.",
                              100.0 * rs_r, 100.0 * rs_s),
                          convergence);
    }
    if (rs_r > 0.0 && rs_s < 0.0 && gap == trend::GapTrend::Growing) {
        const double ratio = gap_ratio(channel);
        return make_match(PatternKind::ExpandingTriangle, start, end,
                          at_least(ratio - 1.0, config.gap_tolerance), key_points_for(pivots, channel),
                          fmt("Higher highs (%+.4f%%/bar) and lower lows (%+.4f%%/bar) spread wider.",
                              100.0 * rs_r, 100.0 * rs_s),
                          fmt("Expanding symmetry: the channel gap widens from %.4g to %.4g.", g0, g1));
    }
    return std::nullopt;
}

namespace {

std::optional<PatternMatch> detect_flag(Bars bars, const PatternConfig& config) {
    const std::size_t n = bars.size();
    const auto m = static_cast<std::size_t>(config.impulse_bars);
    const auto min_c = static_cast<std::size_t>(config.min_consolidation);
    const auto max_c = static_cast<std::size_t>(config.max_consolidation);
    if (m < 1 || n < m + min_c + 1) return std::nullopt;

    // Strongest impulse whose trailing consolidation has an admissible length.
    std::optional<std::size_t> best_end;
    double best_ret = 0.0;
    for (std::size_t e = m; e + min_c < n; ++e) {
        const std::size_t cons = n - 1 - e;
        if (cons > max_c) continue;
        const double ret = bars[e].close / bars[e - m].close - 1.0;
        if (std::abs(ret) >= std::abs(best_ret)) {
            best_ret = ret;
            best_end = e;
        }
    }
    if (!best_end || std::abs(best_ret) < config.impulse_threshold) return std::nullopt;

    const std::size_t e = *best_end;
    std::vector<Point> highs;
    std::vector<Point> lows;
    double mean = 0.0;
    for (std::size_t i = e + 1; i < n; ++i) {
        highs.push_back({static_cast<double>(i - e - 1), bars[i].high});
        lows.push_back({static_cast<double>(i - e - 1), bars[i].low});
        mean += bars[i].close;
    }
    mean /= static_cast<double>(highs.size());
    const auto upper = trend::fit_line_ols(highs);
    const auto lower = trend::fit_line_ols(lows);
    const double last = static_cast<double>(highs.size()) - 1.0;
    const double g0 = upper.at(0.0) - lower.at(0.0);
    const double g1 = upper.at(last) - lower.at(last);
    if (g0 <= 0.0) return std::nullopt;
    const double drift = std::abs(g1 / g0 - 1.0);
    if (drift > config.gap_tolerance) return std::nullopt;

    const bool bullish = best_ret > 0.0;
    const double counter = bullish ? -1.0 : 1.0;
    const double rs_u = counter * upper.slope / mean;
    const double rs_l = counter * lower.slope / mean;
    if (rs_u < config.flat_bound || rs_l < config.flat_bound) return std::nullopt;

    // The flag must not give back more than half of the pole.
    const double pole_base = bars[e - m].close;
    const double pole_top = bars[e].close;
    const double half = pole_base + 0.5 * (pole_top - pole_base);
    for (std::size_t i = e + 1; i < n; ++i) {
        if (bullish ? bars[i].low < half : bars[i].high > half) return std::nullopt;
    }

    const double confidence = at_least(std::abs(best_ret), config.impulse_threshold) *
                              at_most(drift, config.gap_tolerance);
    const auto kind = bullish ? PatternKind::BullishFlag : PatternKind::BearishFlag;
    return make_match(
        kind, e - m, n - 1, confidence,
        {{static_cast<double>(e - m), pole_base}, {static_cast<double>(e), pole_top},
         {static_cast<double>(n - 1), bars[n - 1].close}},
        fmt("%s of %+.2f%% over %zu bars, then a %zu-bar %s channel (%+.4f%%/bar).",
            bullish ? "Sharp rise" : "Sharp drop", 100.0 * best_ret, m, n - 1 - e,
            bullish ? "downward" : "upward", 100.0 * upper.slope / mean),
        fmt("Parallel flag: channel width changes by %.1f%% across the consolidation.", 100.0 * drift));
}

std::optional<PatternMatch> detect_wedge_or_rectangle(const trend::PivotSet& pivots,
                                                      const trend::TrendChannel& channel,
                                                      std::size_t window_length,
                                                      const PatternConfig& config) {
    const double rs_r = channel.resistance_rel_slope();
    const double rs_s = channel.support_rel_slope();
    const double thr = config.slope_threshold;
    const double flat = config.flat_bound;
    const auto gap = trend::gap_trend(channel, config.gap_tolerance);
    const std::size_t start = channel.window_offset;
    const std::size_t end = window_length - 1;
    const double ratio = gap_ratio(channel);

    const bool both_up = rs_r > thr && rs_s > thr;
    const bool both_down = rs_r < -thr && rs_s < -thr;
    if ((both_up || both_down) && gap == trend::GapTrend::Shrinking) {
        const double confidence = at_least(std::abs(rs_r), thr) * at_least(std::abs(rs_s), thr) *
                                  at_least(1.0 - ratio, config.gap_tolerance);
        return make_match(both_up ? PatternKind::RisingWedge : PatternKind::FallingWedge, start, end,
                          confidence, key_points_for(pivots, channel),
                          fmt("Both boundaries slope %s (resistance %+.4f%%/bar, support %+.4f%%/bar) "
                              "while the range narrows.",
                              both_up ? "upward" : "downward", 100.0 * rs_r, 100.0 * rs_s),
                          fmt("Wedge convergence: the gap shrinks to %.0f%% of its starting width.",
                              100.0 * ratio));
    }

    const double gap_rel = channel.gap_start() / channel.mean_close;
    if (std::abs(rs_r) < flat && std::abs(rs_s) < flat && gap == trend::GapTrend::Stable &&
        channel.resistance_from_pivots && channel.support_from_pivots &&
        gap_rel >= 2.0 * config.price_tolerance) {
        const double confidence = at_most(std::abs(rs_r), flat) * at_most(std::abs(rs_s), flat);
        return make_match(PatternKind::Rectangle, start, end, confidence,
                          key_points_for(pivots, channel),
                          fmt("Sideways range between horizontal resistance near %.4g and support "
                              "near %.4g.",
                              channel.resistance.at(channel.window_length - 1.0),
                              channel.support.at(channel.window_length - 1.0)),
                          fmt("Parallel horizontal boundaries %.2f%% apart.", 100.0 * gap_rel));
    }
    return std::nullopt;
}

std::optional<PatternMatch> better(std::optional<PatternMatch> a, std::optional<PatternMatch> b) {
    if (!a) return b;
    if (!b) return a;
    return b->confidence > a->confidence ? b : a;
}

} // namespace

std::optional<PatternMatch> detect_flags_and_wedges(Bars bars, const trend::PivotSet& pivots,
                                                    const trend::TrendChannel& channel,
                                                    const PatternConfig& config) {
    return better(detect_flag(bars, config),
                  detect_wedge_or_rectangle(pivots, channel, bars.size(), config));
}

std::optional<PatternMatch> detect_v_and_inverse_hs(Bars bars, const trend::PivotSet& pivots,
                                                    const PatternConfig& config) {
    const double eps = config.price_tolerance;
    const auto& lows = pivots.lows;

    // Latest triple of consecutive pivot lows forming head and shoulders.
    for (std::size_t i = lows.size(); i >= 3; --i) {
        const Point& left = lows[i - 3];
        const Point& head = lows[i - 2];
        const Point& right = lows[i - 1];
        if (!(head.y < left.y && head.y < right.y)) continue;
        const double shoulders = (left.y + right.y) / 2.0;
        const double spread = std::abs(left.y - right.y) / shoulders;
        const double depth = (std::min(left.y, right.y) - head.y) / shoulders;
        if (spread > eps || depth < eps) continue;
        return make_match(
            PatternKind::InverseHeadAndShoulders, to_index(left.x), to_index(right.x),
            at_most(spread, eps) * at_least(depth, eps), {left, head, right},
            fmt("Three lows: shoulders at %.4g and %.4g around a deeper head at %.4g (%.2f%% below).",
                left.y, right.y, head.y, 100.0 * depth),
            fmt("Symmetrical: shoulders within %.2f%% of each other, %zu and %zu bars from the head.",
                100.0 * spread, to_index(head.x - left.x), to_index(right.x - head.x)));
    }

    if (bars.size() < 3 || lows.empty()) return std::nullopt;
    std::size_t low_index = 0;
    for (std::size_t i = 1; i < bars.size(); ++i)
        if (bars[i].low < bars[low_index].low) low_index = i;
    const bool is_pivot = std::any_of(lows.begin(), lows.end(),
                                      [&](const Point& p) { return to_index(p.x) == low_index; });
    if (!is_pivot) return std::nullopt;
    // A V has one isolated trough; repeated nearby lows belong to ranges and bases.
    const double trough = bars[low_index].low;
    for (const auto& p : lows) {
        if (to_index(p.x) == low_index) continue;
        if (p.y < trough * (1.0 + 0.5 * config.impulse_threshold)) return std::nullopt;
    }

    const auto m = static_cast<std::size_t>(std::max(config.impulse_bars, 1));
    std::size_t left_top = low_index;
    for (std::size_t j = low_index >= m ? low_index - m : 0; j < low_index; ++j)
        if (left_top == low_index || bars[j].high > bars[left_top].high) left_top = j;
    std::size_t right_top = low_index;
    for (std::size_t j = low_index + 1; j <= std::min(bars.size() - 1, low_index + m); ++j)
        if (right_top == low_index || bars[j].high > bars[right_top].high) right_top = j;
    if (left_top == low_index || right_top == low_index) return std::nullopt;

    const double drop = (bars[left_top].high - trough) / bars[left_top].high;
    const double rise = (bars[right_top].high - trough) / trough;
    if (drop < config.impulse_threshold || rise < config.impulse_threshold) return std::nullopt;
    const auto as_point = [&](std::size_t i, double y) { return Point{static_cast<double>(i), y}; };
    return make_match(
        PatternKind::VShapedReversal, left_top, right_top,
        at_least(drop, config.impulse_threshold) * at_least(rise, config.impulse_threshold),
        {as_point(left_top, bars[left_top].high), as_point(low_index, trough),
         as_point(right_top, bars[right_top].high)},
        fmt("Sharp decline of %.2f%% into a low at %.4g followed by a %.2f%% recovery.", 100.0 * drop,
            trough, 100.0 * rise),
        fmt("V-shaped: %zu bars down, %zu bars up.", low_index - left_top, right_top - low_index));
}

std::vector<PatternMatch> detect_patterns(Bars bars, const trend::PivotSet& pivots,
                                          const trend::TrendChannel& channel,
                                          const PatternConfig& config) {
    if (bars.size() < static_cast<std::size_t>(config.min_span)) return {};
    if (channel.window_offset + channel.window_length != bars.size())
        throw PreconditionError("trend channel was not computed on this window");

    std::vector<std::optional<PatternMatch>> found{
        detect_double_bottom(pivots, config),
        detect_triangles(pivots, channel, bars.size(), config),
        detect_flags_and_wedges(bars, pivots, channel, config),
        detect_v_and_inverse_hs(bars, pivots, config),
    };

    std::map<PatternKind, PatternMatch> best;
    for (auto& m : found) {
        if (!m) continue;
        auto it = best.find(m->kind);
        if (it == best.end()) best.emplace(m->kind, std::move(*m));
        else if (m->confidence > it->second.confidence) it->second = std::move(*m);
    }
    std::vector<PatternMatch> out;
    for (auto& [kind, m] : best) out.push_back(std::move(m));
    std::stable_sort(out.begin(), out.end(), [](const PatternMatch& a, const PatternMatch& b) {
        return a.confidence > b.confidence;
    });
    return out;
}

PatternReport pattern_report(const std::vector<PatternMatch>& matches,
                             const trend::TrendChannel& channel) {
    PatternReport report;
    const std::string label(trend::to_string(channel.label));
    if (matches.empty()) {
        report.structure = "No recognizable chart pattern in the window.";
        report.trend = "No pattern bias; defer to the trend channel (" + label + ").";
        report.symmetry = "Channel geometry: " + std::string(trend::to_string(channel.geometry)) + ".";
        return report;
    }
    const PatternMatch& top = matches.front();
    report.kind = top.kind;
    report.structure = std::string(info(top.kind).name) + ": " + top.structure_summary;
    report.symmetry = top.symmetry_summary;

    const int bias = bias_sign(info(top.kind).bias);
    const int channel_sign = channel.label == trend::TrendLabel::Uptrend     ? 1
                             : channel.label == trend::TrendLabel::Downtrend ? -1
                                                                             : 0;
    std::string context;
    if (bias == 0) {
        context = " No directional bias from the pattern; defer to the " + label + " channel.";
    } else if (channel_sign == 0) {
        context = " The channel is sideways, so the pattern bias carries the direction.";
    } else if (bias == channel_sign) {
        context = " Consistent with the prevailing " + label + ".";
    } else {
        context = " Potential reversal of the prevailing " + label + ".";
    }
    report.trend = top.trend_summary + context;
    return report;
}

nlohmann::json to_json(const PatternMatch& m) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : m.key_points) points.push_back({{"x", p.x}, {"y", p.y}});
    return {{"kind", to_string(m.kind)},
            {"name", info(m.kind).name},
            {"bias", to_string(info(m.kind).bias)},
            {"span", {m.span_start, m.span_end}},
            {"confidence", m.confidence},
            {"structure_summary", m.structure_summary},
            {"trend_summary", m.trend_summary},
            {"symmetry_summary", m.symmetry_summary},
            {"key_points", points}};
}

nlohmann::json to_json(const PatternReport& r) {
    return {{"pattern", r.kind ? nlohmann::json(to_string(*r.kind)) : nlohmann::json(nullptr)},
            {"structure", r.structure},
            {"trend", r.trend},
            {"symmetry", r.symmetry}};
}

} // namespace quantdesk::patterns
