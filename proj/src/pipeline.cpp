#include "quantdesk/pipeline.hpp"

#include "quantdesk/error.hpp"

#include <algorithm>

namespace quantdesk {

std::size_t AgentConfig::required_bars() const {
    const auto trend_bars = static_cast<std::size_t>(std::max(trend.window, 2 * trend.pivot_k + 1));
    return std::max({indicators.required_bars(), trend_bars,
                     static_cast<std::size_t>(std::max(patterns.min_span, 1))});
}

Analysis analyze_signals(Bars visible, const AgentConfig& config) {
    const std::size_t need = config.required_bars();
    if (visible.size() < need)
        throw PreconditionError("analysis window has " + std::to_string(visible.size()) +
                                " bars; at least " + std::to_string(need) + " are required");
    Analysis a;
    a.indicator = indicators::summarize_indicators(visible, config.indicators);
    a.channel = trend::detect_trend(visible, config.trend);
    a.pivots = trend::find_pivots(visible, config.trend.pivot_k);
    a.matches = patterns::detect_patterns(visible, a.pivots, a.channel, config.patterns);
    a.pattern = patterns::pattern_report(a.matches, a.channel);
    std::optional<patterns::PatternMatch> top;
    if (!a.matches.empty()) top = a.matches.front();
    a.state = decision::aggregate_signals(a.indicator, a.pattern, top, a.channel, config.trend.tau);
    return a;
}

Analysis analyze_window(Bars visible, const AgentConfig& config) {
    Analysis a = analyze_signals(visible, config);
    a.decision = decision::decide_rule_based(a.state, config.weights);
    a.risk = decision::risk_levels(visible.back().close, a.decision.direction, config.rho,
                                   a.decision.risk_reward);
    return a;
}

} // namespace quantdesk
