#pragma once

#include "quantdesk/decision.hpp"
#include "quantdesk/indicators.hpp"
#include "quantdesk/patterns.hpp"
#include "quantdesk/trend.hpp"

#include <vector>

namespace quantdesk {

/// Configuration of the full indicator -> trend -> pattern -> decision chain.
struct AgentConfig {
    indicators::IndicatorConfig indicators{};
    trend::TrendConfig trend{};
    patterns::PatternConfig patterns{};
    decision::Weights weights{};
    double rho = decision::kDefaultRho;

    /// Fewest visible bars every analyzer accepts.
    std::size_t required_bars() const;
};

/// Every intermediate product of one analysis, computed on visible bars only.
struct Analysis {
    indicators::IndicatorReport indicator;
    trend::PivotSet pivots;
    trend::TrendChannel channel;
    std::vector<patterns::PatternMatch> matches;
    patterns::PatternReport pattern;
    decision::SignalState state;
    decision::TradeDecision decision;
    decision::RiskLevels risk;
};

/// Runs the analyzers and the rule policy; entry is the last visible close.
Analysis analyze_window(Bars visible, const AgentConfig& config = {});

/// Reports and signal state without the final decision (used by the LLM backend).
Analysis analyze_signals(Bars visible, const AgentConfig& config = {});

} // namespace quantdesk
