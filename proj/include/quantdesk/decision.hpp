#pragma once

#include "quantdesk/indicators.hpp"
#include "quantdesk/patterns.hpp"
#include "quantdesk/trend.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>

namespace quantdesk::decision {

enum class Direction { Long, Short };

std::string_view to_string(Direction d);
/// "LONG"/"SHORT", case-insensitive. Anything else (including HOLD) is nullopt.
std::optional<Direction> parse_direction(std::string_view text);
inline int sign(Direction d) { return d == Direction::Long ? 1 : -1; }
inline Direction opposite(Direction d) { return d == Direction::Long ? Direction::Short : Direction::Long; }

inline constexpr double kMinRiskReward = 1.2;
inline constexpr double kMaxRiskReward = 1.8;
inline constexpr double kDefaultRho = 0.0005;
inline constexpr int kForecastHorizon = 3;

/// Directional call over the next three bars. There is no HOLD.
struct TradeDecision {
    Direction direction = Direction::Short;
    double risk_reward = 1.5;
    int forecast_horizon = kForecastHorizon;
    std::string justification;
    double confidence = 0.0;

    friend bool operator==(const TradeDecision&, const TradeDecision&) = default;
};

/// Everything the decision policy sees, plus per-source directional scores.
struct SignalState {
    indicators::IndicatorReport indicator;
    patterns::PatternReport pattern;
    std::optional<patterns::PatternMatch> top_pattern;
    trend::TrendChannel trend;
    double s_ind = 0.0;
    double s_pat = 0.0;
    double s_trend = 0.0;
    /// Sign of (positive sources - negative sources); 0 on a tie.
    int majority = 0;
    /// Sources whose score sign equals the majority sign (0 when there is no majority).
    int agreement = 0;
};

/// Number of scores whose sign matches the majority, and that majority.
std::pair<int, int> agreement_of(double s_ind, double s_pat, double s_trend);

SignalState aggregate_signals(const indicators::IndicatorReport& indicator,
                              const patterns::PatternReport& pattern,
                              const std::optional<patterns::PatternMatch>& top_pattern,
                              const trend::TrendChannel& channel, double tau = 3e-4);

struct Weights {
    double indicator = 0.35;
    double pattern = 0.30;
    double trend = 0.35;
};

/// c = weighted score sum; LONG if c > 0, SHORT if c < 0, trend slope then SHORT
/// on an exact tie. r = clamp(1.2 + 0.6|c|, 1.2, 1.8); confidence = |c| (clamped to 1).
TradeDecision decide_rule_based(const SignalState& state, const Weights& weights = {});

/// Stop and take-profit around an entry: the stop sits rho away, the target r*rho away.
struct RiskLevels {
    double entry = 0.0;
    double stop = 0.0;
    double target = 0.0;
    double rho = kDefaultRho;
    double risk_reward = 1.5;
    Direction direction = Direction::Long;
};

RiskLevels risk_levels(double entry, Direction direction, double rho, double risk_reward);

nlohmann::json to_json(const TradeDecision& d);
nlohmann::json to_json(const RiskLevels& r);
nlohmann::json to_json(const SignalState& s);

} // namespace quantdesk::decision
