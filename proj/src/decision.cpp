#include "quantdesk/decision.hpp"

#include "quantdesk/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>

namespace quantdesk::decision {

namespace {

int sgn(double v) { return (v > 0.0) - (v < 0.0); }

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%+.*f", decimals, v);
    return buf;
}

} // namespace

std::string_view to_string(Direction d) { return d == Direction::Long ? "LONG" : "SHORT"; }

std::optional<Direction> parse_direction(std::string_view text) {
    std::string t;
    for (char c : text) {
        if (!std::isspace(static_cast<unsigned char>(c)))
            t.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    if (t == "LONG") return Direction::Long;
    if (t == "SHORT") return Direction::Short;
    return std::nullopt;
}

std::pair<int, int> agreement_of(double s_ind, double s_pat, double s_trend) {
    const int signs[] = {sgn(s_ind), sgn(s_pat), sgn(s_trend)};
    int balance = 0;
    for (int s : signs) balance += s;
    const int majority = sgn(static_cast<double>(balance));
    if (majority == 0) return {0, 0};
    return {static_cast<int>(std::count(std::begin(signs), std::end(signs), majority)), majority};
}

SignalState aggregate_signals(const indicators::IndicatorReport& indicator,
                              const patterns::PatternReport& pattern,
                              const std::optional<patterns::PatternMatch>& top_pattern,
                              const trend::TrendChannel& channel, double tau) {
    if (tau <= 0.0) throw PreconditionError("tau must be > 0");
    SignalState s;
    s.indicator = indicator;
    s.pattern = pattern;
    s.top_pattern = top_pattern;
    s.trend = channel;
    s.s_ind = std::clamp(indicator.momentum_score, -1.0, 1.0);
    s.s_pat = top_pattern
                  ? patterns::bias_sign(patterns::info(top_pattern->kind).bias) * top_pattern->confidence
                  : 0.0;
    const int label_sign = channel.label == trend::TrendLabel::Uptrend     ? 1
                           : channel.label == trend::TrendLabel::Downtrend ? -1
                                                                           : 0;
    s.s_trend = label_sign * std::min(1.0, std::abs(channel.kappa_rel) / tau);
    std::tie(s.agreement, s.majority) = agreement_of(s.s_ind, s.s_pat, s.s_trend);
    return s;
}

TradeDecision decide_rule_based(const SignalState& state, const Weights& weights) {
    const std::array<std::pair<const char*, double>, 3> parts{{
        {"indicators", weights.indicator * state.s_ind},
        {"pattern", weights.pattern * state.s_pat},
        {"trend", weights.trend * state.s_trend},
    }};
    const double c = parts[0].second + parts[1].second + parts[2].second;

    TradeDecision d;
    std::string why;
    if (c > 0.0) {
        d.direction = Direction::Long;
    } else if (c < 0.0) {
        d.direction = Direction::Short;
    } else if (state.trend.kappa_rel != 0.0) {
        d.direction = state.trend.kappa_rel > 0.0 ? Direction::Long : Direction::Short;
        why = "Signals cancel; deferring to the dominant trendline slope. ";
    } else {
        d.direction = Direction::Short;
        why = "Signals cancel and the channel is flat; defaulting to SHORT. ";
    }
    d.confidence = std::min(1.0, std::abs(c));
    d.risk_reward = std::clamp(kMinRiskReward + 0.6 * std::abs(c), kMinRiskReward, kMaxRiskReward);
    d.forecast_horizon = kForecastHorizon;

    // Dominant sources first.
    auto ranked = parts;
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return std::abs(a.second) > std::abs(b.second);
    });
    why += std::string(to_string(d.direction)) + " with composite score " + fixed(c, 3) + ".";
    for (const auto& [name, contribution] : ranked) {
        if (contribution == 0.0) continue;
        why += std::string(" ") + name + " " + fixed(contribution, 3) +
               (sgn(contribution) == sign(d.direction) ? " (supports)" : " (opposes)");
        if (std::string_view(name) == "pattern" && state.pattern.kind)
            why += " [" + std::string(patterns::info(*state.pattern.kind).name) + "]";
        else if (std::string_view(name) == "trend")
            why += " [" + std::string(trend::to_string(state.trend.label)) + "]";
        why += ";";
    }
    if (!why.empty() && why.back() == ';') why.back() = '.';
    d.justification = why;
    return d;
}

RiskLevels risk_levels(double entry, Direction direction, double rho, double risk_reward) {
    if (!(entry > 0.0) || !std::isfinite(entry)) throw PreconditionError("entry price must be > 0");
    if (!(rho > 0.0) || !std::isfinite(rho)) throw PreconditionError("rho must be > 0");
    if (!(risk_reward >= kMinRiskReward && risk_reward <= kMaxRiskReward))
        throw PreconditionError("risk-reward ratio must lie in [1.2, 1.8]");
    const double risk = entry * rho;
    const double reward = risk_reward * risk;
    RiskLevels levels;
    levels.entry = entry;
    levels.rho = rho;
    levels.risk_reward = risk_reward;
    levels.direction = direction;
    if (direction == Direction::Long) {
        levels.stop = entry - risk;
        levels.target = entry + reward;
    } else {
        levels.stop = entry + risk;
        levels.target = entry - reward;
    }
    return levels;
}

nlohmann::json to_json(const TradeDecision& d) {
    return {{"decision", to_string(d.direction)},
            {"risk_reward_ratio", d.risk_reward},
            {"forecast_horizon", d.forecast_horizon},
            {"justification", d.justification},
            {"confidence", d.confidence}};
}

nlohmann::json to_json(const RiskLevels& r) {
    return {{"direction", to_string(r.direction)},
            {"entry", r.entry},
            {"stop", r.stop},
            {"target", r.target},
            {"rho", r.rho},
            {"risk_reward_ratio", r.risk_reward}};
}

nlohmann::json to_json(const SignalState& s) {
    return {{"scores", {{"indicator", s.s_ind}, {"pattern", s.s_pat}, {"trend", s.s_trend}}},
            {"majority", s.majority},
            {"agreement", s.agreement}};
}

} // namespace quantdesk::decision
