#include "quantdesk/indicators.hpp"

#include "quantdesk/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace quantdesk::indicators {

namespace {

void require_period(int period, const char* name) {
    if (period < 1) throw PreconditionError(std::string(name) + " period must be >= 1");
}

void require_length(std::size_t have, std::size_t need, const char* name) {
    if (have < need)
        throw PreconditionError(std::string(name) + " needs at least " + std::to_string(need) +
                                " bars, got " + std::to_string(have));
}

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

} // namespace

void IndicatorConfig::validate() const {
    require_period(rsi_period, "RSI");
    require_period(roc_period, "ROC");
    require_period(stoch_k_period, "Stochastic %K");
    require_period(stoch_d_period, "Stochastic %D");
    require_period(willr_period, "Williams %R");
    require_period(macd_fast, "MACD fast");
    require_period(macd_slow, "MACD slow");
    require_period(macd_signal, "MACD signal");
    if (macd_fast >= macd_slow) throw PreconditionError("MACD fast period must be below slow period");
}

std::size_t IndicatorConfig::required_bars() const {
    const std::size_t needs[] = {
        static_cast<std::size_t>(rsi_period) + 1,
        static_cast<std::size_t>(roc_period) + 1,
        static_cast<std::size_t>(stoch_k_period + stoch_d_period - 1),
        static_cast<std::size_t>(willr_period),
        static_cast<std::size_t>(macd_slow),
        2,
    };
    return *std::max_element(std::begin(needs), std::end(needs));
}

std::vector<double> ema(Prices prices, int period) {
    require_period(period, "EMA");
    if (prices.empty()) throw PreconditionError("EMA of an empty series");
    const double alpha = 2.0 / (period + 1.0);
    std::vector<double> out(prices.size());
    out[0] = prices[0];
    for (std::size_t t = 1; t < prices.size(); ++t)
        out[t] = alpha * prices[t] + (1.0 - alpha) * out[t - 1];
    return out;
}

MacdSeries macd(Prices prices, int fast, int slow, int signal) {
    require_period(fast, "MACD fast");
    require_period(slow, "MACD slow");
    require_period(signal, "MACD signal");
    require_length(prices.size(), static_cast<std::size_t>(slow), "MACD");
    const auto fast_ema = ema(prices, fast);
    const auto slow_ema = ema(prices, slow);
    MacdSeries out;
    out.macd.resize(prices.size());
    for (std::size_t t = 0; t < prices.size(); ++t) out.macd[t] = fast_ema[t] - slow_ema[t];
    out.signal = ema(out.macd, signal);
    out.histogram.resize(prices.size());
    for (std::size_t t = 0; t < prices.size(); ++t) out.histogram[t] = out.macd[t] - out.signal[t];
    return out;
}

std::vector<double> rsi(Prices prices, int period) {
    require_period(period, "RSI");
    require_length(prices.size(), static_cast<std::size_t>(period) + 1, "RSI");
    const auto p = static_cast<std::size_t>(period);
    const auto value = [](double gain, double loss) {
        if (loss == 0.0) return gain == 0.0 ? 50.0 : 100.0;
        if (gain == 0.0) return 0.0;
        return 100.0 - 100.0 / (1.0 + gain / loss);
    };

    // Seed: simple mean of the first `period` changes, then Wilder smoothing.
    double gain = 0.0;
    double loss = 0.0;
    for (std::size_t t = 1; t <= p; ++t) {
        const double d = prices[t] - prices[t - 1];
        if (d > 0) gain += d; else loss -= d;
    }
    gain /= period;
    loss /= period;

    std::vector<double> out;
    out.reserve(prices.size() - p);
    out.push_back(value(gain, loss));
    for (std::size_t t = p + 1; t < prices.size(); ++t) {
        const double d = prices[t] - prices[t - 1];
        gain = (gain * (period - 1) + std::max(d, 0.0)) / period;
        loss = (loss * (period - 1) + std::max(-d, 0.0)) / period;
        out.push_back(value(gain, loss));
    }
    return out;
}

std::vector<double> roc(Prices prices, int period) {
    require_period(period, "ROC");
    require_length(prices.size(), static_cast<std::size_t>(period) + 1, "ROC");
    const auto p = static_cast<std::size_t>(period);
    std::vector<double> out;
    out.reserve(prices.size() - p);
    for (std::size_t t = p; t < prices.size(); ++t)
        out.push_back(100.0 * (prices[t] - prices[t - p]) / prices[t - p]);
    return out;
}

namespace {

// Trailing-window extremes of highs and lows, window ending at `last`.
std::pair<double, double> window_range(Bars bars, std::size_t last, std::size_t period) {
    double hi = bars[last].high;
    double lo = bars[last].low;
    for (std::size_t j = last + 1 - period; j < last; ++j) {
        hi = std::max(hi, bars[j].high);
        lo = std::min(lo, bars[j].low);
    }
    return {hi, lo};
}

} // namespace

StochSeries stoch(Bars bars, int k_period, int d_period) {
    require_period(k_period, "Stochastic %K");
    require_period(d_period, "Stochastic %D");
    require_length(bars.size(), static_cast<std::size_t>(k_period), "Stochastic");
    const auto kp = static_cast<std::size_t>(k_period);
    StochSeries out;
    out.k.reserve(bars.size() - kp + 1);
    for (std::size_t t = kp - 1; t < bars.size(); ++t) {
        const auto [hi, lo] = window_range(bars, t, kp);
        const double span = hi - lo;
        const double k = span > 0.0 ? 100.0 * (bars[t].close - lo) / span : 50.0;
        out.k.push_back(std::clamp(k, 0.0, 100.0));
    }
    if (out.k.size() >= static_cast<std::size_t>(d_period)) out.d = sma(out.k, d_period);
    return out;
}

std::vector<double> willr(Bars bars, int period) {
    require_period(period, "Williams %R");
    require_length(bars.size(), static_cast<std::size_t>(period), "Williams %R");
    const auto p = static_cast<std::size_t>(period);
    std::vector<double> out;
    out.reserve(bars.size() - p + 1);
    for (std::size_t t = p - 1; t < bars.size(); ++t) {
        const auto [hi, lo] = window_range(bars, t, p);
        const double span = hi - lo;
        const double w = span > 0.0 ? -100.0 * (hi - bars[t].close) / span : -50.0;
        out.push_back(std::clamp(w, -100.0, 0.0));
    }
    return out;
}

std::vector<double> sma(Prices prices, int period) {
    require_period(period, "SMA");
    require_length(prices.size(), static_cast<std::size_t>(period), "SMA");
    const auto p = static_cast<std::size_t>(period);
    std::vector<double> out;
    out.reserve(prices.size() - p + 1);
    // Direct window sums: no running-sum drift, and windows are short.
    for (std::size_t t = p - 1; t < prices.size(); ++t) {
        double sum = 0.0;
        for (std::size_t j = t + 1 - p; j <= t; ++j) sum += prices[j];
        out.push_back(sum / period);
    }
    return out;
}

std::vector<double> closes(Bars bars) {
    std::vector<double> out;
    out.reserve(bars.size());
    for (const auto& b : bars) out.push_back(b.close);
    return out;
}

IndicatorReport make_report(double rsi_value, double macd_value, double macd_signal,
                            double prev_macd_gap, double roc_value, double stoch_k, double stoch_d,
                            double willr_value, const IndicatorConfig& config) {
    IndicatorReport r;
    r.rsi = rsi_value;
    r.macd = macd_value;
    r.macd_signal = macd_signal;
    r.macd_histogram = macd_value - macd_signal;
    r.roc = roc_value;
    r.stoch_k = stoch_k;
    r.stoch_d = stoch_d;
    r.willr = willr_value;

    auto& f = r.flags;
    f.rsi_overbought = rsi_value > config.rsi_overbought;
    f.rsi_oversold = rsi_value < config.rsi_oversold;
    f.macd_bullish_cross = prev_macd_gap <= 0.0 && r.macd_histogram > 0.0;
    f.macd_bearish_cross = prev_macd_gap >= 0.0 && r.macd_histogram < 0.0;
    f.stoch_overbought = stoch_k > config.stoch_overbought && stoch_d > config.stoch_overbought;
    f.stoch_oversold = stoch_k < config.stoch_oversold && stoch_d < config.stoch_oversold;
    f.willr_overbought = willr_value > config.willr_overbought;
    f.willr_oversold = willr_value < config.willr_oversold;
    f.roc_positive = roc_value > 0.0;

    // Overbought readings vote with the momentum that produced them.
    int votes = 0;
    int active = 0;
    const auto vote = [&](bool on, int sign) {
        if (on) {
            votes += sign;
            ++active;
        }
    };
    vote(f.rsi_overbought, +1);
    vote(f.rsi_oversold, -1);
    vote(f.macd_bullish_cross, +1);
    vote(f.macd_bearish_cross, -1);
    vote(f.stoch_overbought, +1);
    vote(f.stoch_oversold, -1);
    vote(f.willr_overbought, +1);
    vote(f.willr_oversold, -1);
    vote(roc_value > 0.0, +1);
    vote(roc_value < 0.0, -1);
    r.momentum_score = active == 0 ? 0.0 : std::clamp(static_cast<double>(votes) / active, -1.0, 1.0);
    return r;
}

IndicatorReport summarize_indicators(Bars bars, const IndicatorConfig& config) {
    config.validate();
    const std::size_t n = bars.size();
    const auto check = [n](std::size_t need, const char* name) {
        if (n < need)
            throw PreconditionError("insufficient history for " + std::string(name) + ": needs " +
                                    std::to_string(need) + " bars, got " + std::to_string(n));
    };
    check(static_cast<std::size_t>(config.macd_slow), "MACD");
    check(2, "MACD cross");
    check(static_cast<std::size_t>(config.rsi_period) + 1, "RSI");
    check(static_cast<std::size_t>(config.roc_period) + 1, "ROC");
    check(static_cast<std::size_t>(config.stoch_k_period + config.stoch_d_period - 1), "Stochastic");
    check(static_cast<std::size_t>(config.willr_period), "Williams %R");

    const auto close = closes(bars);
    const auto m = macd(close, config.macd_fast, config.macd_slow, config.macd_signal);
    const auto st = stoch(bars, config.stoch_k_period, config.stoch_d_period);
    return make_report(rsi(close, config.rsi_period).back(), m.macd.back(), m.signal.back(),
                       m.histogram[n - 2], roc(close, config.roc_period).back(), st.k.back(),
                       st.d.back(), willr(bars, config.willr_period).back(), config);
}

nlohmann::json to_json(const IndicatorReport& r) {
    const auto& f = r.flags;
    nlohmann::json j;
    j["rsi"] = {{"value", r.rsi}, {"overbought", f.rsi_overbought}, {"oversold", f.rsi_oversold}};
    j["macd"] = {{"macd", r.macd},
                 {"signal", r.macd_signal},
                 {"histogram", r.macd_histogram},
                 {"bullish_cross", f.macd_bullish_cross},
                 {"bearish_cross", f.macd_bearish_cross}};
    j["roc"] = {{"value", r.roc}, {"positive", f.roc_positive}};
    j["stochastic"] = {{"k", r.stoch_k},
                       {"d", r.stoch_d},
                       {"overbought", f.stoch_overbought},
                       {"oversold", f.stoch_oversold}};
    j["williams_r"] = {{"value", r.willr},
                       {"overbought", f.willr_overbought},
                       {"oversold", f.willr_oversold}};
    j["momentum_score"] = r.momentum_score;
    j["narrative"] = narrative(r);
    return j;
}

std::string narrative(const IndicatorReport& r) {
    const auto& f = r.flags;
    std::string out;
    out += "Relative Strength Index (RSI). Latest RSI is " + fixed(r.rsi, 2) + "; ";
    out += f.rsi_overbought ? "overbought territory.\n"
           : f.rsi_oversold ? "oversold territory.\n"
           : r.rsi >= 50.0  ? "above the neutral 50 line.\n"
                            : "below the neutral 50 line.\n";

    out += "Moving Average Convergence Divergence (MACD). MACD " + fixed(r.macd, 4) +
           (r.macd_histogram >= 0.0 ? " is above" : " is below") + " its signal line " +
           fixed(r.macd_signal, 4) + " (histogram " + fixed(r.macd_histogram, 4) + ")";
    out += f.macd_bullish_cross   ? "; a bullish crossover just occurred.\n"
           : f.macd_bearish_cross ? "; a bearish crossover just occurred.\n"
                                  : ".\n";

    out += "Rate of Change (ROC). Latest ROC is " + fixed(r.roc, 2) + "%, indicating " +
           (r.roc > 0.0 ? "upward" : r.roc < 0.0 ? "downward" : "no") + " momentum.\n";

    out += "Stochastic Oscillator. %K " + fixed(r.stoch_k, 2) + ", %D " + fixed(r.stoch_d, 2) + "; ";
    out += f.stoch_overbought ? "both above the overbought line.\n"
           : f.stoch_oversold ? "both below the oversold line.\n"
                              : "inside the neutral band.\n";

    out += "Williams %R. Latest value " + fixed(r.willr, 2) + "; ";
    out += f.willr_overbought ? "overbought.\n" : f.willr_oversold ? "oversold.\n" : "neutral.\n";

    out += "Conclusion. Momentum score " + fixed(r.momentum_score, 2) + ": ";
    if (r.momentum_score > 0.0) {
        out += "overall sentiment is bullish";
        if (f.rsi_overbought || f.stoch_overbought || f.willr_overbought)
            out += ", but overbought oscillators warn of a pullback";
    } else if (r.momentum_score < 0.0) {
        out += "overall sentiment is bearish";
        if (f.rsi_oversold || f.stoch_oversold || f.willr_oversold)
            out += ", but oversold oscillators warn of a rebound";
    } else {
        out += "signals are mixed or neutral";
    }
    out += ".";
    return out;
}

} // namespace quantdesk::indicators
