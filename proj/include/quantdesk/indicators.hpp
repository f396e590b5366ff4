#pragma once

#include "quantdesk/market_data.hpp"

#include <json.hpp>

#include <span>
#include <string>
#include <vector>

namespace quantdesk::indicators {

using Prices = std::span<const double>;

/// Indicator periods and oscillator thresholds. MACD uses the 12/26/9 construction.
struct IndicatorConfig {
    int rsi_period = 14;
    int roc_period = 10;
    int stoch_k_period = 14;
    int stoch_d_period = 3;
    int willr_period = 14;
    int macd_fast = 12;
    int macd_slow = 26;
    int macd_signal = 9;

    double rsi_overbought = 70.0;
    double rsi_oversold = 30.0;
    double stoch_overbought = 80.0;
    double stoch_oversold = 20.0;
    double willr_overbought = -20.0;
    double willr_oversold = -80.0;

    /// Throws PreconditionError on non-positive periods or fast >= slow.
    void validate() const;
    /// Fewest bars for which every indicator (and the MACD cross test) is defined.
    std::size_t required_bars() const;
};

struct MacdSeries {
    std::vector<double> macd;
    std::vector<double> signal;
    std::vector<double> histogram;
};

struct StochSeries {
    std::vector<double> k;  // k[i] belongs to bar i + k_period - 1
    std::vector<double> d;  // d[i] belongs to bar i + k_period + d_period - 2
};

// Output alignment: ema and macd return one value per input bar. The other
// indicators return only their defined tail; the last element always belongs
// to the last input bar.

/// E_0 = P_0, E_t = a*P_t + (1-a)*E_{t-1}, a = 2/(period+1).
std::vector<double> ema(Prices prices, int period);

/// macd = ema(fast) - ema(slow); signal = ema(macd, signal); histogram = macd - signal.
MacdSeries macd(Prices prices, int fast, int slow, int signal);

/// Wilder RSI. Element i belongs to bar i + period.
std::vector<double> rsi(Prices prices, int period);

/// Percent rate of change. Element i belongs to bar i + period.
std::vector<double> roc(Prices prices, int period);

/// Stochastic %K over the trailing k window (flat window -> 50) and %D as SMA of %K.
StochSeries stoch(Bars bars, int k_period, int d_period);

/// Williams %R in [-100, 0]; flat window -> -50. Element i belongs to bar i + period - 1.
std::vector<double> willr(Bars bars, int period);

/// Simple moving average; element i belongs to bar i + period - 1.
std::vector<double> sma(Prices prices, int period);

std::vector<double> closes(Bars bars);

struct IndicatorFlags {
    bool rsi_overbought = false;
    bool rsi_oversold = false;
    bool macd_bullish_cross = false;
    bool macd_bearish_cross = false;
    bool stoch_overbought = false;
    bool stoch_oversold = false;
    bool willr_overbought = false;
    bool willr_oversold = false;
    bool roc_positive = false;

    friend bool operator==(const IndicatorFlags&, const IndicatorFlags&) = default;
};

/// Latest indicator readings plus the flags and momentum score derived from them.
struct IndicatorReport {
    double rsi = 0.0;
    double macd = 0.0;
    double macd_signal = 0.0;
    double macd_histogram = 0.0;
    double roc = 0.0;
    double stoch_k = 0.0;
    double stoch_d = 0.0;
    double willr = 0.0;
    IndicatorFlags flags;
    /// Mean of the active directional votes, in [-1, 1]; 0 when nothing fires.
    double momentum_score = 0.0;

    friend bool operator==(const IndicatorReport&, const IndicatorReport&) = default;
};

IndicatorReport summarize_indicators(Bars bars, const IndicatorConfig& config = {});

/// Flags and score from already-computed latest values. `prev_macd_gap` is
/// macd - signal on the bar before the last.
IndicatorReport make_report(double rsi, double macd, double macd_signal, double prev_macd_gap,
                            double roc, double stoch_k, double stoch_d, double willr,
                            const IndicatorConfig& config);

/// Five sections (RSI, MACD, ROC, Stochastic, Williams %R) and a conclusion.
nlohmann::json to_json(const IndicatorReport& report);
std::string narrative(const IndicatorReport& report);

} // namespace quantdesk::indicators
