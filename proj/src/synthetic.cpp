#include "quantdesk/synthetic.hpp"

#include "quantdesk/error.hpp"
#include "quantdesk/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

namespace quantdesk::synthetic {

namespace {

// Box-Muller on the hand-rolled uniform stream keeps draws identical across
// standard libraries.
double normal(Rng& rng) {
    double u1 = rng.uniform01();
    while (u1 <= 0.0) u1 = rng.uniform01();
    const double u2 = rng.uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double round_price(double p) { return std::round(p * 1e4) / 1e4; }

} // namespace

BarSeries random_walk(const WalkParams& p) {
    if (p.bars == 0 || !(p.start_price > 0.0) || p.min_regime == 0 || p.max_regime < p.min_regime)
        throw PreconditionError("invalid random-walk parameters");
    Rng rng(p.seed);
    std::vector<OhlcBar> bars;
    bars.reserve(p.bars);
    double close = p.start_price;
    double drift = 0.0;
    std::size_t regime_left = 0;
    for (std::size_t i = 0; i < p.bars; ++i) {
        if (regime_left == 0) {
            regime_left = p.min_regime + rng.uniform_index(p.max_regime - p.min_regime + 1);
            drift = rng.uniform(-p.max_drift, p.max_drift);
        }
        --regime_left;
        const double open = round_price(close * std::exp(0.1 * p.volatility * normal(rng)));
        const double next = round_price(open * std::exp(drift + p.volatility * normal(rng)));
        const double wick_hi = std::abs(normal(rng)) * 0.5 * p.volatility;
        const double wick_lo = std::abs(normal(rng)) * 0.5 * p.volatility;
        OhlcBar b;
        b.timestamp = p.start_time + static_cast<std::int64_t>(i) * p.timeframe.count();
        b.open = open;
        b.close = next;
        b.high = round_price(std::max(open, next) * (1.0 + wick_hi));
        b.low = round_price(std::min(open, next) * (1.0 - wick_lo));
        b.high = std::max({b.high, open, next});
        b.low = std::min({b.low, open, next});
        b.volume = std::round(1000.0 * (1.0 + std::abs(normal(rng))));
        bars.push_back(b);
        close = next;
    }
    return BarSeries(p.symbol, p.timeframe, std::move(bars));
}

std::vector<WalkParams> bundled_assets() {
    std::vector<WalkParams> out(4);
    out[0].symbol = "SYN_TREND";
    out[0].volatility = 0.003;
    out[0].max_drift = 0.002;
    out[0].seed = 101;
    out[1].symbol = "SYN_RANGE";
    out[1].volatility = 0.004;
    out[1].max_drift = 0.0004;
    out[1].seed = 202;
    out[2].symbol = "SYN_VOLATILE";
    out[2].volatility = 0.012;
    out[2].max_drift = 0.003;
    out[2].start_price = 30000.0;
    out[2].seed = 303;
    out[3].symbol = "SYN_MIXED";
    out[3].volatility = 0.005;
    out[3].max_drift = 0.0015;
    out[3].start_price = 4000.0;
    out[3].min_regime = 10;
    out[3].max_regime = 60;
    out[3].seed = 404;
    return out;
}

std::filesystem::path write_bundle(const std::filesystem::path& dir, const std::vector<WalkParams>& assets,
                                   std::size_t segments) {
    std::filesystem::create_directories(dir);
    nlohmann::json entries = nlohmann::json::array();
    for (std::size_t i = 0; i < assets.size(); ++i) {
        const auto& a = assets[i];
        const std::string file = a.symbol + ".csv";
        write_csv(dir / file, random_walk(a));
        entries.push_back({{"symbol", a.symbol},
                           {"timeframe", format_timeframe(a.timeframe)},
                           {"csv", file},
                           {"count", segments},
                           {"length", 100},
                           {"holdout", 3},
                           {"seed", i + 1}});
    }
    const auto path = dir / "manifest.json";
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << nlohmann::json{{"assets", entries}}.dump(2) << '\n';
    return path;
}

} // namespace quantdesk::synthetic
