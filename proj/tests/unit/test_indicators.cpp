#include <doctest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "quantdesk/error.hpp"
#include "quantdesk/indicators.hpp"

#include <cmath>

using namespace quantdesk;
namespace ind = quantdesk::indicators;

namespace {

void check_series(const std::vector<double>& got, const std::vector<double>& want, double tol) {
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        INFO("index " << i << ": " << got[i] << " vs " << want[i]);
        CHECK(oracle::close_rel(got[i], want[i], tol));
    }
}

std::vector<OhlcBar> ramp(std::size_t n, double step) {
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = 100.0 + step * static_cast<double>(i);
    return fixtures::bars_from_closes(c, 0.01);
}

} // namespace

TEST_CASE("ema: spec examples") {
    const std::vector<double> flat{5, 5, 5, 5};
    CHECK(ind::ema(flat, 7) == flat);
    const std::vector<double> p{3, 1, 4, 1, 5};
    CHECK(ind::ema(p, 1) == p);
    const auto e = ind::ema(std::vector<double>{1, 2, 3}, 3);
    REQUIRE(e.size() == 3);
    CHECK(e[0] == 1.0);
    CHECK(e[1] == 1.5);
    CHECK(e[2] == 2.25);
    CHECK_THROWS_AS(ind::ema(std::vector<double>{}, 3), PreconditionError);
    CHECK_THROWS_AS(ind::ema(p, 0), PreconditionError);
}

TEST_CASE("macd: constant, equal periods and ramp") {
    const std::vector<double> flat(60, 42.0);
    const auto m = ind::macd(flat, 12, 26, 9);
    for (std::size_t i = 0; i < flat.size(); ++i) {
        CHECK(m.macd[i] == 0.0);
        CHECK(m.signal[i] == 0.0);
        CHECK(m.histogram[i] == 0.0);
    }
    const auto closes = fixtures::closes_of(ramp(80, 0.5));
    const auto r = ind::macd(closes, 12, 26, 9);
    const auto o = oracle::macd(closes, 12, 26, 9);
    check_series(r.macd, o.macd, 1e-9);
    for (std::size_t t = 26; t < closes.size(); ++t) CHECK(r.macd[t] > 0.0);
}

TEST_CASE("rsi: monotone and alternating series") {
    const auto up = fixtures::closes_of(ramp(40, 0.3));
    for (double v : ind::rsi(up, 14)) CHECK(v == 100.0);
    const auto down = fixtures::closes_of(ramp(40, -0.3));
    for (double v : ind::rsi(down, 14)) CHECK(v == 0.0);

    std::vector<double> alt(601);
    for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = 100.0 + (i % 2 ? 1.0 : 0.0);
    const auto r = ind::rsi(alt, 14);
    check_series(r, oracle::rsi(alt, 14), 1e-9);
    // Steady state oscillates around 50 with amplitude 50/(2p-1).
    const double amp = 50.0 / 27.0;
    CHECK(std::abs(r.back() - 50.0) == doctest::Approx(amp).epsilon(1e-9));
    CHECK(std::abs(r[r.size() - 2] - 50.0) == doctest::Approx(amp).epsilon(1e-9));
}

TEST_CASE("roc: spec examples") {
    const std::vector<double> flat(20, 3.0);
    for (double v : ind::roc(flat, 10)) CHECK(v == 0.0);
    CHECK(ind::roc(std::vector<double>{100, 105, 110}, 2)[0] == doctest::Approx(10.0));
    const double g = 0.01;
    std::vector<double> comp(11);
    for (std::size_t i = 0; i < comp.size(); ++i) comp[i] = 50.0 * std::pow(1.0 + g, static_cast<double>(i));
    CHECK(ind::roc(comp, 10)[0] == doctest::Approx(100.0 * (std::pow(1.0 + g, 10) - 1.0)).epsilon(1e-12));
}

TEST_CASE("stoch and willr: extremes and midpoint") {
    auto bars = fixtures::bars_from_closes({100, 105, 95, 100});
    bars[1].high = 110.0;
    bars[2].low = 90.0;
    auto at = [&](double close) {
        auto b = bars;
        b[3].close = close;
        b[3].high = std::max({b[3].open, close, b[3].high});
        b[3].low = std::min({b[3].open, close, b[3].low});
        return b;
    };
    CHECK(ind::stoch(at(110.0), 4, 1).k.back() == 100.0);
    CHECK(ind::stoch(at(90.0), 4, 1).k.back() == 0.0);
    CHECK(ind::stoch(at(100.0), 4, 1).k.back() == 50.0);
    CHECK(ind::willr(at(110.0), 4).back() == 0.0);
    CHECK(ind::willr(at(90.0), 4).back() == -100.0);
    CHECK(ind::willr(at(100.0), 4).back() == -50.0);
}

TEST_CASE("indicators match the brute-force oracles") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const auto bars = fixtures::random_bars(rng, 200);
        const auto c = fixtures::closes_of(bars);
        check_series(ind::ema(c, 12), oracle::ema(c, 12), 1e-9);
        check_series(ind::rsi(c, 14), oracle::rsi(c, 14), 1e-9);
        check_series(ind::roc(c, 10), oracle::roc(c, 10), 1e-9);
        check_series(ind::sma(c, 20), oracle::sma(c, 20), 1e-9);
        const auto s = ind::stoch(bars, 14, 3);
        const auto so = oracle::stoch(bars, 14, 3);
        check_series(s.k, so.k, 1e-9);
        check_series(s.d, so.d, 1e-9);
        check_series(ind::willr(bars, 14), oracle::willr(bars, 14), 1e-9);
    }
}

TEST_CASE("codomains and scale invariance") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto bars = fixtures::random_bars(rng, 120);
        const auto big = fixtures::scaled(bars, 37.5);
        const auto c = fixtures::closes_of(bars);
        const auto cb = fixtures::closes_of(big);
        for (double v : ind::rsi(c, 14)) CHECK((v >= 0.0 && v <= 100.0));
        for (double v : ind::willr(bars, 14)) CHECK((v >= -100.0 && v <= 0.0));
        for (double v : ind::stoch(bars, 14, 3).k) CHECK((v >= 0.0 && v <= 100.0));
        check_series(ind::rsi(cb, 14), ind::rsi(c, 14), 1e-9);
        check_series(ind::roc(cb, 10), ind::roc(c, 10), 1e-9);
        check_series(ind::willr(big, 14), ind::willr(bars, 14), 1e-9);
    }
}

TEST_CASE("summaries of monotone series") {
    const auto up = ind::summarize_indicators(ramp(60, 0.4));
    CHECK(up.flags.rsi_overbought);
    CHECK(up.flags.roc_positive);
    CHECK(up.momentum_score > 0.0);
    const auto down = ind::summarize_indicators(ramp(60, -0.4));
    CHECK(down.flags.rsi_oversold);
    CHECK_FALSE(down.flags.roc_positive);
    CHECK(down.momentum_score < 0.0);
}

TEST_CASE("overbought regime flags") {
    // RSI 68.5, MACD above its signal, %K/%D above 80, Williams %R above -20.
    const ind::IndicatorConfig cfg;
    const auto r = ind::make_report(68.5, 1.2, 0.9, 0.25, 1.5, 86.0, 83.0, -12.0, cfg);
    CHECK_FALSE(r.flags.rsi_overbought);
    CHECK_FALSE(r.flags.macd_bullish_cross);  // already above before the last bar
    CHECK(r.macd_histogram > 0.0);
    CHECK(r.flags.stoch_overbought);
    CHECK(r.flags.willr_overbought);
    CHECK(r.momentum_score > 0.0);
    const auto text = ind::narrative(r);
    for (const char* section : {"Relative Strength Index", "MACD", "Rate of Change", "Stochastic", "Williams %R",
                                "Conclusion"})
        CHECK(text.find(section) != std::string::npos);
    CHECK(ind::to_json(r)["stochastic"]["overbought"] == true);
}

TEST_CASE("insufficient history") {
    const ind::IndicatorConfig cfg;
    CHECK(cfg.required_bars() == 26);
    CHECK_THROWS_AS(ind::summarize_indicators(ramp(20, 0.1), cfg), PreconditionError);
    CHECK_NOTHROW(ind::summarize_indicators(ramp(cfg.required_bars(), 0.1), cfg));
    ind::IndicatorConfig bad;
    bad.macd_fast = 30;
    CHECK_THROWS_AS(bad.validate(), PreconditionError);
}
