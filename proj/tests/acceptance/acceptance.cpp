// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "case_study.hpp"
#include "exec_table.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "quantdesk/decision.hpp"
#include "quantdesk/evaluation.hpp"
#include "quantdesk/indicators.hpp"
#include "quantdesk/trend.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

using namespace quantdesk;
namespace ind = quantdesk::indicators;
namespace ev = quantdesk::evaluation;
namespace fs = std::filesystem;
using decision::Direction;

namespace {

struct Result {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Counts entries that differ from the oracle by more than `tol` (relative).
std::size_t mismatches(const std::vector<double>& got, const std::vector<double>& want, double tol) {
    if (got.size() != want.size()) return std::max<std::size_t>(1, want.size());
    std::size_t bad = 0;
    for (std::size_t i = 0; i < got.size(); ++i) bad += !oracle::close_rel(got[i], want[i], tol);
    return bad;
}

Result indicator_oracles() {
    const auto t0 = Clock::now();
    Rng rng(20240101);
    std::size_t bad = 0, codomain = 0, scale = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto bars = fixtures::random_bars(rng, 200, rng.uniform(1.0, 50000.0));
        const auto c = fixtures::closes_of(bars);
        const auto m = ind::macd(c, 12, 26, 9);
        const auto mo = oracle::macd(c, 12, 26, 9);
        const auto s = ind::stoch(bars, 14, 3);
        const auto so = oracle::stoch(bars, 14, 3);
        const auto r = ind::rsi(c, 14);
        const auto w = ind::willr(bars, 14);
        bad += mismatches(ind::ema(c, 12), oracle::ema(c, 12), 1e-9);
        bad += mismatches(m.macd, mo.macd, 1e-9) + mismatches(m.signal, mo.signal, 1e-9) +
               mismatches(m.histogram, mo.histogram, 1e-9);
        bad += mismatches(r, oracle::rsi(c, 14), 1e-9);
        bad += mismatches(ind::roc(c, 10), oracle::roc(c, 10), 1e-9);
        bad += mismatches(s.k, so.k, 1e-9) + mismatches(s.d, so.d, 1e-9);
        bad += mismatches(w, oracle::willr(bars, 14), 1e-9);
        for (double v : r) codomain += !(v >= 0.0 && v <= 100.0);
        for (double v : s.k) codomain += !(v >= 0.0 && v <= 100.0);
        for (double v : s.d) codomain += !(v >= 0.0 && v <= 100.0);
        for (double v : w) codomain += !(v >= -100.0 && v <= 0.0);

        const double k = rng.uniform(0.01, 100.0);
        const auto big = fixtures::scaled(bars, k);
        const auto cb = fixtures::closes_of(big);
        scale += mismatches(ind::rsi(cb, 14), r, 1e-9);
        scale += mismatches(ind::roc(cb, 10), ind::roc(c, 10), 1e-9);
        scale += mismatches(ind::stoch(big, 14, 3).k, s.k, 1e-9);
        scale += mismatches(ind::willr(big, 14), w, 1e-9);
        auto ema_scaled = ind::ema(c, 12);
        for (auto& v : ema_scaled) v *= k;
        scale += mismatches(ind::ema(cb, 12), ema_scaled, 1e-9);
    }
    const double secs = seconds_since(t0);
    return {bad == 0 && codomain == 0 && scale == 0 && secs < 10.0,
            fmt("1000 series x 200 bars: %zu oracle mismatches (rel 1e-9), %zu codomain, %zu scale violations, %.2f s "
                "(limit 10 s)",
                bad, codomain, scale, secs)};
}

Result macd_identity() {
    Rng rng(77);
    std::size_t bad = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto c = fixtures::closes_of(fixtures::random_bars(rng, 200, rng.uniform(1.0, 1000.0)));
        const auto m = ind::macd(c, 12, 26, 9);
        const auto f = ind::ema(c, 12);
        const auto s = ind::ema(c, 26);
        const auto sig = ind::ema(m.macd, 9);
        for (std::size_t i = 0; i < c.size(); ++i) {
            bad += !oracle::close_rel(m.macd[i], f[i] - s[i], 1e-12);
            bad += !oracle::close_rel(m.signal[i], sig[i], 1e-12);
            bad += !oracle::close_rel(m.histogram[i], m.macd[i] - m.signal[i], 1e-12);
        }
    }
    return {bad == 0, fmt("200 random series: %zu pointwise violations at 1e-12", bad)};
}

Result trend_recovery() {
    const trend::TrendConfig cfg;
    const std::size_t n = static_cast<std::size_t>(cfg.window);
    const double a = 100.0;
    // Slope whose ratio to the window's mean close is exactly 2*tau.
    const double b = 2.0 * cfg.tau * a / (1.0 - cfg.tau * static_cast<double>(n - 1));
    Rng rng(4242);
    int up = 0, down = 0, side = 0;
    for (int trial = 0; trial < 100; ++trial) {
        up += trend::detect_trend(fixtures::linear_channel(rng, a, b, n, 0.1)).label == trend::TrendLabel::Uptrend;
        const double a_down = a + b * static_cast<double>(n - 1);
        down += trend::detect_trend(fixtures::linear_channel(rng, a_down, -b, n, 0.1)).label ==
                trend::TrendLabel::Downtrend;
        side += trend::detect_trend(fixtures::linear_channel(rng, a, 0.0, n, 0.0, 0.1 * a * cfg.tau * n)).label ==
                trend::TrendLabel::Sideways;
    }
    return {up >= 99 && down >= 99 && side >= 99,
            fmt("|b_rel| = 2 tau, |noise| <= 0.1|b|N: Uptrend %d/100, Downtrend %d/100; flat with noise 0.12: "
                "Sideways %d/100 (need >= 99)",
                up, down, side)};
}

Result ols_oracle() {
    Rng rng(99);
    std::size_t bad = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(60);
        std::vector<trend::Point> pts;
        std::vector<double> xs, ys;
        const double m = rng.uniform(-5.0, 5.0), c = rng.uniform(-1000.0, 1000.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = static_cast<double>(i) + (i ? rng.uniform(0.0, 0.9) : 0.0);
            const double y = m * x + c + rng.uniform(-10.0, 10.0);
            pts.push_back({x, y});
            xs.push_back(x);
            ys.push_back(y);
        }
        const auto fit = trend::fit_line_ols(pts);
        const auto ref = oracle::ols(xs, ys);
        bad += !oracle::close_rel(fit.slope, ref.slope, 1e-9) + !oracle::close_rel(fit.intercept, ref.intercept, 1e-9);
    }
    std::size_t collinear_bad = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const double m = static_cast<double>(static_cast<int>(rng.uniform_index(21)) - 10) * 0.25;
        const double c = static_cast<double>(rng.uniform_index(200));
        std::vector<trend::Point> pts;
        for (int i = 0; i < 30; ++i) pts.push_back({static_cast<double>(i), m * i + c});
        const auto fit = trend::fit_line_ols(pts);
        collinear_bad += fit.slope != m || fit.intercept != c || fit.r_squared != 1.0;
    }
    return {bad == 0 && collinear_bad == 0,
            fmt("1000 random sets: %zu mismatches vs normal equations (1e-9); 100 collinear sets: %zu inexact", bad,
                collinear_bad)};
}

Result execution_simulator() {
    Rng rng(31337);
    std::size_t bound = 0, envelope = 0, hits = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const Direction dir = rng.coin() ? Direction::Long : Direction::Short;
        const double entry = rng.uniform(10.0, 1000.0);
        const double rho = rng.uniform(0.0002, 0.003);
        const double r = rng.uniform(1.2, 1.8);
        const auto levels = decision::risk_levels(entry, dir, rho, r);
        std::vector<OhlcBar> hidden;
        double prev = entry;
        for (int i = 0; i < 3; ++i) {
            OhlcBar b;
            b.open = prev * (1.0 + rng.uniform(-0.6, 0.6) * rho * (rng.uniform01() < 0.1 ? 4.0 : 1.0));
            b.close = b.open * (1.0 + rng.uniform(-2.0, 2.0) * rho);
            b.high = std::max(b.open, b.close) * (1.0 + rng.uniform(0.0, 1.5) * rho);
            b.low = std::min(b.open, b.close) * (1.0 - rng.uniform(0.0, 1.5) * rho);
            hidden.push_back(b);
            prev = b.close;
        }
        decision::TradeDecision d;
        d.direction = dir;
        d.risk_reward = r;
        const auto policy = static_cast<ev::TieBreak>(rng.uniform_index(3));
        const auto out = ev::simulate_execution(d, levels, hidden, {policy, false});
        const double tol = 1e-9;
        if (out.exit_reason == ev::ExitReason::StopHit || out.exit_reason == ev::ExitReason::TargetHit) {
            bound += out.r_cc < -100.0 * rho - tol || out.r_cc > 100.0 * r * rho + tol;
        }
        envelope += !(out.r_min <= out.r_cc + tol && out.r_cc <= out.r_max + tol);
        // Independent hit recount.
        int h = 0;
        for (const auto& b : hidden) h += dir == Direction::Long ? b.close > entry : b.close < entry;
        hits += h != out.hits;
    }
    std::size_t table_bad = 0;
    const auto table = fixtures::tiebreak_table();
    for (const auto& c : table) table_bad += !fixtures::run_tie_case(c).empty();
    return {bound == 0 && envelope == 0 && hits == 0 && table_bad == 0,
            fmt("10000 random cases: %zu level-exit bound, %zu envelope, %zu hit-count violations; tie-break table "
                "%zu/%zu exact",
                bound, envelope, hits, table.size() - table_bad, table.size())};
}

// The benchmark, alpha recount and CLI determinism all use the bundled manifest.
const fs::path kManifest = fs::path(QUANTDESK_DATA_DIR) / "synthetic" / "manifest.json";

Result metrics_arithmetic() {
    ev::BenchmarkConfig cfg;
    const auto manifest = load_manifest(kManifest);
    const auto res = ev::run_benchmark(manifest, cfg);
    // Rebuild the segments to recount hits from raw closes.
    std::map<std::string, std::vector<Segment>> segs;
    for (const auto& a : manifest.assets) {
        auto p = a.sampling;
        p.seed = derive_seed(cfg.seed, a.symbol + "#segments", a.sampling.seed);
        segs[a.symbol] = sample_segments(load_csv(a.csv, a.symbol, a.timeframe), p);
    }
    std::size_t bad_rows = 0;
    for (const auto& row : res.summary.rows) {
        long h = 0;
        std::size_t n = 0;
        for (const auto& r : res.records) {
            if (r.asset != row.asset || r.method != row.method || r.abstained) continue;
            const auto& seg = segs[r.asset][r.segment];
            const double entry = seg.visible.back().close;
            for (const auto& b : seg.hidden)
                h += r.decision.direction == Direction::Long ? b.close > entry : b.close < entry;
            ++n;
        }
        const double alpha = n ? 100.0 * static_cast<double>(h) / (3.0 * static_cast<double>(n)) : 0.0;
        bad_rows += h != row.total_hits || n != row.segments || alpha != row.alpha;
    }
    const double delta = ev::delta_alpha(50.7, 45.0);
    const bool delta_ok = fmt("%+.1f", delta) == "+12.7";
    return {bad_rows == 0 && !res.summary.rows.empty() && res.summary.failures.empty() && delta_ok,
            fmt("alpha recount: %zu/%zu rows disagree; delta_alpha(50.7 vs 45.0) = %+.1f%% (want +12.7%%)", bad_rows,
                res.summary.rows.size(), delta)};
}

Result baseline_contracts() {
    Rng rng(555);
    int lr_ok = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> closes(97), xs, ys;
        const double slope = rng.uniform(-0.5, 0.5);
        for (std::size_t i = 0; i < closes.size(); ++i)
            closes[i] = 100.0 + slope * static_cast<double>(i) + rng.uniform(-1.0, 1.0);
        for (std::size_t i = 57; i < 97; ++i) {
            xs.push_back(static_cast<double>(i - 57));
            ys.push_back(closes[i]);
        }
        const bool want_long = oracle::ols(xs, ys).slope > 0.0;
        lr_ok += (ev::baseline_linreg(closes).direction == Direction::Long) == want_long;
    }

    Rng a(1), b(1);
    bool deterministic = true;
    for (int i = 0; i < 1000; ++i) deterministic &= ev::baseline_random(a) == ev::baseline_random(b);
    Rng draw(2);
    int longs = 0;
    double r_sum = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const auto d = ev::baseline_random(draw);
        longs += d.direction == Direction::Long;
        r_sum += d.risk_reward;
    }
    const double long_frac = longs / 10000.0, r_mean = r_sum / 10000.0;
    const bool random_ok = deterministic && std::abs(long_frac - 0.5) <= 0.02 && std::abs(r_mean - 1.5) <= 0.01;

    Rng data(3);
    std::vector<ev::FeatureVector> x;
    std::vector<int> y;
    for (int i = 0; i < 600; ++i) {
        ev::FeatureVector v{};
        for (auto& e : v) e = data.uniform(-1.0, 1.0);
        x.push_back(v);
        y.push_back(v[3] > -0.2 ? 1 : 0);
    }
    const auto model = ev::train_boosted_stumps(x, y);
    bool monotone = model.loss_history.size() >= 2;
    for (std::size_t i = 1; i < model.loss_history.size(); ++i)
        monotone &= model.loss_history[i] <= model.loss_history[i - 1];
    int correct = 0;
    for (std::size_t i = 0; i < x.size(); ++i) correct += (model.probability(x[i]) > 0.5) == (y[i] == 1);
    const double acc = 100.0 * correct / static_cast<double>(x.size());
    return {lr_ok == 100 && random_ok && monotone && acc > 55.0,
            fmt("linreg %d/100 match the 40-bar OLS slope sign; random: deterministic=%s, LONG %.3f (0.50 +/- 0.02), "
                "mean r %.4f (1.50 +/- 0.01); stumps: loss monotone=%s over %zu rounds, accuracy %.1f%% (> 55%%)",
                lr_ok, deterministic ? "yes" : "no", long_frac, r_mean, monotone ? "yes" : "no", model.stumps.size(),
                acc)};
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + QUANTDESK_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Result e2e_determinism() {
    const fs::path tmp = fs::path(QUANTDESK_TEST_TMP) / "acceptance";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    const auto t0 = Clock::now();
    int codes = 0;
    const char* runs[] = {"run1", "run2", "threads"};
    const char* extra[] = {" --threads 1", " --threads 1", " --threads 4"};
    double slowest = 0.0;
    for (int i = 0; i < 3; ++i) {
        const auto t = Clock::now();
        codes += run_cli("bench --manifest \"" + kManifest.string() + "\" --seed 42 --methods all --out \"" +
                         (tmp / runs[i]).string() + "\"" + extra[i]);
        slowest = std::max(slowest, seconds_since(t));
    }
    const double total = seconds_since(t0);
    bool same = true;
    for (const char* file : {"summary.csv", "segments.csv", "summary.json"}) {
        const auto a = slurp(tmp / "run1" / file);
        same &= !a.empty() && a == slurp(tmp / "run2" / file) && a == slurp(tmp / "threads" / file);
    }
    return {codes == 0 && same && slowest < 60.0,
            fmt("seed 42, 4 assets x 100 segments: exit codes %s, run1 == run2 == 4-thread run: %s; slowest run %.2f s "
                "(limit 60 s), total %.2f s",
                codes == 0 ? "0" : "nonzero", same ? "yes" : "no", slowest, total)};
}

Result pattern_fixtures() {
    const auto corpus = fixtures::pattern_corpus();
    std::size_t wrong = 0, triangles = 0, mirror_bad = 0, negatives = 0;
    std::set<patterns::PatternKind> kinds;
    for (const auto& f : corpus) {
        const auto m = fixtures::detect(f.bars);
        if (!f.expected) {
            ++negatives;
            wrong += !m.empty();
            continue;
        }
        kinds.insert(*f.expected);
        wrong += m.size() != 1 || m[0].kind != *f.expected;
        if (!f.triangle) continue;
        ++triangles;
        const auto flipped = fixtures::detect(fixtures::mirror(f.bars, fixtures::mean_close(f.bars)));
        auto want = *f.expected;
        if (want == patterns::PatternKind::AscendingTriangle) want = patterns::PatternKind::DescendingTriangle;
        else if (want == patterns::PatternKind::DescendingTriangle) want = patterns::PatternKind::AscendingTriangle;
        mirror_bad += flipped.size() != 1 || flipped[0].kind != want;
    }
    std::size_t detectable = 0;
    for (const auto& p : patterns::pattern_library()) detectable += p.has_detector;
    return {corpus.size() >= 12 && wrong == 0 && mirror_bad == 0 && kinds.size() == detectable,
            fmt("%zu fixtures (%zu kinds of %zu with detectors, %zu negatives): %zu false labels; mirror %zu/%zu",
                corpus.size(), kinds.size(), detectable, negatives, wrong, triangles - mirror_bad, triangles)};
}

Result rolling_case_study() {
    const auto bars = fixtures::case_study_bars();
    const auto study = ev::rolling_case_study(bars, 100, 10, 5, [](Bars, std::size_t i) {
        decision::TradeDecision d;
        d.direction = fixtures::kCaseCalls[i];
        return d;
    });
    const auto s = study.summary();
    return {s == "8/10 (80%)", "replayed ten-window sequence reports \"" + s + "\" (want \"8/10 (80%)\")"};
}

Result decision_totality() {
    Rng rng(8080);
    std::size_t range_bad = 0, anti_bad = 0, checked = 0;
    const decision::Weights w;
    for (int i = 0; i < 10000; ++i) {
        const auto s = fixtures::random_state(rng);
        const auto d = decide_rule_based(s, w);
        range_bad += !(d.risk_reward >= 1.2 && d.risk_reward <= 1.8) || d.forecast_horizon != 3;
        const double c = w.indicator * s.s_ind + w.pattern * s.s_pat + w.trend * s.s_trend;
        if (c == 0.0) continue;
        ++checked;
        const auto n = decide_rule_based(fixtures::negated(s), w);
        anti_bad += n.direction == d.direction || n.risk_reward != d.risk_reward;
    }
    // Direction is a two-valued enum, so HOLD cannot be represented.
    return {range_bad == 0 && anti_bad == 0,
            fmt("10000 random states: %zu outside r in [1.2, 1.8]; antisymmetry violations %zu of %zu with c != 0",
                range_bad, anti_bad, checked)};
}

} // namespace

int main() {
    const std::pair<const char*, std::function<Result()>> checks[] = {
        {"indicator oracle suite", indicator_oracles},
        {"macd identity", macd_identity},
        {"trend recovery", trend_recovery},
        {"ols correctness", ols_oracle},
        {"execution simulator", execution_simulator},
        {"metrics arithmetic", metrics_arithmetic},
        {"baseline contracts", baseline_contracts},
        {"end-to-end determinism", e2e_determinism},
        {"pattern fixtures", pattern_fixtures},
        {"rolling case study", rolling_case_study},
        {"decision totality", decision_totality},
    };
    int failed = 0;
    for (const auto& [name, fn] : checks) {
        Result r;
        try {
            r = fn();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        failed += !r.pass;
        std::printf("%s  %-24s %s\n", r.pass ? "PASS" : "FAIL", name, r.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(checks)) - failed, std::size(checks));
    return failed ? 1 : 0;
}
