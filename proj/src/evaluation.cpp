#include "quantdesk/evaluation.hpp"

#include "quantdesk/error.hpp"
#include "quantdesk/indicators.hpp"
#include "quantdesk/trend.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

namespace quantdesk::evaluation {

using nlohmann::json;

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

double pct(double from, double to) { return 100.0 * (to - from) / from; }

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

} // namespace

std::string_view to_string(ExitReason reason) {
    switch (reason) {
    case ExitReason::StopHit: return "StopHit";
    case ExitReason::TargetHit: return "TargetHit";
    case ExitReason::StopGap: return "StopGap";
    case ExitReason::TargetGap: return "TargetGap";
    case ExitReason::HorizonClose: return "HorizonClose";
    }
    return "?";
}

std::string_view to_string(TieBreak policy) {
    switch (policy) {
    case TieBreak::StopFirst: return "stop";
    case TieBreak::TargetFirst: return "target";
    case TieBreak::OpenDirection: return "open";
    }
    return "?";
}

TieBreak parse_tiebreak(std::string_view text) {
    const auto t = lower(text);
    if (t == "stop") return TieBreak::StopFirst;
    if (t == "target") return TieBreak::TargetFirst;
    if (t == "open") return TieBreak::OpenDirection;
    throw PreconditionError("unknown tie-break policy '" + std::string(text) + "' (stop|target|open)");
}

int directional_hits(Direction direction, double entry_close, std::span<const double> hidden_closes) {
    int hits = 0;
    for (double c : hidden_closes) {
        if (direction == Direction::Long ? c > entry_close : c < entry_close) ++hits;
    }
    return hits;
}

Excursion excursions(Direction direction, double entry, Bars hidden) {
    if (!(entry > 0.0)) throw PreconditionError("entry price must be > 0");
    double hi = entry;
    double lo = entry;
    for (const auto& b : hidden) {
        hi = std::max(hi, b.high);
        lo = std::min(lo, b.low);
    }
    if (direction == Direction::Long) return {pct(entry, hi), pct(entry, lo)};
    return {-pct(entry, lo), -pct(entry, hi)};
}

TradeOutcome simulate_execution(const TradeDecision& decision, const RiskLevels& levels, Bars hidden,
                                const ExecutionConfig& config) {
    const Direction dir = decision.direction;
    const bool is_long = dir == Direction::Long;
    const double entry = levels.entry;
    if (!(entry > 0.0)) throw PreconditionError("entry price must be > 0");
    if (hidden.empty()) throw PreconditionError("execution needs at least one hidden bar");
    const bool stop_ok = is_long ? levels.stop < entry : levels.stop > entry;
    const bool target_ok = is_long ? levels.target > entry : levels.target < entry;
    if (!stop_ok || !target_ok)
        throw PreconditionError("stop/target on the wrong side of entry for a " +
                                std::string(decision::to_string(dir)) + " trade");

    TradeOutcome out;
    out.direction = dir;
    out.entry = entry;
    out.exit = hidden.back().close;
    out.exit_bar = static_cast<int>(hidden.size()) - 1;
    out.exit_reason = ExitReason::HorizonClose;

    // Adverse / favorable comparisons in the trade's direction.
    const auto beyond_stop = [&](double p) { return is_long ? p < levels.stop : p > levels.stop; };
    const auto beyond_target = [&](double p) { return is_long ? p > levels.target : p < levels.target; };
    const auto in_range = [](const OhlcBar& b, double p) { return b.low <= p && p <= b.high; };

    for (std::size_t i = 0; i < hidden.size(); ++i) {
        const auto& bar = hidden[i];
        const int idx = static_cast<int>(i);
        if (beyond_stop(bar.open)) {
            out = {dir, entry, bar.open, ExitReason::StopGap, idx};
            break;
        }
        if (beyond_target(bar.open)) {
            out = {dir, entry, bar.open, ExitReason::TargetGap, idx};
            break;
        }
        const bool stop_in = in_range(bar, levels.stop);
        const bool target_in = in_range(bar, levels.target);
        if (!stop_in && !target_in) continue;
        bool stop_first = stop_in;
        if (stop_in && target_in) {
            switch (config.tiebreak) {
            case TieBreak::StopFirst: stop_first = true; break;
            case TieBreak::TargetFirst: stop_first = false; break;
            case TieBreak::OpenDirection:
                stop_first = std::abs(bar.open - levels.stop) <= std::abs(bar.open - levels.target);
                break;
            }
        }
        if (stop_first) out = {dir, entry, levels.stop, ExitReason::StopHit, idx};
        else out = {dir, entry, levels.target, ExitReason::TargetHit, idx};
        break;
    }

    out.r_cc = decision::sign(dir) * pct(entry, out.exit);
    const auto ex = excursions(dir, entry, hidden);
    out.r_max = ex.r_max;
    out.r_min = ex.r_min;
    if (config.cap_excursions) {
        out.r_max = std::min(out.r_max, 100.0 * levels.risk_reward * levels.rho);
        out.r_min = std::max(out.r_min, -100.0 * levels.rho);
    }
    std::vector<double> closes;
    closes.reserve(hidden.size());
    for (const auto& b : hidden) closes.push_back(b.close);
    out.hits = directional_hits(dir, entry, closes);
    return out;
}

// ---------------------------------------------------------------------------

TradeDecision baseline_random(Rng& rng) {
    TradeDecision d;
    d.direction = rng.coin() ? Direction::Long : Direction::Short;
    d.risk_reward = rng.uniform(decision::kMinRiskReward, decision::kMaxRiskReward);
    d.justification = "random baseline";
    return d;
}

TradeDecision baseline_linreg(std::span<const double> closes, std::size_t window) {
    const std::size_t n = std::min(window, closes.size());
    if (n < 2) throw PreconditionError("linear-regression baseline needs at least 2 closes");
    std::vector<trend::Point> pts;
    pts.reserve(n);
    const auto tail = closes.last(n);
    for (std::size_t i = 0; i < n; ++i) pts.push_back({static_cast<double>(i), tail[i]});
    const auto line = trend::fit_line_ols(pts);
    TradeDecision d;
    d.direction = line.slope > 0.0 ? Direction::Long : Direction::Short;
    d.risk_reward = 1.5;
    d.confidence = 0.0;
    d.justification = "trailing close regression slope " + fmt("%.6g", line.slope);
    return d;
}

const std::array<std::string_view, kFeatureCount>& feature_names() {
    static const std::array<std::string_view, kFeatureCount> names{
        "rsi", "macd_pct", "macd_hist_pct", "close_sma20", "roc", "stoch_k", "willr"};
    return names;
}

std::size_t feature_bars() { return std::max<std::size_t>(indicators::IndicatorConfig{}.required_bars(), 20); }

FeatureVector extract_features(Bars window) {
    if (window.size() < feature_bars())
        throw PreconditionError("feature window has " + std::to_string(window.size()) + " bars; needs " +
                                std::to_string(feature_bars()));
    const indicators::IndicatorConfig cfg;
    const auto c = indicators::closes(window);
    const double last = c.back();
    const auto m = indicators::macd(c, cfg.macd_fast, cfg.macd_slow, cfg.macd_signal);
    return {
        indicators::rsi(c, cfg.rsi_period).back(),
        100.0 * m.macd.back() / last,
        100.0 * m.histogram.back() / last,
        last / indicators::sma(c, 20).back() - 1.0,
        indicators::roc(c, cfg.roc_period).back(),
        indicators::stoch(window, cfg.stoch_k_period, cfg.stoch_d_period).k.back(),
        indicators::willr(window, cfg.willr_period).back(),
    };
}

// ---------------------------------------------------------------------------

namespace {

double sigmoid(double f) { return 1.0 / (1.0 + std::exp(-f)); }

double mean_log_loss(std::span<const double> f, std::span<const int> y) {
    double sum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        // log(1 + e^-z) evaluated stably, z = f for y=1 and -f for y=0.
        const double z = y[i] ? f[i] : -f[i];
        sum += z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
    }
    return sum / static_cast<double>(f.size());
}

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double sse_gain = 0.0;
};

} // namespace

double BoostedStumpsModel::raw_score(const FeatureVector& x) const {
    double f = base_score;
    for (const auto& s : stumps) f += s.eval(x);
    return f;
}

double BoostedStumpsModel::probability(const FeatureVector& x) const { return sigmoid(raw_score(x)); }

double BoostedStumpsModel::score(const FeatureVector& x) const { return std::tanh(0.5 * raw_score(x)); }

BoostedStumpsModel train_boosted_stumps(std::span<const FeatureVector> features, std::span<const int> labels,
                                        const StumpsParams& params) {
    const std::size_t n = features.size();
    if (n == 0) throw PreconditionError("no training samples");
    if (labels.size() != n) throw PreconditionError("feature and label counts differ");
    if (!(params.learning_rate > 0.0)) throw PreconditionError("learning rate must be > 0");

    BoostedStumpsModel model;
    model.learning_rate = params.learning_rate;
    const double positives = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
    const double mean = std::clamp(positives / static_cast<double>(n), 1e-6, 1.0 - 1e-6);
    model.base_score = std::log(mean / (1.0 - mean));
    model.degenerate = positives == 0.0 || positives == static_cast<double>(n);

    std::vector<double> f(n, model.base_score);
    double loss = mean_log_loss(f, labels);
    model.loss_history.push_back(loss);
    if (model.degenerate) return model;

    // Sample order per feature, fixed across rounds.
    std::array<std::vector<std::size_t>, kFeatureCount> order;
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        order[j].resize(n);
        std::iota(order[j].begin(), order[j].end(), 0);
        std::stable_sort(order[j].begin(), order[j].end(),
                         [&](std::size_t a, std::size_t b) { return features[a][j] < features[b][j]; });
    }

    const std::size_t min_leaf = std::max<std::size_t>(1, params.min_leaf);
    std::vector<double> g(n), h(n), trial(n);
    for (int round = 0; round < params.rounds; ++round) {
        double g_total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(f[i]);
            g[i] = labels[i] - p;  // negative gradient
            h[i] = p * (1.0 - p);
            g_total += g[i];
        }

        // Stump on the negative gradient by least squares: maximize
        // S_L^2/n_L + S_R^2/n_R over thresholds between distinct values.
        Split best;
        const double base = g_total * g_total / static_cast<double>(n);
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            const auto& ord = order[j];
            double s_left = 0.0;
            for (std::size_t k = 0; k + 1 < n; ++k) {
                s_left += g[ord[k]];
                const std::size_t n_left = k + 1;
                const std::size_t n_right = n - n_left;
                if (n_left < min_leaf || n_right < min_leaf) continue;
                const double a = features[ord[k]][j];
                const double b = features[ord[k + 1]][j];
                if (!(a < b)) continue;
                const double s_right = g_total - s_left;
                const double gain = s_left * s_left / static_cast<double>(n_left) +
                                    s_right * s_right / static_cast<double>(n_right) - base;
                if (gain > best.sse_gain + 1e-15) best = {static_cast<int>(j), 0.5 * (a + b), gain};
            }
        }
        if (best.feature < 0) break;

        // Newton leaf values.
        double gl = 0.0, hl = 0.0, gr = 0.0, hr = 0.0;
        const auto fj = static_cast<std::size_t>(best.feature);
        for (std::size_t i = 0; i < n; ++i) {
            if (features[i][fj] <= best.threshold) {
                gl += g[i];
                hl += h[i];
            } else {
                gr += g[i];
                hr += h[i];
            }
        }
        Stump stump{best.feature, best.threshold, std::clamp(gl / std::max(hl, 1e-12), -10.0, 10.0),
                    std::clamp(gr / std::max(hr, 1e-12), -10.0, 10.0), 0.0};

        // Backtracking line search on the stage weight; the loss never increases.
        double weight = params.learning_rate;
        double trial_loss = loss;
        for (int step = 0; step < 30; ++step) {
            stump.weight = weight;
            for (std::size_t i = 0; i < n; ++i) trial[i] = f[i] + stump.eval(features[i]);
            trial_loss = mean_log_loss(trial, labels);
            if (trial_loss < loss) break;
            weight *= 0.5;
        }
        if (!(trial_loss < loss)) break;
        f.swap(trial);
        loss = trial_loss;
        model.stumps.push_back(stump);
        model.loss_history.push_back(loss);
    }
    model.rounds = static_cast<int>(model.stumps.size());
    return model;
}

double log_loss(const BoostedStumpsModel& model, std::span<const FeatureVector> features,
                std::span<const int> labels) {
    if (features.empty() || features.size() != labels.size())
        throw PreconditionError("log_loss needs matching, non-empty samples");
    std::vector<double> f;
    f.reserve(features.size());
    for (const auto& x : features) f.push_back(model.raw_score(x));
    return mean_log_loss(f, labels);
}

json to_json(const BoostedStumpsModel& model) {
    json stumps = json::array();
    for (const auto& s : model.stumps)
        stumps.push_back({{"feature", s.feature}, {"threshold", s.threshold}, {"left", s.left},
                          {"right", s.right}, {"weight", s.weight}});
    json names = json::array();
    for (auto n : feature_names()) names.push_back(std::string(n));
    return {{"kind", "boosted_stumps"},
            {"version", BoostedStumpsModel::kVersion},
            {"features", names},
            {"base_score", model.base_score},
            {"learning_rate", model.learning_rate},
            {"degenerate", model.degenerate},
            {"stumps", stumps},
            {"loss_history", model.loss_history}};
}

BoostedStumpsModel model_from_json(const json& doc) {
    try {
        if (doc.at("kind").get<std::string>() != "boosted_stumps")
            throw DataError("not a boosted-stumps model document");
        const int version = doc.at("version").get<int>();
        if (version != BoostedStumpsModel::kVersion)
            throw DataError("unsupported model version " + std::to_string(version));
        BoostedStumpsModel m;
        m.base_score = doc.at("base_score").get<double>();
        m.learning_rate = doc.at("learning_rate").get<double>();
        m.degenerate = doc.at("degenerate").get<bool>();
        m.loss_history = doc.at("loss_history").get<std::vector<double>>();
        for (const auto& s : doc.at("stumps")) {
            Stump st{s.at("feature").get<int>(), s.at("threshold").get<double>(), s.at("left").get<double>(),
                     s.at("right").get<double>(), s.at("weight").get<double>()};
            if (st.feature < 0 || st.feature >= static_cast<int>(kFeatureCount))
                throw DataError("stump feature index out of range");
            m.stumps.push_back(st);
        }
        m.rounds = static_cast<int>(m.stumps.size());
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed model document: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const BoostedStumpsModel& model) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file '" + path.string() + "'");
    out << to_json(model).dump(2) << '\n';
}

BoostedStumpsModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read model file '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("model file '" + path.string() + "' is not JSON: " + e.what());
    }
    return model_from_json(doc);
}

void append_training_samples(Bars bars, std::size_t window, std::size_t stride, std::size_t horizon,
                             std::vector<FeatureVector>& features, std::vector<int>& labels) {
    if (stride == 0) throw PreconditionError("stride must be > 0");
    for (std::size_t s = 0; s + window + horizon <= bars.size(); s += stride) {
        const std::size_t e = s + window - 1;
        features.push_back(extract_features(bars.subspan(s, window)));
        labels.push_back(bars[e + horizon].close > bars[e].close ? 1 : 0);
    }
}

Vote majority_vote(std::span<const Vote> votes) {
    std::size_t l = 0, s = 0, h = 0;
    for (auto v : votes) {
        if (v == Vote::Long) ++l;
        else if (v == Vote::Short) ++s;
        else ++h;
    }
    if (l > s && l > h) return Vote::Long;
    if (s > l && s > h) return Vote::Short;
    return Vote::Hold;
}

std::optional<TradeDecision> predict_tree_baseline(const BoostedStumpsModel& model, Bars visible,
                                                   const TreeVoteConfig& config) {
    if (config.subwindow < feature_bars() || config.stride == 0)
        throw PreconditionError("invalid tree vote configuration");
    if (visible.size() < config.subwindow)
        throw PreconditionError("visible window shorter than the tree sub-window");
    // Sub-windows are anchored at the latest bar and step back by `stride`.
    std::vector<Vote> votes;
    for (std::size_t end = visible.size();; end -= config.stride) {
        const double s = model.score(extract_features(visible.subspan(end - config.subwindow, config.subwindow)));
        votes.push_back(s > config.dead_zone ? Vote::Long : s < -config.dead_zone ? Vote::Short : Vote::Hold);
        if (end < config.subwindow + config.stride) break;
    }
    const Vote v = majority_vote(votes);
    if (v == Vote::Hold) return std::nullopt;
    TradeDecision d;
    d.direction = v == Vote::Long ? Direction::Long : Direction::Short;
    d.risk_reward = 1.5;
    d.confidence = static_cast<double>(std::count(votes.begin(), votes.end(), v)) / static_cast<double>(votes.size());
    d.justification = "boosted-stumps vote " + fmt("%.2f", d.confidence);
    return d;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Method method) {
    switch (method) {
    case Method::Random: return "random";
    case Method::LinReg: return "linreg";
    case Method::BoostedStumps: return "boosted_stumps";
    case Method::Agent: return "agent";
    }
    return "?";
}

std::vector<Method> parse_methods(std::string_view text) {
    const auto all = BenchmarkConfig{}.methods;
    std::vector<Method> out;
    std::stringstream ss{std::string(text)};
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto name = lower(trim(item));
        if (name.empty()) continue;
        if (name == "all") return all;
        Method m;
        if (name == "random") m = Method::Random;
        else if (name == "linreg" || name == "lr") m = Method::LinReg;
        else if (name == "tree" || name == "stumps" || name == "boosted_stumps" || name == "xgboost")
            m = Method::BoostedStumps;
        else if (name == "agent") m = Method::Agent;
        else if (name == "none") continue;
        else throw PreconditionError("unknown method '" + name + "'");
        if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    }
    if (out.empty()) throw PreconditionError("no benchmark methods selected");
    return out;
}

double delta_alpha(double alpha_method, double alpha_random) {
    if (alpha_random == 0.0) throw PreconditionError("random-baseline accuracy is zero; delta undefined");
    return 100.0 * (alpha_method - alpha_random) / alpha_random;
}

SummaryRow summarize(std::string asset, Method method, std::span<const SegmentRecord> records) {
    SummaryRow row;
    row.asset = std::move(asset);
    row.method = method;
    for (const auto& r : records) {
        if (r.method != method) continue;
        if (r.abstained) {
            ++row.abstained;
            continue;
        }
        ++row.segments;
        row.total_hits += r.outcome.hits;
        row.mean_r_cc += r.outcome.r_cc;
        row.mean_r_max += r.outcome.r_max;
        row.mean_r_min += r.outcome.r_min;
    }
    if (row.segments > 0) {
        const double n = static_cast<double>(row.segments);
        row.alpha = 100.0 * static_cast<double>(row.total_hits) / (3.0 * n);
        row.mean_r_cc /= n;
        row.mean_r_max /= n;
        row.mean_r_min /= n;
    }
    return row;
}

namespace {

struct Task {
    std::size_t asset = 0;
    std::size_t segment = 0;
    Method method = Method::Random;
};

SegmentRecord run_task(const Task& task, const AssetInput& asset, const BenchmarkConfig& config,
                       const BoostedStumpsModel* model) {
    const Segment& seg = asset.segments[task.segment];
    SegmentRecord rec;
    rec.asset = asset.name;
    rec.segment = task.segment;
    rec.start_index = seg.start_index;
    rec.method = task.method;
    if (seg.visible.empty() || seg.hidden.empty()) throw DataError("segment has no visible or hidden bars");

    TradeDecision d;
    double rho = config.agent.rho;
    switch (task.method) {
    case Method::Random: {
        Rng rng(derive_seed(config.seed, asset.name, task.segment));
        d = baseline_random(rng);
        break;
    }
    case Method::LinReg: d = baseline_linreg(indicators::closes(seg.visible), config.linreg_window); break;
    case Method::BoostedStumps: {
        auto p = predict_tree_baseline(*model, seg.visible, config.votes);
        if (!p) {
            rec.abstained = true;
            return rec;
        }
        d = *p;
        break;
    }
    case Method::Agent: d = analyze_window(seg.visible, config.agent).decision; break;
    }
    const auto levels = decision::risk_levels(seg.visible.back().close, d.direction, rho, d.risk_reward);
    rec.outcome = simulate_execution(d, levels, seg.hidden, config.execution);
    rec.decision = std::move(d);
    return rec;
}

} // namespace

BenchmarkResult run_benchmark(std::span<const AssetInput> assets, const BenchmarkConfig& config) {
    if (config.methods.empty()) throw PreconditionError("no benchmark methods selected");
    const auto has = [&](Method m) {
        return std::find(config.methods.begin(), config.methods.end(), m) != config.methods.end();
    };

    BenchmarkResult result;
    result.summary.seed = config.seed;
    std::vector<std::string> failure(assets.size());
    std::vector<std::optional<BoostedStumpsModel>> models(assets.size());
    std::vector<std::vector<bool>> is_train(assets.size());

    for (std::size_t a = 0; a < assets.size(); ++a) {
        const auto& asset = assets[a];
        const std::size_t n = asset.segments.size();
        if (n == 0) {
            failure[a] = "no segments";
            continue;
        }
        is_train[a].assign(n, false);
        if (!has(Method::BoostedStumps)) continue;
        // Seeded half split: the tree trains on one half and is scored on the other.
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        Rng rng(derive_seed(config.seed, asset.name + "#split", 0));
        for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
        std::vector<std::size_t> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n / 2));
        std::sort(train.begin(), train.end());
        for (auto i : train) is_train[a][i] = true;
        result.summary.train_split.emplace_back(asset.name, train);
        try {
            std::vector<FeatureVector> x;
            std::vector<int> y;
            for (auto i : train) {
                std::vector<OhlcBar> full = asset.segments[i].visible;
                full.insert(full.end(), asset.segments[i].hidden.begin(), asset.segments[i].hidden.end());
                append_training_samples(full, config.votes.subwindow, 1, decision::kForecastHorizon, x, y);
            }
            if (x.empty()) throw DataError("no training samples for the tree baseline");
            models[a] = train_boosted_stumps(x, y, config.stumps);
        } catch (const Error& e) {
            failure[a] = e.what();
        }
    }

    std::vector<Task> tasks;
    for (std::size_t a = 0; a < assets.size(); ++a) {
        if (!failure[a].empty()) continue;
        for (auto m : config.methods)
            for (std::size_t s = 0; s < assets[a].segments.size(); ++s) {
                if (m == Method::BoostedStumps && is_train[a][s]) continue;
                tasks.push_back({a, s, m});
            }
    }

    std::vector<SegmentRecord> records(tasks.size());
    std::vector<std::string> errors(tasks.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t t = next++; t < tasks.size(); t = next++) {
            const auto& task = tasks[t];
            try {
                const BoostedStumpsModel* model = models[task.asset] ? &*models[task.asset] : nullptr;
                records[t] = run_task(task, assets[task.asset], config, model);
            } catch (const std::exception& e) {
                errors[t] = "segment " + std::to_string(task.segment) + " (" +
                            std::string(to_string(task.method)) + "): " + e.what();
            }
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(tasks.size())));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (std::size_t t = 0; t < tasks.size(); ++t)
        if (!errors[t].empty() && failure[tasks[t].asset].empty()) failure[tasks[t].asset] = errors[t];

    for (std::size_t a = 0; a < assets.size(); ++a) {
        if (!failure[a].empty()) {
            result.summary.failures.push_back({assets[a].name, failure[a]});
            continue;
        }
        std::vector<SegmentRecord> mine;
        for (std::size_t t = 0; t < tasks.size(); ++t)
            if (tasks[t].asset == a) mine.push_back(records[t]);
        std::optional<double> alpha_random;
        if (has(Method::Random)) alpha_random = summarize(assets[a].name, Method::Random, mine).alpha;
        for (auto m : config.methods) {
            auto row = summarize(assets[a].name, m, mine);
            if (m != Method::Random && alpha_random && *alpha_random != 0.0 && row.segments > 0)
                row.delta_alpha = delta_alpha(row.alpha, *alpha_random);
            result.summary.rows.push_back(std::move(row));
        }
        result.records.insert(result.records.end(), std::make_move_iterator(mine.begin()),
                              std::make_move_iterator(mine.end()));
    }
    return result;
}

BenchmarkResult run_benchmark(const Manifest& manifest, const BenchmarkConfig& config) {
    std::vector<AssetInput> inputs;
    std::vector<AssetFailure> load_failures;
    for (const auto& entry : manifest.assets) {
        try {
            const auto series = load_csv(entry.csv, entry.symbol, entry.timeframe);
            auto params = entry.sampling;
            params.seed = derive_seed(config.seed, entry.symbol + "#segments", entry.sampling.seed);
            inputs.push_back({entry.symbol, sample_segments(series, params)});
        } catch (const Error& e) {
            load_failures.push_back({entry.symbol, e.what()});
        }
    }
    auto result = run_benchmark(inputs, config);
    result.summary.failures.insert(result.summary.failures.begin(), load_failures.begin(), load_failures.end());
    return result;
}

namespace {

std::string delta_text(const SummaryRow& row) {
    return row.delta_alpha ? fmt("%+.1f%%", *row.delta_alpha) : "-";
}

} // namespace

std::string render_table_csv(const EvalSummary& summary) {
    std::string out = "asset,method,segments,abstained,hits,alpha,delta_alpha,r_cc,r_max,r_min\n";
    for (const auto& r : summary.rows) {
        out += r.asset + "," + std::string(to_string(r.method)) + "," + std::to_string(r.segments) + "," +
               std::to_string(r.abstained) + "," + std::to_string(r.total_hits) + "," + fmt("%.1f", r.alpha) +
               "," + delta_text(r) + "," + fmt("%.3f", r.mean_r_cc) + "," + fmt("%.3f", r.mean_r_max) + "," +
               fmt("%.3f", r.mean_r_min) + "\n";
    }
    return out;
}

std::string render_table_text(const EvalSummary& summary) {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-12s %-15s %6s %8s %8s %8s %8s %8s\n", "asset", "method", "n", "acc",
                  "d_acc", "R_cc", "R_max", "R_min");
    out += buf;
    for (const auto& r : summary.rows) {
        std::snprintf(buf, sizeof buf, "%-12s %-15s %6zu %8.1f %8s %8.3f %8.3f %8.3f\n", r.asset.c_str(),
                      std::string(to_string(r.method)).c_str(), r.segments, r.alpha, delta_text(r).c_str(),
                      r.mean_r_cc, r.mean_r_max, r.mean_r_min);
        out += buf;
    }
    for (const auto& f : summary.failures) out += "skipped " + f.asset + ": " + f.message + "\n";
    return out;
}

json to_json(const EvalSummary& summary) {
    json rows = json::array();
    for (const auto& r : summary.rows) {
        rows.push_back({{"asset", r.asset},
                        {"method", std::string(to_string(r.method))},
                        {"segments", r.segments},
                        {"abstained", r.abstained},
                        {"hits", r.total_hits},
                        {"alpha", r.alpha},
                        {"delta_alpha", r.delta_alpha ? json(*r.delta_alpha) : json(nullptr)},
                        {"r_cc", r.mean_r_cc},
                        {"r_max", r.mean_r_max},
                        {"r_min", r.mean_r_min}});
    }
    json failures = json::array();
    for (const auto& f : summary.failures) failures.push_back({{"asset", f.asset}, {"message", f.message}});
    json split = json::object();
    for (const auto& [asset, idx] : summary.train_split) split[asset] = idx;
    return {{"seed", summary.seed}, {"rows", rows}, {"failures", failures}, {"tree_train_segments", split}};
}

// ---------------------------------------------------------------------------

std::string CaseStudy::summary() const {
    const std::size_t n = windows.size();
    const long pct_correct = n ? std::lround(100.0 * static_cast<double>(correct) / static_cast<double>(n)) : 0;
    return std::to_string(correct) + "/" + std::to_string(n) + " (" + std::to_string(pct_correct) + "%)";
}

CaseStudy rolling_case_study(Bars series, std::size_t window_length, std::size_t num_windows, std::size_t offset,
                             const DecisionFn& method) {
    constexpr std::size_t horizon = decision::kForecastHorizon;
    if (window_length == 0 || num_windows == 0) throw PreconditionError("case study needs windows");
    const std::size_t need = (num_windows - 1) * offset + window_length + horizon;
    if (series.size() < need)
        throw PreconditionError("case study needs " + std::to_string(need) + " bars, series has " +
                                std::to_string(series.size()));
    CaseStudy study;
    for (std::size_t i = 0; i < num_windows; ++i) {
        const std::size_t start = i * offset;
        const auto visible = series.subspan(start, window_length);
        CaseWindow w;
        w.start = start;
        w.decision = method(visible, i);
        std::vector<double> closes;
        for (const auto& b : series.subspan(start + window_length, horizon)) closes.push_back(b.close);
        w.hits = directional_hits(w.decision.direction, visible.back().close, closes);
        w.correct = w.hits >= 2;
        if (w.correct) ++study.correct;
        study.windows.push_back(std::move(w));
    }
    return study;
}

} // namespace quantdesk::evaluation
