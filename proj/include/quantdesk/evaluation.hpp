#pragma once

#include "quantdesk/decision.hpp"
#include "quantdesk/market_data.hpp"
#include "quantdesk/pipeline.hpp"
#include "quantdesk/random.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace quantdesk::evaluation {

using decision::Direction;
using decision::RiskLevels;
using decision::TradeDecision;

// ---------------------------------------------------------------------------
// Risk-constrained execution over the hidden horizon

enum class ExitReason {
    StopHit,       // stop level touched inside a bar; filled at the stop
    TargetHit,     // target level touched inside a bar; filled at the target
    StopGap,       // bar opened beyond the stop; filled at the open
    TargetGap,     // bar opened beyond the target; filled at the open
    HorizonClose,  // no level touched; closed at the last hidden close
};

/// Which level fills first when one bar's range contains both.
enum class TieBreak { StopFirst, TargetFirst, OpenDirection };

std::string_view to_string(ExitReason reason);
std::string_view to_string(TieBreak policy);
/// "stop" | "target" | "open"
TieBreak parse_tiebreak(std::string_view text);

struct ExecutionConfig {
    TieBreak tiebreak = TieBreak::StopFirst;
    /// Clamp R_max to +100*r*rho and R_min to -100*rho.
    bool cap_excursions = false;
};

struct TradeOutcome {
    Direction direction = Direction::Long;
    double entry = 0.0;
    double exit = 0.0;
    ExitReason exit_reason = ExitReason::HorizonClose;
    int exit_bar = 2;
    double r_cc = 0.0;   // percent
    double r_max = 0.0;  // percent
    double r_min = 0.0;  // percent
    int hits = 0;
};

/// Closes strictly beyond the entry close in the called direction (ties count for neither).
int directional_hits(Direction direction, double entry_close, std::span<const double> hidden_closes);

struct Excursion {
    double r_max = 0.0;
    double r_min = 0.0;
};

/// Best and worst direction-adjusted percent moves over the hidden bars.
/// The entry itself is part of the path, so r_min <= 0 <= r_max.
Excursion excursions(Direction direction, double entry, Bars hidden);

TradeOutcome simulate_execution(const TradeDecision& decision, const RiskLevels& levels, Bars hidden,
                                const ExecutionConfig& config = {});

// ---------------------------------------------------------------------------
// Baselines

/// Direction uniform over {LONG, SHORT}, r uniform over [1.2, 1.8].
TradeDecision baseline_random(Rng& rng);

/// OLS slope of the trailing `window` closes; LONG iff slope > 0. r = 1.5.
TradeDecision baseline_linreg(std::span<const double> closes, std::size_t window = 40);

inline constexpr std::size_t kFeatureCount = 7;
using FeatureVector = std::array<double, kFeatureCount>;

/// RSI, MACD, MACD histogram, close/SMA20 ratio, ROC, %K, Williams %R at the
/// last bar. MACD terms are expressed in percent of the last close.
FeatureVector extract_features(Bars window);
const std::array<std::string_view, kFeatureCount>& feature_names();
/// Bars needed by extract_features.
std::size_t feature_bars();

struct Stump {
    int feature = 0;
    double threshold = 0.0;  // x <= threshold goes left
    double left = 0.0;
    double right = 0.0;
    double weight = 0.0;  // stage weight (learning rate after line search)

    double eval(const FeatureVector& x) const {
        return weight * (x[static_cast<std::size_t>(feature)] <= threshold ? left : right);
    }
};

/// Gradient-boosted depth-1 regression trees on the logistic loss.
struct BoostedStumpsModel {
    static constexpr int kVersion = 1;
    double base_score = 0.0;  // initial log-odds
    double learning_rate = 0.1;
    int rounds = 0;
    std::vector<Stump> stumps;
    bool degenerate = false;  // all training labels were identical
    std::vector<double> loss_history;  // mean log-loss after init and after every round

    double raw_score(const FeatureVector& x) const;
    double probability(const FeatureVector& x) const;
    /// tanh(F/2) = 2p - 1, in (-1, 1).
    double score(const FeatureVector& x) const;
};

struct StumpsParams {
    int rounds = 50;
    double learning_rate = 0.3;
    std::size_t min_leaf = 5;  // fewest samples on either side of a split
};

/// labels: 1 = up, 0 = down.
BoostedStumpsModel train_boosted_stumps(std::span<const FeatureVector> features,
                                        std::span<const int> labels, const StumpsParams& params = {});

double log_loss(const BoostedStumpsModel& model, std::span<const FeatureVector> features,
                std::span<const int> labels);

nlohmann::json to_json(const BoostedStumpsModel& model);
BoostedStumpsModel model_from_json(const nlohmann::json& doc);
void save_model(const std::filesystem::path& path, const BoostedStumpsModel& model);
BoostedStumpsModel load_model(const std::filesystem::path& path);

/// Appends one (features, label) sample per sliding window of `window` bars
/// (stride `stride`) that still has `horizon` bars after it. Label = 1 when
/// the close `horizon` bars later is higher.
void append_training_samples(Bars bars, std::size_t window, std::size_t stride, std::size_t horizon,
                             std::vector<FeatureVector>& features, std::vector<int>& labels);

enum class Vote { Long, Short, Hold };

struct TreeVoteConfig {
    std::size_t subwindow = 40;
    std::size_t stride = 5;
    double dead_zone = 0.05;
};

/// Plurality over LONG/SHORT/HOLD votes; HOLD wins ties between LONG and SHORT.
Vote majority_vote(std::span<const Vote> votes);

/// nullopt is a HOLD abstention: the segment is excluded from this method's averages.
std::optional<TradeDecision> predict_tree_baseline(const BoostedStumpsModel& model, Bars visible,
                                                   const TreeVoteConfig& config = {});

// ---------------------------------------------------------------------------
// Benchmark

enum class Method { Random, LinReg, BoostedStumps, Agent };

std::string_view to_string(Method method);
/// Comma-separated list of random, linreg, tree (or stumps/xgboost), agent, or "all".
/// Throws PreconditionError on unknown names or an empty selection ("none").
std::vector<Method> parse_methods(std::string_view text);

struct BenchmarkConfig {
    std::uint64_t seed = 42;
    std::vector<Method> methods{Method::Random, Method::LinReg, Method::BoostedStumps, Method::Agent};
    ExecutionConfig execution{};
    AgentConfig agent{};
    StumpsParams stumps{};
    TreeVoteConfig votes{};
    std::size_t linreg_window = 40;
    unsigned threads = 1;
};

struct SegmentRecord {
    std::string asset;
    std::size_t segment = 0;
    std::size_t start_index = 0;
    Method method = Method::Random;
    bool abstained = false;
    TradeDecision decision;
    TradeOutcome outcome;
};

struct SummaryRow {
    std::string asset;
    Method method = Method::Random;
    std::size_t segments = 0;  // scored segments (abstentions excluded)
    std::size_t abstained = 0;
    long total_hits = 0;
    double alpha = 0.0;  // percent
    std::optional<double> delta_alpha;  // percent vs the random baseline
    double mean_r_cc = 0.0;
    double mean_r_max = 0.0;
    double mean_r_min = 0.0;
};

struct AssetFailure {
    std::string asset;
    std::string message;
};

struct EvalSummary {
    std::uint64_t seed = 0;
    std::vector<SummaryRow> rows;
    std::vector<AssetFailure> failures;
    /// Segment indices used to train the tree baseline, per asset.
    std::vector<std::pair<std::string, std::vector<std::size_t>>> train_split;
};

struct BenchmarkResult {
    EvalSummary summary;
    std::vector<SegmentRecord> records;
};

/// 100 * (alpha_method - alpha_random) / alpha_random.
double delta_alpha(double alpha_method, double alpha_random);

/// 100 * hits / (3 * scored segments), plus mean returns over scored segments.
SummaryRow summarize(std::string asset, Method method, std::span<const SegmentRecord> records);

struct AssetInput {
    std::string name;
    std::vector<Segment> segments;
};

BenchmarkResult run_benchmark(std::span<const AssetInput> assets, const BenchmarkConfig& config);
/// Loads and samples every manifest asset; assets that fail to load are
/// recorded in summary.failures and skipped.
BenchmarkResult run_benchmark(const Manifest& manifest, const BenchmarkConfig& config);

std::string render_table_csv(const EvalSummary& summary);
std::string render_table_text(const EvalSummary& summary);
nlohmann::json to_json(const EvalSummary& summary);

// ---------------------------------------------------------------------------
// Rolling-window case study

/// Decides on `visible`; `window_index` lets scripted methods replay a sequence.
using DecisionFn = std::function<TradeDecision(Bars visible, std::size_t window_index)>;

struct CaseWindow {
    std::size_t start = 0;
    TradeDecision decision;
    int hits = 0;
    bool correct = false;  // hits >= 2 of 3
};

struct CaseStudy {
    std::vector<CaseWindow> windows;
    std::size_t correct = 0;
    /// "8/10 (80%)"
    std::string summary() const;
};

/// Window i covers bars [i*offset, i*offset + window_length) and is scored on
/// the 3 bars that follow it.
CaseStudy rolling_case_study(Bars series, std::size_t window_length, std::size_t num_windows,
                             std::size_t offset, const DecisionFn& method);

} // namespace quantdesk::evaluation
