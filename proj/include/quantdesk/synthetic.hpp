#pragma once

#include "quantdesk/market_data.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace quantdesk::synthetic {

/// Regime-switching log-normal walk. Each regime lasts a random number of bars
/// and draws its drift from [-max_drift, max_drift].
struct WalkParams {
    std::string symbol = "SYN";
    std::chrono::seconds timeframe{4 * 3600};
    std::size_t bars = 5000;
    double start_price = 100.0;
    double volatility = 0.004;  // per-bar log-return standard deviation
    double max_drift = 0.0015;
    std::size_t min_regime = 20;
    std::size_t max_regime = 120;
    std::int64_t start_time = 1577836800;  // 2020-01-01T00:00:00Z
    std::uint64_t seed = 1;
};

BarSeries random_walk(const WalkParams& params);

/// The four assets of the bundled benchmark manifest.
std::vector<WalkParams> bundled_assets();

/// Writes one CSV per asset plus manifest.json into `dir`; returns the manifest path.
std::filesystem::path write_bundle(const std::filesystem::path& dir, const std::vector<WalkParams>& assets,
                                   std::size_t segments = 100);

} // namespace quantdesk::synthetic
