#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace quantdesk {

/// One candlestick. Timestamps are UTC epoch seconds.
struct OhlcBar {
    std::int64_t timestamp = 0;
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
    std::optional<double> volume;

    friend bool operator==(const OhlcBar&, const OhlcBar&) = default;
};

/// Returns an empty string when the bar is valid, otherwise the first broken invariant.
std::string check_bar(const OhlcBar& bar);

using Bars = std::span<const OhlcBar>;

/// An ordered, validated run of bars for one symbol and timeframe.
/// Immutable once built; construction enforces the bar and ordering invariants.
class BarSeries {
public:
    BarSeries(std::string symbol, std::chrono::seconds timeframe, std::vector<OhlcBar> bars);

    const std::string& symbol() const noexcept { return symbol_; }
    std::chrono::seconds timeframe() const noexcept { return timeframe_; }
    const std::vector<OhlcBar>& bars() const noexcept { return bars_; }
    Bars view() const noexcept { return bars_; }
    std::size_t size() const noexcept { return bars_.size(); }
    const OhlcBar& operator[](std::size_t i) const { return bars_[i]; }

private:
    std::string symbol_;
    std::chrono::seconds timeframe_;
    std::vector<OhlcBar> bars_;
};

/// Spacing irregularity between two consecutive bars (session gaps, holidays).
struct SpacingGap {
    std::size_t index = 0;  // index of the later bar
    std::int64_t spacing = 0;
};

/// Bars whose spacing differs from the declared timeframe. Informational only.
std::vector<SpacingGap> find_spacing_gaps(const BarSeries& series);

/// Parses "15m", "1h", "4h", "1d", "30s" or a bare number of seconds.
std::chrono::seconds parse_timeframe(std::string_view text);
std::string format_timeframe(std::chrono::seconds tf);

/// Epoch seconds, or ISO-8601 ("2024-05-01", "2024-05-01T12:00:00Z",
/// "2024-05-01 12:00", "2024-05-01T12:00:00+02:00").
std::int64_t parse_timestamp(std::string_view text);
std::string format_timestamp(std::int64_t epoch_seconds);

/// Reads a CSV with a header row naming timestamp/open/high/low/close[/volume]
/// in any order and case. Throws DataError with the offending row number.
BarSeries load_csv(const std::filesystem::path& path, std::string symbol,
                   std::chrono::seconds timeframe);
BarSeries parse_csv(std::istream& in, std::string symbol, std::chrono::seconds timeframe);

void write_csv(const std::filesystem::path& path, const BarSeries& series);

/// A contiguous slice of a parent series split into the part an analyzer may
/// see and the forecast horizon that only the scorer may see.
struct Segment {
    std::string source;
    std::size_t start_index = 0;
    std::vector<OhlcBar> visible;
    std::vector<OhlcBar> hidden;

    friend bool operator==(const Segment&, const Segment&) = default;
};

struct SamplingParams {
    std::size_t count = 100;
    std::size_t length = 100;
    std::size_t holdout = 3;
    std::uint64_t seed = 0;
};

/// Draws `count` distinct start offsets uniformly without replacement.
/// Segments may overlap; start offsets never repeat.
std::vector<Segment> sample_segments(const BarSeries& series, const SamplingParams& params);

/// One asset entry of a benchmark manifest.
struct ManifestAsset {
    std::string symbol;
    std::chrono::seconds timeframe{0};
    std::filesystem::path csv;
    SamplingParams sampling;
};

struct Manifest {
    std::vector<ManifestAsset> assets;
};

/// Loads a JSON manifest; relative csv paths resolve against the manifest's directory.
Manifest load_manifest(const std::filesystem::path& path);

} // namespace quantdesk
