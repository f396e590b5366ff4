#include "quantdesk/market_data.hpp"

#include "quantdesk/error.hpp"
#include "quantdesk/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace quantdesk {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

std::vector<std::string_view> split_row(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            cells.push_back(trim(line.substr(start, i - start)));
            start = i + 1;
        }
    }
    return cells;
}

bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    // from_chars for double is available in libstdc++ 11.
    const char* first = s.data();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_int(std::string_view s, std::int64_t& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

int digits(std::string_view s, std::size_t pos, std::size_t n) {
    if (pos + n > s.size()) throw DataError("truncated timestamp '" + std::string(s) + "'");
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i])))
            throw DataError("malformed timestamp '" + std::string(s) + "'");
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

// Column lookup: canonical name -> accepted header spellings.
struct ColumnAliases {
    const char* canonical;
    std::initializer_list<const char*> names;
};

const ColumnAliases kColumns[] = {
    {"timestamp", {"timestamp", "time", "date", "datetime"}},
    {"open", {"open", "o"}},
    {"high", {"high", "h"}},
    {"low", {"low", "l"}},
    {"close", {"close", "c"}},
    {"volume", {"volume", "vol", "v"}},
};

} // namespace

std::string check_bar(const OhlcBar& bar) {
    for (double p : {bar.open, bar.high, bar.low, bar.close}) {
        if (!std::isfinite(p) || p <= 0.0) return "prices must be finite and > 0";
    }
    if (bar.high < std::max(bar.open, bar.close)) return "high below max(open, close)";
    if (bar.low > std::min(bar.open, bar.close)) return "low above min(open, close)";
    if (bar.high < bar.low) return "high below low";
    if (bar.volume && (!std::isfinite(*bar.volume) || *bar.volume < 0.0)) return "negative volume";
    return {};
}

BarSeries::BarSeries(std::string symbol, std::chrono::seconds timeframe, std::vector<OhlcBar> bars)
    : symbol_(std::move(symbol)), timeframe_(timeframe), bars_(std::move(bars)) {
    if (bars_.empty()) throw DataError("empty series");
    for (std::size_t i = 0; i < bars_.size(); ++i) {
        if (auto why = check_bar(bars_[i]); !why.empty())
            throw DataError("bar " + std::to_string(i) + ": " + why);
        if (i > 0 && bars_[i].timestamp <= bars_[i - 1].timestamp)
            throw DataError("non-monotonic timestamps at bar " + std::to_string(i));
    }
}

std::vector<SpacingGap> find_spacing_gaps(const BarSeries& series) {
    std::vector<SpacingGap> gaps;
    const auto expected = series.timeframe().count();
    if (expected <= 0) return gaps;
    const auto& bars = series.bars();
    for (std::size_t i = 1; i < bars.size(); ++i) {
        const auto spacing = bars[i].timestamp - bars[i - 1].timestamp;
        if (spacing != expected) gaps.push_back({i, spacing});
    }
    return gaps;
}

std::chrono::seconds parse_timeframe(std::string_view text) {
    const std::string t = lower(trim(text));
    if (t.empty()) throw PreconditionError("empty timeframe");
    std::int64_t unit = 1;
    std::string_view number = t;
    switch (t.back()) {
    case 's': unit = 1; number.remove_suffix(1); break;
    case 'm': unit = 60; number.remove_suffix(1); break;
    case 'h': unit = 3600; number.remove_suffix(1); break;
    case 'd': unit = 86400; number.remove_suffix(1); break;
    case 'w': unit = 7 * 86400; number.remove_suffix(1); break;
    default: break;
    }
    std::int64_t n = 0;
    if (!parse_int(number, n) || n <= 0)
        throw PreconditionError("invalid timeframe '" + std::string(text) + "'");
    return std::chrono::seconds(n * unit);
}

std::string format_timeframe(std::chrono::seconds tf) {
    const auto s = tf.count();
    if (s > 0 && s % 86400 == 0) return std::to_string(s / 86400) + "d";
    if (s > 0 && s % 3600 == 0) return std::to_string(s / 3600) + "h";
    if (s > 0 && s % 60 == 0) return std::to_string(s / 60) + "m";
    return std::to_string(s) + "s";
}

std::int64_t parse_timestamp(std::string_view text) {
    const std::string_view s = trim(text);
    std::int64_t epoch = 0;
    if (parse_int(s, epoch)) return epoch;
    double fractional = 0.0;
    if (s.find('-') == std::string_view::npos && parse_double(s, fractional))
        return static_cast<std::int64_t>(std::floor(fractional));

    using namespace std::chrono;
    if (s.size() < 10 || s[4] != '-' || s[7] != '-')
        throw DataError("unrecognized timestamp '" + std::string(s) + "'");
    const year_month_day ymd{year{digits(s, 0, 4)}, month{static_cast<unsigned>(digits(s, 5, 2))},
                             day{static_cast<unsigned>(digits(s, 8, 2))}};
    if (!ymd.ok()) throw DataError("invalid date '" + std::string(s) + "'");
    std::int64_t secs = duration_cast<seconds>(sys_days{ymd}.time_since_epoch()).count();

    std::size_t pos = 10;
    if (pos < s.size() && (s[pos] == 'T' || s[pos] == ' ')) {
        ++pos;
        const int hh = digits(s, pos, 2);
        if (pos + 2 >= s.size() || s[pos + 2] != ':')
            throw DataError("malformed time in '" + std::string(s) + "'");
        const int mm = digits(s, pos + 3, 2);
        int ss = 0;
        pos += 5;
        if (pos < s.size() && s[pos] == ':') {
            ss = digits(s, pos + 1, 2);
            pos += 3;
        }
        if (pos < s.size() && s[pos] == '.') {
            ++pos;
            while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        }
        if (hh > 23 || mm > 59 || ss > 60) throw DataError("invalid time in '" + std::string(s) + "'");
        secs += hh * 3600 + mm * 60 + ss;
    }
    if (pos < s.size()) {
        if (s[pos] == 'Z' && pos + 1 == s.size()) return secs;
        if ((s[pos] == '+' || s[pos] == '-') && pos + 6 == s.size() && s[pos + 3] == ':') {
            const int sign = s[pos] == '+' ? 1 : -1;
            const int offset = digits(s, pos + 1, 2) * 3600 + digits(s, pos + 4, 2) * 60;
            return secs - sign * offset;
        }
        throw DataError("unrecognized timestamp suffix in '" + std::string(s) + "'");
    }
    return secs;
}

std::string format_timestamp(std::int64_t epoch_seconds) {
    using namespace std::chrono;
    const sys_seconds tp{seconds{epoch_seconds}};
    const auto day_point = floor<days>(tp);
    const year_month_day ymd{day_point};
    const hh_mm_ss hms{tp - day_point};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

BarSeries parse_csv(std::istream& in, std::string symbol, std::chrono::seconds timeframe) {
    std::string line;
    std::size_t row = 0;
    // Skip leading blank lines; the first non-blank line is the header.
    while (std::getline(in, line)) {
        ++row;
        if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) throw DataError("empty series: no header row");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM

    const auto header = split_row(line);
    int index[6] = {-1, -1, -1, -1, -1, -1};
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string name = lower(header[c]);
        for (std::size_t k = 0; k < std::size(kColumns); ++k) {
            for (const char* alias : kColumns[k].names) {
                if (name == alias && index[k] < 0) index[k] = static_cast<int>(c);
            }
        }
    }
    for (std::size_t k = 0; k < 5; ++k) {
        if (index[k] < 0)
            throw DataError(std::string("header is missing required column '") +
                            kColumns[k].canonical + "'");
    }

    std::vector<OhlcBar> bars;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto cells = split_row(line);
        const auto cell = [&](int k) -> std::string_view {
            if (index[k] < 0 || static_cast<std::size_t>(index[k]) >= cells.size()) return {};
            return cells[index[k]];
        };
        OhlcBar bar;
        try {
            bar.timestamp = parse_timestamp(cell(0));
        } catch (const DataError& e) {
            throw DataError("row " + std::to_string(row) + ": " + e.what());
        }
        double* fields[] = {&bar.open, &bar.high, &bar.low, &bar.close};
        for (int k = 1; k <= 4; ++k) {
            if (!parse_double(cell(k), *fields[k - 1]))
                throw DataError("row " + std::to_string(row) + ": unparsable " + kColumns[k].canonical +
                                " '" + std::string(cell(k)) + "'");
        }
        if (index[5] >= 0 && !cell(5).empty()) {
            double v = 0.0;
            if (!parse_double(cell(5), v))
                throw DataError("row " + std::to_string(row) + ": unparsable volume");
            bar.volume = v;
        }
        if (auto why = check_bar(bar); !why.empty())
            throw DataError("row " + std::to_string(row) + ": " + why);
        if (!bars.empty() && bar.timestamp <= bars.back().timestamp)
            throw DataError("row " + std::to_string(row) + ": non-monotonic timestamps");
        bars.push_back(bar);
    }
    if (bars.empty()) throw DataError("empty series: no data rows");
    return BarSeries(std::move(symbol), timeframe, std::move(bars));
}

BarSeries load_csv(const std::filesystem::path& path, std::string symbol,
                   std::chrono::seconds timeframe) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    try {
        return parse_csv(in, std::move(symbol), timeframe);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_csv(const std::filesystem::path& path, const BarSeries& series) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    const bool with_volume = std::any_of(series.bars().begin(), series.bars().end(),
                                         [](const OhlcBar& b) { return b.volume.has_value(); });
    out << "timestamp,open,high,low,close" << (with_volume ? ",volume" : "") << '\n';
    char buf[256];
    for (const auto& b : series.bars()) {
        std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.17g",
                      static_cast<long long>(b.timestamp), b.open, b.high, b.low, b.close);
        out << buf;
        if (with_volume) {
            std::snprintf(buf, sizeof buf, ",%.17g", b.volume.value_or(0.0));
            out << buf;
        }
        out << '\n';
    }
}

std::vector<Segment> sample_segments(const BarSeries& series, const SamplingParams& params) {
    if (params.count < 1) throw PreconditionError("segment count must be >= 1");
    if (params.length < 1) throw PreconditionError("segment length must be >= 1");
    if (params.holdout < 1 || params.holdout >= params.length)
        throw PreconditionError("holdout must be in [1, length)");
    if (series.size() < params.length)
        throw PreconditionError("series too short: " + std::to_string(series.size()) +
                                " bars, segment length " + std::to_string(params.length));
    const std::size_t offsets = series.size() - params.length + 1;
    if (params.count > offsets)
        throw PreconditionError("count " + std::to_string(params.count) + " exceeds the " +
                                std::to_string(offsets) + " distinct start offsets");

    // Partial Fisher-Yates over the offset range.
    std::vector<std::size_t> pool(offsets);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    Rng rng(params.seed);
    const std::string source = series.symbol() + "@" + format_timeframe(series.timeframe());
    std::vector<Segment> out;
    out.reserve(params.count);
    const auto& bars = series.bars();
    for (std::size_t i = 0; i < params.count; ++i) {
        const std::size_t j = i + rng.uniform_index(offsets - i);
        std::swap(pool[i], pool[j]);
        const std::size_t start = pool[i];
        const auto first = bars.begin() + static_cast<std::ptrdiff_t>(start);
        const auto split = first + static_cast<std::ptrdiff_t>(params.length - params.holdout);
        const auto last = first + static_cast<std::ptrdiff_t>(params.length);
        out.push_back({source, start, {first, split}, {split, last}});
    }
    return out;
}

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest '" + path.string() + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("manifest '" + path.string() + "' is not valid JSON: " + e.what());
    }
    if (!doc.contains("assets") || !doc["assets"].is_array())
        throw DataError("manifest must contain an 'assets' array");
    const auto base = path.parent_path();
    Manifest manifest;
    for (const auto& a : doc["assets"]) {
        try {
            ManifestAsset asset;
            asset.symbol = a.at("symbol").get<std::string>();
            asset.timeframe = parse_timeframe(a.at("timeframe").get<std::string>());
            std::filesystem::path csv = a.at("csv").get<std::string>();
            asset.csv = csv.is_absolute() ? csv : base / csv;
            asset.sampling.count = a.value("count", std::size_t{100});
            asset.sampling.length = a.value("length", std::size_t{100});
            asset.sampling.holdout = a.value("holdout", std::size_t{3});
            asset.sampling.seed = a.value("seed", std::uint64_t{0});
            manifest.assets.push_back(std::move(asset));
        } catch (const nlohmann::json::exception& e) {
            throw DataError("manifest asset entry is malformed: " + std::string(e.what()));
        }
    }
    return manifest;
}

} // namespace quantdesk
