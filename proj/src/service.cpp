#include "quantdesk/service.hpp"

#include "quantdesk/error.hpp"

#include <httplib.h>

#include <algorithm>

namespace quantdesk::service {

using nlohmann::json;

json ApiError::envelope() const {
    return {{"code", code_}, {"message", what()}, {"detail", detail_}};
}

namespace {

bool is_channel_pattern(patterns::PatternKind kind) {
    using K = patterns::PatternKind;
    switch (kind) {
    case K::InverseHeadAndShoulders:
    case K::DoubleBottom:
    case K::VShapedReversal: return false;
    default: return true;
    }
}

json line_segment(double x0, double y0, double x1, double y1, const char* color, const char* style) {
    return {{"x0", x0}, {"y0", y0}, {"x1", x1}, {"y1", y1}, {"color", color}, {"style", style}};
}

double number_field(const json& obj, const char* key, std::size_t row) {
    if (!obj.contains(key) || !obj[key].is_number())
        throw ApiError(400, "bad_request", "bars[" + std::to_string(row) + "]." + key + " must be a number");
    return obj[key].get<double>();
}

std::vector<OhlcBar> inline_bars(const json& array, std::chrono::seconds tf) {
    if (!array.is_array()) throw ApiError(400, "bad_request", "bars must be an array");
    std::vector<OhlcBar> bars;
    bars.reserve(array.size());
    for (std::size_t i = 0; i < array.size(); ++i) {
        const auto& item = array[i];
        if (!item.is_object()) throw ApiError(400, "bad_request", "bars[" + std::to_string(i) + "] must be an object");
        OhlcBar b;
        if (item.contains("timestamp")) {
            const auto& ts = item["timestamp"];
            try {
                b.timestamp = ts.is_number_integer() ? ts.get<std::int64_t>() : parse_timestamp(ts.get<std::string>());
            } catch (const std::exception& e) {
                throw ApiError(400, "bad_request", "bars[" + std::to_string(i) + "].timestamp: " + e.what());
            }
        } else {
            b.timestamp = static_cast<std::int64_t>(i) * tf.count();
        }
        b.open = number_field(item, "open", i);
        b.high = number_field(item, "high", i);
        b.low = number_field(item, "low", i);
        b.close = number_field(item, "close", i);
        if (item.contains("volume") && item["volume"].is_number()) b.volume = item["volume"].get<double>();
        bars.push_back(b);
    }
    return bars;
}

} // namespace

json chart_payload(Bars window, const Analysis& a) {
    json candles = json::array();
    for (std::size_t i = 0; i < window.size(); ++i) {
        const auto& b = window[i];
        candles.push_back({{"x", i}, {"timestamp", format_timestamp(b.timestamp)}, {"open", b.open},
                           {"high", b.high}, {"low", b.low}, {"close", b.close}});
    }

    const auto& c = a.channel;
    const double x0 = static_cast<double>(c.window_offset);
    const double span = static_cast<double>(c.window_length - 1);
    json lines = json::array();
    lines.push_back(line_segment(x0, c.support.at(0.0), x0 + span, c.support.at(span), "blue", "solid"));
    lines.back()["role"] = "support";
    lines.push_back(line_segment(x0, c.resistance.at(0.0), x0 + span, c.resistance.at(span), "red", "solid"));
    lines.back()["role"] = "resistance";

    const double last = static_cast<double>(window.size() - 1);
    json pattern_marks = json::array();
    for (const auto& m : a.matches) {
        json points = json::array();
        for (const auto& p : m.key_points)
            if (p.x >= 0.0 && p.x <= last) points.push_back({{"x", p.x}, {"y", p.y}});
        json boundaries = json::array();
        if (is_channel_pattern(m.kind)) {
            const double s0 = std::max(static_cast<double>(m.span_start), x0);
            const double s1 = std::min(static_cast<double>(m.span_end), last);
            for (const auto* line : {&c.resistance, &c.support})
                boundaries.push_back(line_segment(s0, line->at(s0 - x0), s1, line->at(s1 - x0), "gray", "dashed"));
        } else {
            for (std::size_t i = 1; i < points.size(); ++i)
                boundaries.push_back(line_segment(points[i - 1]["x"], points[i - 1]["y"], points[i]["x"],
                                                  points[i]["y"], "gray", "dashed"));
        }
        pattern_marks.push_back({{"kind", patterns::to_string(m.kind)},
                                 {"name", patterns::info(m.kind).name},
                                 {"span", {std::min<std::size_t>(m.span_start, window.size() - 1),
                                           std::min<std::size_t>(m.span_end, window.size() - 1)}},
                                 {"confidence", m.confidence},
                                 {"key_points", points},
                                 {"boundaries", boundaries}});
    }

    const auto& r = a.risk;
    json bands = json::array();
    const double lo_stop = std::min(r.entry, r.stop), hi_stop = std::max(r.entry, r.stop);
    const double lo_tgt = std::min(r.entry, r.target), hi_tgt = std::max(r.entry, r.target);
    bands.push_back({{"role", "stop"}, {"x0", last}, {"x1", last}, {"y0", lo_stop}, {"y1", hi_stop}, {"color", "red"}});
    bands.push_back({{"role", "target"}, {"x0", last}, {"x1", last}, {"y0", lo_tgt}, {"y1", hi_tgt}, {"color", "green"}});

    return {{"candles", candles}, {"lines", lines}, {"patterns", pattern_marks}, {"bands", bands}};
}

std::shared_ptr<llm::ChatTransport> transport_from_env() {
    auto cfg = llm::EndpointConfig::from_env();
    if (!cfg) return nullptr;
    return std::make_shared<llm::HttpChatTransport>(std::move(*cfg));
}

AnalysisService::AnalysisService(std::vector<BarSeries> datasets, ServiceOptions options)
    : options_(std::move(options)) {
    for (auto& s : datasets) {
        const std::string name = s.symbol();
        datasets_.insert_or_assign(name, std::move(s));
    }
}

json AnalysisService::datasets() const {
    json out = json::array();
    for (const auto& [name, s] : datasets_) {
        out.push_back({{"name", name},
                       {"timeframe", format_timeframe(s.timeframe())},
                       {"bars", s.size()},
                       {"first", format_timestamp(s.bars().front().timestamp)},
                       {"last", format_timestamp(s.bars().back().timestamp)}});
    }
    return {{"datasets", out}};
}

json AnalysisService::health() const {
    return {{"status", "ok"}, {"datasets", datasets_.size()}, {"llm_available", options_.transport != nullptr}};
}

json AnalysisService::analyze(const json& req) const {
    if (!req.is_object()) throw ApiError(400, "bad_request", "request body must be a JSON object");

    std::size_t context = options_.default_context;
    if (req.contains("context_bars")) {
        const auto& v = req["context_bars"];
        if (!v.is_number_integer() || v.get<long long>() <= 0)
            throw ApiError(400, "bad_request", "context_bars must be a positive integer");
        context = v.get<std::size_t>();
    }
    std::string backend = req.value("backend", std::string("rule"));
    if (backend != "rule" && backend != "llm")
        throw ApiError(400, "bad_request", "backend must be 'rule' or 'llm'");

    std::string symbol = req.value("symbol", std::string());
    std::chrono::seconds tf{4 * 3600};
    if (req.contains("timeframe")) {
        try {
            tf = parse_timeframe(req["timeframe"].get<std::string>());
        } catch (const std::exception& e) {
            throw ApiError(400, "bad_request", std::string("timeframe: ") + e.what());
        }
    }

    std::vector<OhlcBar> owned;
    Bars source;
    std::size_t end = 0;  // exclusive
    if (req.contains("dataset")) {
        const auto name = req["dataset"].is_string() ? req["dataset"].get<std::string>() : std::string();
        const auto it = datasets_.find(name);
        if (it == datasets_.end())
            throw ApiError(404, "unknown_dataset", "unknown dataset '" + name + "'", {{"dataset", name}});
        const auto& series = it->second;
        source = series.view();
        end = series.size();
        if (req.contains("end_index")) {
            if (!req["end_index"].is_number_integer() || req["end_index"].get<long long>() < 0)
                throw ApiError(400, "bad_request", "end_index must be a non-negative integer");
            const auto idx = req["end_index"].get<std::size_t>();
            if (idx >= series.size())
                throw ApiError(422, "bad_window", "end_index " + std::to_string(idx) + " is past the last bar",
                               {{"bars", series.size()}});
            end = idx + 1;
        }
        if (symbol.empty()) symbol = series.symbol();
        if (!req.contains("timeframe")) tf = series.timeframe();
    } else if (req.contains("bars")) {
        owned = inline_bars(req["bars"], tf);
        try {
            for (std::size_t i = 0; i < owned.size(); ++i) {
                if (auto msg = check_bar(owned[i]); !msg.empty())
                    throw DataError("bar " + std::to_string(i) + ": " + msg);
            }
            BarSeries check(symbol.empty() ? "INLINE" : symbol, tf, owned);
        } catch (const DataError& e) {
            throw ApiError(422, "invalid_bars", e.what());
        }
        source = owned;
        end = owned.size();
    } else {
        throw ApiError(400, "bad_request", "request needs either 'bars' or 'dataset'");
    }
    if (symbol.empty()) symbol = "UNKNOWN";

    const std::size_t start = end > context ? end - context : 0;
    const Bars window = source.subspan(start, end - start);
    const std::size_t need = options_.agent.required_bars();
    if (window.size() < need)
        throw ApiError(422, "window_too_short",
                       "analysis window has " + std::to_string(window.size()) + " bars; at least " +
                           std::to_string(need) + " are required",
                       {{"bars", window.size()}, {"minimum", need}});

    json warnings = json::array();
    Analysis a;
    std::string backend_used = "rule";
    try {
        if (backend == "llm") {
            a = analyze_signals(window, options_.agent);
            bool decided = false;
            if (!options_.transport || !options_.templates) {
                warnings.push_back("llm backend unavailable (no endpoint/credential configured); used rule backend");
            } else {
                llm::LlmOptions lo;
                lo.max_retries = options_.llm_retries;
                lo.time_frame = format_timeframe(tf);
                lo.stock_name = symbol;
                lo.fallback_weights = options_.agent.weights;
                try {
                    auto outcome = llm::decide_llm(a.state, window, *options_.templates, *options_.transport, lo);
                    a.decision = std::move(outcome.decision);
                    for (auto& n : outcome.notes) warnings.push_back(n);
                    if (outcome.fell_back) warnings.push_back("llm replies were invalid; used rule backend");
                    else backend_used = "llm";
                    decided = true;
                } catch (const TransportError& e) {
                    warnings.push_back(std::string("llm backend failed: ") + e.what() + "; used rule backend");
                }
            }
            if (!decided) a.decision = decision::decide_rule_based(a.state, options_.agent.weights);
            a.risk = decision::risk_levels(window.back().close, a.decision.direction, options_.agent.rho,
                                           a.decision.risk_reward);
        } else {
            a = analyze_window(window, options_.agent);
        }
    } catch (const PreconditionError& e) {
        throw ApiError(422, "bad_window", e.what());
    }

    json matches = json::array();
    for (const auto& m : a.matches) matches.push_back(patterns::to_json(m));
    json pattern = patterns::to_json(a.pattern);
    pattern["matches"] = matches;

    return {{"symbol", symbol},
            {"timeframe", format_timeframe(tf)},
            {"backend", backend},
            {"backend_used", backend_used},
            {"window", {{"start_index", start}, {"end_index", end - 1}, {"bars", window.size()}}},
            {"decision", decision::to_json(a.decision)},
            {"risk", decision::to_json(a.risk)},
            {"signals", decision::to_json(a.state)},
            {"indicator", indicators::to_json(a.indicator)},
            {"pattern", pattern},
            {"trend", trend::to_json(a.channel)},
            {"chart", chart_payload(window, a)},
            {"warnings", warnings}};
}

void mount_routes(httplib::Server& server, const AnalysisService& service) {
    const auto send = [](httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    };
    server.Post("/analyze", [&service, send](const httplib::Request& req, httplib::Response& res) {
        try {
            json body;
            try {
                body = json::parse(req.body);
            } catch (const json::exception& e) {
                throw ApiError(400, "bad_request", "request body is not valid JSON", e.what());
            }
            send(res, 200, service.analyze(body));
        } catch (const ApiError& e) {
            send(res, e.status(), e.envelope());
        } catch (const std::exception& e) {
            send(res, 500, ApiError(500, "internal", e.what()).envelope());
        }
    });
    server.Get("/datasets", [&service, send](const httplib::Request&, httplib::Response& res) {
        send(res, 200, service.datasets());
    });
    server.Get("/health", [&service, send](const httplib::Request&, httplib::Response& res) {
        send(res, 200, service.health());
    });
}

} // namespace quantdesk::service
