#include "quantdesk/llm.hpp"

#include "quantdesk/error.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#ifndef QUANTDESK_ASSET_DIR
#define QUANTDESK_ASSET_DIR "assets"
#endif

namespace quantdesk::llm {

using nlohmann::json;

TokenBucket::TokenBucket(double tokens_per_second, double burst)
    : rate_(tokens_per_second), capacity_(std::max(1.0, burst)), tokens_(capacity_),
      last_(std::chrono::steady_clock::now()) {
    if (!(tokens_per_second > 0.0)) throw PreconditionError("token rate must be > 0");
}

void TokenBucket::refill_locked() {
    const auto now = std::chrono::steady_clock::now();
    const double elapsed = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    tokens_ = std::min(capacity_, tokens_ + elapsed * rate_);
}

bool TokenBucket::try_acquire() {
    std::lock_guard lock(mutex_);
    refill_locked();
    if (tokens_ < 1.0) return false;
    tokens_ -= 1.0;
    return true;
}

void TokenBucket::acquire() {
    while (true) {
        double wait_seconds = 0.0;
        {
            std::lock_guard lock(mutex_);
            refill_locked();
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            wait_seconds = (1.0 - tokens_) / rate_;
        }
        std::this_thread::sleep_for(std::chrono::duration<double>(wait_seconds));
    }
}

std::optional<EndpointConfig> EndpointConfig::from_env() {
    const char* url = std::getenv("QUANTDESK_LLM_ENDPOINT");
    const char* key = std::getenv("QUANTDESK_LLM_API_KEY");
    if (!url || !*url || !key || !*key) return std::nullopt;
    EndpointConfig cfg;
    cfg.url = url;
    cfg.api_key = key;
    const char* model = std::getenv("QUANTDESK_LLM_MODEL");
    cfg.model = model && *model ? model : "gpt-4o";
    return cfg;
}

HttpChatTransport::HttpChatTransport(EndpointConfig config)
    : config_(std::move(config)), bucket_(config_.requests_per_second, 1.0) {
    const auto scheme_end = config_.url.find("://");
    if (scheme_end == std::string::npos) throw PreconditionError("endpoint URL needs a scheme: " + config_.url);
    const auto path_start = config_.url.find('/', scheme_end + 3);
    origin_ = config_.url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : config_.url.substr(path_start);
}

std::string HttpChatTransport::request_body(std::span<const ChatMessage> messages) const {
    json msgs = json::array();
    for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    return json{{"model", config_.model}, {"messages", msgs}, {"temperature", 0}}.dump();
}

std::string HttpChatTransport::complete(std::span<const ChatMessage> messages) {
    bucket_.acquire();
    httplib::Client client(origin_);
    const auto t = static_cast<time_t>(config_.timeout.count());
    client.set_connection_timeout(t, 0);
    client.set_read_timeout(t, 0);
    client.set_write_timeout(t, 0);
    httplib::Headers headers{{"Authorization", "Bearer " + config_.api_key}};
    auto res = client.Post(path_, headers, request_body(messages), "application/json");
    if (!res)
        throw TransportError("chat endpoint " + config_.url + " unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw TransportError("chat endpoint " + config_.url + " returned HTTP " + std::to_string(res->status) +
                             ": " + res->body.substr(0, 200));
    try {
        const auto doc = json::parse(res->body);
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw TransportError("chat endpoint returned an unexpected body: " + std::string(e.what()));
    }
}

namespace {

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw DataError("cannot read prompt template '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::optional<double> as_ratio(const json& v) {
    if (v.is_number()) return v.get<double>();
    if (!v.is_string()) return std::nullopt;
    const auto s = v.get<std::string>();
    char* end = nullptr;
    const double d = std::strtod(s.c_str(), &end);
    if (end == s.c_str()) return std::nullopt;
    while (*end == ' ') ++end;
    if (*end != '\0') return std::nullopt;
    return d;
}

} // namespace

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
    PromptTemplates t;
    t.indicator = read_file(dir / "indicator.txt");
    t.pattern = read_file(dir / "pattern.txt");
    t.trend = read_file(dir / "trend.txt");
    t.decision = read_file(dir / "decision.txt");
    t.pattern_library = read_file(dir / "pattern_library.txt");
    return t;
}

std::filesystem::path PromptTemplates::default_dir() {
    if (const char* env = std::getenv("QUANTDESK_ASSETS"); env && *env)
        return std::filesystem::path(env) / "prompts";
    return std::filesystem::path(QUANTDESK_ASSET_DIR) / "prompts";
}

std::string render(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const auto open = tmpl.find("{{", pos);
        if (open == std::string_view::npos) break;
        const auto close = tmpl.find("}}", open + 2);
        if (close == std::string_view::npos) break;
        out.append(tmpl.substr(pos, open - pos));
        const std::string name(tmpl.substr(open + 2, close - open - 2));
        if (auto it = vars.find(name); it != vars.end()) out += it->second;
        else out.append(tmpl.substr(open, close + 2 - open));
        pos = close + 2;
    }
    out.append(tmpl.substr(pos));
    return out;
}

std::string kline_text(Bars bars) {
    std::string out = "timestamp,open,high,low,close\n";
    char buf[160];
    for (const auto& b : bars) {
        std::snprintf(buf, sizeof buf, "%s,%.6g,%.6g,%.6g,%.6g\n", format_timestamp(b.timestamp).c_str(),
                      b.open, b.high, b.low, b.close);
        out += buf;
    }
    return out;
}

ParsedReply parse_reply(std::string_view reply) {
    ParsedReply out;
    const auto open = reply.find('{');
    const auto close = reply.rfind('}');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
        out.error = "reply contains no JSON object";
        return out;
    }
    json doc;
    try {
        doc = json::parse(reply.substr(open, close - open + 1));
    } catch (const json::exception& e) {
        out.error = std::string("reply JSON does not parse: ") + e.what();
        return out;
    }
    if (!doc.is_object() || !doc.contains("decision") || !doc["decision"].is_string()) {
        out.error = "reply has no string 'decision' field";
        return out;
    }
    const auto raw_direction = doc["decision"].get<std::string>();
    const auto direction = decision::parse_direction(raw_direction);
    if (!direction) {
        out.error = "decision '" + raw_direction + "' is not LONG or SHORT";
        return out;
    }
    if (!doc.contains("risk_reward_ratio")) {
        out.error = "reply has no 'risk_reward_ratio'";
        return out;
    }
    const auto ratio = as_ratio(doc["risk_reward_ratio"]);
    if (!ratio || !std::isfinite(*ratio)) {
        out.error = "risk_reward_ratio is not a number";
        return out;
    }

    decision::TradeDecision d;
    d.direction = *direction;
    d.forecast_horizon = decision::kForecastHorizon;
    d.risk_reward = std::clamp(*ratio, decision::kMinRiskReward, decision::kMaxRiskReward);
    // Map r back onto the rule policy's confidence scale.
    d.confidence = (d.risk_reward - decision::kMinRiskReward) / 0.6;
    d.justification = doc.contains("justification") && doc["justification"].is_string()
                          ? doc["justification"].get<std::string>()
                          : std::string();
    if (d.risk_reward != *ratio) {
        char buf[128];
        std::snprintf(buf, sizeof buf, " [risk_reward_ratio %g clamped to %.1f]", *ratio, d.risk_reward);
        d.justification += buf;
    }
    out.decision = std::move(d);
    return out;
}

LlmOutcome decide_llm(const decision::SignalState& state, Bars visible,
                      const PromptTemplates& templates, ChatTransport& transport,
                      const LlmOptions& options) {
    const std::map<std::string, std::string> vars{
        {"time_frame", options.time_frame},
        {"stock_name", options.stock_name},
        {"kline_data", kline_text(visible)},
        {"pattern_library", templates.pattern_library},
        {"indicator_report", indicators::narrative(state.indicator)},
        {"pattern_report", state.pattern.structure + "\n" + state.pattern.trend + "\n" + state.pattern.symmetry},
        {"trend_report", trend::describe(state.trend)},
    };
    std::vector<ChatMessage> messages{{"user", render(templates.decision, vars)}};

    LlmOutcome outcome;
    const int attempts = std::max(1, options.max_retries + 1);
    for (int i = 0; i < attempts; ++i) {
        ++outcome.attempts;
        const std::string reply = transport.complete(messages);
        auto parsed = parse_reply(reply);
        if (parsed.decision) {
            outcome.decision = std::move(*parsed.decision);
            return outcome;
        }
        outcome.notes.push_back("attempt " + std::to_string(i + 1) + ": " + parsed.error);
        messages.push_back({"assistant", reply});
        messages.push_back({"user", "Invalid reply (" + parsed.error +
                                        "). Answer again with only the JSON object; decision must be "
                                        "LONG or SHORT and risk_reward_ratio between 1.2 and 1.8."});
    }

    outcome.fell_back = true;
    outcome.decision = decision::decide_rule_based(state, options.fallback_weights);
    outcome.decision.justification = "[fallback: no valid LLM decision after " +
                                     std::to_string(outcome.attempts) + " attempts] " +
                                     outcome.decision.justification;
    return outcome;
}

} // namespace quantdesk::llm
