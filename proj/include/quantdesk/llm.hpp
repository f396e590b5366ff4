#pragma once

#include "quantdesk/decision.hpp"

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace quantdesk::llm {

struct ChatMessage {
    std::string role;  // "system" | "user" | "assistant"
    std::string content;
};

/// A chat-completion backend. Implementations throw TransportError on failure.
class ChatTransport {
public:
    virtual ~ChatTransport() = default;
    virtual std::string complete(std::span<const ChatMessage> messages) = 0;
};

/// Thread-safe token bucket limiting outbound request rate.
class TokenBucket {
public:
    TokenBucket(double tokens_per_second, double burst);

    /// Blocks until a token is available.
    void acquire();
    bool try_acquire();

private:
    void refill_locked();

    double rate_;
    double capacity_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mutex_;
};

struct EndpointConfig {
    std::string url;  // full chat-completions URL, http:// or https://
    std::string model;
    std::string api_key;
    std::chrono::seconds timeout{60};
    double requests_per_second = 2.0;

    /// QUANTDESK_LLM_ENDPOINT, QUANTDESK_LLM_MODEL, QUANTDESK_LLM_API_KEY.
    /// nullopt unless both the endpoint and the credential are set.
    static std::optional<EndpointConfig> from_env();
};

/// OpenAI-compatible chat-completions client over HTTP(S).
class HttpChatTransport final : public ChatTransport {
public:
    explicit HttpChatTransport(EndpointConfig config);
    std::string complete(std::span<const ChatMessage> messages) override;

    /// Request body sent for `messages` (exposed for wire-format tests).
    std::string request_body(std::span<const ChatMessage> messages) const;

private:
    EndpointConfig config_;
    std::string origin_;  // scheme://host[:port]
    std::string path_;
    TokenBucket bucket_;
};

/// Prompt texts with {{placeholder}} variables.
struct PromptTemplates {
    std::string indicator;
    std::string pattern;
    std::string trend;
    std::string decision;
    std::string pattern_library;

    /// Reads indicator.txt, pattern.txt, trend.txt, decision.txt and
    /// pattern_library.txt from `dir`.
    static PromptTemplates load(const std::filesystem::path& dir);
    /// $QUANTDESK_ASSETS/prompts when set, else the source tree's assets/prompts.
    static std::filesystem::path default_dir();
};

/// Replaces every {{name}} with vars[name]; unknown placeholders are left verbatim.
std::string render(std::string_view tmpl, const std::map<std::string, std::string>& vars);

/// Compact "timestamp,open,high,low,close" listing for {{kline_data}}.
std::string kline_text(Bars bars);

/// Result of parsing one model reply.
struct ParsedReply {
    std::optional<decision::TradeDecision> decision;
    std::string error;  // why the reply was rejected, when decision is empty
};

/// Parses {forecast_horizon, decision, justification, risk_reward_ratio} from a reply.
/// r may be a number or a string; out-of-range r is clamped and the clamp noted.
ParsedReply parse_reply(std::string_view reply);

struct LlmOptions {
    int max_retries = 2;
    std::string time_frame = "4h";
    std::string stock_name = "UNKNOWN";
    decision::Weights fallback_weights{};
};

struct LlmOutcome {
    decision::TradeDecision decision;
    bool fell_back = false;
    int attempts = 0;
    std::vector<std::string> notes;
};

/// Renders the decision prompt with the three reports, asks the model, validates
/// the answer, retries on malformed output and finally falls back to the rule
/// policy. Transport failures propagate as TransportError.
LlmOutcome decide_llm(const decision::SignalState& state, Bars visible,
                      const PromptTemplates& templates, ChatTransport& transport,
                      const LlmOptions& options = {});

} // namespace quantdesk::llm
