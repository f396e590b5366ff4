#pragma once

#include "quantdesk/llm.hpp"
#include "quantdesk/market_data.hpp"
#include "quantdesk/pipeline.hpp"

#include <json.hpp>

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

namespace httplib {
class Server;
}

namespace quantdesk::service {

/// Request failure carried to the HTTP layer as a {code, message, detail} envelope.
class ApiError : public std::runtime_error {
public:
    ApiError(int status, std::string code, const std::string& message, nlohmann::json detail = nullptr)
        : std::runtime_error(message), status_(status), code_(std::move(code)), detail_(std::move(detail)) {}

    int status() const noexcept { return status_; }
    const std::string& code() const noexcept { return code_; }
    const nlohmann::json& detail() const noexcept { return detail_; }
    nlohmann::json envelope() const;

private:
    int status_;
    std::string code_;
    nlohmann::json detail_;
};

struct ServiceOptions {
    AgentConfig agent{};
    std::size_t default_context = 97;
    /// Shared chat backend for backend=llm; nullptr means the LLM backend is unavailable.
    std::shared_ptr<llm::ChatTransport> transport;
    std::optional<llm::PromptTemplates> templates;
    int llm_retries = 2;
};

/// Stateless per-request analysis over an immutable set of loaded datasets.
/// Safe to call concurrently.
class AnalysisService {
public:
    AnalysisService(std::vector<BarSeries> datasets, ServiceOptions options);

    /// Body of POST /analyze. Throws ApiError.
    nlohmann::json analyze(const nlohmann::json& request) const;
    /// Body of GET /datasets.
    nlohmann::json datasets() const;
    /// Body of GET /health.
    nlohmann::json health() const;

    const ServiceOptions& options() const noexcept { return options_; }

private:
    std::map<std::string, BarSeries> datasets_;
    ServiceOptions options_;
};

/// Chart geometry for a window. x-coordinates are indices into `window`.
nlohmann::json chart_payload(Bars window, const Analysis& analysis);

/// Transport from QUANTDESK_LLM_* environment variables, or nullptr when unset.
std::shared_ptr<llm::ChatTransport> transport_from_env();

/// Registers POST /analyze, GET /datasets and GET /health.
void mount_routes(httplib::Server& server, const AnalysisService& service);

} // namespace quantdesk::service
