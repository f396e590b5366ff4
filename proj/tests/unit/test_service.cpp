#include <doctest.h>

#include "fixtures.hpp"
#include "quantdesk/error.hpp"
#include "quantdesk/service.hpp"

#include <httplib.h>

#include <thread>

using namespace quantdesk;
using namespace quantdesk::service;
using json = nlohmann::json;

namespace {

json bars_json(const std::vector<OhlcBar>& bars) {
    json arr = json::array();
    for (const auto& b : bars)
        arr.push_back({{"timestamp", b.timestamp}, {"open", b.open}, {"high", b.high}, {"low", b.low}, {"close", b.close}});
    return arr;
}

std::vector<OhlcBar> rising(std::size_t n) {
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = 100.0 * (1.0 + 0.003 * static_cast<double>(i));
    return fixtures::bars_from_closes(c, 0.05);
}

std::vector<OhlcBar> walk(std::size_t n) {
    Rng rng(31);
    return fixtures::random_bars(rng, n);
}

AnalysisService make_service(std::shared_ptr<llm::ChatTransport> transport = nullptr) {
    std::vector<BarSeries> data;
    data.emplace_back("RW", std::chrono::hours(4), walk(300));
    ServiceOptions opt;
    opt.transport = std::move(transport);
    if (opt.transport) opt.templates = llm::PromptTemplates::load(llm::PromptTemplates::default_dir());
    return AnalysisService(std::move(data), opt);
}

ApiError api_error(const AnalysisService& svc, const json& req) {
    try {
        svc.analyze(req);
    } catch (const ApiError& e) {
        return e;
    }
    FAIL("expected an ApiError");
    return ApiError(0, "", "");
}

class FixedTransport : public llm::ChatTransport {
public:
    explicit FixedTransport(std::string reply, bool fail = false) : reply_(std::move(reply)), fail_(fail) {}
    std::string complete(std::span<const llm::ChatMessage>) override {
        if (fail_) throw TransportError("connection refused");
        return reply_;
    }

private:
    std::string reply_;
    bool fail_;
};

} // namespace

TEST_CASE("analyze: rising inline window is LONG with bullish flags") {
    const auto svc = make_service();
    const auto res = svc.analyze({{"bars", bars_json(rising(97))}, {"symbol", "UP"}});
    CHECK(res["decision"]["decision"] == "LONG");
    CHECK(res["indicator"]["rsi"]["overbought"] == true);
    CHECK(res["indicator"]["roc"]["positive"] == true);
    CHECK(res["backend_used"] == "rule");
    CHECK(res["window"]["bars"] == 97);
    CHECK(res["chart"]["candles"].size() == 97);
    CHECK(res["warnings"].empty());
    const double r = res["decision"]["risk_reward_ratio"];
    CHECK((r >= 1.2 && r <= 1.8));
}

TEST_CASE("analyze: validation errors") {
    const auto svc = make_service();
    const auto short_req = api_error(svc, {{"bars", bars_json(rising(10))}});
    CHECK(short_req.status() == 422);
    CHECK(short_req.code() == "window_too_short");
    CHECK(std::string(short_req.what()).find("at least 40") != std::string::npos);
    CHECK(short_req.detail()["minimum"] == 40);

    CHECK(api_error(svc, {{"dataset", "NOPE"}}).status() == 404);
    CHECK(api_error(svc, {{"dataset", "RW"}, {"end_index", 300}}).code() == "bad_window");
    CHECK(api_error(svc, {{"dataset", "RW"}, {"end_index", -1}}).status() == 400);
    CHECK(api_error(svc, json::array()).status() == 400);
    CHECK(api_error(svc, {{"bars", bars_json(rising(50))}, {"backend", "magic"}}).status() == 400);
    CHECK(api_error(svc, {{"bars", bars_json(rising(50))}, {"context_bars", 0}}).status() == 400);

    auto broken = rising(50);
    broken[7].high = broken[7].low - 1.0;
    const auto bad = api_error(svc, {{"bars", bars_json(broken)}});
    CHECK(bad.code() == "invalid_bars");
    CHECK(std::string(bad.what()).find("bar 7") != std::string::npos);
    const auto env = bad.envelope();
    CHECK(env.contains("code"));
    CHECK(env.contains("message"));
    CHECK(env.contains("detail"));
}

TEST_CASE("analyze: dataset window ignores later bars") {
    const auto svc = make_service();
    std::vector<BarSeries> cut;
    auto bars = walk(300);
    bars.resize(201);
    cut.emplace_back("RW", std::chrono::hours(4), bars);
    const AnalysisService truncated(std::move(cut), {});
    const json req{{"dataset", "RW"}, {"end_index", 200}};
    const auto a = svc.analyze(req);
    CHECK(a == truncated.analyze(req));
    CHECK(a == svc.analyze(req));
    CHECK(a["window"]["start_index"] == 104);
    CHECK(a["window"]["end_index"] == 200);
    CHECK(a["risk"]["entry"] == bars[200].close);
}

TEST_CASE("analyze: llm backend fallbacks") {
    const json req{{"dataset", "RW"}, {"backend", "llm"}};
    const auto none = make_service().analyze(req);
    CHECK(none["backend_used"] == "rule");
    REQUIRE(none["warnings"].size() == 1);
    CHECK(none["warnings"][0].get<std::string>().find("unavailable") != std::string::npos);

    const auto ok = make_service(std::make_shared<FixedTransport>(R"({"decision":"SHORT","risk_reward_ratio":1.7})"))
                        .analyze(req);
    CHECK(ok["backend_used"] == "llm");
    CHECK(ok["decision"]["decision"] == "SHORT");
    CHECK(ok["risk"]["stop"].get<double>() > ok["risk"]["entry"].get<double>());

    const auto down = make_service(std::make_shared<FixedTransport>("", true)).analyze(req);
    CHECK(down["backend_used"] == "rule");
    CHECK(down["warnings"][0].get<std::string>().find("connection refused") != std::string::npos);

    const auto hold = make_service(std::make_shared<FixedTransport>(R"({"decision":"HOLD"})")).analyze(req);
    CHECK(hold["backend_used"] == "rule");
    CHECK(hold["warnings"].size() == 4);  // three rejected attempts and the fallback note
}

TEST_CASE("chart payload geometry") {
    const auto svc = make_service();
    const auto res = svc.analyze({{"dataset", "RW"}});
    const auto& chart = res["chart"];
    REQUIRE(chart["lines"].size() == 2);
    const auto& support = chart["lines"][0];
    CHECK(support["role"] == "support");
    CHECK(support["color"] == "blue");
    const double x1 = support["x1"];
    CHECK(x1 == 96.0);
    CHECK(support["y1"].get<double>() == doctest::Approx(res["trend"]["support"]["end"]["y"].get<double>()));
    REQUIRE(chart["bands"].size() == 2);
    CHECK(chart["bands"][0]["role"] == "stop");
    CHECK(chart["bands"][1]["color"] == "green");
}

TEST_CASE("http routes") {
    const auto svc = make_service();
    httplib::Server server;
    mount_routes(server, svc);
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    httplib::Client client("127.0.0.1", port);

    auto health = client.Get("/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    CHECK(json::parse(health->body)["status"] == "ok");

    auto ds = client.Get("/datasets");
    REQUIRE(ds);
    CHECK(json::parse(ds->body)["datasets"][0]["name"] == "RW");

    auto ok = client.Post("/analyze", json{{"bars", bars_json(rising(97))}}.dump(), "application/json");
    REQUIRE(ok);
    CHECK(ok->status == 200);
    CHECK(json::parse(ok->body)["decision"]["decision"] == "LONG");

    auto small = client.Post("/analyze", json{{"bars", bars_json(rising(10))}}.dump(), "application/json");
    REQUIRE(small);
    CHECK(small->status == 422);
    CHECK(json::parse(small->body)["code"] == "window_too_short");

    auto missing = client.Post("/analyze", R"({"dataset":"BTC"})", "application/json");
    REQUIRE(missing);
    CHECK(missing->status == 404);

    auto garbage = client.Post("/analyze", "{not json", "application/json");
    REQUIRE(garbage);
    CHECK(garbage->status == 400);
    CHECK(json::parse(garbage->body)["code"] == "bad_request");

    server.stop();
    th.join();
}
