#include "quantdesk/error.hpp"
#include "quantdesk/evaluation.hpp"
#include "quantdesk/llm.hpp"
#include "quantdesk/market_data.hpp"
#include "quantdesk/pipeline.hpp"
#include "quantdesk/service.hpp"
#include "quantdesk/synthetic.hpp"

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

namespace fs = std::filesystem;
using namespace quantdesk;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
}

std::string segments_csv(const std::vector<evaluation::SegmentRecord>& records) {
    std::string out = "asset,segment,start_index,method,abstained,direction,risk_reward,exit_reason,exit_bar,hits,"
                      "r_cc,r_max,r_min\n";
    char buf[512];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%s,%d,%s,%.6f,%s,%d,%d,%.6f,%.6f,%.6f\n", r.asset.c_str(),
                      r.segment, r.start_index, std::string(evaluation::to_string(r.method)).c_str(),
                      r.abstained ? 1 : 0,
                      r.abstained ? "HOLD" : std::string(decision::to_string(r.decision.direction)).c_str(),
                      r.decision.risk_reward, std::string(evaluation::to_string(r.outcome.exit_reason)).c_str(),
                      r.outcome.exit_bar, r.outcome.hits, r.outcome.r_cc, r.outcome.r_max, r.outcome.r_min);
        out += buf;
    }
    return out;
}

BarSeries load_series(const fs::path& csv, std::string symbol, const std::string& timeframe) {
    if (symbol.empty()) symbol = csv.stem().string();
    return load_csv(csv, symbol, parse_timeframe(timeframe));
}

// ---------------------------------------------------------------------------

struct BenchArgs {
    std::string manifest;
    std::uint64_t seed = 42;
    std::string methods = "all";
    std::string out = "results";
    bool cap = false;
    std::string tiebreak = "stop";
    unsigned threads = 0;
};

int run_bench(const BenchArgs& args) {
    evaluation::BenchmarkConfig cfg;
    cfg.seed = args.seed;
    try {
        cfg.methods = evaluation::parse_methods(args.methods);
        cfg.execution.tiebreak = evaluation::parse_tiebreak(args.tiebreak);
    } catch (const PreconditionError& e) {
        throw UsageError(e.what());
    }
    cfg.execution.cap_excursions = args.cap;
    cfg.threads = args.threads ? args.threads : std::max(1u, std::thread::hardware_concurrency());

    const auto manifest = load_manifest(args.manifest);
    const auto result = evaluation::run_benchmark(manifest, cfg);

    fs::create_directories(args.out);
    write_text(fs::path(args.out) / "summary.csv", evaluation::render_table_csv(result.summary));
    write_text(fs::path(args.out) / "summary.json", evaluation::to_json(result.summary).dump(2) + "\n");
    write_text(fs::path(args.out) / "segments.csv", segments_csv(result.records));
    std::cout << evaluation::render_table_text(result.summary);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
    std::string csv;
    std::string symbol;
    std::string timeframe = "4h";
    long at = -1;
    std::string backend = "rule";
    std::size_t context = 97;
    bool json_out = false;
};

service::ServiceOptions service_options(std::size_t context) {
    service::ServiceOptions opts;
    opts.default_context = context;
    opts.transport = service::transport_from_env();
    if (opts.transport) opts.templates = llm::PromptTemplates::load(llm::PromptTemplates::default_dir());
    return opts;
}

int run_analyze(const AnalyzeArgs& args) {
    auto series = load_series(args.csv, args.symbol, args.timeframe);
    const std::string name = series.symbol();
    if (args.at >= static_cast<long>(series.size())) throw UsageError("--at is past the last bar");
    json req{{"dataset", name}, {"backend", args.backend}};
    if (args.at >= 0) req["end_index"] = args.at;
    service::AnalysisService svc({std::move(series)}, service_options(args.context));
    json res;
    try {
        res = svc.analyze(req);
    } catch (const service::ApiError& e) {
        throw PreconditionError(e.what());
    }
    if (args.json_out) {
        std::cout << res.dump(2) << '\n';
        return kExitOk;
    }
    const auto& d = res["decision"];
    const auto& r = res["risk"];
    std::printf("%s %s bars %lld..%lld (%lld)\n", res["symbol"].get<std::string>().c_str(),
                res["timeframe"].get<std::string>().c_str(), res["window"]["start_index"].get<long long>(),
                res["window"]["end_index"].get<long long>(), res["window"]["bars"].get<long long>());
    std::printf("decision: %s  r=%.2f  horizon=%d bars  backend=%s\n", d["decision"].get<std::string>().c_str(),
                d["risk_reward_ratio"].get<double>(), d["forecast_horizon"].get<int>(),
                res["backend_used"].get<std::string>().c_str());
    std::printf("entry %.6g  stop %.6g  target %.6g\n", r["entry"].get<double>(), r["stop"].get<double>(),
                r["target"].get<double>());
    std::printf("trend: %s\n", res["trend"]["summary"].get<std::string>().c_str());
    std::printf("pattern: %s\n", res["pattern"]["structure"].get<std::string>().c_str());
    std::printf("justification: %s\n", d["justification"].get<std::string>().c_str());
    for (const auto& w : res["warnings"]) std::printf("warning: %s\n", w.get<std::string>().c_str());
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct CaseArgs {
    std::string csv;
    std::string symbol;
    std::string timeframe = "4h";
    std::size_t windows = 10;
    std::size_t offset = 5;
    std::size_t length = 100;
    std::string method = "agent";
    std::uint64_t seed = 42;
};

std::vector<decision::Direction> read_replay(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read replay file '" + path.string() + "'");
    std::vector<decision::Direction> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos || line[b] == '#') continue;
        const auto e = line.find_last_not_of(" \t\r");
        const auto d = decision::parse_direction(line.substr(b, e - b + 1));
        if (!d) throw DataError("replay file: '" + line + "' is not LONG or SHORT");
        out.push_back(*d);
    }
    return out;
}

int run_case_study(const CaseArgs& args) {
    const auto series = load_series(args.csv, args.symbol, args.timeframe);
    const Bars all = series.view();
    evaluation::DecisionFn method;
    if (args.method == "agent") {
        method = [](Bars visible, std::size_t) { return analyze_window(visible).decision; };
    } else if (args.method == "linreg") {
        method = [](Bars visible, std::size_t) {
            return evaluation::baseline_linreg(indicators::closes(visible));
        };
    } else if (args.method == "random") {
        const std::string name = series.symbol();
        const auto seed = args.seed;
        method = [name, seed](Bars, std::size_t i) {
            Rng rng(derive_seed(seed, name, i));
            return evaluation::baseline_random(rng);
        };
    } else if (args.method == "oracle") {
        // Looks ahead at the scored bars; a harness check, not a strategy.
        const std::size_t offset = args.offset, length = args.length;
        method = [all, offset, length](Bars visible, std::size_t i) {
            const double entry = visible.back().close;
            int up = 0;
            for (const auto& b : all.subspan(i * offset + length, decision::kForecastHorizon)) up += b.close > entry;
            decision::TradeDecision d;
            d.direction = up >= 2 ? decision::Direction::Long : decision::Direction::Short;
            return d;
        };
    } else if (args.method.rfind("replay:", 0) == 0) {
        const auto seq = read_replay(args.method.substr(7));
        if (seq.size() < args.windows)
            throw DataError("replay file has " + std::to_string(seq.size()) + " decisions for " +
                            std::to_string(args.windows) + " windows");
        method = [seq](Bars, std::size_t i) {
            decision::TradeDecision d;
            d.direction = seq[i];
            d.justification = "replayed";
            return d;
        };
    } else {
        throw UsageError("unknown case-study method '" + args.method + "' (agent|linreg|random|oracle|replay:FILE)");
    }

    const auto study = evaluation::rolling_case_study(all, args.length, args.windows, args.offset, method);
    std::printf("%-7s %-6s %-6s %-9s %-5s %-5s %s\n", "window", "start", "end", "decision", "r", "hits", "correct");
    for (std::size_t i = 0; i < study.windows.size(); ++i) {
        const auto& w = study.windows[i];
        std::printf("%-7zu %-6zu %-6zu %-9s %-5.2f %-5d %s\n", i + 1, w.start, w.start + args.length - 1,
                    std::string(decision::to_string(w.decision.direction)).c_str(), w.decision.risk_reward, w.hits,
                    w.correct ? "yes" : "no");
    }
    std::printf("Correct forecasts: %s\n", study.summary().c_str());
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct ServeArgs {
    std::string manifest;
    std::vector<std::string> csv;
    std::string timeframe = "4h";
    std::string host;
    int port = 0;
    std::size_t context = 97;
};

int run_serve(const ServeArgs& args) {
    std::vector<BarSeries> datasets;
    if (!args.manifest.empty()) {
        for (const auto& a : load_manifest(args.manifest).assets) {
            try {
                datasets.push_back(load_csv(a.csv, a.symbol, a.timeframe));
            } catch (const Error& e) {
                std::cerr << "skipping " << a.symbol << ": " << e.what() << '\n';
            }
        }
    }
    for (const auto& c : args.csv) datasets.push_back(load_series(c, "", args.timeframe));

    std::string host = args.host;
    int port = args.port;
    if (const char* bind = std::getenv("QUANTDESK_BIND"); bind && *bind) {
        const std::string b = bind;
        const auto colon = b.rfind(':');
        if (host.empty()) host = b.substr(0, colon);
        if (port == 0 && colon != std::string::npos) port = std::atoi(b.c_str() + colon + 1);
    }
    if (host.empty()) host = "127.0.0.1";
    if (port == 0) port = 8080;

    service::AnalysisService svc(std::move(datasets), service_options(args.context));
    httplib::Server server;
    service::mount_routes(server, svc);
    std::cerr << "listening on http://" << host << ":" << port << '\n';
    if (!server.listen(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantdesk: technical-analysis trading agent and benchmark harness"};
    app.require_subcommand(1);

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "Run the segment benchmark over a manifest");
    bench_cmd->add_option("--manifest", bench.manifest, "Benchmark manifest (JSON)")->required();
    bench_cmd->add_option("--seed", bench.seed, "Global seed");
    bench_cmd->add_option("--methods", bench.methods, "random,linreg,tree,agent or all");
    bench_cmd->add_option("--out", bench.out, "Output directory");
    bench_cmd->add_flag("--cap-excursions", bench.cap, "Cap R_max/R_min at the target/stop distances");
    bench_cmd->add_option("--tiebreak", bench.tiebreak, "stop|target|open");
    bench_cmd->add_option("--threads", bench.threads, "Worker threads (0 = hardware concurrency)");

    AnalyzeArgs analyze;
    auto* analyze_cmd = app.add_subcommand("analyze", "Analyze one window of a CSV series");
    analyze_cmd->add_option("--csv", analyze.csv, "OHLC CSV file")->required();
    analyze_cmd->add_option("--symbol", analyze.symbol, "Symbol name (default: file stem)");
    analyze_cmd->add_option("--timeframe", analyze.timeframe, "Bar timeframe, e.g. 4h");
    analyze_cmd->add_option("--at", analyze.at, "Index of the last visible bar (default: last bar)");
    analyze_cmd->add_option("--backend", analyze.backend, "rule|llm")->check(CLI::IsMember({"rule", "llm"}));
    analyze_cmd->add_option("--context", analyze.context, "Visible bars");
    analyze_cmd->add_flag("--json", analyze.json_out, "Print the full response document");

    CaseArgs cs;
    auto* case_cmd = app.add_subcommand("case-study", "Rolling-window forecast study");
    case_cmd->add_option("--csv", cs.csv, "OHLC CSV file")->required();
    case_cmd->add_option("--symbol", cs.symbol, "Symbol name (default: file stem)");
    case_cmd->add_option("--timeframe", cs.timeframe, "Bar timeframe");
    case_cmd->add_option("--windows", cs.windows, "Number of windows");
    case_cmd->add_option("--offset", cs.offset, "Bars between window starts");
    case_cmd->add_option("--length", cs.length, "Visible bars per window");
    case_cmd->add_option("--method", cs.method, "agent|linreg|random|oracle|replay:FILE");
    case_cmd->add_option("--seed", cs.seed, "Seed for the random method");

    ServeArgs serve;
    auto* serve_cmd = app.add_subcommand("serve", "Serve the analysis HTTP API");
    serve_cmd->add_option("--manifest", serve.manifest, "Load datasets from a manifest");
    serve_cmd->add_option("--csv", serve.csv, "Load a CSV dataset (repeatable)");
    serve_cmd->add_option("--timeframe", serve.timeframe, "Timeframe for --csv datasets");
    serve_cmd->add_option("--host", serve.host, "Bind address (default 127.0.0.1 or QUANTDESK_BIND)");
    serve_cmd->add_option("--port", serve.port, "Port (default 8080)");
    serve_cmd->add_option("--context", serve.context, "Default visible bars");

    std::string synth_out = "data/synthetic";
    std::size_t synth_bars = 5000;
    auto* synth_cmd = app.add_subcommand("synth", "Write the synthetic benchmark bundle");
    synth_cmd->add_option("--out", synth_out, "Output directory");
    synth_cmd->add_option("--bars", synth_bars, "Bars per asset");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*bench_cmd) return run_bench(bench);
        if (*analyze_cmd) return run_analyze(analyze);
        if (*case_cmd) return run_case_study(cs);
        if (*serve_cmd) return run_serve(serve);
        if (*synth_cmd) {
            auto assets = synthetic::bundled_assets();
            for (auto& a : assets) a.bars = synth_bars;
            std::cout << synthetic::write_bundle(synth_out, assets).string() << '\n';
            return kExitOk;
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
