// panorama: simulate, verify, serve, replay.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "panorama/checker.hpp"
#include "panorama/executors.hpp"
#include "panorama/server.hpp"
#include "panorama/simulator.hpp"

namespace fs = std::filesystem;
using namespace panorama;

namespace {

constexpr int kOk = 0;
constexpr int kViolations = 1;
constexpr int kUsage = 2;

nlohmann::json read_json_file(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot open " + p.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, p.string() + ": " + e.what());
    }
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw Error(ErrorCode::ConfigInvalid, "cannot write " + p.string());
    return out;
}

bool is_grid(const nlohmann::json& j) {
    for (const char* axis : {"lenses", "policies", "behaviors", "explore_ranges", "viewport_sizes", "seeds", "ks"})
        if (j.contains(axis)) return true;
    return false;
}

struct SimulateArgs {
    std::string config, spec, out = "results", lens, policy, behavior;
    std::optional<std::size_t> k;
    std::optional<std::uint64_t> seed;
    std::size_t threads = 0;
};

int simulate(const SimulateArgs& a, bool verbose) {
    nlohmann::json j = a.config.empty() ? nlohmann::json::object() : read_json_file(a.config);
    const fs::path base_dir = a.config.empty() ? fs::current_path() : fs::path(a.config).parent_path();
    if (!a.spec.empty()) j["spec_path"] = fs::absolute(a.spec).string();
    if (!a.lens.empty()) j["lens"] = a.lens;
    if (a.k) j["k"] = *a.k;
    if (!a.policy.empty()) j["policy"] = a.policy;
    if (!a.behavior.empty()) j["behavior"] = a.behavior;
    if (a.seed) j["seed"] = *a.seed;
    if (a.threads) j["threads"] = a.threads;

    fs::create_directories(a.out);
    const fs::path out(a.out);
    if (is_grid(j)) {
        auto grid = GridSpec::from_json(j, base_dir);
        auto rows = run_grid(grid);
        auto results = open_out(out / "results.csv");
        write_results_csv(results, rows);
        auto summary = open_out(out / "summary.csv");
        write_summary_csv(summary, summarize(rows));
        if (verbose) std::cerr << rows.size() << " cells\n";
        std::cout << (out / "results.csv").string() << '\n';
        return kOk;
    }
    auto config = ExperimentConfig::from_json(j, base_dir);
    auto run = run_experiment(config);
    auto results = open_out(out / "results.csv");
    write_results_csv(results, {GridRow{config, run.metrics.invisibility_ms, run.metrics.staleness_ms}});
    auto trace = open_out(out / "trace.jsonl");
    run.trace.write_jsonl(trace);
    auto intervals = open_out(out / "intervals.csv");
    run.metrics.write_csv(intervals);
    auto m = open_out(out / "metrics.json");
    m << run.metrics.to_json().dump(2) << '\n';
    std::cout << "invisibility_ms=" << run.metrics.invisibility_ms << " staleness_ms=" << run.metrics.staleness_ms
              << '\n';
    return kOk;
}

struct VerifyArgs {
    bool theorems = false;
    std::size_t seeds = 100;
    std::uint64_t seed = 0;
    std::string counterexample;
    std::string trace;
};

int verify_counterexample(const std::string& name) {
    if (name != "theorem3") throw Error(ErrorCode::ConfigInvalid, "unknown counterexample '" + name + "'");
    struct Expectation {
        Lens lens;
        std::size_t monotonicity, visibility;
    };
    bool as_expected = true;
    for (const auto& x : {Expectation{{LensKind::LCNB, 0}, 1, 0}, Expectation{{LensKind::LCMB, 0}, 0, 1},
                          Expectation{{LensKind::GCNB, 0}, 0, 0}}) {
        auto trace = two_read_counterexample(x.lens);
        auto m = check_monotonicity(trace);
        auto v = check_visibility(trace);
        for (const auto& viol : m) std::cout << nlohmann::json{{"lens", x.lens.name()}, {"violation", viol.to_json()}}.dump() << '\n';
        for (const auto& viol : v) std::cout << nlohmann::json{{"lens", x.lens.name()}, {"violation", viol.to_json()}}.dump() << '\n';
        const bool ok = m.size() == x.monotonicity && v.size() == x.visibility;
        std::cerr << x.lens.name() << ": " << m.size() << " monotonicity, " << v.size() << " visibility violation(s)"
                  << (ok ? " (expected)" : " (UNEXPECTED)") << '\n';
        as_expected = as_expected && ok;
    }
    return as_expected ? kOk : kViolations;
}

int verify(const VerifyArgs& a, bool verbose) {
    if (!a.counterexample.empty()) return verify_counterexample(a.counterexample);
    std::size_t found = 0;
    if (!a.trace.empty()) {
        std::ifstream in(a.trace);
        if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot open " + a.trace);
        auto trace = Trace::read_jsonl(in);
        for (const auto& v : check_properties(trace)) {
            std::cout << v.to_json().dump() << '\n';
            ++found;
        }
        std::cerr << trace.reads.size() << " reads checked, " << found << " violation(s)\n";
        return found ? kViolations : kOk;
    }
    if (!a.theorems) throw Error(ErrorCode::ConfigInvalid, "verify needs --theorems, --trace or --counterexample");
    std::size_t reads = 0;
    for (std::uint64_t s = a.seed; s < a.seed + a.seeds; ++s) {
        auto workload = random_workload(s);
        const std::size_t k = s % (workload.viewport_size + 1);
        auto verdict = verify_workload(workload, k);
        reads += verdict.reads;
        for (const auto* list : {&verdict.properties, &verdict.orderings})
            for (const auto& v : *list) {
                std::cout << nlohmann::json{{"seed", s}, {"violation", v.to_json()}}.dump() << '\n';
                ++found;
            }
        if (verbose) std::cerr << "seed " << s << (verdict.ok() ? " ok\n" : " FAILED\n");
    }
    std::cerr << a.seeds << " workloads, " << reads << " reads checked, " << found << " violation(s)\n";
    return found ? kViolations : kOk;
}

HttpServer* g_server = nullptr;

int serve(const std::string& host, int port, const std::string& spec, const std::string& lens, std::size_t k,
          double time_scale) {
    SessionOptions opts;
    opts.lens = Lens::parse(lens, k);
    opts.make_executor = [time_scale] { return std::make_unique<SleepingExecutor>(time_scale); };
    Session session(opts);
    session.load(spec.empty() ? bundled_spec() : GraphSpec::load(spec));
    HttpServer server(session);
    const int bound = server.bind(host, port);
    if (bound < 0) {
        std::cerr << "cannot bind " << host << ':' << port << '\n';
        return kUsage;
    }
    g_server = &server;
    std::signal(SIGINT, [](int) {
        if (g_server) g_server->stop();
    });
    std::signal(SIGTERM, [](int) {
        if (g_server) g_server->stop();
    });
    std::cerr << "listening on http://" << host << ':' << bound << '\n';
    server.listen();
    g_server = nullptr;
    return kOk;
}

int replay(const std::string& path, const std::string& csv) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot open " + path);
    auto trace = Trace::read_jsonl(in);
    auto report = compute_metrics(trace);
    if (!csv.empty()) {
        auto out = open_out(csv);
        report.write_csv(out);
    }
    std::cout << nlohmann::json{{"invisibility_ms", report.invisibility_ms},
                                {"staleness_ms", report.staleness_ms},
                                {"reads", trace.reads.size()},
                                {"writes", trace.writes.size()}}
                     .dump()
              << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-version dashboard engine: simulation, verification and live serving"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Progress on stderr");

    SimulateArgs sim;
    auto* simulate_cmd = app.add_subcommand("simulate", "Run one experiment or a grid; write CSV and traces");
    simulate_cmd->add_option("--config", sim.config, "Experiment or grid JSON");
    simulate_cmd->add_option("--spec", sim.spec, "Graph spec JSON (overrides the config)");
    simulate_cmd->add_option("--out", sim.out, "Output directory")->capture_default_str();
    simulate_cmd->add_option("--seed", sim.seed, "Seed override");
    simulate_cmd->add_option("--lens", sim.lens, "Lens override");
    simulate_cmd->add_option("--k", sim.k, "k for the relaxed lenses");
    simulate_cmd->add_option("--policy", sim.policy, "tp, noopt, antifreeze or metricopt");
    simulate_cmd->add_option("--behavior", sim.behavior, "regular, wait or random");
    simulate_cmd->add_option("--threads", sim.threads, "Grid worker threads (0: all cores)");

    VerifyArgs ver;
    auto* verify_cmd = app.add_subcommand("verify", "Check lens properties and orderings");
    verify_cmd->add_flag("--theorems", ver.theorems, "Ordering and property suites on random workloads");
    verify_cmd->add_option("--seeds", ver.seeds, "Number of random workloads")->capture_default_str();
    verify_cmd->add_option("--seed", ver.seed, "First workload seed")->capture_default_str();
    verify_cmd->add_option("--counterexample", ver.counterexample,
                           "Replay a named counterexample; its expected violations count as success")
        ->check(CLI::IsMember({"theorem3"}));
    verify_cmd->add_option("--trace", ver.trace, "Check a stored JSON-lines trace");

    std::string host = "127.0.0.1", spec, lens = "gcpb";
    int port = 8080;
    std::size_t k = 0;
    double time_scale = 1.0;
    auto* serve_cmd = app.add_subcommand("serve", "Start the HTTP server");
    serve_cmd->add_option("--port", port, "Port (0: ephemeral)")->capture_default_str();
    serve_cmd->add_option("--host", host, "Bind address")->capture_default_str();
    serve_cmd->add_option("--spec", spec, "Graph spec JSON (default: bundled 22-view dashboard)");
    serve_cmd->add_option("--lens", lens, "Initial lens")->capture_default_str();
    serve_cmd->add_option("--k", k, "Initial k");
    serve_cmd->add_option("--time-scale", time_scale, "Wall time per simulated millisecond of cost")->capture_default_str();

    std::string replay_trace, replay_csv;
    auto* replay_cmd = app.add_subcommand("replay", "Recompute metrics from a stored trace");
    replay_cmd->add_option("--trace", replay_trace, "JSON-lines trace")->required();
    replay_cmd->add_option("--csv", replay_csv, "Also write the per-interval CSV here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*simulate_cmd) return simulate(sim, verbose);
        if (*verify_cmd) return verify(ver, verbose);
        if (*serve_cmd) return serve(host, port, spec, lens, k, time_scale);
        if (*replay_cmd) return replay(replay_trace, replay_csv);
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}
