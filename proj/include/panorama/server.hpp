#pragma once

#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <json.hpp>

#include "panorama/engine.hpp"
#include "panorama/metrics.hpp"

namespace httplib {
class Server;
}

namespace panorama {

/// Outcome of one session call, mapped 1:1 onto an HTTP response.
struct Reply {
    int status = 200;
    nlohmann::json body;
};

struct SessionOptions {
    Lens lens{LensKind::GCPB, 0};
    PolicyKind policy = PolicyKind::TP;
    std::uint64_t seed = 0;
    /// Each computation gets a fresh executor from this factory when the dashboard loads.
    std::function<std::unique_ptr<Executor>()> make_executor;
    CostModel::Mode cost_mode = CostModel::Mode::EwmaMeasured;
};

/// Single-user live session: one engine, a writer worker, an optional
/// periodic refresh timer and the running metrics.
class Session {
public:
    explicit Session(SessionOptions options = {});
    ~Session();

    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    /// Replaces the dashboard. Any running writes of the previous one are abandoned.
    Reply load(const nlohmann::json& spec);
    void load(const GraphSpec& spec);
    bool loaded() const;

    Reply dashboard() const;
    Reply read(const std::vector<std::string>& nodes);
    /// Empty write set: every base node.
    Reply refresh(const std::vector<std::string>& write_set);
    /// Keys: lens, k, policy, seed, refresh_interval_ms (0 disables).
    Reply configure(const nlohmann::json& request);
    Reply metrics() const;
    /// JSON lines; nullopt when no dashboard is loaded.
    std::optional<std::string> trace_jsonl() const;
    nlohmann::json meta_json() const;

    /// Blocks until no write is running (tests and shutdown).
    void wait_idle();
    /// The engine of the current dashboard, or nullptr.
    Engine* engine() { return engine_.get(); }

private:
    void start_worker();
    void stop_worker();
    void timer_loop(std::uint64_t generation);
    Timestamp begin_write_locked(const NodeSet& write_set);
    static Reply error(int status, const std::string& code, const std::string& message, const nlohmann::json& meta);
    Reply error_for(const Error& e) const;

    SessionOptions options_;
    SteadyClock clock_;

    mutable std::mutex mutex_;  // session state; never held during a view computation
    std::unique_ptr<Engine> engine_;
    Lens lens_;
    StreamingMetrics live_;
    std::int64_t refresh_interval_ms_ = 0;

    std::mutex work_mutex_;
    std::condition_variable work_cv_;
    bool stop_ = false;
    std::uint64_t pending_work_ = 0;
    std::thread worker_;
    std::unique_ptr<Executor> executor_;

    std::mutex timer_mutex_;
    std::condition_variable timer_cv_;
    std::uint64_t timer_generation_ = 0;
    std::thread timer_;
};

/// JSON-over-HTTP facade. Routes: POST/GET /dashboard, GET /read?nodes=a,b,
/// POST /refresh, POST /configure, GET /metrics, GET /trace.
class HttpServer {
public:
    explicit HttpServer(Session& session);
    ~HttpServer();

    /// Binds; returns the port (an ephemeral one when port is 0).
    int bind(const std::string& host, int port);
    /// Serves until stop(); call after bind().
    void listen();
    void stop();

private:
    Session& session_;
    std::unique_ptr<httplib::Server> http_;
};

}  // namespace panorama
