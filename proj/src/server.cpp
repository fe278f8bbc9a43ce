#include "panorama/server.hpp"

#include <sstream>

#include <httplib.h>

#include "panorama/executors.hpp"

namespace panorama {

namespace {

nlohmann::json meta_of(const MetaInfo& m) { return to_json(m); }

int status_for(ErrorCode c) {
    switch (c) {
        case ErrorCode::WriteInProgress: return 409;
        case ErrorCode::UnknownNode:
        case ErrorCode::EmptyViewport:
        case ErrorCode::UnknownLens:
        case ErrorCode::UnknownPolicy:
        case ErrorCode::ParseError:
        case ErrorCode::NotBaseNode:
        case ErrorCode::EmptyWriteSet:
        case ErrorCode::CycleDetected:
        case ErrorCode::DuplicateNode:
        case ErrorCode::ConfigInvalid: return 400;
        default: return 500;
    }
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

}  // namespace

Session::Session(SessionOptions options) : options_(std::move(options)), lens_(options_.lens) {
    if (!options_.make_executor) options_.make_executor = [] { return std::make_unique<SleepingExecutor>(1.0); };
}

Session::~Session() {
    {
        std::lock_guard lock(timer_mutex_);
        ++timer_generation_;
    }
    timer_cv_.notify_all();
    if (timer_.joinable()) timer_.join();
    stop_worker();
}

Reply Session::error(int status, const std::string& code, const std::string& message, const nlohmann::json& meta) {
    nlohmann::json body{{"error", code}, {"message", message}};
    if (!meta.is_null()) body["meta"] = meta;
    return {status, std::move(body)};
}

Reply Session::error_for(const Error& e) const {
    return error(status_for(e.code()), std::string(to_string(e.code())), e.what(),
                 engine_ ? meta_of(engine_->snapshot_meta()) : nlohmann::json());
}

nlohmann::json Session::meta_json() const {
    std::lock_guard lock(mutex_);
    return engine_ ? meta_of(engine_->snapshot_meta()) : nlohmann::json();
}

bool Session::loaded() const {
    std::lock_guard lock(mutex_);
    return engine_ != nullptr;
}

// --- writer worker ---------------------------------------------------------

void Session::start_worker() {
    stop_ = false;
    executor_ = options_.make_executor();
    worker_ = std::thread([this] {
        for (;;) {
            {
                std::unique_lock lock(work_mutex_);
                work_cv_.wait(lock, [&] { return stop_ || engine_->has_running_write(); });
                if (stop_) return;
            }
            auto view = engine_->schedule_next();
            if (!view) continue;
            auto result = executor_->execute(view->node, view->ts, view->cost);
            engine_->complete(*view, std::move(result));
            {
                std::lock_guard lock(work_mutex_);
            }
            work_cv_.notify_all();
        }
    });
}

void Session::stop_worker() {
    {
        std::lock_guard lock(work_mutex_);
        stop_ = true;
    }
    work_cv_.notify_all();
    if (worker_.joinable()) worker_.join();
}

void Session::wait_idle() {
    std::unique_lock lock(work_mutex_);
    work_cv_.wait(lock, [&] { return stop_ || !engine_ || !engine_->has_running_write(); });
}

// --- periodic refresh ------------------------------------------------------

void Session::timer_loop(std::uint64_t generation) {
    std::int64_t interval;
    {
        std::lock_guard lock(mutex_);
        interval = refresh_interval_ms_;
    }
    auto next = std::chrono::steady_clock::now() + Millis(interval);
    for (;;) {
        {
            std::unique_lock lock(timer_mutex_);
            if (timer_cv_.wait_until(lock, next, [&] { return timer_generation_ != generation; })) return;
        }
        refresh({});
        next += Millis(interval);
    }
}

// --- endpoints -------------------------------------------------------------

void Session::load(const GraphSpec& spec) {
    auto graph = ViewGraph::build(spec);
    std::lock_guard lock(mutex_);
    stop_worker();
    engine_ = std::make_unique<Engine>(std::move(graph), clock_,
                                       EngineOptions{options_.policy, options_.seed, options_.cost_mode});
    live_ = StreamingMetrics{};
    start_worker();
}

Reply Session::load(const nlohmann::json& spec) {
    try {
        load(GraphSpec::from_json(spec));
    } catch (const Error& e) {
        std::lock_guard lock(mutex_);
        return error_for(e);
    }
    return dashboard();
}

Reply Session::dashboard() const {
    std::lock_guard lock(mutex_);
    if (!engine_) return error(409, "NoDashboardLoaded", "POST /dashboard first", nullptr);
    const auto& spec = engine_->graph().spec();
    nlohmann::json body = spec.to_json();
    body["layout"] = nlohmann::json::array();
    for (const auto& id : spec.dashboard()) body["layout"].push_back(id.str());
    body["lens"] = lens_.name();
    body["k"] = lens_.allowance();
    body["policy"] = std::string(to_string(engine_->policy()));
    body["refresh_interval_ms"] = refresh_interval_ms_;
    body["meta"] = meta_of(engine_->snapshot_meta());
    return {200, std::move(body)};
}

Reply Session::read(const std::vector<std::string>& nodes) {
    std::lock_guard lock(mutex_);
    if (!engine_) return error(409, "NoDashboardLoaded", "POST /dashboard first", nullptr);
    NodeSet viewport;
    for (const auto& n : nodes) viewport.emplace(n);
    try {
        auto ev = engine_->read(viewport, lens_);
        live_.on_read(ev);
        nlohmann::json body;
        body["seq"] = ev.seq;
        body["lens"] = ev.lens.label();
        body["chosen_version"] = ev.choice.per_node() ? nlohmann::json() : nlohmann::json(ev.choice.version.value);
        body["states"] = nlohmann::json::array();
        for (const auto& [id, st] : ev.states)
            body["states"].push_back({{"id", id.str()},
                                      {"kind", std::string(to_string(st.kind))},
                                      {"version", st.version.value},
                                      {"stale", !st.is_uc() && live_.is_stale(id, st.version, ev.meta_at_read.latest)},
                                      {"payload", st.payload}});
        body["meta"] = meta_of(ev.meta_at_read);
        body["metrics"] = {{"invisibility_ms", live_.invisibility_ms()}, {"staleness_ms", live_.staleness_ms()}};
        return {200, std::move(body)};
    } catch (const Error& e) {
        return error_for(e);
    }
}

Timestamp Session::begin_write_locked(const NodeSet& write_set) {
    const Timestamp ts = engine_->begin_write(write_set);
    live_.on_write(ts, engine_->update_set(ts));
    {
        std::lock_guard lock(work_mutex_);
    }
    work_cv_.notify_all();
    return ts;
}

Reply Session::refresh(const std::vector<std::string>& write_set) {
    std::lock_guard lock(mutex_);
    if (!engine_) return error(409, "NoDashboardLoaded", "POST /dashboard first", nullptr);
    NodeSet ws;
    for (const auto& n : write_set) ws.emplace(n);
    if (ws.empty()) ws = engine_->graph().base_nodes();
    try {
        const Timestamp ts = begin_write_locked(ws);
        nlohmann::json body;
        body["version"] = ts.value;
        body["update_set"] = nlohmann::json::array();
        for (const auto& n : engine_->update_set(ts)) body["update_set"].push_back(n.str());
        body["meta"] = meta_of(engine_->snapshot_meta());
        return {202, std::move(body)};
    } catch (const Error& e) {
        return error_for(e);
    }
}

Reply Session::configure(const nlohmann::json& request) {
    std::optional<std::int64_t> new_interval;
    Reply reply;
    {
        std::lock_guard lock(mutex_);
        if (!engine_) return error(409, "NoDashboardLoaded", "POST /dashboard first", nullptr);
        if (engine_->has_running_write())
            return error(409, "WriteInProgress", "configuration can change only between writes",
                         meta_of(engine_->snapshot_meta()));
        try {
            Lens lens = lens_;
            if (request.contains("lens"))
                lens = Lens::parse(request.at("lens").get<std::string>(), request.value("k", std::size_t{0}));
            else if (request.contains("k"))
                lens.k = request.at("k").get<std::size_t>();
            if (request.contains("policy"))
                engine_->set_policy(parse_policy(request.at("policy").get<std::string>()),
                                    request.value("seed", options_.seed));
            if (request.contains("refresh_interval_ms")) {
                auto v = request.at("refresh_interval_ms").get<std::int64_t>();
                if (v < 0) throw Error(ErrorCode::ConfigInvalid, "refresh_interval_ms must be >= 0");
                new_interval = v;
                refresh_interval_ms_ = v;
            }
            if (!(lens == lens_)) {
                lens_ = lens;
                engine_->clear_last_read();
            }
        } catch (const Error& e) {
            return error_for(e);
        } catch (const nlohmann::json::exception& e) {
            return error(400, "ParseError", e.what(), meta_of(engine_->snapshot_meta()));
        }
        reply.body = {{"lens", lens_.name()},
                      {"k", lens_.allowance()},
                      {"policy", std::string(to_string(engine_->policy()))},
                      {"refresh_interval_ms", refresh_interval_ms_},
                      {"meta", meta_of(engine_->snapshot_meta())}};
    }
    if (new_interval) {
        std::uint64_t gen;
        {
            std::lock_guard lock(timer_mutex_);
            gen = ++timer_generation_;
        }
        timer_cv_.notify_all();
        if (timer_.joinable()) timer_.join();
        if (*new_interval > 0) timer_ = std::thread([this, gen] { timer_loop(gen); });
    }
    return reply;
}

Reply Session::metrics() const {
    std::lock_guard lock(mutex_);
    if (!engine_) return error(409, "NoDashboardLoaded", "POST /dashboard first", nullptr);
    return {200,
            {{"invisibility_ms", live_.invisibility_ms()},
             {"staleness_ms", live_.staleness_ms()},
             {"reads", live_.reads()},
             {"open_uc_count", live_.open_uc_count()},
             {"open_stale_count", live_.open_stale_count()},
             {"meta", meta_of(engine_->snapshot_meta())}}};
}

std::optional<std::string> Session::trace_jsonl() const {
    std::lock_guard lock(mutex_);
    if (!engine_) return std::nullopt;
    std::ostringstream os;
    engine_->trace().write_jsonl(os);
    return os.str();
}

// --- HTTP ------------------------------------------------------------------

HttpServer::HttpServer(Session& session) : session_(session), http_(std::make_unique<httplib::Server>()) {
    auto& s = *http_;
    s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    auto send = [](httplib::Response& res, const Reply& r) {
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    auto parse_body = [](const httplib::Request& req) -> std::optional<nlohmann::json> {
        if (req.body.empty()) return nlohmann::json::object();
        try {
            return nlohmann::json::parse(req.body);
        } catch (const nlohmann::json::exception&) {
            return std::nullopt;
        }
    };
    auto bad_json = [this, send](httplib::Response& res) {
        send(res, {400, {{"error", "ParseError"}, {"message", "request body is not valid JSON"}, {"meta", session_.meta_json()}}});
    };

    s.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    s.Post("/dashboard", [=, this](const httplib::Request& req, httplib::Response& res) {
        auto body = parse_body(req);
        if (!body) return bad_json(res);
        send(res, session_.load(*body));
    });
    s.Get("/dashboard", [=, this](const httplib::Request&, httplib::Response& res) { send(res, session_.dashboard()); });
    s.Get("/read", [=, this](const httplib::Request& req, httplib::Response& res) {
        send(res, session_.read(split_csv(req.get_param_value("nodes"))));
    });
    s.Post("/refresh", [=, this](const httplib::Request& req, httplib::Response& res) {
        auto body = parse_body(req);
        if (!body) return bad_json(res);
        std::vector<std::string> ws;
        try {
            if (body->contains("write_set")) ws = body->at("write_set").get<std::vector<std::string>>();
        } catch (const nlohmann::json::exception&) {
            return bad_json(res);
        }
        send(res, session_.refresh(ws));
    });
    s.Post("/configure", [=, this](const httplib::Request& req, httplib::Response& res) {
        auto body = parse_body(req);
        if (!body) return bad_json(res);
        send(res, session_.configure(*body));
    });
    s.Get("/metrics", [=, this](const httplib::Request&, httplib::Response& res) { send(res, session_.metrics()); });
    s.Get("/trace", [=, this](const httplib::Request&, httplib::Response& res) {
        auto t = session_.trace_jsonl();
        if (!t) return send(res, {409, {{"error", "NoDashboardLoaded"}, {"message", "POST /dashboard first"}}});
        res.set_header("X-Panorama-Meta", session_.meta_json().dump());
        res.set_content(*t, "application/x-ndjson");
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return http_->bind_to_any_port(host);
    if (!http_->bind_to_port(host, port)) return -1;
    return port;
}

void HttpServer::listen() { http_->listen_after_bind(); }

void HttpServer::stop() {
    if (http_) http_->stop();
}

}  // namespace panorama
