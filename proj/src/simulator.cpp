#include "panorama/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <ostream>
#include <thread>
#include <tuple>

namespace panorama {

std::string_view to_string(ReadBehavior b) noexcept {
    switch (b) {
        case ReadBehavior::RegularMove: return "regular";
        case ReadBehavior::WaitAndMove: return "wait";
        case ReadBehavior::RandomMove: return "random";
    }
    return "?";
}

ReadBehavior parse_behavior(std::string_view name) {
    for (auto b : {ReadBehavior::RegularMove, ReadBehavior::WaitAndMove, ReadBehavior::RandomMove})
        if (to_string(b) == name) return b;
    throw Error(ErrorCode::ConfigInvalid, "unknown read behavior '" + std::string(name) + "'");
}

NodeSet Dashboard::window(std::size_t offset, std::size_t size) const {
    NodeSet out;
    for (std::size_t i = offset; i < offset + size && i < layout.size(); ++i) out.insert(layout[i]);
    return out;
}

// --- config ----------------------------------------------------------------

std::vector<PlannedWrite> ExperimentConfig::write_plan() const {
    auto plan = writes;
    if (periodic)
        for (std::size_t i = 0; i < periodic->count; ++i)
            plan.push_back({periodic->interval * static_cast<std::int64_t>(i), periodic->write_set});
    std::stable_sort(plan.begin(), plan.end(), [](const auto& a, const auto& b) { return a.at < b.at; });
    return plan;
}

void ExperimentConfig::validate() const {
    auto bad = [](const std::string& msg) { throw Error(ErrorCode::ConfigInvalid, msg); };
    const auto dash = spec.dashboard();
    if (viewport_size == 0) bad("viewport_size must be positive");
    if (viewport_size > explore_range) bad("viewport_size exceeds explore_range");
    if (explore_range > dash.size()) bad("explore_range exceeds the dashboard size");
    if (read_interval.count() <= 0) bad("read_interval_ms must be positive");
    if (move_interval.count() <= 0) bad("move_interval_ms must be positive");
    if (periodic && periodic->count > 0 && periodic->interval.count() <= 0) bad("periodic interval must be positive");
    const auto plan = write_plan();
    if (plan.empty()) bad("the write plan is empty");
    std::map<NodeId, bool> base;
    for (const auto& n : spec.nodes) base[n.id] = n.base;
    for (const auto& w : plan) {
        if (w.at.count() < 0) bad("write offsets must be non-negative");
        if (w.write_set.empty()) bad("empty write set in the write plan");
        for (const auto& n : w.write_set) {
            auto it = base.find(n);
            if (it == base.end()) bad("write set names unknown node " + n.str());
            if (!it->second) bad("write set names non-base node " + n.str());
        }
    }
}

namespace {

NodeSet node_set_from(const nlohmann::json& j) {
    NodeSet s;
    for (const auto& n : j) s.emplace(n.get<std::string>());
    return s;
}

nlohmann::json node_list(const NodeSet& s) {
    auto a = nlohmann::json::array();
    for (const auto& n : s) a.push_back(n.str());
    return a;
}

nlohmann::json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
}

std::filesystem::path data_file(const char* name) { return std::filesystem::path(PANORAMA_DATA_DIR) / name; }

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    ExperimentConfig c = default_config();
    try {
        if (j.contains("spec"))
            c.spec = GraphSpec::from_json(j.at("spec"));
        else if (j.contains("spec_path")) {
            std::filesystem::path p = j.at("spec_path").get<std::string>();
            c.spec = GraphSpec::load(p.is_absolute() ? p : base_dir / p);
        }
        if (j.contains("lens")) c.lens = Lens::parse(j.at("lens").get<std::string>(), j.value("k", std::size_t{0}));
        if (j.contains("policy")) c.policy = parse_policy(j.at("policy").get<std::string>());
        if (j.contains("behavior")) c.behavior = parse_behavior(j.at("behavior").get<std::string>());
        c.explore_range = j.value("explore_range", c.explore_range);
        c.viewport_size = j.value("viewport_size", c.viewport_size);
        c.read_interval = Millis(j.value("read_interval_ms", c.read_interval.count()));
        c.move_interval = Millis(j.value("move_interval_ms", c.move_interval.count()));
        c.seed = j.value("seed", c.seed);
        if (j.contains("writes")) {
            c.writes.clear();
            for (const auto& w : j.at("writes"))
                c.writes.push_back({Millis(w.value("at_ms", std::int64_t{0})), node_set_from(w.at("write_set"))});
        }
        if (j.contains("periodic")) {
            const auto& p = j.at("periodic");
            c.periodic = PeriodicRefresh{Millis(p.at("interval_ms").get<std::int64_t>()),
                                         p.at("count").get<std::size_t>(), node_set_from(p.at("write_set"))};
            if (!j.contains("writes")) c.writes.clear();
        }
        if (!j.contains("explore_range")) c.explore_range = std::min(c.explore_range, c.spec.dashboard().size());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ConfigInvalid, e.what());
    }
    return c;
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["spec"] = spec.to_json();
    j["lens"] = lens.name();
    j["k"] = lens.allowance();
    j["policy"] = std::string(panorama::to_string(policy));
    j["behavior"] = std::string(panorama::to_string(behavior));
    j["explore_range"] = explore_range;
    j["viewport_size"] = viewport_size;
    j["read_interval_ms"] = read_interval.count();
    j["move_interval_ms"] = move_interval.count();
    j["seed"] = seed;
    j["writes"] = nlohmann::json::array();
    for (const auto& w : writes) j["writes"].push_back({{"at_ms", w.at.count()}, {"write_set", node_list(w.write_set)}});
    if (periodic)
        j["periodic"] = {{"interval_ms", periodic->interval.count()},
                         {"count", periodic->count},
                         {"write_set", node_list(periodic->write_set)}};
    return j;
}

// --- viewport movement -----------------------------------------------------

namespace {

std::size_t max_offset(const Dashboard& d, const ExperimentConfig& c) {
    return (c.explore_range - c.viewport_size) / d.per_row * d.per_row;
}

void shift_one_row(ViewportState& s, const Dashboard& d, const ExperimentConfig& c) {
    const auto top = max_offset(d, c);
    if (top == 0) return;
    auto step = [&](int dir) -> std::optional<std::size_t> {
        if (dir > 0) {
            if (s.offset + d.per_row > top) return std::nullopt;
            return s.offset + d.per_row;
        }
        if (s.offset < d.per_row) return std::nullopt;
        return s.offset - d.per_row;
    };
    auto next = step(s.direction);
    if (!next) {
        s.direction = -s.direction;
        next = step(s.direction);
    }
    if (next) s.offset = *next;
}

bool viewport_fresh(const ReadEvent& e) {
    return std::all_of(e.states.begin(), e.states.end(), [&](const auto& kv) {
        return !kv.second.is_uc() && kv.second.version == e.meta_at_read.latest;
    });
}

}  // namespace

NodeSet next_viewport(ReadBehavior behavior, ViewportState& state, const Dashboard& dashboard,
                      const ExperimentConfig& config, const ReadEvent* last_read, std::mt19937_64& rng) {
    switch (behavior) {
        case ReadBehavior::RegularMove: shift_one_row(state, dashboard, config); break;
        case ReadBehavior::WaitAndMove:
            if (!last_read || viewport_fresh(*last_read)) shift_one_row(state, dashboard, config);
            break;
        case ReadBehavior::RandomMove: {
            std::uniform_int_distribution<std::size_t> pick(0, max_offset(dashboard, config) / dashboard.per_row);
            state.offset = pick(rng) * dashboard.per_row;
            break;
        }
    }
    return dashboard.window(state.offset, config.viewport_size);
}

// --- discrete-event run ----------------------------------------------------

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    ManualClock clock;
    // The scheduler and the viewport draw from separate streams so the read
    // sequence does not depend on the policy.
    Engine engine(ViewGraph::build(config.spec), clock,
                  EngineOptions{config.policy, config.seed ^ 0x5ca1ab1e0ddba11ULL, CostModel::Mode::Known});
    std::mt19937_64 move_rng(config.seed);

    const Dashboard dash = Dashboard::from_spec(config.spec);
    ViewportState vstate;
    NodeSet viewport = dash.window(0, config.viewport_size);

    const auto plan = config.write_plan();
    std::size_t next_write = 0, committed = 0;
    std::optional<ScheduledView> running;
    Millis running_done{0};
    Millis next_read{0}, next_move = config.move_interval;
    std::optional<ReadEvent> last;
    InstantExecutor executor;

    for (;;) {
        Millis now = std::min(next_read, next_move);
        if (running) now = std::min(now, running_done);
        if (next_write < plan.size()) now = std::min(now, plan[next_write].at);
        clock.set(now);

        bool committed_now = false;
        if (running && running_done == now) {
            auto r = engine.complete(*running, executor.execute(running->node, running->ts, running->cost));
            running.reset();
            if (r.kind == StepResult::Kind::Committed) {
                ++committed;
                committed_now = true;
            }
        }
        while (next_write < plan.size() && plan[next_write].at == now) engine.begin_write(plan[next_write++].write_set);
        if (next_move == now) {
            viewport = next_viewport(config.behavior, vstate, dash, config, last ? &*last : nullptr, move_rng);
            next_move += config.move_interval;
        }
        bool read_now = false;
        if (next_read == now) {
            last = engine.read(viewport, config.lens);
            next_read += config.read_interval;
            read_now = true;
        }
        if (committed_now && committed == plan.size()) {
            if (!read_now) last = engine.read(viewport, config.lens);
            break;
        }
        if (!running) {
            running = engine.schedule_next();
            if (running) running_done = now + running->cost;
        }
    }

    ExperimentResult out;
    out.trace = engine.trace();
    out.metrics = compute_metrics(out.trace);
    out.finished_at = clock.now();
    return out;
}

// --- grid ------------------------------------------------------------------

GridSpec GridSpec::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    GridSpec g;
    g.base = ExperimentConfig::from_json(j, base_dir);
    try {
        const std::size_t k = j.value("k", std::size_t{0});
        if (j.contains("lenses"))
            for (const auto& l : j.at("lenses")) {
                if (l.is_object())
                    g.lenses.push_back(Lens::parse(l.at("lens").get<std::string>(), l.value("k", k)));
                else
                    g.lenses.push_back(Lens::parse(l.get<std::string>(), k));
            }
        if (j.contains("ks")) {
            // Expands each k-variant lens over the listed k values.
            std::vector<Lens> expanded;
            for (const auto& l : g.lenses) {
                if (!l.is_k_variant()) {
                    expanded.push_back(l);
                    continue;
                }
                for (const auto& kv : j.at("ks")) expanded.push_back(Lens{l.kind, kv.get<std::size_t>()});
            }
            g.lenses = std::move(expanded);
        }
        if (j.contains("policies"))
            for (const auto& p : j.at("policies")) g.policies.push_back(parse_policy(p.get<std::string>()));
        if (j.contains("behaviors"))
            for (const auto& b : j.at("behaviors")) g.behaviors.push_back(parse_behavior(b.get<std::string>()));
        if (j.contains("explore_ranges")) g.explore_ranges = j.at("explore_ranges").get<std::vector<std::size_t>>();
        if (j.contains("viewport_sizes")) g.viewport_sizes = j.at("viewport_sizes").get<std::vector<std::size_t>>();
        if (j.contains("seeds")) {
            const auto& s = j.at("seeds");
            if (s.is_number()) {
                for (std::uint64_t i = 0; i < s.get<std::uint64_t>(); ++i) g.seeds.push_back(i);
            } else {
                g.seeds = s.get<std::vector<std::uint64_t>>();
            }
        }
        g.threads = j.value("threads", std::size_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ConfigInvalid, e.what());
    }
    return g;
}

std::vector<ExperimentConfig> GridSpec::cells() const {
    auto or_base = [](const auto& axis, auto value) {
        using V = std::decay_t<decltype(value)>;
        return axis.empty() ? std::vector<V>{value} : axis;
    };
    std::vector<ExperimentConfig> out;
    for (const auto& lens : or_base(lenses, base.lens))
        for (auto policy : or_base(policies, base.policy))
            for (auto behavior : or_base(behaviors, base.behavior))
                for (auto er : or_base(explore_ranges, base.explore_range))
                    for (auto vs : or_base(viewport_sizes, base.viewport_size))
                        for (auto seed : or_base(seeds, base.seed)) {
                            auto c = base;
                            c.lens = lens;
                            c.policy = policy;
                            c.behavior = behavior;
                            c.explore_range = er;
                            c.viewport_size = vs;
                            c.seed = seed;
                            out.push_back(std::move(c));
                        }
    return out;
}

std::vector<GridRow> run_grid(const GridSpec& grid) {
    auto cells = grid.cells();
    for (const auto& c : cells) c.validate();
    std::vector<GridRow> rows(cells.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) {
            try {
                auto r = run_experiment(cells[i]);
                rows[i] = GridRow{cells[i], r.metrics.invisibility_ms, r.metrics.staleness_ms};
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::size_t n = grid.threads ? grid.threads : std::max(1u, std::thread::hardware_concurrency());
    n = std::min(n, std::max<std::size_t>(cells.size(), 1));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return rows;
}

std::vector<GridSummaryRow> summarize(const std::vector<GridRow>& rows) {
    using Key = std::tuple<std::string, std::size_t, int, int, std::size_t, std::size_t>;
    std::map<Key, std::size_t> index;
    std::vector<GridSummaryRow> out;
    for (const auto& r : rows) {
        const auto& c = r.config;
        Key key{c.lens.name(), c.lens.allowance(), static_cast<int>(c.policy), static_cast<int>(c.behavior),
                c.explore_range, c.viewport_size};
        auto [it, fresh] = index.emplace(key, out.size());
        if (fresh) {
            GridSummaryRow s;
            s.config = c;
            s.invisibility_min = s.invisibility_max = r.invisibility_ms;
            s.staleness_min = s.staleness_max = r.staleness_ms;
            out.push_back(s);
        }
        auto& s = out[it->second];
        ++s.runs;
        s.invisibility_min = std::min(s.invisibility_min, r.invisibility_ms);
        s.invisibility_max = std::max(s.invisibility_max, r.invisibility_ms);
        s.staleness_min = std::min(s.staleness_min, r.staleness_ms);
        s.staleness_max = std::max(s.staleness_max, r.staleness_ms);
        s.invisibility_mean += static_cast<double>(r.invisibility_ms);
        s.staleness_mean += static_cast<double>(r.staleness_ms);
    }
    for (auto& s : out) {
        s.invisibility_mean /= static_cast<double>(s.runs);
        s.staleness_mean /= static_cast<double>(s.runs);
    }
    return out;
}

void write_results_csv(std::ostream& os, const std::vector<GridRow>& rows) {
    os << "lens,k,policy,behavior,explore_range,viewport_size,seed,invisibility_ms,staleness_ms\n";
    for (const auto& r : rows) {
        const auto& c = r.config;
        os << c.lens.name() << ',' << c.lens.allowance() << ',' << to_string(c.policy) << ',' << to_string(c.behavior)
           << ',' << c.explore_range << ',' << c.viewport_size << ',' << c.seed << ',' << r.invisibility_ms << ','
           << r.staleness_ms << '\n';
    }
}

void write_summary_csv(std::ostream& os, const std::vector<GridSummaryRow>& rows) {
    os << "lens,k,policy,behavior,explore_range,viewport_size,runs,"
          "invisibility_min,invisibility_mean,invisibility_max,staleness_min,staleness_mean,staleness_max\n";
    for (const auto& s : rows) {
        const auto& c = s.config;
        os << c.lens.name() << ',' << c.lens.allowance() << ',' << to_string(c.policy) << ',' << to_string(c.behavior)
           << ',' << c.explore_range << ',' << c.viewport_size << ',' << s.runs << ',' << s.invisibility_min << ','
           << s.invisibility_mean << ',' << s.invisibility_max << ',' << s.staleness_min << ',' << s.staleness_mean
           << ',' << s.staleness_max << '\n';
    }
}

// --- bundled workloads -----------------------------------------------------

GraphSpec bundled_spec() { return GraphSpec::load(data_file("tpch_like.json")); }

NodeSet bundled_write_set() { return node_set_from(load_json(data_file("tpch_like.json")).at("default_write_set")); }

GraphSpec small_spec() { return GraphSpec::load(data_file("small_graph.json")); }

ExperimentConfig default_config() {
    ExperimentConfig c;
    c.spec = bundled_spec();
    c.lens = Lens{LensKind::GCPB, 0};
    c.writes = {{Millis{0}, bundled_write_set()}};
    return c;
}

ExperimentConfig random_workload(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto uniform = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };

    const std::size_t total = uniform(5, 30);
    const std::size_t bases = uniform(1, std::max<std::size_t>(1, total / 4));
    const std::size_t views = total - bases;

    ExperimentConfig c;
    for (std::size_t i = 0; i < bases; ++i)
        c.spec.nodes.push_back({NodeId("b" + std::to_string(i)), Millis(10 * static_cast<std::int64_t>(uniform(0, 5))), true});
    for (std::size_t i = 0; i < views; ++i) {
        NodeId id("v" + std::to_string(i));
        c.spec.nodes.push_back({id, Millis(10 * static_cast<std::int64_t>(uniform(1, 30))), false});
        // 1 to 3 distinct inputs among every earlier node.
        const std::size_t earlier = bases + i;
        std::set<std::size_t> preds;
        const std::size_t want = std::min<std::size_t>(uniform(1, 3), earlier);
        while (preds.size() < want) preds.insert(uniform(0, earlier - 1));
        for (auto p : preds) c.spec.edges.emplace_back(c.spec.nodes[p].id, id);
        c.spec.layout.push_back(id);
    }
    c.spec.per_row = uniform(1, 3);

    c.lens = Lens{LensKind::GCPB, 0};
    c.policy = PolicyKind::TP;
    c.behavior = uniform(0, 1) ? ReadBehavior::RandomMove : ReadBehavior::RegularMove;
    c.viewport_size = uniform(1, std::min<std::size_t>(6, views));
    c.explore_range = uniform(c.viewport_size, views);
    c.read_interval = Millis(50 * static_cast<std::int64_t>(uniform(1, 2)));
    c.move_interval = Millis(100 * static_cast<std::int64_t>(uniform(2, 10)));
    NodeSet write_set;
    for (std::size_t i = 0; i < bases; ++i)
        if (uniform(0, 1)) write_set.insert(c.spec.nodes[i].id);
    if (write_set.empty()) write_set.insert(c.spec.nodes[uniform(0, bases - 1)].id);
    c.writes = {{Millis(50 * static_cast<std::int64_t>(uniform(0, 4))), write_set}};
    c.seed = seed;
    return c;
}

}  // namespace panorama
