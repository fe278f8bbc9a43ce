#include "panorama/engine.hpp"

#include <algorithm>

namespace panorama {

Engine::Engine(ViewGraph graph, const Clock& clock, EngineOptions options)
    : graph_(std::move(graph)),
      clock_(clock),
      scheduler_(options.policy, options.seed),
      costs_(CostModel::from_graph(graph_, options.cost_mode)) {}

Timestamp Engine::begin_write(const NodeSet& write_set) {
    if (write_set.empty()) throw Error(ErrorCode::EmptyWriteSet, "a write must modify at least one base node");
    for (const auto& n : write_set) {
        if (!graph_.contains(n)) throw Error(ErrorCode::UnknownNode, n.str());
        if (!graph_.is_base(n)) throw Error(ErrorCode::NotBaseNode, n.str());
    }
    NodeSet update = graph_.dependents(write_set);
    update.insert(write_set.begin(), write_set.end());

    std::lock_guard wlock(write_mutex_);
    const Timestamp ts = next_ts_;
    next_ts_ = ts.next();
    const Millis now = clock_.now();

    for (const auto& n : update) graph_.mark_under_computation(n, ts);
    // UCs left behind by older running writes remain visible in the new version.
    std::size_t visible_ucs = update.size();
    if (!queue_.empty())
        for (const auto& n : graph_.nodes())
            if (!update.count(n) && graph_.item_at(n, ts).is_uc()) ++visible_ucs;

    {
        std::lock_guard mlock(meta_mutex_);
        meta_.latest = ts;
        meta_.uc_count = visible_ucs;
        meta_.pending.push_back(ts);
    }
    {
        std::lock_guard dlock(dwell_mutex_);
        trackers_.emplace(ts, DwellTracker(ts, now));
    }
    {
        std::lock_guard tlock(trace_mutex_);
        trace_.writes.push_back(WriteRecord{ts, write_set, update, now, {}, std::nullopt});
    }

    WriteTxn txn;
    txn.ts = ts;
    txn.write_set = write_set;
    txn.update_set = update;
    for (auto& g : graph_.topo_groups(update)) txn.remaining.push_back(std::move(g));
    txn.outstanding = update.size();
    queue_.push_back(std::move(txn));
    return ts;
}

std::optional<ScheduledView> Engine::schedule_next() {
    std::lock_guard wlock(write_mutex_);
    if (queue_.empty()) return std::nullopt;
    auto& head = queue_.front();
    if (!head.in_progress) {
        NodeId chosen;
        {
            std::lock_guard dlock(dwell_mutex_);
            chosen = scheduler_.next_view(trackers_.at(head.ts), costs_, head.remaining.front());
        }
        head.in_progress = chosen;
    }
    return ScheduledView{head.ts, *head.in_progress, graph_.cost(*head.in_progress)};
}

StepResult Engine::complete(const ScheduledView& view, ExecutionResult result) {
    std::lock_guard wlock(write_mutex_);
    if (queue_.empty() || queue_.front().ts != view.ts) {
        if (status(view.ts) == WriteStatus::Committed)
            throw Error(ErrorCode::AlreadyCommitted, "write t" + std::to_string(view.ts.value));
        throw Error(ErrorCode::NotHeadOfQueue, "write t" + std::to_string(view.ts.value));
    }
    auto& head = queue_.front();
    if (head.in_progress != view.node)
        throw Error(ErrorCode::NoMatchingUC, view.node.str() + " was not scheduled for t" + std::to_string(view.ts.value));

    Millis at{0};
    const bool newest = graph_.install_result(view.node, view.ts, std::move(result.payload), result.duration,
                                              [&] { at = clock_.now(); });
    costs_.observe(view.node, result.duration);

    head.in_progress.reset();
    head.remaining.front().erase(view.node);
    while (!head.remaining.empty() && head.remaining.front().empty()) head.remaining.pop_front();
    --head.outstanding;
    const bool done = head.outstanding == 0;

    {
        std::lock_guard mlock(meta_mutex_);
        if (newest && meta_.uc_count > 0) --meta_.uc_count;
        if (done) {
            meta_.committed = view.ts;
            std::erase(meta_.pending, view.ts);
        }
    }
    {
        std::lock_guard tlock(trace_mutex_);
        auto it = std::find_if(trace_.writes.begin(), trace_.writes.end(),
                               [&](const WriteRecord& w) { return w.ts == view.ts; });
        it->installed_at[view.node] = at;
        if (done) it->committed_at = at;
    }
    if (done) {
        {
            std::lock_guard dlock(dwell_mutex_);
            trackers_.erase(view.ts);
        }
        queue_.pop_front();
        return {StepResult::Kind::Committed, view.ts, view.node, at};
    }
    return {StepResult::Kind::Installed, view.ts, view.node, at};
}

StepResult Engine::step_write(Timestamp ts, Executor& executor) {
    {
        std::lock_guard wlock(write_mutex_);
        if (queue_.empty() || queue_.front().ts != ts) {
            if (ts < next_ts_ && std::none_of(queue_.begin(), queue_.end(), [&](const WriteTxn& w) { return w.ts == ts; }))
                throw Error(ErrorCode::AlreadyCommitted, "write t" + std::to_string(ts.value));
            throw Error(ErrorCode::NotHeadOfQueue, "write t" + std::to_string(ts.value));
        }
    }
    auto view = schedule_next();
    auto result = executor.execute(view->node, view->ts, view->cost);
    return complete(*view, std::move(result));
}

bool Engine::has_running_write() const {
    std::lock_guard wlock(write_mutex_);
    return !queue_.empty();
}

std::vector<Timestamp> Engine::running_writes() const {
    std::lock_guard wlock(write_mutex_);
    std::vector<Timestamp> out;
    for (const auto& w : queue_) out.push_back(w.ts);
    return out;
}

WriteStatus Engine::status(Timestamp ts) const {
    // Caller may or may not hold write_mutex_; only reads meta.
    std::lock_guard mlock(meta_mutex_);
    if (ts == kInitialVersion || ts <= meta_.committed) return WriteStatus::Committed;
    if (ts > meta_.latest) throw Error(ErrorCode::UnknownNode, "no write t" + std::to_string(ts.value));
    return WriteStatus::Running;
}

NodeSet Engine::update_set(Timestamp ts) const {
    std::lock_guard tlock(trace_mutex_);
    for (const auto& w : trace_.writes)
        if (w.ts == ts) return w.update_set;
    throw Error(ErrorCode::UnknownNode, "no write t" + std::to_string(ts.value));
}

ReadEvent Engine::read(const NodeSet& viewport, const Lens& lens) {
    if (viewport.empty()) throw Error(ErrorCode::EmptyViewport, "a read needs at least one node");
    for (const auto& n : viewport)
        if (!graph_.contains(n)) throw Error(ErrorCode::UnknownNode, n.str());

    std::lock_guard rlock(read_mutex_);
    ReadEvent ev;
    ev.issued_at = clock_.now();
    ev.viewport = viewport;
    ev.lens = lens;
    {
        std::lock_guard mlock(meta_mutex_);
        ev.meta_at_read = meta_;
        pinned_.insert(meta_.committed);
        ev.seq = next_seq_++;
    }

    LastRead last;
    {
        std::lock_guard llock(last_read_mutex_);
        if (last_lens_ && !(*last_lens_ == lens)) last_read_.clear();
        last_lens_ = lens;
        last = last_read_;
    }

    try {
        ev.choice = select_version(lens, ev.meta_at_read, viewport, last, graph_);
        for (const auto& n : viewport) {
            Item item = ev.choice.per_node() ? graph_.newest_result(n) : graph_.item_at(n, ev.choice.version);
            ev.states.emplace(n, ReturnedState{item.kind, item.version, item.payload.value_or("")});
        }
    } catch (...) {
        std::lock_guard mlock(meta_mutex_);
        pinned_.erase(pinned_.find(ev.meta_at_read.committed));
        throw;
    }
    {
        std::lock_guard mlock(meta_mutex_);
        pinned_.erase(pinned_.find(ev.meta_at_read.committed));
    }
    {
        std::lock_guard llock(last_read_mutex_);
        for (const auto& [n, st] : ev.states) {
            auto& slot = last_read_[n];
            slot = std::max(slot, st.version);
        }
    }
    {
        std::lock_guard dlock(dwell_mutex_);
        for (auto& [_, tracker] : trackers_) tracker.record_read(viewport, std::max(ev.issued_at, tracker.last_event_at()));
    }
    {
        std::lock_guard tlock(trace_mutex_);
        ev.returned_at = clock_.now();
        trace_.reads.push_back(ev);
    }
    return ev;
}

MetaInfo Engine::snapshot_meta() const {
    std::lock_guard mlock(meta_mutex_);
    return meta_;
}

LastRead Engine::last_read() const {
    std::lock_guard llock(last_read_mutex_);
    return last_read_;
}

void Engine::clear_last_read() {
    std::lock_guard llock(last_read_mutex_);
    last_read_.clear();
}

Timestamp Engine::gc_watermark() const {
    std::lock_guard mlock(meta_mutex_);
    Timestamp w = meta_.committed;
    if (!pinned_.empty()) w = std::min(w, *pinned_.begin());
    return w;
}

std::size_t Engine::collect_garbage(GcAudit* audit) {
    // Pin the watermark for the duration so a concurrent read cannot start below it.
    Timestamp watermark;
    {
        std::lock_guard mlock(meta_mutex_);
        watermark = meta_.committed;
        if (!pinned_.empty()) watermark = std::min(watermark, *pinned_.begin());
        pinned_.insert(watermark);
    }
    auto removed = graph_.collect_garbage(watermark, audit);
    {
        std::lock_guard mlock(meta_mutex_);
        pinned_.erase(pinned_.find(watermark));
    }
    return removed;
}

void Engine::set_policy(PolicyKind policy, std::uint64_t seed) {
    std::lock_guard wlock(write_mutex_);
    if (!queue_.empty()) throw Error(ErrorCode::WriteInProgress, "policy changes are allowed only between writes");
    scheduler_ = Scheduler(policy, seed);
}

PolicyKind Engine::policy() const {
    std::lock_guard wlock(write_mutex_);
    return scheduler_.policy();
}

Trace Engine::trace() const {
    std::lock_guard tlock(trace_mutex_);
    return trace_;
}

std::map<NodeId, Millis> Engine::dwell(Timestamp ts) const {
    std::lock_guard dlock(dwell_mutex_);
    auto it = trackers_.find(ts);
    return it == trackers_.end() ? std::map<NodeId, Millis>{} : it->second.dwell_map();
}

}  // namespace panorama
