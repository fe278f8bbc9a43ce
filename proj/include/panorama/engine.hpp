#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "panorama/lens.hpp"
#include "panorama/scheduler.hpp"
#include "panorama/trace.hpp"
#include "panorama/view_graph.hpp"

namespace panorama {

class Clock {
public:
    virtual ~Clock() = default;
    virtual Millis now() const = 0;
};

/// Externally driven clock for the simulator and tests.
class ManualClock final : public Clock {
public:
    explicit ManualClock(Millis start = Millis{0}) : now_(start.count()) {}
    Millis now() const override { return Millis(now_.load()); }
    void set(Millis t) { now_.store(t.count()); }
    void advance(Millis d) { now_.fetch_add(d.count()); }

private:
    std::atomic<std::int64_t> now_;
};

/// Monotonic wall clock; instants count from construction.
class SteadyClock final : public Clock {
public:
    SteadyClock() : epoch_(std::chrono::steady_clock::now()) {}
    Millis now() const override {
        return std::chrono::duration_cast<Millis>(std::chrono::steady_clock::now() - epoch_);
    }

private:
    std::chrono::steady_clock::time_point epoch_;
};

struct ExecutionResult {
    std::string payload;
    Millis duration{0};
};

/// Computes one view result. May block for the duration of the computation.
class Executor {
public:
    virtual ~Executor() = default;
    virtual ExecutionResult execute(const NodeId& node, Timestamp version, Millis cost) = 0;
};

/// Produces a synthetic token immediately and reports the declared cost.
class InstantExecutor final : public Executor {
public:
    ExecutionResult execute(const NodeId& node, Timestamp version, Millis cost) override {
        return {payload_token(node, version), cost};
    }
};

enum class WriteStatus { Running, Committed };

/// View chosen by the scheduler, awaiting computation.
struct ScheduledView {
    Timestamp ts;
    NodeId node;
    Millis cost{0};
};

struct StepResult {
    enum class Kind { Installed, Committed };
    Kind kind = Kind::Installed;
    Timestamp ts;
    NodeId node;
    Millis at{0};
};

struct EngineOptions {
    PolicyKind policy = PolicyKind::TP;
    std::uint64_t seed = 0;
    CostModel::Mode cost_mode = CostModel::Mode::Known;
};

/// The write and read transaction managers around one multi-versioned view graph.
///
/// Writes run serially in submission order on a single writer thread
/// (begin_write / schedule_next / complete). Reads may be called from any
/// thread; they are processed one at a time and never wait on a view
/// computation, only on short latch sections.
class Engine {
public:
    Engine(ViewGraph graph, const Clock& clock, EngineOptions options = {});

    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    // --- write transactions ---

    /// Creates version t = t_s + 1: UC on every node of write_set and its
    /// dependents. May be called while other writes are still running.
    Timestamp begin_write(const NodeSet& write_set);

    /// Picks the next view of the oldest running write, or nullopt when idle.
    /// Repeated calls before complete() return the same view.
    std::optional<ScheduledView> schedule_next();

    /// Installs the scheduled view's result; commits the write when it was the last one.
    StepResult complete(const ScheduledView& view, ExecutionResult result);

    /// schedule_next + execute + complete for write ts, which must be the oldest running write.
    StepResult step_write(Timestamp ts, Executor& executor);

    bool has_running_write() const;
    std::vector<Timestamp> running_writes() const;
    WriteStatus status(Timestamp ts) const;
    NodeSet update_set(Timestamp ts) const;

    // --- read transactions ---

    ReadEvent read(const NodeSet& viewport, const Lens& lens);

    MetaInfo snapshot_meta() const;
    LastRead last_read() const;
    void clear_last_read();

    // --- maintenance ---

    /// Oldest version a read is reading or may still read: min(t_c, active reads).
    Timestamp gc_watermark() const;
    std::size_t collect_garbage(GcAudit* audit = nullptr);

    /// Switches the scheduling policy. Rejected while a write is running.
    void set_policy(PolicyKind policy, std::uint64_t seed);
    PolicyKind policy() const;

    const ViewGraph& graph() const noexcept { return graph_; }
    const Clock& clock() const noexcept { return clock_; }
    Trace trace() const;
    /// Dwell accumulated for the given running write (zero map when unknown).
    std::map<NodeId, Millis> dwell(Timestamp ts) const;

private:
    struct WriteTxn {
        Timestamp ts;
        NodeSet write_set;
        NodeSet update_set;
        std::deque<NodeSet> remaining;  // strata; front is the current one
        std::optional<NodeId> in_progress;
        std::size_t outstanding = 0;
    };

    ViewGraph graph_;
    const Clock& clock_;

    // Writer side.
    mutable std::mutex write_mutex_;
    std::deque<WriteTxn> queue_;
    Scheduler scheduler_;
    CostModel costs_;
    Timestamp next_ts_{1};

    // MetaInfo plus the versions pinned by in-flight reads.
    mutable std::mutex meta_mutex_;
    MetaInfo meta_;
    std::multiset<Timestamp> pinned_;

    // Reader side.
    std::mutex read_mutex_;
    mutable std::mutex last_read_mutex_;
    LastRead last_read_;
    std::optional<Lens> last_lens_;
    std::uint64_t next_seq_ = 0;

    mutable std::mutex dwell_mutex_;
    std::map<Timestamp, DwellTracker> trackers_;

    mutable std::mutex trace_mutex_;
    Trace trace_;
};

}  // namespace panorama
