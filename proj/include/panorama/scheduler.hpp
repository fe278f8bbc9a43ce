#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <string_view>

#include "panorama/types.hpp"
#include "panorama/view_graph.hpp"

namespace panorama {

/// Accumulated viewport dwell time per node since a write began. Each
/// interval between two consecutive reads is credited to the viewport of the
/// earlier read.
class DwellTracker {
public:
    DwellTracker() = default;
    DwellTracker(Timestamp write_ts, Millis now) { reset(write_ts, now); }

    void reset(Timestamp write_ts, Millis now);
    void record_read(const NodeSet& viewport, Millis now);

    Millis dwell(const NodeId& node) const;
    const std::map<NodeId, Millis>& dwell_map() const noexcept { return dwell_; }
    Timestamp write_ts() const noexcept { return write_ts_; }
    Millis last_event_at() const noexcept { return last_event_at_; }

private:
    Timestamp write_ts_;
    std::map<NodeId, Millis> dwell_;
    Millis last_event_at_{0};
    NodeSet last_viewport_;
};

/// Estimated per-node recompute cost Q in milliseconds, floored at 1 ms.
class CostModel {
public:
    enum class Mode { Known, EwmaMeasured };

    static constexpr double kFloorMs = 1.0;
    static constexpr double kAlpha = 0.5;

    explicit CostModel(Mode mode = Mode::Known) : mode_(mode) {}
    static CostModel from_graph(const ViewGraph& graph, Mode mode = Mode::Known);

    Mode mode() const noexcept { return mode_; }
    void set(const NodeId& node, double ms) { estimate_[node] = ms; }
    double estimate(const NodeId& node) const;
    /// Folds a measured duration into the estimate (EWMA mode only).
    void observe(const NodeId& node, Millis measured);

private:
    Mode mode_;
    std::map<NodeId, double> estimate_;
};

enum class PolicyKind { TP, NoOpt, Antifreeze, MetricOpt };

std::string_view to_string(PolicyKind p) noexcept;
PolicyKind parse_policy(std::string_view name);

/// P = D / max(Q, 1 ms).
double priority(const DwellTracker& tracker, const CostModel& costs, const NodeId& node);

/// Picks the next view to compute inside one topological stratum.
///   TP: argmax D/Q   Antifreeze: argmin Q   MetricOpt: argmax D   NoOpt: uniform random
/// Ties go to the smaller Q, then the lexicographically smaller id.
class Scheduler {
public:
    explicit Scheduler(PolicyKind policy = PolicyKind::TP, std::uint64_t seed = 0)
        : policy_(policy), rng_(seed) {}

    PolicyKind policy() const noexcept { return policy_; }
    NodeId next_view(const DwellTracker& tracker, const CostModel& costs, const NodeSet& group);

private:
    PolicyKind policy_;
    std::mt19937_64 rng_;
};

}  // namespace panorama
